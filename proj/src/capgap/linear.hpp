#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "capgap/corpus.hpp"
#include "capgap/features.hpp"

namespace capgap {

// Row-major dense matrix.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  bool operator==(const DenseMatrix&) const = default;
};

// Examples for the linear model: either sparse rows or a dense matrix.
class FeatureMatrix {
 public:
  static FeatureMatrix sparse(std::vector<SparseVector> rows, std::size_t dim);
  static FeatureMatrix dense(DenseMatrix m);

  std::size_t size() const { return sparse_ ? rows_.size() : dense_.rows; }
  std::size_t dim() const { return dim_; }
  bool is_sparse() const { return sparse_; }

  // Calls fn(feature_index, value) for every stored entry of row i.
  template <class Fn>
  void for_each(std::size_t i, Fn&& fn) const {
    if (sparse_) {
      const auto& r = rows_[i];
      for (std::size_t j = 0; j < r.nnz(); ++j) fn(static_cast<std::size_t>(r.indices[j]), r.values[j]);
    } else {
      const auto r = dense_.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) fn(j, r[j]);
    }
  }

  // Subset of rows, in the given order.
  FeatureMatrix select(std::span<const std::size_t> indices) const;

 private:
  bool sparse_ = true;
  std::size_t dim_ = 0;
  std::vector<SparseVector> rows_;
  DenseMatrix dense_;
};

struct TrainConfig {
  double learning_rate = 0.1;
  double weight_decay = 1e-4;
  int epochs = 20;
  int batch_size = 64;
  std::uint64_t seed = 0;
  bool shuffle_each_epoch = true;
  double label_smoothing = 0.0;
  double momentum = 0.0;

  static TrainConfig desk_sparse();
  static TrainConfig desk_dense();
  // Fine-tuning hyperparameters of the original caption classifier.
  static TrainConfig original_text();
  // Hyperparameters of the original image classifier.
  static TrainConfig original_image();
  // "desk" or "original", for sparse (text) or dense (embedding) features.
  static TrainConfig preset(std::string_view name, bool sparse_features);

  void validate() const;
  std::string to_json() const;
  static TrainConfig from_json(std::string_view json);
  std::string hash() const;  // 16 hex digits of the canonical JSON

  bool operator==(const TrainConfig&) const = default;
};

// K-way softmax regression: logits = W x + b, W is K x D row-major.
class LinearModel {
 public:
  LinearModel(LabelSpace labels, std::size_t dim);

  const LabelSpace& labels() const { return labels_; }
  std::size_t classes() const { return labels_.size(); }
  std::size_t dim() const { return dim_; }
  std::vector<double>& weights() { return w_; }
  const std::vector<double>& weights() const { return w_; }
  std::vector<double>& bias() { return b_; }
  const std::vector<double>& bias() const { return b_; }
  const std::optional<TrainConfig>& config() const { return config_; }
  void set_config(TrainConfig c) { config_ = std::move(c); }

  std::vector<double> logits(const FeatureMatrix& x, std::size_t row) const;
  std::vector<double> predict_proba(const FeatureMatrix& x, std::size_t row) const;
  std::vector<double> predict_proba(std::span<const double> dense_x) const;
  std::size_t predict(const FeatureMatrix& x, std::size_t row) const;

  std::string to_json() const;
  static LinearModel from_json(std::string_view json);

  bool operator==(const LinearModel&) const = default;

 private:
  LabelSpace labels_;
  std::size_t dim_;
  std::vector<double> w_;
  std::vector<double> b_;
  std::optional<TrainConfig> config_;
};

// Numerically stable softmax (max subtracted).
std::vector<double> softmax(std::span<const double> logits);

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

// Objective on the rows `batch` of (x, y):
//   mean over rows of CE(softmax(W x + b), q) + weight_decay / 2 * ||W||^2
// where q is the smoothed one-hot target. The bias is not decayed. When the
// gradient buffers are non-null they receive dL/dW (K x D) and dL/db.
double loss_and_gradient(const LinearModel& model, const FeatureMatrix& x,
                         std::span<const std::size_t> y, std::span<const std::size_t> batch,
                         double weight_decay, double label_smoothing,
                         std::vector<double>* grad_w, std::vector<double>* grad_b);

// Maximum relative error |a - n| / max(|a|, |n|, 1e-6) between the analytic
// gradient and central finite differences over every parameter.
double grad_check(const LinearModel& model, const FeatureMatrix& x,
                  std::span<const std::size_t> y, double weight_decay, double label_smoothing,
                  double epsilon = 1e-5);

struct TrainResult {
  LinearModel model;
  std::vector<double> epoch_loss;  // full training objective after each epoch
};

// Mini-batch SGD from zero weights with decoupled decay
//   w <- w - lr * (grad + weight_decay * w)
// and optional heavy-ball momentum. Deterministic in (data order, config).
TrainResult train(const FeatureMatrix& x, std::span<const std::size_t> y,
                  const LabelSpace& labels, const TrainConfig& config, int threads = 1);

class Metrics {
 public:
  Metrics(LabelSpace labels, std::vector<std::int64_t> confusion);

  const LabelSpace& labels() const { return labels_; }
  std::size_t classes() const { return labels_.size(); }
  // confusion[true * K + predicted]
  const std::vector<std::int64_t>& confusion() const { return confusion_; }
  std::int64_t count(std::size_t truth, std::size_t predicted) const {
    return confusion_[truth * classes() + predicted];
  }
  std::int64_t n_test() const;
  double overall_accuracy() const;
  // NaN for a class with no test examples.
  std::vector<double> per_class_accuracy() const;
  // Mean of the defined per-class accuracies.
  double macro_accuracy() const;

  std::map<std::string, std::string>& context() { return context_; }
  const std::map<std::string, std::string>& context() const { return context_; }

  std::string to_json() const;
  static Metrics from_json(std::string_view json);
  void save(const std::filesystem::path& path) const;
  static Metrics load(const std::filesystem::path& path);

  bool operator==(const Metrics&) const = default;

 private:
  LabelSpace labels_;
  std::vector<std::int64_t> confusion_;
  std::map<std::string, std::string> context_;
};

Metrics metrics_from_predictions(const LabelSpace& labels, std::span<const std::size_t> truth,
                                 std::span<const std::size_t> predicted);

Metrics evaluate(const LinearModel& model, const FeatureMatrix& x,
                 std::span<const std::size_t> y, int threads = 1);

// A trained linear model plus, for text input, the TF-IDF model that produced
// its features.
struct Classifier {
  LinearModel linear;
  std::optional<TfIdfModel> tfidf;

  std::string to_json() const;
  static Classifier from_json(std::string_view json);
  void save(const std::filesystem::path& path) const;
  static Classifier load(const std::filesystem::path& path);
};

// Fits TF-IDF on the selected training records and trains the classifier.
Classifier train_text_classifier(const Corpus& corpus, std::span<const std::size_t> records,
                                 const TfIdfConfig& tfidf, const TrainConfig& config,
                                 int threads = 1);

// Text features of the selected records under the classifier's TF-IDF model.
FeatureMatrix text_features(const TfIdfModel& tfidf, const Corpus& corpus,
                            std::span<const std::size_t> records, int threads = 1);

// Evaluates on the selected records. Labels are matched by name, so the
// corpus's label space must equal the classifier's.
Metrics evaluate_text(const Classifier& classifier, const Corpus& corpus,
                      std::span<const std::size_t> records, int threads = 1);

}  // namespace capgap
