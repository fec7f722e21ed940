#include "capgap/linear.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "capgap/errors.hpp"
#include "capgap/parallel.hpp"
#include "capgap/rng.hpp"
#include "capgap/text.hpp"
#include "json.hpp"

namespace capgap {

using ojson = nlohmann::ordered_json;

// ------------------------------------------------------------ FeatureMatrix

FeatureMatrix FeatureMatrix::sparse(std::vector<SparseVector> rows, std::size_t dim) {
  FeatureMatrix m;
  m.sparse_ = true;
  m.dim_ = dim;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.indices.size() != r.values.size()) throw DataError("sparse row has ragged arrays");
    for (std::size_t j = 0; j < r.nnz(); ++j) {
      if (r.indices[j] >= dim) throw DataError("sparse row index out of range");
      if (j > 0 && r.indices[j] <= r.indices[j - 1]) {
        throw DataError("sparse row indices must be strictly increasing");
      }
      if (!std::isfinite(r.values[j])) {
        throw NumericError("non-finite feature value in row " + std::to_string(i));
      }
    }
  }
  m.rows_ = std::move(rows);
  return m;
}

FeatureMatrix FeatureMatrix::dense(DenseMatrix d) {
  if (d.data.size() != d.rows * d.cols) throw DataError("dense matrix has wrong data size");
  for (std::size_t i = 0; i < d.data.size(); ++i) {
    if (!std::isfinite(d.data[i])) {
      throw NumericError("non-finite feature value in row " + std::to_string(i / d.cols));
    }
  }
  FeatureMatrix m;
  m.sparse_ = false;
  m.dim_ = d.cols;
  m.dense_ = std::move(d);
  return m;
}

FeatureMatrix FeatureMatrix::select(std::span<const std::size_t> indices) const {
  FeatureMatrix m;
  m.sparse_ = sparse_;
  m.dim_ = dim_;
  if (sparse_) {
    m.rows_.reserve(indices.size());
    for (auto i : indices) m.rows_.push_back(rows_.at(i));
  } else {
    m.dense_ = DenseMatrix(indices.size(), dense_.cols);
    for (std::size_t k = 0; k < indices.size(); ++k) {
      const auto src = dense_.row(indices[k]);
      std::copy(src.begin(), src.end(), m.dense_.row(k).begin());
    }
  }
  return m;
}

// -------------------------------------------------------------- TrainConfig

TrainConfig TrainConfig::desk_sparse() { return TrainConfig{}; }

TrainConfig TrainConfig::desk_dense() {
  TrainConfig c;
  c.learning_rate = 0.01;
  return c;
}

TrainConfig TrainConfig::original_text() {
  TrainConfig c;
  c.learning_rate = 2e-5;
  c.weight_decay = 0.01;
  c.batch_size = 32;
  c.epochs = 3;
  return c;
}

TrainConfig TrainConfig::original_image() {
  TrainConfig c;
  c.learning_rate = 5e-4;
  c.weight_decay = 0.05;
  c.batch_size = 64;
  c.epochs = 300;
  c.label_smoothing = 0.1;
  return c;
}

TrainConfig TrainConfig::preset(std::string_view name, bool sparse_features) {
  if (name == "desk") return sparse_features ? desk_sparse() : desk_dense();
  if (name == "original") return sparse_features ? original_text() : original_image();
  throw ArgumentError("unknown preset '" + std::string(name) + "' (expected desk or original)");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ArgumentError("learning_rate must be > 0");
  }
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    throw ArgumentError("weight_decay must be >= 0");
  }
  if (epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (!(label_smoothing >= 0.0 && label_smoothing < 0.5)) {
    throw ArgumentError("label_smoothing must be in [0, 0.5)");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ArgumentError("momentum must be in [0, 1)");
}

namespace {

ojson config_to_json(const TrainConfig& c) {
  ojson o;
  o["learning_rate"] = c.learning_rate;
  o["weight_decay"] = c.weight_decay;
  o["epochs"] = c.epochs;
  o["batch_size"] = c.batch_size;
  o["seed"] = c.seed;
  o["shuffle_each_epoch"] = c.shuffle_each_epoch;
  o["label_smoothing"] = c.label_smoothing;
  o["momentum"] = c.momentum;
  return o;
}

TrainConfig config_from_json(const nlohmann::json& o) {
  TrainConfig c;
  c.learning_rate = o.at("learning_rate").get<double>();
  c.weight_decay = o.at("weight_decay").get<double>();
  c.epochs = o.at("epochs").get<int>();
  c.batch_size = o.at("batch_size").get<int>();
  c.seed = o.at("seed").get<std::uint64_t>();
  c.shuffle_each_epoch = o.at("shuffle_each_epoch").get<bool>();
  c.label_smoothing = o.at("label_smoothing").get<double>();
  c.momentum = o.value("momentum", 0.0);
  c.validate();
  return c;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

template <class Fn>
auto parse_json_or_throw(std::string_view json, std::string_view what, Fn&& fn) {
  try {
    return fn(nlohmann::json::parse(json));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed " + std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string TrainConfig::to_json() const { return config_to_json(*this).dump(); }

TrainConfig TrainConfig::from_json(std::string_view json) {
  return parse_json_or_throw(json, "train config",
                             [](const nlohmann::json& o) { return config_from_json(o); });
}

std::string TrainConfig::hash() const { return hex64(fnv1a64(to_json())); }

// -------------------------------------------------------------- LinearModel

LinearModel::LinearModel(LabelSpace labels, std::size_t dim)
    : labels_(std::move(labels)), dim_(dim), w_(labels_.size() * dim, 0.0), b_(labels_.size(), 0.0) {
  if (dim == 0) throw ArgumentError("feature dimension must be >= 1");
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double m = *std::max_element(p.begin(), p.end());
  double z = 0.0;
  for (double& v : p) {
    v = std::exp(v - m);
    z += v;
  }
  for (double& v : p) v /= z;
  return p;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::vector<double> LinearModel::logits(const FeatureMatrix& x, std::size_t row) const {
  if (x.dim() != dim_) {
    throw DataError("feature dimension " + std::to_string(x.dim()) + " does not match model dimension " +
                    std::to_string(dim_));
  }
  std::vector<double> z(b_);
  const std::size_t k = classes();
  x.for_each(row, [&](std::size_t j, double v) {
    for (std::size_t c = 0; c < k; ++c) z[c] += w_[c * dim_ + j] * v;
  });
  return z;
}

std::vector<double> LinearModel::predict_proba(const FeatureMatrix& x, std::size_t row) const {
  return softmax(logits(x, row));
}

std::vector<double> LinearModel::predict_proba(std::span<const double> dense_x) const {
  if (dense_x.size() != dim_) throw DataError("feature dimension does not match model");
  std::vector<double> z(b_);
  for (std::size_t c = 0; c < classes(); ++c) {
    for (std::size_t j = 0; j < dim_; ++j) z[c] += w_[c * dim_ + j] * dense_x[j];
  }
  return softmax(z);
}

std::size_t LinearModel::predict(const FeatureMatrix& x, std::size_t row) const {
  return argmax(logits(x, row));
}

std::string LinearModel::to_json() const {
  ojson o;
  o["format"] = "capgap.linear";
  o["version"] = 1;
  o["K"] = classes();
  o["D"] = dim_;
  o["labels"] = labels_.labels();
  o["config"] = config_ ? config_to_json(*config_) : ojson(nullptr);
  o["config_hash"] = config_ ? ojson(config_->hash()) : ojson(nullptr);
  o["W"] = w_;
  o["b"] = b_;
  return o.dump();
}

LinearModel LinearModel::from_json(std::string_view json) {
  return parse_json_or_throw(json, "linear model", [](const nlohmann::json& o) {
    if (o.value("format", "") != "capgap.linear") throw DataError("not a capgap linear model");
    if (o.value("version", 0) != 1) throw DataError("unsupported linear model version");
    LinearModel m(LabelSpace(o.at("labels").get<std::vector<std::string>>()),
                  o.at("D").get<std::size_t>());
    if (o.at("K").get<std::size_t>() != m.classes()) throw DataError("K does not match labels");
    m.w_ = o.at("W").get<std::vector<double>>();
    m.b_ = o.at("b").get<std::vector<double>>();
    if (m.w_.size() != m.classes() * m.dim_ || m.b_.size() != m.classes()) {
      throw DataError("linear model arrays have wrong sizes");
    }
    for (double v : m.w_) {
      if (!std::isfinite(v)) throw DataError("linear model has non-finite weight");
    }
    for (double v : m.b_) {
      if (!std::isfinite(v)) throw DataError("linear model has non-finite bias");
    }
    if (!o.at("config").is_null()) m.config_ = config_from_json(o.at("config"));
    return m;
  });
}

// ------------------------------------------------------------ loss/gradient

namespace {

void check_targets(const LinearModel& model, const FeatureMatrix& x,
                   std::span<const std::size_t> y) {
  if (x.dim() != model.dim()) throw DataError("feature dimension does not match model");
  if (y.size() != x.size()) throw DataError("label count does not match example count");
  for (auto c : y) {
    if (c >= model.classes()) throw DataError("class index out of range");
  }
}

}  // namespace

double loss_and_gradient(const LinearModel& model, const FeatureMatrix& x,
                         std::span<const std::size_t> y, std::span<const std::size_t> batch,
                         double weight_decay, double label_smoothing,
                         std::vector<double>* grad_w, std::vector<double>* grad_b) {
  if (batch.empty()) throw ArgumentError("batch must contain at least one example");
  check_targets(model, x, y);
  const std::size_t k = model.classes();
  const std::size_t d = model.dim();
  const auto& w = model.weights();
  if (grad_w) grad_w->assign(k * d, 0.0);
  if (grad_b) grad_b->assign(k, 0.0);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const double off = label_smoothing / static_cast<double>(k);
  double loss = 0.0;
  std::vector<double> delta(k);
  for (auto i : batch) {
    const auto z = model.logits(x, i);
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    const double lse = m + std::log(s);
    for (std::size_t c = 0; c < k; ++c) {
      const double q = off + (c == y[i] ? 1.0 - label_smoothing : 0.0);
      loss -= q * (z[c] - lse);
      delta[c] = (std::exp(z[c] - lse) - q) * inv_n;
    }
    if (grad_b) {
      for (std::size_t c = 0; c < k; ++c) (*grad_b)[c] += delta[c];
    }
    if (grad_w) {
      x.for_each(i, [&](std::size_t j, double v) {
        for (std::size_t c = 0; c < k; ++c) (*grad_w)[c * d + j] += delta[c] * v;
      });
    }
  }
  loss *= inv_n;
  double sq = 0.0;
  for (double v : w) sq += v * v;
  loss += 0.5 * weight_decay * sq;
  if (grad_w && weight_decay != 0.0) {
    for (std::size_t p = 0; p < w.size(); ++p) (*grad_w)[p] += weight_decay * w[p];
  }
  return loss;
}

double grad_check(const LinearModel& model, const FeatureMatrix& x,
                  std::span<const std::size_t> y, double weight_decay, double label_smoothing,
                  double epsilon) {
  if (x.size() == 0) throw ArgumentError("grad_check needs at least one example");
  std::vector<std::size_t> batch(x.size());
  std::iota(batch.begin(), batch.end(), 0);
  std::vector<double> gw, gb;
  loss_and_gradient(model, x, y, batch, weight_decay, label_smoothing, &gw, &gb);

  LinearModel probe = model;
  double worst = 0.0;
  auto compare = [&](double analytic, double& param) {
    const double saved = param;
    param = saved + epsilon;
    const double up = loss_and_gradient(probe, x, y, batch, weight_decay, label_smoothing, nullptr, nullptr);
    param = saved - epsilon;
    const double down = loss_and_gradient(probe, x, y, batch, weight_decay, label_smoothing, nullptr, nullptr);
    param = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  };
  for (std::size_t p = 0; p < gw.size(); ++p) compare(gw[p], probe.weights()[p]);
  for (std::size_t c = 0; c < gb.size(); ++c) compare(gb[c], probe.bias()[c]);
  return worst;
}

// -------------------------------------------------------------------- train

namespace {

double full_objective(const LinearModel& model, const FeatureMatrix& x,
                      std::span<const std::size_t> y, const TrainConfig& config, int threads) {
  const std::size_t k = model.classes();
  const double off = config.label_smoothing / static_cast<double>(k);
  std::vector<double> per(x.size());
  parallel_for(x.size(), threads, [&](std::size_t i) {
    const auto z = model.logits(x, i);
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    const double lse = m + std::log(s);
    double l = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      const double q = off + (c == y[i] ? 1.0 - config.label_smoothing : 0.0);
      l -= q * (z[c] - lse);
    }
    per[i] = l;
  });
  double total = 0.0;
  for (double v : per) total += v;
  double sq = 0.0;
  for (double v : model.weights()) sq += v * v;
  return total / static_cast<double>(x.size()) + 0.5 * config.weight_decay * sq;
}

}  // namespace

TrainResult train(const FeatureMatrix& x, std::span<const std::size_t> y,
                  const LabelSpace& labels, const TrainConfig& config, int threads) {
  config.validate();
  if (x.size() == 0) throw DataError("training set is empty");
  LinearModel model(labels, x.dim());
  check_targets(model, x, y);
  std::vector<std::size_t> per_class(labels.size(), 0);
  for (auto c : y) ++per_class[c];
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    if (per_class[c] == 0) {
      throw DataError("class '" + labels.label(c) + "' has no training examples");
    }
  }
  model.set_config(config);

  const std::size_t k = labels.size();
  const std::size_t d = x.dim();
  const bool use_momentum = config.momentum > 0.0;
  std::vector<double> vel_w, vel_b;
  if (use_momentum) {
    vel_w.assign(k * d, 0.0);
    vel_b.assign(k, 0.0);
  }

  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(config.seed);
  const double lr = config.learning_rate;
  const double off = config.label_smoothing / static_cast<double>(k);
  const auto bs = static_cast<std::size_t>(config.batch_size);
  auto& w = model.weights();
  auto& b = model.bias();

  TrainResult result{model, {}};
  std::vector<double> gw, gb(k), delta(k);
  std::vector<std::size_t> touched;
  std::vector<char> is_touched(use_momentum ? 0 : d, 0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle_each_epoch) rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(order.size(), start + bs);
      const double inv_n = 1.0 / static_cast<double>(end - start);
      if (use_momentum) {
        // Dense path: v <- mu v + (grad + lambda w); w <- w - lr v.
        loss_and_gradient(model, x, y, std::span(order).subspan(start, end - start),
                          config.weight_decay, config.label_smoothing, &gw, &gb);
        for (std::size_t p = 0; p < w.size(); ++p) {
          vel_w[p] = config.momentum * vel_w[p] + gw[p];
          w[p] -= lr * vel_w[p];
        }
        for (std::size_t c = 0; c < k; ++c) {
          vel_b[c] = config.momentum * vel_b[c] + gb[c];
          b[c] -= lr * vel_b[c];
        }
        continue;
      }
      // Plain SGD: data gradient accumulated over touched columns only, then
      // w <- (1 - lr lambda) w - lr g.
      if (gw.size() != k * d) gw.assign(k * d, 0.0);
      std::fill(gb.begin(), gb.end(), 0.0);
      touched.clear();
      for (std::size_t t = start; t < end; ++t) {
        const std::size_t i = order[t];
        const auto z = model.logits(x, i);
        const auto p = softmax(z);
        for (std::size_t c = 0; c < k; ++c) {
          const double q = off + (c == y[i] ? 1.0 - config.label_smoothing : 0.0);
          delta[c] = (p[c] - q) * inv_n;
          gb[c] += delta[c];
        }
        x.for_each(i, [&](std::size_t j, double v) {
          if (!is_touched[j]) {
            is_touched[j] = 1;
            touched.push_back(j);
          }
          for (std::size_t c = 0; c < k; ++c) gw[c * d + j] += delta[c] * v;
        });
      }
      if (config.weight_decay != 0.0) {
        const double shrink = 1.0 - lr * config.weight_decay;
        for (double& v : w) v *= shrink;
      }
      std::sort(touched.begin(), touched.end());
      for (auto j : touched) {
        for (std::size_t c = 0; c < k; ++c) {
          w[c * d + j] -= lr * gw[c * d + j];
          gw[c * d + j] = 0.0;
        }
        is_touched[j] = 0;
      }
      for (std::size_t c = 0; c < k; ++c) b[c] -= lr * gb[c];
    }
    for (double v : w) {
      if (!std::isfinite(v)) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch + 1));
      }
    }
    const double loss = full_objective(model, x, y, config, threads);
    if (!std::isfinite(loss)) {
      throw NumericError("training loss is not finite at epoch " + std::to_string(epoch + 1));
    }
    result.epoch_loss.push_back(loss);
  }
  result.model = std::move(model);
  return result;
}

// ------------------------------------------------------------------ Metrics

Metrics::Metrics(LabelSpace labels, std::vector<std::int64_t> confusion)
    : labels_(std::move(labels)), confusion_(std::move(confusion)) {
  if (confusion_.size() != labels_.size() * labels_.size()) {
    throw DataError("confusion matrix must be K x K");
  }
  for (auto v : confusion_) {
    if (v < 0) throw DataError("confusion matrix has a negative count");
  }
}

std::int64_t Metrics::n_test() const {
  return std::accumulate(confusion_.begin(), confusion_.end(), std::int64_t{0});
}

double Metrics::overall_accuracy() const {
  const auto n = n_test();
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  std::int64_t hit = 0;
  for (std::size_t c = 0; c < classes(); ++c) hit += count(c, c);
  return static_cast<double>(hit) / static_cast<double>(n);
}

std::vector<double> Metrics::per_class_accuracy() const {
  std::vector<double> out(classes());
  for (std::size_t c = 0; c < classes(); ++c) {
    std::int64_t row = 0;
    for (std::size_t p = 0; p < classes(); ++p) row += count(c, p);
    out[c] = row == 0 ? std::numeric_limits<double>::quiet_NaN()
                      : static_cast<double>(count(c, c)) / static_cast<double>(row);
  }
  return out;
}

double Metrics::macro_accuracy() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : per_class_accuracy()) {
    if (!std::isnan(v)) {
      sum += v;
      ++n;
    }
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

namespace {

ojson number_or_null(double v) { return std::isnan(v) ? ojson(nullptr) : ojson(v); }

}  // namespace

std::string Metrics::to_json() const {
  ojson o;
  o["format"] = "capgap.metrics";
  o["version"] = 1;
  o["labels"] = labels_.labels();
  o["n_test"] = n_test();
  o["overall_accuracy"] = number_or_null(overall_accuracy());
  o["macro_accuracy"] = number_or_null(macro_accuracy());
  ojson per = ojson::object();
  const auto acc = per_class_accuracy();
  for (std::size_t c = 0; c < classes(); ++c) per[labels_.label(c)] = number_or_null(acc[c]);
  o["per_class_accuracy"] = std::move(per);
  ojson conf = ojson::array();
  for (std::size_t c = 0; c < classes(); ++c) {
    conf.push_back(std::vector<std::int64_t>(confusion_.begin() + c * classes(),
                                             confusion_.begin() + (c + 1) * classes()));
  }
  o["confusion"] = std::move(conf);
  ojson ctx = ojson::object();
  for (const auto& [key, value] : context_) ctx[key] = value;
  o["context"] = std::move(ctx);
  return o.dump(1);
}

Metrics Metrics::from_json(std::string_view json) {
  return parse_json_or_throw(json, "metrics", [](const nlohmann::json& o) {
    if (o.value("format", "") != "capgap.metrics") throw DataError("not a capgap metrics file");
    if (o.value("version", 0) != 1) throw DataError("unsupported metrics version");
    LabelSpace labels(o.at("labels").get<std::vector<std::string>>());
    std::vector<std::int64_t> conf;
    const auto& rows = o.at("confusion");
    if (rows.size() != labels.size()) throw DataError("confusion matrix must be K x K");
    for (const auto& row : rows) {
      if (row.size() != labels.size()) throw DataError("confusion matrix must be K x K");
      for (const auto& v : row) conf.push_back(v.get<std::int64_t>());
    }
    Metrics m(std::move(labels), std::move(conf));
    if (o.contains("n_test") && o.at("n_test").get<std::int64_t>() != m.n_test()) {
      throw DataError("n_test does not match the confusion matrix");
    }
    if (o.contains("context")) {
      for (const auto& [key, value] : o.at("context").items()) {
        m.context_[key] = value.get<std::string>();
      }
    }
    return m;
  });
}

void Metrics::save(const std::filesystem::path& path) const {
  text::write_file(path, to_json() + "\n");
}

Metrics Metrics::load(const std::filesystem::path& path) {
  try {
    return from_json(text::read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

Metrics metrics_from_predictions(const LabelSpace& labels, std::span<const std::size_t> truth,
                                 std::span<const std::size_t> predicted) {
  if (truth.size() != predicted.size()) throw DataError("prediction count mismatch");
  if (truth.empty()) throw DataError("test set is empty");
  const std::size_t k = labels.size();
  std::vector<std::int64_t> conf(k * k, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= k || predicted[i] >= k) throw DataError("class index out of range");
    ++conf[truth[i] * k + predicted[i]];
  }
  return Metrics(labels, std::move(conf));
}

Metrics evaluate(const LinearModel& model, const FeatureMatrix& x,
                 std::span<const std::size_t> y, int threads) {
  if (x.size() == 0) throw DataError("test set is empty");
  check_targets(model, x, y);
  std::vector<std::size_t> pred(x.size());
  parallel_for(x.size(), threads, [&](std::size_t i) { pred[i] = model.predict(x, i); });
  return metrics_from_predictions(model.labels(), y, pred);
}

// --------------------------------------------------------------- Classifier

std::string Classifier::to_json() const {
  ojson o;
  o["format"] = "capgap.classifier";
  o["version"] = 1;
  o["linear"] = ojson::parse(linear.to_json());
  o["tfidf"] = tfidf ? ojson::parse(tfidf->to_json()) : ojson(nullptr);
  return o.dump();
}

Classifier Classifier::from_json(std::string_view json) {
  return parse_json_or_throw(json, "classifier", [](const nlohmann::json& o) {
    if (o.value("format", "") != "capgap.classifier") throw DataError("not a capgap classifier");
    if (o.value("version", 0) != 1) throw DataError("unsupported classifier version");
    Classifier c{LinearModel::from_json(o.at("linear").dump()), std::nullopt};
    if (!o.at("tfidf").is_null()) {
      c.tfidf = TfIdfModel::from_json(o.at("tfidf").dump());
      if (c.tfidf->vocab_size() != c.linear.dim()) {
        throw DataError("classifier TF-IDF vocabulary does not match model dimension");
      }
    }
    return c;
  });
}

void Classifier::save(const std::filesystem::path& path) const {
  text::write_file(path, to_json() + "\n");
}

Classifier Classifier::load(const std::filesystem::path& path) {
  try {
    return from_json(text::read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

FeatureMatrix text_features(const TfIdfModel& tfidf, const Corpus& corpus,
                            std::span<const std::size_t> records, int threads) {
  std::vector<SparseVector> rows(records.size());
  parallel_for(records.size(), threads, [&](std::size_t i) {
    rows[i] = tfidf.transform(corpus.records().at(records[i]).text);
  });
  return FeatureMatrix::sparse(std::move(rows), std::max<std::size_t>(tfidf.vocab_size(), 1));
}

Classifier train_text_classifier(const Corpus& corpus, std::span<const std::size_t> records,
                                 const TfIdfConfig& tfidf_config, const TrainConfig& config,
                                 int threads) {
  if (records.empty()) throw DataError("no training records");
  std::vector<std::string> docs;
  std::vector<std::size_t> y;
  docs.reserve(records.size());
  for (auto r : records) {
    docs.push_back(corpus.records().at(r).text);
    y.push_back(corpus.label_index(r));
  }
  auto tfidf = TfIdfModel::fit(docs, tfidf_config, nullptr, threads);
  if (tfidf.vocab_size() == 0) throw DataError("training vocabulary is empty");
  const auto x = text_features(tfidf, corpus, records, threads);
  auto result = train(x, y, corpus.labels(), config, threads);
  return Classifier{std::move(result.model), std::move(tfidf)};
}

Metrics evaluate_text(const Classifier& classifier, const Corpus& corpus,
                      std::span<const std::size_t> records, int threads) {
  if (!classifier.tfidf) throw ArgumentError("classifier has no TF-IDF model for text input");
  if (!(corpus.labels() == classifier.linear.labels())) {
    throw DataError("corpus label space does not match the classifier's");
  }
  const auto x = text_features(*classifier.tfidf, corpus, records, threads);
  std::vector<std::size_t> y;
  y.reserve(records.size());
  for (auto r : records) y.push_back(corpus.label_index(r));
  return evaluate(classifier.linear, x, y, threads);
}

}  // namespace capgap
