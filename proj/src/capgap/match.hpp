#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "capgap/corpus.hpp"
#include "capgap/linear.hpp"
#include "capgap/probe.hpp"

namespace capgap {

// One generated image and the K sibling captions (same image, prompt tier and
// variant; one per label) it could have been generated from.
struct MatchInstance {
  std::string item_id;  // image embedding id
  std::string image_id;
  std::vector<double> image;
  std::vector<std::vector<double>> candidates;  // indexed by label
  std::size_t truth = 0;
};

struct MatchInstances {
  LabelSpace labels;
  std::vector<MatchInstance> instances;
  std::size_t skipped = 0;  // images whose sibling set was incomplete
};

// Image item ids are "<caption_id>#img" (anything after the last '#'); the
// caption fixes the true label and the sibling group. Throws DataError when
// no instance is complete.
MatchInstances build_instances(const Corpus& corpus, const EmbeddingSet& text,
                               const EmbeddingSet& images, int threads = 1);

// Linear maps into a shared d-dimensional space: u = P_img^T e_img,
// v = P_text^T e_text, score = cos(u, v) / tau.
struct ProjectionPair {
  DenseMatrix p_text;  // D_t x d
  DenseMatrix p_img;   // D_i x d
  double tau = 0.07;

  std::size_t shared_dim() const { return p_text.cols; }
  static ProjectionPair identity(std::size_t text_dim, std::size_t image_dim, std::size_t d,
                                 double tau);
  // Entries ~ N(0, 1/D) per matrix.
  static ProjectionPair random(std::size_t text_dim, std::size_t image_dim, std::size_t d,
                               double tau, std::uint64_t seed);

  std::string to_json() const;
  static ProjectionPair from_json(std::string_view json);
  bool operator==(const ProjectionPair&) const = default;
};

enum class MatchInit { kRandom, kIdentity };

struct MatchConfig {
  std::size_t dim = 128;
  double tau = 0.07;
  MatchInit init = MatchInit::kRandom;
  TrainConfig train = [] {
    TrainConfig c = TrainConfig::desk_dense();
    c.weight_decay = 0.0;
    return c;
  }();

  void validate() const;
};

struct Attribution {
  std::size_t predicted = 0;
  std::vector<double> scores;  // cos / tau per candidate
};

// Argmax over candidate scores, ties to the lowest label index.
Attribution attribute(const ProjectionPair& pair, const MatchInstance& instance);

// Mean over `batch` of the K-way softmax cross-entropy on the scores, plus
// weight_decay / 2 * (||P_text||^2 + ||P_img||^2). Gradients are filled when
// the pointers are non-null.
double match_loss_and_gradient(const ProjectionPair& pair, std::span<const MatchInstance> instances,
                               std::span<const std::size_t> batch, double weight_decay,
                               std::vector<double>* grad_text, std::vector<double>* grad_img);

struct MatchTrainResult {
  ProjectionPair pair;
  std::vector<double> epoch_loss;
};

// Mini-batch SGD on the projections with the linear module's update rule.
MatchTrainResult train_match(std::span<const MatchInstance> instances, std::size_t text_dim,
                             std::size_t image_dim, const LabelSpace& labels,
                             const MatchConfig& config, int threads = 1);

inline constexpr std::size_t kHistogramBins = 10;

struct MatchEvaluation {
  Metrics metrics;
  // Counts over [0, 0.1), ..., [0.9, 1.0] of the softmax probability given to
  // the true candidate and of the largest probability.
  std::vector<std::int64_t> true_probability_hist;
  std::vector<std::int64_t> max_probability_hist;

  bool operator==(const MatchEvaluation&) const = default;
};

MatchEvaluation evaluate_match(const ProjectionPair& pair, std::span<const MatchInstance> instances,
                               const LabelSpace& labels, int threads = 1);

struct MatchReport {
  MatchEvaluation evaluation;
  std::size_t train_instances = 0;
  std::size_t skipped = 0;
  std::size_t dim = 0;
  double tau = 0.0;
  std::vector<double> epoch_loss;
  std::vector<std::string> warnings;

  std::string to_json() const;
  static MatchReport from_json(std::string_view json);
  bool operator==(const MatchReport&) const = default;
};

// Builds instances, trains on the train side of the split and evaluates on
// the test side.
MatchReport run_match(const Corpus& corpus, const EmbeddingSet& text, const EmbeddingSet& images,
                      const SplitAssignment& split, const MatchConfig& config, int threads = 1);

}  // namespace capgap
