#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "capgap/corpus.hpp"
#include "capgap/linear.hpp"

namespace capgap {

// One precomputed embedding: a caption under a text encoder, or a generated
// ("<caption_id>#img") or original image under an image encoder.
struct EmbeddingRecord {
  std::string item_id;
  std::string source_label;
  std::string encoder_tag;
  std::optional<std::string> generator_tag;
  std::vector<double> embedding;

  bool operator==(const EmbeddingRecord&) const = default;
};

// kAuto normalizes records whose encoder_tag mentions "clip" (any case).
enum class NormalizeMode { kAuto, kOn, kOff };
std::optional<NormalizeMode> parse_normalize_mode(std::string_view s);

class EmbeddingSet {
 public:
  // Validates: non-empty, uniform dimension, finite entries, unique ids.
  explicit EmbeddingSet(std::vector<EmbeddingRecord> records,
                        std::optional<LabelSpace> labels = std::nullopt);

  const std::vector<EmbeddingRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  std::size_t dim() const { return dim_; }
  const LabelSpace& labels() const { return labels_; }
  std::size_t label_index(std::size_t record) const { return label_index_[record]; }
  const EmbeddingRecord* find(std::string_view item_id) const;

  // Distinct tags joined by '+', sorted; empty when absent.
  std::string encoder_tags() const;
  std::string generator_tags() const;

  // Records whose generator_tag equals `tag`.
  EmbeddingSet filter_generator(std::string_view tag) const;

  bool normalized() const { return normalized_; }
  void set_normalized(bool v) { normalized_ = v; }

 private:
  std::vector<EmbeddingRecord> records_;
  std::size_t dim_ = 0;
  LabelSpace labels_;
  std::vector<std::size_t> label_index_;
  std::unordered_map<std::string, std::size_t> by_id_;
  bool normalized_ = false;
};

EmbeddingRecord parse_embedding_record(std::string_view line, std::size_t line_number);
std::string serialize_embedding_record(const EmbeddingRecord& record);

// Reads the embedding JSONL contract. Dimension mismatches, non-finite
// entries and duplicate ids are reported with their line number.
EmbeddingSet parse_embeddings(std::string_view jsonl, NormalizeMode mode = NormalizeMode::kAuto,
                              int threads = 1);
EmbeddingSet load_embeddings(const std::filesystem::path& path,
                             NormalizeMode mode = NormalizeMode::kAuto, int threads = 1);
std::string serialize_embeddings(const EmbeddingSet& set);
void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path);

// Adds `originals` (relabelled) as an extra class.
EmbeddingSet make_four_way(const EmbeddingSet& set, const EmbeddingSet& originals,
                           const std::string& original_label);

// Maps an item id to its split group. With a corpus, caption ids and
// "<caption_id>#..." ids resolve to the caption's image id; otherwise the id
// itself, or its part before the last '#', must be a split key.
std::optional<Side> side_of_item(std::string_view item_id, const SplitAssignment& split,
                                 const Corpus* corpus);

// Record indices in item_id order, optionally restricted to one split side.
std::vector<std::size_t> rows_by_item_id(const EmbeddingSet& set);
std::vector<std::size_t> rows_on_side(const EmbeddingSet& set, const SplitAssignment& split,
                                      const Corpus* corpus, Side side);
// Dense feature rows for the selected records; labels are appended when given.
FeatureMatrix embedding_features(const EmbeddingSet& set, std::span<const std::size_t> rows,
                                 std::vector<std::size_t>* labels);

struct ProbeOptions {
  TrainConfig train = TrainConfig::desk_dense();
  std::optional<std::string> generator;  // restrict to one generator_tag
};

// Trains a linear probe on the train side and evaluates on the test side.
// Records are processed in item_id order, so the result does not depend on
// file order. The metrics context records encoder/generator tags,
// normalization and side sizes.
Metrics probe_train_eval(const EmbeddingSet& set, const SplitAssignment& split,
                         const Corpus* corpus, const ProbeOptions& options, int threads = 1);

// Text vs. image attribution for raw prompts and for keyword prompts.
struct KeywordComparison {
  Metrics raw_text;
  Metrics keyword_text;
  std::optional<Metrics> raw_image;
  std::optional<Metrics> keyword_image;

  std::string to_json() const;
  static KeywordComparison from_json(std::string_view json);
  bool operator==(const KeywordComparison&) const = default;
};

// Throws DataError if the label spaces differ.
KeywordComparison keyword_comparison(Metrics raw_text, Metrics keyword_text,
                                     std::optional<Metrics> raw_image = std::nullopt,
                                     std::optional<Metrics> keyword_image = std::nullopt);

}  // namespace capgap
