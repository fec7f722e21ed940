#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace capgap {

enum class PromptTier { kCoarse, kDetailed, kVeryDetailed };
enum class Variant { kRaw, kKeyword, kParaphrase, kTransformed };

std::string_view to_string(PromptTier tier);
std::string_view to_string(Variant variant);
std::optional<PromptTier> parse_prompt_tier(std::string_view s);
std::optional<Variant> parse_variant(std::string_view s);

// One caption and where it came from: the captioning model (source_label),
// the image it describes and the prompt tier used.
struct CaptionRecord {
  std::string caption_id;
  std::string image_id;
  PromptTier prompt_tier = PromptTier::kCoarse;
  std::string source_label;
  std::string text;
  Variant variant = Variant::kRaw;
  std::string provenance;

  bool operator==(const CaptionRecord&) const = default;
};

// Ordered set of class labels; position defines the class index.
class LabelSpace {
 public:
  // Throws ArgumentError on duplicates or fewer than two labels.
  explicit LabelSpace(std::vector<std::string> labels);

  // Sorted distinct labels.
  static LabelSpace from_observed(std::span<const std::string> labels);

  std::size_t size() const { return labels_.size(); }
  const std::string& label(std::size_t index) const { return labels_.at(index); }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<std::size_t> index_of(std::string_view label) const;
  bool contains(std::string_view label) const { return index_of(label).has_value(); }

  // Copy with one more label appended at the end.
  LabelSpace extended(std::string label) const;

  bool operator==(const LabelSpace&) const = default;

 private:
  std::vector<std::string> labels_;
};

// Immutable validated collection of caption records.
class Corpus {
 public:
  // Validates unique caption ids, non-empty raw text and label membership.
  // When `labels` is absent the label space is the sorted distinct labels.
  explicit Corpus(std::vector<CaptionRecord> records,
                  std::optional<LabelSpace> labels = std::nullopt);

  const std::vector<CaptionRecord>& records() const { return records_; }
  const LabelSpace& labels() const { return labels_; }
  std::size_t size() const { return records_.size(); }
  std::size_t label_index(std::size_t record) const { return label_index_[record]; }

  const CaptionRecord* find(std::string_view caption_id) const;

  // Grouping key for an item id: a caption id maps to its image id; a
  // suffixed id such as "<caption_id>#img" is resolved through its prefix;
  // a bare image id maps to itself.
  std::optional<std::string> image_of_item(std::string_view item_id) const;

  std::vector<std::string> image_ids() const;  // sorted, distinct
  std::vector<std::size_t> count_per_label() const;

 private:
  std::vector<CaptionRecord> records_;
  LabelSpace labels_;
  std::vector<std::size_t> label_index_;
  std::unordered_map<std::string, std::size_t> by_caption_;
  std::unordered_map<std::string, std::size_t> by_image_;
};

CaptionRecord parse_record(std::string_view line, std::size_t line_number);
std::string serialize_record(const CaptionRecord& record);

// Reads the caption JSONL contract. Blank lines are skipped; every other line
// must be one record. Text is NFC-normalized.
Corpus load_corpus(const std::filesystem::path& path,
                   std::optional<LabelSpace> labels = std::nullopt, int threads = 1);
Corpus parse_corpus(std::string_view jsonl,
                    std::optional<LabelSpace> labels = std::nullopt, int threads = 1);
std::string serialize_corpus(const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

enum class Side { kTrain, kTest };
std::string_view to_string(Side side);

// Train/test side per image id. All records of one image share a side.
class SplitAssignment {
 public:
  SplitAssignment(std::map<std::string, Side, std::less<>> sides, double train_fraction,
                  std::uint64_t seed);

  std::optional<Side> side_of(std::string_view image_id) const;
  const std::map<std::string, Side, std::less<>>& sides() const { return sides_; }
  double train_fraction() const { return train_fraction_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t train_images() const;
  std::size_t test_images() const { return sides_.size() - train_images(); }

  bool operator==(const SplitAssignment&) const = default;

 private:
  std::map<std::string, Side, std::less<>> sides_;
  double train_fraction_;
  std::uint64_t seed_;
};

// Deterministic grouped split: the assignment depends only on the set of
// image ids, the seed and the fraction. round(fraction * n) images go to
// train, clamped so both sides are non-empty.
SplitAssignment grouped_split(std::span<const std::string> image_ids,
                              double train_fraction, std::uint64_t seed);
SplitAssignment grouped_split(const Corpus& corpus, double train_fraction,
                              std::uint64_t seed);

std::string serialize_split(const SplitAssignment& split);
SplitAssignment parse_split(std::string_view json);
void save_split(const SplitAssignment& split, const std::filesystem::path& path);
SplitAssignment load_split(const std::filesystem::path& path);

// Record indices of `corpus` on the given side. Records whose image is not in
// the split raise DataError.
std::vector<std::size_t> records_on_side(const Corpus& corpus,
                                         const SplitAssignment& split, Side side);

// Appends `originals` as an extra class named `original_label`.
Corpus make_four_way(const Corpus& corpus, std::span<const CaptionRecord> originals,
                     const std::string& original_label);

}  // namespace capgap
