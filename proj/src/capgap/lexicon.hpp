#pragma once

#include <array>
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

// A versioned term list ("#capgap-lexicon <name> <version>" header).
struct TermList {
  std::string name;
  std::string version;
  TermSet terms;
};

TermList parse_lexicon_file(std::string_view contents, std::string_view fallback_name);
TermList load_lexicon_file(const std::filesystem::path& path);

struct LexMatch {
  std::size_t start = 0;   // token index
  std::size_t length = 0;  // tokens
  bool nuanced = false;
  std::string term;

  bool operator==(const LexMatch&) const = default;
};

struct LexCounts {
  std::int64_t basic = 0;
  std::int64_t nuanced = 0;
  std::vector<LexMatch> matches;
};

// Basic vs. nuanced dictionary matcher over the tokenize() stream. At each
// position the longest window wins; a window is nuanced if it is a nuanced
// entry or a modifier followed by a basic or nuanced entry ("dark blue"), and
// basic if it is a basic entry. Matched tokens are consumed.
class PhraseLexicon {
 public:
  // Throws DataError if basic and nuanced share an entry.
  PhraseLexicon(TermList basic, TermList nuanced, std::optional<TermList> modifiers = std::nullopt);

  LexCounts count(std::string_view text) const;
  LexCounts count_tokens(std::span<const std::string> tokens) const;

  // "name version" of each list, joined by '+'.
  std::string version() const;

 private:
  TermList basic_;
  TermList nuanced_;
  std::optional<TermList> modifiers_;
  std::size_t max_len_ = 1;
};

const PhraseLexicon& default_color_lexicon();
const PhraseLexicon& default_texture_lexicon();

inline LexCounts count_colors(const PhraseLexicon& lexicon, std::string_view text) {
  return lexicon.count(text);
}
inline LexCounts count_textures(const PhraseLexicon& lexicon, std::string_view text) {
  return lexicon.count(text);
}

inline constexpr std::array<std::string_view, 4> kCompositionCriteria = {
    "spatial_layers", "subject_focus", "guiding_elements", "balance_symmetry"};

struct CompositionFlags {
  bool spatial_layers = false;
  bool subject_focus = false;
  bool guiding_elements = false;
  bool balance_symmetry = false;

  bool get(std::size_t criterion) const;
  void set(std::size_t criterion, bool value);
  bool operator==(const CompositionFlags&) const = default;
};

// One phrase list per criterion, in kCompositionCriteria order. A flag is set
// iff one of its phrases occurs as a contiguous token sequence.
class CompositionLexicon {
 public:
  explicit CompositionLexicon(std::array<TermList, 4> lists);

  CompositionFlags flags(std::string_view text) const;
  CompositionFlags flags_tokens(std::span<const std::string> tokens) const;
  std::string version() const;

 private:
  std::array<TermList, 4> lists_;
  std::size_t max_len_ = 1;
};

const CompositionLexicon& default_composition_lexicon();
inline CompositionFlags composition_flags(std::string_view text) {
  return default_composition_lexicon().flags(text);
}

// Per-label aggregate of basic/nuanced term use.
struct TermColumnStats {
  std::int64_t n = 0;
  std::int64_t total_basic = 0;
  std::int64_t total_nuanced = 0;
  std::int64_t with_basic = 0;
  std::int64_t with_nuanced = 0;

  double pct_with_basic() const;
  double pct_with_nuanced() const;
  double avg_basic() const;
  double avg_nuanced() const;
  bool operator==(const TermColumnStats&) const = default;
};

struct CompositionStats {
  std::int64_t n = 0;
  std::array<std::int64_t, 4> flagged{};

  double pct(std::size_t criterion) const;
  bool operator==(const CompositionStats&) const = default;
};

struct LabelLexiconStats {
  std::string label;
  std::optional<TermColumnStats> color;
  std::optional<TermColumnStats> texture;
  std::optional<CompositionStats> composition;

  bool operator==(const LabelLexiconStats&) const = default;
};

struct LexiconReport {
  std::string source;  // "dictionary" or "judge:<tags>"
  std::map<std::string, std::string> versions;
  std::vector<LabelLexiconStats> per_label;  // label-space order

  bool has_color() const;
  bool has_texture() const;
  bool has_composition() const;

  std::string to_json() const;
  static LexiconReport from_json(std::string_view json);
  void save(const std::filesystem::path& path) const;
  static LexiconReport load(const std::filesystem::path& path);

  // Table 4 shape: counts, % with >= 1 and mean per caption for each column,
  // followed by "highest" and "lowest" rows naming the label per column.
  std::string table4_csv() const;
  // Table 5 shape: % of captions meeting each composition criterion.
  std::string table5_csv() const;

  bool operator==(const LexiconReport&) const = default;
};

struct LexiconSections {
  bool colors = true;
  bool textures = true;
  bool composition = true;
};

LexiconReport corpus_stats(const Corpus& corpus, const LexiconSections& sections = {},
                           const PhraseLexicon& colors = default_color_lexicon(),
                           const PhraseLexicon& textures = default_texture_lexicon(),
                           const CompositionLexicon& composition = default_composition_lexicon(),
                           int threads = 1);

// ------------------------------------------------------------- judgments

enum class JudgmentKind { kDetailRank, kTexture, kComposition };
std::string_view to_string(JudgmentKind kind);

struct Judgment {
  std::string item_id;
  JudgmentKind kind = JudgmentKind::kDetailRank;
  int rank = 0;                  // detail_rank
  std::int64_t basic = 0;        // texture
  std::int64_t nuanced = 0;      // texture
  CompositionFlags composition;  // composition
  std::string judge_tag;

  bool operator==(const Judgment&) const = default;
};

// Judgment JSONL contract. Ids must be caption ids or "<caption_id>#<suffix>"
// image items of `corpus`; ranks lie in 1..K; (id, kind) is unique; within a
// sibling group (same image, tier, variant and suffix) ranks are distinct.
std::vector<Judgment> parse_judgments(std::string_view jsonl, const Corpus& corpus);
std::vector<Judgment> load_judgments(const std::filesystem::path& path, const Corpus& corpus);

// Share of items per label at each detail rank.
struct RankDistribution {
  std::string items;  // "caption" or "image"
  std::vector<std::string> labels;
  std::vector<std::int64_t> counts;  // counts[label * K + (rank - 1)]

  std::size_t classes() const { return labels.size(); }
  double percent(std::size_t label, std::size_t rank) const;  // rank is 1-based
  bool operator==(const RankDistribution&) const = default;
};

struct JudgmentSummary {
  std::vector<RankDistribution> ranks;  // caption first, then image, when present
  std::optional<LexiconReport> judged;  // texture/composition from judges

  std::string to_json() const;
  static JudgmentSummary from_json(std::string_view json);
  // One row per (items, label): items,label,rank_1_pct,...,rank_K_pct,n
  std::string ranks_csv() const;
  bool operator==(const JudgmentSummary&) const = default;
};

JudgmentSummary summarize_judgments(std::span<const Judgment> judgments, const Corpus& corpus);

}  // namespace capgap
