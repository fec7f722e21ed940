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
#include <unordered_set>
#include <vector>

#include "capgap/corpus.hpp"

namespace capgap {

using TermSet = std::unordered_set<std::string>;

// Lowercased runs of Unicode letters and digits (combining marks stay attached
// to the preceding run). Everything else separates tokens.
std::vector<std::string> tokenize(std::string_view text);

// Contiguous n-grams for n = n_min..n_max, grouped by n, each group in
// document order. Throws ArgumentError if n_min < 1 or n_min > n_max.
std::vector<std::string> ngrams(std::span<const std::string> tokens, int n_min, int n_max);

// Term list file: first line is a "#capgap-lexicon <name> <version>" header
// (optional for user files), '#' lines are comments, one term per line.
// Terms are re-tokenized and joined by single spaces.
TermSet parse_term_list(std::string_view contents);
TermSet load_term_list(const std::filesystem::path& path);
const TermSet& default_stopwords();

struct SparseVector {
  std::vector<std::uint32_t> indices;  // strictly increasing
  std::vector<double> values;          // finite, non-zero
  std::size_t dim = 0;

  std::size_t nnz() const { return indices.size(); }
  double norm() const;
  bool operator==(const SparseVector&) const = default;
};

enum class TermNorm { kL2, kNone };

struct TfIdfConfig {
  int ngram_min = 1;
  int ngram_max = 2;
  std::size_t min_df = 1;
  std::optional<std::size_t> max_features = 200000;
  bool use_stopwords = false;
  TermNorm norm = TermNorm::kL2;

  // Unigrams + bigrams, no stopword removal: the attribution classifier.
  static TfIdfConfig classifier();
  // Bigrams + trigrams with stopwords removed: distinctive-phrase forensics.
  static TfIdfConfig phrases();

  void validate() const;
  bool operator==(const TfIdfConfig&) const = default;
};

// Smoothed TF-IDF: idf(t) = ln((1 + N) / (1 + df(t))) + 1, value = count * idf,
// optionally L2-normalized. Term indices follow lexicographic term order.
class TfIdfModel {
 public:
  static TfIdfModel fit(std::span<const std::string> documents, const TfIdfConfig& config,
                        const TermSet* stopwords = nullptr, int threads = 1);

  // Terms of a document under this model's tokenization, stopword and n-gram
  // settings (before vocabulary filtering).
  std::vector<std::string> document_terms(std::string_view text) const;

  SparseVector transform(std::string_view text) const;

  std::size_t vocab_size() const { return terms_.size(); }
  std::size_t n_documents() const { return n_docs_; }
  const std::string& term(std::size_t i) const { return terms_.at(i); }
  double idf(std::size_t i) const { return idf_.at(i); }
  std::size_t df(std::size_t i) const { return df_.at(i); }
  std::optional<std::size_t> index_of(std::string_view term) const;
  const TfIdfConfig& config() const { return config_; }
  const TermSet& stopwords() const { return stopwords_; }

  std::string to_json() const;
  static TfIdfModel from_json(std::string_view json);
  void save(const std::filesystem::path& path) const;
  static TfIdfModel load(const std::filesystem::path& path);

 private:
  TfIdfConfig config_;
  TermSet stopwords_;
  std::vector<std::string> terms_;
  std::vector<std::size_t> df_;
  std::vector<double> idf_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t n_docs_ = 0;

  void rebuild_index();
};

struct PhraseScore {
  std::string term;
  double score = 0.0;
};

enum class PhraseScoring {
  kClassMean,        // mean TF-IDF value over the class's documents
  kClassVsRestRatio  // (class mean + eps) / (rest mean + eps)
};

// Ranked distinctive terms for one label, exclusion-set terms removed, ties
// broken lexicographically. Throws DataError for an unknown label.
std::vector<PhraseScore> top_phrases(const Corpus& corpus, const TfIdfModel& model,
                                     std::string_view label, std::size_t k,
                                     const TermSet& exclusion,
                                     PhraseScoring scoring = PhraseScoring::kClassMean,
                                     int threads = 1);

// Same ranking for every label, keyed by label in label-space order.
std::vector<std::pair<std::string, std::vector<PhraseScore>>> top_phrases_per_class(
    const Corpus& corpus, const TfIdfModel& model, std::size_t k, const TermSet& exclusion,
    PhraseScoring scoring = PhraseScoring::kClassMean, int threads = 1);

// "rank,<label 1>,<label 2>,..." with one row per rank.
std::string phrases_table_csv(
    const std::vector<std::pair<std::string, std::vector<PhraseScore>>>& table);

// Unigram counts for one label after tokenization and stopword removal.
std::map<std::string, std::int64_t> word_frequencies(const Corpus& corpus,
                                                     std::string_view label,
                                                     const TermSet& stopwords);
// Sorted by count descending, then term.
std::string word_frequencies_csv(const std::map<std::string, std::int64_t>& counts);
std::string word_frequencies_json(const std::map<std::string, std::int64_t>& counts);

}  // namespace capgap
