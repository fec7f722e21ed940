#include "capgap/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "capgap/embedded_data.hpp"
#include "capgap/errors.hpp"
#include "capgap/parallel.hpp"
#include "capgap/text.hpp"
#include "json.hpp"

namespace capgap {

using ojson = nlohmann::ordered_json;

std::vector<std::string> tokenize(std::string_view input) {
  std::vector<std::string> tokens;
  std::string current;
  for (char32_t cp : text::decode(input)) {
    if (text::is_alnum(cp)) {
      text::append_utf8(current, text::to_lower(cp));
    } else if (!current.empty() && text::is_mark(cp)) {
      text::append_utf8(current, cp);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<std::string> ngrams(std::span<const std::string> tokens, int n_min, int n_max) {
  if (n_min < 1) throw ArgumentError("n-gram lower bound must be >= 1");
  if (n_min > n_max) throw ArgumentError("n-gram range is empty (n_min > n_max)");
  std::vector<std::string> out;
  for (int n = n_min; n <= n_max; ++n) {
    const auto un = static_cast<std::size_t>(n);
    if (tokens.size() < un) break;
    for (std::size_t i = 0; i + un <= tokens.size(); ++i) {
      std::string gram = tokens[i];
      for (std::size_t j = 1; j < un; ++j) {
        gram += ' ';
        gram += tokens[i + j];
      }
      out.push_back(std::move(gram));
    }
  }
  return out;
}

TermSet parse_term_list(std::string_view contents) {
  TermSet terms;
  for (auto line : text::lines(contents)) {
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '#') continue;
    const auto tokens = tokenize(line);
    if (!tokens.empty()) terms.insert(text::join(tokens, " "));
  }
  return terms;
}

TermSet load_term_list(const std::filesystem::path& path) {
  return parse_term_list(text::read_file(path));
}

const TermSet& default_stopwords() {
  static const TermSet words = parse_term_list(embedded::stopwords_en());
  return words;
}

double SparseVector::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

// ------------------------------------------------------------------- config

TfIdfConfig TfIdfConfig::classifier() { return TfIdfConfig{}; }

TfIdfConfig TfIdfConfig::phrases() {
  TfIdfConfig c;
  c.ngram_min = 2;
  c.ngram_max = 3;
  c.use_stopwords = true;
  return c;
}

void TfIdfConfig::validate() const {
  if (ngram_min < 1) throw ArgumentError("n-gram lower bound must be >= 1");
  if (ngram_min > ngram_max) throw ArgumentError("n-gram range is empty (n_min > n_max)");
  if (min_df < 1) throw ArgumentError("min_df must be >= 1");
  if (max_features && *max_features == 0) throw ArgumentError("max_features must be >= 1");
}

// -------------------------------------------------------------------- model

std::vector<std::string> TfIdfModel::document_terms(std::string_view text) const {
  auto tokens = tokenize(text);
  if (config_.use_stopwords) {
    std::erase_if(tokens, [&](const std::string& t) { return stopwords_.count(t) > 0; });
  }
  return ngrams(tokens, config_.ngram_min, config_.ngram_max);
}

TfIdfModel TfIdfModel::fit(std::span<const std::string> documents, const TfIdfConfig& config,
                           const TermSet* stopwords, int threads) {
  config.validate();
  if (documents.empty()) throw DataError("cannot fit TF-IDF on an empty corpus");
  TfIdfModel model;
  model.config_ = config;
  if (config.use_stopwords) model.stopwords_ = stopwords ? *stopwords : default_stopwords();
  model.n_docs_ = documents.size();

  std::vector<std::vector<std::string>> distinct(documents.size());
  parallel_for(documents.size(), threads, [&](std::size_t i) {
    auto terms = model.document_terms(documents[i]);
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    distinct[i] = std::move(terms);
  });

  std::unordered_map<std::string, std::size_t> df;
  for (const auto& terms : distinct) {
    for (const auto& t : terms) ++df[t];
  }

  std::vector<std::pair<std::string, std::size_t>> kept;
  kept.reserve(df.size());
  for (auto& [term, count] : df) {
    if (count >= config.min_df) kept.emplace_back(term, count);
  }
  if (config.max_features && kept.size() > *config.max_features) {
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    kept.resize(*config.max_features);
  }
  std::sort(kept.begin(), kept.end());

  const double n = static_cast<double>(model.n_docs_);
  model.terms_.reserve(kept.size());
  for (auto& [term, count] : kept) {
    model.terms_.push_back(term);
    model.df_.push_back(count);
    model.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  model.rebuild_index();
  return model;
}

void TfIdfModel::rebuild_index() {
  index_.clear();
  index_.reserve(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) index_.emplace(terms_[i], i);
}

std::optional<std::size_t> TfIdfModel::index_of(std::string_view term) const {
  const auto it = index_.find(std::string(term));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

SparseVector TfIdfModel::transform(std::string_view text) const {
  std::map<std::uint32_t, double> counts;
  for (const auto& t : document_terms(text)) {
    const auto it = index_.find(t);
    if (it != index_.end()) counts[static_cast<std::uint32_t>(it->second)] += 1.0;
  }
  SparseVector v;
  v.dim = terms_.size();
  v.indices.reserve(counts.size());
  v.values.reserve(counts.size());
  for (const auto& [idx, count] : counts) {
    v.indices.push_back(idx);
    v.values.push_back(count * idf_[idx]);
  }
  if (config_.norm == TermNorm::kL2) {
    const double norm = v.norm();
    if (norm > 0.0) {
      for (double& x : v.values) x /= norm;
    }
  }
  return v;
}

std::string TfIdfModel::to_json() const {
  ojson obj;
  obj["format"] = "capgap.tfidf";
  obj["version"] = 1;
  ojson cfg;
  cfg["ngram_min"] = config_.ngram_min;
  cfg["ngram_max"] = config_.ngram_max;
  cfg["min_df"] = config_.min_df;
  cfg["max_features"] = config_.max_features ? ojson(*config_.max_features) : ojson(nullptr);
  cfg["use_stopwords"] = config_.use_stopwords;
  cfg["norm"] = config_.norm == TermNorm::kL2 ? "l2" : "none";
  obj["config"] = std::move(cfg);
  std::vector<std::string> stop(stopwords_.begin(), stopwords_.end());
  std::sort(stop.begin(), stop.end());
  obj["stopwords"] = stop;
  obj["n_documents"] = n_docs_;
  obj["terms"] = terms_;
  obj["df"] = df_;
  obj["idf"] = idf_;
  return obj.dump();
}

TfIdfModel TfIdfModel::from_json(std::string_view json) {
  try {
    const auto obj = nlohmann::json::parse(json);
    if (obj.value("format", "") != "capgap.tfidf") throw DataError("not a capgap TF-IDF model");
    if (obj.value("version", 0) != 1) throw DataError("unsupported TF-IDF model version");
    TfIdfModel m;
    const auto& cfg = obj.at("config");
    m.config_.ngram_min = cfg.at("ngram_min").get<int>();
    m.config_.ngram_max = cfg.at("ngram_max").get<int>();
    m.config_.min_df = cfg.at("min_df").get<std::size_t>();
    if (cfg.at("max_features").is_null()) {
      m.config_.max_features.reset();
    } else {
      m.config_.max_features = cfg.at("max_features").get<std::size_t>();
    }
    m.config_.use_stopwords = cfg.at("use_stopwords").get<bool>();
    m.config_.norm = cfg.at("norm").get<std::string>() == "l2" ? TermNorm::kL2 : TermNorm::kNone;
    m.config_.validate();
    for (const auto& w : obj.at("stopwords")) m.stopwords_.insert(w.get<std::string>());
    m.n_docs_ = obj.at("n_documents").get<std::size_t>();
    m.terms_ = obj.at("terms").get<std::vector<std::string>>();
    m.df_ = obj.at("df").get<std::vector<std::size_t>>();
    m.idf_ = obj.at("idf").get<std::vector<double>>();
    if (m.df_.size() != m.terms_.size() || m.idf_.size() != m.terms_.size()) {
      throw DataError("TF-IDF model arrays have inconsistent lengths");
    }
    for (double v : m.idf_) {
      if (!std::isfinite(v) || v < 0.0) throw DataError("TF-IDF model has invalid idf value");
    }
    m.rebuild_index();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed TF-IDF model: ") + e.what());
  }
}

void TfIdfModel::save(const std::filesystem::path& path) const {
  text::write_file(path, to_json() + "\n");
}

TfIdfModel TfIdfModel::load(const std::filesystem::path& path) {
  return from_json(text::read_file(path));
}

// ------------------------------------------------------------------ phrases

namespace {

constexpr double kRatioEps = 1e-3;

// Per-label sums of TF-IDF values (dense over the vocabulary) and document
// counts per label.
struct ClassSums {
  std::vector<std::vector<double>> sums;
  std::vector<std::size_t> docs;
};

ClassSums class_sums(const Corpus& corpus, const TfIdfModel& model, int threads) {
  std::vector<SparseVector> rows(corpus.size());
  parallel_for(corpus.size(), threads,
               [&](std::size_t i) { rows[i] = model.transform(corpus.records()[i].text); });
  ClassSums out;
  const std::size_t k = corpus.labels().size();
  out.sums.assign(k, std::vector<double>(model.vocab_size(), 0.0));
  out.docs.assign(k, 0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t c = corpus.label_index(i);
    ++out.docs[c];
    for (std::size_t j = 0; j < rows[i].nnz(); ++j) {
      out.sums[c][rows[i].indices[j]] += rows[i].values[j];
    }
  }
  return out;
}

std::vector<PhraseScore> rank_class(const ClassSums& cs, std::size_t c, const TfIdfModel& model,
                                    std::size_t k, const TermSet& exclusion,
                                    PhraseScoring scoring) {
  const std::size_t n_class = cs.docs[c];
  std::size_t n_rest = 0;
  for (std::size_t o = 0; o < cs.docs.size(); ++o) {
    if (o != c) n_rest += cs.docs[o];
  }
  std::vector<PhraseScore> scored;
  for (std::size_t t = 0; t < model.vocab_size(); ++t) {
    if (exclusion.count(model.term(t))) continue;
    const double sum = cs.sums[c][t];
    if (sum <= 0.0) continue;
    const double mean = n_class ? sum / static_cast<double>(n_class) : 0.0;
    double score = mean;
    if (scoring == PhraseScoring::kClassVsRestRatio) {
      double rest = 0.0;
      for (std::size_t o = 0; o < cs.sums.size(); ++o) {
        if (o != c) rest += cs.sums[o][t];
      }
      const double rest_mean = n_rest ? rest / static_cast<double>(n_rest) : 0.0;
      score = (mean + kRatioEps) / (rest_mean + kRatioEps);
    }
    scored.push_back({model.term(t), score});
  }
  std::sort(scored.begin(), scored.end(), [](const PhraseScore& a, const PhraseScore& b) {
    return a.score != b.score ? a.score > b.score : a.term < b.term;
  });
  if (scored.size() > k) scored.resize(k);
  return scored;
}

}  // namespace

std::vector<PhraseScore> top_phrases(const Corpus& corpus, const TfIdfModel& model,
                                     std::string_view label, std::size_t k,
                                     const TermSet& exclusion, PhraseScoring scoring,
                                     int threads) {
  if (k < 1) throw ArgumentError("k must be >= 1");
  const auto c = corpus.labels().index_of(label);
  if (!c) throw DataError("unknown label '" + std::string(label) + "'");
  const auto cs = class_sums(corpus, model, threads);
  return rank_class(cs, *c, model, k, exclusion, scoring);
}

std::vector<std::pair<std::string, std::vector<PhraseScore>>> top_phrases_per_class(
    const Corpus& corpus, const TfIdfModel& model, std::size_t k, const TermSet& exclusion,
    PhraseScoring scoring, int threads) {
  if (k < 1) throw ArgumentError("k must be >= 1");
  const auto cs = class_sums(corpus, model, threads);
  std::vector<std::pair<std::string, std::vector<PhraseScore>>> out;
  for (std::size_t c = 0; c < corpus.labels().size(); ++c) {
    out.emplace_back(corpus.labels().label(c), rank_class(cs, c, model, k, exclusion, scoring));
  }
  return out;
}

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string phrases_table_csv(
    const std::vector<std::pair<std::string, std::vector<PhraseScore>>>& table) {
  std::string out = "rank";
  std::size_t depth = 0;
  for (const auto& [label, list] : table) {
    out += ',';
    out += csv_field(label);
    depth = std::max(depth, list.size());
  }
  out += '\n';
  for (std::size_t r = 0; r < depth; ++r) {
    out += std::to_string(r + 1);
    for (const auto& [label, list] : table) {
      out += ',';
      if (r < list.size()) out += csv_field(list[r].term);
    }
    out += '\n';
  }
  return out;
}

std::map<std::string, std::int64_t> word_frequencies(const Corpus& corpus,
                                                     std::string_view label,
                                                     const TermSet& stopwords) {
  const auto c = corpus.labels().index_of(label);
  if (!c) throw DataError("unknown label '" + std::string(label) + "'");
  std::map<std::string, std::int64_t> counts;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (corpus.label_index(i) != *c) continue;
    for (auto& t : tokenize(corpus.records()[i].text)) {
      if (!stopwords.count(t)) ++counts[std::move(t)];
    }
  }
  return counts;
}

namespace {

std::vector<std::pair<std::string, std::int64_t>> by_count(
    const std::map<std::string, std::int64_t>& counts) {
  std::vector<std::pair<std::string, std::int64_t>> rows(counts.begin(), counts.end());
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return rows;
}

}  // namespace

std::string word_frequencies_csv(const std::map<std::string, std::int64_t>& counts) {
  std::string out = "term,count\n";
  for (const auto& [term, n] : by_count(counts)) {
    out += csv_field(term) + "," + std::to_string(n) + "\n";
  }
  return out;
}

std::string word_frequencies_json(const std::map<std::string, std::int64_t>& counts) {
  ojson arr = ojson::array();
  for (const auto& [term, n] : by_count(counts)) {
    arr.push_back(ojson{{"term", term}, {"count", n}});
  }
  return arr.dump(1) + "\n";
}

}  // namespace capgap
