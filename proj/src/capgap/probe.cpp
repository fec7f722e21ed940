#include "capgap/probe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "capgap/errors.hpp"
#include "capgap/parallel.hpp"
#include "capgap/text.hpp"
#include "json.hpp"

namespace capgap {

using ojson = nlohmann::ordered_json;

std::optional<NormalizeMode> parse_normalize_mode(std::string_view s) {
  if (s == "auto") return NormalizeMode::kAuto;
  if (s == "on") return NormalizeMode::kOn;
  if (s == "off") return NormalizeMode::kOff;
  return std::nullopt;
}

// ------------------------------------------------------------- EmbeddingSet

namespace {

LabelSpace observed_labels(const std::vector<EmbeddingRecord>& records) {
  if (records.empty()) throw DataError("embedding set is empty");
  std::vector<std::string> labels;
  labels.reserve(records.size());
  for (const auto& r : records) labels.push_back(r.source_label);
  const std::set<std::string> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2) throw DataError("embedding set needs at least two source labels");
  return LabelSpace::from_observed(labels);
}

std::string joined_tags(const std::set<std::string>& tags) {
  std::string out;
  for (const auto& t : tags) {
    if (!out.empty()) out += '+';
    out += t;
  }
  return out;
}

}  // namespace

EmbeddingSet::EmbeddingSet(std::vector<EmbeddingRecord> records, std::optional<LabelSpace> labels)
    : records_(std::move(records)),
      labels_(labels ? std::move(*labels) : observed_labels(records_)) {
  if (records_.empty()) throw DataError("embedding set is empty");
  dim_ = records_.front().embedding.size();
  if (dim_ == 0) throw DataError("embedding dimension must be >= 1");
  label_index_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (r.embedding.size() != dim_) {
      throw DataError("record '" + r.item_id + "' has dimension " +
                      std::to_string(r.embedding.size()) + ", expected " + std::to_string(dim_));
    }
    for (double v : r.embedding) {
      if (!std::isfinite(v)) throw DataError("record '" + r.item_id + "' has a non-finite entry");
    }
    const auto c = labels_.index_of(r.source_label);
    if (!c) throw DataError("record '" + r.item_id + "' has unknown label '" + r.source_label + "'");
    label_index_.push_back(*c);
    if (!by_id_.emplace(r.item_id, i).second) {
      throw DataError("duplicate item_id '" + r.item_id + "'");
    }
  }
}

const EmbeddingRecord* EmbeddingSet::find(std::string_view item_id) const {
  const auto it = by_id_.find(std::string(item_id));
  return it == by_id_.end() ? nullptr : &records_[it->second];
}

std::string EmbeddingSet::encoder_tags() const {
  std::set<std::string> tags;
  for (const auto& r : records_) {
    if (!r.encoder_tag.empty()) tags.insert(r.encoder_tag);
  }
  return joined_tags(tags);
}

std::string EmbeddingSet::generator_tags() const {
  std::set<std::string> tags;
  for (const auto& r : records_) {
    if (r.generator_tag) tags.insert(*r.generator_tag);
  }
  return joined_tags(tags);
}

EmbeddingSet EmbeddingSet::filter_generator(std::string_view tag) const {
  std::vector<EmbeddingRecord> kept;
  for (const auto& r : records_) {
    if (r.generator_tag && *r.generator_tag == tag) kept.push_back(r);
  }
  if (kept.empty()) throw DataError("no embeddings with generator_tag '" + std::string(tag) + "'");
  EmbeddingSet out(std::move(kept), labels_);
  out.normalized_ = normalized_;
  return out;
}

// ----------------------------------------------------------------- JSONL io

EmbeddingRecord parse_embedding_record(std::string_view line, std::size_t line_number) {
  const auto where = "line " + std::to_string(line_number) + ": ";
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(where + "malformed JSON (" + e.what() + ")");
  }
  if (!obj.is_object()) throw DataError(where + "record is not a JSON object");
  auto str = [&](const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
      throw DataError(where + "missing or non-string field '" + key + "'");
    }
    return it->get<std::string>();
  };
  EmbeddingRecord r;
  r.item_id = str("item_id");
  r.source_label = str("source_label");
  r.encoder_tag = str("encoder_tag");
  if (obj.contains("generator_tag") && !obj["generator_tag"].is_null()) {
    r.generator_tag = str("generator_tag");
  }
  const auto it = obj.find("embedding");
  if (it == obj.end() || !it->is_array() || it->empty()) {
    throw DataError(where + "missing or empty 'embedding' array");
  }
  r.embedding.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_number()) throw DataError(where + "non-numeric embedding entry");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw DataError(where + "non-finite embedding entry");
    r.embedding.push_back(d);
  }
  return r;
}

std::string serialize_embedding_record(const EmbeddingRecord& r) {
  ojson obj;
  obj["item_id"] = r.item_id;
  obj["source_label"] = r.source_label;
  obj["encoder_tag"] = r.encoder_tag;
  obj["generator_tag"] = r.generator_tag ? ojson(*r.generator_tag) : ojson(nullptr);
  obj["embedding"] = r.embedding;
  return obj.dump();
}

namespace {

bool wants_normalization(const EmbeddingRecord& r, NormalizeMode mode) {
  if (mode == NormalizeMode::kOn) return true;
  if (mode == NormalizeMode::kOff) return false;
  std::string lower;
  for (char c : r.encoder_tag) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return lower.find("clip") != std::string::npos;
}

}  // namespace

EmbeddingSet parse_embeddings(std::string_view jsonl, NormalizeMode mode, int threads) {
  const auto all_lines = text::lines(jsonl);
  std::vector<std::size_t> line_numbers;
  for (std::size_t i = 0; i < all_lines.size(); ++i) {
    if (all_lines[i].find_first_not_of(" \t") != std::string_view::npos) {
      line_numbers.push_back(i + 1);
    }
  }
  if (line_numbers.empty()) throw DataError("embedding file is empty");
  std::vector<EmbeddingRecord> records(line_numbers.size());
  parallel_for(line_numbers.size(), threads, [&](std::size_t i) {
    records[i] = parse_embedding_record(all_lines[line_numbers[i] - 1], line_numbers[i]);
  });
  const std::size_t dim = records.front().embedding.size();
  std::unordered_map<std::string_view, std::size_t> seen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto where = "line " + std::to_string(line_numbers[i]) + ": ";
    if (records[i].embedding.size() != dim) {
      throw DataError(where + "embedding dimension " + std::to_string(records[i].embedding.size()) +
                      " differs from " + std::to_string(dim) + " on line " +
                      std::to_string(line_numbers.front()));
    }
    const auto [it, inserted] = seen.emplace(records[i].item_id, line_numbers[i]);
    if (!inserted) {
      throw DataError(where + "duplicate item_id '" + records[i].item_id +
                      "' (first seen on line " + std::to_string(it->second) + ")");
    }
  }
  bool all_normalized = true;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& r = records[i];
    if (!wants_normalization(r, mode)) {
      all_normalized = false;
      continue;
    }
    double norm = 0.0;
    for (double v : r.embedding) norm += v * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      throw DataError("line " + std::to_string(line_numbers[i]) +
                      ": zero embedding cannot be normalized");
    }
    for (double& v : r.embedding) v /= norm;
  }
  EmbeddingSet set(std::move(records));
  set.set_normalized(all_normalized);
  return set;
}

EmbeddingSet load_embeddings(const std::filesystem::path& path, NormalizeMode mode, int threads) {
  const auto buffer = text::read_file(path);
  try {
    return parse_embeddings(buffer, mode, threads);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string serialize_embeddings(const EmbeddingSet& set) {
  std::string out;
  for (const auto& r : set.records()) {
    out += serialize_embedding_record(r);
    out += '\n';
  }
  return out;
}

void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
  text::write_file(path, serialize_embeddings(set));
}

EmbeddingSet make_four_way(const EmbeddingSet& set, const EmbeddingSet& originals,
                           const std::string& original_label) {
  if (set.labels().contains(original_label)) {
    throw DataError("label '" + original_label + "' already exists in the label space");
  }
  if (originals.dim() != set.dim()) throw DataError("original embeddings have a different dimension");
  auto labels = set.labels().extended(original_label);
  auto records = set.records();
  for (auto r : originals.records()) {
    r.source_label = original_label;
    records.push_back(std::move(r));
  }
  EmbeddingSet out(std::move(records), std::move(labels));
  out.set_normalized(set.normalized() && originals.normalized());
  return out;
}

// -------------------------------------------------------------------- probe

std::optional<Side> side_of_item(std::string_view item_id, const SplitAssignment& split,
                                 const Corpus* corpus) {
  if (corpus) {
    const auto image = corpus->image_of_item(item_id);
    if (!image) return std::nullopt;
    return split.side_of(*image);
  }
  if (auto s = split.side_of(item_id)) return s;
  const auto hash = item_id.rfind('#');
  if (hash != std::string_view::npos) return split.side_of(item_id.substr(0, hash));
  return std::nullopt;
}

std::vector<std::size_t> rows_by_item_id(const EmbeddingSet& set) {
  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return set.records()[a].item_id < set.records()[b].item_id;
  });
  return order;
}

std::vector<std::size_t> rows_on_side(const EmbeddingSet& set, const SplitAssignment& split,
                                      const Corpus* corpus, Side side) {
  std::vector<std::size_t> rows;
  for (auto i : rows_by_item_id(set)) {
    const auto s = side_of_item(set.records()[i].item_id, split, corpus);
    if (!s) throw DataError("item '" + set.records()[i].item_id + "' cannot be joined to the split");
    if (*s == side) rows.push_back(i);
  }
  return rows;
}

FeatureMatrix embedding_features(const EmbeddingSet& set, std::span<const std::size_t> rows,
                                 std::vector<std::size_t>* labels) {
  DenseMatrix m(rows.size(), set.dim());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& e = set.records()[rows[k]].embedding;
    std::copy(e.begin(), e.end(), m.row(k).begin());
    if (labels) labels->push_back(set.label_index(rows[k]));
  }
  return FeatureMatrix::dense(std::move(m));
}

Metrics probe_train_eval(const EmbeddingSet& input, const SplitAssignment& split,
                         const Corpus* corpus, const ProbeOptions& options, int threads) {
  options.train.validate();
  const EmbeddingSet set = options.generator ? input.filter_generator(*options.generator) : input;
  const auto train_rows = rows_on_side(set, split, corpus, Side::kTrain);
  const auto test_rows = rows_on_side(set, split, corpus, Side::kTest);
  if (train_rows.empty()) throw DataError("train side of the probe split is empty");
  if (test_rows.empty()) throw DataError("test side of the probe split is empty");

  std::vector<std::size_t> y_train, y_test;
  const auto x_train = embedding_features(set, train_rows, &y_train);
  const auto x_test = embedding_features(set, test_rows, &y_test);
  const auto trained = train(x_train, y_train, set.labels(), options.train, threads);
  auto metrics = evaluate(trained.model, x_test, y_test, threads);
  auto& ctx = metrics.context();
  ctx["features"] = "embedding";
  ctx["encoder_tag"] = set.encoder_tags();
  if (const auto g = set.generator_tags(); !g.empty()) ctx["generator_tag"] = g;
  ctx["normalized"] = set.normalized() ? "true" : "false";
  ctx["n_train"] = std::to_string(train_rows.size());
  ctx["train_config_hash"] = options.train.hash();
  return metrics;
}

// ---------------------------------------------------------------- keywords

namespace {

ojson delta_json(const Metrics& raw, const Metrics& kw) {
  ojson o;
  o["overall"] = kw.overall_accuracy() - raw.overall_accuracy();
  ojson per = ojson::object();
  const auto a = raw.per_class_accuracy();
  const auto b = kw.per_class_accuracy();
  for (std::size_t c = 0; c < raw.classes(); ++c) {
    const double d = b[c] - a[c];
    per[raw.labels().label(c)] = std::isnan(d) ? ojson(nullptr) : ojson(d);
  }
  o["per_class"] = std::move(per);
  return o;
}

}  // namespace

KeywordComparison keyword_comparison(Metrics raw_text, Metrics keyword_text,
                                     std::optional<Metrics> raw_image,
                                     std::optional<Metrics> keyword_image) {
  const auto& labels = raw_text.labels();
  auto check = [&](const Metrics& m, const char* what) {
    if (!(m.labels() == labels)) {
      throw DataError(std::string("label space of ") + what + " metrics differs from raw text (K=" +
                      std::to_string(m.classes()) + " vs " + std::to_string(labels.size()) + ")");
    }
  };
  check(keyword_text, "keyword text");
  if (raw_image) check(*raw_image, "raw image");
  if (keyword_image) check(*keyword_image, "keyword image");
  if (raw_image.has_value() != keyword_image.has_value()) {
    throw DataError("image metrics must be given for both raw and keyword prompts or neither");
  }
  return KeywordComparison{std::move(raw_text), std::move(keyword_text), std::move(raw_image),
                           std::move(keyword_image)};
}

std::string KeywordComparison::to_json() const {
  ojson o;
  o["format"] = "capgap.keyword_comparison";
  o["version"] = 1;
  o["raw_text"] = ojson::parse(raw_text.to_json());
  o["keyword_text"] = ojson::parse(keyword_text.to_json());
  o["raw_image"] = raw_image ? ojson::parse(raw_image->to_json()) : ojson(nullptr);
  o["keyword_image"] = keyword_image ? ojson::parse(keyword_image->to_json()) : ojson(nullptr);
  ojson deltas;
  deltas["text"] = delta_json(raw_text, keyword_text);
  deltas["image"] = raw_image ? delta_json(*raw_image, *keyword_image) : ojson(nullptr);
  o["deltas"] = std::move(deltas);
  return o.dump(1);
}

KeywordComparison KeywordComparison::from_json(std::string_view json) {
  try {
    const auto o = nlohmann::json::parse(json);
    if (o.value("format", "") != "capgap.keyword_comparison") {
      throw DataError("not a capgap keyword comparison");
    }
    auto opt = [&](const char* key) -> std::optional<Metrics> {
      if (!o.contains(key) || o.at(key).is_null()) return std::nullopt;
      return Metrics::from_json(o.at(key).dump());
    };
    return keyword_comparison(Metrics::from_json(o.at("raw_text").dump()),
                              Metrics::from_json(o.at("keyword_text").dump()), opt("raw_image"),
                              opt("keyword_image"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed keyword comparison: ") + e.what());
  }
}

}  // namespace capgap
