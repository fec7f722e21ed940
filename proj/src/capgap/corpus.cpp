#include "capgap/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "capgap/errors.hpp"
#include "capgap/parallel.hpp"
#include "capgap/rng.hpp"
#include "capgap/text.hpp"
#include "json.hpp"

namespace capgap {

using ojson = nlohmann::ordered_json;

std::string_view to_string(PromptTier tier) {
  switch (tier) {
    case PromptTier::kCoarse: return "coarse";
    case PromptTier::kDetailed: return "detailed";
    case PromptTier::kVeryDetailed: return "very_detailed";
  }
  return "coarse";
}

std::string_view to_string(Variant variant) {
  switch (variant) {
    case Variant::kRaw: return "raw";
    case Variant::kKeyword: return "keyword";
    case Variant::kParaphrase: return "paraphrase";
    case Variant::kTransformed: return "transformed";
  }
  return "raw";
}

std::string_view to_string(Side side) {
  return side == Side::kTrain ? "train" : "test";
}

std::optional<PromptTier> parse_prompt_tier(std::string_view s) {
  if (s == "coarse") return PromptTier::kCoarse;
  if (s == "detailed") return PromptTier::kDetailed;
  if (s == "very_detailed") return PromptTier::kVeryDetailed;
  return std::nullopt;
}

std::optional<Variant> parse_variant(std::string_view s) {
  if (s == "raw") return Variant::kRaw;
  if (s == "keyword") return Variant::kKeyword;
  if (s == "paraphrase") return Variant::kParaphrase;
  if (s == "transformed") return Variant::kTransformed;
  return std::nullopt;
}

// ---------------------------------------------------------------- LabelSpace

LabelSpace::LabelSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) {
    throw ArgumentError("label space needs at least two labels, got " +
                        std::to_string(labels_.size()));
  }
  std::set<std::string_view> seen;
  for (const auto& l : labels_) {
    if (l.empty()) throw ArgumentError("empty label in label space");
    if (!seen.insert(l).second) throw ArgumentError("duplicate label '" + l + "'");
  }
}

LabelSpace LabelSpace::from_observed(std::span<const std::string> labels) {
  std::set<std::string> distinct(labels.begin(), labels.end());
  return LabelSpace(std::vector<std::string>(distinct.begin(), distinct.end()));
}

std::optional<std::size_t> LabelSpace::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return i;
  }
  return std::nullopt;
}

LabelSpace LabelSpace::extended(std::string label) const {
  if (contains(label)) throw DataError("label '" + label + "' already in label space");
  auto copy = labels_;
  copy.push_back(std::move(label));
  return LabelSpace(std::move(copy));
}

// -------------------------------------------------------------------- Corpus

namespace {

LabelSpace infer_labels(const std::vector<CaptionRecord>& records) {
  if (records.empty()) throw DataError("empty corpus");
  std::vector<std::string> observed;
  observed.reserve(records.size());
  for (const auto& r : records) observed.push_back(r.source_label);
  try {
    return LabelSpace::from_observed(observed);
  } catch (const ArgumentError& e) {
    throw DataError(std::string("corpus label space invalid: ") + e.what());
  }
}

}  // namespace

Corpus::Corpus(std::vector<CaptionRecord> records, std::optional<LabelSpace> labels)
    : records_(std::move(records)),
      labels_(labels ? std::move(*labels) : infer_labels(records_)) {
  if (records_.empty()) throw DataError("empty corpus");
  label_index_.reserve(records_.size());
  by_caption_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (r.caption_id.empty()) throw DataError("record " + std::to_string(i) + ": empty caption_id");
    if (r.image_id.empty()) throw DataError("record '" + r.caption_id + "': empty image_id");
    if (!by_caption_.emplace(r.caption_id, i).second) {
      throw DataError("duplicate caption_id '" + r.caption_id + "'");
    }
    if (r.variant == Variant::kRaw && text::trim(r.text).empty()) {
      throw DataError("record '" + r.caption_id + "': empty text for raw caption");
    }
    const auto idx = labels_.index_of(r.source_label);
    if (!idx) {
      throw DataError("record '" + r.caption_id + "': label '" + r.source_label +
                      "' not in label space");
    }
    label_index_.push_back(*idx);
    by_image_.emplace(r.image_id, i);
  }
}

const CaptionRecord* Corpus::find(std::string_view caption_id) const {
  const auto it = by_caption_.find(std::string(caption_id));
  return it == by_caption_.end() ? nullptr : &records_[it->second];
}

std::optional<std::string> Corpus::image_of_item(std::string_view item_id) const {
  if (const auto* r = find(item_id)) return r->image_id;
  const auto hash = item_id.rfind('#');
  if (hash != std::string_view::npos) {
    const auto prefix = item_id.substr(0, hash);
    if (const auto* r = find(prefix)) return r->image_id;
    if (by_image_.count(std::string(prefix))) return std::string(prefix);
  }
  if (by_image_.count(std::string(item_id))) return std::string(item_id);
  return std::nullopt;
}

std::vector<std::string> Corpus::image_ids() const {
  std::set<std::string> ids;
  for (const auto& r : records_) ids.insert(r.image_id);
  return {ids.begin(), ids.end()};
}

std::vector<std::size_t> Corpus::count_per_label() const {
  std::vector<std::size_t> counts(labels_.size(), 0);
  for (std::size_t i : label_index_) ++counts[i];
  return counts;
}

// ------------------------------------------------------------------ JSONL io

namespace {

std::string required_string(const nlohmann::json& obj, const char* key,
                            std::size_t line_number) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw DataError("line " + std::to_string(line_number) + ": missing or non-string field '" +
                    key + "'");
  }
  return it->get<std::string>();
}

}  // namespace

CaptionRecord parse_record(std::string_view line, std::size_t line_number) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("line " + std::to_string(line_number) + ": malformed JSON (" + e.what() + ")");
  }
  if (!obj.is_object()) {
    throw DataError("line " + std::to_string(line_number) + ": record is not a JSON object");
  }
  CaptionRecord r;
  r.caption_id = required_string(obj, "caption_id", line_number);
  r.image_id = required_string(obj, "image_id", line_number);
  const auto tier = required_string(obj, "prompt_tier", line_number);
  const auto parsed_tier = parse_prompt_tier(tier);
  if (!parsed_tier) {
    throw DataError("line " + std::to_string(line_number) + ": unknown prompt_tier '" + tier + "'");
  }
  r.prompt_tier = *parsed_tier;
  r.source_label = required_string(obj, "source_label", line_number);
  try {
    r.text = text::nfc_normalize(required_string(obj, "text", line_number));
  } catch (const DataError& e) {
    throw DataError("line " + std::to_string(line_number) + ": " + e.what());
  }
  if (obj.contains("variant") && !obj["variant"].is_null()) {
    const auto v = required_string(obj, "variant", line_number);
    const auto parsed = parse_variant(v);
    if (!parsed) {
      throw DataError("line " + std::to_string(line_number) + ": unknown variant '" + v + "'");
    }
    r.variant = *parsed;
  }
  if (obj.contains("provenance") && !obj["provenance"].is_null()) {
    r.provenance = required_string(obj, "provenance", line_number);
  }
  return r;
}

std::string serialize_record(const CaptionRecord& r) {
  ojson obj;
  obj["caption_id"] = r.caption_id;
  obj["image_id"] = r.image_id;
  obj["prompt_tier"] = to_string(r.prompt_tier);
  obj["source_label"] = r.source_label;
  obj["text"] = r.text;
  obj["variant"] = to_string(r.variant);
  if (!r.provenance.empty()) obj["provenance"] = r.provenance;
  return obj.dump();
}

Corpus parse_corpus(std::string_view jsonl, std::optional<LabelSpace> labels, int threads) {
  const auto all_lines = text::lines(jsonl);
  std::vector<std::size_t> line_numbers;
  for (std::size_t i = 0; i < all_lines.size(); ++i) {
    if (all_lines[i].find_first_not_of(" \t") != std::string_view::npos) {
      line_numbers.push_back(i + 1);
    }
  }
  std::vector<CaptionRecord> records(line_numbers.size());
  parallel_for(line_numbers.size(), threads, [&](std::size_t i) {
    records[i] = parse_record(all_lines[line_numbers[i] - 1], line_numbers[i]);
  });
  if (records.empty()) throw DataError("empty corpus");
  std::unordered_map<std::string_view, std::size_t> seen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto [it, inserted] = seen.emplace(records[i].caption_id, line_numbers[i]);
    if (!inserted) {
      throw DataError("line " + std::to_string(line_numbers[i]) + ": duplicate caption_id '" +
                      records[i].caption_id + "' (first seen on line " +
                      std::to_string(it->second) + ")");
    }
  }
  return Corpus(std::move(records), std::move(labels));
}

Corpus load_corpus(const std::filesystem::path& path, std::optional<LabelSpace> labels,
                   int threads) {
  const std::string buffer = text::read_file(path);
  try {
    return parse_corpus(buffer, std::move(labels), threads);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& r : corpus.records()) {
    out += serialize_record(r);
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  text::write_file(path, serialize_corpus(corpus));
}

// --------------------------------------------------------------------- split

SplitAssignment::SplitAssignment(std::map<std::string, Side, std::less<>> sides,
                                 double train_fraction, std::uint64_t seed)
    : sides_(std::move(sides)), train_fraction_(train_fraction), seed_(seed) {}

std::optional<Side> SplitAssignment::side_of(std::string_view image_id) const {
  const auto it = sides_.find(image_id);
  if (it == sides_.end()) return std::nullopt;
  return it->second;
}

std::size_t SplitAssignment::train_images() const {
  return static_cast<std::size_t>(std::count_if(
      sides_.begin(), sides_.end(), [](const auto& kv) { return kv.second == Side::kTrain; }));
}

SplitAssignment grouped_split(std::span<const std::string> image_ids, double train_fraction,
                              std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ArgumentError("train fraction must lie in (0, 1)");
  }
  std::set<std::string> distinct(image_ids.begin(), image_ids.end());
  if (distinct.empty()) throw DataError("cannot split an empty corpus");
  if (distinct.size() < 2) {
    throw DataError("cannot split a corpus with a single image_id into train and test");
  }
  std::vector<std::pair<std::uint64_t, const std::string*>> keyed;
  keyed.reserve(distinct.size());
  for (const auto& id : distinct) keyed.emplace_back(derive_seed(seed, id), &id);
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : *a.second < *b.second;
  });
  const auto n = static_cast<long long>(distinct.size());
  const long long n_train =
      std::clamp(std::llround(train_fraction * static_cast<double>(n)), 1LL, n - 1);
  std::map<std::string, Side, std::less<>> sides;
  for (long long i = 0; i < n; ++i) {
    sides.emplace(*keyed[static_cast<std::size_t>(i)].second,
                  i < n_train ? Side::kTrain : Side::kTest);
  }
  return SplitAssignment(std::move(sides), train_fraction, seed);
}

SplitAssignment grouped_split(const Corpus& corpus, double train_fraction, std::uint64_t seed) {
  const auto ids = corpus.image_ids();
  return grouped_split(ids, train_fraction, seed);
}

std::string serialize_split(const SplitAssignment& split) {
  ojson obj;
  obj["format"] = "capgap.split";
  obj["version"] = 1;
  obj["seed"] = split.seed();
  obj["train_fraction"] = split.train_fraction();
  ojson train = ojson::array();
  ojson test = ojson::array();
  for (const auto& [id, side] : split.sides()) {
    (side == Side::kTrain ? train : test).push_back(id);
  }
  obj["train"] = std::move(train);
  obj["test"] = std::move(test);
  return obj.dump(1) + "\n";
}

SplitAssignment parse_split(std::string_view json) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(json);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("malformed split file: ") + e.what());
  }
  if (!obj.is_object() || obj.value("format", "") != "capgap.split") {
    throw DataError("not a capgap split file");
  }
  if (obj.value("version", 0) != 1) throw DataError("unsupported split file version");
  std::map<std::string, Side, std::less<>> sides;
  try {
    for (const auto& id : obj.at("train")) {
      if (!sides.emplace(id.get<std::string>(), Side::kTrain).second) {
        throw DataError("split file lists image_id '" + id.get<std::string>() + "' twice");
      }
    }
    for (const auto& id : obj.at("test")) {
      if (!sides.emplace(id.get<std::string>(), Side::kTest).second) {
        throw DataError("split file lists image_id '" + id.get<std::string>() + "' twice");
      }
    }
    return SplitAssignment(std::move(sides), obj.at("train_fraction").get<double>(),
                           obj.at("seed").get<std::uint64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed split file: ") + e.what());
  }
}

void save_split(const SplitAssignment& split, const std::filesystem::path& path) {
  text::write_file(path, serialize_split(split));
}

SplitAssignment load_split(const std::filesystem::path& path) {
  try {
    return parse_split(text::read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<std::size_t> records_on_side(const Corpus& corpus, const SplitAssignment& split,
                                         Side side) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& r = corpus.records()[i];
    const auto s = split.side_of(r.image_id);
    if (!s) throw DataError("image_id '" + r.image_id + "' is not covered by the split");
    if (*s == side) out.push_back(i);
  }
  return out;
}

Corpus make_four_way(const Corpus& corpus, std::span<const CaptionRecord> originals,
                     const std::string& original_label) {
  if (originals.empty()) throw DataError("originals set is empty");
  LabelSpace labels = corpus.labels().extended(original_label);
  std::vector<CaptionRecord> records = corpus.records();
  records.reserve(records.size() + originals.size());
  for (auto r : originals) {
    r.source_label = original_label;
    records.push_back(std::move(r));
  }
  return Corpus(std::move(records), std::move(labels));
}

}  // namespace capgap
