#include "capgap/lexicon.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <tuple>

#include "capgap/embedded_data.hpp"
#include "capgap/errors.hpp"
#include "capgap/parallel.hpp"
#include "capgap/text.hpp"
#include "json.hpp"

namespace capgap {

using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------- term lists

TermList parse_lexicon_file(std::string_view contents, std::string_view fallback_name) {
  TermList list{std::string(fallback_name), "unversioned", parse_term_list(contents)};
  const auto all = text::lines(contents);
  if (!all.empty() && all.front().starts_with("#capgap-lexicon")) {
    const auto fields = text::split_whitespace(all.front());
    if (fields.size() >= 2) list.name = fields[1];
    if (fields.size() >= 3) list.version = fields[2];
  }
  return list;
}

TermList load_lexicon_file(const std::filesystem::path& path) {
  return parse_lexicon_file(text::read_file(path), path.stem().string());
}

namespace {

std::size_t longest_entry(const TermSet& terms) {
  std::size_t best = 1;
  for (const auto& t : terms) {
    best = std::max<std::size_t>(best, std::count(t.begin(), t.end(), ' ') + 1);
  }
  return best;
}

std::string window(std::span<const std::string> tokens, std::size_t start, std::size_t len) {
  std::string out = tokens[start];
  for (std::size_t j = 1; j < len; ++j) {
    out += ' ';
    out += tokens[start + j];
  }
  return out;
}

std::string list_version(const TermList& l) { return l.name + " " + l.version; }

}  // namespace

// ------------------------------------------------------------ PhraseLexicon

PhraseLexicon::PhraseLexicon(TermList basic, TermList nuanced, std::optional<TermList> modifiers)
    : basic_(std::move(basic)), nuanced_(std::move(nuanced)), modifiers_(std::move(modifiers)) {
  std::vector<std::string> overlap;
  for (const auto& t : basic_.terms) {
    if (nuanced_.terms.count(t)) overlap.push_back(t);
  }
  if (!overlap.empty()) {
    std::sort(overlap.begin(), overlap.end());
    throw DataError("basic and nuanced lists share entry '" + overlap.front() + "'");
  }
  max_len_ = std::max(longest_entry(basic_.terms), longest_entry(nuanced_.terms));
  if (modifiers_) max_len_ += 1;
}

LexCounts PhraseLexicon::count(std::string_view text) const {
  const auto tokens = tokenize(text);
  return count_tokens(tokens);
}

LexCounts PhraseLexicon::count_tokens(std::span<const std::string> tokens) const {
  LexCounts out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    bool matched = false;
    const std::size_t top = std::min(max_len_, tokens.size() - i);
    for (std::size_t len = top; len >= 1 && !matched; --len) {
      const auto w = window(tokens, i, len);
      bool nuanced = nuanced_.terms.count(w) > 0;
      if (!nuanced && len >= 2 && modifiers_ && modifiers_->terms.count(tokens[i])) {
        const auto rest = window(tokens, i + 1, len - 1);
        nuanced = basic_.terms.count(rest) > 0 || nuanced_.terms.count(rest) > 0;
      }
      const bool basic = !nuanced && basic_.terms.count(w) > 0;
      if (nuanced || basic) {
        out.matches.push_back({i, len, nuanced, w});
        ++(nuanced ? out.nuanced : out.basic);
        i += len;
        matched = true;
      }
    }
    if (!matched) ++i;
  }
  return out;
}

std::string PhraseLexicon::version() const {
  std::string v = list_version(basic_) + "+" + list_version(nuanced_);
  if (modifiers_) v += "+" + list_version(*modifiers_);
  return v;
}

const PhraseLexicon& default_color_lexicon() {
  static const PhraseLexicon lex(parse_lexicon_file(embedded::color_basic(), "color_basic"),
                                 parse_lexicon_file(embedded::color_nuanced(), "color_nuanced"),
                                 parse_lexicon_file(embedded::color_modifiers(), "color_modifiers"));
  return lex;
}

const PhraseLexicon& default_texture_lexicon() {
  static const PhraseLexicon lex(parse_lexicon_file(embedded::texture_basic(), "texture_basic"),
                                 parse_lexicon_file(embedded::texture_nuanced(), "texture_nuanced"));
  return lex;
}

// -------------------------------------------------------------- composition

bool CompositionFlags::get(std::size_t criterion) const {
  switch (criterion) {
    case 0: return spatial_layers;
    case 1: return subject_focus;
    case 2: return guiding_elements;
    case 3: return balance_symmetry;
  }
  throw ArgumentError("composition criterion index out of range");
}

void CompositionFlags::set(std::size_t criterion, bool value) {
  switch (criterion) {
    case 0: spatial_layers = value; return;
    case 1: subject_focus = value; return;
    case 2: guiding_elements = value; return;
    case 3: balance_symmetry = value; return;
  }
  throw ArgumentError("composition criterion index out of range");
}

CompositionLexicon::CompositionLexicon(std::array<TermList, 4> lists) : lists_(std::move(lists)) {
  for (const auto& l : lists_) max_len_ = std::max(max_len_, longest_entry(l.terms));
}

CompositionFlags CompositionLexicon::flags(std::string_view text) const {
  const auto tokens = tokenize(text);
  return flags_tokens(tokens);
}

CompositionFlags CompositionLexicon::flags_tokens(std::span<const std::string> tokens) const {
  CompositionFlags f;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::size_t top = std::min(max_len_, tokens.size() - i);
    for (std::size_t len = 1; len <= top; ++len) {
      const auto w = window(tokens, i, len);
      for (std::size_t c = 0; c < lists_.size(); ++c) {
        if (!f.get(c) && lists_[c].terms.count(w)) f.set(c, true);
      }
    }
  }
  return f;
}

std::string CompositionLexicon::version() const {
  std::string v;
  for (const auto& l : lists_) {
    if (!v.empty()) v += '+';
    v += list_version(l);
  }
  return v;
}

const CompositionLexicon& default_composition_lexicon() {
  static const CompositionLexicon lex({
      parse_lexicon_file(embedded::composition_spatial_layers(), "composition_spatial_layers"),
      parse_lexicon_file(embedded::composition_subject_focus(), "composition_subject_focus"),
      parse_lexicon_file(embedded::composition_guiding_elements(), "composition_guiding_elements"),
      parse_lexicon_file(embedded::composition_balance_symmetry(), "composition_balance_symmetry"),
  });
  return lex;
}

// -------------------------------------------------------------------- stats

namespace {

double ratio(std::int64_t num, std::int64_t den, double scale) {
  return den == 0 ? std::nan("") : scale * static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double TermColumnStats::pct_with_basic() const { return ratio(with_basic, n, 100.0); }
double TermColumnStats::pct_with_nuanced() const { return ratio(with_nuanced, n, 100.0); }
double TermColumnStats::avg_basic() const { return ratio(total_basic, n, 1.0); }
double TermColumnStats::avg_nuanced() const { return ratio(total_nuanced, n, 1.0); }
double CompositionStats::pct(std::size_t criterion) const {
  return ratio(flagged.at(criterion), n, 100.0);
}

bool LexiconReport::has_color() const {
  return !per_label.empty() && per_label.front().color.has_value();
}
bool LexiconReport::has_texture() const {
  return !per_label.empty() && per_label.front().texture.has_value();
}
bool LexiconReport::has_composition() const {
  return !per_label.empty() && per_label.front().composition.has_value();
}

LexiconReport corpus_stats(const Corpus& corpus, const LexiconSections& sections,
                           const PhraseLexicon& colors, const PhraseLexicon& textures,
                           const CompositionLexicon& composition, int threads) {
  struct PerCaption {
    LexCounts color;
    LexCounts texture;
    CompositionFlags flags;
  };
  std::vector<PerCaption> per(corpus.size());
  parallel_for(corpus.size(), threads, [&](std::size_t i) {
    const auto tokens = tokenize(corpus.records()[i].text);
    if (sections.colors) per[i].color = colors.count_tokens(tokens);
    if (sections.textures) per[i].texture = textures.count_tokens(tokens);
    if (sections.composition) per[i].flags = composition.flags_tokens(tokens);
  });

  LexiconReport report;
  report.source = "dictionary";
  if (sections.colors) report.versions["color"] = colors.version();
  if (sections.textures) report.versions["texture"] = textures.version();
  if (sections.composition) report.versions["composition"] = composition.version();
  for (const auto& label : corpus.labels().labels()) {
    LabelLexiconStats s;
    s.label = label;
    if (sections.colors) s.color = TermColumnStats{};
    if (sections.textures) s.texture = TermColumnStats{};
    if (sections.composition) s.composition = CompositionStats{};
    report.per_label.push_back(std::move(s));
  }
  auto add = [](TermColumnStats& t, const LexCounts& c) {
    ++t.n;
    t.total_basic += c.basic;
    t.total_nuanced += c.nuanced;
    t.with_basic += c.basic > 0;
    t.with_nuanced += c.nuanced > 0;
  };
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto& s = report.per_label[corpus.label_index(i)];
    if (s.color) add(*s.color, per[i].color);
    if (s.texture) add(*s.texture, per[i].texture);
    if (s.composition) {
      ++s.composition->n;
      for (std::size_t c = 0; c < 4; ++c) s.composition->flagged[c] += per[i].flags.get(c);
    }
  }
  return report;
}

// ------------------------------------------------------------ report io/csv

namespace {

ojson term_stats_json(const TermColumnStats& t) {
  ojson o;
  o["n"] = t.n;
  o["total_basic"] = t.total_basic;
  o["total_nuanced"] = t.total_nuanced;
  o["with_basic"] = t.with_basic;
  o["with_nuanced"] = t.with_nuanced;
  auto num = [](double v) { return std::isnan(v) ? ojson(nullptr) : ojson(v); };
  o["pct_with_basic"] = num(t.pct_with_basic());
  o["pct_with_nuanced"] = num(t.pct_with_nuanced());
  o["avg_basic"] = num(t.avg_basic());
  o["avg_nuanced"] = num(t.avg_nuanced());
  return o;
}

TermColumnStats term_stats_from(const nlohmann::json& o) {
  TermColumnStats t;
  t.n = o.at("n").get<std::int64_t>();
  t.total_basic = o.at("total_basic").get<std::int64_t>();
  t.total_nuanced = o.at("total_nuanced").get<std::int64_t>();
  t.with_basic = o.at("with_basic").get<std::int64_t>();
  t.with_nuanced = o.at("with_nuanced").get<std::int64_t>();
  if (t.with_basic > t.n || t.with_nuanced > t.n || t.n < 0) {
    throw DataError("lexicon stats: caption counts are inconsistent");
  }
  return t;
}

std::string fixed(double v, int digits) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Appends "highest" and "lowest" rows: for every numeric column, the label
// with the largest / smallest value (first label wins ties).
void extremes_rows(std::string& out, const std::vector<std::string>& labels,
                   const std::vector<std::vector<double>>& columns) {
  for (const bool high : {true, false}) {
    out += high ? "highest" : "lowest";
    for (std::size_t c = 0; c < columns.size(); ++c) {
      std::optional<std::size_t> best;
      for (std::size_t l = 0; l < labels.size(); ++l) {
        const double v = columns[c][l];
        if (std::isnan(v)) continue;
        if (!best || (high ? v > columns[c][*best] : v < columns[c][*best])) best = l;
      }
      out += ',';
      if (best) out += labels[*best];
    }
    out += '\n';
  }
}

}  // namespace

std::string LexiconReport::to_json() const {
  ojson o;
  o["format"] = "capgap.lexicon";
  o["version"] = 1;
  o["source"] = source;
  ojson v = ojson::object();
  for (const auto& [k, val] : versions) v[k] = val;
  o["versions"] = std::move(v);
  ojson labels = ojson::array();
  for (const auto& s : per_label) {
    ojson l;
    l["label"] = s.label;
    l["color"] = s.color ? term_stats_json(*s.color) : ojson(nullptr);
    l["texture"] = s.texture ? term_stats_json(*s.texture) : ojson(nullptr);
    if (s.composition) {
      ojson c;
      c["n"] = s.composition->n;
      for (std::size_t k = 0; k < 4; ++k) {
        c[std::string(kCompositionCriteria[k])] = s.composition->flagged[k];
      }
      l["composition"] = std::move(c);
    } else {
      l["composition"] = nullptr;
    }
    labels.push_back(std::move(l));
  }
  o["per_label"] = std::move(labels);
  return o.dump(1);
}

LexiconReport LexiconReport::from_json(std::string_view json) {
  try {
    const auto o = nlohmann::json::parse(json);
    if (o.value("format", "") != "capgap.lexicon") throw DataError("not a capgap lexicon report");
    LexiconReport r;
    r.source = o.at("source").get<std::string>();
    for (const auto& [k, val] : o.at("versions").items()) r.versions[k] = val.get<std::string>();
    for (const auto& l : o.at("per_label")) {
      LabelLexiconStats s;
      s.label = l.at("label").get<std::string>();
      if (!l.at("color").is_null()) s.color = term_stats_from(l.at("color"));
      if (!l.at("texture").is_null()) s.texture = term_stats_from(l.at("texture"));
      if (!l.at("composition").is_null()) {
        CompositionStats c;
        c.n = l.at("composition").at("n").get<std::int64_t>();
        for (std::size_t k = 0; k < 4; ++k) {
          c.flagged[k] = l.at("composition").at(std::string(kCompositionCriteria[k])).get<std::int64_t>();
          if (c.flagged[k] > c.n) throw DataError("lexicon stats: composition counts exceed n");
        }
        s.composition = c;
      }
      r.per_label.push_back(std::move(s));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed lexicon report: ") + e.what());
  }
}

void LexiconReport::save(const std::filesystem::path& path) const {
  text::write_file(path, to_json() + "\n");
}

LexiconReport LexiconReport::load(const std::filesystem::path& path) {
  try {
    return from_json(text::read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string LexiconReport::table4_csv() const {
  std::string out = "label";
  std::vector<std::string> labels;
  std::vector<std::vector<double>> columns;
  std::vector<std::vector<std::string>> cells(per_label.size());
  for (const auto& s : per_label) labels.push_back(s.label);

  auto section = [&](const char* name, auto get) {
    static constexpr const char* kSuffix[] = {"basic_total", "basic_pct", "basic_avg",
                                              "nuanced_total", "nuanced_pct", "nuanced_avg"};
    for (const char* suffix : kSuffix) out += std::string(",") + name + "_" + suffix;
    for (std::size_t col = 0; col < 6; ++col) columns.emplace_back(per_label.size());
    const std::size_t base = columns.size() - 6;
    for (std::size_t l = 0; l < per_label.size(); ++l) {
      const TermColumnStats& t = *get(per_label[l]);
      const double vals[] = {static_cast<double>(t.total_basic), t.pct_with_basic(), t.avg_basic(),
                             static_cast<double>(t.total_nuanced), t.pct_with_nuanced(),
                             t.avg_nuanced()};
      for (std::size_t col = 0; col < 6; ++col) columns[base + col][l] = vals[col];
      cells[l].push_back(std::to_string(t.total_basic));
      cells[l].push_back(fixed(t.pct_with_basic(), 2));
      cells[l].push_back(fixed(t.avg_basic(), 4));
      cells[l].push_back(std::to_string(t.total_nuanced));
      cells[l].push_back(fixed(t.pct_with_nuanced(), 2));
      cells[l].push_back(fixed(t.avg_nuanced(), 4));
    }
  };
  if (has_color()) section("color", [](const LabelLexiconStats& s) { return &*s.color; });
  if (has_texture()) section("texture", [](const LabelLexiconStats& s) { return &*s.texture; });
  out += ",n\n";
  for (std::size_t l = 0; l < per_label.size(); ++l) {
    out += labels[l];
    for (const auto& c : cells[l]) out += "," + c;
    const auto& s = per_label[l];
    const auto n = s.color ? s.color->n : (s.texture ? s.texture->n : 0);
    out += "," + std::to_string(n) + "\n";
  }
  // n column has no extreme marks.
  std::string marks;
  extremes_rows(marks, labels, columns);
  for (const auto& line : text::lines(marks)) {
    if (!line.empty()) out += std::string(line) + ",\n";
  }
  return out;
}

std::string LexiconReport::table5_csv() const {
  std::string out = "label";
  for (auto c : kCompositionCriteria) out += "," + std::string(c) + "_pct";
  out += ",n\n";
  std::vector<std::string> labels;
  std::vector<std::vector<double>> columns(4, std::vector<double>(per_label.size()));
  for (std::size_t l = 0; l < per_label.size(); ++l) {
    const auto& s = per_label[l];
    labels.push_back(s.label);
    out += s.label;
    const auto c = s.composition.value_or(CompositionStats{});
    for (std::size_t k = 0; k < 4; ++k) {
      columns[k][l] = c.pct(k);
      out += "," + fixed(c.pct(k), 2);
    }
    out += "," + std::to_string(c.n) + "\n";
  }
  std::string marks;
  extremes_rows(marks, labels, columns);
  for (const auto& line : text::lines(marks)) {
    if (!line.empty()) out += std::string(line) + ",\n";
  }
  return out;
}

// ---------------------------------------------------------------- judgments

std::string_view to_string(JudgmentKind kind) {
  switch (kind) {
    case JudgmentKind::kDetailRank: return "detail_rank";
    case JudgmentKind::kTexture: return "texture";
    case JudgmentKind::kComposition: return "composition";
  }
  return "detail_rank";
}

namespace {

struct ItemRef {
  const CaptionRecord* caption = nullptr;
  std::string suffix;  // empty for caption items
};

std::optional<ItemRef> resolve_item(const Corpus& corpus, std::string_view id) {
  if (const auto* r = corpus.find(id)) return ItemRef{r, ""};
  const auto hash = id.rfind('#');
  if (hash == std::string_view::npos) return std::nullopt;
  if (const auto* r = corpus.find(id.substr(0, hash))) {
    return ItemRef{r, std::string(id.substr(hash + 1))};
  }
  return std::nullopt;
}

Judgment parse_judgment(std::string_view line, std::size_t line_number, std::size_t k) {
  const auto where = "line " + std::to_string(line_number) + ": ";
  nlohmann::json o;
  try {
    o = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(where + "malformed JSON (" + e.what() + ")");
  }
  if (!o.is_object()) throw DataError(where + "record is not a JSON object");
  auto str = [&](const char* key) {
    if (!o.contains(key) || !o[key].is_string()) {
      throw DataError(where + "missing or non-string field '" + key + "'");
    }
    return o[key].get<std::string>();
  };
  Judgment j;
  j.item_id = str("item_id");
  j.judge_tag = str("judge_tag");
  const auto kind = str("kind");
  if (!o.contains("value")) throw DataError(where + "missing field 'value'");
  const auto& v = o["value"];
  if (kind == "detail_rank") {
    j.kind = JudgmentKind::kDetailRank;
    if (!v.is_number_integer()) throw DataError(where + "detail_rank value must be an integer");
    const auto r = v.get<std::int64_t>();
    if (r < 1 || r > static_cast<std::int64_t>(k)) {
      throw DataError(where + "rank " + std::to_string(r) + " outside 1.." + std::to_string(k));
    }
    j.rank = static_cast<int>(r);
  } else if (kind == "texture") {
    j.kind = JudgmentKind::kTexture;
    if (!v.is_object() || !v.contains("basic") || !v.contains("nuanced") ||
        !v["basic"].is_number_integer() || !v["nuanced"].is_number_integer()) {
      throw DataError(where + "texture value must be {\"basic\": int, \"nuanced\": int}");
    }
    j.basic = v["basic"].get<std::int64_t>();
    j.nuanced = v["nuanced"].get<std::int64_t>();
    if (j.basic < 0 || j.nuanced < 0) throw DataError(where + "texture counts must be >= 0");
  } else if (kind == "composition") {
    j.kind = JudgmentKind::kComposition;
    if (!v.is_object()) throw DataError(where + "composition value must be an object");
    for (std::size_t c = 0; c < 4; ++c) {
      const std::string key(kCompositionCriteria[c]);
      if (!v.contains(key) || !v[key].is_boolean()) {
        throw DataError(where + "composition value needs boolean '" + key + "'");
      }
      j.composition.set(c, v[key].get<bool>());
    }
  } else {
    throw DataError(where + "unknown judgment kind '" + kind + "'");
  }
  return j;
}

}  // namespace

std::vector<Judgment> parse_judgments(std::string_view jsonl, const Corpus& corpus) {
  const std::size_t k = corpus.labels().size();
  std::vector<Judgment> out;
  std::set<std::pair<std::string, JudgmentKind>> seen;
  using GroupKey = std::tuple<std::string, PromptTier, Variant, std::string>;
  std::map<GroupKey, std::map<int, std::string>> groups;
  const auto all = text::lines(jsonl);
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].find_first_not_of(" \t") == std::string_view::npos) continue;
    const auto where = "line " + std::to_string(i + 1) + ": ";
    auto j = parse_judgment(all[i], i + 1, k);
    const auto ref = resolve_item(corpus, j.item_id);
    if (!ref) throw DataError(where + "unknown id '" + j.item_id + "'");
    if (!seen.emplace(j.item_id, j.kind).second) {
      throw DataError(where + "duplicate judgment (" + j.item_id + ", " +
                      std::string(to_string(j.kind)) + ")");
    }
    if (j.kind == JudgmentKind::kDetailRank) {
      const GroupKey key{ref->caption->image_id, ref->caption->prompt_tier, ref->caption->variant,
                         ref->suffix};
      const auto [it, inserted] = groups[key].emplace(j.rank, j.item_id);
      if (!inserted) {
        throw DataError(where + "rank " + std::to_string(j.rank) + " given to both '" + it->second +
                        "' and '" + j.item_id + "' in one sibling group");
      }
    }
    out.push_back(std::move(j));
  }
  if (out.empty()) throw DataError("judgment file is empty");
  return out;
}

std::vector<Judgment> load_judgments(const std::filesystem::path& path, const Corpus& corpus) {
  const auto buffer = text::read_file(path);
  try {
    return parse_judgments(buffer, corpus);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

double RankDistribution::percent(std::size_t label, std::size_t rank) const {
  const std::size_t k = classes();
  std::int64_t row = 0;
  for (std::size_t r = 0; r < k; ++r) row += counts[label * k + r];
  return ratio(counts[label * k + (rank - 1)], row, 100.0);
}

JudgmentSummary summarize_judgments(std::span<const Judgment> judgments, const Corpus& corpus) {
  const std::size_t k = corpus.labels().size();
  JudgmentSummary s;
  RankDistribution caption{"caption", corpus.labels().labels(), std::vector<std::int64_t>(k * k, 0)};
  RankDistribution image{"image", corpus.labels().labels(), std::vector<std::int64_t>(k * k, 0)};
  bool any_caption = false, any_image = false, any_texture = false, any_comp = false;
  std::set<std::string> tags;
  LexiconReport judged;
  for (const auto& label : corpus.labels().labels()) judged.per_label.push_back({label, {}, {}, {}});
  std::vector<TermColumnStats> tex(k);
  std::vector<CompositionStats> comp(k);
  for (const auto& j : judgments) {
    const auto ref = resolve_item(corpus, j.item_id);
    if (!ref) throw DataError("unknown id '" + j.item_id + "'");
    const std::size_t c = *corpus.labels().index_of(ref->caption->source_label);
    tags.insert(j.judge_tag);
    switch (j.kind) {
      case JudgmentKind::kDetailRank: {
        auto& dist = ref->suffix.empty() ? caption : image;
        (ref->suffix.empty() ? any_caption : any_image) = true;
        ++dist.counts[c * k + static_cast<std::size_t>(j.rank - 1)];
        break;
      }
      case JudgmentKind::kTexture:
        any_texture = true;
        ++tex[c].n;
        tex[c].total_basic += j.basic;
        tex[c].total_nuanced += j.nuanced;
        tex[c].with_basic += j.basic > 0;
        tex[c].with_nuanced += j.nuanced > 0;
        break;
      case JudgmentKind::kComposition:
        any_comp = true;
        ++comp[c].n;
        for (std::size_t q = 0; q < 4; ++q) comp[c].flagged[q] += j.composition.get(q);
        break;
    }
  }
  if (any_caption) s.ranks.push_back(std::move(caption));
  if (any_image) s.ranks.push_back(std::move(image));
  if (any_texture || any_comp) {
    std::string joined;
    for (const auto& t : tags) joined += (joined.empty() ? "" : "+") + t;
    judged.source = "judge:" + joined;
    for (std::size_t c = 0; c < k; ++c) {
      if (any_texture) judged.per_label[c].texture = tex[c];
      if (any_comp) judged.per_label[c].composition = comp[c];
    }
    s.judged = std::move(judged);
  }
  return s;
}

std::string JudgmentSummary::to_json() const {
  ojson o;
  o["format"] = "capgap.judgments";
  o["version"] = 1;
  ojson arr = ojson::array();
  for (const auto& d : ranks) {
    ojson r;
    r["items"] = d.items;
    r["labels"] = d.labels;
    ojson rows = ojson::array();
    for (std::size_t l = 0; l < d.classes(); ++l) {
      rows.push_back(std::vector<std::int64_t>(d.counts.begin() + l * d.classes(),
                                               d.counts.begin() + (l + 1) * d.classes()));
    }
    r["counts"] = std::move(rows);
    arr.push_back(std::move(r));
  }
  o["ranks"] = std::move(arr);
  o["judged"] = judged ? ojson::parse(judged->to_json()) : ojson(nullptr);
  return o.dump(1);
}

JudgmentSummary JudgmentSummary::from_json(std::string_view json) {
  try {
    const auto o = nlohmann::json::parse(json);
    if (o.value("format", "") != "capgap.judgments") throw DataError("not a capgap judgment summary");
    JudgmentSummary s;
    for (const auto& r : o.at("ranks")) {
      RankDistribution d;
      d.items = r.at("items").get<std::string>();
      d.labels = r.at("labels").get<std::vector<std::string>>();
      const auto& rows = r.at("counts");
      if (rows.size() != d.labels.size()) throw DataError("rank counts must be K x K");
      for (const auto& row : rows) {
        if (row.size() != d.labels.size()) throw DataError("rank counts must be K x K");
        for (const auto& v : row) d.counts.push_back(v.get<std::int64_t>());
      }
      s.ranks.push_back(std::move(d));
    }
    if (!o.at("judged").is_null()) s.judged = LexiconReport::from_json(o.at("judged").dump());
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed judgment summary: ") + e.what());
  }
}

std::string JudgmentSummary::ranks_csv() const {
  std::size_t k = 0;
  for (const auto& d : ranks) k = std::max(k, d.classes());
  std::string out = "items,label";
  for (std::size_t r = 1; r <= k; ++r) out += ",rank_" + std::to_string(r) + "_pct";
  out += ",n\n";
  for (const auto& d : ranks) {
    for (std::size_t l = 0; l < d.classes(); ++l) {
      out += d.items + "," + d.labels[l];
      std::int64_t n = 0;
      for (std::size_t r = 1; r <= d.classes(); ++r) {
        out += "," + fixed(d.percent(l, r), 2);
        n += d.counts[l * d.classes() + r - 1];
      }
      out += "," + std::to_string(n) + "\n";
    }
  }
  return out;
}

}  // namespace capgap
