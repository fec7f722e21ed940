#include "capgap/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <regex>
#include <set>

#include "capgap/errors.hpp"
#include "capgap/rng.hpp"
#include "capgap/text.hpp"
#include "json.hpp"

namespace capgap {

using ojson = nlohmann::ordered_json;

std::optional<ExportFormat> parse_export_format(std::string_view s) {
  if (s == "json") return ExportFormat::kJson;
  if (s == "csv") return ExportFormat::kCsv;
  if (s == "markdown" || s == "md") return ExportFormat::kMarkdown;
  return std::nullopt;
}

// --------------------------------------------------------------- references

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::optional<std::string> label_family(std::string_view label) {
  const auto l = lower(label);
  for (const char* f : {"claude", "gemini", "gpt", "qwen"}) {
    if (l.find(f) != std::string::npos) return std::string(f);
  }
  if (l.find("orig") != std::string::npos) return std::string("original");
  return std::nullopt;
}

std::optional<std::string> generator_family(std::string_view tag) {
  const auto l = lower(tag);
  if (l.find("flux") != std::string::npos) return "flux";
  if (l.find("xl") != std::string::npos) return "sdxl";
  for (const char* p : {"2.1", "2_1", "2-1", "21"}) {
    if (l.find(p) != std::string::npos) return "sd2.1";
  }
  for (const char* p : {"1.5", "1_5", "1-5", "15"}) {
    if (l.find(p) != std::string::npos) return "sd1.5";
  }
  return std::nullopt;
}

// family -> label index; empty if labels do not map one-to-one.
std::map<std::string, std::size_t> families(const LabelSpace& labels) {
  std::map<std::string, std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto f = label_family(labels.label(i));
    if (!f || !out.emplace(*f, i).second) return {};
  }
  return out;
}

std::set<std::string> family_set(const std::map<std::string, std::size_t>& fam) {
  std::set<std::string> s;
  for (const auto& [f, i] : fam) s.insert(f);
  return s;
}

using PerFamily = std::map<std::string, double>;

struct Row {
  double total;
  PerFamily per;
};

void value_check(std::vector<ReferenceCheck>& out, const std::string& section,
                 const std::string& row, double expected, double observed_fraction) {
  ReferenceCheck c;
  c.section = section;
  c.row = row;
  c.kind = "value";
  c.expected = expected;
  c.observed = 100.0 * observed_fraction;
  c.tolerance = kReferenceTolerance;
  c.pass = std::isfinite(c.observed) && std::abs(c.observed - expected) <= kReferenceTolerance;
  out.push_back(std::move(c));
}

// Checks total (overall or macro accuracy) and per-family accuracies.
void metrics_checks(std::vector<ReferenceCheck>& out, const std::string& section,
                    const Metrics& m, const Row& ref, bool macro_total) {
  const auto fam = families(m.labels());
  if (fam.empty()) return;
  std::set<std::string> want;
  for (const auto& [f, v] : ref.per) want.insert(f);
  if (family_set(fam) != want) return;
  value_check(out, section, macro_total ? "average" : "total", ref.total,
              macro_total ? m.macro_accuracy() : m.overall_accuracy());
  const auto acc = m.per_class_accuracy();
  for (const auto& [f, v] : ref.per) value_check(out, section, f, v, acc[fam.at(f)]);
}

const std::vector<Row>& table1_rows() {
  static const std::vector<Row> rows = {
      {99.76, {{"claude", 99.83}, {"gemini", 99.78}, {"gpt", 99.67}}},
      {99.85, {{"claude", 99.92}, {"gemini", 99.90}, {"qwen", 99.73}}},
      {99.53, {{"claude", 99.85}, {"gpt", 99.62}, {"qwen", 99.13}}},
      {99.60, {{"gemini", 99.73}, {"gpt", 99.80}, {"qwen", 99.53}}},
      {99.53, {{"claude", 99.62}, {"gemini", 99.65}, {"gpt", 99.57}, {"qwen", 99.30}}},
  };
  return rows;
}

Row cgg(double total, double c, double g, double gpt) {
  return {total, {{"claude", c}, {"gemini", g}, {"gpt", gpt}}};
}

std::optional<Row> transform_row(std::string_view name) {
  const auto n = lower(name);
  if (n == "strip_markdown") return cgg(99.71, 99.73, 99.62, 99.77);
  if (n == "strip_special_chars") return cgg(99.78, 99.78, 99.78, 99.77);
  if (n == "shuffle_words") return cgg(99.42, 99.43, 99.60, 99.23);
  if (n == "shuffle_letters") return cgg(34.49, 0.00, 100.00, 3.48);
  static const std::regex para(R"(paraphrase\D*([123])\D.*?(1\.5b|7b))");
  std::smatch m;
  const std::string s(n);
  if (!std::regex_search(s, m, para)) return std::nullopt;
  const int prompt = m[1].str()[0] - '0';
  const bool big = m[2].str() == "7b";
  static const Row rows[3][2] = {
      {cgg(95.59, 94.35, 95.45, 97.95), cgg(95.90, 92.68, 97.73, 97.30)},
      {cgg(97.28, 95.90, 97.78, 98.17), cgg(97.90, 96.43, 99.10, 98.17)},
      {cgg(96.31, 94.87, 96.50, 97.57), cgg(95.81, 90.97, 98.47, 98.02)},
  };
  return rows[prompt - 1][big ? 1 : 0];
}

void ordering_check(std::vector<ReferenceCheck>& out, const std::string& section,
                    const std::string& column, bool highest, const std::string& expected_family,
                    const std::vector<std::pair<std::string, double>>& values) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::isnan(values[i].second)) return;
    if (!best || (highest ? values[i].second > values[*best].second
                          : values[i].second < values[*best].second)) {
      best = i;
    }
  }
  if (!best) return;
  ReferenceCheck c;
  c.section = section;
  c.row = column + (highest ? " highest" : " lowest");
  c.kind = "ordering";
  c.expected = std::nan("");
  c.observed = values[*best].second;
  c.expected_label = expected_family;
  c.observed_label = values[*best].first;
  c.pass = c.observed_label == expected_family;
  out.push_back(std::move(c));
}

void lexicon_checks(std::vector<ReferenceCheck>& out, const std::string& section,
                    const LexiconReport& lex) {
  std::map<std::string, const LabelLexiconStats*> fam;
  for (const auto& s : lex.per_label) {
    const auto f = label_family(s.label);
    if (!f || !fam.emplace(*f, &s).second) return;
  }
  std::set<std::string> have;
  for (const auto& [f, p] : fam) have.insert(f);
  if (have != std::set<std::string>{"claude", "gemini", "gpt"}) return;
  auto column = [&](auto get) {
    std::vector<std::pair<std::string, double>> v;
    for (const auto& [f, s] : fam) v.emplace_back(f, get(*s));
    return v;
  };
  struct TermCol {
    const char* name;
    double (*get)(const TermColumnStats&);
  };
  static const TermCol cols[] = {
      {"basic_total", [](const TermColumnStats& t) { return static_cast<double>(t.total_basic); }},
      {"nuanced_total", [](const TermColumnStats& t) { return static_cast<double>(t.total_nuanced); }},
      {"basic_pct", [](const TermColumnStats& t) { return t.pct_with_basic(); }},
      {"nuanced_pct", [](const TermColumnStats& t) { return t.pct_with_nuanced(); }},
      {"basic_avg", [](const TermColumnStats& t) { return t.avg_basic(); }},
      {"nuanced_avg", [](const TermColumnStats& t) { return t.avg_nuanced(); }},
  };
  if (lex.has_color()) {
    for (const auto& col : cols) {
      const auto v = column([&](const LabelLexiconStats& s) { return col.get(*s.color); });
      ordering_check(out, section, std::string("color ") + col.name, true, "gemini", v);
      ordering_check(out, section, std::string("color ") + col.name, false, "gpt", v);
    }
  }
  if (lex.has_texture()) {
    for (const auto& col : cols) {
      const auto v = column([&](const LabelLexiconStats& s) { return col.get(*s.texture); });
      const bool basic = std::string_view(col.name).starts_with("basic");
      ordering_check(out, section, std::string("texture ") + col.name, true, "gemini", v);
      ordering_check(out, section, std::string("texture ") + col.name, false,
                     basic ? "claude" : "gpt", v);
    }
  }
  if (lex.has_composition()) {
    static const char* lowest[] = {"gpt", "gpt", "gemini", "gemini"};
    for (std::size_t k = 0; k < 4; ++k) {
      const auto v = column([&](const LabelLexiconStats& s) { return s.composition->pct(k); });
      const std::string name = "composition " + std::string(kCompositionCriteria[k]);
      ordering_check(out, section, name, true, "claude", v);
      ordering_check(out, section, name, false, lowest[k], v);
    }
  }
}

}  // namespace

std::vector<ReferenceCheck> reference_checks(const ReportInputs& in) {
  std::vector<ReferenceCheck> out;
  if (in.text) {
    for (const auto& row : table1_rows()) metrics_checks(out, "table1", *in.text, row, false);
  }
  static const std::map<std::string, double> image_refs = {
      {"flux", 46.05}, {"sdxl", 45.69}, {"sd2.1", 44.76}, {"sd1.5", 41.67}};
  for (const auto& img : in.images) {
    const auto g = generator_family(img.name);
    if (!g || families(img.metrics.labels()).empty()) continue;
    value_check(out, "image_features", *g + " total", image_refs.at(*g),
                img.metrics.overall_accuracy());
  }
  if (in.four_way) {
    metrics_checks(out, "four_way", *in.four_way,
                   {51.84, {{"claude", 50.83}, {"gemini", 56.31}, {"gpt", 38.30}, {"original", 82.11}}},
                   false);
  }
  if (in.keyword) {
    metrics_checks(out, "keyword_text", in.keyword->keyword_text, cgg(92.86, 88.73, 95.37, 94.48),
                   false);
    if (in.keyword->keyword_image) {
      metrics_checks(out, "keyword_image", *in.keyword->keyword_image,
                     cgg(43.22, 41.56, 46.67, 41.34), false);
    }
  }
  for (const auto& t : in.transforms) {
    if (const auto row = transform_row(t.name)) {
      metrics_checks(out, "table3 " + t.name, t.metrics, *row, false);
    }
  }
  for (const auto& p : in.probes) {
    const auto n = lower(p.name);
    if (n.find("clip") != std::string::npos) {
      metrics_checks(out, "probe " + p.name, p.metrics, cgg(94.14, 94.47, 95.1, 92.85), true);
    } else if (n.find("t5") != std::string::npos) {
      metrics_checks(out, "probe " + p.name, p.metrics, cgg(99.74, 99.73, 99.82, 99.67), true);
    }
  }
  if (in.match) {
    metrics_checks(out, "match", in.match->evaluation.metrics, cgg(53.01, 54.40, 55.00, 49.63), true);
  }
  if (in.lexicon) lexicon_checks(out, "lexicon " + in.lexicon->source, *in.lexicon);
  if (in.judgments) {
    for (const auto& d : in.judgments->ranks) {
      if (d.items != "caption") continue;
      std::map<std::string, std::size_t> fam;
      for (std::size_t i = 0; i < d.labels.size(); ++i) {
        if (const auto f = label_family(d.labels[i])) fam.emplace(*f, i);
      }
      const std::pair<const char*, std::pair<std::size_t, double>> refs[] = {
          {"gemini", {1, 84.27}}, {"claude", {2, 59.16}}, {"gpt", {3, 71.96}}};
      if (d.classes() != 3) continue;
      for (const auto& [f, rr] : refs) {
        if (!fam.count(f)) continue;
        value_check(out, "detail_rank", std::string(f) + " rank " + std::to_string(rr.first),
                    rr.second, d.percent(fam.at(f), rr.first) / 100.0);
      }
    }
    if (in.judgments->judged) lexicon_checks(out, "judged " + in.judgments->judged->source, *in.judgments->judged);
  }
  return out;
}

// ------------------------------------------------------------------ assembly

namespace {

void require_labels(const LabelSpace& want, const Metrics& m, const std::string& what) {
  if (!(m.labels() == want)) {
    throw DataError("label space of " + what + " (K=" + std::to_string(m.classes()) +
                    ") does not match the text section (K=" + std::to_string(want.size()) + ")");
  }
}

std::string image_name(const NamedMetrics& m) {
  if (!m.name.empty()) return m.name;
  const auto it = m.metrics.context().find("generator_tag");
  return it == m.metrics.context().end() ? "image" : it->second;
}

ojson metrics_json(const Metrics& m) { return ojson::parse(m.to_json()); }

ojson named_json(const std::vector<NamedMetrics>& list) {
  ojson arr = ojson::array();
  for (const auto& n : list) arr.push_back(ojson{{"name", n.name}, {"metrics", metrics_json(n.metrics)}});
  return arr;
}

ojson num(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ojson inputs_json(const ReportInputs& in) {
  ojson o;
  o["text"] = metrics_json(*in.text);
  o["images"] = named_json(in.images);
  o["four_way"] = in.four_way ? metrics_json(*in.four_way) : ojson(nullptr);
  o["keyword"] = in.keyword ? ojson::parse(in.keyword->to_json()) : ojson(nullptr);
  o["transforms"] = named_json(in.transforms);
  o["probes"] = named_json(in.probes);
  o["match"] = in.match ? ojson::parse(in.match->to_json()) : ojson(nullptr);
  o["lexicon"] = in.lexicon ? ojson::parse(in.lexicon->to_json()) : ojson(nullptr);
  o["judgments"] = in.judgments ? ojson::parse(in.judgments->to_json()) : ojson(nullptr);
  ojson b = ojson::object();
  for (const auto& [k, v] : in.baselines) b[k] = v;
  o["baselines"] = std::move(b);
  return o;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

GapReport GapReport::assemble(ReportInputs in) {
  if (!in.text) throw DataError("report needs text-side metrics");
  if (in.images.empty()) throw DataError("report needs at least one image-side metrics file");
  const auto& labels = in.text->labels();
  std::set<std::string> names;
  for (auto& img : in.images) {
    img.name = image_name(img);
    require_labels(labels, img.metrics, "image metrics '" + img.name + "'");
    if (!names.insert(img.name).second) throw DataError("duplicate generator '" + img.name + "'");
  }
  if (in.four_way) {
    const auto& fl = in.four_way->labels().labels();
    if (fl.size() != labels.size() + 1 ||
        !std::equal(labels.labels().begin(), labels.labels().end(), fl.begin())) {
      throw DataError("four-way label space must extend the text label space by one label");
    }
  }
  if (in.keyword) require_labels(labels, in.keyword->raw_text, "keyword comparison");
  for (const auto& t : in.transforms) require_labels(labels, t.metrics, "transform '" + t.name + "'");
  for (const auto& p : in.probes) require_labels(labels, p.metrics, "probe '" + p.name + "'");
  if (in.match) require_labels(labels, in.match->evaluation.metrics, "match");
  if (in.lexicon) {
    std::vector<std::string> ll;
    for (const auto& s : in.lexicon->per_label) ll.push_back(s.label);
    if (ll != labels.labels()) throw DataError("lexicon labels do not match the text label space");
  }
  if (in.judgments) {
    for (const auto& d : in.judgments->ranks) {
      if (d.labels != labels.labels()) {
        throw DataError("judgment labels do not match the text label space");
      }
    }
  }
  for (const auto& [k, v] : in.baselines) {
    if (!std::isfinite(v)) throw DataError("baseline '" + k + "' is not finite");
  }

  GapReport r(std::move(in));
  double best = -1.0;
  for (const auto& img : r.inputs_.images) {
    const double a = img.metrics.overall_accuracy();
    if (a > best) {
      best = a;
      r.best_generator_ = img.name;
    }
  }
  r.digest_ = hex64(fnv1a64(inputs_json(r.inputs_).dump()));
  r.checks_ = capgap::reference_checks(r.inputs_);
  return r;
}

double GapReport::image_accuracy() const {
  for (const auto& img : inputs_.images) {
    if (img.name == best_generator_) return img.metrics.overall_accuracy();
  }
  return std::nan("");
}

std::vector<std::pair<std::string, double>> GapReport::generator_gaps() const {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& img : inputs_.images) {
    out.emplace_back(img.name, text_accuracy() - img.metrics.overall_accuracy());
  }
  return out;
}

// ----------------------------------------------------------------------- json

std::string GapReport::to_json() const {
  ojson o;
  o["format"] = "capgap.report";
  o["version"] = 1;
  o["labels"] = labels().labels();
  o["chance"] = chance();
  o["text_accuracy"] = num(text_accuracy());
  o["image_accuracy"] = num(image_accuracy());
  o["best_generator"] = best_generator_;
  o["gap"] = num(gap());
  ojson gg = ojson::object();
  for (const auto& [g, v] : generator_gaps()) gg[g] = num(v);
  o["generator_gaps"] = std::move(gg);
  o["config_digest"] = digest_;
  o["sections"] = inputs_json(inputs_);
  ojson checks = ojson::array();
  for (const auto& c : checks_) {
    ojson j;
    j["section"] = c.section;
    j["row"] = c.row;
    j["kind"] = c.kind;
    if (c.kind == "value") {
      j["expected"] = c.expected;
      j["observed"] = num(c.observed);
      j["tolerance"] = c.tolerance;
    } else {
      j["expected_label"] = c.expected_label;
      j["observed_label"] = c.observed_label;
    }
    j["pass"] = c.pass;
    checks.push_back(std::move(j));
  }
  o["reference_checks"] = std::move(checks);
  return o.dump(1);
}

GapReport GapReport::from_json(std::string_view json) {
  try {
    const auto o = nlohmann::json::parse(json);
    if (o.value("format", "") != "capgap.report") throw DataError("not a capgap report");
    if (o.value("version", 0) != 1) throw DataError("unsupported report version");
    const auto& s = o.at("sections");
    ReportInputs in;
    in.text = Metrics::from_json(s.at("text").dump());
    auto named = [](const nlohmann::json& arr) {
      std::vector<NamedMetrics> out;
      for (const auto& n : arr) {
        out.push_back({n.at("name").get<std::string>(), Metrics::from_json(n.at("metrics").dump())});
      }
      return out;
    };
    in.images = named(s.at("images"));
    if (!s.at("four_way").is_null()) in.four_way = Metrics::from_json(s.at("four_way").dump());
    if (!s.at("keyword").is_null()) in.keyword = KeywordComparison::from_json(s.at("keyword").dump());
    in.transforms = named(s.at("transforms"));
    in.probes = named(s.at("probes"));
    if (!s.at("match").is_null()) in.match = MatchReport::from_json(s.at("match").dump());
    if (!s.at("lexicon").is_null()) in.lexicon = LexiconReport::from_json(s.at("lexicon").dump());
    if (!s.at("judgments").is_null()) {
      in.judgments = JudgmentSummary::from_json(s.at("judgments").dump());
    }
    for (const auto& [k, v] : s.at("baselines").items()) in.baselines[k] = v.get<double>();
    auto r = assemble(std::move(in));
    if (o.contains("config_digest") && o.at("config_digest").get<std::string>() != r.digest_) {
      throw DataError("report config digest does not match its sections");
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
}

// -------------------------------------------------------------------- export

namespace {

std::string pct(double fraction) {
  if (!std::isfinite(fraction)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
  return buf;
}

std::string fmt(double v, const char* f = "%.4f") {
  if (!std::isfinite(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// name,total,<labels...>,macro,n_test
std::string metrics_csv(const std::vector<std::pair<std::string, const Metrics*>>& rows,
                        const LabelSpace& labels) {
  std::string out = "name,total";
  for (const auto& l : labels.labels()) out += "," + l;
  out += ",macro,n_test\n";
  for (const auto& [name, m] : rows) {
    out += name + "," + pct(m->overall_accuracy());
    const auto acc = m->per_class_accuracy();
    for (std::size_t c = 0; c < labels.size(); ++c) {
      out += ",";
      if (c < acc.size()) out += pct(acc[c]);
    }
    out += "," + pct(m->macro_accuracy()) + "," + std::to_string(m->n_test()) + "\n";
  }
  return out;
}

std::vector<std::pair<std::string, const Metrics*>> rows_of(const std::vector<NamedMetrics>& list) {
  std::vector<std::pair<std::string, const Metrics*>> out;
  for (const auto& n : list) out.emplace_back(n.name, &n.metrics);
  return out;
}

std::string csv_to_markdown(std::string_view csv) {
  std::string out;
  bool header = true;
  for (const auto& line : text::lines(csv)) {
    if (line.empty()) continue;
    std::string row = "|";
    std::size_t cols = 0;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      row += " " + std::string(line.substr(start, comma - start)) + " |";
      ++cols;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    out += row + "\n";
    if (header) {
      out += "|";
      for (std::size_t c = 0; c < cols; ++c) out += " --- |";
      out += "\n";
      header = false;
    }
  }
  return out;
}

std::string checks_csv(const std::vector<ReferenceCheck>& checks) {
  std::string out = "section,row,kind,expected,observed,tolerance,pass\n";
  for (const auto& c : checks) {
    out += c.section + "," + c.row + "," + c.kind + ",";
    if (c.kind == "value") {
      out += fmt(c.expected, "%.2f") + "," + fmt(c.observed, "%.2f") + "," +
             fmt(c.tolerance, "%.2f");
    } else {
      out += c.expected_label + "," + c.observed_label + ",";
    }
    out += std::string(",") + (c.pass ? "pass" : "fail") + "\n";
  }
  return out;
}

}  // namespace

std::map<std::string, std::string> GapReport::render(ExportFormat format) const {
  std::map<std::string, std::string> files;
  if (format == ExportFormat::kJson) {
    files["report.json"] = to_json() + "\n";
    return files;
  }
  if (format == ExportFormat::kMarkdown) {
    files["report.md"] = markdown();
    return files;
  }
  const auto& in = inputs_;
  std::string summary = "metric,value\n";
  summary += "text_accuracy," + fmt(text_accuracy(), "%.6f") + "\n";
  summary += "image_accuracy," + fmt(image_accuracy(), "%.6f") + "\n";
  summary += "best_generator," + best_generator_ + "\n";
  summary += "gap," + fmt(gap(), "%.6f") + "\n";
  summary += "chance," + fmt(chance(), "%.6f") + "\n";
  for (const auto& [g, v] : generator_gaps()) summary += "gap_" + g + "," + fmt(v, "%.6f") + "\n";
  summary += "config_digest," + digest_ + "\n";
  files["summary.csv"] = summary;
  files["table1_text.csv"] = metrics_csv({{"text", &*in.text}}, labels());
  files["fig3_images.csv"] = metrics_csv(rows_of(in.images), labels());
  if (in.four_way) files["four_way.csv"] = metrics_csv({{"four_way", &*in.four_way}}, in.four_way->labels());
  if (in.keyword) {
    std::vector<std::pair<std::string, const Metrics*>> rows = {
        {"raw_text", &in.keyword->raw_text}, {"keyword_text", &in.keyword->keyword_text}};
    if (in.keyword->raw_image) {
      rows.emplace_back("raw_image", &*in.keyword->raw_image);
      rows.emplace_back("keyword_image", &*in.keyword->keyword_image);
    }
    files["keyword.csv"] = metrics_csv(rows, labels());
  }
  if (!in.transforms.empty()) files["table3_transforms.csv"] = metrics_csv(rows_of(in.transforms), labels());
  if (!in.probes.empty()) files["probes.csv"] = metrics_csv(rows_of(in.probes), labels());
  if (in.match) {
    files["match.csv"] = metrics_csv({{"match", &in.match->evaluation.metrics}}, labels());
    std::string hist = "bin_low,bin_high,true_probability,max_probability\n";
    for (std::size_t b = 0; b < kHistogramBins; ++b) {
      hist += fmt(static_cast<double>(b) / kHistogramBins, "%.1f") + "," +
              fmt(static_cast<double>(b + 1) / kHistogramBins, "%.1f") + "," +
              std::to_string(in.match->evaluation.true_probability_hist[b]) + "," +
              std::to_string(in.match->evaluation.max_probability_hist[b]) + "\n";
    }
    files["match_histograms.csv"] = hist;
  }
  if (in.lexicon) {
    if (in.lexicon->has_color() || in.lexicon->has_texture()) {
      files["table4_lexicon.csv"] = in.lexicon->table4_csv();
    }
    if (in.lexicon->has_composition()) files["table5_composition.csv"] = in.lexicon->table5_csv();
  }
  if (in.judgments) {
    if (!in.judgments->ranks.empty()) files["fig4_detail_rank.csv"] = in.judgments->ranks_csv();
    if (const auto& j = in.judgments->judged) {
      if (j->has_texture()) files["table4_judged.csv"] = j->table4_csv();
      if (j->has_composition()) files["table5_judged.csv"] = j->table5_csv();
    }
  }
  if (!in.baselines.empty()) {
    std::string b = "name,value\n";
    for (const auto& [k, v] : in.baselines) b += k + "," + fmt(v, "%.2f") + "\n";
    files["baselines.csv"] = b;
  }
  if (!checks_.empty()) files["reference_checks.csv"] = checks_csv(checks_);
  return files;
}

std::string GapReport::markdown() const {
  const auto csv = render(ExportFormat::kCsv);
  std::string out = "# Idiosyncratic gap report\n\n";
  out += "Text attribution " + pct(text_accuracy()) + "%, best image attribution " +
         pct(image_accuracy()) + "% (" + best_generator_ + "), gap " + pct(gap()) +
         " points, chance " + pct(chance()) + "%.\n\nConfig digest `" + digest_ + "`.\n";
  const std::pair<const char*, const char*> sections[] = {
      {"summary.csv", "Summary"},
      {"table1_text.csv", "Text attribution"},
      {"fig3_images.csv", "Image attribution by generator"},
      {"four_way.csv", "Four-way with original images"},
      {"keyword.csv", "Keyword prompts"},
      {"table3_transforms.csv", "Text transformations"},
      {"probes.csv", "Encoder probes"},
      {"match.csv", "Image-prompt matching"},
      {"match_histograms.csv", "Matching probability histograms"},
      {"table4_lexicon.csv", "Color and texture vocabulary"},
      {"table5_composition.csv", "Composition criteria"},
      {"fig4_detail_rank.csv", "Detail-level ranks"},
      {"table4_judged.csv", "Judged texture vocabulary"},
      {"table5_judged.csv", "Judged composition criteria"},
      {"baselines.csv", "Baselines"},
      {"reference_checks.csv", "Reference checks"},
  };
  for (const auto& [file, title] : sections) {
    const auto it = csv.find(file);
    if (it == csv.end()) continue;
    out += std::string("\n## ") + title + "\n\n" + csv_to_markdown(it->second);
  }
  const std::pair<bool, const char*> absent[] = {
      {inputs_.four_way.has_value(), "four-way"},   {inputs_.keyword.has_value(), "keyword"},
      {!inputs_.transforms.empty(), "transforms"}, {!inputs_.probes.empty(), "probes"},
      {inputs_.match.has_value(), "match"},         {inputs_.lexicon.has_value(), "lexicon"},
      {inputs_.judgments.has_value(), "judgments"}, {!inputs_.baselines.empty(), "baselines"},
  };
  std::string missing;
  for (const auto& [present, name] : absent) {
    if (!present) missing += (missing.empty() ? "" : ", ") + std::string(name);
  }
  if (!missing.empty()) out += "\nAbsent sections: " + missing + ".\n";
  return out;
}

std::vector<std::filesystem::path> GapReport::export_to(const std::filesystem::path& dir,
                                                        const std::vector<ExportFormat>& formats) const {
  std::vector<std::filesystem::path> written;
  for (const auto f : formats) {
    for (const auto& [name, contents] : render(f)) {
      const auto path = dir / name;
      text::write_file(path, contents);
      written.push_back(path);
    }
  }
  return written;
}

}  // namespace capgap
