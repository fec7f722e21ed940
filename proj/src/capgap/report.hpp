#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "capgap/lexicon.hpp"
#include "capgap/linear.hpp"
#include "capgap/match.hpp"
#include "capgap/probe.hpp"

namespace capgap {

struct NamedMetrics {
  std::string name;
  Metrics metrics;
  bool operator==(const NamedMetrics&) const = default;
};

struct ReportInputs {
  std::optional<Metrics> text;
  std::vector<NamedMetrics> images;  // one per generator
  std::optional<Metrics> four_way;
  std::optional<KeywordComparison> keyword;
  std::vector<NamedMetrics> transforms;
  std::vector<NamedMetrics> probes;
  std::optional<MatchReport> match;
  std::optional<LexiconReport> lexicon;
  std::optional<JudgmentSummary> judgments;
  std::map<std::string, double> baselines;  // manual entries, e.g. human accuracy

  bool operator==(const ReportInputs&) const = default;
};

// Comparison of one observed quantity with a published reference. Value
// checks are in percent with an absolute tolerance; ordering checks compare
// which label is highest or lowest in a column.
struct ReferenceCheck {
  std::string section;
  std::string row;
  std::string kind;  // "value" or "ordering"
  double expected = 0.0;
  double observed = 0.0;
  double tolerance = 0.0;
  std::string expected_label;
  std::string observed_label;
  bool pass = false;

  bool operator==(const ReferenceCheck&) const = default;
};

inline constexpr double kReferenceTolerance = 2.0;

enum class ExportFormat { kJson, kCsv, kMarkdown };
std::optional<ExportFormat> parse_export_format(std::string_view s);

class GapReport {
 public:
  // Validates label spaces (the four-way section may add one label at the
  // end) and computes the gap, chance level, digest and reference checks.
  static GapReport assemble(ReportInputs inputs);

  const ReportInputs& inputs() const { return inputs_; }
  const LabelSpace& labels() const { return inputs_.text->labels(); }
  double text_accuracy() const { return inputs_.text->overall_accuracy(); }
  // Image accuracy of the best generator; the headline gap uses it.
  double image_accuracy() const;
  const std::string& best_generator() const { return best_generator_; }
  double gap() const { return text_accuracy() - image_accuracy(); }
  double chance() const { return 1.0 / static_cast<double>(labels().size()); }
  std::vector<std::pair<std::string, double>> generator_gaps() const;
  const std::string& config_digest() const { return digest_; }
  const std::vector<ReferenceCheck>& reference_checks() const { return checks_; }

  std::string to_json() const;
  static GapReport from_json(std::string_view json);

  // File name -> contents for each format.
  std::map<std::string, std::string> render(ExportFormat format) const;
  std::string markdown() const;
  // Writes the rendered files under `dir`; returns the written paths.
  std::vector<std::filesystem::path> export_to(const std::filesystem::path& dir,
                                               const std::vector<ExportFormat>& formats) const;

  bool operator==(const GapReport&) const = default;

 private:
  explicit GapReport(ReportInputs inputs) : inputs_(std::move(inputs)) {}

  ReportInputs inputs_;
  std::string best_generator_;
  std::string digest_;
  std::vector<ReferenceCheck> checks_;
};

// Reference checks for whatever sections can be matched to the published
// setup by label and generator names. Empty when nothing matches.
std::vector<ReferenceCheck> reference_checks(const ReportInputs& inputs);

}  // namespace capgap
