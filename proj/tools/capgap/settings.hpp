#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "capgap/capgap.h"

namespace cli {

// Usage-level failure (exit 1).
struct UsageError {
  std::string message;
};

// key=value overrides from --config. Blank lines and '#' comments are
// skipped; unknown keys are usage errors.
class Settings {
 public:
  static Settings load(const std::filesystem::path& path);

  bool empty() const { return values_.empty(); }
  const std::map<std::string, std::string>& values() const { return values_; }

  void apply(capgap_train_config& c) const;
  void apply(capgap_tfidf_config& c) const;
  void apply(capgap_match_config& c) const;
  void apply(capgap_synth_config& c) const;

 private:
  std::optional<std::string> get(const std::string& key) const;
  std::map<std::string, std::string> values_;
};

}  // namespace cli
