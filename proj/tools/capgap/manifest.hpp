#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace cli {

std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view bytes);

// Record of one CLI run, written as capgap.manifest.json into every
// directory that received an output. The timestamp honours
// SOURCE_DATE_EPOCH so reruns can be made byte-identical.
struct RunManifest {
  std::vector<std::string> argv;
  std::string subcommand;
  std::string config_digest;  // sha256 of the effective settings
  std::vector<std::filesystem::path> inputs;
  std::vector<std::filesystem::path> outputs;

  static constexpr const char* kFileName = "capgap.manifest.json";

  std::string to_json(const std::string& version) const;
  // Returns the manifest paths written.
  std::vector<std::filesystem::path> write(const std::string& version) const;
};

}  // namespace cli
