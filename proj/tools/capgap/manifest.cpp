#include "capgap/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace cli {

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("sha256 init failed");
    }
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_, data, n); }

  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, md.data(), &len);
    std::string out;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
      std::snprintf(buf, sizeof buf, "%02x", md[i]);
      out += buf;
    }
    return out;
  }

 private:
  EVP_MD_CTX* ctx_;
};

std::string timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* e = std::getenv("SOURCE_DATE_EPOCH")) t = static_cast<std::time_t>(std::atoll(e));
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::ordered_json files_json(const std::vector<std::filesystem::path>& files) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& f : files) {
    nlohmann::ordered_json o;
    o["path"] = f.string();
    if (std::filesystem::is_regular_file(f)) {
      o["sha256"] = sha256_file(f);
    } else {
      o["sha256"] = nullptr;
    }
    arr.push_back(std::move(o));
  }
  return arr;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Sha256 h;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::string RunManifest::to_json(const std::string& version) const {
  nlohmann::ordered_json o;
  o["format"] = "capgap.manifest";
  o["tool_version"] = version;
  o["subcommand"] = subcommand;
  o["command_line"] = argv;
  o["config_digest"] = config_digest;
  o["inputs"] = files_json(inputs);
  o["outputs"] = files_json(outputs);
  o["timestamp"] = timestamp();
  return o.dump(1) + "\n";
}

std::vector<std::filesystem::path> RunManifest::write(const std::string& version) const {
  std::set<std::filesystem::path> dirs;
  for (const auto& out : outputs) {
    dirs.insert(std::filesystem::is_directory(out) ? out : out.parent_path());
  }
  const auto contents = to_json(version);
  std::vector<std::filesystem::path> written;
  for (const auto& dir : dirs) {
    const auto path = (dir.empty() ? std::filesystem::path(".") : dir) / kFileName;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << contents;
    written.push_back(path);
  }
  return written;
}

}  // namespace cli
