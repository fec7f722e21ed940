#include "capgap/settings.hpp"

#include <charconv>
#include <fstream>
#include <set>

namespace cli {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      // training
      "lr", "weight_decay", "epochs", "batch_size", "label_smoothing", "momentum", "shuffle",
      // tf-idf
      "ngram_min", "ngram_max", "min_df", "max_features", "use_stopwords", "norm",
      // matching
      "dim", "tau", "init",
      // synthetic corpus
      "images", "classes", "signatures_per_class", "base_vocab", "zipf_exponent",
      "injection_rate", "background_rate"};
  return keys;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw UsageError{"config key '" + key + "' expects a number, got '" + v + "'"};
  }
  return out;
}

template <class Int>
Int to_int(const std::string& key, const std::string& v) {
  Int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw UsageError{"config key '" + key + "' expects an integer, got '" + v + "'"};
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError{"config key '" + key + "' expects true or false, got '" + v + "'"};
}

}  // namespace

Settings Settings::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError{"cannot read config file " + path.string()};
  Settings s;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError{path.string() + ":" + std::to_string(number) + ": expected key=value"};
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (!known_keys().count(key)) {
      throw UsageError{path.string() + ":" + std::to_string(number) + ": unknown key '" + key + "'"};
    }
    s.values_[key] = value;
  }
  return s;
}

std::optional<std::string> Settings::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

void Settings::apply(capgap_train_config& c) const {
  if (auto v = get("lr")) c.learning_rate = to_double("lr", *v);
  if (auto v = get("weight_decay")) c.weight_decay = to_double("weight_decay", *v);
  if (auto v = get("epochs")) c.epochs = to_int<int>("epochs", *v);
  if (auto v = get("batch_size")) c.batch_size = to_int<int>("batch_size", *v);
  if (auto v = get("label_smoothing")) c.label_smoothing = to_double("label_smoothing", *v);
  if (auto v = get("momentum")) c.momentum = to_double("momentum", *v);
  if (auto v = get("shuffle")) c.shuffle_each_epoch = to_bool("shuffle", *v) ? 1 : 0;
}

void Settings::apply(capgap_tfidf_config& c) const {
  if (auto v = get("ngram_min")) c.ngram_min = to_int<int>("ngram_min", *v);
  if (auto v = get("ngram_max")) c.ngram_max = to_int<int>("ngram_max", *v);
  if (auto v = get("min_df")) c.min_df = to_int<std::size_t>("min_df", *v);
  if (auto v = get("max_features")) c.max_features = to_int<std::size_t>("max_features", *v);
  if (auto v = get("use_stopwords")) c.use_stopwords = to_bool("use_stopwords", *v) ? 1 : 0;
  if (auto v = get("norm")) {
    if (*v != "l2" && *v != "none") throw UsageError{"config key 'norm' expects l2 or none"};
    c.l2_norm = *v == "l2" ? 1 : 0;
  }
}

void Settings::apply(capgap_match_config& c) const {
  apply(c.train);
  if (auto v = get("dim")) c.dim = to_int<std::size_t>("dim", *v);
  if (auto v = get("tau")) c.tau = to_double("tau", *v);
  if (auto v = get("init")) {
    if (*v != "random" && *v != "identity") {
      throw UsageError{"config key 'init' expects random or identity"};
    }
    c.identity_init = *v == "identity" ? 1 : 0;
  }
}

void Settings::apply(capgap_synth_config& c) const {
  if (auto v = get("images")) c.images = to_int<std::size_t>("images", *v);
  if (auto v = get("classes")) c.classes = to_int<std::size_t>("classes", *v);
  if (auto v = get("signatures_per_class")) {
    c.signatures_per_class = to_int<std::size_t>("signatures_per_class", *v);
  }
  if (auto v = get("base_vocab")) c.base_vocab = to_int<std::size_t>("base_vocab", *v);
  if (auto v = get("zipf_exponent")) c.zipf_exponent = to_double("zipf_exponent", *v);
  if (auto v = get("injection_rate")) c.injection_rate = to_double("injection_rate", *v);
  if (auto v = get("background_rate")) c.background_rate = to_double("background_rate", *v);
}

}  // namespace cli
