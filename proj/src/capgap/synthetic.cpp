#include "capgap/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "capgap/errors.hpp"
#include "capgap/rng.hpp"

namespace capgap {

void SyntheticConfig::validate() const {
  if (images < 2) throw ArgumentError("synthetic corpus needs at least two images");
  if (classes < 2 || classes > 26) throw ArgumentError("synthetic classes must be in 2..26");
  if (signatures_per_class < 1) throw ArgumentError("signatures_per_class must be >= 1");
  if (base_vocab < 10) throw ArgumentError("base_vocab must be >= 10");
  if (!(zipf_exponent > 0.0)) throw ArgumentError("zipf_exponent must be > 0");
  if (!(injection_rate >= 0.0 && injection_rate <= 1.0)) {
    throw ArgumentError("injection_rate must be in [0, 1]");
  }
  if (!(background_rate >= 0.0 && background_rate <= 1.0)) {
    throw ArgumentError("background_rate must be in [0, 1]");
  }
}

namespace {

constexpr std::string_view kConsonants = "bcdfghjklmnprstvwz";
constexpr std::string_view kVowels = "aeiou";

struct Vocabulary {
  std::vector<std::string> base;
  std::vector<double> cdf;
  std::vector<std::vector<std::pair<std::string, std::string>>> signatures;  // per class
  std::vector<std::vector<std::string>> signature_words;
};

Vocabulary build_vocabulary(const SyntheticConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, "vocabulary"));
  Vocabulary v;
  std::set<std::string> used;
  while (v.base.size() < cfg.base_vocab) {
    std::string w;
    const std::size_t syllables = 1 + rng.below(3);
    for (std::size_t s = 0; s < syllables; ++s) {
      w += kConsonants[rng.below(kConsonants.size())];
      w += kVowels[rng.below(kVowels.size())];
    }
    if (rng.below(2) == 0) w += kConsonants[rng.below(kConsonants.size())];
    if (used.insert(w).second) v.base.push_back(w);
  }
  double total = 0.0;
  for (std::size_t r = 0; r < v.base.size(); ++r) {
    total += 1.0 / std::pow(static_cast<double>(r + 1), cfg.zipf_exponent);
    v.cdf.push_back(total);
  }
  for (double& c : v.cdf) c /= total;

  // Signature words: 6-8 distinct letters, so a letter shuffle almost never
  // reproduces a vocabulary word.
  std::string alphabet = "abcdefghijklmnopqrstuvwxyz";
  auto fresh_word = [&] {
    for (;;) {
      rng.shuffle(std::span<char>(alphabet.data(), alphabet.size()));
      std::string w = alphabet.substr(0, 6 + rng.below(3));
      if (used.insert(w).second) return w;
    }
  };
  v.signatures.resize(cfg.classes);
  v.signature_words.resize(cfg.classes);
  for (std::size_t c = 0; c < cfg.classes; ++c) {
    for (std::size_t s = 0; s < cfg.signatures_per_class; ++s) {
      auto a = fresh_word();
      auto b = fresh_word();
      v.signature_words[c].push_back(a);
      v.signature_words[c].push_back(b);
      v.signatures[c].emplace_back(std::move(a), std::move(b));
    }
  }
  return v;
}

const std::string& zipf_word(const Vocabulary& v, Rng& rng) {
  const double u = rng.uniform();
  const auto it = std::lower_bound(v.cdf.begin(), v.cdf.end(), u);
  const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - v.cdf.begin()), v.base.size() - 1);
  return v.base[idx];
}

std::size_t caption_length(PromptTier tier, Rng& rng) {
  double mean = 12.0, sd = 3.0, lo = 6.0;
  if (tier == PromptTier::kDetailed) {
    mean = 30.0;
    sd = 6.0;
    lo = 12.0;
  } else if (tier == PromptTier::kVeryDetailed) {
    mean = 60.0;
    sd = 10.0;
    lo = 25.0;
  }
  return static_cast<std::size_t>(std::max(lo, std::round(mean + sd * rng.normal())));
}

std::string label_name(std::size_t c) { return std::string("model_") + static_cast<char>('a' + c); }

}  // namespace

std::vector<std::string> signature_words(const SyntheticConfig& config, std::size_t c) {
  config.validate();
  return build_vocabulary(config).signature_words.at(c);
}

Corpus generate_fingerprint_corpus(const SyntheticConfig& cfg) {
  cfg.validate();
  const auto vocab = build_vocabulary(cfg);
  const PromptTier tiers[] = {PromptTier::kCoarse, PromptTier::kDetailed, PromptTier::kVeryDetailed};
  std::vector<CaptionRecord> records;
  records.reserve(cfg.images * cfg.classes * 3);
  char image_id[32];
  for (std::size_t img = 0; img < cfg.images; ++img) {
    std::snprintf(image_id, sizeof image_id, "img%05zu", img);
    for (const auto tier : tiers) {
      for (std::size_t c = 0; c < cfg.classes; ++c) {
        CaptionRecord r;
        r.image_id = image_id;
        r.prompt_tier = tier;
        r.source_label = label_name(c);
        r.caption_id = r.image_id + "-" + r.source_label + "-" + std::string(to_string(tier));
        Rng rng(derive_seed(cfg.seed, r.caption_id));
        const std::size_t len = caption_length(tier, rng);
        std::vector<std::string> tokens;
        tokens.reserve(len);
        for (std::size_t t = 0; t < len; ++t) tokens.push_back(zipf_word(vocab, rng));
        std::size_t injections = 1;
        for (std::size_t t = 0; t < len; ++t) {
          if (rng.uniform() <= cfg.injection_rate) ++injections;
        }
        for (std::size_t k = 0; k < injections; ++k) {
          const auto& sig = vocab.signatures[c][rng.below(vocab.signatures[c].size())];
          const std::size_t pos = rng.below(len - 1);
          tokens[pos] = sig.first;
          tokens[pos + 1] = sig.second;
        }
        if (rng.uniform() <= cfg.background_rate) {
          const std::size_t other = (c + 1 + rng.below(cfg.classes - 1)) % cfg.classes;
          const auto& words = vocab.signature_words[other];
          // Never overwrite the class's own signature tokens.
          const std::size_t pos = rng.below(len);
          bool own = false;
          for (const auto& w : vocab.signature_words[c]) own = own || tokens[pos] == w;
          if (!own) tokens[pos] = words[rng.below(words.size())];
        }
        std::string text;
        for (const auto& t : tokens) {
          if (!text.empty()) text += ' ';
          text += t;
        }
        r.text = std::move(text);
        r.provenance = "synthetic";
        records.push_back(std::move(r));
      }
    }
  }
  return Corpus(std::move(records));
}

EmbeddingSet generate_text_embeddings(const Corpus& corpus, std::size_t dim, double separation,
                                      std::uint64_t seed, const std::string& encoder_tag) {
  const std::size_t k = corpus.labels().size();
  if (dim < k) throw ArgumentError("embedding dimension must be >= number of classes");
  if (!(separation >= 0.0)) throw ArgumentError("separation must be >= 0");
  // Class c sits `separation` out along axis c (means are separation*sqrt(2)
  // apart); centring keeps distances.
  const double scale = separation;
  std::vector<EmbeddingRecord> records;
  records.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& r = corpus.records()[i];
    const std::size_t c = corpus.label_index(i);
    Rng rng(derive_seed(seed, r.caption_id));
    EmbeddingRecord e{r.caption_id, r.source_label, encoder_tag, std::nullopt,
                      std::vector<double>(dim)};
    for (std::size_t j = 0; j < dim; ++j) {
      double mean = 0.0;
      if (j < k) mean = scale * ((j == c ? 1.0 : 0.0) - 1.0 / static_cast<double>(k));
      e.embedding[j] = mean + rng.normal();
    }
    records.push_back(std::move(e));
  }
  return EmbeddingSet(std::move(records), corpus.labels());
}

EmbeddingSet generate_image_embeddings(const EmbeddingSet& text, double noise, std::uint64_t seed,
                                       const std::string& encoder_tag,
                                       const std::string& generator_tag) {
  if (!(noise >= 0.0)) throw ArgumentError("noise must be >= 0");
  std::vector<EmbeddingRecord> records;
  records.reserve(text.size());
  for (const auto& t : text.records()) {
    EmbeddingRecord e{t.item_id + "#img", t.source_label, encoder_tag, generator_tag, t.embedding};
    Rng rng(derive_seed(seed, e.item_id));
    for (double& v : e.embedding) v += noise * rng.normal();
    records.push_back(std::move(e));
  }
  return EmbeddingSet(std::move(records), text.labels());
}

}  // namespace capgap
