#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "capgap/corpus.hpp"
#include "capgap/probe.hpp"

namespace capgap {

// Fingerprint corpus: every image gets one caption per (class, prompt tier).
// Captions draw from a shared Zipf-distributed base vocabulary with the same
// length distribution for every class; each class replaces base tokens with
// its own invented signature bigrams (at least one per caption), and
// signature words leak into other classes at a low background rate.
struct SyntheticConfig {
  std::size_t images = 1200;
  std::size_t classes = 3;
  std::size_t signatures_per_class = 8;
  std::size_t base_vocab = 2000;
  double zipf_exponent = 1.1;
  double injection_rate = 0.03;   // extra signature bigrams per base token
  double background_rate = 0.05;  // chance a caption carries a foreign signature word
  std::uint64_t seed = 0;

  void validate() const;
};

// Labels are "model_a", "model_b", ...; caption ids "<image>-<label>-<tier>".
Corpus generate_fingerprint_corpus(const SyntheticConfig& config);

// The signature words of class c (for tests).
std::vector<std::string> signature_words(const SyntheticConfig& config, std::size_t c);

// Gaussian class clusters for the records of `corpus` with unit noise sigma:
// the mean of class c is `separation` * e_c, centred, so the means form a
// regular simplex with pairwise distance separation * sqrt(2) in the first K
// dimensions (dim must be >= K).
EmbeddingSet generate_text_embeddings(const Corpus& corpus, std::size_t dim, double separation,
                                      std::uint64_t seed, const std::string& encoder_tag);

// "<caption_id>#img" embeddings: the caption's embedding plus N(0, noise^2).
EmbeddingSet generate_image_embeddings(const EmbeddingSet& text, double noise, std::uint64_t seed,
                                       const std::string& encoder_tag,
                                       const std::string& generator_tag);

}  // namespace capgap
