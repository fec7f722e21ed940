#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "capgap/errors.hpp"
#include "capgap/features.hpp"
#include "capgap/synthetic.hpp"

using namespace capgap;

TEST(Synthetic, ShapeAndDeterminism) {
  SyntheticConfig cfg;
  cfg.images = 20;
  cfg.seed = 5;
  const auto a = generate_fingerprint_corpus(cfg);
  EXPECT_EQ(a.size(), 20u * 3 * 3);
  EXPECT_EQ(a.labels().label(0), "model_a");
  EXPECT_EQ(a.count_per_label(), (std::vector<std::size_t>{60, 60, 60}));
  EXPECT_EQ(a.records(), generate_fingerprint_corpus(cfg).records());
  cfg.seed = 6;
  EXPECT_NE(a.records(), generate_fingerprint_corpus(cfg).records());
}

TEST(Synthetic, EveryCaptionCarriesOwnSignature) {
  SyntheticConfig cfg;
  cfg.images = 30;
  const auto c = generate_fingerprint_corpus(cfg);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto sig = signature_words(cfg, c.label_index(i));
    const auto toks = tokenize(c.records()[i].text);
    bool found = false;
    for (const auto& t : toks) found |= std::find(sig.begin(), sig.end(), t) != sig.end();
    EXPECT_TRUE(found) << c.records()[i].text;
  }
}

TEST(Synthetic, LengthDistributionsMatched) {
  SyntheticConfig cfg;
  cfg.images = 400;
  const auto c = generate_fingerprint_corpus(cfg);
  std::vector<double> sum(3, 0), n(3, 0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    sum[c.label_index(i)] += static_cast<double>(tokenize(c.records()[i].text).size());
    n[c.label_index(i)] += 1;
  }
  for (std::size_t k = 1; k < 3; ++k) EXPECT_NEAR(sum[k] / n[k], sum[0] / n[0], 0.05 * sum[0] / n[0]);
}

TEST(Synthetic, ConfigValidation) {
  SyntheticConfig cfg;
  cfg.classes = 1;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  cfg = {};
  cfg.injection_rate = 2.0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
}

TEST(Synthetic, EmbeddingClassMeansOnSimplex) {
  SyntheticConfig cfg;
  cfg.images = 2000;
  cfg.classes = 3;
  const auto c = generate_fingerprint_corpus(cfg);
  const auto e = generate_text_embeddings(c, 6, 4.0, 1, "t");
  std::vector<std::vector<double>> mean(3, std::vector<double>(6, 0.0));
  std::vector<double> n(3, 0);
  for (std::size_t i = 0; i < e.size(); ++i) {
    const auto k = e.label_index(i);
    for (std::size_t d = 0; d < 6; ++d) mean[k][d] += e.records()[i].embedding[d];
    n[k] += 1;
  }
  for (std::size_t k = 0; k < 3; ++k)
    for (auto& v : mean[k]) v /= n[k];
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = a + 1; b < 3; ++b) {
      double d2 = 0;
      for (std::size_t d = 0; d < 6; ++d) d2 += (mean[a][d] - mean[b][d]) * (mean[a][d] - mean[b][d]);
      EXPECT_NEAR(std::sqrt(d2), 4.0 * std::sqrt(2.0), 0.15);
    }
  EXPECT_THROW(generate_text_embeddings(c, 2, 1.0, 1, "t"), ArgumentError);
  const auto img = generate_image_embeddings(e, 0.0, 2, "i", "g");
  EXPECT_EQ(img.records()[0].embedding, e.records()[0].embedding);
  EXPECT_EQ(img.records()[0].item_id, e.records()[0].item_id + "#img");
}
