#include <gtest/gtest.h>

#include <cmath>

#include "capgap/errors.hpp"
#include "capgap/match.hpp"
#include "capgap/rng.hpp"
#include "capgap/synthetic.hpp"

using namespace capgap;

namespace {

const LabelSpace kLabels({"A", "B", "C"});

Corpus sibling_corpus(std::size_t prompts) {
  std::vector<CaptionRecord> rs;
  for (std::size_t i = 0; i < prompts; ++i)
    for (std::size_t k = 0; k < 3; ++k) {
      CaptionRecord r;
      r.caption_id = "c" + std::to_string(i) + kLabels.label(k);
      r.image_id = "i" + std::to_string(i);
      r.source_label = kLabels.label(k);
      r.text = "t";
      rs.push_back(r);
    }
  return Corpus(rs);
}

// One-hot text embeddings per label; image i copies caption (i, truth).
std::pair<EmbeddingSet, EmbeddingSet> identity_world(const Corpus& c, std::size_t dim) {
  std::vector<EmbeddingRecord> text, img;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& r = c.records()[i];
    EmbeddingRecord e{r.caption_id, r.source_label, "t", std::nullopt, std::vector<double>(dim, 0.0)};
    e.embedding[c.label_index(i)] = 1.0;
    text.push_back(e);
    if ((i / 3) % 3 == c.label_index(i)) {
      EmbeddingRecord m = e;
      m.item_id += "#img";
      m.encoder_tag = "i";
      m.generator_tag = "g";
      img.push_back(m);
    }
  }
  return {EmbeddingSet(text), EmbeddingSet(img)};
}

}  // namespace

TEST(BuildInstances, OnePerImageAndSkips) {
  const auto c = sibling_corpus(10);
  auto [text, img] = identity_world(c, 4);
  const auto built = build_instances(c, text, img);
  EXPECT_EQ(built.instances.size(), 10u);
  EXPECT_EQ(built.skipped, 0u);

  auto recs = text.records();
  // drop a sibling of image 0 (its truth is A, so drop B)
  recs.erase(std::find_if(recs.begin(), recs.end(), [](auto& r) { return r.item_id == "c0B"; }));
  const auto partial = build_instances(c, EmbeddingSet(recs), img);
  EXPECT_EQ(partial.instances.size(), 9u);
  EXPECT_EQ(partial.skipped, 1u);
}

TEST(Attribute, IdentityWorldIsPerfect) {
  const auto c = sibling_corpus(30);
  auto [text, img] = identity_world(c, 3);
  const auto built = build_instances(c, text, img);
  const auto pair = ProjectionPair::identity(3, 3, 3, 0.07);
  for (const auto& inst : built.instances) EXPECT_EQ(attribute(pair, inst).predicted, inst.truth);
  EXPECT_DOUBLE_EQ(evaluate_match(pair, built.instances, kLabels).metrics.overall_accuracy(), 1.0);
}

TEST(Attribute, IdenticalCandidatesTieToLowestLabel) {
  MatchInstance inst;
  inst.image = {1.0, 0.5};
  inst.candidates = {{0.3, 0.3}, {0.3, 0.3}, {0.3, 0.3}};
  inst.truth = 2;
  const auto a = attribute(ProjectionPair::identity(2, 2, 2, 0.07), inst);
  EXPECT_EQ(a.predicted, 0u);
  EXPECT_DOUBLE_EQ(a.scores[0], a.scores[2]);
}

TEST(Attribute, CosineScaleInvarianceAndPermutation) {
  Rng rng(3);
  const auto pair = ProjectionPair::random(5, 6, 4, 0.1, 9);
  MatchInstance inst;
  inst.image.resize(6);
  for (auto& v : inst.image) v = rng.normal();
  inst.candidates.assign(3, std::vector<double>(5));
  for (auto& c : inst.candidates)
    for (auto& v : c) v = rng.normal();
  const auto base = attribute(pair, inst);
  auto scaled = inst;
  for (auto& v : scaled.image) v *= 4.5;
  for (auto& v : scaled.candidates[1]) v *= 0.2;
  const auto s = attribute(pair, scaled);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(base.scores[k], s.scores[k], 1e-12);
  auto perm = inst;
  std::swap(perm.candidates[0], perm.candidates[2]);
  const auto p = attribute(pair, perm);
  EXPECT_NEAR(p.scores[0], base.scores[2], 1e-12);
  EXPECT_NEAR(p.scores[2], base.scores[0], 1e-12);
}

TEST(MatchLoss, GradientMatchesFiniteDifferences) {
  Rng rng(4);
  auto pair = ProjectionPair::random(4, 5, 3, 0.5, 2);
  std::vector<MatchInstance> insts(4);
  for (std::size_t n = 0; n < insts.size(); ++n) {
    insts[n].image.resize(5);
    for (auto& v : insts[n].image) v = rng.normal();
    insts[n].candidates.assign(3, std::vector<double>(4));
    for (auto& c : insts[n].candidates)
      for (auto& v : c) v = rng.normal();
    insts[n].truth = n % 3;
  }
  const std::vector<std::size_t> batch{0, 1, 2, 3};
  std::vector<double> gt, gi;
  match_loss_and_gradient(pair, insts, batch, 0.01, &gt, &gi);
  const double eps = 1e-6;
  auto check = [&](std::vector<double>& params, const std::vector<double>& grad) {
    for (std::size_t j = 0; j < params.size(); ++j) {
      const double keep = params[j];
      params[j] = keep + eps;
      const double up = match_loss_and_gradient(pair, insts, batch, 0.01, nullptr, nullptr);
      params[j] = keep - eps;
      const double down = match_loss_and_gradient(pair, insts, batch, 0.01, nullptr, nullptr);
      params[j] = keep;
      const double fd = (up - down) / (2 * eps);
      EXPECT_NEAR(grad[j], fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  };
  check(pair.p_text.data, gt);
  check(pair.p_img.data, gi);
}

TEST(RunMatch, LearnsNoisyWorldAndIsDeterministic) {
  std::vector<CaptionRecord> rs;
  const auto c = sibling_corpus(300);
  const auto text = generate_text_embeddings(c, 8, 4.0, 1, "t");
  const auto img = generate_image_embeddings(text, 0.3, 2, "i", "g");
  // keep one generated image per prompt so each instance has a single truth
  std::vector<EmbeddingRecord> one;
  for (std::size_t i = 0; i < img.size(); ++i)
    if ((i / 3) % 3 == i % 3) one.push_back(img.records()[i]);
  const EmbeddingSet images(one);
  const auto split = grouped_split(c, 0.8, 7);
  MatchConfig cfg;
  cfg.dim = 8;
  cfg.train.epochs = 10;
  const auto a = run_match(c, text, images, split, cfg, 1);
  const auto b = run_match(c, text, images, split, cfg, 4);
  EXPECT_EQ(a, b);
  EXPECT_GT(a.evaluation.metrics.overall_accuracy(), 0.8);
  std::int64_t hist = 0;
  for (auto v : a.evaluation.true_probability_hist) hist += v;
  EXPECT_EQ(hist, a.evaluation.metrics.n_test());
  EXPECT_EQ(MatchReport::from_json(a.to_json()), a);
}

TEST(ProjectionPair, JsonRoundTripAndValidation) {
  const auto p = ProjectionPair::random(3, 4, 2, 0.07, 1);
  EXPECT_EQ(ProjectionPair::from_json(p.to_json()), p);
  EXPECT_THROW(ProjectionPair::from_json("{}"), DataError);
  MatchConfig cfg;
  cfg.tau = 0.0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
}
