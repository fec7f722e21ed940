#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "capgap/errors.hpp"
#include "capgap/features.hpp"
#include "capgap/rng.hpp"

using namespace capgap;

namespace {

Corpus make_corpus(const std::vector<std::pair<std::string, std::string>>& docs) {
  std::vector<CaptionRecord> rs;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    CaptionRecord r;
    r.caption_id = "d" + std::to_string(i);
    r.image_id = "i" + std::to_string(i);
    r.source_label = docs[i].first;
    r.text = docs[i].second;
    rs.push_back(r);
  }
  return Corpus(rs);
}

TfIdfConfig unigrams() {
  TfIdfConfig c;
  c.ngram_min = c.ngram_max = 1;
  return c;
}

}  // namespace

TEST(Tokenize, Examples) {
  EXPECT_EQ(tokenize("The image shows a dog."),
            (std::vector<std::string>{"the", "image", "shows", "a", "dog"}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_EQ(tokenize("low-angle view"), (std::vector<std::string>{"low", "angle", "view"}));
  EXPECT_EQ(tokenize("CAF\xc3\x89 2x"), (std::vector<std::string>{"caf\xc3\xa9", "2x"}));
}

TEST(Ngrams, Examples) {
  const std::vector<std::string> abc{"a", "b", "c"};
  EXPECT_EQ(ngrams(abc, 2, 2), (std::vector<std::string>{"a b", "b c"}));
  EXPECT_EQ(ngrams(abc, 2, 3), (std::vector<std::string>{"a b", "b c", "a b c"}));
  EXPECT_TRUE(ngrams(std::vector<std::string>{"a"}, 2, 3).empty());
  EXPECT_THROW(ngrams(abc, 0, 2), ArgumentError);
}

TEST(TfIdf, HandEvaluatedIdf) {
  const std::vector<std::string> docs{"red red blue", "blue green"};
  const auto m = TfIdfModel::fit(docs, unigrams());
  EXPECT_DOUBLE_EQ(m.idf(*m.index_of("blue")), 1.0);
  EXPECT_NEAR(m.idf(*m.index_of("red")), std::log(3.0 / 2.0) + 1.0, 1e-15);
  EXPECT_NEAR(m.idf(*m.index_of("red")), 1.4055, 1e-4);

  auto c = unigrams();
  c.min_df = 2;
  const auto m2 = TfIdfModel::fit(docs, c);
  ASSERT_EQ(m2.vocab_size(), 1u);
  EXPECT_EQ(m2.term(0), "blue");
}

TEST(TfIdf, HandEvaluatedTransform) {
  const std::vector<std::string> docs{"red red blue", "blue green"};
  const auto m = TfIdfModel::fit(docs, unigrams());
  const auto v = m.transform("red red blue");
  std::map<std::string, double> got;
  for (std::size_t i = 0; i < v.nnz(); ++i) got[m.term(v.indices[i])] = v.values[i];
  EXPECT_NEAR(got["red"], 0.9421, 1e-4);
  EXPECT_NEAR(got["blue"], 0.3352, 1e-4);
  EXPECT_NEAR(v.norm(), 1.0, 1e-12);
  EXPECT_EQ(m.transform("purple orange").nnz(), 0u);
  EXPECT_THROW(TfIdfModel::fit(std::vector<std::string>{}, unigrams()), DataError);
}

TEST(TfIdf, MaxFeaturesKeepsHighestDfThenLexicographic) {
  const std::vector<std::string> docs{"a b c", "a b d", "a e f"};
  auto c = unigrams();
  c.max_features = 3;
  const auto m = TfIdfModel::fit(docs, c);
  ASSERT_EQ(m.vocab_size(), 3u);
  EXPECT_EQ(m.term(0), "a");
  EXPECT_EQ(m.term(1), "b");
  EXPECT_EQ(m.term(2), "c");
}

TEST(TfIdf, StopwordsDropTerms) {
  const std::vector<std::string> docs{"the red sky", "the blue sea"};
  auto c = unigrams();
  c.use_stopwords = true;
  const auto m = TfIdfModel::fit(docs, c);
  EXPECT_FALSE(m.index_of("the"));
  EXPECT_TRUE(m.index_of("red"));
}

TEST(TfIdf, LinearInCountsBeforeNormalization) {
  const std::vector<std::string> docs{"a b a c", "b c d", "d d a"};
  auto c = unigrams();
  c.ngram_max = 2;
  c.norm = TermNorm::kNone;
  const auto m = TfIdfModel::fit(docs, c);
  // concatenation with a separator token that is out of vocabulary, so no
  // cross-boundary bigram is counted
  const auto joined = m.transform("a b a c zzzq b c d");
  const auto x = m.transform("a b a c");
  const auto y = m.transform("b c d");
  std::vector<double> sum(m.vocab_size(), 0.0), got(m.vocab_size(), 0.0);
  for (const auto* v : {&x, &y})
    for (std::size_t i = 0; i < v->nnz(); ++i) sum[v->indices[i]] += v->values[i];
  for (std::size_t i = 0; i < joined.nnz(); ++i) got[joined.indices[i]] = joined.values[i];
  for (std::size_t i = 0; i < sum.size(); ++i) {
    if (m.term(i).find(' ') != std::string::npos) continue;  // boundary bigrams
    EXPECT_NEAR(got[i], sum[i], 1e-12) << m.term(i);
  }
}

TEST(TfIdf, ValuesBoundedByMaxCountTimesMaxIdf) {
  Rng rng(4);
  std::vector<std::string> docs;
  for (int d = 0; d < 20; ++d) {
    std::string s;
    for (int w = 0; w < 15; ++w) s += "t" + std::to_string(rng.below(10)) + " ";
    docs.push_back(s);
  }
  auto c = unigrams();
  c.norm = TermNorm::kNone;
  const auto m = TfIdfModel::fit(docs, c);
  double max_idf = 0;
  for (std::size_t i = 0; i < m.vocab_size(); ++i) max_idf = std::max(max_idf, m.idf(i));
  for (const auto& d : docs) {
    const auto v = m.transform(d);
    for (double x : v.values) EXPECT_LE(x, 15 * max_idf + 1e-12);
  }
}

TEST(TfIdf, JsonRoundTripAndThreads) {
  std::vector<std::string> docs;
  for (int i = 0; i < 100; ++i) docs.push_back("w" + std::to_string(i % 7) + " shared w" + std::to_string(i % 13));
  const auto m1 = TfIdfModel::fit(docs, TfIdfConfig::classifier(), nullptr, 1);
  const auto m8 = TfIdfModel::fit(docs, TfIdfConfig::classifier(), nullptr, 8);
  EXPECT_EQ(m1.to_json(), m8.to_json());
  const auto back = TfIdfModel::from_json(m1.to_json());
  EXPECT_EQ(back.to_json(), m1.to_json());
  EXPECT_EQ(back.transform(docs[3]), m1.transform(docs[3]));
}

TEST(TopPhrases, DistinctivePhraseRanksFirst) {
  std::vector<std::pair<std::string, std::string>> docs;
  for (int i = 0; i < 10; ++i) {
    docs.push_back({"A", "the lighting suggests a calm scene number" + std::to_string(i)});
    docs.push_back({"B", "a calm scene with soft light number" + std::to_string(i)});
  }
  const auto c = make_corpus(docs);
  std::vector<std::string> texts;
  for (const auto& r : c.records()) texts.push_back(r.text);
  auto cfg = TfIdfConfig::phrases();
  const auto m = TfIdfModel::fit(texts, cfg, &default_stopwords());
  const auto top = top_phrases(c, m, "A", 3, {});
  ASSERT_FALSE(top.empty());
  EXPECT_EQ(top[0].term, "lighting suggests");

  const auto all = top_phrases(c, m, "A", 10000, {});
  EXPECT_LE(all.size(), m.vocab_size());
  for (std::size_t i = 1; i < all.size(); ++i) {
    EXPECT_TRUE(all[i - 1].score > all[i].score ||
                (all[i - 1].score == all[i].score && all[i - 1].term < all[i].term));
  }
  const TermSet excl{"lighting suggests"};
  EXPECT_NE(top_phrases(c, m, "A", 1, excl)[0].term, "lighting suggests");
  EXPECT_THROW(top_phrases(c, m, "Z", 3, {}), DataError);
}

TEST(TopPhrases, InvariantToDocumentOrder) {
  std::vector<std::pair<std::string, std::string>> docs;
  for (int i = 0; i < 12; ++i)
    docs.push_back({i % 2 ? "A" : "B", "x" + std::to_string(i % 5) + " y" + std::to_string(i % 3) + " z"});
  auto rev = docs;
  std::reverse(rev.begin(), rev.end());
  const auto c1 = make_corpus(docs);
  const auto c2 = make_corpus(rev);
  std::vector<std::string> texts;
  for (const auto& d : docs) texts.push_back(d.second);
  const auto m = TfIdfModel::fit(texts, unigrams());
  const auto a = top_phrases(c1, m, "A", 10, {});
  const auto b = top_phrases(c2, m, "A", 10, {});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].term, b[i].term);
    EXPECT_NEAR(a[i].score, b[i].score, 1e-12);
  }
}

TEST(WordFrequencies, Examples) {
  const auto c = make_corpus({{"A", "blue blue sky"}, {"B", "the sea"}, {"B", "sea"}});
  const auto f = word_frequencies(c, "A", {});
  EXPECT_EQ(f, (std::map<std::string, std::int64_t>{{"blue", 2}, {"sky", 1}}));
  const auto g = word_frequencies(c, "B", default_stopwords());
  EXPECT_EQ(g, (std::map<std::string, std::int64_t>{{"sea", 2}}));
  EXPECT_THROW(word_frequencies(c, "Q", {}), DataError);
  EXPECT_EQ(word_frequencies_csv(f).substr(0, 11), "term,count\n");
}

TEST(WordFrequencies, EmptyClassAndConservation) {
  auto base = make_corpus({{"A", "one two two"}, {"A", "three, four!"}, {"B", "x"}});
  const Corpus c(base.records(), LabelSpace({"A", "B", "C"}));
  EXPECT_TRUE(word_frequencies(c, "C", {}).empty());
  const auto f = word_frequencies(c, "A", {});
  std::int64_t sum = 0;
  for (const auto& [t, n] : f) sum += n;
  EXPECT_EQ(sum, static_cast<std::int64_t>(tokenize("one two two").size() + tokenize("three, four!").size()));
}
