#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "capgap/errors.hpp"
#include "capgap/lexicon.hpp"
#include "capgap/text.hpp"
#include "capgap/transform.hpp"

using namespace capgap;

namespace {

struct FixtureRow {
  std::string id;
  std::array<std::int64_t, 8> v{};
};

std::vector<FixtureRow> fixture_counts() {
  const auto csv = text::read_file(std::string(CAPGAP_FIXTURE_DIR) + "/lexicon_fixture_counts.csv");
  std::vector<FixtureRow> rows;
  const auto ls = text::lines(csv);
  for (std::size_t i = 1; i < ls.size(); ++i) {
    if (ls[i].empty()) continue;
    std::stringstream ss{std::string(ls[i])};
    FixtureRow r;
    std::getline(ss, r.id, ',');
    std::string cell;
    for (auto& v : r.v) {
      std::getline(ss, cell, ',');
      v = std::stoll(cell);
    }
    rows.push_back(r);
  }
  return rows;
}

Corpus fixture_corpus() { return load_corpus(std::string(CAPGAP_FIXTURE_DIR) + "/lexicon_fixture.jsonl"); }

Corpus small_corpus(const std::vector<std::pair<std::string, std::string>>& docs) {
  std::vector<CaptionRecord> rs;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    CaptionRecord r;
    r.caption_id = "c" + std::to_string(i);
    r.image_id = "i" + std::to_string(i / 3);
    r.source_label = docs[i].first;
    r.text = docs[i].second;
    rs.push_back(r);
  }
  return Corpus(rs);
}

}  // namespace

TEST(Colors, LongestMatchConsumes) {
  const auto c = count_colors(default_color_lexicon(), "a dark blue sky over crimson leaves and blue water");
  EXPECT_EQ(c.nuanced, 2);
  EXPECT_EQ(c.basic, 1);
  const auto z = count_colors(default_color_lexicon(), "no colors here");
  EXPECT_EQ(z.basic + z.nuanced, 0);
}

TEST(Colors, StableUnderStripMarkdown) {
  for (const char* s : {"**dark blue** and _red_", "- crimson\n- `green`", "# Blue heading"}) {
    const auto a = count_colors(default_color_lexicon(), s);
    const auto b = count_colors(default_color_lexicon(), strip_markdown(s));
    EXPECT_EQ(a.basic, b.basic) << s;
    EXPECT_EQ(a.nuanced, b.nuanced) << s;
  }
}

TEST(Colors, IndependentOfDictionaryOrder) {
  const auto basic = parse_lexicon_file("red\nblue\ngreen\n", "b");
  const auto basic_rev = parse_lexicon_file("green\nblue\nred\n", "b");
  const auto nuanced = parse_lexicon_file("navy blue\nblue green\nnavy\n", "n");
  const auto mods = parse_lexicon_file("dark\n", "m");
  const PhraseLexicon a(basic, nuanced, mods), b(basic_rev, nuanced, mods);
  const std::string s = "dark navy blue green red blue green navy";
  EXPECT_EQ(a.count(s).matches, b.count(s).matches);
}

TEST(Colors, OverlappingListsRejected) {
  EXPECT_THROW(PhraseLexicon(parse_lexicon_file("red\n", "b"), parse_lexicon_file("red\n", "n")), DataError);
}

TEST(Textures, ShippedDictionaryExample) {
  const auto t = count_textures(default_texture_lexicon(), "a rough wooden table with a matte finish");
  EXPECT_EQ(t.basic, 1);
  EXPECT_EQ(t.nuanced, 2);
  EXPECT_EQ(count_textures(default_texture_lexicon(), "").basic, 0);
}

TEST(Composition, KeywordPresence) {
  const auto f = composition_flags("in the foreground a tree; the background shows mountains");
  EXPECT_TRUE(f.spatial_layers);
  EXPECT_FALSE(f.subject_focus);
  EXPECT_FALSE(f.guiding_elements);
  EXPECT_FALSE(f.balance_symmetry);
  EXPECT_TRUE(composition_flags("the main subject is in sharp focus").subject_focus);
}

TEST(Fixture, HandCountsMatchExactly) {
  const auto corpus = fixture_corpus();
  const auto rows = fixture_counts();
  ASSERT_EQ(rows.size(), 50u);
  for (const auto& row : rows) {
    const auto* r = corpus.find(row.id);
    ASSERT_NE(r, nullptr) << row.id;
    const auto c = count_colors(default_color_lexicon(), r->text);
    const auto t = count_textures(default_texture_lexicon(), r->text);
    const auto f = composition_flags(r->text);
    EXPECT_EQ(c.basic, row.v[0]) << row.id << ": " << r->text;
    EXPECT_EQ(c.nuanced, row.v[1]) << row.id << ": " << r->text;
    EXPECT_EQ(t.basic, row.v[2]) << row.id << ": " << r->text;
    EXPECT_EQ(t.nuanced, row.v[3]) << row.id << ": " << r->text;
    for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(f.get(k) ? 1 : 0, row.v[4 + k]) << row.id << " " << kCompositionCriteria[k];
  }
}

TEST(CorpusStats, Arithmetic) {
  const auto c = small_corpus({{"A", "red green blue"}, {"A", "nothing"}, {"B", "x"}});
  const auto rep = corpus_stats(c);
  const auto& a = *rep.per_label[0].color;
  EXPECT_EQ(a.total_basic, 3);
  EXPECT_DOUBLE_EQ(a.pct_with_basic(), 50.0);
  EXPECT_DOUBLE_EQ(a.avg_basic(), 1.5);
}

TEST(CorpusStats, OrderInvariantAndConserving) {
  const auto c = fixture_corpus();
  auto recs = c.records();
  std::reverse(recs.begin(), recs.end());
  const Corpus rev(recs, c.labels());
  const auto a = corpus_stats(c, {}, default_color_lexicon(), default_texture_lexicon(),
                              default_composition_lexicon(), 1);
  const auto b = corpus_stats(rev, {}, default_color_lexicon(), default_texture_lexicon(),
                              default_composition_lexicon(), 8);
  EXPECT_EQ(a, b);
  for (const auto& l : a.per_label) {
    EXPECT_EQ(l.color->avg_basic() * static_cast<double>(l.color->n), static_cast<double>(l.color->total_basic));
    EXPECT_EQ(l.texture->avg_nuanced() * static_cast<double>(l.texture->n),
              static_cast<double>(l.texture->total_nuanced));
  }
  EXPECT_EQ(LexiconReport::from_json(a.to_json()), a);
  EXPECT_NE(a.table4_csv().find("highest"), std::string::npos);
  EXPECT_NE(a.table5_csv().find("spatial_layers"), std::string::npos);
}

TEST(Judgments, RankGroups) {
  const auto c = small_corpus({{"A", "a"}, {"B", "b"}, {"C", "c"}});
  const std::string ok =
      R"({"item_id":"c0","kind":"detail_rank","value":1,"judge_tag":"j"})" "\n"
      R"({"item_id":"c1","kind":"detail_rank","value":2,"judge_tag":"j"})" "\n"
      R"({"item_id":"c2","kind":"detail_rank","value":3,"judge_tag":"j"})" "\n";
  const auto js = parse_judgments(ok, c);
  EXPECT_EQ(js.size(), 3u);
  const auto sum = summarize_judgments(js, c);
  ASSERT_EQ(sum.ranks.size(), 1u);
  EXPECT_DOUBLE_EQ(sum.ranks[0].percent(0, 1), 100.0);
  for (std::size_t l = 0; l < 3; ++l) {
    double total = 0;
    for (std::size_t r = 1; r <= 3; ++r) total += sum.ranks[0].percent(l, r);
    EXPECT_NEAR(total, 100.0, 0.01);
  }
  EXPECT_EQ(JudgmentSummary::from_json(sum.to_json()), sum);

  const std::string twice =
      R"({"item_id":"c0","kind":"detail_rank","value":1,"judge_tag":"j"})" "\n"
      R"({"item_id":"c1","kind":"detail_rank","value":1,"judge_tag":"j"})" "\n";
  EXPECT_THROW(parse_judgments(twice, c), DataError);
  EXPECT_THROW(parse_judgments(R"({"item_id":"c0","kind":"detail_rank","value":4,"judge_tag":"j"})", c),
               DataError);
  EXPECT_THROW(parse_judgments(R"({"item_id":"zz","kind":"detail_rank","value":1,"judge_tag":"j"})", c),
               DataError);
  EXPECT_THROW(parse_judgments(std::string(R"({"item_id":"c0","kind":"texture","value":{"basic":1,"nuanced":0},"judge_tag":"j"})") +
                                   "\n" + R"({"item_id":"c0","kind":"texture","value":{"basic":2,"nuanced":0},"judge_tag":"j"})",
                               c),
               DataError);
}

TEST(Judgments, TextureAndCompositionFeedJudgedReport) {
  const auto c = small_corpus({{"A", "a"}, {"B", "b"}});
  const std::string s =
      R"({"item_id":"c0","kind":"texture","value":{"basic":2,"nuanced":1},"judge_tag":"q"})" "\n"
      R"({"item_id":"c1","kind":"composition","value":{"spatial_layers":true,"subject_focus":false,"guiding_elements":false,"balance_symmetry":true},"judge_tag":"q"})" "\n";
  const auto sum = summarize_judgments(parse_judgments(s, c), c);
  ASSERT_TRUE(sum.judged);
  EXPECT_NE(sum.judged->source.find("judge"), std::string::npos);
  EXPECT_EQ(sum.judged->per_label[0].texture->total_basic, 2);
  EXPECT_EQ(sum.judged->per_label[1].composition->flagged[3], 1);
}
