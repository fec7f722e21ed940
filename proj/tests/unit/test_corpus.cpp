#include <gtest/gtest.h>

#include <set>
#include <string>

#include "capgap/corpus.hpp"
#include "capgap/errors.hpp"
#include "capgap/rng.hpp"

using namespace capgap;

namespace {

std::string line(const std::string& id, const std::string& image, const std::string& label,
                 const std::string& text = "a caption") {
  return R"({"caption_id":")" + id + R"(","image_id":")" + image +
         R"(","prompt_tier":"coarse","source_label":")" + label + R"(","text":")" + text +
         "\"}\n";
}

CaptionRecord rec(std::string id, std::string image, std::string label) {
  CaptionRecord r;
  r.caption_id = std::move(id);
  r.image_id = std::move(image);
  r.source_label = std::move(label);
  r.text = "text";
  return r;
}

}  // namespace

TEST(LabelSpace, RejectsDuplicatesAndSingletons) {
  EXPECT_THROW(LabelSpace({"a", "a"}), ArgumentError);
  EXPECT_THROW(LabelSpace({"a"}), ArgumentError);
  const LabelSpace l({"b", "a"});
  EXPECT_EQ(l.index_of("a"), 1u);
  EXPECT_FALSE(l.index_of("c"));
  EXPECT_EQ(l.extended("orig").label(2), "orig");
}

TEST(Corpus, ThreeLineFile) {
  const auto c = parse_corpus(line("1", "x", "A") + line("2", "x", "B") + line("3", "y", "A"));
  EXPECT_EQ(c.size(), 3u);
  EXPECT_EQ(c.labels().size(), 2u);
  EXPECT_EQ(c.labels().label(0), "A");
  EXPECT_EQ(c.count_per_label(), (std::vector<std::size_t>{2, 1}));
}

TEST(Corpus, DuplicateIdNamesTheId) {
  try {
    parse_corpus(line("dup7", "x", "A") + line("dup7", "y", "B"));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("dup7"), std::string::npos);
  }
}

TEST(Corpus, MalformedLineReportsLineNumber) {
  try {
    parse_corpus(line("1", "x", "A") + "\n{not json\n");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Corpus, EmptyCorpusAndEmptyText) {
  EXPECT_THROW(parse_corpus(""), DataError);
  EXPECT_THROW(parse_corpus(line("1", "x", "A", "   ") + line("2", "x", "B")), DataError);
}

TEST(Corpus, LabelOutsideSuppliedSpace) {
  EXPECT_THROW(parse_corpus(line("1", "x", "A") + line("2", "x", "C"), LabelSpace({"A", "B"})),
               DataError);
}

TEST(Corpus, SerializeRoundTrip) {
  auto r = rec("c1", "i1", "A");
  r.prompt_tier = PromptTier::kVeryDetailed;
  r.variant = Variant::kParaphrase;
  r.provenance = "prompt 2";
  r.text = "quote \" and \xc3\xa9";
  std::vector<CaptionRecord> rs{r, rec("c2", "i1", "B")};
  const Corpus c(rs);
  const auto back = parse_corpus(serialize_corpus(c));
  EXPECT_EQ(back.records(), c.records());
}

TEST(Corpus, ParsingIsThreadIndependent) {
  std::string s;
  for (int i = 0; i < 200; ++i) s += line("c" + std::to_string(i), "i" + std::to_string(i / 3), i % 2 ? "A" : "B");
  EXPECT_EQ(parse_corpus(s, std::nullopt, 1).records(), parse_corpus(s, std::nullopt, 8).records());
}

TEST(Corpus, ImageOfItem) {
  const Corpus c(std::vector<CaptionRecord>{rec("c1", "i1", "A"), rec("c2", "i2", "B")});
  EXPECT_EQ(c.image_of_item("c1"), "i1");
  EXPECT_EQ(c.image_of_item("c2#img"), "i2");
  EXPECT_EQ(c.image_of_item("i2"), "i2");
  EXPECT_FALSE(c.image_of_item("zzz"));
}

TEST(Split, TenImagesEightTrain) {
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i) ids.push_back("img" + std::to_string(i));
  const auto s = grouped_split(ids, 0.8, 42);
  EXPECT_EQ(s.train_images(), 8u);
  EXPECT_EQ(s.test_images(), 2u);
}

TEST(Split, SingleImageIsAnError) {
  const std::vector<std::string> ids{"only"};
  EXPECT_THROW(grouped_split(ids, 0.8, 1), DataError);
  const std::vector<std::string> two{"a", "b"};
  EXPECT_THROW(grouped_split(two, 0.0, 1), ArgumentError);
  EXPECT_THROW(grouped_split(two, 1.0, 1), ArgumentError);
}

TEST(Split, DependsOnlyOnIdSet) {
  std::vector<std::string> ids;
  for (int i = 0; i < 50; ++i) ids.push_back("img" + std::to_string(i));
  auto shuffled = ids;
  Rng rng(3);
  rng.shuffle(std::span<std::string>(shuffled));
  shuffled.push_back(ids[4]);  // duplicates collapse
  EXPECT_EQ(grouped_split(ids, 0.7, 9), grouped_split(shuffled, 0.7, 9));
  EXPECT_NE(grouped_split(ids, 0.7, 9).sides(), grouped_split(ids, 0.7, 10).sides());
}

TEST(Split, NineRecordsPerImageStayTogether) {
  std::vector<CaptionRecord> rs;
  for (int img = 0; img < 1000; ++img)
    for (int k = 0; k < 9; ++k)
      rs.push_back(rec("c" + std::to_string(img) + "_" + std::to_string(k), "i" + std::to_string(img),
                       k % 3 == 0 ? "A" : (k % 3 == 1 ? "B" : "C")));
  const Corpus c(rs);
  const auto s = grouped_split(c, 0.8, 5);
  const auto train = records_on_side(c, s, Side::kTrain);
  const auto test = records_on_side(c, s, Side::kTest);
  EXPECT_EQ(train.size(), 7200u);
  EXPECT_EQ(test.size(), 1800u);
  std::set<std::string> train_images;
  for (auto i : train) train_images.insert(c.records()[i].image_id);
  for (auto i : test) EXPECT_FALSE(train_images.count(c.records()[i].image_id));
}

TEST(Split, SerializeRoundTripAndUncoveredImages) {
  std::vector<std::string> ids{"a", "b", "c", "d"};
  const auto s = grouped_split(ids, 0.5, 1);
  EXPECT_EQ(parse_split(serialize_split(s)), s);
  EXPECT_THROW(parse_split("{}"), DataError);
  const Corpus c(std::vector<CaptionRecord>{rec("1", "a", "A"), rec("2", "zz", "B")});
  EXPECT_THROW(records_on_side(c, s, Side::kTrain), DataError);
}

TEST(FourWay, AddsOriginalClass) {
  const Corpus c(std::vector<CaptionRecord>{rec("1", "a", "A"), rec("2", "a", "B"), rec("3", "a", "C")});
  const std::vector<CaptionRecord> orig{rec("o1", "a", "original")};
  const auto f = make_four_way(c, orig, "original");
  EXPECT_EQ(f.labels().size(), 4u);
  EXPECT_EQ(f.labels().label(3), "original");
  EXPECT_EQ(f.size(), 4u);
  EXPECT_THROW(make_four_way(c, std::vector<CaptionRecord>{}, "original"), DataError);
}
