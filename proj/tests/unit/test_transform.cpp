#include <gtest/gtest.h>

#include <algorithm>

#include "capgap/errors.hpp"
#include "capgap/text.hpp"
#include "capgap/transform.hpp"

using namespace capgap;

namespace {

std::u32string sorted_cps(std::string_view s) {
  auto cps = text::decode(s);
  std::sort(cps.begin(), cps.end());
  return cps;
}

std::vector<std::string> sorted_words(std::string_view s) {
  auto w = text::split_whitespace(s);
  std::sort(w.begin(), w.end());
  return w;
}

}  // namespace

TEST(StripMarkdown, Examples) {
  EXPECT_EQ(strip_markdown("**bold** and `code`"), "bold and code");
  EXPECT_EQ(strip_markdown("- item one\n- item two"), "item one\nitem two");
  EXPECT_EQ(strip_markdown("## Title\n> quoted"), "Title\nquoted");
  EXPECT_EQ(strip_markdown("see [the docs](http://x.y) now"), "see the docs now");
  EXPECT_EQ(strip_markdown("above\n---\nbelow"), "above\n\nbelow");
}

TEST(StripMarkdown, Idempotent) {
  for (const char* s : {"**a** _b_", "- - nested", "# # twice", "[[x](y)](z)", "plain"}) {
    const auto once = strip_markdown(s);
    EXPECT_EQ(strip_markdown(once), once) << s;
  }
}

TEST(StripSpecialChars, Examples) {
  EXPECT_EQ(strip_special_chars("sky\xe2\x80\x94" "blue! (vivid)"), "sky blue vivid");
  EXPECT_EQ(strip_special_chars("a  b"), "a b");
  EXPECT_EQ(strip_special_chars("abc123"), "abc123");
  EXPECT_EQ(strip_special_chars("low-angle, it's 3.5"), "low-angle, it's 3.5");
  EXPECT_EQ(strip_special_chars("sky\xe2\x80\x94" "blue", false), "skyblue");
}

TEST(Shuffle, Trivial) {
  EXPECT_EQ(shuffle_letters("a", 1), "a");
  EXPECT_EQ(shuffle_words("a", 1), "a");
  EXPECT_EQ(shuffle_words("", 1), "");
}

TEST(Shuffle, PreservesMultisets) {
  const std::string s = "the quick brown fox jumps over the lazy dog caf\xc3\xa9";
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_EQ(sorted_words(shuffle_words(s, seed)), sorted_words(s));
    const auto letters = shuffle_letters(s, seed);
    EXPECT_EQ(sorted_cps(letters), sorted_cps(s));
    // whitespace stays in place, so token lengths do too
    const auto a = text::split_whitespace(letters);
    const auto b = text::split_whitespace(s);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(sorted_cps(a[i]), sorted_cps(b[i]));
    EXPECT_EQ(sorted_cps(shuffle_letters(s, seed, true)), sorted_cps(s));
  }
}

TEST(Shuffle, DeterministicAndSeedSensitive) {
  const std::string s = "one two three four five six seven eight nine ten";
  EXPECT_EQ(shuffle_words(s, 7), shuffle_words(s, 7));
  bool differs = false;
  for (std::uint64_t seed = 0; seed < 5; ++seed) differs |= shuffle_words(s, seed) != shuffle_words(s, seed + 100);
  EXPECT_TRUE(differs);
}

TEST(TransformOptions, SeedPresenceMatchesKind) {
  TransformOptions topts;
  topts.kind = TransformKind::kShuffleWords;
  EXPECT_THROW(topts.validate(), ArgumentError);
  topts.seed = 1;
  EXPECT_NO_THROW(topts.validate());
  topts.kind = TransformKind::kStripMarkdown;
  EXPECT_THROW(topts.validate(), ArgumentError);
  EXPECT_EQ(parse_transform_kind("shuffle_letters"), TransformKind::kShuffleLetters);
  EXPECT_FALSE(parse_transform_kind("reverse"));
}

TEST(TransformCorpus, KeepsIdsAndTagsVariant) {
  std::vector<CaptionRecord> rs;
  for (int i = 0; i < 30; ++i) {
    CaptionRecord r;
    r.caption_id = "c" + std::to_string(i);
    r.image_id = "i" + std::to_string(i / 3);
    r.source_label = i % 2 ? "A" : "B";
    r.text = "word" + std::to_string(i) + " alpha beta gamma delta";
    rs.push_back(r);
  }
  const Corpus c(rs);
  TransformOptions topts{TransformKind::kShuffleWords, 11, false, true};
  const auto out1 = transform_corpus(c, topts, 1);
  const auto out8 = transform_corpus(c, topts, 8);
  EXPECT_EQ(out1.records(), out8.records());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& r = out1.records()[i];
    EXPECT_EQ(r.caption_id, c.records()[i].caption_id);
    EXPECT_EQ(r.source_label, c.records()[i].source_label);
    EXPECT_EQ(r.variant, Variant::kTransformed);
    EXPECT_EQ(r.provenance, "shuffle_words");
    EXPECT_EQ(r.text, apply_transform(topts, c.records()[i].text, r.caption_id));
  }
}
