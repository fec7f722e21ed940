#include <gtest/gtest.h>

#include <filesystem>

#include "capgap/errors.hpp"
#include "capgap/text.hpp"

namespace t = capgap::text;

TEST(Text, ValidatesUtf8) {
  EXPECT_TRUE(t::is_valid_utf8("caf\xc3\xa9"));
  EXPECT_FALSE(t::is_valid_utf8("\xc3"));
  EXPECT_FALSE(t::is_valid_utf8("\xff\xfe"));
  EXPECT_THROW(t::decode("\xc3("), capgap::DataError);
}

TEST(Text, DecodeEncodeRoundTrip) {
  const std::string s = "sky \xe2\x80\x94 blue \xf0\x9f\x8c\x88";
  EXPECT_EQ(t::encode(t::decode(s)), s);
  EXPECT_EQ(t::decode(s).size(), 12u);
}

TEST(Text, NfcComposes) {
  // e + combining acute -> precomposed e-acute
  EXPECT_EQ(t::nfc_normalize("e\xcc\x81"), "\xc3\xa9");
}

TEST(Text, CharacterClasses) {
  EXPECT_TRUE(t::is_alnum(U'a'));
  EXPECT_TRUE(t::is_alnum(U'7'));
  EXPECT_TRUE(t::is_alnum(U'é'));
  EXPECT_FALSE(t::is_alnum(U'-'));
  EXPECT_TRUE(t::is_mark(U'́'));
  EXPECT_TRUE(t::is_space(U' '));
  EXPECT_TRUE(t::is_dash(U'—'));
  EXPECT_EQ(t::to_lower(U'É'), U'é');
}

TEST(Text, TrimAndSplit) {
  EXPECT_EQ(t::trim("  a b \n"), "a b");
  EXPECT_EQ(t::trim(""), "");
  EXPECT_EQ(t::split_whitespace("a\tb  c"), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(t::split_whitespace("   ").empty());
}

TEST(Text, NoBreakSpaceSplits) {
  EXPECT_EQ(t::split_whitespace("a\xc2\xa0" "b"), (std::vector<std::string>{"a", "b"}));
}

TEST(Text, Join) {
  const std::vector<std::string> parts{"a", "b", "c"};
  EXPECT_EQ(t::join(parts, ", "), "a, b, c");
  EXPECT_EQ(t::join(std::vector<std::string>{}, ","), "");
}

TEST(Text, LinesStripCarriageReturn) {
  const auto l = t::lines("a\r\nb\n\nc");
  ASSERT_EQ(l.size(), 4u);
  EXPECT_EQ(l[0], "a");
  EXPECT_EQ(l[1], "b");
  EXPECT_EQ(l[2], "");
  EXPECT_EQ(l[3], "c");
}

TEST(Text, FileRoundTripAndMissingFile) {
  const auto p = std::filesystem::temp_directory_path() / "capgap_text_test.txt";
  t::write_file(p, "hello\n");
  EXPECT_EQ(t::read_file(p), "hello\n");
  std::filesystem::remove(p);
  EXPECT_THROW(t::read_file(p), capgap::DataError);
}
