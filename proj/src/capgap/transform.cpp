#include "capgap/transform.hpp"

#include <regex>
#include <vector>

#include "capgap/errors.hpp"
#include "capgap/parallel.hpp"
#include "capgap/rng.hpp"
#include "capgap/text.hpp"

namespace capgap {

std::string_view to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::kStripMarkdown: return "strip_markdown";
    case TransformKind::kStripSpecialChars: return "strip_special_chars";
    case TransformKind::kShuffleWords: return "shuffle_words";
    case TransformKind::kShuffleLetters: return "shuffle_letters";
  }
  return "strip_markdown";
}

std::optional<TransformKind> parse_transform_kind(std::string_view s) {
  for (auto k : {TransformKind::kStripMarkdown, TransformKind::kStripSpecialChars,
                 TransformKind::kShuffleWords, TransformKind::kShuffleLetters}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

void TransformOptions::validate() const {
  const bool shuffle =
      kind == TransformKind::kShuffleWords || kind == TransformKind::kShuffleLetters;
  if (shuffle && !seed) throw ArgumentError(std::string(to_string(kind)) + " needs a seed");
  if (!shuffle && seed) {
    throw ArgumentError(std::string(to_string(kind)) + " does not take a seed");
  }
}

namespace {

const std::regex& link_pattern() {
  static const std::regex re(R"(!?\[([^\[\]]*)\]\([^()]*\))");
  return re;
}
const std::regex& leading_marker_pattern() {
  static const std::regex re(R"(^[ \t]*(#{1,6}[ \t]+|[-*+][ \t]+|>[ \t]?))");
  return re;
}
const std::regex& rule_pattern() {
  static const std::regex re(R"(^[ \t]*([-*_][ \t]*){3,}$)");
  return re;
}

std::string strip_markdown_once(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  const auto ls = text::lines(text);
  for (std::size_t i = 0; i < ls.size(); ++i) {
    std::string line(ls[i]);
    if (std::regex_match(line, rule_pattern())) {
      line.clear();
    } else {
      line = std::regex_replace(line, leading_marker_pattern(), "",
                                std::regex_constants::format_first_only);
      line = std::regex_replace(line, link_pattern(), "$1");
      std::erase_if(line, [](char c) { return c == '*' || c == '_' || c == '`'; });
    }
    if (i) out += '\n';
    out += line;
  }
  if (!text.empty() && text.back() == '\n') out += '\n';
  return out;
}

}  // namespace

std::string strip_markdown(std::string_view text) {
  std::string current(text);
  for (;;) {
    std::string next = strip_markdown_once(current);
    if (next == current) return next;
    current = std::move(next);
  }
}

std::string strip_special_chars(std::string_view input, bool dash_to_space) {
  std::string out;
  out.reserve(input.size());
  bool pending_space = false;
  auto emit = [&](char32_t cp) {
    if (pending_space && !out.empty()) out += ' ';
    pending_space = false;
    text::append_utf8(out, cp);
  };
  for (char32_t cp : text::decode(input)) {
    if (text::is_alnum(cp) || text::is_mark(cp) || cp == U'.' || cp == U',' || cp == U'\'' ||
        cp == U'-') {
      emit(cp);
    } else if (text::is_space(cp) || (dash_to_space && text::is_dash(cp))) {
      pending_space = true;
    }
  }
  return out;
}

std::string shuffle_words(std::string_view text, std::uint64_t seed) {
  auto words = text::split_whitespace(text);
  Rng rng(seed);
  rng.shuffle(std::span<std::string>(words));
  return text::join(words, " ");
}

std::string shuffle_letters(std::string_view input, std::uint64_t seed, bool global) {
  std::u32string cps = text::decode(input);
  Rng rng(seed);
  if (global) {
    rng.shuffle(std::span<char32_t>(cps));
    return text::encode(cps);
  }
  std::size_t i = 0;
  while (i < cps.size()) {
    if (text::is_space(cps[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < cps.size() && !text::is_space(cps[j])) ++j;
    rng.shuffle(std::span<char32_t>(cps.data() + i, j - i));
    i = j;
  }
  return text::encode(cps);
}

std::string apply_transform(const TransformOptions& topts, std::string_view text,
                            std::string_view record_key) {
  switch (topts.kind) {
    case TransformKind::kStripMarkdown:
      return strip_markdown(text);
    case TransformKind::kStripSpecialChars:
      return strip_special_chars(text, topts.dash_to_space);
    case TransformKind::kShuffleWords:
      return shuffle_words(text, derive_seed(*topts.seed, record_key));
    case TransformKind::kShuffleLetters:
      return shuffle_letters(text, derive_seed(*topts.seed, record_key), topts.global_letters);
  }
  return std::string(text);
}

Corpus transform_corpus(const Corpus& corpus, const TransformOptions& topts, int threads) {
  topts.validate();
  std::vector<CaptionRecord> out = corpus.records();
  parallel_for(out.size(), threads, [&](std::size_t i) {
    out[i].text = apply_transform(topts, out[i].text, out[i].caption_id);
    out[i].variant = Variant::kTransformed;
    out[i].provenance = std::string(to_string(topts.kind));
  });
  return Corpus(std::move(out), corpus.labels());
}

}  // namespace capgap
