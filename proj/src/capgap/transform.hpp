#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "capgap/corpus.hpp"

namespace capgap {

enum class TransformKind { kStripMarkdown, kStripSpecialChars, kShuffleWords, kShuffleLetters };

std::string_view to_string(TransformKind kind);
std::optional<TransformKind> parse_transform_kind(std::string_view s);

struct TransformOptions {
  TransformKind kind = TransformKind::kStripMarkdown;
  std::optional<std::uint64_t> seed;  // present iff kind is a shuffle
  bool global_letters = false;        // shuffle_letters across the whole text
  bool dash_to_space = true;          // strip_special_chars: dashes become spaces

  // Throws ArgumentError when the seed presence does not match the kind.
  void validate() const;
};

// Removes heading markers, list bullets, blockquote markers, horizontal rules,
// emphasis characters (*, _, `) and link/image syntax (keeping link text).
// Applied until a fixed point, so it is idempotent.
std::string strip_markdown(std::string_view text);

// Keeps letters, digits, combining marks, spaces and . , ' - ; other
// whitespace becomes a space; other dash punctuation becomes a space when
// `dash_to_space`, otherwise it is dropped. Space runs collapse and the result
// is trimmed.
std::string strip_special_chars(std::string_view text, bool dash_to_space = true);

// Permutes whitespace-delimited words; output words are joined by one space.
std::string shuffle_words(std::string_view text, std::uint64_t seed);

// Permutes code points within each whitespace-delimited token, leaving every
// whitespace character in place. With `global`, all code points (whitespace
// included) are permuted across the text.
std::string shuffle_letters(std::string_view text, std::uint64_t seed, bool global = false);

// Applies `topts` to one text. Shuffles use derive_seed(topts.seed, record_key).
std::string apply_transform(const TransformOptions& topts, std::string_view text,
                            std::string_view record_key);

// Corpus-wide application. Output records keep their ids and labels and get
// variant=transformed, provenance=<kind name>.
Corpus transform_corpus(const Corpus& corpus, const TransformOptions& topts, int threads = 1);

}  // namespace capgap
