#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// UTF-8 and Unicode helpers backed by ICU. Every text-level operation in the
// toolkit goes through these so character classes and case mapping are the
// same on every platform.
namespace capgap::text {

bool is_valid_utf8(std::string_view s);

// Throws DataError on invalid UTF-8.
std::u32string decode(std::string_view s);
std::string encode(std::u32string_view cps);
void append_utf8(std::string& out, char32_t cp);

std::string nfc_normalize(std::string_view s);

bool is_alnum(char32_t cp);  // general category L* or Nd
bool is_mark(char32_t cp);   // Mn, Mc, Me
bool is_space(char32_t cp);  // White_Space property
bool is_dash(char32_t cp);   // Dash property
char32_t to_lower(char32_t cp);

std::string trim(std::string_view s);

// Splits on Unicode whitespace, dropping empty pieces.
std::vector<std::string> split_whitespace(std::string_view s);

std::string join(std::span<const std::string> parts, std::string_view sep);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

// Iterates the lines of a file-like buffer, stripping a trailing '\r'.
std::vector<std::string_view> lines(std::string_view buffer);

}  // namespace capgap::text
