#pragma once

#include <cstddef>
#include <string>
#include <string_view>

// Character offsets throughout the engine are counted in Unicode code points.
namespace qsearch::utf8 {

// Decodes UTF-8, replacing malformed sequences with U+FFFD.
std::u32string decode(std::string_view bytes);

std::string encode(std::u32string_view text);
void append(std::string& out, char32_t cp);

std::size_t length(std::string_view text);

// Slice by code point offsets [start, end).
std::string substr(std::string_view text, std::size_t start, std::size_t end);

bool is_space(char32_t cp);
bool is_cjk(char32_t cp);
bool is_alnum(char32_t cp);

// ASCII lowercasing plus Latin-1/Latin Extended basic folding.
char32_t to_lower(char32_t cp);
std::string to_lower(std::string_view text);

std::string trim(std::string_view text);
// Trims and collapses internal whitespace runs to one ASCII space.
std::string normalize_space(std::string_view text);

} // namespace qsearch::utf8
