#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace charcurve::utf8 {

// Decodes UTF-8 into codepoints. Throws Error(kInvalidEncoding) on overlong
// forms, surrogates, truncated sequences and values above U+10FFFF.
std::vector<char32_t> decode(std::string_view text);

void append(std::string& out, char32_t cp);
std::string encode(char32_t cp);

// One string per codepoint.
std::vector<std::string> split_chars(std::string_view text);

std::size_t length(std::string_view text);

bool is_valid(std::string_view text);

// General category L* or N*.
bool is_alnum(char32_t cp);

// Unicode White_Space property.
bool is_space(char32_t cp);

// Collapses whitespace runs into one U+0020 and trims both ends.
std::string collapse_whitespace(std::string_view text);

}  // namespace charcurve::utf8
