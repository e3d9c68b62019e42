#include "charcurve/utf8.hpp"

#include <algorithm>
#include <array>
#include <utility>

#include "charcurve/error.hpp"

namespace charcurve::utf8 {
namespace {

struct Range {
  char32_t lo;
  char32_t hi;
};

constexpr Range kAlnumRanges[] = {
#include "unicode_tables.inc"
};

[[noreturn]] void bad(std::size_t offset) {
  throw Error(ErrorCode::kInvalidEncoding, "invalid UTF-8 at byte " + std::to_string(offset));
}

// Returns the codepoint at text[i] and advances i.
char32_t next(std::string_view text, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(text[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int extra = 0;
  char32_t cp = 0;
  char32_t min = 0;
  if ((b0 & 0xE0) == 0xC0) {
    extra = 1;
    cp = b0 & 0x1F;
    min = 0x80;
  } else if ((b0 & 0xF0) == 0xE0) {
    extra = 2;
    cp = b0 & 0x0F;
    min = 0x800;
  } else if ((b0 & 0xF8) == 0xF0) {
    extra = 3;
    cp = b0 & 0x07;
    min = 0x10000;
  } else {
    bad(i);
  }
  if (i + extra >= text.size()) bad(i);
  for (int k = 1; k <= extra; ++k) {
    const auto b = static_cast<unsigned char>(text[i + k]);
    if ((b & 0xC0) != 0x80) bad(i);
    cp = (cp << 6) | (b & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) bad(i);
  i += extra + 1;
  return cp;
}

}  // namespace

std::vector<char32_t> decode(std::string_view text) {
  std::vector<char32_t> out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) out.push_back(next(text, i));
  return out;
}

void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string encode(char32_t cp) {
  std::string s;
  append(s, cp);
  return s;
}

std::vector<std::string> split_chars(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t start = i;
    next(text, i);
    out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

std::size_t length(std::string_view text) {
  std::size_t n = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    next(text, i);
    ++n;
  }
  return n;
}

bool is_valid(std::string_view text) {
  try {
    std::size_t i = 0;
    while (i < text.size()) next(text, i);
    return true;
  } catch (const Error&) {
    return false;
  }
}

bool is_alnum(char32_t cp) {
  const auto it = std::upper_bound(std::begin(kAlnumRanges), std::end(kAlnumRanges), cp,
                                   [](char32_t v, const Range& r) { return v < r.lo; });
  if (it == std::begin(kAlnumRanges)) return false;
  return cp <= std::prev(it)->hi;
}

bool is_space(char32_t cp) {
  switch (cp) {
    case 0x0009: case 0x000A: case 0x000B: case 0x000C: case 0x000D:
    case 0x0020: case 0x0085: case 0x00A0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t start = i;
    const char32_t cp = next(text, i);
    if (is_space(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.append(text.substr(start, i - start));
  }
  return out;
}

}  // namespace charcurve::utf8
