#include "charcurve/pretok.hpp"

#include <algorithm>

#include "charcurve/error.hpp"
#include "charcurve/utf8.hpp"

namespace charcurve {
namespace {

// Calls emit(unit, follows_space) for every unit of a normalized sentence.
template <typename Emit>
void split_units(std::string_view normalized, Emit&& emit) {
  std::string current;
  bool current_follows_space = false;
  bool pending_space = !normalized.empty();
  const auto flush = [&] {
    if (!current.empty()) emit(current, current_follows_space);
    current.clear();
    current_follows_space = false;
  };
  for (const char32_t cp : utf8::decode(normalized)) {
    if (cp == U' ') {
      flush();
      pending_space = true;
      continue;
    }
    const bool alnum = utf8::is_alnum(cp);
    if (pending_space || !alnum) flush();
    if (pending_space) {
      current_follows_space = true;
      pending_space = false;
    }
    utf8::append(current, cp);
    if (!alnum) flush();
  }
  flush();
}

}  // namespace

PreTokenizedSentence pretokenize(std::string_view sentence) {
  if (!utf8::is_valid(sentence)) {
    throw Error(ErrorCode::kInvalidEncoding, "sentence is not valid UTF-8");
  }
  if (sentence.find(kMarker) != std::string_view::npos) {
    throw Error(ErrorCode::kRawMarkerInInput,
                "input contains the space marker '" + std::string(kMarkerString) + "'");
  }
  const std::string normalized = utf8::collapse_whitespace(sentence);
  PreTokenizedSentence out;
  out.original_length = utf8::length(normalized);
  split_units(normalized, [&](const std::string& unit, bool follows_space) {
    out.units.push_back(follows_space ? std::string(kMarkerString) + unit : unit);
  });
  return out;
}

std::string detokenize(std::span<const std::string> units) {
  std::string joined;
  for (const auto& u : units) joined += u;
  if (joined.empty()) return joined;
  if (joined.front() != kMarker) {
    throw Error(ErrorCode::kMalformedMarker, "text does not start with the space marker");
  }
  if (joined.back() == kMarker) {
    throw Error(ErrorCode::kMalformedMarker, "trailing space marker");
  }
  std::string out;
  out.reserve(joined.size());
  for (std::size_t i = 1; i < joined.size(); ++i) {
    if (joined[i] == kMarker) {
      if (joined[i - 1] == kMarker) {
        throw Error(ErrorCode::kMalformedMarker, "consecutive space markers");
      }
      out.push_back(' ');
    } else {
      out.push_back(joined[i]);
    }
  }
  return out;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  split_units(utf8::collapse_whitespace(text),
              [&](const std::string& unit, bool) { words.push_back(unit); });
  return words;
}

std::string units_to_text(std::span<const std::string> units) {
  std::string joined;
  for (const auto& u : units) joined += u;
  std::replace(joined.begin(), joined.end(), kMarker, ' ');
  return utf8::collapse_whitespace(joined);
}

}  // namespace charcurve
