#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace charcurve {

// Space marker. Raw occurrences in input text are rejected.
inline constexpr char kMarker = '_';
inline constexpr std::string_view kMarkerString = "_";

struct PreTokenizedSentence {
  std::vector<std::string> units;
  // Codepoints in the whitespace-normalized sentence.
  std::size_t original_length = 0;
};

// Lossless SentencePiece-style pretokenization.
//
// Whitespace runs are collapsed and trimmed first. Every word start gets the
// marker prefix (including the first word), each non-alphanumeric codepoint
// (outside Unicode L*/N*) becomes its own unit, and alphanumeric runs stay
// together:
//
//   "The cat sleeps on a mat." -> _The _cat _sleeps _on _a _mat .
//   "a-b"                      -> _a - b
//
// Throws kRawMarkerInInput or kInvalidEncoding.
PreTokenizedSentence pretokenize(std::string_view sentence);

// Inverse of pretokenize for any further split of its units.
// Throws kMalformedMarker when marker placement cannot come from pretokenize.
std::string detokenize(std::span<const std::string> units);

// Best-effort text for model output: markers become spaces, whitespace is
// collapsed and trimmed. Equals detokenize on well-formed input.
std::string units_to_text(std::span<const std::string> units);

// Word tokens used by the metrics: the same split rule, no markers, and no
// rejection of raw marker characters.
std::vector<std::string> split_words(std::string_view text);

}  // namespace charcurve
