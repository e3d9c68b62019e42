#pragma once

#include <string>
#include <vector>

#include "charcurve/rng.hpp"
#include "charcurve/utf8.hpp"

namespace charcurve::testing {

// Random normalized sentences over mixed scripts, digits and punctuation.
// Never contains the space marker.
inline std::string random_sentence(Rng& rng, std::size_t max_words = 8) {
  static const std::vector<char32_t> kPool = {
      U'a', U'b', U'c', U'd', U'e', U'z', U'A', U'Q', U'0', U'7',   // ASCII alnum
      U'ä', U'ß', U'é', U'č', U'ř', U'ğ',                           // Latin extensions
      U'ж', U'Я', U'λ', U'Ω', U'中', U'文', U'ا', U'ب', U'٣',       // other scripts, Arabic-Indic digit
      U'.', U',', U'!', U'?', U'-', U'\'', U'"', U'(', U')', U'/', U'€', U'…', U'“', U'🙂',
  };
  const std::size_t words = 1 + rng.below(max_words);
  std::string out;
  for (std::size_t w = 0; w < words; ++w) {
    if (w > 0) out.push_back(' ');
    const std::size_t len = 1 + rng.below(7);
    for (std::size_t i = 0; i < len; ++i) utf8::append(out, kPool[rng.below(kPool.size())]);
  }
  return out;
}

}  // namespace charcurve::testing
