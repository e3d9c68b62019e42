#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>

namespace charcurve {

// Corpus BLEU on a 0-100 scale, four n-gram orders, single reference, no
// smoothing. Words come from split_words.
struct BleuScore {
  double value = 0.0;
  std::array<double, 4> precisions{};
  std::array<std::size_t, 4> matches{};
  std::array<std::size_t, 4> totals{};
  double brevity_penalty = 1.0;
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
};

// Character n-gram F-score on a 0-1 scale, whitespace removed.
struct ChrFScore {
  double value = 0.0;
  int order = 6;
  double beta = 2.0;
};

// Throws kLengthMismatch or kEmptyInput.
BleuScore bleu(std::span<const std::string> hyps, std::span<const std::string> refs);

// Counts are pooled over the corpus per order; F_beta is computed per order and
// averaged over the orders that have n-grams on either side.
ChrFScore chrf(std::span<const std::string> hyps, std::span<const std::string> refs,
               int order = 6, double beta = 2.0);

}  // namespace charcurve
