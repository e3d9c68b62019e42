#include "charcurve/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "charcurve/error.hpp"
#include "charcurve/pretok.hpp"
#include "charcurve/utf8.hpp"

namespace charcurve {
namespace {

void check_inputs(std::span<const std::string> hyps, std::span<const std::string> refs) {
  if (hyps.size() != refs.size()) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(hyps.size()) + " hypotheses vs " +
                                                std::to_string(refs.size()) + " references");
  }
  if (hyps.empty()) throw Error(ErrorCode::kEmptyInput, "no sentences to score");
}

template <typename T>
std::map<std::vector<T>, std::size_t> ngram_counts(const std::vector<T>& seq, std::size_t n) {
  std::map<std::vector<T>, std::size_t> counts;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) {
    ++counts[std::vector<T>(seq.begin() + static_cast<std::ptrdiff_t>(i),
                            seq.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

// Clipped matches and the two totals for one sentence pair and order.
template <typename T>
void count_order(const std::vector<T>& hyp, const std::vector<T>& ref, std::size_t n,
                 std::size_t& matches, std::size_t& hyp_total, std::size_t& ref_total) {
  const auto h = ngram_counts(hyp, n);
  const auto r = ngram_counts(ref, n);
  for (const auto& [gram, c] : h) {
    hyp_total += c;
    const auto it = r.find(gram);
    if (it != r.end()) matches += std::min(c, it->second);
  }
  for (const auto& [gram, c] : r) ref_total += c;
}

std::vector<char32_t> chars_without_space(const std::string& text) {
  std::vector<char32_t> out;
  for (const char32_t cp : utf8::decode(text))
    if (!utf8::is_space(cp)) out.push_back(cp);
  return out;
}

}  // namespace

BleuScore bleu(std::span<const std::string> hyps, std::span<const std::string> refs) {
  check_inputs(hyps, refs);
  BleuScore s;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    const auto h = split_words(hyps[i]);
    const auto r = split_words(refs[i]);
    s.hyp_len += h.size();
    s.ref_len += r.size();
    for (std::size_t n = 1; n <= 4; ++n) {
      std::size_t ref_total = 0;
      count_order(h, r, n, s.matches[n - 1], s.totals[n - 1], ref_total);
    }
  }
  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 0; n < 4; ++n) {
    s.precisions[n] = s.totals[n] == 0 ? 0.0
                                       : static_cast<double>(s.matches[n]) / static_cast<double>(s.totals[n]);
    if (s.matches[n] == 0) {
      zero = true;
    } else {
      log_sum += std::log(s.precisions[n]);
    }
  }
  if (s.hyp_len == 0) {
    s.brevity_penalty = 0.0;
  } else if (s.hyp_len < s.ref_len) {
    s.brevity_penalty = std::exp(1.0 - static_cast<double>(s.ref_len) / static_cast<double>(s.hyp_len));
  }
  s.value = zero ? 0.0 : 100.0 * s.brevity_penalty * std::exp(log_sum / 4.0);
  return s;
}

ChrFScore chrf(std::span<const std::string> hyps, std::span<const std::string> refs, int order,
               double beta) {
  check_inputs(hyps, refs);
  if (order < 1) throw Error(ErrorCode::kConfigInvalid, "chrF order must be positive");
  if (!(beta >= 0.0)) throw Error(ErrorCode::kConfigInvalid, "chrF beta must be non-negative");
  const auto n_orders = static_cast<std::size_t>(order);
  std::vector<std::size_t> matches(n_orders), hyp_totals(n_orders), ref_totals(n_orders);
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    const auto h = chars_without_space(hyps[i]);
    const auto r = chars_without_space(refs[i]);
    for (std::size_t n = 1; n <= n_orders; ++n) {
      count_order(h, r, n, matches[n - 1], hyp_totals[n - 1], ref_totals[n - 1]);
    }
  }
  const double b2 = beta * beta;
  double f_sum = 0.0;
  int used = 0;
  for (std::size_t n = 0; n < n_orders; ++n) {
    if (hyp_totals[n] == 0 && ref_totals[n] == 0) continue;
    ++used;
    const double p = hyp_totals[n] ? static_cast<double>(matches[n]) / static_cast<double>(hyp_totals[n]) : 0.0;
    const double r = ref_totals[n] ? static_cast<double>(matches[n]) / static_cast<double>(ref_totals[n]) : 0.0;
    const double den = b2 * p + r;
    f_sum += den > 0.0 ? (1.0 + b2) * p * r / den : 0.0;
  }
  ChrFScore s;
  s.order = order;
  s.beta = beta;
  // Two whitespace-only corpora are identical.
  s.value = used == 0 ? 1.0 : f_sum / used;
  return s;
}

}  // namespace charcurve
