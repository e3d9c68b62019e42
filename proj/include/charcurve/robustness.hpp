#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "charcurve/bpe.hpp"
#include "charcurve/model.hpp"

namespace charcurve {

// clean word -> misspelled variants, in file order without duplicates.
class NoiseLexicon {
 public:
  NoiseLexicon() = default;

  // Throws kParse for empty words or variants equal to the word.
  void add(const std::string& word, const std::string& variant);
  const std::vector<std::string>* variants(const std::string& word) const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::map<std::string, std::vector<std::string>>& entries() const { return entries_; }

 private:
  std::map<std::string, std::vector<std::string>> entries_;
};

// UTF-8 TSV, "clean<TAB>variant" per line; blank lines are skipped.
// Throws kParse / kMissingFile.
NoiseLexicon read_lexicon(std::istream& in);
NoiseLexicon load_lexicon(const std::string& path);
std::string lexicon_tsv(const NoiseLexicon& lex);

// Misspellings by QWERTY-neighbour substitution and character drops.
// Words shorter than min_length or containing non-letters are skipped.
NoiseLexicon synthetic_lexicon(const std::vector<std::string>& words, int variants_per_word,
                               std::uint64_t seed, std::size_t min_length = 3);

// Each whitespace-separated word draws a coin u < p and a variant index from
// the line's RNG stream, whether or not it is in the lexicon. Separators are
// kept verbatim. Throws kConfigInvalid when p is outside [0, 1].
std::string inject_noise_line(const std::string& line, const NoiseLexicon& lex, double p, Rng& rng);
std::vector<std::string> inject_noise(const std::vector<std::string>& sentences,
                                      const NoiseLexicon& lex, double p, std::uint64_t seed);

struct SensitivityFit {
  double alpha = 0.0;
  double beta = 0.0;
  double ratio = 0.0;  // beta / alpha
  double residual_sse = 0.0;
};

// Least squares BLEU ~ beta * p + alpha. Throws kDegenerateDesign (fewer than
// two distinct p) or kAlphaZero.
SensitivityFit fit_sensitivity(const std::vector<std::pair<double, double>>& points);

struct SweepPoint {
  double p = 0.0;
  double bleu = 0.0;
  double chrf = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  SensitivityFit fit;
};

// BLEU/chrF of noised sources at each p, without the fit.
std::vector<SweepPoint> sweep_points(const ToyModel& model, const MergeList& merges, std::size_t k,
                                     const std::vector<std::string>& sources,
                                     const std::vector<std::string>& refs, const NoiseLexicon& lex,
                                     const std::vector<double>& p_values, std::uint64_t seed,
                                     int beam = 4);

// Noised sources are translated with the deterministic k-merge segmentation
// and scored against the clean references. p_values need at least two
// entries including 0. Throws kConfigInvalid.
SweepResult sensitivity_sweep(const ToyModel& model, const MergeList& merges, std::size_t k,
                              const std::vector<std::string>& sources,
                              const std::vector<std::string>& refs, const NoiseLexicon& lex,
                              const std::vector<double>& p_values, std::uint64_t seed, int beam = 4);

std::string sweep_csv(const SweepResult& r);

// "p,bleu" lines with a header; used by noise-fit.
std::vector<std::pair<double, double>> parse_points_csv(const std::string& text);

struct SweepSeries {
  std::string label;
  std::vector<SweepPoint> points;
};

// Line chart of BLEU against noise probability, one line per series.
std::string sweep_svg(const std::vector<SweepSeries>& series);

}  // namespace charcurve
