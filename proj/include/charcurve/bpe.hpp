#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "charcurve/pretok.hpp"
#include "charcurve/rng.hpp"

namespace charcurve {

struct MergeRule {
  std::string left;
  std::string right;
  std::size_t rank = 0;

  std::string merged() const { return left + right; }
  bool operator==(const MergeRule&) const = default;
};

// Ordered merge rules plus the training alphabet. A prefix of the first k rules
// defines the vocabulary for merge count k; prefixes are nested by construction.
class MergeList {
 public:
  MergeList() = default;
  // Throws kParse when ranks have gaps, a pair repeats or a side is empty.
  MergeList(std::vector<MergeRule> rules, std::set<std::string> alphabet);

  const std::vector<MergeRule>& rules() const { return rules_; }
  const std::set<std::string>& alphabet() const { return alphabet_; }
  std::size_t size() const { return rules_.size(); }

  std::optional<std::size_t> rank_of(std::string_view left, std::string_view right) const;

  // First `count` rules with the same alphabet.
  MergeList prefix(std::size_t count) const;

  bool operator==(const MergeList& other) const {
    return rules_ == other.rules_ && alphabet_ == other.alphabet_;
  }

 private:
  std::vector<MergeRule> rules_;
  std::set<std::string> alphabet_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Per-pre-token unit sequence.
using Segmentation = std::vector<std::string>;

struct DropoutConfig {
  double p = 0.1;
  std::uint64_t seed = 0;
};

// Throws kEmptyCorpus when no sentence has any unit.
MergeList train_bpe(std::span<const PreTokenizedSentence> corpus, std::size_t max_merges);

// Same, over pre-token frequencies.
MergeList train_bpe(const std::map<std::string, std::uint64_t>& pretoken_counts,
                    std::size_t max_merges);

// Applies rules 0..k-1 in rank order; each rule merges its leftmost
// non-overlapping occurrences before the next rule is considered. Characters
// outside the alphabet pass through as single units. Throws kKOutOfRange.
Segmentation segment(std::string_view pretoken, const MergeList& merges, std::size_t k);

// As segment, but every merge application is independently skipped with
// probability cfg.p, drawing from rng. Occurrences are the ones the
// deterministic scan would visit, so a skipped pair is not re-paired with its
// right neighbour under the same rule. cfg.seed is not read here; the caller
// seeds rng (see dropout_stream).
Segmentation segment_dropout(std::string_view pretoken, const MergeList& merges, std::size_t k,
                             const DropoutConfig& cfg, Rng& rng);

// RNG stream for sentence `line` under a dropout config.
Rng dropout_stream(const DropoutConfig& cfg, std::uint64_t line);

// alphabet ∪ merged units of the first k rules. Throws kKOutOfRange.
std::set<std::string> vocabulary(const MergeList& merges, std::size_t k);

// Memoizing deterministic segmenter for one merge count.
class Segmenter {
 public:
  Segmenter(const MergeList& merges, std::size_t k);

  const Segmentation& segment(const std::string& pretoken);

  // Units of a pretokenized sentence, flattened in order.
  std::vector<std::string> segment_sentence(const PreTokenizedSentence& sentence);

  std::size_t k() const { return k_; }

 private:
  const MergeList* merges_;
  std::size_t k_;
  std::unordered_map<std::string, Segmentation> cache_;
};

std::vector<std::string> segment_sentence_dropout(const PreTokenizedSentence& sentence,
                                                  const MergeList& merges, std::size_t k,
                                                  const DropoutConfig& cfg, Rng& rng);

// Text format: "#charcurve-merges v1", then "#alphabet" followed by the
// space-separated alphabet, then one "left right" rule per line in rank order.
void write_merges(std::ostream& out, const MergeList& merges);
MergeList read_merges(std::istream& in);
void save_merges(const std::string& path, const MergeList& merges);
MergeList load_merges(const std::string& path);

}  // namespace charcurve
