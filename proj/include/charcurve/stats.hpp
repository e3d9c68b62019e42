#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "charcurve/bpe.hpp"

namespace charcurve {

// Corpus segmentation statistics for one language side. Characters include
// the space marker.
struct SegmentationStats {
  std::size_t sentences = 0;
  std::size_t pretokens = 0;
  std::size_t units = 0;
  std::size_t characters = 0;

  double segments_per_sentence() const;
  double segments_per_token() const;
  double avg_unit_size() const;

  SegmentationStats& operator+=(const SegmentationStats& other);
};

// Throws kEmptyCorpus for an empty corpus.
SegmentationStats compute_stats(std::span<const std::string> corpus, const MergeList& merges,
                                std::size_t k);

// "merges,segm_per_sent,segm_per_token,avg_unit_size_src[,avg_unit_size_tgt]"
std::string stats_csv_header(bool two_sides);

// One row in the layout of stats_csv_header. The first two ratios pool both sides.
std::string stats_csv_row(std::size_t k, const SegmentationStats& src,
                          const SegmentationStats* tgt);

}  // namespace charcurve
