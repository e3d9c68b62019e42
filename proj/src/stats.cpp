#include "charcurve/stats.hpp"

#include <cstdio>

#include "charcurve/error.hpp"
#include "charcurve/format.hpp"
#include "charcurve/pretok.hpp"
#include "charcurve/utf8.hpp"

namespace charcurve {
namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double SegmentationStats::segments_per_sentence() const { return ratio(units, sentences); }
double SegmentationStats::segments_per_token() const { return ratio(units, pretokens); }
double SegmentationStats::avg_unit_size() const { return ratio(characters, units); }

SegmentationStats& SegmentationStats::operator+=(const SegmentationStats& other) {
  sentences += other.sentences;
  pretokens += other.pretokens;
  units += other.units;
  characters += other.characters;
  return *this;
}

SegmentationStats compute_stats(std::span<const std::string> corpus, const MergeList& merges,
                                std::size_t k) {
  if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "statistics need at least one sentence");
  Segmenter segmenter(merges, k);
  SegmentationStats stats;
  for (const auto& line : corpus) {
    const auto pre = pretokenize(line);
    ++stats.sentences;
    stats.pretokens += pre.units.size();
    for (const auto& token : pre.units) {
      stats.units += segmenter.segment(token).size();
      stats.characters += utf8::length(token);
    }
  }
  return stats;
}

std::string stats_csv_header(bool two_sides) {
  std::string h = "merges,segm_per_sent,segm_per_token,avg_unit_size_src";
  if (two_sides) h += ",avg_unit_size_tgt";
  return h;
}

std::string stats_csv_row(std::size_t k, const SegmentationStats& src,
                          const SegmentationStats* tgt) {
  SegmentationStats pooled = src;
  if (tgt != nullptr) pooled += *tgt;
  std::string row = std::to_string(k) + "," + format_fixed(pooled.segments_per_sentence(), 1) + "," +
                    format_fixed(pooled.segments_per_token(), 1) + "," + format_fixed(src.avg_unit_size(), 2);
  if (tgt != nullptr) row += "," + format_fixed(tgt->avg_unit_size(), 2);
  return row;
}

}  // namespace charcurve
