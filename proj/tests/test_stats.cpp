#include <string>
#include <vector>

#include "charcurve/bpe.hpp"
#include "charcurve/error.hpp"
#include "charcurve/stats.hpp"
#include "doctest.h"
#include "support/random_text.hpp"

using namespace charcurve;

namespace {
MergeList merges_for(const std::vector<std::string>& lines, std::size_t n) {
  std::vector<PreTokenizedSentence> pre;
  for (const auto& l : lines) pre.push_back(pretokenize(l));
  return train_bpe(pre, n);
}
}  // namespace

TEST_CASE("stats of a single sentence at character level") {
  const std::vector<std::string> corpus = {"The cat."};
  const auto merges = merges_for(corpus, 100);
  const auto chars = compute_stats(corpus, merges, 0);
  CHECK(chars.segments_per_sentence() == 9.0);
  CHECK(chars.segments_per_token() == 3.0);
  CHECK(chars.avg_unit_size() == 1.0);

  // 100 merges exhaust the corpus: every pre-token is one unit.
  const auto words = compute_stats(corpus, merges, merges.size());
  CHECK(words.segments_per_sentence() == 3.0);
  CHECK(words.segments_per_token() == 1.0);
  CHECK(words.avg_unit_size() == 3.0);
}

TEST_CASE("character segmentation always has unit size one and the most segments") {
  Rng rng(11);
  std::vector<std::string> corpus;
  for (int i = 0; i < 200; ++i) corpus.push_back(testing::random_sentence(rng));
  const auto merges = merges_for(corpus, 300);
  const auto chars = compute_stats(corpus, merges, 0);
  CHECK(chars.avg_unit_size() == 1.0);
  for (std::size_t k : {1ul, 10ul, 100ul, merges.size()}) {
    const auto s = compute_stats(corpus, merges, k);
    CHECK(s.segments_per_sentence() <= chars.segments_per_sentence());
    CHECK(s.segments_per_token() >= 1.0);
    CHECK(s.avg_unit_size() >= 1.0);
  }
}

TEST_CASE("empty corpus") {
  const auto merges = merges_for({"a"}, 0);
  CHECK_THROWS_AS(compute_stats(std::vector<std::string>{}, merges, 0), Error);
}

TEST_CASE("csv layout") {
  const std::vector<std::string> corpus = {"The cat."};
  const auto merges = merges_for(corpus, 100);
  const auto s = compute_stats(corpus, merges, 0);
  CHECK(stats_csv_header(true) == "merges,segm_per_sent,segm_per_token,avg_unit_size_src,avg_unit_size_tgt");
  CHECK(stats_csv_row(0, s, &s) == "0,9.0,3.0,1.00,1.00");
  CHECK(stats_csv_row(0, s, nullptr) == "0,9.0,3.0,1.00");
}
