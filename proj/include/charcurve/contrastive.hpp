#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "charcurve/bpe.hpp"
#include "charcurve/grammar.hpp"
#include "charcurve/model.hpp"

namespace charcurve {

struct ContrastiveItem {
  std::string source;
  std::string correct;
  std::string contrast;
  std::string category;

  bool operator==(const ContrastiveItem&) const = default;
};

struct CategoryAccuracy {
  std::string category;
  std::size_t items = 0;
  std::size_t preferred = 0;  // correct scored strictly higher

  double accuracy() const;  // percent
};

struct ContrastiveReport {
  std::vector<CategoryAccuracy> categories;  // sorted by name
  std::size_t items = 0;
  std::size_t preferred = 0;

  double accuracy() const;  // percent, count-weighted over categories
};

// Higher is better.
using PairScorer = std::function<double(const std::string& source, const std::string& target)>;

// Deterministic k-merge segmentation of both sides, then score().
PairScorer model_scorer(const ToyModel& model, const MergeList& merges, std::size_t k);

// Ties count as incorrect. Throws kEmptyItems.
ContrastiveReport evaluate_contrastive(const PairScorer& scorer, std::span<const ContrastiveItem> items);

// TSV "source<TAB>correct<TAB>contrast<TAB>category". Throws kParse.
std::vector<ContrastiveItem> read_items(std::istream& in);
std::vector<ContrastiveItem> load_items(const std::string& path);
std::string items_tsv(std::span<const ContrastiveItem> items);

// Each item picks a category uniformly; the contrast target inverts that
// category's marking on one word. Throws kGrammarInvalid.
std::vector<ContrastiveItem> generate_synthetic_suite(const GrammarSpec& grammar, std::size_t n_items,
                                                      std::uint64_t seed);

// "category,items,preferred,accuracy" plus a final "overall" row.
std::string contrastive_csv(const ContrastiveReport& report);

}  // namespace charcurve
