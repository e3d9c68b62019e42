#include <algorithm>
#include <map>
#include <sstream>

#include "charcurve/contrastive.hpp"
#include "charcurve/error.hpp"
#include "doctest.h"

using namespace charcurve;

namespace {

std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::vector<ContrastiveItem> toy_items() {
  return {{"s1", "good a", "bad a", "Past"},    {"s2", "good b", "bad b", "Past"},
          {"s3", "good c", "bad c", "Future"},  {"s4", "bad d", "good d", "Future"},
          {"s5", "good e", "bad e", "Negation"}};
}

}  // namespace

TEST_CASE("tie rule and oracle scorers") {
  const auto items = toy_items();
  const auto flat = evaluate_contrastive([](const std::string&, const std::string&) { return -1.5; }, items);
  CHECK(flat.accuracy() == 0.0);
  for (const auto& c : flat.categories) CHECK(c.accuracy() == 0.0);

  std::vector<ContrastiveItem> separable = items;
  const auto oracle = [&](const std::string& src, const std::string& tgt) {
    for (const auto& i : separable)
      if (i.source == src) return tgt == i.correct ? 1.0 : -1.0;
    return 0.0;
  };
  CHECK(evaluate_contrastive(oracle, separable).accuracy() == 100.0);

  CHECK_THROWS_AS(evaluate_contrastive(oracle, std::vector<ContrastiveItem>{}), Error);
}

TEST_CASE("aggregation, invariances") {
  const auto items = toy_items();
  // Prefers targets starting with "good".
  const auto scorer = [](const std::string&, const std::string& t) { return t.rfind("good", 0) == 0 ? 0.3 : 0.1; };
  const auto r = evaluate_contrastive(scorer, items);
  REQUIRE(r.categories.size() == 3);
  CHECK(r.categories[0].category == "Future");
  CHECK(r.categories[0].preferred == 1);
  CHECK(r.categories[1].category == "Negation");
  CHECK(r.categories[2].accuracy() == 100.0);
  CHECK(r.accuracy() == doctest::Approx(80.0));
  double weighted = 0.0;
  for (const auto& c : r.categories) weighted += c.accuracy() * static_cast<double>(c.items);
  CHECK(weighted / static_cast<double>(r.items) == doctest::Approx(r.accuracy()));

  // Strictly increasing transform.
  const auto warped = [&](const std::string& s, const std::string& t) { return std::exp(5.0 * scorer(s, t)) - 3.0; };
  CHECK(contrastive_csv(evaluate_contrastive(warped, items)) == contrastive_csv(r));

  auto shuffled = items;
  std::reverse(shuffled.begin(), shuffled.end());
  CHECK(contrastive_csv(evaluate_contrastive(scorer, shuffled)) == contrastive_csv(r));

  auto swapped = items;
  for (auto& i : swapped) std::swap(i.correct, i.contrast);
  CHECK(evaluate_contrastive(scorer, swapped).accuracy() == doctest::Approx(100.0 - r.accuracy()));

  CHECK(contrastive_csv(r) ==
        "category,items,preferred,accuracy\nFuture,2,1,50.00\nNegation,1,1,100.00\nPast,2,2,100.00\n"
        "overall,5,4,80.00\n");
}

TEST_CASE("items TSV") {
  const auto items = toy_items();
  std::istringstream in(items_tsv(items));
  CHECK(read_items(in) == items);
  std::istringstream three("a\tb\tc\n");
  CHECK_THROWS_AS(read_items(three), Error);
  std::istringstream same("a\tb\tb\tPast\n");
  CHECK_THROWS_AS(read_items(same), Error);
  std::istringstream empty_field("a\t\tb\tPast\n");
  CHECK_THROWS_AS(read_items(empty_field), Error);
}

TEST_CASE("synthetic suite") {
  const auto g = GrammarSpec::default_spec();
  CHECK(generate_synthetic_suite(g, 0, 1).empty());
  const auto items = generate_synthetic_suite(g, 1000, 3);
  REQUIRE(items.size() == 1000);
  CHECK(generate_synthetic_suite(g, 1000, 3) == items);
  std::map<std::string, int> counts;
  for (const auto& i : items) {
    ++counts[i.category];
    CHECK(i.correct != i.contrast);
    const auto a = words(i.correct);
    const auto b = words(i.contrast);
    REQUIRE(a.size() == b.size());
    int diffs = 0;
    for (std::size_t w = 0; w < a.size(); ++w) diffs += a[w] != b[w];
    CHECK(diffs == 1);
  }
  CHECK(counts.size() == g.categories.size());
  for (const auto& [name, n] : counts) CHECK(std::abs(n - 200) <= 50);

  GrammarSpec bad = g;
  bad.categories.clear();
  try {
    generate_synthetic_suite(bad, 5, 1);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kGrammarInvalid);
  }
}
