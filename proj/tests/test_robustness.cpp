#include <cmath>
#include <sstream>

#include "charcurve/error.hpp"
#include "charcurve/robustness.hpp"
#include "doctest.h"

using namespace charcurve;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kInternal;
}

}  // namespace

TEST_CASE("lexicon parsing") {
  std::istringstream in("cat\tkat\ncat\tcta\n\ndog\tdgo\ncat\tkat\n");
  const auto lex = read_lexicon(in);
  REQUIRE(lex.variants("cat") != nullptr);
  CHECK(*lex.variants("cat") == std::vector<std::string>{"kat", "cta"});
  CHECK(lex.variants("bird") == nullptr);
  CHECK(lexicon_tsv(lex) == "cat\tkat\ncat\tcta\ndog\tdgo\n");
  std::istringstream bad("cat kat\n");
  CHECK(code_of([&] { read_lexicon(bad); }) == ErrorCode::kParse);
  std::istringstream empty_variant("cat\t\n");
  CHECK(code_of([&] { read_lexicon(empty_variant); }) == ErrorCode::kParse);
}

TEST_CASE("inject_noise basics") {
  NoiseLexicon lex;
  lex.add("cat", "kat");
  const std::vector<std::string> s{"the cat sat", "  the  cat\tsat ", "no match here"};
  CHECK(inject_noise(s, lex, 0.0, 5) == s);
  const auto all = inject_noise(s, lex, 1.0, 5);
  CHECK(all[0] == "the kat sat");
  CHECK(all[1] == "  the  kat\tsat ");
  CHECK(all[2] == "no match here");
  CHECK(inject_noise(s, NoiseLexicon{}, 1.0, 5) == s);
  CHECK(inject_noise(s, lex, 0.5, 9) == inject_noise(s, lex, 0.5, 9));
  CHECK(code_of([&] { inject_noise(s, lex, 1.5, 1); }) == ErrorCode::kConfigInvalid);
}

TEST_CASE("inject_noise rate and coin alignment") {
  NoiseLexicon lex;
  lex.add("w", "v1");
  lex.add("w", "v2");
  std::vector<std::string> lines;
  for (int i = 0; i < 1000; ++i) lines.push_back("w w x w w w x w w w");
  const auto noisy = inject_noise(lines, lex, 0.5, 42);
  std::size_t covered = 0, replaced = 0, v1 = 0;
  for (const auto& l : noisy) {
    std::istringstream in(l);
    std::string w;
    int idx = 0;
    while (in >> w) {
      if (idx != 2 && idx != 6) {
        ++covered;
        replaced += w != "w";
        v1 += w == "v1";
      } else {
        CHECK(w == "x");
      }
      ++idx;
    }
  }
  CHECK(covered == 8000);
  CHECK(std::fabs(static_cast<double>(replaced) / static_cast<double>(covered) - 0.5) <= 0.03);
  CHECK(std::fabs(static_cast<double>(v1) / static_cast<double>(replaced) - 0.5) <= 0.05);

  // Adding a lexicon entry for "x" leaves every other word's outcome unchanged.
  NoiseLexicon bigger = lex;
  bigger.add("x", "y");
  const auto noisy2 = inject_noise(lines, bigger, 0.5, 42);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::istringstream a(noisy[i]), b(noisy2[i]);
    std::string wa, wb;
    while (a >> wa && b >> wb) {
      if (wa != "x") CHECK(wa == wb);
    }
  }

  // Same seed: words noised at a lower p are also noised at a higher p.
  const auto low = inject_noise(lines, lex, 0.2, 42);
  const auto high = inject_noise(lines, lex, 0.6, 42);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::istringstream a(low[i]), b(high[i]);
    std::string wa, wb;
    while (a >> wa && b >> wb) {
      if (wa != "w" && wa != "x") CHECK(wa == wb);
    }
  }
}

TEST_CASE("synthetic lexicon") {
  const std::vector<std::string> words{"house", "cat", "it", "a.b", "tree", "house"};
  const auto lex = synthetic_lexicon(words, 3, 1);
  CHECK(lex.variants("it") == nullptr);
  CHECK(lex.variants("a.b") == nullptr);
  for (const auto* w : {"house", "cat", "tree"}) {
    const auto* v = lex.variants(w);
    REQUIRE(v != nullptr);
    CHECK(v->size() <= 3);
    for (const auto& var : *v) {
      CHECK(var != w);
      const auto len = std::string(w).size();
      CHECK((var.size() == len || var.size() + 1 == len));
    }
  }
  CHECK(lexicon_tsv(synthetic_lexicon(words, 3, 1)) == lexicon_tsv(lex));
}

TEST_CASE("fit_sensitivity") {
  const auto f = fit_sensitivity({{0.0, 30.0}, {0.05, 29.0}, {0.1, 28.0}});
  CHECK(std::fabs(f.alpha - 30.0) <= 1e-9);
  CHECK(std::fabs(f.beta + 20.0) <= 1e-9);
  CHECK(std::fabs(f.ratio + 2.0 / 3.0) <= 1e-9);
  CHECK(f.residual_sse <= 1e-18);

  const auto flat = fit_sensitivity({{0.0, 25.0}, {0.1, 25.0}, {0.2, 25.0}});
  CHECK(flat.alpha == 25.0);
  CHECK(flat.beta == 0.0);
  CHECK(flat.ratio == 0.0);

  const auto two = fit_sensitivity({{0.0, 17.5}, {0.1, 12.25}});
  CHECK(std::fabs(two.alpha - 17.5) <= 1e-12);
  CHECK(std::fabs(two.alpha + two.beta * 0.1 - 12.25) <= 1e-12);
  CHECK(two.residual_sse <= 1e-20);

  // Scale invariance of the ratio.
  const std::vector<std::pair<double, double>> pts{{0.0, 24.1}, {0.1, 21.7}, {0.2, 18.2}, {0.3, 16.9}};
  const auto base = fit_sensitivity(pts);
  for (const double c : {0.01, 3.7, -2.0, 1000.0}) {
    auto scaled = pts;
    for (auto& p : scaled) p.second *= c;
    CHECK(std::fabs(fit_sensitivity(scaled).ratio - base.ratio) <= 1e-9 * std::fabs(base.ratio));
  }

  // Independent oracle: normal equations solved directly.
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [x, y] : pts) {
    n += 1;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double beta = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(base.beta == doctest::Approx(beta).epsilon(1e-12));
  CHECK(base.alpha == doctest::Approx((sy - beta * sx) / n).epsilon(1e-12));

  CHECK(code_of([] { fit_sensitivity({{0.1, 3.0}, {0.1, 4.0}}); }) == ErrorCode::kDegenerateDesign);
  CHECK(code_of([] { fit_sensitivity({{0.1, 3.0}}); }) == ErrorCode::kDegenerateDesign);
  CHECK(code_of([] { fit_sensitivity({{0.0, 0.0}, {0.1, -1.0}}); }) == ErrorCode::kAlphaZero);
}

TEST_CASE("points csv and svg") {
  const auto pts = parse_points_csv("p,bleu\n0,30\n0.05,29\n\n0.1,28\n");
  REQUIRE(pts.size() == 3);
  CHECK(pts[1] == std::make_pair(0.05, 29.0));
  CHECK(code_of([] { parse_points_csv("p,bleu\n0,abc\n"); }) == ErrorCode::kParse);

  SweepResult r;
  r.points = {{0.0, 30.0, 0.6}, {0.1, 28.0, 0.55}};
  r.fit = fit_sensitivity({{0.0, 30.0}, {0.1, 28.0}});
  CHECK(sweep_csv(r).rfind("p,bleu,chrf\n0.0000,30.00,0.6000\n0.1000,28.00,0.5500\n", 0) == 0);
  const auto svg = sweep_svg({{"char <k=0>", r.points}, {"k=64", r.points}});
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("char &lt;k=0&gt;") != std::string::npos);
  CHECK(svg.find("<polyline") != std::string::npos);
}
