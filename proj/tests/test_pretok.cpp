#include <string>
#include <vector>

#include "charcurve/error.hpp"
#include "charcurve/pretok.hpp"
#include "charcurve/utf8.hpp"
#include "doctest.h"
#include "support/random_text.hpp"

using namespace charcurve;
using Units = std::vector<std::string>;

TEST_CASE("pretokenize reproduces the tokenization row of the segmentation table") {
  const auto out = pretokenize("The cat sleeps on a mat.");
  CHECK(out.units == Units{"_The", "_cat", "_sleeps", "_on", "_a", "_mat", "."});
  CHECK(out.original_length == 24);
}

TEST_CASE("pretokenize small cases") {
  CHECK(pretokenize("x").units == Units{"_x"});
  CHECK(pretokenize("a-b").units == Units{"_a", "-", "b"});
  CHECK(pretokenize("wow!!").units == Units{"_wow", "!", "!"});
  CHECK(pretokenize("a .").units == Units{"_a", "_."});
  CHECK(pretokenize("").units.empty());
  CHECK(pretokenize("Straße 12,5 €").units == Units{"_Straße", "_12", ",", "5", "_€"});
}

TEST_CASE("whitespace is collapsed before marking") {
  CHECK(pretokenize("  a \t\n b  ").units == Units{"_a", "_b"});
  CHECK(pretokenize("a 　b").units == Units{"_a", "_b"});
}

TEST_CASE("pretokenize errors") {
  CHECK_THROWS_AS(pretokenize("snake_case"), Error);
  try {
    pretokenize("a_b");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kRawMarkerInInput);
  }
  try {
    pretokenize(std::string("\xC3\x28", 2));
    FAIL("expected an encoding error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidEncoding);
  }
}

TEST_CASE("detokenize") {
  CHECK(detokenize(Units{"_The", "_cat", "_sleeps", "_on", "_a", "_mat", "."}) ==
        "The cat sleeps on a mat.");
  CHECK(detokenize(Units{}).empty());
  CHECK(detokenize(Units{"_", "a", "-", "b"}) == "a-b");
  for (const Units& bad : {Units{"a"}, Units{"_a", "_"}, Units{"__a"}, Units{"_a", "__b"}}) {
    try {
      detokenize(bad);
      FAIL("expected MalformedMarker");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kMalformedMarker);
    }
  }
}

TEST_CASE("split_words uses the pretokenization rule without markers") {
  CHECK(split_words("The cat sleeps on a mat.") ==
        Units{"The", "cat", "sleeps", "on", "a", "mat", "."});
  CHECK(split_words("snake_case") == Units{"snake", "_", "case"});
}

TEST_CASE("round trip property over random mixed-script sentences") {
  Rng rng(20240611);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::string s = testing::random_sentence(rng);
    const auto pre = pretokenize(s);
    REQUIRE(detokenize(pre.units) == s);

    std::string marked;
    std::size_t words = 1;
    for (char c : s) words += c == ' ';
    Units chars;
    for (const auto& u : pre.units) {
      CHECK_FALSE(u.empty());
      marked += u;
      for (auto& ch : utf8::split_chars(u)) chars.push_back(ch);
    }
    CHECK(pre.units.size() >= words);
    CHECK(detokenize(chars) == s);

    std::string expected_marked = "_" + s;
    for (auto& c : expected_marked) c = c == ' ' ? '_' : c;
    CHECK(marked == expected_marked);
  }
}

TEST_CASE("every non-alphanumeric character starts a unit") {
  Rng rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const auto pre = pretokenize(testing::random_sentence(rng));
    for (const auto& u : pre.units) {
      const auto cps = utf8::decode(u);
      const std::size_t body = cps.front() == U'_' ? 1 : 0;
      for (std::size_t i = body; i < cps.size(); ++i) {
        if (!utf8::is_alnum(cps[i])) CHECK(cps.size() == body + 1);
      }
    }
  }
}
