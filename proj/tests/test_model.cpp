#include <cmath>
#include <filesystem>

#include "charcurve/error.hpp"
#include "charcurve/model.hpp"
#include "doctest.h"
#include "support/gradcheck.hpp"

using namespace charcurve;
using charcurve::testing::random_units;
using charcurve::testing::unit_set;

namespace {

ModelConfig small_config(Precision p = Precision::kFloat64) {
  ModelConfig cfg;
  cfg.d_model = 16;
  cfg.heads = 2;
  cfg.d_ff = 24;
  cfg.max_seq_len = 24;
  cfg.precision = p;
  return cfg;
}

std::set<std::string> letters(std::size_t n) {
  std::set<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.insert(std::string(1, static_cast<char>('a' + i)));
  return out;
}

// Closed-form parameter count, written independently of the tensor list.
std::size_t expected_params(const ModelConfig& c, std::size_t vs, std::size_t vt) {
  const std::size_t d = static_cast<std::size_t>(c.d_model);
  const std::size_t f = static_cast<std::size_t>(c.d_ff);
  const std::size_t attn = 4 * (d * d + d);
  const std::size_t ln = 2 * d;
  const std::size_t ff = d * f + f + f * d + d;
  const std::size_t enc = static_cast<std::size_t>(c.layers_enc) * (attn + 2 * ln + ff) + ln;
  const std::size_t dec = static_cast<std::size_t>(c.layers_dec) * (2 * attn + 3 * ln + ff) + ln;
  return vs * d + vt * d + vt * d + vt + enc + dec;
}

double stepwise_log_prob(const ToyModel& m, const EncodedPair& pair) {
  StepDecoder dec(m, pair.src);
  double total = 0.0;
  int input = Vocab::kBos;
  std::vector<int> gold = pair.tgt;
  gold.push_back(Vocab::kEos);
  for (const int g : gold) {
    const auto lp = dec.step(input);
    total += lp[static_cast<std::size_t>(g)];
    input = g;
  }
  return total;
}

}  // namespace

TEST_CASE("config validation") {
  ModelConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.heads = 3;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = ModelConfig{};
  cfg.d_ff = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = ModelConfig{};
  cfg.max_seq_len = 1;
  CHECK_THROWS_AS(init_model(cfg, Vocab(letters(3)), Vocab(letters(3)), 1), Error);
}

TEST_CASE("vocab reserved rows and lookup") {
  const Vocab v(std::set<std::string>{"_a", "b"});
  REQUIRE(v.size() == 6);
  CHECK(v.unit(0) == "<pad>");
  CHECK(v.unit(3) == "<unk>");
  CHECK(v.id("_a") == 4);
  CHECK(v.id("zz") == Vocab::kUnk);
  CHECK(v.id("<s>") == Vocab::kUnk);
  const std::vector<std::string> units{"b", "q", "_a"};
  const auto ids = v.encode(units);
  CHECK(ids == std::vector<int>{5, 3, 4});
  CHECK(v.decode(std::vector<int>{1, 5, 3, 4, 2}) == UnitSeq{"b", "_a"});
  CHECK_THROWS_AS(Vocab(std::vector<std::string>{"a", "b"}), Error);
}

TEST_CASE("init is deterministic and seeded") {
  const auto cfg = small_config();
  const auto a = init_model(cfg, Vocab(letters(5)), Vocab(letters(7)), 11);
  const auto b = init_model(cfg, Vocab(letters(5)), Vocab(letters(7)), 11);
  const auto c = init_model(cfg, Vocab(letters(5)), Vocab(letters(7)), 12);
  REQUIRE(a.params.size() == b.params.size());
  bool differs = false;
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    CHECK(a.params[i].value == b.params[i].value);
    differs |= a.params[i].value != c.params[i].value;
    for (const double v : a.params[i].value) CHECK(std::isfinite(v));
  }
  CHECK(differs);
  CHECK(a.param("out.w").rows == a.tgt_vocab.size());
}

TEST_CASE("parameter accounting") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    ModelConfig cfg;
    cfg.heads = 1 + static_cast<int>(rng.below(4));
    cfg.d_model = cfg.heads * (1 + static_cast<int>(rng.below(8)));
    cfg.d_ff = 1 + static_cast<int>(rng.below(40));
    cfg.layers_enc = 1 + static_cast<int>(rng.below(3));
    cfg.layers_dec = 1 + static_cast<int>(rng.below(3));
    const std::size_t ns = 1 + rng.below(20);
    const std::size_t nt = 1 + rng.below(20);
    const auto m = init_model(cfg, Vocab(letters(ns)), Vocab(letters(nt)), 1);
    const auto counts = count_params(m);
    CHECK(counts.total() == expected_params(cfg, ns + 4, nt + 4));
    CHECK(counts.embedding == (ns + 4) * static_cast<std::size_t>(cfg.d_model) +
                                  (nt + 4) * static_cast<std::size_t>(2 * cfg.d_model + 1));
  }

  SUBCASE("widening the feed-forward block") {
    ModelConfig cfg = small_config();
    cfg.layers_enc = 2;
    cfg.layers_dec = 3;
    const auto base = count_params(init_model(cfg, Vocab(letters(6)), Vocab(letters(6)), 1));
    const int delta = cfg.d_ff;
    cfg.d_ff *= 2;
    const auto wide = count_params(init_model(cfg, Vocab(letters(6)), Vocab(letters(6)), 1));
    const std::size_t per_block = 2 * static_cast<std::size_t>(cfg.d_model * delta) +
                                  static_cast<std::size_t>(delta);
    CHECK(wide.non_embedding - base.non_embedding == 5 * per_block);
    CHECK(wide.embedding == base.embedding);
  }

  SUBCASE("halving the target vocabulary halves the output projection") {
    const auto cfg = small_config();
    const auto big = init_model(cfg, Vocab(letters(6)), Vocab(letters(16)), 1);
    const auto small = init_model(cfg, Vocab(letters(6)), Vocab(letters(6)), 1);
    CHECK(big.param("out.w").size() == 2 * small.param("out.w").size());
    CHECK(big.param("out.b").size() == 2 * small.param("out.b").size());
    CHECK(count_params(big).non_embedding == count_params(small).non_embedding);
  }
}

TEST_CASE("gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    auto c = charcurve::testing::random_grad_case(500 + seed);
    for (const auto& t : charcurve::testing::check_gradients(c)) {
      INFO(t.name);
      CHECK(t.max_rel_error <= 1e-3);
    }
  }
}

TEST_CASE("uniform logits") {
  auto m = init_model(small_config(), Vocab(letters(5)), Vocab(letters(9)), 4);
  for (auto* name : {"out.w", "out.b"}) {
    auto& p = m.param(name);
    std::fill(p.value.begin(), p.value.end(), 0.0);
  }
  const double ln_v = std::log(static_cast<double>(m.tgt_vocab.size()));
  const std::vector<std::string> src{"a", "b"};
  const std::vector<EncodedPair> single{encode_pair(m, src, std::vector<std::string>{})};
  m.config.label_smoothing = 0.0;
  CHECK(forward_loss(m, single, false).loss == doctest::Approx(ln_v).epsilon(1e-12));
  CHECK(forward_loss(m, single, false, nullptr, false).tokens == 1);
  const std::vector<std::string> tgt{"c", "i", "a"};
  CHECK(score(m, src, tgt) == doctest::Approx(-ln_v).epsilon(1e-12));
}

TEST_CASE("sequence limits") {
  auto cfg = small_config();
  cfg.max_seq_len = 4;
  const auto m = init_model(cfg, Vocab(letters(3)), Vocab(letters(3)), 1);
  const std::vector<std::string> ok{"a", "b", "c"};
  const std::vector<std::string> too_long{"a", "b", "c", "a"};
  CHECK_NOTHROW(encode_pair(m, ok, ok));
  try {
    encode_pair(m, too_long, ok);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSequenceTooLong);
  }
  CHECK_THROWS_AS(translate(m, too_long, 1), Error);
}

TEST_CASE("score agrees with the stepwise decoder") {
  Rng rng(9);
  for (const auto precision : {Precision::kFloat64, Precision::kFloat32}) {
    const auto src_units = unit_set(rng, 8);
    const auto tgt_units = unit_set(rng, 10);
    const auto m = init_model(small_config(precision), Vocab(src_units), Vocab(tgt_units), 5);
    std::vector<EncodedPair> pairs;
    for (int i = 0; i < 6; ++i) {
      pairs.push_back(encode_pair(m, random_units(rng, src_units, 1 + rng.below(8)),
                                  random_units(rng, tgt_units, rng.below(8))));
    }
    const auto batched = score_batch(m, pairs);
    const double tol = precision == Precision::kFloat64 ? 1e-10 : 1e-4;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const double alone = score_ids(m, pairs[i]);
      CHECK(std::fabs(alone - batched[i]) <= tol);
      const double len = static_cast<double>(pairs[i].tgt.size() + 1);
      CHECK(std::fabs(stepwise_log_prob(m, pairs[i]) - alone * len) <= tol * len);
    }
  }
}

TEST_CASE("step decoder distributions are normalized") {
  const auto m = init_model(small_config(), Vocab(letters(6)), Vocab(letters(6)), 2);
  StepDecoder dec(m, std::vector<int>{4, 5, 6});
  int input = Vocab::kBos;
  for (int t = 0; t < 5; ++t) {
    const auto lp = dec.step(input);
    double sum = 0.0;
    for (const double v : lp) sum += std::exp(v);
    CHECK(std::fabs(sum - 1.0) < 1e-9);
    input = 4 + t;
  }
  CHECK(dec.position() == 5);
  StepDecoder copy = dec;
  CHECK(copy.step(5) == dec.step(5));
}

TEST_CASE("greedy equals stepwise argmax; beam dominates greedy") {
  Rng rng(21);
  for (int trial = 0; trial < 8; ++trial) {
    auto cfg = small_config();
    cfg.max_seq_len = 10;
    const auto m = init_model(cfg, Vocab(letters(6)), Vocab(letters(5)), 100 + trial);
    const auto src = m.src_vocab.encode(random_units(rng, letters(6), 1 + rng.below(6)));

    StepDecoder dec(m, src);
    std::vector<int> oracle;
    int input = Vocab::kBos;
    for (int t = 0; t < cfg.max_seq_len - 1; ++t) {
      const auto lp = dec.step(input);
      int best = -1;
      for (int v = 0; v < static_cast<int>(lp.size()); ++v) {
        if (v == Vocab::kPad || v == Vocab::kBos) continue;
        if (best < 0 || lp[static_cast<std::size_t>(v)] > lp[static_cast<std::size_t>(best)]) best = v;
      }
      if (best == Vocab::kEos) break;
      oracle.push_back(best);
      input = best;
    }
    const auto greedy = translate_ids(m, src, 1);
    CHECK(greedy.ids == oracle);

    const auto beam = translate_ids(m, src, 4);
    CHECK(beam.normalized() >= greedy.normalized());
    if (beam.finished) {
      const double s = score_ids(m, EncodedPair{src, beam.ids});
      CHECK(std::fabs(s - beam.normalized()) < 1e-9);
    }
  }
}

TEST_CASE("restrict_vocab") {
  Rng rng(13);
  const auto src_units = letters(8);
  std::set<std::string> tgt_units = letters(6);
  tgt_units.insert({"_a", "_ab", "bc"});
  const auto m = init_model(small_config(), Vocab(src_units), Vocab(tgt_units), 3);

  SUBCASE("identity restriction is bit-identical") {
    const auto r = restrict_vocab(m, src_units, tgt_units);
    CHECK(r.src_vocab == m.src_vocab);
    CHECK(r.tgt_vocab == m.tgt_vocab);
    for (std::size_t i = 0; i < m.params.size(); ++i) CHECK(r.params[i].value == m.params[i].value);
  }

  SUBCASE("surviving rows copied verbatim; scores unchanged") {
    const std::set<std::string> tgt_small{"_a", "a", "b", "c"};
    const auto r = restrict_vocab(m, src_units, tgt_small);
    CHECK(r.tgt_vocab.size() == 8);
    CHECK(r.param("tgt_embed").rows == 8);
    CHECK(r.param("out.w").rows == 8);
    for (int row = 0; row < 8; ++row) {
      const auto& unit = r.tgt_vocab.unit(row);
      const int old_row = row < 4 ? row : m.tgt_vocab.id(unit);
      for (const char* name : {"tgt_embed", "out.w"}) {
        const auto& a = m.param(name);
        const auto& b = r.param(name);
        for (std::size_t c = 0; c < a.cols; ++c) {
          CHECK(a.value[static_cast<std::size_t>(old_row) * a.cols + c] ==
                b.value[static_cast<std::size_t>(row) * b.cols + c]);
        }
      }
    }
    for (const auto& p : m.params) {
      if (p.name.rfind("enc.", 0) == 0 || p.name.rfind("dec.", 0) == 0) CHECK(r.param(p.name).value == p.value);
    }
    // Restricted softmax has fewer classes, so scores differ unless only the
    // input side shrinks. Shrink the source side and compare.
    const std::set<std::string> src_small{"a", "b", "c"};
    const auto rs = restrict_vocab(m, src_small, tgt_units);
    const std::vector<std::string> s{"c", "a", "b", "b"};
    const std::vector<std::string> t{"_ab", "c", "bc"};
    CHECK(std::fabs(score(m, s, t) - score(rs, s, t)) <= 1e-12);
  }

  SUBCASE("not a subset") {
    try {
      restrict_vocab(m, src_units, std::set<std::string>{"a", "zz"});
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kNotASubset);
    }
  }
}

TEST_CASE("checkpoint round trip") {
  auto cfg = small_config(Precision::kFloat32);
  cfg.layers_dec = 2;
  const auto m = init_model(cfg, Vocab(letters(5)), Vocab(std::set<std::string>{"_x", "y"}), 8);
  const auto path = std::filesystem::temp_directory_path() / "charcurve_test_ckpt.json";
  save_checkpoint(path.string(), m);
  const auto back = load_checkpoint(path.string());
  std::filesystem::remove(path);
  CHECK(back.config == m.config);
  CHECK(back.src_vocab == m.src_vocab);
  CHECK(back.tgt_vocab == m.tgt_vocab);
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    CHECK(back.params[i].name == m.params[i].name);
    CHECK(back.params[i].value == m.params[i].value);
  }
  CHECK(model_to_json(back) == model_to_json(m));

  const auto expect_code = [](const std::string& text, ErrorCode code) {
    try {
      model_from_json(text);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.code() == code);
    }
  };
  expect_code("{", ErrorCode::kParse);
  expect_code(R"({"format":"other"})", ErrorCode::kSchemaError);
  std::string text = model_to_json(m);
  text.replace(text.find("\"d_model\":16"), 12, "\"d_model\":\"x\"");
  expect_code(text, ErrorCode::kSchemaError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt.json"), Error);
}
