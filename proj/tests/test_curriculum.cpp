#include <algorithm>
#include <filesystem>
#include <map>

#include "charcurve/curriculum.hpp"
#include "charcurve/error.hpp"
#include "charcurve/grammar.hpp"
#include "charcurve/pretok.hpp"
#include "doctest.h"

using namespace charcurve;

namespace {

std::vector<std::size_t> ks(const CurriculumPlan& p) {
  std::vector<std::size_t> out;
  for (const auto& s : p.stages) out.push_back(s.k);
  return out;
}

struct Setup {
  Corpora corpora;
  MergeList merges;
  ModelConfig model;
  TrainConfig train;
};

Setup tiny_setup() {
  Setup s;
  const ToyLanguage lang(GrammarSpec::default_spec());
  const auto all = generate_corpus(lang, 140, 11);
  for (std::size_t i = 0; i < all.size(); ++i) {
    auto& part = i < 100 ? s.corpora.train : i < 120 ? s.corpora.valid : s.corpora.test;
    part.src.push_back(all[i].src);
    part.tgt.push_back(all[i].tgt);
  }
  std::map<std::string, std::uint64_t> counts;
  for (const auto* side : {&s.corpora.train.src, &s.corpora.train.tgt})
    for (const auto& l : *side)
      for (const auto& u : pretokenize(l).units) ++counts[u];
  s.merges = train_bpe(counts, 60);
  s.model.d_model = 16;
  s.model.heads = 2;
  s.model.d_ff = 32;
  s.train.max_steps = 20;
  s.train.eval_every = 10;
  s.train.batch_size = 16;
  s.train.constant_lr = 1e-3;
  return s;
}

bool rows_subset(const Vocab& small, const Vocab& big) {
  return std::all_of(small.rows().begin() + Vocab::kReserved, small.rows().end(),
                     [&](const auto& u) { return big.contains(u); });
}

}  // namespace

TEST_CASE("plan shapes") {
  CHECK(ks(plan_direct(500)) == std::vector<std::size_t>{500, 0});
  CHECK(ks(plan_direct(2000)) == std::vector<std::size_t>{2000, 0});
  CHECK(ks(plan_direct(1)) == std::vector<std::size_t>{1, 0});
  CHECK(ks(plan_stepwise(2000, 500)) == std::vector<std::size_t>{2000, 1500, 1000, 500, 0});
  CHECK(ks(plan_stepwise(700, 500)) == std::vector<std::size_t>{700, 200, 0});
  CHECK(ks(plan_stepwise(500, 500)) == ks(plan_direct(500)));

  const auto p = plan_stepwise(2000, 500);
  CHECK(p.stages.front().train.mode == TrainMode::kScratch);
  for (std::size_t i = 1; i < p.stages.size(); ++i) CHECK(p.stages[i].train.mode == TrainMode::kFinetune);
  CHECK_NOTHROW(p.validate());

  CHECK_THROWS_AS(plan_direct(0), Error);
  CHECK_THROWS_AS(plan_stepwise(100, 0), Error);

  CurriculumPlan bad = plan_direct(10);
  bad.stages.push_back(bad.stages.back());
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("run_curriculum: one row per stage, nested vocabularies, embedding hand-off") {
  auto s = tiny_setup();
  auto plan = plan_stepwise(40, 25, s.train);
  CHECK(ks(plan) == std::vector<std::size_t>{40, 15, 0});
  // Finetune stages with a vanishing step size leave the surviving rows untouched.
  for (std::size_t i = 1; i < plan.stages.size(); ++i) plan.stages[i].train.constant_lr = 1e-300;

  const auto dir = (std::filesystem::temp_directory_path() / "charcurve_test_curriculum").string();
  std::filesystem::remove_all(dir);
  CurriculumOptions opts;
  opts.eval_beam = 1;
  opts.checkpoint_dir = dir;
  const auto res = run_curriculum(plan, s.corpora, s.merges, s.model, 3, opts);
  REQUIRE(res.report.stages.size() == plan.stages.size());
  REQUIRE(res.stage_models.size() == plan.stages.size());
  for (std::size_t i = 0; i < plan.stages.size(); ++i) {
    CHECK(res.report.stages[i].k == plan.stages[i].k);
    CHECK(res.report.stages[i].vocab_size == vocabulary(s.merges, plan.stages[i].k).size());
    CHECK(std::filesystem::exists(dir + "/stage" + std::to_string(i) + "_k" + std::to_string(plan.stages[i].k) +
                                  ".ckpt.json"));
  }
  for (std::size_t i = 1; i < res.stage_models.size(); ++i) {
    const auto& prev = res.stage_models[i - 1];
    const auto& cur = res.stage_models[i];
    CHECK(rows_subset(cur.src_vocab, prev.src_vocab));
    CHECK(rows_subset(cur.tgt_vocab, prev.tgt_vocab));
    CHECK(cur.src_vocab.size() < prev.src_vocab.size());
    // Every surviving unit keeps its embedding row bit for bit.
    for (const char* name : {"src_embed", "tgt_embed"}) {
      const auto& vp = std::string(name) == "src_embed" ? prev.src_vocab : prev.tgt_vocab;
      const auto& vc = std::string(name) == "src_embed" ? cur.src_vocab : cur.tgt_vocab;
      const auto& tp = prev.param(name);
      const auto& tc = cur.param(name);
      for (std::size_t r = Vocab::kReserved; r < vc.size(); ++r) {
        const auto pr = static_cast<std::size_t>(vp.id(vc.unit(static_cast<int>(r))));
        CHECK(std::equal(tc.value.begin() + r * tc.cols, tc.value.begin() + (r + 1) * tc.cols,
                         tp.value.begin() + pr * tp.cols));
      }
    }
  }
  CHECK(res.model.src_vocab == res.stage_models.back().src_vocab);

  const auto again = run_curriculum(plan, s.corpora, s.merges, s.model, 3, {1, ""});
  CHECK(report_csv(again.report) == report_csv(res.report));
  std::filesystem::remove_all(dir);
}

TEST_CASE("run_curriculum rejects a parent beyond the merge list") {
  auto s = tiny_setup();
  CHECK_THROWS_AS(run_curriculum(plan_direct(s.merges.size() + 1, s.train), s.corpora, s.merges, s.model, 1),
                  Error);
}

TEST_CASE("compare_dropout control and determinism") {
  auto s = tiny_setup();
  s.train.max_steps = 10;
  const auto plan = plan_direct(30, s.train);
  CurriculumOptions opts{1, ""};
  const auto ctl = compare_dropout(plan, s.corpora, s.merges, s.model, 0.0, 5, opts, true);
  CHECK(report_csv(ctl.deterministic) == report_csv(ctl.dropout));
  CHECK_THROWS_AS(compare_dropout(plan, s.corpora, s.merges, s.model, 0.0, 5, opts), Error);

  const auto a = compare_dropout(plan, s.corpora, s.merges, s.model, 0.3, 5, opts);
  const auto b = compare_dropout(plan, s.corpora, s.merges, s.model, 0.3, 5, opts);
  CHECK(dropout_csv(a) == dropout_csv(b));
  CHECK(report_csv(a.dropout) != report_csv(a.deterministic));
  const auto csv = dropout_csv(a);
  CHECK(csv.rfind("k,bleu_det,chrf_det,bleu_dropout,chrf_dropout\n", 0) == 0);
}
