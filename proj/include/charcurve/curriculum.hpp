#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "charcurve/bpe.hpp"
#include "charcurve/corpus.hpp"
#include "charcurve/metrics.hpp"
#include "charcurve/model.hpp"
#include "charcurve/train.hpp"

namespace charcurve {

struct CurriculumStage {
  std::size_t k = 0;
  TrainConfig train;
  std::optional<DropoutConfig> dropout;  // training-time segmentation only
};

struct CurriculumPlan {
  std::size_t parent_k = 0;
  std::vector<CurriculumStage> stages;

  // Strictly decreasing k, first stage scratch, later stages finetune.
  // Throws kInvalidK / kConfigInvalid.
  void validate() const;
  std::vector<std::size_t> merge_counts() const;
};

// [parent_k (scratch), 0 (finetune)]. Stage i trains with seed
// derive_seed(base.seed, i). Throws kInvalidK.
CurriculumPlan plan_direct(std::size_t parent_k, const TrainConfig& base = {});

// [parent_k, parent_k - step, ..., smallest positive residue, 0].
CurriculumPlan plan_stepwise(std::size_t parent_k, std::size_t step = 500,
                             const TrainConfig& base = {});

// Applies one dropout config to every stage (nullopt clears it).
void set_dropout(CurriculumPlan& plan, const std::optional<DropoutConfig>& dropout);

struct Corpora {
  ParallelText train;
  ParallelText valid;
  ParallelText test;
};

struct TranslationEval {
  std::vector<std::string> hyps;
  BleuScore bleu;
  ChrFScore chrf;
  double exact_match = 0.0;  // fraction of hypotheses equal to the reference
};

// Deterministic segmentation with k merges, decoding, metrics against refs.
TranslationEval evaluate_translation(const ToyModel& model, const MergeList& merges, std::size_t k,
                                     const std::vector<std::string>& sources,
                                     const std::vector<std::string>& refs, int beam);

struct StageReport {
  std::size_t k = 0;
  std::size_t vocab_size = 0;  // units, reserved rows excluded
  double valid_best = 0.0;
  double test_bleu = 0.0;
  double test_chrf = 0.0;
  double test_exact = 0.0;
  TrainLog log;
};

struct ExperimentReport {
  std::vector<StageReport> stages;
};

struct CurriculumOptions {
  int eval_beam = 4;
  std::string checkpoint_dir;  // per-stage checkpoints when non-empty
};

struct CurriculumResult {
  ExperimentReport report;
  ToyModel model;  // best checkpoint of the last stage
  std::vector<ToyModel> stage_models;  // best checkpoint of every stage
};

// Stage 0 starts from init_model(model_cfg, vocabulary(k0) on both sides,
// derive_seed(seed, 0)); stage i > 0 starts from restrict_vocab of the
// previous stage's best model. Source and target share the merge list.
CurriculumResult run_curriculum(const CurriculumPlan& plan, const Corpora& corpora,
                                const MergeList& merges, const ModelConfig& model_cfg,
                                std::uint64_t seed, const CurriculumOptions& options = {});

struct DropoutComparison {
  ExperimentReport deterministic;
  ExperimentReport dropout;
};

// Runs the plan with deterministic and with dropout-p training segmentation.
// Evaluation is always deterministic. p must lie in (0, 1]; allow_zero admits
// p = 0 as a control. Throws kConfigInvalid.
DropoutComparison compare_dropout(const CurriculumPlan& plan, const Corpora& corpora,
                                  const MergeList& merges, const ModelConfig& model_cfg, double p,
                                  std::uint64_t seed, const CurriculumOptions& options = {},
                                  bool allow_zero = false);

// "k,vocab,valid_best,test_bleu,test_chrf,test_exact,steps,best_step"
std::string report_csv(const ExperimentReport& report);
// Wall-clock columns, kept apart so report_csv is reproducible.
std::string timing_csv(const ExperimentReport& report);
// "k,bleu_det,chrf_det,bleu_dropout,chrf_dropout"
std::string dropout_csv(const DropoutComparison& cmp);

}  // namespace charcurve
