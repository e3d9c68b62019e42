#include "charcurve/curriculum.hpp"

#include <filesystem>

#include "charcurve/error.hpp"
#include "charcurve/format.hpp"
#include "charcurve/pretok.hpp"
#include "charcurve/utf8.hpp"

namespace charcurve {
namespace {

TrainConfig stage_config(const TrainConfig& base, std::size_t index) {
  TrainConfig tc = base;
  tc.mode = index == 0 ? TrainMode::kScratch : TrainMode::kFinetune;
  tc.seed = derive_seed(base.seed, index);
  return tc;
}

std::vector<PreTokenizedSentence> pretokenize_all(const std::vector<std::string>& lines) {
  std::vector<PreTokenizedSentence> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(pretokenize(l));
  return out;
}

std::vector<UnitSeq> segment_all(const std::vector<PreTokenizedSentence>& sents, Segmenter& seg) {
  std::vector<UnitSeq> out;
  out.reserve(sents.size());
  for (const auto& s : sents) out.push_back(seg.segment_sentence(s));
  return out;
}

struct PretokenizedCorpora {
  std::vector<PreTokenizedSentence> train_src, train_tgt, valid_src, valid_tgt;
};

}  // namespace

void CurriculumPlan::validate() const {
  if (stages.empty()) throw Error(ErrorCode::kConfigInvalid, "plan has no stages");
  if (stages.front().k != parent_k) {
    throw Error(ErrorCode::kInvalidK, "first stage must use parent_k");
  }
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto& s = stages[i];
    s.train.validate();
    const auto want = i == 0 ? TrainMode::kScratch : TrainMode::kFinetune;
    if (s.train.mode != want) {
      throw Error(ErrorCode::kConfigInvalid, "stage " + std::to_string(i) + " must use " + train_mode_name(want));
    }
    if (i > 0 && s.k >= stages[i - 1].k) {
      throw Error(ErrorCode::kInvalidK, "stage merge counts must strictly decrease");
    }
    if (s.dropout && !(s.dropout->p >= 0.0 && s.dropout->p <= 1.0)) {
      throw Error(ErrorCode::kConfigInvalid, "dropout probability must lie in [0, 1]");
    }
  }
}

std::vector<std::size_t> CurriculumPlan::merge_counts() const {
  std::vector<std::size_t> out;
  for (const auto& s : stages) out.push_back(s.k);
  return out;
}

CurriculumPlan plan_direct(std::size_t parent_k, const TrainConfig& base) {
  if (parent_k == 0) throw Error(ErrorCode::kInvalidK, "parent_k must be > 0");
  CurriculumPlan p;
  p.parent_k = parent_k;
  p.stages.push_back({parent_k, stage_config(base, 0), std::nullopt});
  p.stages.push_back({0, stage_config(base, 1), std::nullopt});
  return p;
}

CurriculumPlan plan_stepwise(std::size_t parent_k, std::size_t step, const TrainConfig& base) {
  if (parent_k == 0) throw Error(ErrorCode::kInvalidK, "parent_k must be > 0");
  if (step == 0) throw Error(ErrorCode::kInvalidK, "step must be > 0");
  CurriculumPlan p;
  p.parent_k = parent_k;
  std::size_t k = parent_k;
  while (true) {
    p.stages.push_back({k, stage_config(base, p.stages.size()), std::nullopt});
    if (k == 0) break;
    k = k > step ? k - step : 0;
  }
  return p;
}

void set_dropout(CurriculumPlan& plan, const std::optional<DropoutConfig>& dropout) {
  for (auto& s : plan.stages) s.dropout = dropout;
}

TranslationEval evaluate_translation(const ToyModel& model, const MergeList& merges, std::size_t k,
                                     const std::vector<std::string>& sources,
                                     const std::vector<std::string>& refs, int beam) {
  if (sources.size() != refs.size()) {
    throw Error(ErrorCode::kMisalignedCorpus, "sources and references differ in length");
  }
  Segmenter seg(merges, k);
  TranslationEval ev;
  std::size_t exact = 0;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto units = seg.segment_sentence(pretokenize(sources[i]));
    ev.hyps.push_back(units_to_text(translate(model, units, beam)));
    exact += ev.hyps.back() == utf8::collapse_whitespace(refs[i]);
  }
  ev.bleu = bleu(ev.hyps, refs);
  ev.chrf = chrf(ev.hyps, refs);
  ev.exact_match = sources.empty() ? 0.0 : static_cast<double>(exact) / static_cast<double>(sources.size());
  return ev;
}

CurriculumResult run_curriculum(const CurriculumPlan& plan, const Corpora& corpora,
                                const MergeList& merges, const ModelConfig& model_cfg,
                                std::uint64_t seed, const CurriculumOptions& options) {
  plan.validate();
  model_cfg.validate();
  corpora.train.check_aligned();
  corpora.valid.check_aligned();
  corpora.test.check_aligned();
  if (corpora.train.size() == 0) throw Error(ErrorCode::kEmptyCorpus, "empty training corpus");
  if (corpora.valid.size() == 0) throw Error(ErrorCode::kEmptyCorpus, "empty validation corpus");
  if (plan.parent_k > merges.size()) {
    throw Error(ErrorCode::kKOutOfRange, "parent_k " + std::to_string(plan.parent_k) +
                                             " exceeds the " + std::to_string(merges.size()) +
                                             " available merges");
  }
  if (!options.checkpoint_dir.empty()) std::filesystem::create_directories(options.checkpoint_dir);

  const PretokenizedCorpora pre{pretokenize_all(corpora.train.src), pretokenize_all(corpora.train.tgt),
                                pretokenize_all(corpora.valid.src), pretokenize_all(corpora.valid.tgt)};

  CurriculumResult result{{}, ToyModel{}, {}};
  std::optional<ToyModel> previous;
  for (std::size_t si = 0; si < plan.stages.size(); ++si) {
    const auto& stage = plan.stages[si];
    const auto units = vocabulary(merges, stage.k);
    ToyModel start = previous ? restrict_vocab(*previous, units, units)
                              : init_model(model_cfg, Vocab(units), Vocab(units), derive_seed(seed, 0));

    Segmenter seg(merges, stage.k);
    const auto train_src = segment_all(pre.train_src, seg);
    const auto train_tgt = segment_all(pre.train_tgt, seg);
    const auto valid = make_pairs(start, segment_all(pre.valid_src, seg), segment_all(pre.valid_tgt, seg));
    const auto det_pairs = make_pairs(start, train_src, train_tgt);

    EpochProvider provider;
    if (stage.dropout) {
      const DropoutConfig base{stage.dropout->p, derive_seed(seed, 1000 + si)};
      provider = [&, base](std::size_t epoch) {
        const DropoutConfig cfg{base.p, derive_seed(base.seed, epoch)};
        std::vector<UnitSeq> src, tgt;
        src.reserve(pre.train_src.size());
        tgt.reserve(pre.train_tgt.size());
        for (std::size_t i = 0; i < pre.train_src.size(); ++i) {
          Rng rs = dropout_stream(cfg, 2 * i);
          src.push_back(segment_sentence_dropout(pre.train_src[i], merges, stage.k, cfg, rs));
          Rng rt = dropout_stream(cfg, 2 * i + 1);
          tgt.push_back(segment_sentence_dropout(pre.train_tgt[i], merges, stage.k, cfg, rt));
        }
        return make_pairs(start, src, tgt);
      };
    } else {
      provider = [&det_pairs](std::size_t) { return det_pairs; };
    }

    TrainResult trained = train(start, provider, valid, stage.train);
    const auto ev = evaluate_translation(trained.model, merges, stage.k, corpora.test.src,
                                         corpora.test.tgt, options.eval_beam);
    StageReport row;
    row.k = stage.k;
    row.vocab_size = units.size();
    row.valid_best = trained.log.best_valid;
    row.test_bleu = ev.bleu.value;
    row.test_chrf = ev.chrf.value;
    row.test_exact = ev.exact_match;
    row.log = trained.log;
    result.report.stages.push_back(std::move(row));
    if (!options.checkpoint_dir.empty()) {
      const auto path = std::filesystem::path(options.checkpoint_dir) /
                        ("stage" + std::to_string(si) + "_k" + std::to_string(stage.k) + ".ckpt.json");
      save_checkpoint(path.string(), trained.model);
    }
    result.stage_models.push_back(trained.model);
    previous = std::move(trained.model);
  }
  result.model = std::move(*previous);
  return result;
}

DropoutComparison compare_dropout(const CurriculumPlan& plan, const Corpora& corpora,
                                  const MergeList& merges, const ModelConfig& model_cfg, double p,
                                  std::uint64_t seed, const CurriculumOptions& options,
                                  bool allow_zero) {
  if (!(p <= 1.0 && (p > 0.0 || (allow_zero && p == 0.0)))) {
    throw Error(ErrorCode::kConfigInvalid, "dropout probability must lie in (0, 1]");
  }
  CurriculumPlan det = plan;
  set_dropout(det, std::nullopt);
  CurriculumPlan drop = plan;
  set_dropout(drop, DropoutConfig{p, seed});
  CurriculumOptions det_opts = options;
  CurriculumOptions drop_opts = options;
  if (!options.checkpoint_dir.empty()) {
    det_opts.checkpoint_dir = (std::filesystem::path(options.checkpoint_dir) / "deterministic").string();
    drop_opts.checkpoint_dir = (std::filesystem::path(options.checkpoint_dir) / "dropout").string();
  }
  DropoutComparison out;
  out.deterministic = run_curriculum(det, corpora, merges, model_cfg, seed, det_opts).report;
  out.dropout = run_curriculum(drop, corpora, merges, model_cfg, seed, drop_opts).report;
  return out;
}

std::string report_csv(const ExperimentReport& report) {
  std::string out = "k,vocab,valid_best,test_bleu,test_chrf,test_exact,steps,best_step\n";
  for (const auto& s : report.stages) {
    out += std::to_string(s.k) + "," + std::to_string(s.vocab_size) + "," + format_fixed(s.valid_best, 4) +
           "," + format_fixed(s.test_bleu, 2) + "," + format_fixed(s.test_chrf, 4) + "," +
           format_fixed(s.test_exact, 4) + "," + std::to_string(s.log.steps_run) + "," +
           std::to_string(s.log.best_step) + "\n";
  }
  return out;
}

std::string timing_csv(const ExperimentReport& report) {
  std::string out = "k,seconds,sents_per_sec\n";
  for (const auto& s : report.stages) {
    out += std::to_string(s.k) + "," + format_fixed(s.log.seconds, 2) + "," +
           format_fixed(s.log.sents_per_sec, 1) + "\n";
  }
  return out;
}

std::string dropout_csv(const DropoutComparison& cmp) {
  if (cmp.deterministic.stages.size() != cmp.dropout.stages.size()) {
    throw Error(ErrorCode::kInternal, "paired reports differ in stage count");
  }
  std::string out = "k,bleu_det,chrf_det,bleu_dropout,chrf_dropout\n";
  for (std::size_t i = 0; i < cmp.deterministic.stages.size(); ++i) {
    const auto& a = cmp.deterministic.stages[i];
    const auto& b = cmp.dropout.stages[i];
    out += std::to_string(a.k) + "," + format_fixed(a.test_bleu, 2) + "," + format_fixed(a.test_chrf, 4) +
           "," + format_fixed(b.test_bleu, 2) + "," + format_fixed(b.test_chrf, 4) + "\n";
  }
  return out;
}

}  // namespace charcurve
