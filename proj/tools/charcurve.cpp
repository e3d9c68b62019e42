#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "charcurve/bpe.hpp"
#include "charcurve/config.hpp"
#include "charcurve/contrastive.hpp"
#include "charcurve/corpus.hpp"
#include "charcurve/curriculum.hpp"
#include "charcurve/error.hpp"
#include "charcurve/format.hpp"
#include "charcurve/grammar.hpp"
#include "charcurve/metrics.hpp"
#include "charcurve/model.hpp"
#include "charcurve/pipeline.hpp"
#include "charcurve/pretok.hpp"
#include "charcurve/robustness.hpp"
#include "charcurve/stats.hpp"
#include "charcurve/train.hpp"
#include "charcurve/version.hpp"

using namespace charcurve;
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool json = false;
};

Globals g;

void emit(const Json& j, const std::string& human) {
  if (g.json) {
    std::cout << j.dump() << "\n";
  } else {
    std::cout << human;
  }
}

std::string out_dir(const std::string& local) {
  const std::string dir = !local.empty() ? local : g.out;
  if (dir.empty()) throw Error(ErrorCode::kSchemaError, "out: --out is required");
  fs::create_directories(dir);
  return dir;
}

std::string join_units(const std::vector<std::string>& units) {
  std::string s;
  for (std::size_t i = 0; i < units.size(); ++i) s += (i ? " " : "") + units[i];
  return s;
}

std::vector<UnitSeq> segment_lines(const std::vector<std::string>& lines, const MergeList& merges, std::size_t k) {
  Segmenter seg(merges, k);
  std::vector<UnitSeq> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(seg.segment_sentence(pretokenize(l)));
  return out;
}

void check_k(const MergeList& merges, std::size_t k) {
  if (k > merges.size()) {
    throw Error(ErrorCode::kKOutOfRange,
                "k=" + std::to_string(k) + " exceeds the merge list (" + std::to_string(merges.size()) + ")");
  }
}

ModelSettings settings(const std::vector<Override>& extra = {}) {
  auto s = load_model_settings(g.config, extra);
  if (g.seed_set) {
    s.seed = g.seed;
    s.train.seed = g.seed;
  }
  return s;
}

std::string log_csv(const TrainLog& log) {
  std::string out = "step,train_loss,valid_loss,improved\n";
  for (const auto& e : log.entries) {
    out += std::to_string(e.step) + "," + format_fixed(e.train_loss, 6) + "," + format_fixed(e.valid_loss, 6) +
           "," + (e.improved ? "1" : "0") + "\n";
  }
  return out;
}

Json log_json(const TrainLog& log) {
  return {{"steps", log.steps_run},
          {"best_step", log.best_step},
          {"best_valid", log.best_valid},
          {"stopped_early", log.stopped_early},
          {"seconds", log.seconds},
          {"sents_per_sec", log.sents_per_sec}};
}

std::string log_human(const TrainLog& log, const std::string& ckpt) {
  return "steps " + std::to_string(log.steps_run) + ", best valid loss " + format_fixed(log.best_valid, 4) +
         " at step " + std::to_string(log.best_step) + (log.stopped_early ? " (early stop)" : "") + "\n" +
         "checkpoint " + ckpt + "\n";
}

// Trains on segmented files and writes model.ckpt.json and train_log.csv.
void train_and_save(const ToyModel& init, const MergeList& merges, std::size_t k,
                    const std::vector<std::string>& train_paths, const std::vector<std::string>& valid_paths,
                    const TrainConfig& tc, const std::string& dir) {
  const auto tr = read_parallel(train_paths[0], train_paths[1]);
  const auto va = read_parallel(valid_paths[0], valid_paths[1]);
  const auto pairs = make_pairs(init, segment_lines(tr.src, merges, k), segment_lines(tr.tgt, merges, k));
  const auto valid = make_pairs(init, segment_lines(va.src, merges, k), segment_lines(va.tgt, merges, k));
  const auto res = train(init, pairs, valid, tc);
  const std::string ckpt = (fs::path(dir) / "model.ckpt.json").string();
  save_checkpoint(ckpt, res.model);
  write_text((fs::path(dir) / "train_log.csv").string(), log_csv(res.log));
  emit(log_json(res.log), log_human(res.log, ckpt));
}

std::string sweep_points_csv(const std::vector<SweepPoint>& pts) {
  std::string out = "p,bleu,chrf\n";
  for (const auto& pt : pts) {
    out += format_fixed(pt.p, 4) + "," + format_fixed(pt.bleu, 2) + "," + format_fixed(pt.chrf, 4) + "\n";
  }
  return out;
}

std::vector<double> parse_ps(const std::string& text) {
  std::vector<double> ps;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      ps.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kConfigInvalid, "bad noise level '" + item + "'");
    }
  }
  return ps;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Character-level translation by vocabulary curriculum"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", g.config, "JSON experiment config");
  app.add_option("--out", g.out, "Output directory");
  auto* seed_opt = app.add_option("--seed", g.seed, "Seed override");
  app.add_flag("--json", g.json, "Machine-readable output");

  std::function<void()> action;

  // pretok
  std::string input, output, input2;
  auto* pretok_cmd = app.add_subcommand("pretok", "Lossless pretokenization, one unit sequence per line");
  pretok_cmd->add_option("--input", input)->required();
  pretok_cmd->add_option("--output", output)->required();
  pretok_cmd->callback([&] {
    action = [&] {
      std::vector<std::string> out;
      for (const auto& l : read_lines(input)) out.push_back(join_units(pretokenize(l).units));
      write_lines(output, out);
    };
  });

  // train-bpe
  std::vector<std::string> inputs;
  std::size_t n_merges = 0;
  auto* tbpe = app.add_subcommand("train-bpe", "Learn an ordered merge list");
  tbpe->add_option("--input", inputs, "Raw text; repeat for a joint source/target list")->required();
  tbpe->add_option("--merges", n_merges)->required();
  tbpe->add_option("--output", output)->required();
  tbpe->callback([&] {
    action = [&] {
      std::map<std::string, std::uint64_t> counts;
      for (const auto& path : inputs)
        for (const auto& l : read_lines(path))
          for (const auto& u : pretokenize(l).units) ++counts[u];
      const auto merges = train_bpe(counts, n_merges);
      save_merges(output, merges);
      emit({{"merges", merges.size()}}, "learned " + std::to_string(merges.size()) + " merges\n");
    };
  });

  // apply-bpe
  std::string merges_path;
  std::size_t k = 0;
  double dropout = 0.0;
  std::uint64_t dropout_seed = 0;
  auto* abpe = app.add_subcommand("apply-bpe", "Segment text with the first k merges");
  abpe->add_option("--merges", merges_path)->required();
  abpe->add_option("--k", k)->required();
  abpe->add_option("--dropout", dropout, "Merge skip probability");
  abpe->add_option("--dropout-seed", dropout_seed);
  abpe->add_option("--input", input)->required();
  abpe->add_option("--output", output)->required();
  abpe->callback([&] {
    action = [&] {
      const auto merges = load_merges(merges_path);
      check_k(merges, k);
      const auto lines = read_lines(input);
      std::vector<std::string> out;
      if (dropout > 0.0) {
        const DropoutConfig dc{dropout, g.seed_set ? g.seed : dropout_seed};
        for (std::size_t i = 0; i < lines.size(); ++i) {
          Rng rng = dropout_stream(dc, i);
          out.push_back(join_units(segment_sentence_dropout(pretokenize(lines[i]), merges, k, dc, rng)));
        }
      } else {
        for (const auto& u : segment_lines(lines, merges, k)) out.push_back(join_units(u));
      }
      write_lines(output, out);
    };
  });

  // vocab
  auto* vocab_cmd = app.add_subcommand("vocab", "Unit vocabulary of the first k merges");
  vocab_cmd->add_option("--merges", merges_path)->required();
  vocab_cmd->add_option("--k", k)->required();
  vocab_cmd->add_option("--output", output)->required();
  vocab_cmd->callback([&] {
    action = [&] {
      const auto merges = load_merges(merges_path);
      check_k(merges, k);
      const auto v = vocabulary(merges, k);
      write_lines(output, std::vector<std::string>(v.begin(), v.end()));
    };
  });

  // stats
  std::vector<std::size_t> ks;
  auto* stats_cmd = app.add_subcommand("stats", "Segmentation statistics, one CSV row per k");
  stats_cmd->add_option("--merges", merges_path)->required();
  stats_cmd->add_option("--k", ks, "Merge counts (repeatable)")->required();
  stats_cmd->add_option("--input", input)->required();
  stats_cmd->add_option("--input2", input2, "Second side of a parallel corpus");
  stats_cmd->callback([&] {
    action = [&] {
      const auto merges = load_merges(merges_path);
      const auto a = read_lines(input);
      std::vector<std::string> b;
      if (!input2.empty()) b = read_lines(input2);
      std::cout << stats_csv_header(!input2.empty()) << "\n";
      for (const auto kk : ks) {
        check_k(merges, kk);
        const auto s = compute_stats(a, merges, kk);
        if (input2.empty()) {
          std::cout << stats_csv_row(kk, s, nullptr) << "\n";
        } else {
          const auto t = compute_stats(b, merges, kk);
          std::cout << stats_csv_row(kk, s, &t) << "\n";
        }
      }
    };
  });

  // train-model
  std::vector<std::string> train_p, valid_p, test_p;
  std::string local_out;
  auto* tm = app.add_subcommand("train-model", "Train a model from scratch on k-merge segmentation");
  tm->add_option("--merges", merges_path)->required();
  tm->add_option("--k", k)->required();
  tm->add_option("--train", train_p, "SRC TGT")->expected(2)->required();
  tm->add_option("--valid", valid_p, "SRC TGT")->expected(2)->required();
  tm->callback([&] {
    action = [&] {
      const auto s = settings();
      const auto merges = load_merges(merges_path);
      check_k(merges, k);
      const auto v = vocabulary(merges, k);
      const auto init = init_model(s.model, Vocab(v), Vocab(v), derive_seed(s.seed, 0));
      TrainConfig tc = s.train;
      tc.mode = TrainMode::kScratch;
      train_and_save(init, merges, k, train_p, valid_p, tc, out_dir(local_out));
    };
  });

  // finetune
  std::string from;
  auto* ft = app.add_subcommand("finetune", "Restrict a checkpoint to the k-merge vocabulary and continue training");
  ft->add_option("--from", from)->required();
  ft->add_option("--merges", merges_path)->required();
  ft->add_option("--k", k)->required();
  ft->add_option("--train", train_p, "SRC TGT")->expected(2)->required();
  ft->add_option("--valid", valid_p, "SRC TGT")->expected(2)->required();
  ft->callback([&] {
    action = [&] {
      const auto s = settings();
      const auto merges = load_merges(merges_path);
      check_k(merges, k);
      const auto parent = load_checkpoint(from);
      const auto v = vocabulary(merges, k);
      const auto init = restrict_vocab(parent, v, v);
      TrainConfig tc = s.train;
      tc.mode = TrainMode::kFinetune;
      train_and_save(init, merges, k, train_p, valid_p, tc, out_dir(local_out));
    };
  });

  // translate
  std::string ckpt;
  int beam = 4;
  auto* tr = app.add_subcommand("translate", "Beam-search translation of a source file");
  tr->add_option("--ckpt", ckpt)->required();
  tr->add_option("--merges", merges_path)->required();
  tr->add_option("--k", k)->required();
  tr->add_option("--beam", beam);
  tr->add_option("--input", input)->required();
  tr->add_option("--output", output)->required();
  tr->callback([&] {
    action = [&] {
      const auto model = load_checkpoint(ckpt);
      const auto merges = load_merges(merges_path);
      check_k(merges, k);
      if (beam < 1) throw Error(ErrorCode::kConfigInvalid, "--beam must be >= 1");
      std::vector<std::string> out;
      for (const auto& units : segment_lines(read_lines(input), merges, k)) {
        out.push_back(units_to_text(translate(model, units, beam)));
      }
      write_lines(output, out);
    };
  });

  // score-pairs
  std::string src_path, tgt_path;
  auto* sp = app.add_subcommand("score-pairs", "Length-normalized log-probability per sentence pair");
  sp->add_option("--ckpt", ckpt)->required();
  sp->add_option("--merges", merges_path)->required();
  sp->add_option("--k", k)->required();
  sp->add_option("--src", src_path)->required();
  sp->add_option("--tgt", tgt_path)->required();
  sp->callback([&] {
    action = [&] {
      const auto model = load_checkpoint(ckpt);
      const auto merges = load_merges(merges_path);
      check_k(merges, k);
      const auto pt = read_parallel(src_path, tgt_path);
      const auto pairs = make_pairs(model, segment_lines(pt.src, merges, k), segment_lines(pt.tgt, merges, k));
      const auto scores = score_batch(model, pairs);
      if (g.json) {
        std::cout << Json(scores).dump() << "\n";
      } else {
        for (const double s : scores) std::cout << format_fixed(s, 6) << "\n";
      }
    };
  });

  // eval-bleu / eval-chrf
  std::string hyp_path, ref_path;
  int order = 6;
  double beta = 2.0;
  auto* eb = app.add_subcommand("eval-bleu", "Corpus BLEU");
  eb->add_option("--hyp", hyp_path)->required();
  eb->add_option("--ref", ref_path)->required();
  eb->callback([&] {
    action = [&] {
      const auto b = bleu(read_lines(hyp_path), read_lines(ref_path));
      std::string prec;
      for (std::size_t i = 0; i < 4; ++i) prec += (i ? "/" : "") + format_fixed(100.0 * b.precisions[i], 1);
      emit({{"bleu", b.value},
            {"precisions", b.precisions},
            {"brevity_penalty", b.brevity_penalty},
            {"hyp_len", b.hyp_len},
            {"ref_len", b.ref_len}},
           "BLEU = " + format_fixed(b.value, 2) + " " + prec + " (BP=" + format_fixed(b.brevity_penalty, 3) +
               ", hyp_len=" + std::to_string(b.hyp_len) + ", ref_len=" + std::to_string(b.ref_len) + ")\n");
    };
  });
  auto* ec = app.add_subcommand("eval-chrf", "Corpus chrF");
  ec->add_option("--hyp", hyp_path)->required();
  ec->add_option("--ref", ref_path)->required();
  ec->add_option("--order", order);
  ec->add_option("--beta", beta);
  ec->callback([&] {
    action = [&] {
      const auto c = chrf(read_lines(hyp_path), read_lines(ref_path), order, beta);
      emit({{"chrf", c.value}, {"order", c.order}, {"beta", c.beta}},
           "chrF" + std::to_string(c.order) + " (beta=" + format_fixed(c.beta, 1) + ") = " + format_fixed(c.value, 4) +
               "\n");
    };
  });

  // noise-inject
  std::string lexicon_path;
  double p = 0.0;
  std::uint64_t noise_seed = 0;
  auto* ni = app.add_subcommand("noise-inject", "Replace words by lexicon misspellings with probability p");
  ni->add_option("--lexicon", lexicon_path)->required();
  ni->add_option("--p", p)->required();
  ni->add_option("--noise-seed", noise_seed);
  ni->add_option("--input", input)->required();
  ni->add_option("--output", output)->required();
  ni->callback([&] {
    action = [&] {
      const auto lex = load_lexicon(lexicon_path);
      write_lines(output, inject_noise(read_lines(input), lex, p, g.seed_set ? g.seed : noise_seed));
    };
  });

  // noise-fit
  std::string points_path;
  auto* nf = app.add_subcommand("noise-fit", "Least-squares BLEU ~ beta*p + alpha");
  nf->add_option("--points", points_path, "CSV with p,bleu columns")->required();
  nf->callback([&] {
    action = [&] {
      const auto f = fit_sensitivity(parse_points_csv(read_text(points_path)));
      emit({{"alpha", f.alpha}, {"beta", f.beta}, {"ratio", f.ratio}, {"residual_sse", f.residual_sse}},
           "alpha=" + format_fixed(f.alpha, 4) + " beta=" + format_fixed(f.beta, 4) +
               " ratio=" + format_fixed(f.ratio, 6) + "\n");
    };
  });

  // noise-sweep
  std::string ps_text = "0,0.1,0.2,0.3";
  auto* ns = app.add_subcommand("noise-sweep", "Translate noised sources at several p and fit the sensitivity");
  ns->add_option("--ckpt", ckpt)->required();
  ns->add_option("--merges", merges_path)->required();
  ns->add_option("--k", k)->required();
  ns->add_option("--lexicon", lexicon_path)->required();
  ns->add_option("--ps", ps_text, "Comma-separated noise levels including 0");
  ns->add_option("--src", src_path)->required();
  ns->add_option("--ref", ref_path)->required();
  ns->add_option("--beam", beam);
  ns->add_option("--noise-seed", noise_seed);
  ns->callback([&] {
    action = [&] {
      const auto model = load_checkpoint(ckpt);
      const auto merges = load_merges(merges_path);
      check_k(merges, k);
      const auto lex = load_lexicon(lexicon_path);
      const auto pt = read_parallel(src_path, ref_path);
      const auto dir = out_dir(local_out);
      const auto pts =
          sweep_points(model, merges, k, pt.src, pt.tgt, lex, parse_ps(ps_text), g.seed_set ? g.seed : noise_seed, beam);
      write_text((fs::path(dir) / "sweep.svg").string(), sweep_svg({{"k=" + std::to_string(k), pts}}));
      std::vector<std::pair<double, double>> xy;
      for (const auto& q : pts) xy.emplace_back(q.p, q.bleu);
      SweepResult r{pts, {}};
      try {
        r.fit = fit_sensitivity(xy);
      } catch (const Error&) {
        write_text((fs::path(dir) / "sweep.csv").string(), sweep_points_csv(pts));
        throw;
      }
      write_text((fs::path(dir) / "sweep.csv").string(), sweep_csv(r));
      emit({{"alpha", r.fit.alpha}, {"beta", r.fit.beta}, {"ratio", r.fit.ratio}}, sweep_csv(r));
    };
  });

  // contrastive-eval
  std::string items_path, report_path;
  auto* ce = app.add_subcommand("contrastive-eval", "Preference accuracy on contrastive pairs");
  ce->add_option("--ckpt", ckpt)->required();
  ce->add_option("--merges", merges_path)->required();
  ce->add_option("--k", k)->required();
  ce->add_option("--items", items_path, "TSV source, correct, contrast, category")->required();
  ce->add_option("--report", report_path, "CSV path (default: <out>/report.csv)");
  ce->callback([&] {
    action = [&] {
      const auto model = load_checkpoint(ckpt);
      const auto merges = load_merges(merges_path);
      check_k(merges, k);
      const auto items = load_items(items_path);
      const auto rep = evaluate_contrastive(model_scorer(model, merges, k), items);
      const std::string path =
          report_path.empty() ? (fs::path(out_dir(local_out)) / "report.csv").string() : report_path;
      write_text(path, contrastive_csv(rep));
      emit({{"items", rep.items}, {"preferred", rep.preferred}, {"accuracy", rep.accuracy()}},
           contrastive_csv(rep));
    };
  });

  // curriculum-run
  std::string plan_name = "direct";
  std::size_t parent_k = 0, step = 500;
  auto* cr = app.add_subcommand("curriculum-run", "Parent model followed by decreasing-k finetuning stages");
  cr->add_option("--plan", plan_name)->check(CLI::IsMember({"direct", "steps"}));
  cr->add_option("--parent-k", parent_k)->required();
  cr->add_option("--step", step);
  cr->add_option("--dropout", dropout);
  cr->add_option("--merges", merges_path)->required();
  cr->add_option("--train", train_p, "SRC TGT")->expected(2)->required();
  cr->add_option("--valid", valid_p, "SRC TGT")->expected(2)->required();
  cr->add_option("--test", test_p, "SRC TGT")->expected(2)->required();
  cr->add_option("--beam", beam);
  cr->callback([&] {
    action = [&] {
      const auto s = settings();
      const auto merges = load_merges(merges_path);
      Corpora c{read_parallel(train_p[0], train_p[1]), read_parallel(valid_p[0], valid_p[1]),
                read_parallel(test_p[0], test_p[1])};
      auto plan = plan_name == "steps" ? plan_stepwise(parent_k, step, s.train) : plan_direct(parent_k, s.train);
      if (dropout > 0.0) set_dropout(plan, DropoutConfig{dropout, s.seed});
      const auto dir = out_dir(local_out);
      CurriculumOptions opts;
      opts.eval_beam = beam;
      opts.checkpoint_dir = (fs::path(dir) / "checkpoints").string();
      const auto res = run_curriculum(plan, c, merges, s.model, s.seed, opts);
      write_text((fs::path(dir) / "report.csv").string(), report_csv(res.report));
      write_text((fs::path(dir) / "timing.csv").string(), timing_csv(res.report));
      emit({{"stages", res.report.stages.size()}}, report_csv(res.report));
    };
  });

  // toy-data
  std::size_t n_train = 5000, n_valid = 200, n_test = 200;
  auto* td = app.add_subcommand("toy-data", "Write a synthetic parallel corpus");
  td->add_option("--train-size", n_train);
  td->add_option("--valid-size", n_valid);
  td->add_option("--test-size", n_test);
  td->callback([&] {
    action = [&] {
      GrammarSpec spec = GrammarSpec::default_spec();
      if (!g.config.empty()) {
        const auto cfg = load_config(g.config);
        if (cfg.toy) spec = cfg.toy->grammar;
      }
      spec.validate();
      const ToyLanguage lang(spec);
      const auto all = generate_corpus(lang, n_train + n_valid + n_test, g.seed_set ? g.seed : 1);
      const auto dir = out_dir(local_out);
      std::map<std::string, ParallelText> parts;
      for (std::size_t i = 0; i < all.size(); ++i) {
        auto& part = parts[i < n_train ? "train" : i < n_train + n_valid ? "valid" : "test"];
        part.src.push_back(all[i].src);
        part.tgt.push_back(all[i].tgt);
      }
      for (const auto& [name, part] : parts) {
        write_lines((fs::path(dir) / (name + ".src")).string(), part.src);
        write_lines((fs::path(dir) / (name + ".tgt")).string(), part.tgt);
      }
      write_text((fs::path(dir) / "grammar.json").string(), to_json(spec).dump(2) + "\n");
    };
  });

  // pipeline
  std::size_t k_override = 0;
  std::vector<std::string> sets;
  auto* pl = app.add_subcommand("pipeline", "Run every enabled stage from a config");
  auto* k_opt = pl->add_option("--k", k_override, "Parent merge count (curriculum.parent_k)");
  pl->add_option("--set", sets, "FIELD=JSON override, e.g. train.max_steps=500");
  pl->callback([&] {
    action = [&] {
      if (g.config.empty()) throw Error(ErrorCode::kSchemaError, "config: --config is required");
      std::vector<Override> ovs;
      if (*seed_opt) ovs.push_back({"seed", g.seed, {}, "--seed"});
      if (!g.out.empty()) ovs.push_back({"out", fs::absolute(g.out).string(), {}, "--out"});
      if (*k_opt) ovs.push_back({"curriculum.parent_k", k_override, {}, "--k"});
      for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw Error(ErrorCode::kSchemaError, "--set expects FIELD=VALUE");
        Json v;
        try {
          v = Json::parse(s.substr(eq + 1));
        } catch (const Json::exception&) {
          v = s.substr(eq + 1);
        }
        ovs.push_back({s.substr(0, eq), v, {}, "--set"});
      }
      const auto cfg = load_config(g.config, ovs);
      const auto res = run_pipeline(cfg);
      Json arts = res.artifacts;
      std::string human;
      for (const auto& a : res.artifacts) human += a + "\n";
      emit({{"out", cfg.out_dir}, {"artifacts", arts}}, human);
    };
  });

  for (auto* sub : {tm, ft, ns, ce, cr, td}) {
    sub->add_option("--out", local_out, "Output directory");
  }

  try {
    app.parse(argc, argv);
    g.seed_set = static_cast<bool>(*seed_opt);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  try {
    if (action) action();
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_status(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
