#include "charcurve/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>

#include "charcurve/error.hpp"
#include "charcurve/format.hpp"
#include "charcurve/pretok.hpp"
#include "charcurve/stats.hpp"
#include "charcurve/utf8.hpp"
#include "charcurve/version.hpp"

namespace charcurve {
namespace fs = std::filesystem;
namespace {

class RunDir {
 public:
  explicit RunDir(std::string root) : root_(std::move(root)) { fs::create_directories(root_); }

  void write(const std::string& rel, const std::string& text, bool deterministic = true) {
    const fs::path path = fs::path(root_) / rel;
    fs::create_directories(path.parent_path());
    write_text(path.string(), text);
    files_.push_back({rel, fnv1a64(text), deterministic});
  }

  void note_file(const std::string& rel) {
    files_.push_back({rel, fnv1a64(read_text((fs::path(root_) / rel).string())), true});
  }

  std::string path(const std::string& rel) const { return (fs::path(root_) / rel).string(); }

  struct File {
    std::string rel;
    std::uint64_t hash;
    bool deterministic;
  };
  const std::vector<File>& files() const { return files_; }

 private:
  std::string root_;
  std::vector<File> files_;
};

template <typename F>
auto tagged(const char* stage, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    throw Error(e.code(), std::string("[") + stage + "] " + e.detail());
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorCode::kIo, std::string("[") + stage + "] " + e.what());
  }
}

std::string units_lines(const std::vector<std::string>& lines,
                        const std::function<std::vector<std::string>(const PreTokenizedSentence&)>& seg) {
  std::string out;
  for (const auto& l : lines) {
    const auto units = seg(pretokenize(l));
    for (std::size_t i = 0; i < units.size(); ++i) out += (i ? " " : "") + units[i];
    out += "\n";
  }
  return out;
}

std::string lines_text(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

Corpora load_corpora(const ExperimentConfig& cfg, RunDir& dir) {
  Corpora c;
  if (cfg.toy) {
    const ToyLanguage lang(cfg.toy->grammar);
    const auto n = cfg.toy->train + cfg.toy->valid + cfg.toy->test;
    const auto all = generate_corpus(lang, n, derive_seed(cfg.seed, 0xDA7A));
    for (std::size_t i = 0; i < all.size(); ++i) {
      auto& part = i < cfg.toy->train ? c.train : i < cfg.toy->train + cfg.toy->valid ? c.valid : c.test;
      part.src.push_back(all[i].src);
      part.tgt.push_back(all[i].tgt);
    }
    for (const auto& [name, part] : {std::pair{"train", &c.train}, {"valid", &c.valid}, {"test", &c.test}}) {
      dir.write(std::string("data/") + name + ".src", lines_text(part->src));
      dir.write(std::string("data/") + name + ".tgt", lines_text(part->tgt));
    }
  } else {
    c.train = read_parallel(cfg.train_paths->src, cfg.train_paths->tgt);
    c.valid = read_parallel(cfg.valid_paths->src, cfg.valid_paths->tgt);
    c.test = read_parallel(cfg.test_paths->src, cfg.test_paths->tgt);
  }
  if (c.train.size() == 0) throw Error(ErrorCode::kEmptyCorpus, "empty training corpus");
  if (c.valid.size() == 0 || c.test.size() == 0) throw Error(ErrorCode::kEmptyCorpus, "empty valid/test corpus");
  return c;
}

CurriculumPlan make_plan(const ExperimentConfig& cfg) {
  auto plan = cfg.plan == "steps" ? plan_stepwise(cfg.parent_k, cfg.step, cfg.train)
                                  : plan_direct(cfg.parent_k, cfg.train);
  if (cfg.dropout > 0.0) set_dropout(plan, DropoutConfig{cfg.dropout, cfg.seed});
  return plan;
}

std::string sweeps_csv(const std::vector<ModelSweep>& sweeps) {
  std::string out = "model,k,p,bleu,chrf\n";
  for (const auto& s : sweeps)
    for (const auto& pt : s.points)
      out += s.model + "," + std::to_string(s.k) + "," + format_fixed(pt.p, 4) + "," + format_fixed(pt.bleu, 2) +
             "," + format_fixed(pt.chrf, 4) + "\n";
  return out;
}

std::string fits_csv(const std::vector<ModelSweep>& sweeps) {
  std::string out = "model,k,alpha,beta,ratio,residual_sse\n";
  for (const auto& s : sweeps) {
    out += s.model + "," + std::to_string(s.k) + ",";
    if (s.fit) {
      out += format_fixed(s.fit->alpha, 4) + "," + format_fixed(s.fit->beta, 4) + "," +
             format_fixed(s.fit->ratio, 6) + "," + format_fixed(s.fit->residual_sse, 6) + "\n";
    } else {
      out += "0.0000,,,\n";
    }
  }
  return out;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<std::string> source_words(const std::vector<std::string>& lines) {
  std::vector<std::string> out;
  for (const auto& l : lines) {
    std::istringstream in(utf8::collapse_whitespace(l));
    std::string w;
    while (in >> w) out.push_back(w);
  }
  return out;
}

PipelineResult run_pipeline(const ExperimentConfig& cfg) {
  if (cfg.out_dir.empty()) throw Error(ErrorCode::kSchemaError, "out: output directory is required");
  cfg.validate();
  RunDir dir(cfg.out_dir);
  PipelineResult res;
  dir.write("config.effective.json", to_json(cfg).dump(2) + "\n");

  res.corpora = tagged("data", [&] { return load_corpora(cfg, dir); });

  tagged("pretok", [&] {
    const auto plain = [](const PreTokenizedSentence& s) { return s.units; };
    for (const auto& [name, part] :
         {std::pair{"train", &res.corpora.train}, {"valid", &res.corpora.valid}, {"test", &res.corpora.test}}) {
      dir.write(std::string("pretok/") + name + ".src", units_lines(part->src, plain));
      dir.write(std::string("pretok/") + name + ".tgt", units_lines(part->tgt, plain));
    }
    return 0;
  });

  res.merges = tagged("train-bpe", [&] {
    if (!cfg.merges_file.empty()) return load_merges(cfg.merges_file);
    std::map<std::string, std::uint64_t> counts;
    for (const auto* side : {&res.corpora.train.src, &res.corpora.train.tgt})
      for (const auto& line : *side)
        for (const auto& u : pretokenize(line).units) ++counts[u];
    return train_bpe(counts, cfg.bpe_merges);
  });
  {
    std::ostringstream m;
    write_merges(m, res.merges);
    dir.write("merges.txt", m.str());
  }

  tagged("segment", [&] {
    for (const std::size_t k : {cfg.parent_k, std::size_t{0}}) {
      if (k > res.merges.size()) continue;
      Segmenter seg(res.merges, k);
      const auto f = [&](const PreTokenizedSentence& s) { return seg.segment_sentence(s); };
      dir.write("segmented/train.k" + std::to_string(k) + ".src", units_lines(res.corpora.train.src, f));
      dir.write("segmented/train.k" + std::to_string(k) + ".tgt", units_lines(res.corpora.train.tgt, f));
    }
    return 0;
  });

  if (cfg.stages.stats) {
    tagged("stats", [&] {
      std::vector<std::size_t> ks = cfg.stats_k;
      if (ks.empty()) ks = {0, std::min(cfg.parent_k, res.merges.size()), res.merges.size()};
      std::sort(ks.begin(), ks.end());
      ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
      std::string csv = stats_csv_header(true) + "\n";
      for (const std::size_t k : ks) {
        const auto s = compute_stats(res.corpora.train.src, res.merges, k);
        const auto t = compute_stats(res.corpora.train.tgt, res.merges, k);
        csv += stats_csv_row(k, s, &t) + "\n";
      }
      dir.write("stats.csv", csv);
      return 0;
    });
  }

  if (cfg.stages.curriculum) {
    tagged("curriculum", [&] {
      const auto plan = make_plan(cfg);
      CurriculumOptions opts;
      opts.eval_beam = cfg.eval_beam;
      opts.checkpoint_dir = dir.path("curriculum/checkpoints");
      res.curriculum = run_curriculum(plan, res.corpora, res.merges, cfg.model, cfg.seed, opts);
      dir.write("curriculum/report.csv", report_csv(res.curriculum->report));
      dir.write("curriculum/timing.csv", timing_csv(res.curriculum->report), false);
      for (std::size_t i = 0; i < plan.stages.size(); ++i) {
        dir.note_file("curriculum/checkpoints/stage" + std::to_string(i) + "_k" +
                      std::to_string(plan.stages[i].k) + ".ckpt.json");
      }

      if (cfg.scratch_baseline) {
        int budget = 0;
        for (const auto& s : res.curriculum->report.stages) budget += s.log.steps_run;
        TrainConfig base = cfg.train;
        base.max_steps = budget;
        CurriculumPlan scratch;
        scratch.parent_k = 0;
        scratch.stages.push_back({0, base, std::nullopt});
        scratch.stages[0].train.mode = TrainMode::kScratch;
        scratch.stages[0].train.seed = derive_seed(cfg.seed, 0);
        CurriculumOptions bopts;
        bopts.eval_beam = cfg.eval_beam;
        res.baseline = run_curriculum(scratch, res.corpora, res.merges, cfg.model, cfg.seed, bopts);
        dir.write("curriculum/baseline.csv", report_csv(res.baseline->report));
        dir.write("curriculum/baseline_timing.csv", timing_csv(res.baseline->report), false);
      }
      if (cfg.compare_dropout) {
        CurriculumOptions dopts;
        dopts.eval_beam = cfg.eval_beam;
        res.dropout = compare_dropout(plan, res.corpora, res.merges, cfg.model, cfg.dropout, cfg.seed, dopts);
        dir.write("curriculum/dropout.csv", dropout_csv(*res.dropout));
      }
      return 0;
    });
  }

  std::vector<std::tuple<std::string, std::size_t, const ToyModel*>> models;
  if (res.curriculum) {
    const auto ks = make_plan(cfg).merge_counts();
    models.emplace_back("parent", ks.front(), &res.curriculum->stage_models.front());
    models.emplace_back("final", ks.back(), &res.curriculum->model);
    if (res.baseline) models.emplace_back("scratch", 0, &res.baseline->model);
  }

  if (cfg.stages.robustness && !models.empty()) {
    tagged("robustness", [&] {
      const NoiseLexicon lex = cfg.lexicon.empty()
                                   ? synthetic_lexicon(source_words(res.corpora.train.src), cfg.lexicon_variants,
                                                       derive_seed(cfg.noise_seed, 1))
                                   : load_lexicon(cfg.lexicon);
      dir.write("robustness/lexicon.tsv", lexicon_tsv(lex));
      std::vector<SweepSeries> series;
      for (const auto& [name, k, model] : models) {
        ModelSweep s{name, k, sweep_points(*model, res.merges, k, res.corpora.test.src, res.corpora.test.tgt, lex,
                                           cfg.noise_ps, cfg.noise_seed, cfg.eval_beam),
                     std::nullopt};
        std::vector<std::pair<double, double>> pts;
        for (const auto& pt : s.points) pts.emplace_back(pt.p, pt.bleu);
        try {
          s.fit = fit_sensitivity(pts);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kAlphaZero) throw;
        }
        series.push_back({name + " (k=" + std::to_string(k) + ")", s.points});
        res.sweeps.push_back(std::move(s));
      }
      dir.write("robustness/sweep.csv", sweeps_csv(res.sweeps));
      dir.write("robustness/fit.csv", fits_csv(res.sweeps));
      dir.write("robustness/sweep.svg", sweep_svg(series));
      return 0;
    });
  }

  if (cfg.stages.contrastive && !models.empty()) {
    tagged("contrastive", [&] {
      std::vector<ContrastiveItem> items;
      if (cfg.items.empty()) {
        items = generate_synthetic_suite(cfg.toy->grammar, cfg.synthetic_items, cfg.items_seed);
        dir.write("contrastive/items.tsv", items_tsv(items));
      } else {
        items = load_items(cfg.items);
      }
      for (const auto& [name, k, model] : models) {
        auto report = evaluate_contrastive(model_scorer(*model, res.merges, k), items);
        dir.write("contrastive/report_" + name + ".csv", contrastive_csv(report));
        res.contrastive.push_back({name, k, std::move(report)});
      }
      return 0;
    });
  }

  Json manifest;
  manifest["format"] = "charcurve-manifest v1";
  manifest["version"] = kVersion;
  manifest["seed"] = cfg.seed;
  Json inputs = Json::array();
  const auto add_input = [&](const std::string& role, const std::string& path) {
    if (path.empty()) return;
    inputs.push_back({{"role", role}, {"path", path}, {"fnv1a64", hex64(fnv1a64(read_text(path)))}});
  };
  if (cfg.train_paths) {
    add_input("train.src", cfg.train_paths->src);
    add_input("train.tgt", cfg.train_paths->tgt);
    add_input("valid.src", cfg.valid_paths->src);
    add_input("valid.tgt", cfg.valid_paths->tgt);
    add_input("test.src", cfg.test_paths->src);
    add_input("test.tgt", cfg.test_paths->tgt);
  }
  add_input("merges", cfg.merges_file);
  add_input("lexicon", cfg.lexicon);
  add_input("items", cfg.items);
  manifest["inputs"] = inputs;
  Json outputs = Json::array();
  for (const auto& f : dir.files()) {
    outputs.push_back({{"path", f.rel}, {"fnv1a64", hex64(f.hash)}, {"deterministic", f.deterministic}});
    res.artifacts.push_back(f.rel);
  }
  manifest["outputs"] = outputs;
  manifest["config"] = to_json(cfg);
  write_text(dir.path("manifest.json"), manifest.dump(2) + "\n");
  res.artifacts.push_back("manifest.json");
  return res;
}

}  // namespace charcurve
