#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "charcurve/grammar.hpp"
#include "charcurve/json_io.hpp"
#include "charcurve/model.hpp"
#include "charcurve/train.hpp"

namespace charcurve {

inline constexpr const char* kConfigVersion = "charcurve-config v1";

struct ParallelPaths {
  std::string src;
  std::string tgt;
};

struct ToyDataConfig {
  GrammarSpec grammar = GrammarSpec::default_spec();
  std::size_t train = 5000;
  std::size_t valid = 200;
  std::size_t test = 200;
};

struct StageSwitches {
  bool stats = true;
  bool curriculum = true;
  bool robustness = true;
  bool contrastive = true;
};

struct Override {
  std::string field;   // dotted path, e.g. "curriculum.parent_k"
  Json value;
  Json previous;       // null when the field was absent
  std::string source;  // e.g. "--k"
};

// Schema (JSON, "version": "charcurve-config v1"); relative paths resolve
// against the config file's directory.
//
//   seed, out
//   data.{train,valid,test}.{src,tgt} | data.toy.{grammar,train,valid,test}
//   bpe.{merges, merges_file, stats_k}
//   model.*      (ModelConfig fields; precision "f32" | "f64")
//   train.*      (TrainConfig fields except mode and seed)
//   curriculum.{plan, parent_k, step, dropout, compare_dropout,
//               scratch_baseline, eval_beam}
//   robustness.{lexicon, variants, ps, seed}
//   contrastive.{items, synthetic_items, seed}
//   stages.{stats, curriculum, robustness, contrastive}
struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string out_dir;

  std::optional<ParallelPaths> train_paths, valid_paths, test_paths;
  std::optional<ToyDataConfig> toy;

  std::size_t bpe_merges = 200;
  std::string merges_file;  // load instead of training when set
  std::vector<std::size_t> stats_k;  // empty: 0, parent_k and the full list

  ModelConfig model;
  TrainConfig train;

  std::string plan = "direct";  // "direct" | "steps"
  std::size_t parent_k = 64;
  std::size_t step = 500;
  double dropout = 0.0;  // training-time BPE dropout; 0 disables
  bool compare_dropout = false;
  bool scratch_baseline = false;  // character model from scratch, same total steps
  int eval_beam = 4;

  std::string lexicon;  // synthetic lexicon from training source words when empty
  int lexicon_variants = 3;
  std::vector<double> noise_ps{0.0, 0.1, 0.2, 0.3};
  std::uint64_t noise_seed = 17;

  std::string items;  // synthetic suite from the toy grammar when empty
  std::size_t synthetic_items = 500;
  std::uint64_t items_seed = 23;

  StageSwitches stages;
  std::vector<Override> overrides;

  // Throws kSchemaError, kMissingFile.
  void validate() const;
};

// Parses and validates. Throws kParse, kSchemaError, kMissingFile.
ExperimentConfig config_from_json(const Json& j, const std::string& base_dir);
ExperimentConfig load_config(const std::string& path,
                             const std::vector<Override>& overrides = {});

// Model and training sections of a config file, for the single-model
// commands. Other sections are checked for unknown keys at the top level only.
struct ModelSettings {
  ModelConfig model;
  TrainConfig train;
  std::uint64_t seed = 1;
};
ModelSettings load_model_settings(const std::string& path, const std::vector<Override>& overrides = {});

// Sets a dotted field in a raw config document, filling `previous`.
void apply_override(Json& doc, Override& ov);

// Effective config, including the override list.
Json to_json(const ExperimentConfig& cfg);
Json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const JsonReader& in);

}  // namespace charcurve
