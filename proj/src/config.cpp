#include "charcurve/config.hpp"

#include <filesystem>

#include "charcurve/corpus.hpp"
#include "charcurve/error.hpp"

namespace charcurve {
namespace fs = std::filesystem;
namespace {

[[noreturn]] void schema(const std::string& field, const std::string& msg) {
  throw Error(ErrorCode::kSchemaError, field + ": " + msg);
}

std::string resolve(const std::string& base, const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute() || base.empty()) return path;
  return (fs::path(base) / path).lexically_normal().string();
}

ParallelPaths paths_from(const JsonReader& in, const std::string& base) {
  in.only({"src", "tgt"});
  return {resolve(base, in.get_string("src")), resolve(base, in.get_string("tgt"))};
}

std::vector<double> doubles(const JsonReader& in, std::string_view key) {
  const Json& v = in.node()[std::string(key)];
  if (!v.is_array()) schema(in.field(key), "expected array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) schema(in.field(key), "expected array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<std::size_t> counts(const JsonReader& in, std::string_view key) {
  const Json& v = in.node()[std::string(key)];
  if (!v.is_array()) schema(in.field(key), "expected array of non-negative integers");
  std::vector<std::size_t> out;
  for (const auto& e : v) {
    if (!e.is_number_integer() || e.get<std::int64_t>() < 0) {
      schema(in.field(key), "expected array of non-negative integers");
    }
    out.push_back(e.get<std::size_t>());
  }
  return out;
}

std::size_t count(const JsonReader& in, std::string_view key, std::size_t fallback) {
  const int v = in.get_int(key, static_cast<int>(fallback));
  if (v < 0) schema(in.field(key), "must be >= 0");
  return static_cast<std::size_t>(v);
}

void require_file(const std::string& field, const std::string& path) {
  if (!path.empty() && !fs::is_regular_file(path)) {
    throw Error(ErrorCode::kMissingFile, field + ": " + path + " does not exist");
  }
}

}  // namespace

Json to_json(const TrainConfig& c) {
  Json j;
  j["lr_scale"] = c.lr_scale;
  j["warmup_steps"] = c.warmup_steps;
  j["constant_lr"] = c.constant_lr;
  j["batch_size"] = c.batch_size;
  j["max_steps"] = c.max_steps;
  j["patience"] = c.patience;
  j["eval_every"] = c.eval_every;
  j["adam_beta1"] = c.adam_beta1;
  j["adam_beta2"] = c.adam_beta2;
  j["adam_eps"] = c.adam_eps;
  return j;
}

TrainConfig train_config_from_json(const JsonReader& in) {
  in.only({"lr_scale", "warmup_steps", "constant_lr", "batch_size", "max_steps", "patience",
           "eval_every", "adam_beta1", "adam_beta2", "adam_eps"});
  TrainConfig c;
  c.lr_scale = in.get_double("lr_scale", c.lr_scale);
  c.warmup_steps = in.get_int("warmup_steps", c.warmup_steps);
  c.constant_lr = in.get_double("constant_lr", c.constant_lr);
  c.batch_size = in.get_int("batch_size", c.batch_size);
  c.max_steps = in.get_int("max_steps", c.max_steps);
  c.patience = in.get_int("patience", c.patience);
  c.eval_every = in.get_int("eval_every", c.eval_every);
  c.adam_beta1 = in.get_double("adam_beta1", c.adam_beta1);
  c.adam_beta2 = in.get_double("adam_beta2", c.adam_beta2);
  c.adam_eps = in.get_double("adam_eps", c.adam_eps);
  return c;
}

void ExperimentConfig::validate() const {
  const bool files = train_paths.has_value() || valid_paths.has_value() || test_paths.has_value();
  if (files == toy.has_value()) schema("data", "give either train/valid/test files or toy");
  if (files && !(train_paths && valid_paths && test_paths)) schema("data", "train, valid and test are all required");
  if (toy && (toy->train == 0 || toy->valid == 0 || toy->test == 0)) schema("data.toy", "split sizes must be > 0");
  if (toy) {
    try {
      toy->grammar.validate();
    } catch (const Error& e) {
      schema("data.toy.grammar", e.detail());
    }
  }
  try {
    model.validate();
  } catch (const Error& e) {
    schema("model", e.detail());
  }
  try {
    train.validate();
  } catch (const Error& e) {
    schema("train", e.detail());
  }
  if (plan != "direct" && plan != "steps") schema("curriculum.plan", "expected \"direct\" or \"steps\"");
  if (parent_k == 0) schema("curriculum.parent_k", "must be > 0");
  if (step == 0) schema("curriculum.step", "must be > 0");
  if (merges_file.empty() && parent_k > bpe_merges) schema("curriculum.parent_k", "exceeds bpe.merges");
  if (!(dropout >= 0.0 && dropout <= 1.0)) schema("curriculum.dropout", "must lie in [0, 1]");
  if (compare_dropout && !(dropout > 0.0)) schema("curriculum.dropout", "compare_dropout needs dropout > 0");
  if (eval_beam < 1) schema("curriculum.eval_beam", "must be >= 1");
  if (lexicon_variants < 1) schema("robustness.variants", "must be >= 1");
  if (noise_ps.size() < 2) schema("robustness.ps", "need at least two noise levels");
  bool has_zero = false;
  for (const double p : noise_ps) {
    if (!(p >= 0.0 && p <= 1.0)) schema("robustness.ps", "values must lie in [0, 1]");
    has_zero |= p == 0.0;
  }
  if (!has_zero) schema("robustness.ps", "must include 0");
  if (stages.contrastive && stages.curriculum && items.empty() && !toy) {
    schema("contrastive.items", "required unless data.toy is used");
  }
  if (train_paths) {
    require_file("data.train.src", train_paths->src);
    require_file("data.train.tgt", train_paths->tgt);
    require_file("data.valid.src", valid_paths->src);
    require_file("data.valid.tgt", valid_paths->tgt);
    require_file("data.test.src", test_paths->src);
    require_file("data.test.tgt", test_paths->tgt);
  }
  require_file("bpe.merges_file", merges_file);
  require_file("robustness.lexicon", lexicon);
  require_file("contrastive.items", items);
}

ExperimentConfig config_from_json(const Json& j, const std::string& base_dir) {
  const JsonReader root(j, "");
  root.only({"version", "seed", "out", "data", "bpe", "model", "train", "curriculum", "robustness",
             "contrastive", "stages", "overrides"});
  // "overrides" appears in echoed configs; it is provenance only.
  if (root.get_string("version") != kConfigVersion) {
    schema("version", std::string("expected \"") + kConfigVersion + "\"");
  }
  ExperimentConfig c;
  c.seed = root.get_u64("seed", c.seed);
  c.out_dir = resolve(base_dir, root.get_string("out", ""));

  const JsonReader data = root.child("data");
  data.only({"train", "valid", "test", "toy"});
  if (data.has("train")) c.train_paths = paths_from(data.child("train"), base_dir);
  if (data.has("valid")) c.valid_paths = paths_from(data.child("valid"), base_dir);
  if (data.has("test")) c.test_paths = paths_from(data.child("test"), base_dir);
  if (data.has("toy")) {
    const JsonReader toy = data.child("toy");
    toy.only({"grammar", "train", "valid", "test"});
    ToyDataConfig t;
    if (toy.has("grammar")) {
      try {
        t.grammar = grammar_from_json(toy.child("grammar"));
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kGrammarInvalid) schema("data.toy.grammar", e.detail());
        throw;
      }
    }
    t.train = count(toy, "train", t.train);
    t.valid = count(toy, "valid", t.valid);
    t.test = count(toy, "test", t.test);
    c.toy = t;
  }

  if (root.has("bpe")) {
    const JsonReader bpe = root.child("bpe");
    bpe.only({"merges", "merges_file", "stats_k"});
    c.bpe_merges = count(bpe, "merges", c.bpe_merges);
    c.merges_file = resolve(base_dir, bpe.get_string("merges_file", ""));
    if (bpe.has("stats_k")) c.stats_k = counts(bpe, "stats_k");
  }
  if (root.has("model")) c.model = model_config_from_json(root.child("model"));
  if (root.has("train")) c.train = train_config_from_json(root.child("train"));
  c.train.seed = c.seed;

  if (root.has("curriculum")) {
    const JsonReader cur = root.child("curriculum");
    cur.only({"plan", "parent_k", "step", "dropout", "compare_dropout", "scratch_baseline", "eval_beam"});
    c.plan = cur.get_string("plan", c.plan);
    c.parent_k = count(cur, "parent_k", c.parent_k);
    c.step = count(cur, "step", c.step);
    c.dropout = cur.get_double("dropout", c.dropout);
    c.compare_dropout = cur.get_bool("compare_dropout", c.compare_dropout);
    c.scratch_baseline = cur.get_bool("scratch_baseline", c.scratch_baseline);
    c.eval_beam = cur.get_int("eval_beam", c.eval_beam);
  }
  if (root.has("robustness")) {
    const JsonReader rob = root.child("robustness");
    rob.only({"lexicon", "variants", "ps", "seed"});
    c.lexicon = resolve(base_dir, rob.get_string("lexicon", ""));
    c.lexicon_variants = rob.get_int("variants", c.lexicon_variants);
    if (rob.has("ps")) c.noise_ps = doubles(rob, "ps");
    c.noise_seed = rob.get_u64("seed", c.noise_seed);
  }
  if (root.has("contrastive")) {
    const JsonReader con = root.child("contrastive");
    con.only({"items", "synthetic_items", "seed"});
    c.items = resolve(base_dir, con.get_string("items", ""));
    c.synthetic_items = count(con, "synthetic_items", c.synthetic_items);
    c.items_seed = con.get_u64("seed", c.items_seed);
  }
  if (root.has("stages")) {
    const JsonReader st = root.child("stages");
    st.only({"stats", "curriculum", "robustness", "contrastive"});
    c.stages.stats = st.get_bool("stats", c.stages.stats);
    c.stages.curriculum = st.get_bool("curriculum", c.stages.curriculum);
    c.stages.robustness = st.get_bool("robustness", c.stages.robustness);
    c.stages.contrastive = st.get_bool("contrastive", c.stages.contrastive);
  }
  c.validate();
  return c;
}

void apply_override(Json& doc, Override& ov) {
  if (!doc.is_object()) schema("<root>", "expected object");
  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = ov.field.find('.', start);
    const std::string key = ov.field.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) schema(ov.field, "bad override path");
    if (dot == std::string::npos) {
      ov.previous = node->contains(key) ? (*node)[key] : Json();
      (*node)[key] = ov.value;
      return;
    }
    if (!node->contains(key)) (*node)[key] = Json::object();
    node = &(*node)[key];
    if (!node->is_object()) schema(ov.field.substr(0, dot), "expected object");
    start = dot + 1;
  }
}

ExperimentConfig load_config(const std::string& path, const std::vector<Override>& overrides) {
  Json doc = parse_json(read_text(path), path);
  std::vector<Override> applied = overrides;
  for (auto& ov : applied) apply_override(doc, ov);
  auto base = fs::path(path).parent_path().string();
  ExperimentConfig c = config_from_json(doc, base);
  c.overrides = std::move(applied);
  return c;
}

ModelSettings load_model_settings(const std::string& path, const std::vector<Override>& overrides) {
  ModelSettings s;
  Json doc = path.empty() ? Json::object() : parse_json(read_text(path), path);
  std::vector<Override> applied = overrides;
  for (auto& ov : applied) apply_override(doc, ov);
  const JsonReader root(doc, "");
  root.only({"version", "seed", "out", "data", "bpe", "model", "train", "curriculum", "robustness",
             "contrastive", "stages", "overrides"});
  if (root.has("version") && root.get_string("version") != kConfigVersion) {
    schema("version", std::string("expected \"") + kConfigVersion + "\"");
  }
  s.seed = root.get_u64("seed", s.seed);
  if (root.has("model")) s.model = model_config_from_json(root.child("model"));
  if (root.has("train")) s.train = train_config_from_json(root.child("train"));
  s.train.seed = s.seed;
  try {
    s.model.validate();
  } catch (const Error& e) {
    schema("model", e.detail());
  }
  try {
    s.train.validate();
  } catch (const Error& e) {
    schema("train", e.detail());
  }
  return s;
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["version"] = kConfigVersion;
  j["seed"] = c.seed;
  j["out"] = c.out_dir;
  Json data = Json::object();
  const auto paths = [](const ParallelPaths& p) { return Json{{"src", p.src}, {"tgt", p.tgt}}; };
  if (c.train_paths) data["train"] = paths(*c.train_paths);
  if (c.valid_paths) data["valid"] = paths(*c.valid_paths);
  if (c.test_paths) data["test"] = paths(*c.test_paths);
  if (c.toy) {
    data["toy"] = {{"grammar", to_json(c.toy->grammar)},
                   {"train", c.toy->train},
                   {"valid", c.toy->valid},
                   {"test", c.toy->test}};
  }
  j["data"] = data;
  j["bpe"] = {{"merges", c.bpe_merges}, {"merges_file", c.merges_file}, {"stats_k", c.stats_k}};
  j["model"] = to_json(c.model);
  j["train"] = to_json(c.train);
  j["curriculum"] = {{"plan", c.plan},
                     {"parent_k", c.parent_k},
                     {"step", c.step},
                     {"dropout", c.dropout},
                     {"compare_dropout", c.compare_dropout},
                     {"scratch_baseline", c.scratch_baseline},
                     {"eval_beam", c.eval_beam}};
  j["robustness"] = {{"lexicon", c.lexicon},
                     {"variants", c.lexicon_variants},
                     {"ps", c.noise_ps},
                     {"seed", c.noise_seed}};
  j["contrastive"] = {{"items", c.items}, {"synthetic_items", c.synthetic_items}, {"seed", c.items_seed}};
  j["stages"] = {{"stats", c.stages.stats},
                 {"curriculum", c.stages.curriculum},
                 {"robustness", c.stages.robustness},
                 {"contrastive", c.stages.contrastive}};
  Json ovs = Json::array();
  for (const auto& o : c.overrides) {
    ovs.push_back({{"field", o.field}, {"value", o.value}, {"previous", o.previous}, {"source", o.source}});
  }
  j["overrides"] = ovs;
  return j;
}

}  // namespace charcurve
