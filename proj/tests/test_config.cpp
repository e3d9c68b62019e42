#include <filesystem>

#include "charcurve/config.hpp"
#include "charcurve/corpus.hpp"
#include "charcurve/error.hpp"
#include "charcurve/pipeline.hpp"
#include "doctest.h"

using namespace charcurve;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("charcurve_test_config_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::kInternal;
}

std::string what_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

const char* kMinimal = R"({"version": "charcurve-config v1", "data": {"toy": {}}})";

// Small enough to run the full pipeline in a few seconds.
const char* kTiny = R"({
  "version": "charcurve-config v1",
  "seed": 4,
  "data": {"toy": {"train": 120, "valid": 20, "test": 20}},
  "bpe": {"merges": 50},
  "model": {"d_model": 16, "heads": 2, "d_ff": 32},
  "train": {"max_steps": 20, "eval_every": 10, "batch_size": 16, "constant_lr": 0.001},
  "curriculum": {"parent_k": 30, "eval_beam": 1},
  "robustness": {"ps": [0, 0.3]},
  "contrastive": {"synthetic_items": 30}
})";

}  // namespace

TEST_CASE("minimal config fills defaults") {
  const auto c = config_from_json(Json::parse(kMinimal), ".");
  CHECK(c.seed == 1);
  CHECK(c.toy.has_value());
  CHECK(c.toy->train == 5000);
  CHECK(c.bpe_merges == 200);
  CHECK(c.parent_k == 64);
  CHECK(c.model.d_model == ModelConfig{}.d_model);
  CHECK(c.train.max_steps == TrainConfig{}.max_steps);
  CHECK(c.noise_ps == std::vector<double>{0.0, 0.1, 0.2, 0.3});

  // The echo reloads to the same effective config.
  const auto echoed = to_json(c);
  CHECK(to_json(config_from_json(echoed, ".")) == echoed);
}

TEST_CASE("schema errors name the field") {
  auto j = Json::parse(kMinimal);
  j["curriculum"] = {{"parent_kk", 3}};
  CHECK(code_of([&] { config_from_json(j, "."); }) == ErrorCode::kSchemaError);
  CHECK(what_of([&] { config_from_json(j, "."); }).find("curriculum.parent_kk") != std::string::npos);

  j = Json::parse(kMinimal);
  j["colour"] = 1;
  CHECK(what_of([&] { config_from_json(j, "."); }).find("colour") != std::string::npos);

  j = Json::parse(kMinimal);
  j["model"] = {{"d_model", "wide"}};
  CHECK(what_of([&] { config_from_json(j, "."); }).find("model.d_model") != std::string::npos);

  j = Json::parse(kMinimal);
  j["version"] = "charcurve-config v0";
  CHECK(code_of([&] { config_from_json(j, "."); }) == ErrorCode::kSchemaError);

  j = Json::parse(kMinimal);
  j["data"] = Json::object();
  CHECK(code_of([&] { config_from_json(j, "."); }) == ErrorCode::kSchemaError);
}

TEST_CASE("referenced files must exist") {
  auto j = Json::parse(kMinimal);
  j["data"] = {{"train", {{"src", "nope.src"}, {"tgt", "nope.tgt"}}},
               {"valid", {{"src", "nope.src"}, {"tgt", "nope.tgt"}}},
               {"test", {{"src", "nope.src"}, {"tgt", "nope.tgt"}}}};
  j["contrastive"] = {{"items", "nope.tsv"}};
  CHECK(code_of([&] { config_from_json(j, scratch_dir("missing").string()); }) == ErrorCode::kMissingFile);
  CHECK(code_of([&] { load_config("/nonexistent/config.json"); }) == ErrorCode::kMissingFile);
}

TEST_CASE("flag override records provenance") {
  const auto dir = scratch_dir("override");
  auto j = Json::parse(kMinimal);
  j["bpe"] = {{"merges", 2000}};
  j["curriculum"] = {{"parent_k", 1000}};
  write_text((dir / "c.json").string(), j.dump());
  const auto c = load_config((dir / "c.json").string(), {{"curriculum.parent_k", 500, {}, "--k"}});
  CHECK(c.parent_k == 500);
  REQUIRE(c.overrides.size() == 1);
  CHECK(c.overrides[0].previous == 1000);
  CHECK(c.overrides[0].source == "--k");
  const auto echo = to_json(c);
  CHECK(echo["curriculum"]["parent_k"] == 500);
  CHECK(echo["overrides"][0]["previous"] == 1000);
  CHECK(echo["overrides"][0]["value"] == 500);

  // An override into an unknown field is still a schema error.
  CHECK(code_of([&] { load_config((dir / "c.json").string(), {{"curriculum.kk", 5, {}, "--set"}}); }) ==
        ErrorCode::kSchemaError);
}

TEST_CASE("relative paths resolve against the config directory") {
  const auto dir = scratch_dir("relative");
  fs::create_directories(dir / "d");
  for (const char* f : {"a.src", "a.tgt"}) write_text((dir / "d" / f).string(), "x\n");
  auto j = Json::parse(kMinimal);
  j["data"] = {{"train", {{"src", "d/a.src"}, {"tgt", "d/a.tgt"}}},
               {"valid", {{"src", "d/a.src"}, {"tgt", "d/a.tgt"}}},
               {"test", {{"src", "d/a.src"}, {"tgt", "d/a.tgt"}}}};
  j["contrastive"] = {{"items", "d/a.src"}};
  write_text((dir / "c.json").string(), j.dump());
  const auto c = load_config((dir / "c.json").string());
  CHECK(fs::equivalent(c.train_paths->src, dir / "d" / "a.src"));
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("pipeline: all evaluation stages off leaves only segmentation artifacts") {
  const auto dir = scratch_dir("seg_only");
  auto j = Json::parse(kTiny);
  j["out"] = (dir / "run").string();
  j["stages"] = {{"stats", false}, {"curriculum", false}, {"robustness", false}, {"contrastive", false}};
  const auto res = run_pipeline(config_from_json(j, dir.string()));
  for (const auto& a : res.artifacts) {
    const bool seg = a.rfind("data/", 0) == 0 || a.rfind("pretok/", 0) == 0 || a.rfind("segmented/", 0) == 0 ||
                     a == "merges.txt" || a == "config.effective.json" || a == "manifest.json";
    CHECK_MESSAGE(seg, a);
  }
  CHECK(fs::exists(dir / "run" / "manifest.json"));
  CHECK(!fs::exists(dir / "run" / "curriculum"));
}

TEST_CASE("pipeline: merges hash follows the corpus, reports are reproducible") {
  const auto dir = scratch_dir("full");
  auto j = Json::parse(kTiny);
  j["out"] = (dir / "a").string();
  const auto ra = run_pipeline(config_from_json(j, dir.string()));
  j["out"] = (dir / "b").string();
  run_pipeline(config_from_json(j, dir.string()));
  j["out"] = (dir / "c").string();
  j["seed"] = 5;
  j["stages"] = {{"stats", false}, {"curriculum", false}, {"robustness", false}, {"contrastive", false}};
  run_pipeline(config_from_json(j, dir.string()));

  const auto merges_hash = [&](const char* run) {
    const auto m = Json::parse(read_text((dir / run / "manifest.json").string()));
    for (const auto& o : m["outputs"])
      if (o["path"] == "merges.txt") return o["fnv1a64"].get<std::string>();
    return std::string();
  };
  CHECK(merges_hash("a") == merges_hash("b"));
  CHECK(merges_hash("a") != merges_hash("c"));
  CHECK(merges_hash("a") == hex64(fnv1a64(read_text((dir / "a" / "merges.txt").string()))));

  int csvs = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
    if (e.path().extension() != ".csv" || e.path().filename().string().find("timing") != std::string::npos) continue;
    const auto rel = fs::relative(e.path(), dir / "a");
    CHECK_MESSAGE(read_text(e.path().string()) == read_text((dir / "b" / rel).string()), rel.string());
    ++csvs;
  }
  CHECK(csvs >= 6);
  for (const char* f : {"stats.csv", "curriculum/report.csv", "robustness/sweep.csv", "robustness/fit.csv",
                        "robustness/sweep.svg", "contrastive/report_final.csv", "contrastive/report_parent.csv"}) {
    CHECK_MESSAGE(fs::exists(dir / "a" / f), f);
  }
  CHECK(ra.contrastive.size() == 2);
  CHECK(ra.sweeps.size() == 2);
}

TEST_CASE("pipeline errors carry the stage tag") {
  const auto dir = scratch_dir("stage_error");
  auto j = Json::parse(kTiny);
  j["out"] = (dir / "run").string();
  j["model"]["max_seq_len"] = 4;
  const auto msg = what_of([&] { run_pipeline(config_from_json(j, dir.string())); });
  CHECK(msg.find("[curriculum]") != std::string::npos);
  // Earlier artifacts stay on disk.
  CHECK(fs::exists(dir / "run" / "merges.txt"));
}
