#include <fstream>
#include <sstream>

#include "charcurve/error.hpp"
#include "charcurve/json_io.hpp"
#include "charcurve/model.hpp"

namespace charcurve {
namespace {

constexpr const char* kFormat = "charcurve-ckpt v1";

}  // namespace

std::string model_to_json(const ToyModel& model) {
  Json j;
  j["format"] = kFormat;
  j["config"] = to_json(model.config);
  j["src_vocab"] = model.src_vocab.rows();
  j["tgt_vocab"] = model.tgt_vocab.rows();
  Json params = Json::array();
  for (const auto& p : model.params) {
    Json t;
    t["name"] = p.name;
    t["shape"] = {p.rows, p.cols};
    t["values"] = p.value;
    params.push_back(std::move(t));
  }
  j["params"] = std::move(params);
  return j.dump();
}

ToyModel model_from_json(std::string_view text) {
  const Json j = parse_json(text, "checkpoint");
  const JsonReader root(j, "");
  root.only({"format", "config", "src_vocab", "tgt_vocab", "params"});
  if (root.get_string("format") != kFormat) {
    throw Error(ErrorCode::kSchemaError, "format: expected \"" + std::string(kFormat) + "\"");
  }
  ModelConfig cfg = model_config_from_json(root.child("config"));
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kSchemaError, std::string("config: ") + e.what());
  }
  const auto rows = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_array()) {
      throw Error(ErrorCode::kSchemaError, std::string(key) + ": expected array of strings");
    }
    try {
      return Vocab(j[key].get<std::vector<std::string>>());
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::kSchemaError, std::string(key) + ": expected array of strings");
    }
  };
  ToyModel m{cfg, rows("src_vocab"), rows("tgt_vocab"), {}};
  // Shapes and names must match a freshly initialized model of the same shape.
  const ToyModel shape = init_model(cfg, m.src_vocab, m.tgt_vocab, 0);
  if (!j.contains("params") || !j["params"].is_array() || j["params"].size() != shape.params.size()) {
    throw Error(ErrorCode::kSchemaError, "params: expected " + std::to_string(shape.params.size()) +
                                             " tensors");
  }
  for (std::size_t i = 0; i < shape.params.size(); ++i) {
    const std::string field = "params[" + std::to_string(i) + "]";
    const Json& t = j["params"][i];
    const auto& want = shape.params[i];
    try {
      if (t.at("name").get<std::string>() != want.name) {
        throw Error(ErrorCode::kSchemaError, field + ".name: expected " + want.name);
      }
      const auto dims = t.at("shape").get<std::vector<std::size_t>>();
      if (dims.size() != 2 || dims[0] != want.rows || dims[1] != want.cols) {
        throw Error(ErrorCode::kSchemaError, field + ".shape: mismatch for " + want.name);
      }
      auto values = t.at("values").get<std::vector<double>>();
      if (values.size() != want.size()) {
        throw Error(ErrorCode::kSchemaError, field + ".values: wrong length");
      }
      m.params.push_back(ParamTensor{want.name, want.rows, want.cols, std::move(values),
                                     std::vector<double>(want.size(), 0.0)});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kSchemaError, field + ": " + e.what());
    }
  }
  return m;
}

void save_checkpoint(const std::string& path, const ToyModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << model_to_json(model) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path);
}

ToyModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace charcurve
