#include "charcurve/json_io.hpp"

#include <algorithm>
#include <limits>

#include "charcurve/error.hpp"

namespace charcurve {
namespace {

[[noreturn]] void schema(const std::string& field, const std::string& msg) {
  throw Error(ErrorCode::kSchemaError, field + ": " + msg);
}

}  // namespace

std::string JsonReader::field(std::string_view key) const {
  return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
}

const Json& JsonReader::at(std::string_view key) const {
  if (!node_.is_object()) schema(path_.empty() ? "<root>" : path_, "expected object");
  const auto it = node_.find(std::string(key));
  if (it == node_.end()) schema(field(key), "missing field");
  return *it;
}

JsonReader JsonReader::child(std::string_view key) const {
  const Json& v = at(key);
  if (!v.is_object()) schema(field(key), "expected object");
  return JsonReader(v, field(key));
}

int JsonReader::get_int(std::string_view key) const {
  const Json& v = at(key);
  if (!v.is_number_integer()) schema(field(key), "expected integer");
  const auto x = v.get<std::int64_t>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    schema(field(key), "integer out of range");
  }
  return static_cast<int>(x);
}

int JsonReader::get_int(std::string_view key, int fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::uint64_t JsonReader::get_u64(std::string_view key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const Json& v = at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
  schema(field(key), "expected non-negative integer");
}

double JsonReader::get_double(std::string_view key) const {
  const Json& v = at(key);
  if (!v.is_number()) schema(field(key), "expected number");
  return v.get<double>();
}

double JsonReader::get_double(std::string_view key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

bool JsonReader::get_bool(std::string_view key, bool fallback) const {
  if (!has(key)) return fallback;
  const Json& v = at(key);
  if (!v.is_boolean()) schema(field(key), "expected boolean");
  return v.get<bool>();
}

std::string JsonReader::get_string(std::string_view key) const {
  const Json& v = at(key);
  if (!v.is_string()) schema(field(key), "expected string");
  return v.get<std::string>();
}

std::string JsonReader::get_string(std::string_view key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

void JsonReader::only(std::initializer_list<std::string_view> keys) const {
  if (!node_.is_object()) schema(path_.empty() ? "<root>" : path_, "expected object");
  for (const auto& item : node_.items()) {
    if (std::find(keys.begin(), keys.end(), item.key()) == keys.end()) {
      schema(field(item.key()), "unknown field");
    }
  }
}

Json parse_json(std::string_view text, const std::string& what) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParse, what + ": " + e.what());
  }
}

std::string precision_name(Precision p) { return p == Precision::kFloat64 ? "f64" : "f32"; }

Precision parse_precision(const std::string& name, const std::string& field) {
  if (name == "f32") return Precision::kFloat32;
  if (name == "f64") return Precision::kFloat64;
  schema(field, "expected \"f32\" or \"f64\"");
}

Json to_json(const ModelConfig& cfg) {
  Json j;
  j["layers_enc"] = cfg.layers_enc;
  j["layers_dec"] = cfg.layers_dec;
  j["d_model"] = cfg.d_model;
  j["heads"] = cfg.heads;
  j["d_ff"] = cfg.d_ff;
  j["dropout"] = cfg.dropout;
  j["label_smoothing"] = cfg.label_smoothing;
  j["max_seq_len"] = cfg.max_seq_len;
  j["precision"] = precision_name(cfg.precision);
  return j;
}

ModelConfig model_config_from_json(const JsonReader& in) {
  in.only({"layers_enc", "layers_dec", "d_model", "heads", "d_ff", "dropout", "label_smoothing",
           "max_seq_len", "precision"});
  ModelConfig cfg;
  cfg.layers_enc = in.get_int("layers_enc", cfg.layers_enc);
  cfg.layers_dec = in.get_int("layers_dec", cfg.layers_dec);
  cfg.d_model = in.get_int("d_model", cfg.d_model);
  cfg.heads = in.get_int("heads", cfg.heads);
  cfg.d_ff = in.get_int("d_ff", cfg.d_ff);
  cfg.dropout = in.get_double("dropout", cfg.dropout);
  cfg.label_smoothing = in.get_double("label_smoothing", cfg.label_smoothing);
  cfg.max_seq_len = in.get_int("max_seq_len", cfg.max_seq_len);
  if (in.has("precision")) {
    cfg.precision = parse_precision(in.get_string("precision"), in.field("precision"));
  }
  return cfg;
}

}  // namespace charcurve
