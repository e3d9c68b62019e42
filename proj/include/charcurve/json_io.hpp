#pragma once

#include <string>
#include <string_view>

#include "charcurve/model.hpp"
#include "json.hpp"

namespace charcurve {

using Json = nlohmann::ordered_json;

// Field access with kSchemaError messages that name the full path
// ("model.d_model: expected integer").
class JsonReader {
 public:
  JsonReader(const Json& node, std::string path) : node_(node), path_(std::move(path)) {}

  bool has(std::string_view key) const { return node_.contains(std::string(key)); }
  JsonReader child(std::string_view key) const;
  int get_int(std::string_view key) const;
  int get_int(std::string_view key, int fallback) const;
  std::uint64_t get_u64(std::string_view key, std::uint64_t fallback) const;
  double get_double(std::string_view key) const;
  double get_double(std::string_view key, double fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::string get_string(std::string_view key) const;
  std::string get_string(std::string_view key, const std::string& fallback) const;
  // Rejects keys outside the allowed list.
  void only(std::initializer_list<std::string_view> keys) const;

  const Json& node() const { return node_; }
  const std::string& path() const { return path_; }
  std::string field(std::string_view key) const;

 private:
  const Json& at(std::string_view key) const;

  const Json& node_;
  std::string path_;
};

Json parse_json(std::string_view text, const std::string& what);

Json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const JsonReader& in);

std::string precision_name(Precision p);
Precision parse_precision(const std::string& name, const std::string& field);

}  // namespace charcurve
