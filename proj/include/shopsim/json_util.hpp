#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "json.hpp"
#include "shopsim/error.hpp"

namespace shopsim {

using json = nlohmann::json;

// Canonical form: object keys sorted (nlohmann::json stores objects in a
// std::map), no insignificant whitespace, shortest round-trip doubles.
inline std::string canonical(const json& j) {
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::FileNotFound, path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json(std::string_view text, Errc on_error) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(on_error, e.what());
  }
}

namespace detail {

// Typed field accessors used by every from_json routine. A missing key or a
// value of the wrong type raises `code` with the offending key in the message.
inline const json& require(const json& obj, const char* key, Errc code) {
  if (!obj.is_object()) throw Error(code, std::string("expected object holding '") + key + "'");
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(code, std::string("missing field '") + key + "'");
  return *it;
}

inline double require_number(const json& obj, const char* key, Errc code) {
  const json& v = require(obj, key, code);
  if (!v.is_number()) throw Error(code, std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

inline bool require_bool(const json& obj, const char* key, Errc code) {
  const json& v = require(obj, key, code);
  if (!v.is_boolean()) throw Error(code, std::string("field '") + key + "' must be a boolean");
  return v.get<bool>();
}

inline std::string require_string(const json& obj, const char* key, Errc code) {
  const json& v = require(obj, key, code);
  if (!v.is_string()) throw Error(code, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

inline std::uint64_t require_u64(const json& obj, const char* key, Errc code) {
  const json& v = require(obj, key, code);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw Error(code, std::string("field '") + key + "' must be a non-negative integer");
}

}  // namespace detail
}  // namespace shopsim
