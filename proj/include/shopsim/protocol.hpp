#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "shopsim/json_util.hpp"

namespace shopsim::proto {

// Newline-delimited JSON frames:
//   {"seq":<u64>,"ts_ms":<u64>,"type":"<TYPE>","v":1, ...body}\n
// Encoding is canonical (sorted keys, no whitespace). A frame including its
// terminator is at most 64 KiB.
inline constexpr int kVersion = 1;
inline constexpr std::size_t kMaxFrameBytes = 64 * 1024;

enum class MsgType : std::uint8_t {
  HELLO,
  WELCOME,
  SUBSCRIBE,
  STATE,
  COMMAND,
  ACK,
  NACK,
  EVENT,
  SNAPSHOT_REQ,
  SNAPSHOT_RES,
  PING,
  PONG,
};

inline constexpr std::array<MsgType, 12> kAllTypes = {
    MsgType::HELLO, MsgType::WELCOME, MsgType::SUBSCRIBE,    MsgType::STATE,        MsgType::COMMAND, MsgType::ACK,
    MsgType::NACK,  MsgType::EVENT,   MsgType::SNAPSHOT_REQ, MsgType::SNAPSHOT_RES, MsgType::PING,    MsgType::PONG,
};

constexpr std::string_view to_string(MsgType t) {
  switch (t) {
    case MsgType::HELLO: return "HELLO";
    case MsgType::WELCOME: return "WELCOME";
    case MsgType::SUBSCRIBE: return "SUBSCRIBE";
    case MsgType::STATE: return "STATE";
    case MsgType::COMMAND: return "COMMAND";
    case MsgType::ACK: return "ACK";
    case MsgType::NACK: return "NACK";
    case MsgType::EVENT: return "EVENT";
    case MsgType::SNAPSHOT_REQ: return "SNAPSHOT_REQ";
    case MsgType::SNAPSHOT_RES: return "SNAPSHOT_RES";
    case MsgType::PING: return "PING";
    case MsgType::PONG: return "PONG";
  }
  return "?";
}

inline std::optional<MsgType> type_from_string(std::string_view s) {
  for (MsgType t : kAllTypes)
    if (to_string(t) == s) return t;
  return std::nullopt;
}

// Decoded frame. `body` holds every member except the four header keys.
struct Message {
  MsgType type = MsgType::PING;
  std::uint64_t seq = 0;
  std::uint64_t ts_ms = 0;
  json body = json::object();

  friend bool operator==(const Message&, const Message&) = default;
};

enum class DecodeErrc : std::uint8_t { MalformedJson, UnknownType, MissingField, FrameTooLong, BadVersion };

constexpr std::string_view to_string(DecodeErrc e) {
  switch (e) {
    case DecodeErrc::MalformedJson: return "MalformedJson";
    case DecodeErrc::UnknownType: return "UnknownType";
    case DecodeErrc::MissingField: return "MissingField";
    case DecodeErrc::FrameTooLong: return "FrameTooLong";
    case DecodeErrc::BadVersion: return "BadVersion";
  }
  return "?";
}

struct DecodeError {
  DecodeErrc code = DecodeErrc::MalformedJson;
  std::string reason;
  std::optional<std::uint64_t> seq;  // when the header could be read
  friend bool operator==(const DecodeError&, const DecodeError&) = default;
};

using DecodeResult = std::variant<Message, DecodeError>;

namespace detail {

enum class FieldType { String, U64, Object, StringArray };

struct FieldSpec {
  const char* name;
  FieldType type;
  bool required;
};

inline std::span<const FieldSpec> body_schema(MsgType t) {
  static constexpr FieldSpec hello[] = {{"token", FieldType::String, true}, {"role", FieldType::String, true}};
  static constexpr FieldSpec welcome[] = {{"session_id", FieldType::String, true}, {"role", FieldType::String, true}};
  static constexpr FieldSpec subscribe[] = {{"patterns", FieldType::StringArray, true}};
  static constexpr FieldSpec state[] = {{"device_id", FieldType::String, true},
                                        {"kind", FieldType::String, true},
                                        {"state", FieldType::Object, true}};
  static constexpr FieldSpec command[] = {{"device_id", FieldType::String, true},
                                          {"action", FieldType::String, true},
                                          {"arg", FieldType::String, false}};
  static constexpr FieldSpec ack[] = {{"ref_seq", FieldType::U64, true}};
  static constexpr FieldSpec nack[] = {{"ref_seq", FieldType::U64, true},
                                       {"code", FieldType::String, true},
                                       {"reason", FieldType::String, true}};
  static constexpr FieldSpec event[] = {{"name", FieldType::String, true},
                                        {"payload", FieldType::Object, true},
                                        {"device_id", FieldType::String, false}};
  static constexpr FieldSpec snapshot_res[] = {{"snapshot", FieldType::Object, true}};
  switch (t) {
    case MsgType::HELLO: return hello;
    case MsgType::WELCOME: return welcome;
    case MsgType::SUBSCRIBE: return subscribe;
    case MsgType::STATE: return state;
    case MsgType::COMMAND: return command;
    case MsgType::ACK: return ack;
    case MsgType::NACK: return nack;
    case MsgType::EVENT: return event;
    case MsgType::SNAPSHOT_RES: return snapshot_res;
    default: return {};
  }
}

inline bool is_u64(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

inline bool matches(const json& v, FieldType t) {
  switch (t) {
    case FieldType::String: return v.is_string();
    case FieldType::U64: return is_u64(v);
    case FieldType::Object: return v.is_object();
    case FieldType::StringArray:
      if (!v.is_array()) return false;
      for (const auto& e : v)
        if (!e.is_string()) return false;
      return true;
  }
  return false;
}

}  // namespace detail

// Total: every input yields a Message or a DecodeError.
inline DecodeResult decode_frame(std::string_view bytes) noexcept {
  try {
    if (bytes.size() > kMaxFrameBytes) return DecodeError{DecodeErrc::FrameTooLong, "frame exceeds 64 KiB", {}};
    if (!bytes.empty() && bytes.back() == '\n') bytes.remove_suffix(1);
    if (bytes.find('\n') != std::string_view::npos)
      return DecodeError{DecodeErrc::MalformedJson, "newline inside frame", {}};

    json j = json::parse(bytes.begin(), bytes.end(), nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) return DecodeError{DecodeErrc::MalformedJson, "invalid JSON", {}};
    if (!j.is_object()) return DecodeError{DecodeErrc::MalformedJson, "frame must be a JSON object", {}};

    std::optional<std::uint64_t> seq;
    if (auto it = j.find("seq"); it != j.end() && detail::is_u64(*it)) seq = it->get<std::uint64_t>();

    auto v = j.find("v");
    if (v == j.end()) return DecodeError{DecodeErrc::MissingField, "missing 'v'", seq};
    if (!v->is_number_integer() || v->get<std::int64_t>() != kVersion)
      return DecodeError{DecodeErrc::BadVersion, "unsupported protocol version", seq};

    auto type = j.find("type");
    if (type == j.end() || !type->is_string()) return DecodeError{DecodeErrc::MissingField, "missing 'type'", seq};
    auto t = type_from_string(type->get<std::string>());
    if (!t) return DecodeError{DecodeErrc::UnknownType, "unknown type '" + type->get<std::string>() + "'", seq};

    if (!seq) return DecodeError{DecodeErrc::MissingField, "missing or invalid 'seq'", seq};
    auto ts = j.find("ts_ms");
    if (ts == j.end() || !detail::is_u64(*ts))
      return DecodeError{DecodeErrc::MissingField, "missing or invalid 'ts_ms'", seq};

    Message m;
    m.type = *t;
    m.seq = *seq;
    m.ts_ms = ts->get<std::uint64_t>();
    j.erase("v");
    j.erase("type");
    j.erase("seq");
    j.erase("ts_ms");
    for (const auto& f : detail::body_schema(*t)) {
      auto it = j.find(f.name);
      if (it == j.end()) {
        if (f.required) return DecodeError{DecodeErrc::MissingField, std::string("missing '") + f.name + "'", seq};
        continue;
      }
      if (!detail::matches(*it, f.type))
        return DecodeError{DecodeErrc::MissingField, std::string("'") + f.name + "' has the wrong type", seq};
    }
    m.body = std::move(j);
    return m;
  } catch (const std::exception& e) {
    return DecodeError{DecodeErrc::MalformedJson, e.what(), {}};
  }
}

inline std::string encode_frame(const Message& m) {
  json j = m.body.is_object() ? m.body : json::object();
  j["v"] = kVersion;
  j["type"] = std::string(to_string(m.type));
  j["seq"] = m.seq;
  j["ts_ms"] = m.ts_ms;
  std::string out = canonical(j);
  out += '\n';
  return out;
}

inline Message make(MsgType type, std::uint64_t seq, std::uint64_t ts_ms, json body = json::object()) {
  return Message{type, seq, ts_ms, std::move(body)};
}

}  // namespace shopsim::proto
