#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shopsim/protocol.hpp"
#include "shopsim/runtime.hpp"

namespace shopsim {

enum class Role : std::uint8_t { Operator, Viewer };

constexpr std::string_view to_string(Role r) { return r == Role::Operator ? "Operator" : "Viewer"; }

inline std::optional<Role> role_from_string(std::string_view s) {
  if (s == "Operator") return Role::Operator;
  if (s == "Viewer") return Role::Viewer;
  return std::nullopt;
}

struct TokenEntry {
  std::string token;
  Role role = Role::Viewer;
};

// {"tokens":[{"token":"...","role":"Operator"}, ...]}
inline std::vector<TokenEntry> tokens_from_json(const json& j) {
  constexpr Errc code = Errc::ParseError;
  const json& list = detail::require(j, "tokens", code);
  if (!list.is_array()) throw Error(code, "'tokens' must be an array");
  std::vector<TokenEntry> out;
  for (const json& e : list) {
    TokenEntry t;
    t.token = detail::require_string(e, "token", code);
    if (t.token.empty()) throw Error(code, "empty token");
    auto role = role_from_string(detail::require_string(e, "role", code));
    if (!role) throw Error(code, "role must be Operator or Viewer");
    t.role = *role;
    out.push_back(std::move(t));
  }
  return out;
}

inline std::vector<TokenEntry> load_tokens(const std::string& path) {
  return tokens_from_json(parse_json(read_file(path), Errc::ParseError));
}

// Shell-style glob over device ids: `*` any run, `?` one character.
inline bool glob_match(std::string_view pattern, std::string_view text) {
  std::size_t p = 0, t = 0, star = std::string_view::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == text[t])) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

struct Session {
  std::string id;
  bool authenticated = false;
  Role role = Role::Viewer;
  std::string token;
  std::vector<std::string> subscriptions;
  std::optional<std::uint64_t> last_seq;  // highest seq received
  std::uint64_t out_seq = 0;              // next seq to send
  std::int64_t last_inbound_ms = 0;
  std::optional<std::int64_t> ping_sent_ms;

  bool subscribed(std::string_view device_id) const {
    for (const auto& p : subscriptions)
      if (glob_match(p, device_id)) return true;
    return false;
  }
};

struct GatewayConfig {
  std::vector<TokenEntry> tokens;
  std::int64_t idle_ping_ms = 30'000;
  std::int64_t pong_timeout_ms = 10'000;
};

// One frame addressed to one session. `close` asks the transport to drop the
// connection after sending (msg may be empty for a bare close).
struct Outbound {
  std::string session_id;
  std::optional<proto::Message> msg;
  bool close = false;
};

// Frame router in front of the runtime's injection queue. Holds no
// simulation logic: commands are checked against a projection of the world
// (current state plus accepted-but-unapplied commands) and then queued.
// Not thread-safe; the transport drives it from one thread.
class Gateway {
 public:
  Gateway(GatewayConfig config, const World& world, InjectionQueue& queue)
      : config_(std::move(config)), world_(&world), queue_(&queue), projected_(world.devices) {}

  std::string open_session(std::int64_t now_ms) {
    Session s;
    s.id = "s" + std::to_string(++next_session_);
    s.last_inbound_ms = now_ms;
    sessions_[s.id] = s;
    return s.id;
  }

  void close_session(const std::string& sid) { sessions_.erase(sid); }

  const Session* session(const std::string& sid) const {
    auto it = sessions_.find(sid);
    return it == sessions_.end() ? nullptr : &it->second;
  }

  std::size_t session_count() const { return sessions_.size(); }

  // Decodes one raw frame and dispatches it.
  std::vector<Outbound> on_frame(const std::string& sid, std::string_view bytes, std::int64_t now_ms) {
    Session* s = find(sid);
    if (!s) return {};
    s->last_inbound_ms = now_ms;
    auto decoded = proto::decode_frame(bytes);
    if (auto* err = std::get_if<proto::DecodeError>(&decoded)) {
      std::vector<Outbound> out;
      nack(out, *s, err->seq.value_or(0), std::string(proto::to_string(err->code)), err->reason);
      return out;
    }
    return handle_message(sid, std::get<proto::Message>(decoded), now_ms);
  }

  std::vector<Outbound> handle_message(const std::string& sid, const proto::Message& m, std::int64_t now_ms) {
    using proto::MsgType;
    std::vector<Outbound> out;
    Session* s = find(sid);
    if (!s) return out;
    s->last_inbound_ms = now_ms;

    if (s->last_seq && m.seq <= *s->last_seq) {
      nack(out, *s, m.seq, "ProtocolError", "seq must strictly increase");
      return out;
    }
    s->last_seq = m.seq;

    if (!s->authenticated && m.type != MsgType::HELLO) {
      nack(out, *s, m.seq, "NotAuthenticated", "send HELLO first");
      return out;
    }

    switch (m.type) {
      case MsgType::HELLO: register_client(*s, m, out); break;
      case MsgType::SUBSCRIBE:
        for (const auto& p : m.body.at("patterns")) s->subscriptions.push_back(p.get<std::string>());
        ack(out, *s, m.seq);
        break;
      case MsgType::COMMAND: command(*s, m, out); break;
      case MsgType::EVENT: event(*s, m, out); break;
      case MsgType::SNAPSHOT_REQ: send(out, *s, MsgType::SNAPSHOT_RES, json{{"snapshot", snapshot_json(*world_)}}); break;
      case MsgType::PING: send(out, *s, MsgType::PONG); break;
      case MsgType::PONG: s->ping_sent_ms.reset(); break;
      default: nack(out, *s, m.seq, "ProtocolError", "clients may not send " + std::string(proto::to_string(m.type)));
    }
    return out;
  }

  // Called after each tick with that tick's log: broadcasts STATE for every
  // changed device and EVENT for every fired rule to matching subscribers.
  std::vector<Outbound> on_tick(const std::vector<LogEntry>& entries) {
    using proto::MsgType;
    projected_ = world_->devices;
    std::vector<Outbound> out;
    for (const LogEntry& e : entries) {
      if (e.kind == LogKind::StateChanged) {
        const std::string id = e.payload.at("device_id").get<std::string>();
        for (auto& [sid, s] : sessions_)
          if (s.authenticated && s.subscribed(id))
            send(out, s, MsgType::STATE,
                 json{{"device_id", id}, {"kind", e.payload.at("kind")}, {"state", e.payload.at("state")}});
      } else if (e.kind == LogKind::RuleFired) {
        json body{{"name", e.payload.at("rule")},
                  {"payload", json{{"layer", e.payload.at("layer")}, {"commands", e.payload.at("commands")}}}};
        for (auto& [sid, s] : sessions_)
          if (s.authenticated && !s.subscriptions.empty()) send(out, s, MsgType::EVENT, body);
      }
    }
    return out;
  }

  // PING after `idle_ping_ms` of silence; close if no PONG within
  // `pong_timeout_ms` of the PING.
  std::vector<Outbound> poll_heartbeat(std::int64_t now_ms) {
    std::vector<Outbound> out;
    std::vector<std::string> dead;
    for (auto& [sid, s] : sessions_) {
      if (s.ping_sent_ms) {
        if (now_ms - *s.ping_sent_ms > config_.pong_timeout_ms) dead.push_back(sid);
      } else if (now_ms - s.last_inbound_ms > config_.idle_ping_ms) {
        s.ping_sent_ms = now_ms;
        send(out, s, proto::MsgType::PING);
      }
    }
    for (const auto& sid : dead) {
      out.push_back(Outbound{sid, std::nullopt, true});
      sessions_.erase(sid);
    }
    return out;
  }

 private:
  Session* find(const std::string& sid) {
    auto it = sessions_.find(sid);
    return it == sessions_.end() ? nullptr : &it->second;
  }

  std::uint64_t now_ts() const {
    const double ms = std::round(world_->env.sim_time_s * 1000.0);
    return ms > 0 ? static_cast<std::uint64_t>(ms) : 0;
  }

  void send(std::vector<Outbound>& out, Session& s, proto::MsgType type, json body = json::object(),
            bool close = false) {
    out.push_back(Outbound{s.id, proto::make(type, s.out_seq++, now_ts(), std::move(body)), close});
  }

  void ack(std::vector<Outbound>& out, Session& s, std::uint64_t ref) {
    send(out, s, proto::MsgType::ACK, json{{"ref_seq", ref}});
  }

  void nack(std::vector<Outbound>& out, Session& s, std::uint64_t ref, std::string code, std::string reason,
            bool close = false) {
    send(out, s, proto::MsgType::NACK, json{{"ref_seq", ref}, {"code", std::move(code)}, {"reason", std::move(reason)}},
         close);
  }

  void register_client(Session& s, const proto::Message& m, std::vector<Outbound>& out) {
    if (s.authenticated) {
      nack(out, s, m.seq, "ProtocolError", "already authenticated");
      return;
    }
    const std::string token = m.body.at("token").get<std::string>();
    auto role = role_from_string(m.body.at("role").get<std::string>());
    if (!role) {
      nack(out, s, m.seq, "ProtocolError", "role must be Operator or Viewer");
      return;
    }
    const TokenEntry* entry = nullptr;
    for (const auto& t : config_.tokens)
      if (t.token == token) entry = &t;
    if (!entry) {
      nack(out, s, m.seq, "AuthFailed", "unknown token", true);
      return;
    }
    if (*role == Role::Operator && entry->role != Role::Operator) {
      nack(out, s, m.seq, "RoleDenied", "token does not grant Operator", true);
      return;
    }
    s.authenticated = true;
    s.role = *role;
    s.token = token;
    send(out, s, proto::MsgType::WELCOME, json{{"session_id", s.id}, {"role", std::string(to_string(s.role))}});
    for (const auto& [id, dev] : world_->devices)
      send(out, s, proto::MsgType::STATE,
           json{{"device_id", id.str()},
                {"kind", std::string(to_string(dev.kind()))},
                {"state", state_to_json(dev.state)}});
  }

  void command(Session& s, const proto::Message& m, std::vector<Outbound>& out) {
    if (s.role != Role::Operator) {
      nack(out, s, m.seq, "NotAuthorized", "Viewer sessions may not send COMMAND");
      return;
    }
    try {
      Command c = command_from_json(m.body, Errc::IllegalAction);
      auto it = projected_.find(c.target);
      if (it == projected_.end()) throw Error(Errc::UnknownDevice, "no device '" + c.target.str() + "'");
      DeviceState next = apply_command(it->second.state, c);
      if (auto* l = std::get_if<LightState>(&next); l && l->on && !light_powered(projected_, it->second, world_->env))
        throw Error(Errc::NoPower, c.target.str() + " has no power source");
      it->second.state = std::move(next);
      queue_->push(InjectCommand{std::move(c)});
      ack(out, s, m.seq);
    } catch (const Error& e) {
      nack(out, s, m.seq, wire_code(e.code()), e.detail());
    }
  }

  // Operator-only environment injections: name is an injection type
  // (motion, smoke_source, fire_source, mains, outdoor_c), payload its fields.
  void event(Session& s, const proto::Message& m, std::vector<Outbound>& out) {
    if (s.role != Role::Operator) {
      nack(out, s, m.seq, "NotAuthorized", "Viewer sessions may not inject events");
      return;
    }
    try {
      const std::string name = m.body.at("name").get<std::string>();
      if (name == "command") throw Error(Errc::IllegalAction, "use COMMAND for device commands");
      json j = m.body.at("payload");
      j["type"] = name;
      if (auto it = m.body.find("device_id"); it != m.body.end()) j["device_id"] = *it;
      Injection inj = injection_from_json(j, Errc::IllegalAction);
      validate_injection(inj, world_->manifest);
      queue_->push(std::move(inj));
      ack(out, s, m.seq);
    } catch (const Error& e) {
      nack(out, s, m.seq, wire_code(e.code()), e.detail());
    }
  }

  // Device-level transition errors surface as IllegalAction on the wire.
  static std::string wire_code(Errc c) {
    if (c == Errc::IllegalTransition) return "IllegalAction";
    return std::string(to_string(c));
  }

  GatewayConfig config_;
  const World* world_;
  InjectionQueue* queue_;
  DeviceTable projected_;
  std::map<std::string, Session> sessions_;
  std::uint64_t next_session_ = 0;
};

}  // namespace shopsim
