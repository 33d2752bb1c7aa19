#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "shopsim/devices.hpp"
#include "shopsim/environment.hpp"
#include "shopsim/manifest.hpp"
#include "shopsim/policy.hpp"
#include "shopsim/scenario.hpp"

namespace shopsim {

struct World {
  DeviceManifest manifest;
  DeviceTable devices;
  EnvState env;
  EnvParams params;
  PolicySet policy;
  double dt_s = 1.0;
  std::uint64_t tick_index = 0;
  std::uint64_t rng_seed = 0;  // reserved; nothing is random yet

  friend bool operator==(const World&, const World&) = default;
};

namespace detail {
inline void validate_world(const World& w) {
  validate(w.params, w.dt_s);
  validate(w.policy, w.devices);
  for (const auto& [id, dev] : w.devices) {
    if (const auto* b = std::get_if<BatteryState>(&dev.state)) {
      const double cap = dev.params.capacity_wh.value_or(w.params.battery_capacity_wh);
      if (b->charge_wh < 0 || b->charge_wh > cap)
        throw Error(Errc::InvalidManifest, id.str() + ": charge outside [0, capacity]");
    }
  }
}
}  // namespace detail

// Builds a world at tick 0 with the thermostat mirroring the indoor
// temperature.
inline World make_world(DeviceManifest manifest, EnvParams params = {}, PolicySet policy = builtin_policy(),
                        double dt_s = 1.0) {
  World w;
  w.devices = instantiate(manifest);
  w.manifest = std::move(manifest);
  w.params = params;
  w.policy = std::move(policy);
  w.dt_s = dt_s;
  detail::validate_world(w);
  return w;
}

// Applies a scenario's step size, parameter overrides and initial
// conditions.
inline void apply_initial(World& w, const Scenario& s) {
  w.dt_s = s.dt_s;
  if (!s.params.empty()) w.params = env_params_from_json(s.params, w.params);
  const auto& init = s.initial;
  if (init.time_of_day_s) {
    w.env.time_of_day_s = *init.time_of_day_s;
    w.env.irradiance_frac = irradiance(w.env.time_of_day_s);
  }
  if (init.indoor_c) w.env.indoor_c = *init.indoor_c;
  if (init.outdoor_c) w.env.outdoor_c = *init.outdoor_c;
  if (init.mains_available) w.env.mains_available = *init.mains_available;
  for (const auto& [id, patch] : init.devices) {
    auto it = w.devices.find(id);
    if (it == w.devices.end()) throw Error(Errc::InvalidScenario, "unknown device '" + id.str() + "'");
    json merged = state_to_json(it->second.state);
    merged.update(patch);
    it->second.state = state_from_json(it->second.kind(), merged, Errc::InvalidScenario);
  }
  for (auto& [id, dev] : w.devices)
    if (auto* t = std::get_if<ThermostatState>(&dev.state)) t->reading_c = w.env.indoor_c;
  try {
    detail::validate_world(w);
  } catch (const Error& e) {
    throw Error(Errc::InvalidScenario, e.what());
  }
}

// ---------------------------------------------------------------------------
// Event log

enum class LogKind : std::uint8_t { Injected, CommandApplied, CommandRejected, EnvChanged, RuleFired, StateChanged };

constexpr std::string_view to_string(LogKind k) {
  switch (k) {
    case LogKind::Injected: return "Injected";
    case LogKind::CommandApplied: return "CommandApplied";
    case LogKind::CommandRejected: return "CommandRejected";
    case LogKind::EnvChanged: return "EnvChanged";
    case LogKind::RuleFired: return "RuleFired";
    case LogKind::StateChanged: return "StateChanged";
  }
  return "?";
}

inline std::optional<LogKind> log_kind_from_string(std::string_view s) {
  for (LogKind k : {LogKind::Injected, LogKind::CommandApplied, LogKind::CommandRejected, LogKind::EnvChanged,
                    LogKind::RuleFired, LogKind::StateChanged})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

// Ordered by (tick, seq); seq restarts at 0 every tick.
struct LogEntry {
  std::uint64_t tick = 0;
  std::uint64_t seq = 0;
  LogKind kind = LogKind::Injected;
  json payload;
  friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

inline json log_entry_to_json(const LogEntry& e) {
  return json{{"tick", e.tick}, {"seq", e.seq}, {"kind", std::string(to_string(e.kind))}, {"payload", e.payload}};
}

inline std::string to_jsonl(const std::vector<LogEntry>& log) {
  std::string out;
  for (const auto& e : log) {
    out += canonical(log_entry_to_json(e));
    out += '\n';
  }
  return out;
}

inline std::vector<LogEntry> parse_log(std::string_view text) {
  std::vector<LogEntry> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      LogEntry e;
      e.tick = detail::require_u64(j, "tick", Errc::LogCorrupt);
      e.seq = detail::require_u64(j, "seq", Errc::LogCorrupt);
      auto kind = log_kind_from_string(detail::require_string(j, "kind", Errc::LogCorrupt));
      if (!kind) throw Error(Errc::LogCorrupt, "unknown entry kind");
      e.kind = *kind;
      e.payload = detail::require(j, "payload", Errc::LogCorrupt);
      out.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw Error(Errc::LogCorrupt, "line " + std::to_string(line_no) + ": " + ex.what());
    } catch (const Error& ex) {
      throw Error(Errc::LogCorrupt, "line " + std::to_string(line_no) + ": " + ex.detail());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tick

namespace detail {

class TickLog {
 public:
  explicit TickLog(std::uint64_t tick) : tick_(tick) {}
  void add(LogKind kind, json payload) { entries_.push_back({tick_, entries_.size(), kind, std::move(payload)}); }
  std::vector<LogEntry> take() { return std::move(entries_); }

 private:
  std::uint64_t tick_;
  std::vector<LogEntry> entries_;
};

inline json rejection(const Command& c, Errc code, const std::string& reason, const char* source) {
  json j = command_to_json(c);
  j["code"] = std::string(to_string(code));
  j["reason"] = reason;
  j["source"] = source;
  return j;
}

// Runs one command through the device model plus the power check that the
// pure transition function cannot see. Returns the error code on rejection.
inline std::optional<Error> try_command(World& w, const Command& c) {
  auto it = w.devices.find(c.target);
  if (it == w.devices.end()) return Error(Errc::UnknownDevice, "unknown device '" + c.target.str() + "'");
  try {
    DeviceState next = apply_command(it->second.state, c);
    if (auto* l = std::get_if<LightState>(&next); l && l->on && !light_powered(w.devices, it->second, w.env))
      return Error(Errc::NoPower, c.target.str() + " has no power");
    it->second.state = std::move(next);
  } catch (const Error& e) {
    return e;
  }
  return std::nullopt;
}

inline void apply_injection(World& w, const Injection& inj, std::set<DeviceId>& pulses, TickLog& log) {
  std::visit(overloaded{
                 [&](const InjectCommand& i) {
                   if (auto err = try_command(w, i.command)) {
                     log.add(LogKind::CommandRejected, rejection(i.command, err->code(), err->detail(), "injection"));
                   } else {
                     json j = command_to_json(i.command);
                     j["source"] = "injection";
                     log.add(LogKind::CommandApplied, std::move(j));
                   }
                 },
                 [&](const InjectMotion& i) {
                   for (const auto& [id, dev] : w.devices)
                     if (dev.kind() == DeviceKind::MotionDetector && (!i.device || *i.device == id)) pulses.insert(id);
                 },
                 [&](const InjectSource& i) {
                   for (auto& [id, dev] : w.devices) {
                     if (dev.kind() != i.kind || (i.device && *i.device != id)) continue;
                     std::visit(overloaded{[&]<DeviceKind K>(SourceState<K>& s) { s.active = i.on; }, [](auto&) {}},
                                dev.state);
                   }
                 },
                 [&](const InjectMains& i) { w.env.mains_available = i.on; },
                 [&](const InjectOutdoor& i) { w.env.outdoor_c = i.celsius; },
             },
             inj);
}

inline json env_delta(const EnvState& before, const EnvState& after) {
  const json a = env_to_json(before);
  const json b = env_to_json(after);
  json d = json::object();
  for (auto it = b.begin(); it != b.end(); ++it)
    if (a[it.key()] != *it) d[it.key()] = *it;
  return d;
}

}  // namespace detail

// One step with a fixed phase order:
//   1. apply injections in queue order
//   2. step the environment
//   3. refresh sensor-backed device fields
//   4. evaluate and resolve the policy
//   5. apply the resolved commands
//   6. record a StateChanged entry for every device that differs from the
//      start of the tick
// Rejected commands are logged, never thrown.
inline std::vector<LogEntry> tick_in_place(World& w, const std::vector<Injection>& injections) {
  detail::TickLog log(w.tick_index);
  const DeviceTable devices_before = w.devices;
  const EnvState env_before = w.env;

  std::set<DeviceId> pulses;
  for (const Injection& inj : injections) {
    log.add(LogKind::Injected, injection_to_json(inj));
    detail::apply_injection(w, inj, pulses, log);
  }

  w.env = step_environment(w.env, w.devices, w.dt_s, w.params);
  w.devices = refresh_sensors(w.env, std::move(w.devices), w.dt_s, w.params, pulses);
  log.add(LogKind::EnvChanged, detail::env_delta(env_before, w.env));

  std::vector<ProposedCommand> resolved;
  try {
    resolved = resolve(evaluate(w.policy, w.env, w.devices));
  } catch (const Error& e) {
    log.add(LogKind::CommandRejected, json{{"code", std::string(to_string(e.code()))}, {"reason", e.detail()},
                                           {"source", "policy"}});
  }

  std::vector<std::size_t> fired;
  for (const auto& p : resolved)
    if (std::find(fired.begin(), fired.end(), p.rule_index) == fired.end()) fired.push_back(p.rule_index);
  std::sort(fired.begin(), fired.end(), [&](std::size_t a, std::size_t b) {
    const Rule& ra = w.policy.rules[a];
    const Rule& rb = w.policy.rules[b];
    return ra.layer != rb.layer ? ra.layer < rb.layer : a < b;
  });
  for (std::size_t idx : fired) {
    const Rule& r = w.policy.rules[idx];
    const auto n = std::count_if(resolved.begin(), resolved.end(),
                                 [&](const ProposedCommand& p) { return p.rule_index == idx; });
    log.add(LogKind::RuleFired, json{{"rule", r.id}, {"layer", std::string(to_string(r.layer))}, {"commands", n}});
  }

  for (const auto& p : resolved) {
    if (auto err = detail::try_command(w, p.command)) {
      log.add(LogKind::CommandRejected, detail::rejection(p.command, err->code(), err->detail(), "policy"));
      continue;
    }
    json j = command_to_json(p.command);
    j["source"] = "policy";
    j["rule"] = p.rule_id;
    j["layer"] = std::string(to_string(p.layer));
    log.add(LogKind::CommandApplied, std::move(j));
  }

  for (const auto& [id, dev] : w.devices) {
    auto it = devices_before.find(id);
    if (it != devices_before.end() && it->second.state == dev.state) continue;
    log.add(LogKind::StateChanged, json{{"device_id", id.str()},
                                        {"kind", std::string(to_string(dev.kind()))},
                                        {"state", state_to_json(dev.state)}});
  }

  ++w.tick_index;
  return log.take();
}

inline std::pair<World, std::vector<LogEntry>> tick(World world, const std::vector<Injection>& injections) {
  auto log = tick_in_place(world, injections);
  return {std::move(world), std::move(log)};
}

// ---------------------------------------------------------------------------
// Scenarios and replay

struct RunResult {
  World world;
  std::vector<LogEntry> log;
};

namespace detail {
inline void validate_scenario(const Scenario& s, const World& w) {
  try {
    validate(w.params, s.dt_s);
    for (const auto& ti : s.injections) {
      if (ti.tick >= s.duration_ticks) throw Error(Errc::InjectionAfterEnd, "injection past end");
      validate_injection(ti.injection, w.manifest);
    }
    for (const auto& [t, c] : s.outdoor_profile)
      if (t >= s.duration_ticks) throw Error(Errc::InjectionAfterEnd, "profile step past end");
    for (const auto& [t, on] : s.mains_schedule)
      if (t >= s.duration_ticks) throw Error(Errc::InjectionAfterEnd, "mains step past end");
  } catch (const Error& e) {
    throw Error(Errc::InvalidScenario, e.what());
  }
}
}  // namespace detail

template <class OnTick>
RunResult run_scenario(World world, const Scenario& scenario, OnTick&& on_tick) {
  detail::validate_scenario(scenario, world);
  apply_initial(world, scenario);
  const auto schedule = scenario.schedule();
  static const std::vector<Injection> none;
  RunResult r;
  for (std::uint64_t t = 0; t < scenario.duration_ticks; ++t) {
    auto it = schedule.find(t);
    auto entries = tick_in_place(world, it == schedule.end() ? none : it->second);
    on_tick(static_cast<const World&>(world), static_cast<const std::vector<LogEntry>&>(entries));
    r.log.insert(r.log.end(), std::make_move_iterator(entries.begin()), std::make_move_iterator(entries.end()));
  }
  r.world = std::move(world);
  return r;
}

inline RunResult run_scenario(World world, const Scenario& scenario) {
  return run_scenario(std::move(world), scenario, [](const World&, const std::vector<LogEntry>&) {});
}

// Rebuilds the final world from `world0`, the scenario's initial conditions
// and the Injected entries of `log` alone.
inline World replay(World world, const Scenario& scenario, const std::vector<LogEntry>& log) {
  std::map<std::uint64_t, std::vector<Injection>> inputs;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const LogEntry& e = log[i];
    if (i > 0) {
      const LogEntry& p = log[i - 1];
      const bool ordered = e.tick > p.tick || (e.tick == p.tick && e.seq > p.seq);
      if (!ordered) throw Error(Errc::LogCorrupt, "entry " + std::to_string(i) + " is out of order");
    }
    if (e.tick >= scenario.duration_ticks)
      throw Error(Errc::LogCorrupt, "entry " + std::to_string(i) + " is past the end of the scenario");
    if (e.kind != LogKind::Injected) continue;
    try {
      Injection inj = injection_from_json(e.payload, Errc::LogCorrupt);
      validate_injection(inj, world.manifest);
      inputs[e.tick].push_back(std::move(inj));
    } catch (const Error& ex) {
      throw Error(Errc::LogCorrupt, "entry " + std::to_string(i) + ": " + ex.detail());
    }
  }
  apply_initial(world, scenario);
  static const std::vector<Injection> none;
  for (std::uint64_t t = 0; t < scenario.duration_ticks; ++t) {
    auto it = inputs.find(t);
    tick_in_place(world, it == inputs.end() ? none : it->second);
  }
  return world;
}

inline World replay(const DeviceManifest& manifest, const Scenario& scenario, const std::vector<LogEntry>& log) {
  return replay(make_world(manifest), scenario, log);
}

// ---------------------------------------------------------------------------
// Snapshots

inline json snapshot_json(const World& w) {
  json devices = json::object();
  for (const auto& [id, dev] : w.devices)
    devices[id.str()] = json{{"kind", std::string(to_string(dev.kind()))}, {"state", state_to_json(dev.state)}};
  return json{{"version", 1},
              {"manifest", manifest_to_json(w.manifest)},
              {"devices", std::move(devices)},
              {"env", env_to_json(w.env)},
              {"params", env_params_to_json(w.params)},
              {"policy", policy_to_json(w.policy)},
              {"dt_s", w.dt_s},
              {"tick_index", w.tick_index},
              {"rng_seed", w.rng_seed}};
}

inline std::string snapshot(const World& w) { return canonical(snapshot_json(w)); }

inline World restore_json(const json& j) {
  constexpr Errc code = Errc::SchemaMismatch;
  try {
    if (!j.is_object()) throw Error(code, "snapshot must be an object");
    if (detail::require_u64(j, "version", code) != 1) throw Error(code, "unsupported snapshot version");
    World w;
    w.manifest = manifest_from_json(detail::require(j, "manifest", code));
    w.devices = instantiate(w.manifest);
    const json& devices = detail::require(j, "devices", code);
    if (!devices.is_object() || devices.size() != w.devices.size())
      throw Error(code, "device set does not match manifest");
    for (auto& [id, dev] : w.devices) {
      const json& rec = detail::require(devices, id.str().c_str(), code);
      if (detail::require_string(rec, "kind", code) != to_string(dev.kind()))
        throw Error(code, id.str() + ": kind does not match manifest");
      dev.state = state_from_json(dev.kind(), detail::require(rec, "state", code), code);
    }
    w.env = env_from_json(detail::require(j, "env", code), code);
    w.params = env_params_from_json(detail::require(j, "params", code));
    w.policy = policy_from_json(detail::require(j, "policy", code));
    w.dt_s = detail::require_number(j, "dt_s", code);
    w.tick_index = detail::require_u64(j, "tick_index", code);
    w.rng_seed = detail::require_u64(j, "rng_seed", code);
    detail::validate_world(w);
    return w;
  } catch (const Error& e) {
    if (e.code() == code) throw;
    throw Error(code, e.what());
  }
}

inline World restore(std::string_view document) {
  json j;
  try {
    j = json::parse(document);
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaMismatch, e.what());
  }
  return restore_json(j);
}

// ---------------------------------------------------------------------------
// Ordered, thread-safe inbox for live injections (gateway sessions push,
// the single ticker drains at each tick boundary).

class InjectionQueue {
 public:
  void push(Injection inj) {
    std::lock_guard lock(mu_);
    items_.push_back(std::move(inj));
  }
  std::vector<Injection> drain() {
    std::lock_guard lock(mu_);
    std::vector<Injection> out(std::make_move_iterator(items_.begin()), std::make_move_iterator(items_.end()));
    items_.clear();
    return out;
  }
  std::size_t size() const {
    std::lock_guard lock(mu_);
    return items_.size();
  }

 private:
  mutable std::mutex mu_;
  std::deque<Injection> items_;
};

}  // namespace shopsim
