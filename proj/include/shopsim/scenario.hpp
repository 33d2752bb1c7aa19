#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "shopsim/devices.hpp"
#include "shopsim/environment.hpp"
#include "shopsim/manifest.hpp"

namespace shopsim {

// External stimuli. Everything that can change the world from outside the
// tick loop is one of these, so a log of injections is enough to replay.
struct InjectCommand {
  Command command;
  friend bool operator==(const InjectCommand&, const InjectCommand&) = default;
};
struct InjectMotion {
  std::optional<DeviceId> device;  // unset: every motion detector
  friend bool operator==(const InjectMotion&, const InjectMotion&) = default;
};
struct InjectSource {
  DeviceKind kind = DeviceKind::SmokeSource;  // SmokeSource or FireSource
  std::optional<DeviceId> device;             // unset: every source of that kind
  bool on = false;
  friend bool operator==(const InjectSource&, const InjectSource&) = default;
};
struct InjectMains {
  bool on = true;
  friend bool operator==(const InjectMains&, const InjectMains&) = default;
};
struct InjectOutdoor {
  double celsius = 20.0;
  friend bool operator==(const InjectOutdoor&, const InjectOutdoor&) = default;
};

using Injection = std::variant<InjectCommand, InjectMotion, InjectSource, InjectMains, InjectOutdoor>;

inline json command_to_json(const Command& c) {
  json j{{"device_id", c.target.str()}, {"action", std::string(to_string(c.action))}};
  if (c.arg) j["arg"] = *c.arg;
  return j;
}

inline Command command_from_json(const json& j, Errc code) {
  auto id = detail::require_string(j, "device_id", code);
  if (!DeviceId::valid(id)) throw Error(code, "invalid device id '" + id + "'");
  auto action_name = detail::require_string(j, "action", code);
  auto action = action_from_string(action_name);
  if (!action) throw Error(code, "unknown action '" + action_name + "'");
  Command c{DeviceId(id), *action, std::nullopt};
  if (j.contains("arg") && !j["arg"].is_null()) c.arg = detail::require_string(j, "arg", code);
  return c;
}

inline json injection_to_json(const Injection& inj) {
  return std::visit(
      overloaded{
          [](const InjectCommand& i) {
            json j = command_to_json(i.command);
            j["type"] = "command";
            return j;
          },
          [](const InjectMotion& i) {
            json j{{"type", "motion"}};
            if (i.device) j["device_id"] = i.device->str();
            return j;
          },
          [](const InjectSource& i) {
            json j{{"type", i.kind == DeviceKind::FireSource ? "fire_source" : "smoke_source"}, {"on", i.on}};
            if (i.device) j["device_id"] = i.device->str();
            return j;
          },
          [](const InjectMains& i) { return json{{"type", "mains"}, {"on", i.on}}; },
          [](const InjectOutdoor& i) { return json{{"type", "outdoor_c"}, {"value", i.celsius}}; },
      },
      inj);
}

// The same names are used for scenario injections and for client EVENT
// frames (`name` plus a payload holding the remaining fields).
inline Injection injection_from_json(const json& j, Errc code = Errc::ParseError) {
  const std::string type = detail::require_string(j, "type", code);
  auto opt_device = [&]() -> std::optional<DeviceId> {
    if (!j.contains("device_id") || j["device_id"].is_null()) return std::nullopt;
    auto id = detail::require_string(j, "device_id", code);
    if (!DeviceId::valid(id)) throw Error(code, "invalid device id '" + id + "'");
    return DeviceId(id);
  };
  if (type == "command") return InjectCommand{command_from_json(j, code)};
  if (type == "motion") return InjectMotion{opt_device()};
  if (type == "smoke_source" || type == "fire_source")
    return InjectSource{type == "fire_source" ? DeviceKind::FireSource : DeviceKind::SmokeSource, opt_device(),
                        detail::require_bool(j, "on", code)};
  if (type == "mains") return InjectMains{detail::require_bool(j, "on", code)};
  if (type == "outdoor_c") {
    double v = detail::require_number(j, "value", code);
    if (!std::isfinite(v)) throw Error(code, "outdoor_c must be finite");
    return InjectOutdoor{v};
  }
  throw Error(code, "unknown injection type '" + type + "'");
}

// Checks that an injection only references devices of the right kind.
inline void validate_injection(const Injection& inj, const DeviceManifest& m) {
  auto expect = [&](const DeviceId& id, std::optional<DeviceKind> kind) {
    const ManifestEntry* e = m.find(id);
    if (!e) throw Error(Errc::UnknownDevice, "unknown device '" + id.str() + "'");
    if (kind && e->kind() != *kind)
      throw Error(Errc::UnknownDevice, id.str() + " is not a " + std::string(to_string(*kind)));
  };
  std::visit(overloaded{
                 [&](const InjectCommand& i) { expect(i.command.target, std::nullopt); },
                 [&](const InjectMotion& i) {
                   if (i.device) expect(*i.device, DeviceKind::MotionDetector);
                 },
                 [&](const InjectSource& i) {
                   if (i.device) expect(*i.device, i.kind);
                 },
                 [](const auto&) {},
             },
             inj);
}

struct TimedInjection {
  std::uint64_t tick = 0;
  Injection injection;
  friend bool operator==(const TimedInjection&, const TimedInjection&) = default;
};

struct ScenarioInitial {
  std::optional<double> time_of_day_s;
  std::optional<double> indoor_c;
  std::optional<double> outdoor_c;
  std::optional<bool> mains_available;
  std::map<DeviceId, json> devices;  // partial state overrides, merged over the manifest
  friend bool operator==(const ScenarioInitial&, const ScenarioInitial&) = default;
};

// A scripted run. Tick t applies its injections at the start of the t-th
// step, so valid injection ticks are 0 .. duration_ticks-1.
struct Scenario {
  std::string name;
  double dt_s = 1.0;
  std::uint64_t duration_ticks = 0;
  ScenarioInitial initial;
  std::vector<std::pair<std::uint64_t, double>> outdoor_profile;  // (tick, degC) steps
  std::vector<std::pair<std::uint64_t, bool>> mains_schedule;     // (tick, available)
  std::vector<TimedInjection> injections;
  json params = json::object();  // EnvParams overrides

  // All inputs for one tick in application order: outdoor profile step,
  // mains schedule step, then timed injections in file order.
  std::map<std::uint64_t, std::vector<Injection>> schedule() const {
    std::map<std::uint64_t, std::vector<Injection>> out;
    for (const auto& [t, c] : outdoor_profile) out[t].push_back(InjectOutdoor{c});
    for (const auto& [t, on] : mains_schedule) out[t].push_back(InjectMains{on});
    for (const auto& ti : injections) out[ti.tick].push_back(ti.injection);
    return out;
  }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

inline json scenario_to_json(const Scenario& s) {
  json j{{"name", s.name}, {"dt_s", s.dt_s}, {"duration_ticks", s.duration_ticks}};
  json init = json::object();
  if (s.initial.time_of_day_s) init["time_of_day_s"] = *s.initial.time_of_day_s;
  if (s.initial.indoor_c) init["indoor_c"] = *s.initial.indoor_c;
  if (s.initial.outdoor_c) init["outdoor_c"] = *s.initial.outdoor_c;
  if (s.initial.mains_available) init["mains_available"] = *s.initial.mains_available;
  if (!s.initial.devices.empty()) {
    json d = json::object();
    for (const auto& [id, st] : s.initial.devices) d[id.str()] = st;
    init["devices"] = std::move(d);
  }
  if (!init.empty()) j["initial"] = std::move(init);
  if (!s.outdoor_profile.empty()) {
    json a = json::array();
    for (const auto& [t, c] : s.outdoor_profile) a.push_back(json{{"tick", t}, {"outdoor_c", c}});
    j["outdoor_profile"] = std::move(a);
  }
  if (!s.mains_schedule.empty()) {
    json a = json::array();
    for (const auto& [t, on] : s.mains_schedule) a.push_back(json{{"tick", t}, {"on", on}});
    j["mains_schedule"] = std::move(a);
  }
  json inj = json::array();
  for (const auto& ti : s.injections) {
    json e = injection_to_json(ti.injection);
    e["tick"] = ti.tick;
    inj.push_back(std::move(e));
  }
  j["injections"] = std::move(inj);
  if (!s.params.empty()) j["params"] = s.params;
  return j;
}

namespace detail {
inline void only_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : keys) ok |= it.key() == k;
    if (!ok) throw Error(Errc::ParseError, where + ": unknown field '" + it.key() + "'");
  }
}
}  // namespace detail

// Parses and validates a scenario document. Device ids are resolved against
// `manifest`.
inline Scenario scenario_from_json(const json& j, const DeviceManifest& manifest) {
  constexpr Errc code = Errc::ParseError;
  if (!j.is_object()) throw Error(code, "scenario must be a JSON object");
  detail::only_keys(j, {"name", "dt_s", "duration_ticks", "initial", "outdoor_profile", "mains_schedule", "injections",
                        "params"},
                    "scenario");
  Scenario s;
  s.name = j.contains("name") ? detail::require_string(j, "name", code) : std::string("unnamed");
  if (j.contains("dt_s")) s.dt_s = detail::require_number(j, "dt_s", code);
  if (!(s.dt_s > 0) || !std::isfinite(s.dt_s)) throw Error(code, "dt_s must be > 0");
  s.duration_ticks = detail::require_u64(j, "duration_ticks", code);

  auto check_tick = [&](std::uint64_t t) {
    if (t >= s.duration_ticks)
      throw Error(Errc::InjectionAfterEnd,
                  "tick " + std::to_string(t) + " is past the last tick of a " + std::to_string(s.duration_ticks) +
                      "-tick scenario");
  };

  if (j.contains("initial")) {
    const json& init = j["initial"];
    if (!init.is_object()) throw Error(code, "initial must be an object");
    detail::only_keys(init, {"time_of_day_s", "indoor_c", "outdoor_c", "mains_available", "devices"}, "initial");
    if (init.contains("time_of_day_s")) {
      double t = detail::require_number(init, "time_of_day_s", code);
      if (t < 0 || t >= kSecondsPerDay) throw Error(code, "time_of_day_s must be in [0, 86400)");
      s.initial.time_of_day_s = t;
    }
    if (init.contains("indoor_c")) s.initial.indoor_c = detail::require_number(init, "indoor_c", code);
    if (init.contains("outdoor_c")) s.initial.outdoor_c = detail::require_number(init, "outdoor_c", code);
    if (init.contains("mains_available")) s.initial.mains_available = detail::require_bool(init, "mains_available", code);
    if (init.contains("devices")) {
      const json& d = init["devices"];
      if (!d.is_object()) throw Error(code, "initial.devices must be an object keyed by device id");
      for (auto it = d.begin(); it != d.end(); ++it) {
        if (!DeviceId::valid(it.key()) || !manifest.find(DeviceId(it.key())))
          throw Error(Errc::UnknownDevice, "initial state for unknown device '" + it.key() + "'");
        const ManifestEntry* e = manifest.find(DeviceId(it.key()));
        json merged = state_to_json(e->initial);
        if (!it->is_object()) throw Error(code, it.key() + ": state override must be an object");
        merged.update(*it);
        state_from_json(e->kind(), merged, code);
        s.initial.devices[DeviceId(it.key())] = *it;
      }
    }
  }

  if (j.contains("outdoor_profile")) {
    if (!j["outdoor_profile"].is_array()) throw Error(code, "outdoor_profile must be a list");
    for (const json& step : j["outdoor_profile"]) {
      detail::only_keys(step, {"tick", "outdoor_c"}, "outdoor_profile");
      auto t = detail::require_u64(step, "tick", code);
      check_tick(t);
      s.outdoor_profile.emplace_back(t, detail::require_number(step, "outdoor_c", code));
    }
  }
  if (j.contains("mains_schedule")) {
    if (!j["mains_schedule"].is_array()) throw Error(code, "mains_schedule must be a list");
    for (const json& step : j["mains_schedule"]) {
      detail::only_keys(step, {"tick", "on"}, "mains_schedule");
      auto t = detail::require_u64(step, "tick", code);
      check_tick(t);
      s.mains_schedule.emplace_back(t, detail::require_bool(step, "on", code));
    }
  }
  if (j.contains("injections")) {
    if (!j["injections"].is_array()) throw Error(code, "injections must be a list");
    for (const json& e : j["injections"]) {
      auto t = detail::require_u64(e, "tick", code);
      json body = e;
      body.erase("tick");
      Injection inj = injection_from_json(body, code);
      if (injection_to_json(inj).size() != body.size())
        throw Error(code, "injection at tick " + std::to_string(t) + " has unknown fields");
      check_tick(t);
      validate_injection(inj, manifest);
      s.injections.push_back({t, std::move(inj)});
    }
  }
  if (j.contains("params")) {
    if (!j["params"].is_object()) throw Error(code, "params must be an object");
    s.params = j["params"];
  }
  return s;
}

inline Scenario parse_scenario(std::string_view text, const DeviceManifest& manifest) {
  return scenario_from_json(parse_json(text, Errc::ParseError), manifest);
}

inline Scenario load_scenario(const std::string& path, const DeviceManifest& manifest) {
  return parse_scenario(read_file(path), manifest);
}

}  // namespace shopsim
