#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "shopsim/condition.hpp"
#include "shopsim/devices.hpp"
#include "shopsim/environment.hpp"

namespace shopsim {

// Rule layers, highest priority first.
enum class Layer : std::uint8_t { Fire, Smoke, Security, Occupancy, Climate };

inline constexpr std::array<Layer, 5> kAllLayers = {Layer::Fire, Layer::Smoke, Layer::Security, Layer::Occupancy,
                                                    Layer::Climate};

constexpr std::string_view to_string(Layer l) {
  switch (l) {
    case Layer::Fire: return "Fire";
    case Layer::Smoke: return "Smoke";
    case Layer::Security: return "Security";
    case Layer::Occupancy: return "Occupancy";
    case Layer::Climate: return "Climate";
  }
  return "?";
}

inline std::optional<Layer> layer_from_string(std::string_view s) {
  for (Layer l : kAllLayers)
    if (to_string(l) == s) return l;
  return std::nullopt;
}

// Climate band edges in degrees Celsius; must be strictly increasing.
struct ClimateThresholds {
  double all_off_below = 10.0;
  double windows_open_from = 11.0;
  double fan_low_from = 12.0;
  double fan_band_top = 15.0;
  double ac_on_above = 20.0;
  double fan_drop_above = 22.0;
  friend bool operator==(const ClimateThresholds&, const ClimateThresholds&) = default;
};

inline void validate(const ClimateThresholds& t) {
  const std::array<double, 6> v = {t.all_off_below, t.windows_open_from, t.fan_low_from,
                                   t.fan_band_top,  t.ac_on_above,       t.fan_drop_above};
  for (double x : v)
    if (!std::isfinite(x)) throw Error(Errc::InvalidPolicy, "thresholds must be finite");
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i - 1] < v[i])) throw Error(Errc::InvalidPolicy, "climate thresholds must be strictly increasing");
}

enum class WindowTarget : std::uint8_t { NoPreference, Open, Closed };
enum class FanTarget : std::uint8_t { NoPreference, Off, Low, High };
enum class SwitchTarget : std::uint8_t { NoPreference, On, Off };

// What one rule wants per actuator class. NoPreference means the rule does
// not claim that class at all.
struct ActuatorTargets {
  WindowTarget windows = WindowTarget::NoPreference;
  FanTarget fan = FanTarget::NoPreference;
  SwitchTarget ac = SwitchTarget::NoPreference;
  SwitchTarget lights = SwitchTarget::NoPreference;
  SwitchTarget siren = SwitchTarget::NoPreference;
  SwitchTarget sprinkler = SwitchTarget::NoPreference;
  SwitchTarget printer = SwitchTarget::NoPreference;
  SwitchTarget cctv = SwitchTarget::NoPreference;
  friend bool operator==(const ActuatorTargets&, const ActuatorTargets&) = default;
};

// T < 11            windows Closed, fan Off,  ac Off   (the 10..11 gap joins "all off")
// 11 <= T < 12      windows Open,   fan Off,  ac Off
// 12 <= T <= 15     windows Open,   fan Low,  ac Off
// 15 < T <= 20      windows Open,   fan High, ac Off
// 20 < T <= 22      windows Closed, fan High, ac On
// T > 22            windows Closed, fan Low,  ac On
inline ActuatorTargets climate_targets(double indoor_c, const ClimateThresholds& th = {}) {
  if (!std::isfinite(indoor_c)) throw Error(Errc::NonFiniteTemperature, "indoor temperature is not finite");
  ActuatorTargets t;
  if (indoor_c < th.windows_open_from) {
    t.windows = WindowTarget::Closed;
    t.fan = FanTarget::Off;
    t.ac = SwitchTarget::Off;
  } else if (indoor_c < th.fan_low_from) {
    t.windows = WindowTarget::Open;
    t.fan = FanTarget::Off;
    t.ac = SwitchTarget::Off;
  } else if (indoor_c <= th.fan_band_top) {
    t.windows = WindowTarget::Open;
    t.fan = FanTarget::Low;
    t.ac = SwitchTarget::Off;
  } else if (indoor_c <= th.ac_on_above) {
    t.windows = WindowTarget::Open;
    t.fan = FanTarget::High;
    t.ac = SwitchTarget::Off;
  } else if (indoor_c <= th.fan_drop_above) {
    t.windows = WindowTarget::Closed;
    t.fan = FanTarget::High;
    t.ac = SwitchTarget::On;
  } else {
    t.windows = WindowTarget::Closed;
    t.fan = FanTarget::Low;
    t.ac = SwitchTarget::On;
  }
  return t;
}

struct Rule {
  std::string id;
  Layer layer = Layer::Climate;
  Condition when;
  ActuatorTargets targets;
  bool climate = false;  // targets come from climate_targets() on the measured temperature
  friend bool operator==(const Rule&, const Rule&) = default;
};

struct PolicySet {
  std::vector<Rule> rules;
  ClimateThresholds thresholds;
  friend bool operator==(const PolicySet&, const PolicySet&) = default;
};

inline PolicySet builtin_policy() {
  PolicySet p;
  auto add = [&](const char* id, Layer layer, const char* when, ActuatorTargets t, bool climate = false) {
    p.rules.push_back(Rule{id, layer, Condition(when), t, climate});
  };

  ActuatorTargets fire;
  fire.sprinkler = SwitchTarget::On;
  fire.siren = SwitchTarget::On;
  fire.windows = WindowTarget::Open;
  fire.fan = FanTarget::Off;
  fire.ac = SwitchTarget::Off;
  fire.lights = SwitchTarget::Off;
  fire.printer = SwitchTarget::Off;
  add("fire", Layer::Fire, "any(FireDetector).triggered == true", fire);

  ActuatorTargets smoke;
  smoke.siren = SwitchTarget::On;
  smoke.windows = WindowTarget::Open;
  add("smoke", Layer::Smoke, "any(SmokeDetector).triggered == true && all(FireDetector).triggered == false", smoke);

  ActuatorTargets intruder;
  intruder.siren = SwitchTarget::On;
  add("security", Layer::Security, "all(Door).locked == true && any(MotionDetector).motion == true", intruder);

  ActuatorTargets cameras;
  cameras.cctv = SwitchTarget::On;
  add("cctv", Layer::Security, "true", cameras);

  ActuatorTargets open;
  open.lights = SwitchTarget::On;
  add("occupancy-open", Layer::Occupancy, "any(Door).open == true", open);

  ActuatorTargets closed;
  closed.lights = SwitchTarget::Off;
  closed.fan = FanTarget::Off;
  closed.windows = WindowTarget::Closed;
  closed.ac = SwitchTarget::Off;
  closed.printer = SwitchTarget::Off;
  add("occupancy-closed", Layer::Occupancy, "all(Door).locked == true", closed);

  add("climate", Layer::Climate, "any(Door).locked == false", {}, true);
  return p;
}

// ---------------------------------------------------------------------------
// Evaluation

struct ProposedCommand {
  Layer layer = Layer::Climate;
  std::size_t rule_index = 0;  // position in PolicySet::rules
  std::string rule_id;
  Command command;
  friend bool operator==(const ProposedCommand&, const ProposedCommand&) = default;
};

namespace detail {

struct TargetSlot {
  DeviceKind kind;
  std::optional<CommandSpec> spec;
};

inline std::array<TargetSlot, 8> target_slots(const ActuatorTargets& t) {
  auto sw = [](SwitchTarget s) -> std::optional<CommandSpec> {
    if (s == SwitchTarget::On) return CommandSpec{Action::TurnOn, std::nullopt};
    if (s == SwitchTarget::Off) return CommandSpec{Action::TurnOff, std::nullopt};
    return std::nullopt;
  };
  std::optional<CommandSpec> windows;
  if (t.windows == WindowTarget::Open) windows = CommandSpec{Action::Open, std::nullopt};
  if (t.windows == WindowTarget::Closed) windows = CommandSpec{Action::Close, std::nullopt};
  std::optional<CommandSpec> fan;
  if (t.fan == FanTarget::Off) fan = CommandSpec{Action::SetSpeed, "Off"};
  if (t.fan == FanTarget::Low) fan = CommandSpec{Action::SetSpeed, "Low"};
  if (t.fan == FanTarget::High) fan = CommandSpec{Action::SetSpeed, "High"};
  return {{
      {DeviceKind::Window, windows},
      {DeviceKind::Fan, fan},
      {DeviceKind::AirConditioner, sw(t.ac)},
      {DeviceKind::Light, sw(t.lights)},
      {DeviceKind::Siren, sw(t.siren)},
      {DeviceKind::FireSprinkler, sw(t.sprinkler)},
      {DeviceKind::Printer, sw(t.printer)},
      {DeviceKind::CctvCamera, sw(t.cctv)},
  }};
}

inline double measured_temperature(const EnvState& env, const DeviceTable& devices) {
  for (const auto& [id, dev] : devices)
    if (const auto* t = std::get_if<ThermostatState>(&dev.state)) return t->reading_c;
  return env.indoor_c;
}

}  // namespace detail

// Validates thresholds, rule ids and every condition against `devices`.
inline void validate(const PolicySet& policy, const DeviceTable& devices) {
  validate(policy.thresholds);
  std::set<std::string> ids;
  for (const Rule& r : policy.rules) {
    if (r.id.empty()) throw Error(Errc::InvalidPolicy, "rule id must be non-empty");
    if (!ids.insert(r.id).second) throw Error(Errc::InvalidPolicy, "duplicate rule id '" + r.id + "'");
    r.when.validate(devices);
  }
}

// Walks the rules from highest to lowest priority. The first firing rule that
// has a preference for an actuator claims it, whether or not the actuator
// already matches; lower rules never touch a claimed actuator. Commands are
// emitted only for claimed actuators that differ from their target. Always-on
// devices are never switched off and unpowered lights are never switched on.
inline std::vector<ProposedCommand> evaluate(const PolicySet& policy, const EnvState& env,
                                             const DeviceTable& devices) {
  for (const Rule& r : policy.rules)
    for (const auto& c : r.when.clauses())
      if (c.field.scope == Condition::Scope::Device &&
          (!DeviceId::valid(c.field.device) || !devices.count(DeviceId(c.field.device))))
        throw Error(Errc::UnknownDevice, "rule '" + r.id + "' references unknown device '" + c.field.device + "'");

  std::vector<std::size_t> order(policy.rules.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return policy.rules[a].layer < policy.rules[b].layer;
  });

  std::set<DeviceId> claimed;
  std::vector<ProposedCommand> out;
  for (std::size_t idx : order) {
    const Rule& rule = policy.rules[idx];
    if (!rule.when.eval(env, devices)) continue;
    const ActuatorTargets targets =
        rule.climate ? climate_targets(detail::measured_temperature(env, devices), policy.thresholds) : rule.targets;

    for (const auto& slot : detail::target_slots(targets)) {
      if (!slot.spec) continue;
      for (const auto& [id, dev] : devices) {
        if (dev.kind() != slot.kind || !claimed.insert(id).second) continue;
        if (slot.spec->action == Action::TurnOff && dev.params.always_on) continue;
        if (slot.kind == DeviceKind::Light && slot.spec->action == Action::TurnOn && !light_powered(devices, dev, env))
          continue;
        try {
          if (apply_command(dev.state, *slot.spec) == dev.state) continue;
        } catch (const Error&) {
          continue;
        }
        out.push_back({rule.layer, idx, rule.id, Command{id, slot.spec->action, slot.spec->arg}});
      }
    }
  }
  return out;
}

// At most one command per actuator: the highest layer wins, then the earliest
// rule, then the earliest proposal. Output is sorted by device id.
inline std::vector<ProposedCommand> resolve(std::vector<ProposedCommand> proposals) {
  std::stable_sort(proposals.begin(), proposals.end(), [](const ProposedCommand& a, const ProposedCommand& b) {
    if (a.layer != b.layer) return a.layer < b.layer;
    return a.rule_index < b.rule_index;
  });
  std::vector<ProposedCommand> out;
  std::set<DeviceId> taken;
  for (auto& p : proposals)
    if (taken.insert(p.command.target).second) out.push_back(std::move(p));
  std::sort(out.begin(), out.end(),
            [](const ProposedCommand& a, const ProposedCommand& b) { return a.command.target < b.command.target; });
  return out;
}

// ---------------------------------------------------------------------------
// JSON

inline json targets_to_json(const ActuatorTargets& t) {
  json j = json::object();
  auto sw = [&](const char* key, SwitchTarget s) {
    if (s != SwitchTarget::NoPreference) j[key] = s == SwitchTarget::On ? "On" : "Off";
  };
  if (t.windows != WindowTarget::NoPreference) j["windows"] = t.windows == WindowTarget::Open ? "Open" : "Closed";
  if (t.fan == FanTarget::Off) j["fan"] = "Off";
  if (t.fan == FanTarget::Low) j["fan"] = "Low";
  if (t.fan == FanTarget::High) j["fan"] = "High";
  sw("ac", t.ac);
  sw("lights", t.lights);
  sw("siren", t.siren);
  sw("sprinkler", t.sprinkler);
  sw("printer", t.printer);
  sw("cctv", t.cctv);
  return j;
}

inline ActuatorTargets targets_from_json(const json& j) {
  constexpr Errc code = Errc::InvalidPolicy;
  if (!j.is_object()) throw Error(code, "targets must be an object");
  ActuatorTargets t;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (!it->is_string()) throw Error(code, "target '" + key + "' must be a string");
    const std::string v = it->get<std::string>();
    auto sw = [&]() {
      if (v == "On") return SwitchTarget::On;
      if (v == "Off") return SwitchTarget::Off;
      throw Error(code, "target '" + key + "' must be On or Off");
    };
    if (key == "windows") {
      if (v == "Open") t.windows = WindowTarget::Open;
      else if (v == "Closed") t.windows = WindowTarget::Closed;
      else throw Error(code, "windows target must be Open or Closed");
    } else if (key == "fan") {
      if (v == "Off") t.fan = FanTarget::Off;
      else if (v == "Low") t.fan = FanTarget::Low;
      else if (v == "High") t.fan = FanTarget::High;
      else throw Error(code, "fan target must be Off, Low or High");
    } else if (key == "ac") t.ac = sw();
    else if (key == "lights") t.lights = sw();
    else if (key == "siren") t.siren = sw();
    else if (key == "sprinkler") t.sprinkler = sw();
    else if (key == "printer") t.printer = sw();
    else if (key == "cctv") t.cctv = sw();
    else throw Error(code, "unknown actuator class '" + key + "'");
  }
  return t;
}

inline json thresholds_to_json(const ClimateThresholds& t) {
  return json{{"all_off_below", t.all_off_below}, {"windows_open_from", t.windows_open_from},
              {"fan_low_from", t.fan_low_from},   {"fan_band_top", t.fan_band_top},
              {"ac_on_above", t.ac_on_above},     {"fan_drop_above", t.fan_drop_above}};
}

inline ClimateThresholds thresholds_from_json(const json& j) {
  constexpr Errc code = Errc::InvalidPolicy;
  ClimateThresholds t;
  const json known = thresholds_to_json(t);
  if (!j.is_object()) throw Error(code, "thresholds must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.contains(it.key())) throw Error(code, "unknown threshold '" + it.key() + "'");
  auto get = [&](const char* key, double& out) {
    if (j.contains(key)) out = detail::require_number(j, key, code);
  };
  get("all_off_below", t.all_off_below);
  get("windows_open_from", t.windows_open_from);
  get("fan_low_from", t.fan_low_from);
  get("fan_band_top", t.fan_band_top);
  get("ac_on_above", t.ac_on_above);
  get("fan_drop_above", t.fan_drop_above);
  validate(t);
  return t;
}

inline json policy_to_json(const PolicySet& p) {
  json rules = json::array();
  for (const Rule& r : p.rules) {
    json rj{{"id", r.id}, {"layer", std::string(to_string(r.layer))}, {"when", r.when.source()}};
    if (r.climate) rj["climate"] = true;
    else rj["targets"] = targets_to_json(r.targets);
    rules.push_back(std::move(rj));
  }
  return json{{"rules", std::move(rules)}, {"thresholds", thresholds_to_json(p.thresholds)}};
}

// Accepts either a bare list of rules (default thresholds) or an object with
// "rules" and optional "thresholds".
inline PolicySet policy_from_json(const json& j) {
  constexpr Errc code = Errc::InvalidPolicy;
  PolicySet p;
  const json* rules = &j;
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      if (it.key() != "rules" && it.key() != "thresholds") throw Error(code, "unknown policy field '" + it.key() + "'");
    rules = &detail::require(j, "rules", code);
    if (j.contains("thresholds")) p.thresholds = thresholds_from_json(j["thresholds"]);
  }
  if (!rules->is_array()) throw Error(code, "rules must be a list");
  std::set<std::string> ids;
  for (const json& rj : *rules) {
    for (auto it = rj.begin(); it != rj.end(); ++it)
      if (it.key() != "id" && it.key() != "layer" && it.key() != "when" && it.key() != "targets" &&
          it.key() != "climate")
        throw Error(code, "unknown rule field '" + it.key() + "'");
    Rule r;
    r.id = detail::require_string(rj, "id", code);
    if (r.id.empty() || !ids.insert(r.id).second) throw Error(code, "rule ids must be unique and non-empty");
    auto layer = layer_from_string(detail::require_string(rj, "layer", code));
    if (!layer) throw Error(code, r.id + ": unknown layer");
    r.layer = *layer;
    r.when = Condition(rj.contains("when") ? detail::require_string(rj, "when", code) : "true");
    r.climate = rj.contains("climate") && detail::require_bool(rj, "climate", code);
    if (rj.contains("targets")) {
      if (r.climate) throw Error(code, r.id + ": climate rules derive their own targets");
      r.targets = targets_from_json(rj["targets"]);
    } else if (!r.climate) {
      throw Error(code, r.id + ": rule needs targets or climate:true");
    }
    p.rules.push_back(std::move(r));
  }
  return p;
}

inline PolicySet load_policy(const std::string& path) {
  return policy_from_json(parse_json(read_file(path), Errc::InvalidPolicy));
}

}  // namespace shopsim
