#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "shopsim/devices.hpp"

namespace shopsim {

inline constexpr double kSecondsPerDay = 86400.0;

// Tunable physics. The qualitative behaviour is fixed; the magnitudes are
// defaults, all overridable from a JSON object keyed by field name.
struct EnvParams {
  double k_leak = 0.002;          // 1/s, wall heat exchange
  double k_window = 0.01;         // 1/s per fully-open window fraction
  double fan_vent_off = 1.0;      // window-exchange multiplier per fan speed
  double fan_vent_low = 1.5;
  double fan_vent_high = 2.0;
  double q_ac = 0.02;             // degC/s
  double q_fire = 0.05;           // degC/s
  double smoke_gen = 0.1;         // 1/s per active source
  double smoke_vent = 0.05;       // 1/s per open-window fraction
  double smoke_decay = 0.01;      // 1/s
  double trigger_smoke = 0.3;
  double clear_smoke = 0.1;
  double extinguish_after_s = 30.0;
  double p_peak_w = 150.0;
  double battery_capacity_wh = 600.0;
  double charge_efficiency = 0.9;
  double light_load_w = 10.0;

  double fan_vent_factor(FanSpeed s) const {
    switch (s) {
      case FanSpeed::Off: return fan_vent_off;
      case FanSpeed::Low: return fan_vent_low;
      case FanSpeed::High: return fan_vent_high;
    }
    return fan_vent_off;
  }

  friend bool operator==(const EnvParams&, const EnvParams&) = default;
};

namespace detail {
template <class Fn>
void for_each_param(EnvParams& p, Fn&& fn) {
  fn("k_leak", p.k_leak);
  fn("k_window", p.k_window);
  fn("fan_vent_off", p.fan_vent_off);
  fn("fan_vent_low", p.fan_vent_low);
  fn("fan_vent_high", p.fan_vent_high);
  fn("q_ac", p.q_ac);
  fn("q_fire", p.q_fire);
  fn("smoke_gen", p.smoke_gen);
  fn("smoke_vent", p.smoke_vent);
  fn("smoke_decay", p.smoke_decay);
  fn("trigger_smoke", p.trigger_smoke);
  fn("clear_smoke", p.clear_smoke);
  fn("extinguish_after_s", p.extinguish_after_s);
  fn("p_peak_w", p.p_peak_w);
  fn("battery_capacity_wh", p.battery_capacity_wh);
  fn("charge_efficiency", p.charge_efficiency);
  fn("light_load_w", p.light_load_w);
}
}  // namespace detail

inline json env_params_to_json(const EnvParams& params) {
  json j = json::object();
  EnvParams copy = params;
  detail::for_each_param(copy, [&](const char* key, double& v) { j[key] = v; });
  return j;
}

// Applies overrides on top of `base`. Unknown keys are rejected.
inline EnvParams env_params_from_json(const json& j, EnvParams base = {}) {
  if (!j.is_object()) throw Error(Errc::InvalidParams, "params override must be a JSON object");
  std::set<std::string> known;
  detail::for_each_param(base, [&](const char* key, double& v) {
    known.insert(key);
    if (j.contains(key)) v = detail::require_number(j, key, Errc::InvalidParams);
  });
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw Error(Errc::InvalidParams, "unknown parameter '" + it.key() + "'");
  return base;
}

inline EnvParams load_params(const std::string& path) {
  return env_params_from_json(parse_json(read_file(path), Errc::InvalidParams));
}

// Rejects negative rates, inverted smoke hysteresis, and step sizes where
// the explicit integrator would overshoot the outdoor temperature.
inline void validate(const EnvParams& p, double dt_s) {
  EnvParams copy = p;
  detail::for_each_param(copy, [](const char* key, double& v) {
    if (!std::isfinite(v) || v < 0) throw Error(Errc::InvalidParams, std::string(key) + " must be finite and >= 0");
  });
  if (!(p.clear_smoke < p.trigger_smoke)) throw Error(Errc::InvalidParams, "clear_smoke must be < trigger_smoke");
  if (p.charge_efficiency > 1.0) throw Error(Errc::InvalidParams, "charge_efficiency must be <= 1");
  if (!(dt_s > 0) || !std::isfinite(dt_s)) throw Error(Errc::InvalidParams, "dt_s must be > 0");
  const double max_vent = std::max({p.fan_vent_off, p.fan_vent_low, p.fan_vent_high});
  if (dt_s * (p.k_leak + p.k_window * max_vent) >= 1.0)
    throw Error(Errc::InvalidParams, "dt_s * (k_leak + k_window * max fan factor) must be < 1");
}

struct EnvState {
  double sim_time_s = 0.0;
  double time_of_day_s = 0.0;
  double indoor_c = 20.0;
  double outdoor_c = 20.0;
  double smoke = 0.0;
  bool fire_active = false;
  double fire_suppression_s = 0.0;
  double irradiance_frac = 0.0;
  bool mains_available = true;

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

inline json env_to_json(const EnvState& e) {
  return json{{"sim_time_s", e.sim_time_s},
              {"time_of_day_s", e.time_of_day_s},
              {"indoor_c", e.indoor_c},
              {"outdoor_c", e.outdoor_c},
              {"smoke", e.smoke},
              {"fire_active", e.fire_active},
              {"fire_suppression_s", e.fire_suppression_s},
              {"irradiance_frac", e.irradiance_frac},
              {"mains_available", e.mains_available}};
}

inline EnvState env_from_json(const json& j, Errc code = Errc::SchemaMismatch) {
  EnvState e;
  e.sim_time_s = detail::require_number(j, "sim_time_s", code);
  e.time_of_day_s = detail::require_number(j, "time_of_day_s", code);
  e.indoor_c = detail::require_number(j, "indoor_c", code);
  e.outdoor_c = detail::require_number(j, "outdoor_c", code);
  e.smoke = detail::require_number(j, "smoke", code);
  e.fire_active = detail::require_bool(j, "fire_active", code);
  e.fire_suppression_s = detail::require_number(j, "fire_suppression_s", code);
  e.irradiance_frac = detail::require_number(j, "irradiance_frac", code);
  e.mains_available = detail::require_bool(j, "mains_available", code);
  if (e.smoke < 0 || e.smoke > 1) throw Error(code, "smoke out of [0,1]");
  if (e.time_of_day_s < 0 || e.time_of_day_s >= kSecondsPerDay) throw Error(code, "time_of_day_s out of range");
  if (e.fire_suppression_s < 0) throw Error(code, "negative fire_suppression_s");
  return e;
}

// ---------------------------------------------------------------------------
// Component updates. Each is a single explicit Euler step.

inline double thermal_update(double indoor_c, double outdoor_c, double open_window_frac, FanSpeed max_fan_speed,
                             bool ac_on, bool fire_active, double dt_s, const EnvParams& p) {
  const double gap = outdoor_c - indoor_c;
  const double rate = p.k_leak * gap + p.k_window * open_window_frac * p.fan_vent_factor(max_fan_speed) * gap -
                      (ac_on ? p.q_ac : 0.0) + (fire_active ? p.q_fire : 0.0);
  return indoor_c + dt_s * rate;
}

inline double smoke_update(double smoke, int sources_active, double open_window_frac, double dt_s,
                           const EnvParams& p) {
  const double rate = p.smoke_gen * sources_active - p.smoke_vent * open_window_frac - p.smoke_decay;
  return std::clamp(smoke + dt_s * rate, 0.0, 1.0);
}

// Fraction of peak irradiance: a half sine between 06:00 and 18:00.
inline double irradiance(double time_of_day_s) {
  constexpr double sunrise = 6 * 3600.0;
  constexpr double sunset = 18 * 3600.0;
  if (time_of_day_s < sunrise || time_of_day_s >= sunset) return 0.0;
  return std::max(0.0, std::sin(std::numbers::pi * (time_of_day_s - sunrise) / (sunset - sunrise)));
}

inline double solar_output(double time_of_day_s, const EnvParams& p) { return p.p_peak_w * irradiance(time_of_day_s); }

struct PowerStep {
  double battery_wh = 0.0;
  double meter_w = 0.0;
};

// Battery-backed loads draw from the battery only while mains is down.
inline PowerStep power_step(double battery_wh, double solar_w, bool mains_available, double battery_loads_w,
                            double dt_s, const EnvParams& p, double capacity_wh) {
  const double draw = mains_available ? 0.0 : battery_loads_w;
  const double next = battery_wh + dt_s / 3600.0 * (p.charge_efficiency * solar_w - draw);
  return {std::clamp(next, 0.0, capacity_wh), solar_w};
}

inline PowerStep power_step(double battery_wh, double solar_w, bool mains_available, double battery_loads_w,
                            double dt_s, const EnvParams& p) {
  return power_step(battery_wh, solar_w, mains_available, battery_loads_w, dt_s, p, p.battery_capacity_wh);
}

// ---------------------------------------------------------------------------
// Whole-shop step

struct ActuatorSummary {
  double open_window_frac = 0.0;
  FanSpeed max_fan = FanSpeed::Off;
  bool ac_on = false;
  bool sprinkler_on = false;
  bool fire_source = false;
  int smoke_sources = 0;
};

inline ActuatorSummary summarize(const DeviceTable& devices) {
  ActuatorSummary s;
  int windows = 0, open = 0;
  for (const auto& [id, dev] : devices) {
    std::visit(overloaded{
                   [&](const WindowState& w) { ++windows; open += w.open ? 1 : 0; },
                   [&](const FanState& f) { s.max_fan = std::max(s.max_fan, f.speed); },
                   [&](const AirConditionerState& a) { s.ac_on |= a.on; },
                   [&](const FireSprinklerState& f) { s.sprinkler_on |= f.on; },
                   [&](const FireSourceState& f) { s.fire_source |= f.active; },
                   [&](const SmokeSourceState& f) { s.smoke_sources += f.active ? 1 : 0; },
                   [](const auto&) {},
               },
               dev.state);
  }
  s.open_window_frac = windows ? static_cast<double>(open) / windows : 0.0;
  return s;
}

// Rates are taken from the start-of-step state; the fire lifecycle
// (ignition, suppression, extinguishing) is resolved for the new state.
inline EnvState step_environment(const EnvState& env, const DeviceTable& devices, double dt_s, const EnvParams& p) {
  const ActuatorSummary act = summarize(devices);
  EnvState next = env;

  next.indoor_c = thermal_update(env.indoor_c, env.outdoor_c, act.open_window_frac, act.max_fan, act.ac_on,
                                 env.fire_active, dt_s, p);
  next.smoke = smoke_update(env.smoke, act.smoke_sources + (env.fire_active ? 1 : 0), act.open_window_frac, dt_s, p);

  next.fire_suppression_s = act.sprinkler_on ? env.fire_suppression_s : 0.0;
  if (act.fire_source && !next.fire_active && next.fire_suppression_s < p.extinguish_after_s) next.fire_active = true;
  if (next.fire_active && act.sprinkler_on) {
    next.fire_suppression_s += dt_s;
    if (next.fire_suppression_s >= p.extinguish_after_s) next.fire_active = false;
  }

  next.sim_time_s = env.sim_time_s + dt_s;
  next.time_of_day_s = std::fmod(env.time_of_day_s + dt_s, kSecondsPerDay);
  next.irradiance_frac = irradiance(next.time_of_day_s);
  return next;
}

// Refreshes every sensor-backed field from the (already stepped) environment:
// thermostat, detectors with hysteresis, motion pulses, the power chain, and
// the power source of each light. Lights that lose all power switch off.
inline DeviceTable refresh_sensors(const EnvState& env, DeviceTable devices, double dt_s, const EnvParams& p,
                                   const std::set<DeviceId>& motion_pulses = {}) {
  const double solar_w = solar_output(env.time_of_day_s, p);
  double solar_total = 0.0;
  int batteries = 0;
  for (auto& [id, dev] : devices) {
    std::visit(overloaded{
                   [&](ThermostatState& s) { s.reading_c = env.indoor_c; },
                   [&](SmokeDetectorState& s) {
                     if (!s.triggered && env.smoke >= p.trigger_smoke) s.triggered = true;
                     else if (s.triggered && env.smoke < p.clear_smoke) s.triggered = false;
                   },
                   [&](FireDetectorState& s) { s.triggered = env.fire_active; },
                   [&](MotionDetectorState& s) { s.motion = s.armed && motion_pulses.count(id) > 0; },
                   [&](SolarPanelState& s) {
                     s.output_w = solar_w;
                     solar_total += solar_w;
                   },
                   [&](BatteryState&) { ++batteries; },
                   [](auto&) {},
               },
               dev.state);
  }
  for (auto& [id, dev] : devices)
    if (auto* m = std::get_if<PowerMeterState>(&dev.state)) m->reading_w = solar_total;

  for (auto& [id, dev] : devices) {
    auto* b = std::get_if<BatteryState>(&dev.state);
    if (!b) continue;
    double loads = 0.0;
    for (const auto& [lid, ldev] : devices) {
      const auto* l = std::get_if<LightState>(&ldev.state);
      if (l && l->on && ldev.params.backup == id) loads += ldev.params.load_w.value_or(p.light_load_w);
    }
    const double capacity = dev.params.capacity_wh.value_or(p.battery_capacity_wh);
    b->charge_wh = power_step(b->charge_wh, solar_total / batteries, env.mains_available, loads, dt_s, p, capacity)
                       .battery_wh;
  }

  for (auto& [id, dev] : devices) {
    auto* l = std::get_if<LightState>(&dev.state);
    if (!l) continue;
    const bool backed = dev.params.backup.has_value();
    l->source = (backed && !env.mains_available) ? PowerSource::Battery : PowerSource::Mains;
    if (!env.mains_available) {
      const BatteryState* b = backed ? state_as<BatteryState>(devices, *dev.params.backup) : nullptr;
      if (!b || b->charge_wh <= 0.0) l->on = false;
    }
  }
  return devices;
}

// True when a light has a live supply: mains, or a non-empty backup battery.
inline bool light_powered(const DeviceTable& devices, const Device& light, const EnvState& env) {
  if (env.mains_available) return true;
  if (!light.params.backup) return false;
  const BatteryState* b = state_as<BatteryState>(devices, *light.params.backup);
  return b && b->charge_wh > 0.0;
}

}  // namespace shopsim
