#pragma once

#include <cstdio>
#include <string>

#include "shopsim/runtime.hpp"

namespace shopsim {

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::string clock_text(double time_of_day_s) {
  const long s = static_cast<long>(time_of_day_s);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02ld:%02ld:%02ld", (s / 3600) % 24, (s / 60) % 60, s % 60);
  return buf;
}

inline std::string state_text(const DeviceState& state) {
  return std::visit(
      [](const auto& s) -> std::string {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, LightState>) {
          if (!s.on) return "off";
          return s.source == PowerSource::Battery ? "on battery" : "on";
        } else if constexpr (std::is_same_v<S, FanState>) {
          return s.speed == FanSpeed::Off ? "off" : s.speed == FanSpeed::Low ? "low" : "high";
        } else if constexpr (std::is_same_v<S, WindowState>) {
          return s.open ? "open" : "closed";
        } else if constexpr (std::is_same_v<S, DoorState>) {
          return std::string(s.open ? "open" : "closed") + (s.locked ? " locked" : " unlocked");
        } else if constexpr (std::is_same_v<S, MotionDetectorState>) {
          return std::string(s.armed ? "armed" : "disarmed") + (s.motion ? " motion" : "");
        } else if constexpr (std::is_same_v<S, ThermostatState>) {
          return fmt("%.2fC", s.reading_c);
        } else if constexpr (std::is_same_v<S, SolarPanelState>) {
          return fmt("%.2fW", s.output_w);
        } else if constexpr (std::is_same_v<S, BatteryState>) {
          return fmt("%.3fWh", s.charge_wh);
        } else if constexpr (std::is_same_v<S, PowerMeterState>) {
          return fmt("%.2fW", s.reading_w);
        } else if constexpr (requires { s.triggered; }) {
          return s.triggered ? "triggered" : "clear";
        } else if constexpr (requires { s.active; }) {
          return s.active ? "active" : "inactive";
        } else {
          return s.on ? "on" : "off";
        }
      },
      state);
}

}  // namespace detail

// One env header line, then `id Kind state` per device in id order.
inline std::string format_status(const World& w) {
  const EnvState& e = w.env;
  std::string out = "tick " + std::to_string(w.tick_index) + " time " + detail::clock_text(e.time_of_day_s) +
                    " indoor " + detail::fmt("%.2fC", e.indoor_c) + " outdoor " + detail::fmt("%.2fC", e.outdoor_c) +
                    " smoke " + detail::fmt("%.3f", e.smoke) + " fire " + (e.fire_active ? "yes" : "no") + " mains " +
                    (e.mains_available ? "on" : "off") + "\n";
  for (const auto& [id, dev] : w.devices) {
    out += id.str();
    out += ' ';
    out += to_string(dev.kind());
    out += ' ';
    out += detail::state_text(dev.state);
    out += '\n';
  }
  return out;
}

}  // namespace shopsim
