#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "shopsim/error.hpp"
#include "shopsim/json_util.hpp"

namespace shopsim {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Short lowercase token naming one device: [a-z0-9-]{1,32}.
class DeviceId {
 public:
  DeviceId() = default;
  explicit DeviceId(std::string value) : value_(std::move(value)) {
    if (!valid(value_)) throw Error(Errc::InvalidId, "device id '" + value_ + "' must match [a-z0-9-]{1,32}");
  }

  static bool valid(std::string_view s) {
    if (s.empty() || s.size() > 32) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
      return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
    });
  }

  const std::string& str() const noexcept { return value_; }

  friend auto operator<=>(const DeviceId&, const DeviceId&) = default;
  friend bool operator==(const DeviceId&, const DeviceId&) = default;

 private:
  std::string value_;
};

enum class DeviceKind : std::uint8_t {
  Light,
  Fan,
  Window,
  AirConditioner,
  Door,
  Siren,
  FireSprinkler,
  SmokeDetector,
  FireDetector,
  MotionDetector,
  CctvCamera,
  Thermostat,
  SolarPanel,
  Battery,
  PowerMeter,
  SmokeSource,
  FireSource,
  Printer,
};

inline constexpr std::array<DeviceKind, 18> kAllKinds = {
    DeviceKind::Light,        DeviceKind::Fan,           DeviceKind::Window,        DeviceKind::AirConditioner,
    DeviceKind::Door,         DeviceKind::Siren,         DeviceKind::FireSprinkler, DeviceKind::SmokeDetector,
    DeviceKind::FireDetector, DeviceKind::MotionDetector, DeviceKind::CctvCamera,   DeviceKind::Thermostat,
    DeviceKind::SolarPanel,   DeviceKind::Battery,       DeviceKind::PowerMeter,    DeviceKind::SmokeSource,
    DeviceKind::FireSource,   DeviceKind::Printer,
};

constexpr std::string_view to_string(DeviceKind k) {
  switch (k) {
    case DeviceKind::Light: return "Light";
    case DeviceKind::Fan: return "Fan";
    case DeviceKind::Window: return "Window";
    case DeviceKind::AirConditioner: return "AirConditioner";
    case DeviceKind::Door: return "Door";
    case DeviceKind::Siren: return "Siren";
    case DeviceKind::FireSprinkler: return "FireSprinkler";
    case DeviceKind::SmokeDetector: return "SmokeDetector";
    case DeviceKind::FireDetector: return "FireDetector";
    case DeviceKind::MotionDetector: return "MotionDetector";
    case DeviceKind::CctvCamera: return "CctvCamera";
    case DeviceKind::Thermostat: return "Thermostat";
    case DeviceKind::SolarPanel: return "SolarPanel";
    case DeviceKind::Battery: return "Battery";
    case DeviceKind::PowerMeter: return "PowerMeter";
    case DeviceKind::SmokeSource: return "SmokeSource";
    case DeviceKind::FireSource: return "FireSource";
    case DeviceKind::Printer: return "Printer";
  }
  return "?";
}

inline std::optional<DeviceKind> kind_from_string(std::string_view s) {
  for (DeviceKind k : kAllKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

enum class FanSpeed : std::uint8_t { Off, Low, High };
enum class PowerSource : std::uint8_t { Mains, Battery };

constexpr std::string_view to_string(FanSpeed s) {
  switch (s) {
    case FanSpeed::Off: return "Off";
    case FanSpeed::Low: return "Low";
    case FanSpeed::High: return "High";
  }
  return "?";
}

inline std::optional<FanSpeed> fan_speed_from_string(std::string_view s) {
  if (s == "Off") return FanSpeed::Off;
  if (s == "Low") return FanSpeed::Low;
  if (s == "High") return FanSpeed::High;
  return std::nullopt;
}

constexpr std::string_view to_string(PowerSource s) { return s == PowerSource::Mains ? "Mains" : "Battery"; }

// Plain on/off actuators share one shape; the kind tag keeps them distinct
// alternatives inside DeviceState.
template <DeviceKind K>
struct SwitchState {
  static constexpr DeviceKind kind = K;
  bool on = false;
  friend bool operator==(const SwitchState&, const SwitchState&) = default;
};

template <DeviceKind K>
struct DetectorState {
  static constexpr DeviceKind kind = K;
  bool triggered = false;
  friend bool operator==(const DetectorState&, const DetectorState&) = default;
};

template <DeviceKind K>
struct SourceState {
  static constexpr DeviceKind kind = K;
  bool active = false;
  friend bool operator==(const SourceState&, const SourceState&) = default;
};

struct LightState {
  static constexpr DeviceKind kind = DeviceKind::Light;
  bool on = false;
  PowerSource source = PowerSource::Mains;
  friend bool operator==(const LightState&, const LightState&) = default;
};

struct FanState {
  static constexpr DeviceKind kind = DeviceKind::Fan;
  FanSpeed speed = FanSpeed::Off;
  friend bool operator==(const FanState&, const FanState&) = default;
};

struct WindowState {
  static constexpr DeviceKind kind = DeviceKind::Window;
  bool open = false;
  friend bool operator==(const WindowState&, const WindowState&) = default;
};

// Invariant: never open && locked.
struct DoorState {
  static constexpr DeviceKind kind = DeviceKind::Door;
  bool open = false;
  bool locked = false;
  friend bool operator==(const DoorState&, const DoorState&) = default;
};

struct MotionDetectorState {
  static constexpr DeviceKind kind = DeviceKind::MotionDetector;
  bool armed = true;
  bool motion = false;
  friend bool operator==(const MotionDetectorState&, const MotionDetectorState&) = default;
};

struct ThermostatState {
  static constexpr DeviceKind kind = DeviceKind::Thermostat;
  double reading_c = 20.0;
  friend bool operator==(const ThermostatState&, const ThermostatState&) = default;
};

struct SolarPanelState {
  static constexpr DeviceKind kind = DeviceKind::SolarPanel;
  double output_w = 0.0;
  friend bool operator==(const SolarPanelState&, const SolarPanelState&) = default;
};

struct BatteryState {
  static constexpr DeviceKind kind = DeviceKind::Battery;
  double charge_wh = 0.0;
  friend bool operator==(const BatteryState&, const BatteryState&) = default;
};

struct PowerMeterState {
  static constexpr DeviceKind kind = DeviceKind::PowerMeter;
  double reading_w = 0.0;
  friend bool operator==(const PowerMeterState&, const PowerMeterState&) = default;
};

using AirConditionerState = SwitchState<DeviceKind::AirConditioner>;
using SirenState = SwitchState<DeviceKind::Siren>;
using FireSprinklerState = SwitchState<DeviceKind::FireSprinkler>;
using CctvCameraState = SwitchState<DeviceKind::CctvCamera>;
using PrinterState = SwitchState<DeviceKind::Printer>;
using SmokeDetectorState = DetectorState<DeviceKind::SmokeDetector>;
using FireDetectorState = DetectorState<DeviceKind::FireDetector>;
using SmokeSourceState = SourceState<DeviceKind::SmokeSource>;
using FireSourceState = SourceState<DeviceKind::FireSource>;

// Alternative order matches DeviceKind, so index() is the kind.
using DeviceState = std::variant<LightState, FanState, WindowState, AirConditionerState, DoorState, SirenState,
                                 FireSprinklerState, SmokeDetectorState, FireDetectorState, MotionDetectorState,
                                 CctvCameraState, ThermostatState, SolarPanelState, BatteryState, PowerMeterState,
                                 SmokeSourceState, FireSourceState, PrinterState>;

namespace detail {
template <std::size_t... I>
constexpr bool variant_matches_kinds(std::index_sequence<I...>) {
  return ((std::variant_alternative_t<I, DeviceState>::kind == static_cast<DeviceKind>(I)) && ...);
}
static_assert(std::variant_size_v<DeviceState> == kAllKinds.size());
static_assert(variant_matches_kinds(std::make_index_sequence<std::variant_size_v<DeviceState>>{}));

template <std::size_t... I>
DeviceState default_state_impl(DeviceKind k, std::index_sequence<I...>) {
  DeviceState out;
  ((static_cast<std::size_t>(k) == I ? (out = std::variant_alternative_t<I, DeviceState>{}, true) : false) || ...);
  return out;
}
}  // namespace detail

inline DeviceKind kind_of(const DeviceState& s) { return static_cast<DeviceKind>(s.index()); }

inline DeviceState default_state(DeviceKind k) {
  return detail::default_state_impl(k, std::make_index_sequence<std::variant_size_v<DeviceState>>{});
}

// ---------------------------------------------------------------------------
// Commands

enum class Action : std::uint8_t { TurnOn, TurnOff, SetSpeed, Open, Close, Lock, Unlock, Arm, Disarm };

inline constexpr std::array<Action, 9> kAllActions = {Action::TurnOn, Action::TurnOff, Action::SetSpeed,
                                                      Action::Open,   Action::Close,   Action::Lock,
                                                      Action::Unlock, Action::Arm,     Action::Disarm};

constexpr std::string_view to_string(Action a) {
  switch (a) {
    case Action::TurnOn: return "TurnOn";
    case Action::TurnOff: return "TurnOff";
    case Action::SetSpeed: return "SetSpeed";
    case Action::Open: return "Open";
    case Action::Close: return "Close";
    case Action::Lock: return "Lock";
    case Action::Unlock: return "Unlock";
    case Action::Arm: return "Arm";
    case Action::Disarm: return "Disarm";
  }
  return "?";
}

inline std::optional<Action> action_from_string(std::string_view s) {
  for (Action a : kAllActions)
    if (to_string(a) == s) return a;
  return std::nullopt;
}

// One concrete command. `arg` is only used by SetSpeed (Off|Low|High).
struct CommandSpec {
  Action action{};
  std::optional<std::string> arg;
  friend bool operator==(const CommandSpec&, const CommandSpec&) = default;
};

struct Command {
  DeviceId target;
  Action action{};
  std::optional<std::string> arg;
  friend bool operator==(const Command&, const Command&) = default;

  CommandSpec spec() const { return {action, arg}; }
};

inline std::string to_string(const CommandSpec& c) {
  std::string s(to_string(c.action));
  if (c.arg) s += "(" + *c.arg + ")";
  return s;
}

// Closed vocabulary of actions per kind. Sensors, sources and the power
// chain are not remotely actuated.
inline std::span<const Action> command_set(DeviceKind k) {
  static constexpr std::array<Action, 2> on_off = {Action::TurnOn, Action::TurnOff};
  static constexpr std::array<Action, 1> speed = {Action::SetSpeed};
  static constexpr std::array<Action, 2> open_close = {Action::Open, Action::Close};
  static constexpr std::array<Action, 4> door = {Action::Open, Action::Close, Action::Lock, Action::Unlock};
  static constexpr std::array<Action, 2> arm = {Action::Arm, Action::Disarm};
  switch (k) {
    case DeviceKind::Light:
    case DeviceKind::AirConditioner:
    case DeviceKind::Siren:
    case DeviceKind::FireSprinkler:
    case DeviceKind::CctvCamera:
    case DeviceKind::Printer: return on_off;
    case DeviceKind::Fan: return speed;
    case DeviceKind::Window: return open_close;
    case DeviceKind::Door: return door;
    case DeviceKind::MotionDetector: return arm;
    default: return {};
  }
}

inline bool in_command_set(DeviceKind k, Action a) {
  auto set = command_set(k);
  return std::find(set.begin(), set.end(), a) != set.end();
}

namespace detail {

[[noreturn]] inline void illegal_action(DeviceKind k, const CommandSpec& c, std::string_view why = {}) {
  std::string msg = std::string(to_string(c.action)) + " is not valid for " + std::string(to_string(k));
  if (!why.empty()) msg += " (" + std::string(why) + ")";
  throw Error(Errc::IllegalAction, msg);
}

inline void expect_no_arg(DeviceKind k, const CommandSpec& c) {
  if (c.arg) illegal_action(k, c, "takes no argument");
}

template <class S>
S apply_switch(S s, DeviceKind k, const CommandSpec& c) {
  expect_no_arg(k, c);
  s.on = c.action == Action::TurnOn;
  return s;
}

}  // namespace detail

// Pure transition function. Set-style actions are idempotent: a command the
// state already satisfies returns the state unchanged.
inline DeviceState apply_command(const DeviceState& state, const CommandSpec& cmd) {
  const DeviceKind k = kind_of(state);
  if (!in_command_set(k, cmd.action)) detail::illegal_action(k, cmd);

  return std::visit(
      overloaded{
          [&](const LightState& s) -> DeviceState { return detail::apply_switch(s, k, cmd); },
          [&](const AirConditionerState& s) -> DeviceState { return detail::apply_switch(s, k, cmd); },
          [&](const SirenState& s) -> DeviceState { return detail::apply_switch(s, k, cmd); },
          [&](const FireSprinklerState& s) -> DeviceState { return detail::apply_switch(s, k, cmd); },
          [&](const CctvCameraState& s) -> DeviceState { return detail::apply_switch(s, k, cmd); },
          [&](const PrinterState& s) -> DeviceState { return detail::apply_switch(s, k, cmd); },
          [&](FanState s) -> DeviceState {
            if (!cmd.arg) detail::illegal_action(k, cmd, "SetSpeed needs Off|Low|High");
            auto speed = fan_speed_from_string(*cmd.arg);
            if (!speed) detail::illegal_action(k, cmd, "unknown speed '" + *cmd.arg + "'");
            s.speed = *speed;
            return s;
          },
          [&](WindowState s) -> DeviceState {
            detail::expect_no_arg(k, cmd);
            s.open = cmd.action == Action::Open;
            return s;
          },
          [&](DoorState s) -> DeviceState {
            detail::expect_no_arg(k, cmd);
            switch (cmd.action) {
              case Action::Open:
                if (s.locked) throw Error(Errc::IllegalTransition, "cannot open a locked door");
                s.open = true;
                break;
              case Action::Close: s.open = false; break;
              case Action::Lock:
                if (s.open) throw Error(Errc::IllegalTransition, "cannot lock an open door");
                s.locked = true;
                break;
              case Action::Unlock: s.locked = false; break;
              default: detail::illegal_action(k, cmd);
            }
            return s;
          },
          [&](MotionDetectorState s) -> DeviceState {
            detail::expect_no_arg(k, cmd);
            s.armed = cmd.action == Action::Arm;
            if (!s.armed) s.motion = false;
            return s;
          },
          [&](const auto&) -> DeviceState { detail::illegal_action(k, cmd); },
      },
      state);
}

inline DeviceState apply_command(const DeviceState& state, const Command& cmd) {
  return apply_command(state, cmd.spec());
}

// Commands that would change `state`. apply_command succeeds for every
// member; any other action either errors or is a no-op on this state.
inline std::vector<CommandSpec> legal_commands(const DeviceState& state) {
  std::vector<CommandSpec> out;
  const DeviceKind k = kind_of(state);
  for (Action a : command_set(k)) {
    std::vector<CommandSpec> candidates;
    if (a == Action::SetSpeed) {
      for (FanSpeed s : {FanSpeed::Off, FanSpeed::Low, FanSpeed::High})
        candidates.push_back({a, std::string(to_string(s))});
    } else {
      candidates.push_back({a, std::nullopt});
    }
    for (auto& c : candidates) {
      try {
        if (apply_command(state, c) != state) out.push_back(std::move(c));
      } catch (const Error&) {
      }
    }
  }
  return out;
}

inline std::vector<CommandSpec> legal_commands(DeviceKind kind, const DeviceState& state) {
  if (kind_of(state) != kind)
    throw std::invalid_argument("state of kind " + std::string(to_string(kind_of(state))) + " passed as " +
                                std::string(to_string(kind)));
  return legal_commands(state);
}

// ---------------------------------------------------------------------------
// JSON

inline json state_to_json(const DeviceState& state) {
  return std::visit(
      overloaded{
          [](const LightState& s) { return json{{"on", s.on}, {"source", std::string(to_string(s.source))}}; },
          [](const FanState& s) { return json{{"speed", std::string(to_string(s.speed))}}; },
          [](const WindowState& s) { return json{{"open", s.open}}; },
          [](const DoorState& s) { return json{{"open", s.open}, {"locked", s.locked}}; },
          [](const MotionDetectorState& s) { return json{{"armed", s.armed}, {"motion", s.motion}}; },
          [](const ThermostatState& s) { return json{{"reading_c", s.reading_c}}; },
          [](const SolarPanelState& s) { return json{{"output_w", s.output_w}}; },
          [](const BatteryState& s) { return json{{"charge_wh", s.charge_wh}}; },
          [](const PowerMeterState& s) { return json{{"reading_w", s.reading_w}}; },
          []<DeviceKind K>(const SwitchState<K>& s) { return json{{"on", s.on}}; },
          []<DeviceKind K>(const DetectorState<K>& s) { return json{{"triggered", s.triggered}}; },
          []<DeviceKind K>(const SourceState<K>& s) { return json{{"active", s.active}}; },
      },
      state);
}

// Missing fields keep the kind's defaults so manifests may list only what
// differs; present fields must have the right type and no unknown keys.
inline DeviceState state_from_json(DeviceKind kind, const json& j, Errc code = Errc::InvalidManifest) {
  DeviceState state = default_state(kind);
  if (j.is_null()) return state;
  if (!j.is_object()) throw Error(code, "device state must be an object");
  const json defaults = state_to_json(state);
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!defaults.contains(it.key()))
      throw Error(code, "unknown field '" + it.key() + "' for " + std::string(to_string(kind)));

  auto get_bool = [&](const char* key, bool fallback) {
    return j.contains(key) ? detail::require_bool(j, key, code) : fallback;
  };
  auto get_num = [&](const char* key, double fallback) {
    return j.contains(key) ? detail::require_number(j, key, code) : fallback;
  };

  std::visit(overloaded{
                 [&](LightState& s) {
                   s.on = get_bool("on", s.on);
                   if (j.contains("source")) {
                     auto src = detail::require_string(j, "source", code);
                     if (src == "Mains") s.source = PowerSource::Mains;
                     else if (src == "Battery") s.source = PowerSource::Battery;
                     else throw Error(code, "unknown light source '" + src + "'");
                   }
                 },
                 [&](FanState& s) {
                   if (j.contains("speed")) {
                     auto v = detail::require_string(j, "speed", code);
                     auto sp = fan_speed_from_string(v);
                     if (!sp) throw Error(code, "unknown fan speed '" + v + "'");
                     s.speed = *sp;
                   }
                 },
                 [&](WindowState& s) { s.open = get_bool("open", s.open); },
                 [&](DoorState& s) {
                   s.open = get_bool("open", s.open);
                   s.locked = get_bool("locked", s.locked);
                   if (s.open && s.locked) throw Error(code, "door cannot be open and locked");
                 },
                 [&](MotionDetectorState& s) {
                   s.armed = get_bool("armed", s.armed);
                   s.motion = get_bool("motion", s.motion);
                 },
                 [&](ThermostatState& s) { s.reading_c = get_num("reading_c", s.reading_c); },
                 [&](SolarPanelState& s) {
                   s.output_w = get_num("output_w", s.output_w);
                   if (s.output_w < 0) throw Error(code, "solar output must be >= 0");
                 },
                 [&](BatteryState& s) { s.charge_wh = get_num("charge_wh", s.charge_wh); },
                 [&](PowerMeterState& s) { s.reading_w = get_num("reading_w", s.reading_w); },
                 [&]<DeviceKind K>(SwitchState<K>& s) { s.on = get_bool("on", s.on); },
                 [&]<DeviceKind K>(DetectorState<K>& s) { s.triggered = get_bool("triggered", s.triggered); },
                 [&]<DeviceKind K>(SourceState<K>& s) { s.active = get_bool("active", s.active); },
             },
             state);
  return state;
}

// ---------------------------------------------------------------------------
// Devices as deployed: state plus static parameters.

struct DeviceParams {
  std::optional<DeviceId> backup;      // Light: battery that powers it when mains is down
  std::optional<double> capacity_wh;   // Battery: overrides EnvParams::battery_capacity_wh
  std::optional<double> load_w;        // Light: overrides EnvParams::light_load_w
  bool always_on = false;              // 24-hour device; rules never switch it off
  friend bool operator==(const DeviceParams&, const DeviceParams&) = default;
};

inline json device_params_to_json(const DeviceParams& p) {
  json j = json::object();
  if (p.backup) j["backup"] = p.backup->str();
  if (p.capacity_wh) j["capacity_wh"] = *p.capacity_wh;
  if (p.load_w) j["load_w"] = *p.load_w;
  if (p.always_on) j["always_on"] = true;
  return j;
}

inline DeviceParams device_params_from_json(const json& j, Errc code = Errc::InvalidManifest) {
  DeviceParams p;
  if (j.is_null()) return p;
  if (!j.is_object()) throw Error(code, "device params must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (key == "backup") {
      auto s = detail::require_string(j, "backup", code);
      if (!DeviceId::valid(s)) throw Error(code, "invalid backup id '" + s + "'");
      p.backup = DeviceId(s);
    } else if (key == "capacity_wh") {
      p.capacity_wh = detail::require_number(j, "capacity_wh", code);
    } else if (key == "load_w") {
      p.load_w = detail::require_number(j, "load_w", code);
    } else if (key == "always_on") {
      p.always_on = detail::require_bool(j, "always_on", code);
    } else {
      throw Error(code, "unknown device param '" + key + "'");
    }
  }
  return p;
}

struct Device {
  DeviceState state;
  DeviceParams params;

  DeviceKind kind() const { return kind_of(state); }
  friend bool operator==(const Device&, const Device&) = default;
};

// Ordered by id; iteration order is part of the determinism contract.
using DeviceTable = std::map<DeviceId, Device>;

template <class S>
const S* state_as(const DeviceTable& table, const DeviceId& id) {
  auto it = table.find(id);
  return it == table.end() ? nullptr : std::get_if<S>(&it->second.state);
}

template <class S, class Fn>
void for_each_of(const DeviceTable& table, Fn&& fn) {
  for (const auto& [id, dev] : table)
    if (const S* s = std::get_if<S>(&dev.state)) fn(id, *s, dev.params);
}

}  // namespace shopsim
