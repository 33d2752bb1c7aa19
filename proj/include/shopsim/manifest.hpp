#pragma once

#include <set>
#include <string>
#include <vector>

#include "shopsim/devices.hpp"

namespace shopsim {

struct ManifestEntry {
  DeviceId id;
  DeviceState initial;
  DeviceParams params;

  DeviceKind kind() const { return kind_of(initial); }
  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DeviceManifest {
  std::vector<ManifestEntry> devices;

  std::size_t count(DeviceKind k) const {
    return static_cast<std::size_t>(
        std::count_if(devices.begin(), devices.end(), [k](const ManifestEntry& e) { return e.kind() == k; }));
  }
  const ManifestEntry* find(const DeviceId& id) const {
    for (const auto& e : devices)
      if (e.id == id) return &e;
    return nullptr;
  }
  friend bool operator==(const DeviceManifest&, const DeviceManifest&) = default;
};

// Checks id uniqueness and cross-references. Battery capacity bounds are
// checked later against the effective EnvParams.
inline void validate(const DeviceManifest& m) {
  std::set<DeviceId> seen;
  for (const auto& e : m.devices)
    if (!seen.insert(e.id).second) throw Error(Errc::InvalidManifest, "duplicate device id '" + e.id.str() + "'");

  for (const auto& e : m.devices) {
    const auto& p = e.params;
    if (p.backup) {
      if (e.kind() != DeviceKind::Light)
        throw Error(Errc::InvalidManifest, e.id.str() + ": only lights take a battery backup");
      const ManifestEntry* b = m.find(*p.backup);
      if (!b || b->kind() != DeviceKind::Battery)
        throw Error(Errc::InvalidManifest, e.id.str() + ": backup '" + p.backup->str() + "' is not a battery");
    }
    if (p.capacity_wh && (e.kind() != DeviceKind::Battery || *p.capacity_wh <= 0))
      throw Error(Errc::InvalidManifest, e.id.str() + ": capacity_wh applies to batteries and must be > 0");
    if (p.load_w && (e.kind() != DeviceKind::Light || *p.load_w < 0))
      throw Error(Errc::InvalidManifest, e.id.str() + ": load_w applies to lights and must be >= 0");
    if (auto* d = std::get_if<DoorState>(&e.initial); d && d->open && d->locked)
      throw Error(Errc::InvalidManifest, e.id.str() + ": door cannot be open and locked");
    if (auto* b = std::get_if<BatteryState>(&e.initial); b && b->charge_wh < 0)
      throw Error(Errc::InvalidManifest, e.id.str() + ": negative battery charge");
  }
}

inline DeviceTable instantiate(const DeviceManifest& m) {
  validate(m);
  DeviceTable table;
  for (const auto& e : m.devices) table.emplace(e.id, Device{e.initial, e.params});
  return table;
}

inline json manifest_to_json(const DeviceManifest& m) {
  json arr = json::array();
  for (const auto& e : m.devices) {
    json rec{{"id", e.id.str()}, {"kind", std::string(to_string(e.kind()))}, {"state", state_to_json(e.initial)}};
    json p = device_params_to_json(e.params);
    if (!p.empty()) rec["params"] = std::move(p);
    arr.push_back(std::move(rec));
  }
  return arr;
}

inline DeviceManifest manifest_from_json(const json& j) {
  constexpr Errc code = Errc::InvalidManifest;
  if (!j.is_array()) throw Error(code, "manifest must be a JSON array of device records");
  DeviceManifest m;
  for (const json& rec : j) {
    auto id = detail::require_string(rec, "id", code);
    if (!DeviceId::valid(id)) throw Error(code, "device id '" + id + "' must match [a-z0-9-]{1,32}");
    auto kind_name = detail::require_string(rec, "kind", code);
    auto kind = kind_from_string(kind_name);
    if (!kind) throw Error(code, id + ": unknown kind '" + kind_name + "'");
    for (auto it = rec.begin(); it != rec.end(); ++it)
      if (it.key() != "id" && it.key() != "kind" && it.key() != "state" && it.key() != "params")
        throw Error(code, id + ": unknown field '" + it.key() + "'");
    ManifestEntry e{DeviceId(id), state_from_json(*kind, rec.value("state", json()), code),
                    device_params_from_json(rec.value("params", json()), code)};
    m.devices.push_back(std::move(e));
  }
  validate(m);
  return m;
}

inline DeviceManifest load_manifest(const std::string& path) {
  return manifest_from_json(parse_json(read_file(path), Errc::InvalidManifest));
}

// The simulated shop: two cameras watched by one motion detector, two
// lights (light-1 battery-backed and lit around the clock), the shutter
// door, climate actuators, the fire/smoke safety chain, the solar-battery
// power chain and the two hazard stimuli. Starts closed for the night.
inline DeviceManifest default_manifest() {
  DeviceManifest m;
  auto add = [&](const char* id, DeviceState s, DeviceParams p = {}) {
    m.devices.push_back({DeviceId(id), std::move(s), std::move(p)});
  };
  DeviceParams around_the_clock;
  around_the_clock.always_on = true;
  DeviceParams backed = around_the_clock;
  backed.backup = DeviceId("battery-1");
  add("cctv-1", CctvCameraState{true}, around_the_clock);
  add("cctv-2", CctvCameraState{true}, around_the_clock);
  add("motion-1", MotionDetectorState{true, false});
  add("light-0", LightState{false, PowerSource::Mains});
  add("light-1", LightState{true, PowerSource::Mains}, backed);
  add("door-1", DoorState{false, true});
  add("fan-1", FanState{FanSpeed::Off});
  add("fan-2", FanState{FanSpeed::Off});
  add("window-1", WindowState{false});
  add("window-2", WindowState{false});
  add("window-3", WindowState{false});
  add("window-4", WindowState{false});
  add("ac-1", AirConditionerState{false});
  add("smoke-detector-1", SmokeDetectorState{false});
  add("fire-detector-1", FireDetectorState{false});
  add("sprinkler-1", FireSprinklerState{false});
  add("siren-1", SirenState{false});
  add("solar-1", SolarPanelState{0.0});
  add("battery-1", BatteryState{600.0});
  add("meter-1", PowerMeterState{0.0});
  add("car-1", SmokeSourceState{false});
  add("heater-1", FireSourceState{false});
  add("printer-1", PrinterState{false});
  add("thermostat-1", ThermostatState{20.0});
  return m;
}

}  // namespace shopsim
