#include <gtest/gtest.h>

#include <random>

#include "shopsim/environment.hpp"
#include "shopsim/manifest.hpp"

using namespace shopsim;

// Expected values below were computed independently (plain Python floats,
// same operation order) and frozen.

TEST(Thermal, LeakOnlyStep) {
  EnvParams p;
  EXPECT_EQ(thermal_update(20.0, 30.0, 0.0, FanSpeed::Off, false, false, 50.0, p), 21.0);
}

TEST(Thermal, WindowsAndFanAddExchange) {
  EnvParams p;
  EXPECT_DOUBLE_EQ(thermal_update(20.0, 30.0, 0.5, FanSpeed::High, false, false, 1.0, p), 20.12);
  EXPECT_DOUBLE_EQ(thermal_update(25.0, 15.0, 1.0, FanSpeed::Low, true, false, 10.0, p), 23.1);
}

TEST(Thermal, FireHeats) {
  EnvParams p;
  EXPECT_DOUBLE_EQ(thermal_update(20.0, 20.0, 0.0, FanSpeed::Off, false, true, 2.0, p), 20.1);
}

TEST(Smoke, SourceAgainstVentAndDecay) {
  EnvParams p;
  EXPECT_DOUBLE_EQ(smoke_update(0.0, 1, 0.5, 3.0, p), 0.19500000000000006);
  EXPECT_EQ(smoke_update(0.0, 0, 1.0, 5.0, p), 0.0);
  EXPECT_EQ(smoke_update(0.95, 3, 0.0, 10.0, p), 1.0);
}

TEST(Solar, HalfSineDay) {
  EnvParams p;
  EXPECT_EQ(solar_output(12 * 3600.0, p), 150.0);
  EXPECT_EQ(solar_output(0.0, p), 0.0);
  EXPECT_EQ(solar_output(6 * 3600.0, p), 0.0);
  EXPECT_EQ(solar_output(18 * 3600.0, p), 0.0);
  EXPECT_DOUBLE_EQ(solar_output(9 * 3600.0, p), 106.06601717798213);
  EXPECT_DOUBLE_EQ(solar_output(15 * 3600.0, p), 106.06601717798213);
}

TEST(Power, BatteryDrainsOnlyWithoutMains) {
  EnvParams p;
  double b = 100.0;
  for (int i = 0; i < 3600; ++i) b = power_step(b, 0.0, false, 10.0, 1.0, p).battery_wh;
  EXPECT_NEAR(b, 90.0, 1e-6);
  EXPECT_DOUBLE_EQ(b, 89.99999999999204);
  EXPECT_EQ(power_step(100.0, 0.0, true, 10.0, 1.0, p).battery_wh, 100.0);
}

TEST(Power, SolarChargesThroughEfficiencyAndClamps) {
  EnvParams p;
  double b = 100.0;
  for (int i = 0; i < 10; ++i) b = power_step(b, 150.0, true, 0.0, 30.0, p).battery_wh;
  EXPECT_DOUBLE_EQ(b, 111.25);
  EXPECT_EQ(power_step(599.9, 150.0, true, 0.0, 60.0, p).battery_wh, 600.0);
  EXPECT_EQ(power_step(0.001, 0.0, false, 10.0, 60.0, p).battery_wh, 0.0);
  EXPECT_EQ(power_step(1.0, 42.0, true, 0.0, 1.0, p).meter_w, 42.0);
}

TEST(Params, ValidationAndJson) {
  EnvParams p;
  EXPECT_NO_THROW(validate(p, 1.0));
  EXPECT_THROW(validate(p, 0.0), Error);
  EXPECT_THROW(validate(p, 100.0), Error);  // explicit Euler would overshoot
  EnvParams bad = p;
  bad.clear_smoke = 0.5;
  EXPECT_THROW(validate(bad, 1.0), Error);
  bad = p;
  bad.k_leak = -1;
  EXPECT_THROW(validate(bad, 1.0), Error);

  EXPECT_EQ(env_params_from_json(env_params_to_json(p)), p);
  EXPECT_EQ(env_params_from_json(json{{"p_peak_w", 200}}).p_peak_w, 200.0);
  EXPECT_THROW(env_params_from_json(json{{"p_peek_w", 200}}), Error);
}

namespace {

DeviceTable shop() { return instantiate(default_manifest()); }

template <class S>
S& state(DeviceTable& t, const char* id) {
  return std::get<S>(t.at(DeviceId(id)).state);
}

}  // namespace

TEST(Fire, IgnitesAndIsExtinguishedAfterThirtySprinklerSeconds) {
  EnvParams p;
  DeviceTable t = shop();
  state<FireSourceState>(t, "heater-1").active = true;
  EnvState e;
  e = step_environment(e, t, 1.0, p);
  EXPECT_TRUE(e.fire_active);
  state<FireSprinklerState>(t, "sprinkler-1").on = true;
  int seconds = 0;
  while (e.fire_active && seconds < 100) {
    e = step_environment(e, t, 1.0, p);
    ++seconds;
  }
  EXPECT_EQ(seconds, 30);
  // Source still active, sprinkler still on: no re-ignition.
  for (int i = 0; i < 50; ++i) e = step_environment(e, t, 1.0, p);
  EXPECT_FALSE(e.fire_active);
  // Sprinkler off resets suppression, so the live source re-ignites.
  state<FireSprinklerState>(t, "sprinkler-1").on = false;
  e = step_environment(e, t, 1.0, p);
  EXPECT_TRUE(e.fire_active);
}

TEST(Sensors, SmokeDetectorHysteresis) {
  EnvParams p;
  DeviceTable t = shop();
  EnvState e;
  auto triggered = [&](double smoke) {
    e.smoke = smoke;
    t = refresh_sensors(e, t, 1.0, p);
    return state<SmokeDetectorState>(t, "smoke-detector-1").triggered;
  };
  EXPECT_FALSE(triggered(0.29));
  EXPECT_TRUE(triggered(0.30));
  EXPECT_TRUE(triggered(0.15));
  EXPECT_TRUE(triggered(0.10));
  EXPECT_FALSE(triggered(0.09));
  EXPECT_FALSE(triggered(0.25));
}

TEST(Sensors, MotionNeedsArmedDetectorAndPulse) {
  EnvParams p;
  DeviceTable t = shop();
  EnvState e;
  const std::set<DeviceId> pulse = {DeviceId("motion-1")};
  t = refresh_sensors(e, t, 1.0, p, pulse);
  EXPECT_TRUE(state<MotionDetectorState>(t, "motion-1").motion);
  t = refresh_sensors(e, t, 1.0, p);
  EXPECT_FALSE(state<MotionDetectorState>(t, "motion-1").motion);
  state<MotionDetectorState>(t, "motion-1").armed = false;
  t = refresh_sensors(e, t, 1.0, p, pulse);
  EXPECT_FALSE(state<MotionDetectorState>(t, "motion-1").motion);
}

TEST(Sensors, MeterThermostatAndLightsFollowEnvironment) {
  EnvParams p;
  DeviceTable t = shop();
  EnvState e;
  e.time_of_day_s = 12 * 3600.0;
  e.indoor_c = 23.5;
  e.mains_available = false;
  state<LightState>(t, "light-0").on = true;
  t = refresh_sensors(e, t, 1.0, p);
  EXPECT_EQ(state<PowerMeterState>(t, "meter-1").reading_w, 150.0);
  EXPECT_EQ(state<SolarPanelState>(t, "solar-1").output_w, 150.0);
  EXPECT_EQ(state<ThermostatState>(t, "thermostat-1").reading_c, 23.5);
  EXPECT_FALSE(state<LightState>(t, "light-0").on);  // unbacked, no mains
  EXPECT_TRUE(state<LightState>(t, "light-1").on);
  EXPECT_EQ(state<LightState>(t, "light-1").source, PowerSource::Battery);
}

// Property: without AC or fire the indoor temperature never leaves the
// interval spanned by its start value and the outdoor temperature, and smoke
// always stays in [0, 1], for any valid dt and actuator mix.
TEST(EnvironmentProperties, BoundedUpdates) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> temp(-30, 50), frac(0, 1), smoke(0, 1);
  EnvParams p;
  const double max_dt = 1.0 / (p.k_leak + p.k_window * p.fan_vent_high);
  for (int i = 0; i < 50000; ++i) {
    const double in = temp(rng), out = temp(rng), dt = frac(rng) * max_dt * 0.999 + 1e-6;
    const auto fan = static_cast<FanSpeed>(rng() % 3);
    const double next = thermal_update(in, out, frac(rng), fan, false, false, dt, p);
    EXPECT_GE(next, std::min(in, out) - 1e-9);
    EXPECT_LE(next, std::max(in, out) + 1e-9);
    const double s = smoke_update(smoke(rng), static_cast<int>(rng() % 4), frac(rng), dt, p);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
}
