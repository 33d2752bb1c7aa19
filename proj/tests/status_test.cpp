#include <gtest/gtest.h>

#include <sstream>

#include "shopsim/status.hpp"
#include "test_support.hpp"

using namespace shopsim;

namespace {

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Status, DefaultShop) {
  const World w = make_world(default_manifest());
  const auto l = lines(format_status(w));
  ASSERT_EQ(l.size(), 1u + w.devices.size());
  EXPECT_EQ(l[0], "tick 0 time 00:00:00 indoor 20.00C outdoor 20.00C smoke 0.000 fire no mains on");
  EXPECT_EQ(l[1], "ac-1 AirConditioner off");
  const std::string all = format_status(w);
  EXPECT_NE(all.find("\ndoor-1 Door closed locked\n"), std::string::npos);
  EXPECT_NE(all.find("\nlight-1 Light on\n"), std::string::npos);
  EXPECT_NE(all.find("\nmotion-1 MotionDetector armed\n"), std::string::npos);
  EXPECT_NE(all.find("\nheater-1 FireSource inactive\n"), std::string::npos);
}

TEST(Status, AfterFireScenario) {
  const auto r = run_scenario(make_world(default_manifest()), shopsim::testing::shipped("fig3-fire"));
  const std::string s = format_status(r.world);
  EXPECT_EQ(s.rfind("tick 120 time 12:02:00 ", 0), 0u) << s;
  EXPECT_NE(s.find("\nsiren-1 Siren on\n"), std::string::npos) << s;
  EXPECT_NE(s.find("\nheater-1 FireSource active\n"), std::string::npos) << s;
  EXPECT_EQ(s, format_status(run_scenario(make_world(default_manifest()), shopsim::testing::shipped("fig3-fire")).world));
}

TEST(Status, BatteryLightAndMeterFormatting) {
  World w = make_world(default_manifest());
  w.env.mains_available = false;
  std::get<BatteryState>(w.devices.at(DeviceId("battery-1")).state).charge_wh = 12.3456;
  std::get<LightState>(w.devices.at(DeviceId("light-1")).state).source = PowerSource::Battery;
  const std::string s = format_status(w);
  EXPECT_NE(s.find("mains off\n"), std::string::npos);
  EXPECT_NE(s.find("\nbattery-1 Battery 12.346Wh\n"), std::string::npos) << s;
  EXPECT_NE(s.find("\nlight-1 Light on battery\n"), std::string::npos);
  EXPECT_NE(s.find("\nmeter-1 PowerMeter 0.00W\n"), std::string::npos) << s;
}
