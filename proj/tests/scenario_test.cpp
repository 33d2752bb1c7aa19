#include <gtest/gtest.h>

#include "shopsim/scenario.hpp"
#include "test_support.hpp"

using namespace shopsim;

namespace {

Errc parse_error(const char* text) {
  try {
    parse_scenario(text, default_manifest());
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "accepted: " << text;
  return Errc::UsageError;
}

}  // namespace

TEST(Scenario, ParsesMinimalDocument) {
  const auto s = parse_scenario(R"({"duration_ticks": 5})", default_manifest());
  EXPECT_EQ(s.name, "unnamed");
  EXPECT_EQ(s.dt_s, 1.0);
  EXPECT_EQ(s.duration_ticks, 5u);
  EXPECT_TRUE(s.injections.empty());
  EXPECT_TRUE(s.schedule().empty());
}

TEST(Scenario, ShippedFilesLoad) {
  for (const auto& name : shopsim::testing::shipped_scenarios()) {
    const auto s = shopsim::testing::shipped(name);
    EXPECT_EQ(s.name, name);
    EXPECT_GT(s.duration_ticks, 0u);
  }
}

TEST(Scenario, FireScenarioIgnitesHeaterAtTickTen) {
  const auto s = shopsim::testing::shipped("fig3-fire");
  ASSERT_EQ(s.injections.size(), 1u);
  EXPECT_EQ(s.injections[0].tick, 10u);
  const auto* src = std::get_if<InjectSource>(&s.injections[0].injection);
  ASSERT_TRUE(src);
  EXPECT_EQ(src->kind, DeviceKind::FireSource);
  EXPECT_EQ(src->device->str(), "heater-1");
  EXPECT_TRUE(src->on);
}

TEST(Scenario, ScheduleOrdersProfileMainsThenInjections) {
  const auto s = parse_scenario(R"({"duration_ticks": 3,
    "injections": [{"tick": 1, "type": "motion"}],
    "mains_schedule": [{"tick": 1, "on": false}],
    "outdoor_profile": [{"tick": 1, "outdoor_c": 7.5}]})",
                                default_manifest());
  const auto sched = s.schedule();
  ASSERT_EQ(sched.at(1).size(), 3u);
  EXPECT_TRUE(std::holds_alternative<InjectOutdoor>(sched.at(1)[0]));
  EXPECT_TRUE(std::holds_alternative<InjectMains>(sched.at(1)[1]));
  EXPECT_TRUE(std::holds_alternative<InjectMotion>(sched.at(1)[2]));
}

TEST(Scenario, TickAtOrPastDurationIsRejected) {
  EXPECT_EQ(parse_error(R"({"duration_ticks": 10, "injections": [{"tick": 10, "type": "motion"}]})"),
            Errc::InjectionAfterEnd);
  EXPECT_EQ(parse_error(R"({"duration_ticks": 10, "mains_schedule": [{"tick": 11, "on": true}]})"),
            Errc::InjectionAfterEnd);
  EXPECT_NO_THROW(parse_scenario(R"({"duration_ticks": 10, "injections": [{"tick": 9, "type": "motion"}]})",
                                 default_manifest()));
}

TEST(Scenario, UnknownDevicesAndKinds) {
  EXPECT_EQ(parse_error(R"({"duration_ticks": 5, "injections":
      [{"tick": 1, "type": "command", "device_id": "door-9", "action": "Open"}]})"),
            Errc::UnknownDevice);
  EXPECT_EQ(parse_error(R"({"duration_ticks": 5, "initial": {"devices": {"ghost-1": {"on": true}}}})"),
            Errc::UnknownDevice);
  // a fire injection aimed at the smoke source is a kind mismatch
  EXPECT_NE(parse_error(R"({"duration_ticks": 5, "injections":
      [{"tick": 1, "type": "fire_source", "device_id": "car-1", "on": true}]})"),
            Errc::UsageError);
}

TEST(Scenario, MalformedDocuments) {
  EXPECT_EQ(parse_error("{"), Errc::ParseError);
  EXPECT_EQ(parse_error("[]"), Errc::ParseError);
  EXPECT_EQ(parse_error(R"({"duration_ticks": -1})"), Errc::ParseError);
  EXPECT_EQ(parse_error(R"({"duration_ticks": 5, "dt_s": 0})"), Errc::ParseError);
  EXPECT_EQ(parse_error(R"({"duration_ticks": 5, "speed": 2})"), Errc::ParseError);
  EXPECT_EQ(parse_error(R"({"duration_ticks": 5, "initial": {"time_of_day_s": 86400}})"), Errc::ParseError);
  EXPECT_EQ(parse_error(R"({"duration_ticks": 5, "initial": {"devices": {"door-1": {"open": true}}}})"),
            Errc::ParseError);  // open and still locked
  EXPECT_EQ(parse_error(R"({"duration_ticks": 5, "injections": [{"tick": 1, "type": "quake"}]})"), Errc::ParseError);
  EXPECT_EQ(parse_error(R"({"duration_ticks": 5, "injections": [{"tick": 1, "type": "mains", "on": true, "x": 1}]})"),
            Errc::ParseError);
}

TEST(Scenario, JsonRoundTrip) {
  for (const auto& name : shopsim::testing::shipped_scenarios()) {
    const auto s = shopsim::testing::shipped(name);
    EXPECT_EQ(scenario_from_json(scenario_to_json(s), default_manifest()), s) << name;
  }
}

TEST(Injection, JsonRoundTripsEveryVariant) {
  const std::vector<Injection> all = {
      InjectCommand{Command{DeviceId("fan-1"), Action::SetSpeed, "High"}},
      InjectMotion{},
      InjectMotion{DeviceId("motion-1")},
      InjectSource{DeviceKind::FireSource, DeviceId("heater-1"), true},
      InjectSource{DeviceKind::SmokeSource, std::nullopt, false},
      InjectMains{false},
      InjectOutdoor{-3.25},
  };
  for (const auto& inj : all) EXPECT_EQ(injection_from_json(injection_to_json(inj)), inj);
}
