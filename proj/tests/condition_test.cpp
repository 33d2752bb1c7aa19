#include <gtest/gtest.h>

#include "shopsim/condition.hpp"
#include "shopsim/manifest.hpp"

using namespace shopsim;

namespace {
DeviceTable shop() { return instantiate(default_manifest()); }
}  // namespace

TEST(Condition, TrueAlwaysHolds) {
  EXPECT_TRUE(Condition("true").eval(EnvState{}, {}));
  EXPECT_TRUE(Condition().clauses().empty());
}

TEST(Condition, EnvComparisons) {
  EnvState e;
  e.indoor_c = 21.5;
  EXPECT_TRUE(Condition("env.indoor_c > 20").eval(e, {}));
  EXPECT_FALSE(Condition("env.indoor_c <= 21").eval(e, {}));
  EXPECT_TRUE(Condition("env.indoor_c >= 21.5 && env.mains_available == true").eval(e, {}));
}

TEST(Condition, DeviceAndQuantifiedFields) {
  DeviceTable t = shop();
  EnvState e;
  EXPECT_TRUE(Condition("door-1.locked == true").eval(e, t));
  EXPECT_TRUE(Condition("all(Window).open == false").eval(e, t));
  EXPECT_FALSE(Condition("any(Window).open == true").eval(e, t));
  std::get<WindowState>(t.at(DeviceId("window-3")).state).open = true;
  EXPECT_TRUE(Condition("any(Window).open == true").eval(e, t));
  EXPECT_FALSE(Condition("all(Window).open == false").eval(e, t));
  EXPECT_TRUE(Condition("fan-1.speed == Off").eval(e, t));
  EXPECT_TRUE(Condition("fan-1.speed != High").eval(e, t));
}

TEST(Condition, AllOverNoDevicesHolds) {
  EXPECT_TRUE(Condition("all(Door).locked == true").eval(EnvState{}, {}));
  EXPECT_FALSE(Condition("any(Door).locked == true").eval(EnvState{}, {}));
}

TEST(Condition, ParseErrors) {
  for (const char* bad : {"", "door-1.locked", "door-1.locked === true", "any(Toaster).on == true",
                          "fan-1.speed < Low", "env.indoor_c > 1e999", "Door-1.locked == true"}) {
    try {
      Condition c(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::InvalidPolicy) << bad;
    }
  }
}

TEST(Condition, ValidateAgainstDevices) {
  const DeviceTable t = shop();
  EXPECT_NO_THROW(Condition("door-1.open == false").validate(t));
  try {
    Condition("door-9.open == false").validate(t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnknownDevice);
  }
  EXPECT_THROW(Condition("door-1.colour == red").validate(t), Error);
  EXPECT_THROW(Condition("env.humidity > 3").validate(t), Error);
  EXPECT_THROW(Condition("any(Fan).open == true").validate(t), Error);
}
