#include <gtest/gtest.h>

#include "shopsim/manifest.hpp"
#include "test_support.hpp"

using namespace shopsim;

TEST(DefaultManifest, HasTheShopTopology) {
  const auto m = default_manifest();
  EXPECT_EQ(m.count(DeviceKind::Fan), 2u);
  EXPECT_EQ(m.count(DeviceKind::Window), 4u);
  EXPECT_EQ(m.count(DeviceKind::AirConditioner), 1u);
  EXPECT_EQ(m.count(DeviceKind::CctvCamera), 2u);
  EXPECT_EQ(m.count(DeviceKind::Light), 2u);
  EXPECT_EQ(m.count(DeviceKind::Door), 1u);
  EXPECT_EQ(m.count(DeviceKind::SmokeSource), 1u);  // the car
  EXPECT_EQ(m.count(DeviceKind::FireSource), 1u);
  EXPECT_EQ(m.devices.size(), 24u);
  for (DeviceKind k : kAllKinds) EXPECT_GE(m.count(k), 1u) << to_string(k);
}

TEST(DefaultManifest, BackedLightAndAlwaysOnDevices) {
  const auto m = default_manifest();
  const auto* l1 = m.find(DeviceId("light-1"));
  ASSERT_TRUE(l1);
  ASSERT_TRUE(l1->params.backup);
  EXPECT_EQ(l1->params.backup->str(), "battery-1");
  EXPECT_TRUE(l1->params.always_on);
  EXPECT_TRUE(m.find(DeviceId("cctv-1"))->params.always_on);
  EXPECT_FALSE(m.find(DeviceId("light-0"))->params.always_on);
}

TEST(ManifestJson, RoundTrips) {
  const auto m = default_manifest();
  EXPECT_EQ(manifest_from_json(manifest_to_json(m)), m);
}

TEST(ManifestJson, ShippedFileMatchesBuiltIn) {
  EXPECT_EQ(load_manifest(shopsim::testing::source_path("manifests/paper-shop.json")), default_manifest());
}

TEST(ManifestJson, RejectsBadDocuments) {
  auto expect_invalid = [](const char* text) {
    try {
      manifest_from_json(json::parse(text));
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::InvalidManifest) << text;
    }
  };
  expect_invalid(R"({"id":"x"})");
  expect_invalid(R"([{"id":"a","kind":"Fan"},{"id":"a","kind":"Fan"}])");
  expect_invalid(R"([{"id":"a","kind":"Toaster"}])");
  expect_invalid(R"([{"id":"A","kind":"Fan"}])");
  expect_invalid(R"([{"id":"d","kind":"Door","state":{"open":true,"locked":true}}])");
  expect_invalid(R"([{"id":"l","kind":"Light","params":{"backup":"nothing"}}])");
  expect_invalid(R"([{"id":"f","kind":"Fan","params":{"backup":"b"}},{"id":"b","kind":"Battery"}])");
  expect_invalid(R"([{"id":"b","kind":"Battery","params":{"capacity_wh":0}}])");
  expect_invalid(R"([{"id":"b","kind":"Battery","state":{"charge_wh":-1}}])");
  expect_invalid(R"([{"id":"f","kind":"Fan","colour":"red"}])");
}

TEST(ManifestInstantiate, UsesInitialStates) {
  const auto m = default_manifest();
  const auto t = instantiate(m);
  ASSERT_EQ(t.size(), m.devices.size());
  const auto* d = state_as<DoorState>(t, DeviceId("door-1"));
  ASSERT_TRUE(d);
  EXPECT_TRUE(d->locked);
  EXPECT_FALSE(d->open);
}
