#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "live_service.hpp"
#include "shopsim/cli.hpp"
#include "test_support.hpp"

using namespace shopsim;
using namespace shopsim::cli;
namespace tu = shopsim::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome shopctl(std::vector<std::string> args, std::optional<std::string> env = {}) {
  std::ostringstream out, err;
  const int code = main_entry(args, out, err, env);
  return {code, out.str(), err.str()};
}

std::string scenario(const char* name) { return tu::source_path(std::string("scenarios/") + name + ".json"); }

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("shopctl-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "-" +
                                                  ::testing::UnitTest::GetInstance()->current_test_info()->name())) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const char* name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

}  // namespace

TEST(ParseArgs, RunFlags) {
  const auto c = parse_args({"run", "--scenario", scenario("fig2-motion"), "--realtime", "--log", "/tmp/x.jsonl"});
  EXPECT_EQ(c.command, Subcommand::Run);
  EXPECT_TRUE(c.realtime);
  EXPECT_EQ(c.log, "/tmp/x.jsonl");
  EXPECT_FALSE(c.manifest);
}

TEST(ParseArgs, UsageErrors) {
  auto usage = [](std::vector<std::string> args) {
    try {
      parse_args(args);
      ADD_FAILURE() << args.front();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::UsageError);
    }
  };
  usage({});
  usage({"fly"});
  usage({"run"});                                               // --scenario required
  usage({"inject", "--token", "t"});                            // nothing to send
  usage({"inject", "--token", "t", "--device", "fan-1"});       // --device needs --action
  usage({"inject", "--token", "t", "--event", "motion", "--device", "x", "--action", "y"});
  usage({"inject", "--device", "fan-1", "--action", "TurnOn"});  // no token source
  usage({"serve"});                                             // no tokens
  usage({"serve", "--tokens", tu::source_path("tokens.example.json"), "--tick-ms", "0"});
  usage({"run", "--scenario", scenario("fig2-motion"), "--bogus"});
}

TEST(ParseArgs, MissingInputFile) {
  try {
    parse_args({"run", "--scenario", "/nonexistent/s.json"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::FileNotFound);
  }
  EXPECT_THROW(parse_args({"replay", "--scenario", scenario("fig2-motion"), "--log", "/nonexistent.jsonl"}), Error);
}

TEST(ParseArgs, EnvironmentTokensWin) {
  const auto tokens = tu::source_path("tokens.example.json");
  auto c = parse_args({"serve", "--tokens", "/nonexistent.json"}, tokens);
  EXPECT_EQ(c.tokens, tokens);
  c = parse_args({"status", "--port", "9000"}, tokens);
  EXPECT_EQ(c.port, 9000);
  EXPECT_EQ(c.host, "127.0.0.1");
}

TEST(ParseArgs, HelpIsNotAnError) {
  const auto r = shopctl({"--help"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("replay"), std::string::npos);
  EXPECT_NE(shopctl({"serve", "--help"}).out.find("--dashboard-dir"), std::string::npos);
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code_for(Errc::UsageError), 2);
  EXPECT_EQ(exit_code_for(Errc::FileNotFound), 3);
  EXPECT_EQ(exit_code_for(Errc::InvalidScenario), 3);
  EXPECT_EQ(exit_code_for(Errc::LogCorrupt), 3);
  EXPECT_EQ(exit_code_for(Errc::IllegalTransition), 4);
  EXPECT_EQ(shopctl({"fly"}).code, 2);
  EXPECT_EQ(shopctl({"run", "--scenario", "/nonexistent"}).code, 3);
}

TEST(Commands, BadScenarioIsAnInputError) {
  TempDir dir;
  write_file(dir.file("s.json"), R"({"duration_ticks": 3, "injections": [{"tick": 3, "type": "motion"}]})");
  const auto r = shopctl({"run", "--scenario", dir.file("s.json")});
  EXPECT_EQ(r.code, kExitInput);
  EXPECT_NE(r.err.find("InjectionAfterEnd"), std::string::npos) << r.err;
}

TEST(Commands, RunThenReplayPrintsTheSameStatus) {
  TempDir dir;
  for (const char* name : {"fig2-motion", "fig3-fire", "door-cycle"}) {
    const auto run = shopctl({"run", "--scenario", scenario(name), "--log", dir.file("log.jsonl"), "--snapshot-out",
                              dir.file("snap.json")});
    ASSERT_EQ(run.code, kExitOk) << run.err;
    const auto rep = shopctl({"replay", "--scenario", scenario(name), "--log", dir.file("log.jsonl")});
    ASSERT_EQ(rep.code, kExitOk) << rep.err;
    EXPECT_EQ(run.out, rep.out) << name;
    const auto st = shopctl({"status", "--snapshot", dir.file("snap.json")});
    EXPECT_EQ(st.out, run.out);
  }
}

TEST(Commands, CorruptLogExitsThree) {
  TempDir dir;
  write_file(dir.file("log.jsonl"), "{\"tick\":0}\n");
  EXPECT_EQ(shopctl({"replay", "--scenario", scenario("fig2-motion"), "--log", dir.file("log.jsonl")}).code, kExitInput);
}

TEST(Commands, InjectAndStatusAgainstLiveGateway) {
  tu::LiveService live;
  const std::string port = std::to_string(live.port());
  auto r = shopctl({"inject", "--port", port, "--token", "op-token", "--device", "fan-1", "--action", "SetSpeed",
                    "--arg", "High"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out, "ACK 2\n");

  r = shopctl({"inject", "--port", port, "--token", "op-token", "--device", "door-1", "--action", "Open"});
  EXPECT_EQ(r.code, kExitRuntime);
  EXPECT_EQ(r.out.rfind("NACK IllegalAction: ", 0), 0u) << r.out;

  r = shopctl({"inject", "--port", port, "--token", "op-token", "--event", "outdoor_c", "--payload", R"({"value": 33})"});
  EXPECT_EQ(r.code, kExitOk) << r.err << r.out;

  r = shopctl({"inject", "--port", port, "--token", "view-token", "--device", "fan-1", "--action", "SetSpeed", "--arg",
               "Low"});
  EXPECT_EQ(r.code, kExitRuntime);
  EXPECT_NE(r.err.find("RoleDenied"), std::string::npos) << r.err;

  r = shopctl({"status", "--port", port, "--token", "view-token"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out.rfind("tick ", 0), 0u);
  EXPECT_NE(r.out.find("\ndoor-1 Door closed locked\n"), std::string::npos) << r.out;
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1 + static_cast<long>(default_manifest().devices.size()));
}

TEST(Commands, NoGatewayIsARuntimeError) {
  EXPECT_EQ(shopctl({"status", "--port", "1", "--token", "x"}).code, kExitRuntime);
}
