#pragma once

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "shopsim/net/client.hpp"
#include "shopsim/net/service.hpp"
#include "shopsim/status.hpp"

namespace shopsim::cli {

enum class Subcommand { Run, Serve, Replay, Inject, Status };

// Stable process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInput = 3;
inline constexpr int kExitRuntime = 4;

struct CliConfig {
  Subcommand command = Subcommand::Run;
  std::optional<std::string> manifest;  // default: built-in shop
  std::optional<std::string> scenario;
  std::optional<std::string> params;
  std::optional<std::string> policy;
  std::optional<std::string> tokens;  // SHOP_TOKENS wins over --tokens
  std::optional<std::string> log;     // run/serve: output; replay: input
  std::optional<std::string> snapshot;      // status: offline snapshot to print
  std::optional<std::string> snapshot_out;  // run: final snapshot
  std::optional<std::string> dashboard_dir;
  std::string host = "127.0.0.1";
  std::uint16_t port = 7450;
  bool realtime = false;
  std::optional<std::uint32_t> tick_ms;  // serve: wall ms per tick (default dt_s)
  std::optional<std::uint64_t> ticks;    // serve: stop after n ticks
  std::optional<std::string> token;      // inject/status: explicit token
  // inject
  std::optional<std::string> device;
  std::optional<std::string> action;
  std::optional<std::string> arg;
  std::optional<std::string> event;
  std::string payload = "{}";

  bool help = false;
  std::string help_text;
};

inline int exit_code_for(Errc c) {
  switch (c) {
    case Errc::UsageError: return kExitUsage;
    case Errc::FileNotFound:
    case Errc::ParseError:
    case Errc::InvalidManifest:
    case Errc::InvalidParams:
    case Errc::InvalidPolicy:
    case Errc::InvalidScenario:
    case Errc::InjectionAfterEnd:
    case Errc::UnknownDevice:
    case Errc::InvalidId:
    case Errc::LogCorrupt:
    case Errc::SchemaMismatch: return kExitInput;
    default: return kExitRuntime;
  }
}

// Throws Error(UsageError) for bad flags and Error(FileNotFound) for missing
// input files. `shop_tokens` is the value of SHOP_TOKENS, if set.
inline CliConfig parse_args(const std::vector<std::string>& args, std::optional<std::string> shop_tokens = {}) {
  CliConfig c;
  CLI::App app{"Smart-shop simulator and gateway", "shopctl"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  auto add_world_flags = [&](CLI::App* s) {
    s->add_option("--manifest", c.manifest, "device manifest JSON (default: built-in shop)");
    s->add_option("--params", c.params, "environment parameter overrides JSON");
    s->add_option("--policy", c.policy, "rule set JSON (default: built-in policy)");
  };
  auto add_client_flags = [&](CLI::App* s) {
    s->add_option("--host", c.host, "gateway host")->capture_default_str();
    s->add_option("--port", c.port, "gateway port")->capture_default_str();
    s->add_option("--tokens", c.tokens, "token file; first usable token is used");
    s->add_option("--token", c.token, "explicit token");
  };

  auto* run = app.add_subcommand("run", "run a scenario offline and print the final status");
  add_world_flags(run);
  run->add_option("--scenario", c.scenario, "scenario JSON")->required();
  run->add_option("--log", c.log, "write the event log (JSONL) here");
  run->add_option("--snapshot-out", c.snapshot_out, "write the final snapshot here");
  run->add_flag("--realtime", c.realtime, "pace one tick per dt_s wall seconds");

  auto* serve = app.add_subcommand("serve", "host the gateway service");
  add_world_flags(serve);
  serve->add_option("--scenario", c.scenario, "scenario supplying initial conditions and scheduled inputs");
  serve->add_option("--port", c.port, "listen port (TCP frames and HTTP/WebSocket)")->capture_default_str();
  serve->add_option("--bind", c.host, "listen address")->capture_default_str();
  serve->add_option("--tokens", c.tokens, "token file");
  serve->add_option("--dashboard-dir", c.dashboard_dir, "serve static dashboard assets from here");
  serve->add_option("--log", c.log, "append the event log (JSONL) here");
  serve->add_option("--tick-ms", c.tick_ms, "wall milliseconds per tick (default: dt_s)");
  serve->add_option("--ticks", c.ticks, "stop after this many ticks");

  auto* rep = app.add_subcommand("replay", "rebuild the final world from a scenario and its event log");
  add_world_flags(rep);
  rep->add_option("--scenario", c.scenario, "scenario JSON")->required();
  rep->add_option("--log", c.log, "event log (JSONL) from run")->required();

  auto* inj = app.add_subcommand("inject", "send one command or event to a running gateway");
  add_client_flags(inj);
  auto* dev = inj->add_option("--device", c.device, "target device id");
  auto* act = inj->add_option("--action", c.action, "command action, e.g. TurnOn");
  inj->add_option("--arg", c.arg, "command argument, e.g. High");
  auto* ev = inj->add_option("--event", c.event, "environment event: motion, smoke_source, fire_source, mains, outdoor_c");
  inj->add_option("--payload", c.payload, "event payload JSON")->capture_default_str();
  dev->needs(act);
  act->needs(dev);
  ev->excludes(dev)->excludes(act);

  auto* st = app.add_subcommand("status", "print the status table of a running gateway or a snapshot file");
  add_client_flags(st);
  st->add_option("--snapshot", c.snapshot, "print this snapshot instead of connecting");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    c.help = true;
    c.help_text = (app.get_subcommands().empty() ? &app : app.get_subcommands().front())->help();
    return c;
  } catch (const CLI::CallForAllHelp&) {
    c.help = true;
    c.help_text = app.help("", CLI::AppFormatMode::All);
    return c;
  } catch (const CLI::ParseError& e) {
    throw Error(Errc::UsageError, e.what());
  }

  if (run->parsed()) c.command = Subcommand::Run;
  else if (serve->parsed()) c.command = Subcommand::Serve;
  else if (rep->parsed()) c.command = Subcommand::Replay;
  else if (inj->parsed()) c.command = Subcommand::Inject;
  else c.command = Subcommand::Status;

  if (shop_tokens && !shop_tokens->empty()) c.tokens = shop_tokens;

  if (c.command == Subcommand::Inject && !c.device && !c.event)
    throw Error(Errc::UsageError, "inject needs --device/--action or --event");
  if (c.command == Subcommand::Serve && !c.tokens)
    throw Error(Errc::UsageError, "serve needs --tokens or SHOP_TOKENS");
  if ((c.command == Subcommand::Inject || c.command == Subcommand::Status) && !c.snapshot && !c.token && !c.tokens)
    throw Error(Errc::UsageError, "need --token, --tokens or SHOP_TOKENS");
  if (c.tick_ms && *c.tick_ms == 0) throw Error(Errc::UsageError, "--tick-ms must be positive");

  // `log` is an output for run/serve, so it need not exist.
  std::vector<const std::optional<std::string>*> inputs = {&c.manifest, &c.scenario, &c.params,       &c.policy,
                                                           &c.tokens,   &c.snapshot, &c.dashboard_dir};
  if (c.command == Subcommand::Replay) inputs.push_back(&c.log);
  for (const auto* p : inputs)
    if (*p && !std::filesystem::exists(**p)) throw Error(Errc::FileNotFound, **p);
  return c;
}

inline DeviceManifest manifest_for(const CliConfig& c) {
  return c.manifest ? load_manifest(*c.manifest) : default_manifest();
}

inline World world_for(const CliConfig& c, const DeviceManifest& m) {
  return make_world(m, c.params ? load_params(*c.params) : EnvParams{},
                    c.policy ? load_policy(*c.policy) : builtin_policy());
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

inline std::string pick_token(const CliConfig& c, Role wanted) {
  if (c.token) return *c.token;
  for (const auto& t : load_tokens(*c.tokens))
    if (wanted == Role::Viewer || t.role == Role::Operator) return t.token;
  throw Error(Errc::UsageError, "token file has no " + std::string(to_string(wanted)) + " token");
}

inline int cmd_run(const CliConfig& c, std::ostream& out) {
  const auto m = manifest_for(c);
  World w = world_for(c, m);
  const Scenario s = load_scenario(*c.scenario, m);
  RunResult r = run_scenario(std::move(w), s, [&](const World& world, const std::vector<LogEntry>&) {
    if (c.realtime) std::this_thread::sleep_for(std::chrono::duration<double>(world.dt_s));
  });
  if (c.log) write_file(*c.log, to_jsonl(r.log));
  if (c.snapshot_out) write_file(*c.snapshot_out, snapshot(r.world) + "\n");
  out << format_status(r.world);
  return kExitOk;
}

inline int cmd_replay(const CliConfig& c, std::ostream& out) {
  const auto m = manifest_for(c);
  const Scenario s = load_scenario(*c.scenario, m);
  const auto log = parse_log(read_file(*c.log));
  out << format_status(replay(world_for(c, m), s, log));
  return kExitOk;
}

inline int cmd_serve(const CliConfig& c, std::ostream& out) {
  const auto m = manifest_for(c);
  World w = world_for(c, m);
  net::ServiceOptions opts;
  opts.bind_address = c.host;
  opts.port = c.port;
  if (c.dashboard_dir) opts.dashboard_dir = *c.dashboard_dir;
  opts.max_ticks = c.ticks;
  if (c.scenario) opts.scenario = load_scenario(*c.scenario, m);
  const double dt = opts.scenario ? opts.scenario->dt_s : w.dt_s;
  opts.tick_period = c.tick_ms ? std::chrono::milliseconds(*c.tick_ms)
                               : std::chrono::milliseconds(static_cast<std::int64_t>(dt * 1000.0));
  std::ofstream log_file;
  if (c.log) {
    log_file.open(*c.log, std::ios::binary | std::ios::app);
    if (!log_file) throw std::runtime_error("cannot write " + *c.log);
    opts.on_log = [&log_file](const std::vector<LogEntry>& entries) {
      log_file << to_jsonl(entries);
      log_file.flush();
    };
  }
  GatewayConfig gc;
  gc.tokens = load_tokens(*c.tokens);

  boost::asio::io_context ioc;
  net::Service svc(ioc, std::move(w), std::move(gc), std::move(opts));
  svc.start();
  boost::asio::signal_set signals(ioc, SIGINT, SIGTERM);
  signals.async_wait([&](const boost::system::error_code& ec, int) {
    if (!ec) svc.stop();
    ioc.stop();
  });
  out << "listening on " << c.host << ":" << svc.port() << std::endl;
  ioc.run();
  out << format_status(svc.world());
  return kExitOk;
}

inline int cmd_inject(const CliConfig& c, std::ostream& out) {
  net::Client client;
  client.connect(c.host, c.port);
  client.hello(pick_token(c, Role::Operator), Role::Operator);
  std::uint64_t seq = 0;
  if (c.device) {
    json body{{"device_id", *c.device}, {"action", *c.action}};
    if (c.arg) body["arg"] = *c.arg;
    seq = client.send(proto::MsgType::COMMAND, std::move(body));
  } else {
    json payload = parse_json(c.payload, Errc::UsageError);
    if (!payload.is_object()) throw Error(Errc::UsageError, "--payload must be a JSON object");
    json body{{"name", *c.event}};
    if (auto id = payload.find("device_id"); id != payload.end()) {
      body["device_id"] = *id;
      payload.erase(id);
    }
    body["payload"] = std::move(payload);
    seq = client.send(proto::MsgType::EVENT, std::move(body));
  }
  const proto::Message reply = client.await_reply(seq);
  client.close();
  if (reply.type == proto::MsgType::NACK) {
    out << "NACK " << reply.body.at("code").get<std::string>() << ": " << reply.body.at("reason").get<std::string>()
        << "\n";
    return kExitRuntime;
  }
  out << "ACK " << seq << "\n";
  return kExitOk;
}

inline int cmd_status(const CliConfig& c, std::ostream& out) {
  if (c.snapshot) {
    out << format_status(restore(read_file(*c.snapshot)));
    return kExitOk;
  }
  net::Client client;
  client.connect(c.host, c.port);
  client.hello(pick_token(c, Role::Viewer), Role::Viewer);
  client.send(proto::MsgType::SNAPSHOT_REQ);
  auto res = client.read_until([](const proto::Message& m) { return m.type == proto::MsgType::SNAPSHOT_RES; });
  client.close();
  if (!res) throw std::runtime_error("connection closed before SNAPSHOT_RES");
  out << format_status(restore_json(res->body.at("snapshot")));
  return kExitOk;
}

inline int execute(const CliConfig& c, std::ostream& out) {
  switch (c.command) {
    case Subcommand::Run: return cmd_run(c, out);
    case Subcommand::Serve: return cmd_serve(c, out);
    case Subcommand::Replay: return cmd_replay(c, out);
    case Subcommand::Inject: return cmd_inject(c, out);
    case Subcommand::Status: return cmd_status(c, out);
  }
  return kExitRuntime;
}

// Whole program behind main(): parse, execute, map failures to exit codes.
inline int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                      std::optional<std::string> shop_tokens = {}) {
  try {
    CliConfig c = parse_args(args, std::move(shop_tokens));
    if (c.help) {
      out << c.help_text;
      return kExitOk;
    }
    return execute(c, out);
  } catch (const Error& e) {
    err << "shopctl: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "shopctl: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace shopsim::cli
