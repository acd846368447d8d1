#include <CLI11.hpp>

#include <iostream>

#include "wristhap/cli.hpp"

int main(int argc, char** argv) {
  namespace cli = wristhap::cli;

  CLI::App app{"wristhap: digital twin of a three-string wrist torque device"};
  app.require_subcommand(1);

  cli::RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario and write its trace CSV");
  run_cmd->add_option("--scenario,scenario", run.scenario, "Scenario file")->required();
  run_cmd->add_option("--out", run.out, "Trace CSV path (stdout when omitted)");
  run_cmd->add_option("--seed", run.overrides.seed, "Override the scenario seed");
  run_cmd->add_option("--rate", run.overrides.rate, "Override the loop rate (Hz)");
  run_cmd->add_option("--record-log", run.record_log,
                      "Also write the timeline as a protocol byte log");

  cli::AllocateOptions alloc;
  auto* alloc_cmd = app.add_subcommand("allocate", "Allocate string tensions for one torque");
  alloc_cmd->add_option("--yaw", alloc.yaw, "Yaw torque (N m)");
  alloc_cmd->add_option("--pitch", alloc.pitch, "Pitch torque (N m)");
  alloc_cmd->add_option("--theta", alloc.theta, "Direction (deg, 0 = +yaw, 90 = +pitch)");
  alloc_cmd->add_option("--magnitude", alloc.magnitude, "Magnitude (N m)");
  alloc_cmd->add_option("--scenario", alloc.scenario, "Take layout and limits from a scenario");
  alloc_cmd->add_option("--t-max", alloc.t_max, "Per-string tension limit (N)");

  cli::SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Feasible torque magnitude per direction");
  sweep_cmd->add_option("--scenario", sweep.scenario, "Take layout and limits from a scenario");
  sweep_cmd->add_option("--t-max", sweep.t_max, "Per-string tension limit (N)");
  sweep_cmd->add_option("--out", sweep.out, "Cone CSV path (stdout when omitted)");

  cli::ServeOptions serve;
  int port = 0;
  auto* serve_cmd = app.add_subcommand("protocol-serve", "Serve device sessions over TCP");
  serve_cmd->add_option("--port", port, "Loopback port (0 picks one)")->required()->check(
      CLI::Range(0, 65535));
  serve_cmd->add_option("--scenario", serve.scenario, "Device configuration");
  serve_cmd->add_option("--out", serve.out, "Per-session trace CSV path");
  serve_cmd->add_option("--record", serve.record, "Per-session inbound byte log path");
  serve_cmd->add_option("--max-sessions", serve.max_sessions, "Exit after N sessions (0: never)");

  cli::ReplayOptions replay;
  auto* replay_cmd = app.add_subcommand("protocol-replay", "Replay a recorded inbound byte log");
  replay_cmd->add_option("--log,log", replay.log, "Byte log")->required();
  replay_cmd->add_option("--scenario", replay.scenario, "Device configuration");
  replay_cmd->add_option("--out", replay.out, "Trace CSV path (stdout when omitted)");
  replay_cmd->add_option("--seed", replay.overrides.seed, "Override the scenario seed");
  replay_cmd->add_option("--rate", replay.overrides.rate, "Override the loop rate (Hz)");

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "Check a scenario file");
  validate_cmd->add_option("--scenario,scenario", validate_path, "Scenario file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kExitConfig;
  }

  if (*run_cmd) return cli::cmd_run(run, std::cout, std::cerr);
  if (*alloc_cmd) return cli::cmd_allocate(alloc, std::cout, std::cerr);
  if (*sweep_cmd) return cli::cmd_sweep(sweep, std::cout, std::cerr);
  if (*serve_cmd) {
    serve.port = static_cast<std::uint16_t>(port);
    return cli::cmd_protocol_serve(serve, std::cout, std::cerr);
  }
  if (*replay_cmd) return cli::cmd_protocol_replay(replay, std::cout, std::cerr);
  if (*validate_cmd) return cli::cmd_validate(validate_path, std::cout, std::cerr);
  return cli::kExitConfig;
}
