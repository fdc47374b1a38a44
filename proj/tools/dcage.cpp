// dcage: scenario runs, the CCC server, live vehicle runs and log replay.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "dcage/ccc_service.hpp"
#include "dcage/errors.hpp"
#include "dcage/event_log.hpp"
#include "dcage/net.hpp"
#include "dcage/runner.hpp"
#include "dcage/scenario.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kCheckFailed = 1;
constexpr int kConfigError = 2;

using namespace dcage;

void print_summary(const RunReport& r, std::ostream& os) {
  os << r.scenario << " (" << r.vehicle_id << ", seed " << r.seed << "): " << r.ticks << " ticks, "
     << r.sim_duration_ms << " ms simulated, mission " << to_string(r.final_mission_state) << "\n";
  if (r.es_stop_clearance_m) os << "  stopped in ES " << std::fixed << std::setprecision(2) << *r.es_stop_clearance_m
                                << " m from the nearest obstacle\n" << std::defaultfloat;
  for (const auto& c : r.checks) {
    os << "  " << (c.pass ? "ok   " : "FAIL ") << c.name << (c.detail.empty() ? "" : ": " + c.detail) << "\n";
  }
}

int write_report(const RunReport& r, const std::string& path) {
  const std::string text = r.to_json().dump(2) + "\n";
  if (path.empty() || path == "-") {
    std::cout << text;
    return kPass;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write report '" + path + "'");
  out << text;
  return kPass;
}

std::string timestamp_name() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << "ccc-" << std::put_time(&tm, "%Y%m%d-%H%M%S") << ".ndjson";
  return os.str();
}

std::int64_t epoch_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dependability cage simulator, command control centre and tooling"};
  app.require_subcommand(1);

  // sim run
  auto* sim = app.add_subcommand("sim", "Vehicle simulation with the onboard cage");
  sim->require_subcommand(1);
  auto* sim_run = sim->add_subcommand("run", "Run a scenario headless, or live against a CCC with --ccc-addr");
  std::string sim_scenario;
  bool sim_realtime = false;
  std::optional<std::uint64_t> sim_seed;
  std::string sim_record;
  std::string sim_ccc;
  std::string sim_vehicle;
  std::optional<std::int64_t> sim_tick;
  sim_run->add_option("--scenario", sim_scenario, "Scenario file (JSON)")->required();
  sim_run->add_flag("--realtime", sim_realtime, "Pace the simulation to wall-clock time (always on with --ccc-addr)");
  sim_run->add_option("--seed", sim_seed, "Override the scenario seed");
  sim_run->add_option("--record", sim_record, "Write the event log of a headless run to this file");
  sim_run->add_option("--ccc-addr", sim_ccc, "Connect to a CCC at host:port (default port 7700)");
  sim_run->add_option("--vehicle-id", sim_vehicle, "Override the scenario's vehicle id (live runs)");
  sim_run->add_option("--tick-ms", sim_tick, "Override the control period, 1..100 ms");

  // ccc serve
  auto* ccc = app.add_subcommand("ccc", "Command control centre");
  ccc->require_subcommand(1);
  auto* serve = ccc->add_subcommand("serve", "Serve vehicles over TCP and operators over HTTP/WebSocket");
  std::uint16_t port = 7700;
  std::uint16_t http_port = 7780;
  std::string bind = "0.0.0.0";
  std::string log_dir;
  serve->add_option("--port", port, "Vehicle TCP port")->capture_default_str();
  serve->add_option("--http-port", http_port, "HTTP/WebSocket port")->capture_default_str();
  serve->add_option("--bind", bind, "Listen address")->capture_default_str();
  serve->add_option("--log-dir", log_dir, "Event log directory (default: $CCC_LOG_DIR, else ./logs)");

  // scenario run
  auto* scen = app.add_subcommand("scenario", "Scripted headless scenario runs");
  scen->require_subcommand(1);
  auto* scen_run = scen->add_subcommand("run", "Run a scenario with a scripted operator and check the outcome");
  std::string sc_file;
  std::string op_file;
  std::string out_log;
  std::string report_path;
  std::optional<std::uint64_t> sc_seed;
  scen_run->add_option("--scenario", sc_file, "Scenario file (JSON)")->required();
  scen_run->add_option("--operator", op_file, "Operator script (JSON); omit for no operator");
  scen_run->add_option("--out", out_log, "Event log output file")->required();
  scen_run->add_option("--report", report_path, "Report output file (default: stdout)");
  scen_run->add_option("--seed", sc_seed, "Override the scenario seed");

  // replay
  auto* rep = app.add_subcommand("replay", "Print a recorded event log, paced by its timestamps");
  std::string rep_log;
  double speed = 1.0;
  bool no_pacing = false;
  rep->add_option("log", rep_log, "Event log file")->required();
  rep->add_option("--speed-factor", speed, "Playback speed multiplier (> 0)")->capture_default_str();
  rep->add_flag("--no-pacing", no_pacing, "Emit entries without waiting");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kPass : kConfigError;
  }

  try {
    if (*sim_run) {
      const Scenario sc = load_scenario(sim_scenario);
      if (!sim_ccc.empty()) {
        if (!sim_record.empty()) throw ConfigError("--record applies to headless runs; in live runs the CCC keeps the log");
        net::LiveOptions o;
        o.seed = sim_seed;
        o.tick_ms = sim_tick;
        if (!sim_vehicle.empty()) o.vehicle_id = sim_vehicle;
        o.progress = &std::cerr;
        const auto r = net::run_live(sc, net::parse_endpoint(sim_ccc, 7700), o);
        std::cerr << "stopped after " << r.sim_duration_ms << " ms: mode " << to_string(r.final_mode) << ", mission "
                  << to_string(r.final_mission_state) << (r.link_lost ? " (CCC link lost)" : "") << "\n";
        return r.link_lost ? kCheckFailed : kPass;
      }
      if (!sim_vehicle.empty()) throw ConfigError("--vehicle-id applies to live runs only");
      RunOptions o;
      o.seed = sim_seed;
      o.tick_ms = sim_tick;
      o.realtime = sim_realtime;
      o.progress = &std::cerr;
      if (!sim_record.empty()) o.log_path = sim_record;
      const RunReport r = run_scenario(sc, OperatorScript{}, o);
      print_summary(r, std::cout);
      return r.pass() ? kPass : kCheckFailed;
    }

    if (*serve) {
      if (log_dir.empty()) {
        const char* env = std::getenv("CCC_LOG_DIR");
        log_dir = env && *env ? env : "logs";
      }
      const std::filesystem::path log_path = std::filesystem::path(log_dir) / timestamp_name();
      auto log = std::make_shared<EventLogWriter>(log_path);
      CccService service(CccConfig{}, epoch_ms, log);
      net::ServerOptions so;
      so.bind = bind;
      so.vehicle_port = port;
      so.http_port = http_port;
      so.handle_signals = true;
      net::CccServer server(service, so);
      try {
        server.start();
      } catch (const std::system_error& e) {
        throw ConfigError(std::string("cannot listen: ") + e.what());
      }
      std::cerr << "ccc: vehicles on " << bind << ":" << server.vehicle_port() << ", http on " << bind << ":"
                << server.http_port() << ", log " << log_path.string() << "\n";
      server.wait();
      log->flush();
      return kPass;
    }

    if (*scen_run) {
      const Scenario sc = load_scenario(sc_file);
      const OperatorScript script = op_file.empty() ? OperatorScript{} : load_operator_script(op_file);
      RunOptions o;
      o.seed = sc_seed;
      o.log_path = out_log;
      const auto t0 = std::chrono::steady_clock::now();
      const RunReport r = run_scenario(sc, script, o);
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      print_summary(r, std::cerr);
      std::cerr << "  wall time " << std::fixed << std::setprecision(2) << wall << " s\n";
      write_report(r, report_path);
      return r.pass() ? kPass : kCheckFailed;
    }

    if (*rep) {
      std::ifstream in(rep_log, std::ios::binary);
      if (!in) throw ConfigError("cannot open log '" + rep_log + "'");
      Sleeper sleep;
      if (!no_pacing) sleep = [](std::int64_t ms) { std::this_thread::sleep_for(std::chrono::milliseconds(ms)); };
      try {
        replay(in, speed, [](const EventLogEntry& e) { std::cout << to_line(e) << "\n" << std::flush; }, sleep);
      } catch (const LogCorruptError& e) {
        std::cerr << "replay halted: " << rep_log << ": " << e.what() << "\n";
        return kCheckFailed;
      }
      return kPass;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kPass;
}
