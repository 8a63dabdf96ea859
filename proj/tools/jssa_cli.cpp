#include <chrono>
#include <csignal>
#include <functional>
#include <thread>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "jssa/config.hpp"
#include "jssa/server.hpp"
#include "jssa/telemetry.hpp"

namespace fs = std::filesystem;
using namespace jssa;

namespace {

constexpr int kOk = 0;
constexpr int kUnsafe = 1;
constexpr int kBadInput = 2;

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(std::string(what) + ": '" + item + "' is not a number");
    }
  }
  return out;
}

Scenario load(const std::string& path) { return load_scenario(path, seed_from_environment()); }

void print_minimax(const MinimaxReport& r) {
  std::cout << "minimax: " << (r.passed ? "pass" : "fail") << ", " << r.evaluated << " samples, "
            << r.unreachable << " unreachable, worst value " << format_number(r.worst_value) << '\n';
  if (r.worst) {
    const MinimaxSample& w = *r.worst;
    std::cout << "worst sample: d=" << format_number(w.d) << " d_dot=" << format_number(w.d_dot)
              << " d_ddot=" << format_number(w.d_ddot) << " capsule=" << w.capsule + 1 << " theta=[";
    for (Eigen::Index i = 0; i < w.theta.size(); ++i) std::cout << (i ? "," : "") << format_number(w.theta[i]);
    std::cout << "]\n";
  }
}

bool precheck(Scenario& sc) {
  if (sc.verify_budget == 0) return true;
  MinimaxConfig cfg;
  cfg.budget = sc.verify_budget;
  const MinimaxReport r = verify_minimax(sc.params, sc.bounds, sc.chain, cfg);
  sc.params.minimax_passed = r.passed;
  print_minimax(r);
  return r.passed;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  body(out);
}

int cmd_run(const std::string& path, const std::string& out_dir) {
  Scenario sc = load(path);
  if (!precheck(sc)) std::cerr << "warning: minimax check failed for these parameters\n";
  const RunResult res = run(sc);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "telemetry.csv", [&](std::ostream& o) { write_telemetry_csv(o, res.log); });
    write_file(fs::path(out_dir) / "metrics.csv",
               [&](std::ostream& o) { write_metrics_csv(o, {{sc.params.lambda1, sc.params.lambda2, res.metrics}}); });
  }
  const RunMetrics& m = res.metrics;
  std::cout << sc.name << " [" << to_string(sc.mode) << "]: min distance " << format_number(m.min_distance)
            << ", violations " << m.violations << ", max-brake steps " << m.fallback_steps << ", active "
            << format_number(m.active_duration) << " s\n";
  return m.violations == 0 && m.fallback_steps == 0 ? kOk : kUnsafe;
}

int cmd_sweep(const std::string& path, const std::string& l1, const std::string& l2, const std::string& out_dir) {
  const Scenario sc = load(path);
  const auto rows = sweep(sc, parse_list(l1, "--l1"), parse_list(l2, "--l2"));
  std::vector<MetricsRow> table;
  bool safe = true;
  for (const auto& r : rows) {
    table.push_back({r.lambda1, r.lambda2, r.metrics});
    safe = safe && r.metrics.violations == 0 && r.metrics.fallback_steps == 0;
  }
  if (out_dir.empty()) {
    write_metrics_csv(std::cout, table);
  } else {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "metrics.csv", [&](std::ostream& o) { write_metrics_csv(o, table); });
    std::cout << rows.size() << " runs written to " << (fs::path(out_dir) / "metrics.csv").string() << '\n';
  }
  return safe ? kOk : kUnsafe;
}

int cmd_verify(const std::string& path) {
  VerifyRequest req = load_verify_request(path);
  const bool roots = validate_roots(req.params);
  std::cout << "roots: " << (roots ? "pass" : "fail") << " (lambda1=" << format_number(req.params.lambda1)
            << ", lambda2=" << format_number(req.params.lambda2) << ")\n";
  const MinimaxReport r = verify_minimax(req.params, req.bounds, req.chain, req.minimax);
  print_minimax(r);
  return roots && r.passed ? kOk : kUnsafe;
}

volatile std::sig_atomic_t g_interrupted = 0;

int cmd_serve(const std::string& path, int port, double rate) {
  SimSession session(load(path));
  WsServer server(session, static_cast<std::uint16_t>(port), ServerOptions{rate, "127.0.0.1"});
  std::signal(SIGINT, [](int) { g_interrupted = 1; });
  std::signal(SIGTERM, [](int) { g_interrupted = 1; });
  std::cout << "listening on ws://127.0.0.1:" << server.port() << std::endl;
  server.start();
  while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Jerk-level safe set algorithm: simulation, sweeps, parameter checks and live service"};
  app.require_subcommand(1);

  std::string scenario, out_dir, l1 = "6,7,8", l2 = "6,7,8", params;
  int port = 8765;
  double rate = 125.0;

  auto* run_cmd = app.add_subcommand("run", "Simulate one scenario");
  run_cmd->add_option("scenario", scenario, "Scenario JSON file")->required();
  run_cmd->add_option("--out", out_dir, "Directory for telemetry.csv and metrics.csv");

  auto* sweep_cmd = app.add_subcommand("sweep", "Run a lambda1 x lambda2 grid");
  sweep_cmd->add_option("scenario", scenario, "Scenario JSON file")->required();
  sweep_cmd->add_option("--l1", l1, "Comma separated lambda1 values");
  sweep_cmd->add_option("--l2", l2, "Comma separated lambda2 values");
  sweep_cmd->add_option("--out", out_dir, "Directory for metrics.csv");

  auto* verify_cmd = app.add_subcommand("verify", "Check safety index coefficients");
  verify_cmd->add_option("params", params, "Verification JSON file")->required();

  auto* serve_cmd = app.add_subcommand("serve", "Serve a scenario over WebSocket");
  serve_cmd->add_option("scenario", scenario, "Scenario JSON file")->required();
  serve_cmd->add_option("--port", port, "TCP port")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--rate", rate, "Control rate in Hz")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadInput;
  }

  try {
    if (*run_cmd) return cmd_run(scenario, out_dir);
    if (*sweep_cmd) return cmd_sweep(scenario, l1, l2, out_dir);
    if (*verify_cmd) return cmd_verify(params);
    if (*serve_cmd) return cmd_serve(scenario, port, rate);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const ServerError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUnsafe;
  }
  return kBadInput;
}
