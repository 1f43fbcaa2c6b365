// slipnav command-line front end: simulate, replay, evaluate, forecast-demo.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "slipnav/config.hpp"
#include "slipnav/csv.hpp"
#include "slipnav/metrics.hpp"
#include "slipnav/run_log.hpp"
#include "slipnav/runner.hpp"

namespace fs = std::filesystem;
using namespace slipnav;

namespace {

struct CommonFlags {
  std::optional<std::string> terrain;
  std::optional<double> distance;
  std::optional<std::string> mode;
  std::optional<double> epsilon;
  std::optional<double> window;
  std::optional<double> horizon;
  std::optional<std::uint64_t> seed;
  std::string config_file;
  std::string out;
};

void add_run_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--terrain", f.terrain, "terrain preset: paved, unpaved, gravel, rough");
  cmd->add_option("--distance", f.distance, "distance to drive (m)");
  cmd->add_option("--mode", f.mode, "stop policy: autonomous, periodic, none");
  cmd->add_option("--epsilon", f.epsilon, "horizontal error threshold (m)");
  cmd->add_option("--window", f.window, "slip learning window (s)");
  cmd->add_option("--horizon", f.horizon, "forecast horizon (s)");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--config", f.config_file, "flat key=value configuration file");
}

// Precedence: defaults < config file < command-line flags.
void apply_flags(const CommonFlags& f, RunConfig& cfg) {
  if (!f.config_file.empty()) apply_config(read_key_value_file(f.config_file), cfg);
  KeyValueMap kv;
  if (f.terrain) kv["terrain"] = *f.terrain;
  if (f.distance) kv["distance"] = format_double(*f.distance);
  if (f.mode) kv["mode"] = *f.mode;
  if (f.epsilon) kv["epsilon"] = format_double(*f.epsilon);
  if (f.window) kv["window"] = format_double(*f.window);
  if (f.horizon) kv["horizon"] = format_double(*f.horizon);
  if (f.seed) kv["seed"] = std::to_string(*f.seed);
  apply_config(kv, cfg);
}

void write_outputs(const std::string& dir, const RunOutput& out, bool with_metrics) {
  fs::create_directories(dir);
  write_trace((fs::path(dir) / "trace.csv").string(), out.trace);
  write_decisions((fs::path(dir) / "decisions.csv").string(), out.decisions);
  write_forecast_records((fs::path(dir) / "forecasts.csv").string(), out.forecasts);
  if (out.last_forecast) {
    write_forecast_curve((fs::path(dir) / "forecast.csv").string(), *out.last_forecast);
  }
  if (with_metrics) {
    std::ofstream m((fs::path(dir) / "metrics.txt").string());
    write_metrics(m, out.metrics);
  }
}

void print_summary(const RunOutput& out) {
  write_metrics(std::cout, out.metrics);
  std::cout << "stops_commanded=" << out.stats.stops << '\n'
            << "forecasts=" << out.stats.forecasts << '\n'
            << "forecast_failures=" << out.stats.forecast_failures << '\n'
            << "zupt_timeouts=" << out.stats.zupt_timeouts << '\n'
            << "gated_updates=" << out.filter_stats.gated << '\n'
            << "covariance_violations=" << out.filter_stats.covariance_violations << '\n';
}

int run_simulate(const CommonFlags& f) {
  RunConfig cfg;
  apply_flags(f, cfg);
  const RunOutput out = simulate_run(cfg, !f.out.empty());
  if (!f.out.empty()) {
    write_run_log(f.out, out.log);
    write_outputs(f.out, out, true);
  }
  print_summary(out);
  return 0;
}

int run_replay(const std::string& log_dir, const CommonFlags& f) {
  const RunLog log = read_run_log(log_dir);
  RunConfig cfg;
  apply_config(log.meta, cfg, true);
  apply_flags(f, cfg);
  const RunOutput out = replay_run(log, cfg.pipeline);
  if (!f.out.empty()) write_outputs(f.out, out, !log.truth.empty());
  print_summary(out);
  return 0;
}

int run_evaluate(const std::string& trace_path, const std::string& truth_path,
                 const std::string& out_dir) {
  const MetricsReport m = evaluate(read_trace(trace_path), read_truth(truth_path));
  write_metrics(std::cout, m);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream file((fs::path(out_dir) / "metrics.txt").string());
    write_metrics(file, m);
  }
  return 0;
}

int run_forecast_demo(const CommonFlags& f) {
  RunConfig cfg;
  apply_flags(f, cfg);
  cfg.pipeline.mode = StopMode::kAutonomous;
  if (!f.distance) {
    // Enough driving to complete the first learning window.
    cfg.sim.distance =
        cfg.pipeline.autonomy.forward_speed_cmd * (cfg.pipeline.autonomy.window_duration + 4.0);
  }
  const RunOutput out = simulate_run(cfg, false);
  if (!out.last_forecast) {
    std::cerr << "forecast-demo: no forecast was produced; increase --distance\n";
    return 2;
  }
  const ForecastResult& r = *out.last_forecast;
  const std::string dir = f.out.empty() ? "." : f.out;
  fs::create_directories(dir);
  const std::string path = (fs::path(dir) / "forecast.csv").string();
  write_forecast_curve(path, r);
  std::cout << "curve=" << path << '\n'
            << "t_start_s=" << format_double(r.t(0)) << '\n'
            << "sigma_h_start_m=" << format_double(r.sigma_h(0)) << '\n'
            << "sigma_h_end_m=" << format_double(r.sigma_h(r.sigma_h.size() - 1)) << '\n'
            << "stop_time_s=" << (r.stop_time ? format_double(*r.stop_time) : "none") << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Slip-aware wheel-inertial navigation with forecast-driven ZUPT stops"};
  app.require_subcommand(1);

  CommonFlags sim_flags;
  auto* simulate = app.add_subcommand("simulate", "closed-loop simulated run");
  add_run_flags(simulate, sim_flags);
  simulate->add_option("--out", sim_flags.out, "output directory for logs and results");

  CommonFlags replay_flags;
  std::string log_dir;
  auto* replay = app.add_subcommand("replay", "replay a recorded run directory");
  replay->add_option("log", log_dir, "run directory (imu.csv, odo.csv, truth.csv, meta.txt)")
      ->required();
  add_run_flags(replay, replay_flags);
  replay->add_option("--out", replay_flags.out, "output directory");

  std::string trace_path;
  std::string truth_path;
  std::string eval_out;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "metrics of an estimate trace");
  evaluate_cmd->add_option("trace", trace_path, "estimate trace CSV")->required();
  evaluate_cmd->add_option("truth", truth_path, "truth CSV")->required();
  evaluate_cmd->add_option("--out", eval_out, "output directory");

  CommonFlags demo_flags;
  auto* demo = app.add_subcommand("forecast-demo", "write one predicted sigma_h curve");
  add_run_flags(demo, demo_flags);
  demo->add_option("--out", demo_flags.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*simulate) return run_simulate(sim_flags);
    if (*replay) return run_replay(log_dir, replay_flags);
    if (*evaluate_cmd) return run_evaluate(trace_path, truth_path, eval_out);
    if (*demo) return run_forecast_demo(demo_flags);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
