#include "slipnav/runner.hpp"

#include <cmath>

#include "slipnav/csv.hpp"
#include "slipnav/sim.hpp"

namespace slipnav {

namespace {

void finish(RunOutput& out, const Pipeline& pipe, const std::vector<TruthRow>& truth) {
  out.trace = pipe.trace();
  out.decisions = pipe.decisions();
  out.stop_times = pipe.stop_times();
  out.forecasts = pipe.forecasts();
  out.last_forecast = pipe.latest_forecast();
  out.filter_stats = pipe.filter().stats();
  out.filter_events = pipe.filter().events();
  out.stats = pipe.stats();
  if (!truth.empty() && !out.trace.empty()) {
    out.metrics = evaluate(out.trace, truth);
  }
}

TruthRow truth_row(const TruthSample& s) { return {s.t, s.nav.p_b, s.nav.v_eb_n}; }

}  // namespace

RunOutput simulate_run(const RunConfig& config, bool keep_logs) {
  const PipelineConfig& pc = config.pipeline;
  pc.validate();
  if (!(config.sim.distance > 0.0)) {
    throw InputError("simulate: distance must be positive");
  }
  const TerrainProfile terrain = terrain_preset(config.sim.terrain);
  DrivePlan plan = make_plan(config.sim.distance, config.sim.seed, pc.autonomy.forward_speed_cmd);
  plan.initial_hold = 0.0;
  SensorErrorModel sensor = config.sim.sensor;
  sensor.seed = config.sim.seed;

  RoverSim sim(plan, terrain, sensor, pc.vehicle, pc.imu_rate, pc.odo_every);
  Pipeline pipe(pc, sim.initial_state(), 0.0);

  RunOutput out;
  std::vector<TruthRow> truth;
  truth.push_back(truth_row(sim.truth()));
  out.log.t0 = 0.0;
  out.log.initial = sim.initial_state();
  out.log.imu_rate = pc.imu_rate;
  out.log.odo_rate = pc.imu_rate / pc.odo_every;
  out.log.meta = config_to_map(config);

  // Generous budget: ten times the nominal drive time plus stops.
  const double t_max = 10.0 * config.sim.distance / pc.autonomy.forward_speed_cmd + 600.0;
  while (!sim.finished()) {
    const SimStep s = sim.step(pipe.stop_requested());
    if (s.imu.t > t_max) {
      throw NumericalError("simulate: run did not complete within " + format_double(t_max) + " s");
    }
    pipe.on_imu(s.imu);
    if (s.odo) pipe.on_odometry(*s.odo);
    truth.push_back(truth_row(s.truth));
    if (keep_logs) {
      out.log.imu.push_back(s.imu);
      if (s.odo) out.log.odo.push_back(*s.odo);
    }
  }
  finish(out, pipe, truth);
  if (keep_logs) out.log.truth = std::move(truth);
  return out;
}

RunOutput replay_run(const RunLog& log, PipelineConfig config) {
  config.imu_rate = log.imu_rate;
  config.odo_every = static_cast<int>(std::lround(log.imu_rate / log.odo_rate));
  if (config.odo_every < 1) {
    throw InputError("replay: odometry rate exceeds the IMU rate");
  }
  config.validate();
  Pipeline pipe(config, log.initial, log.t0);
  std::size_t j = 0;
  for (const auto& imu : log.imu) {
    pipe.on_imu(imu);
    while (j < log.odo.size() && log.odo[j].t <= imu.t) {
      pipe.on_odometry(log.odo[j]);
      ++j;
    }
  }
  RunOutput out;
  finish(out, pipe, log.truth);
  return out;
}

}  // namespace slipnav
