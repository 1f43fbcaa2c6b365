#ifndef SLIPNAV_RUNNER_HPP_
#define SLIPNAV_RUNNER_HPP_

#include <optional>
#include <vector>

#include "slipnav/config.hpp"
#include "slipnav/metrics.hpp"
#include "slipnav/pipeline.hpp"
#include "slipnav/run_log.hpp"

namespace slipnav {

struct RunOutput {
  RunLog log;  // sensor streams and truth (empty unless kept)
  std::vector<TraceRow> trace;
  std::vector<Decision> decisions;
  std::vector<double> stop_times;
  std::vector<ForecastRecord> forecasts;
  std::optional<ForecastResult> last_forecast;
  MetricsReport metrics;
  FilterStats filter_stats;
  PipelineStats stats;
  std::vector<FilterEvent> filter_events;
};

/// Closed-loop simulation: the simulated rover honours the pipeline's stop
/// requests. With `keep_logs` the sensor streams are returned for writing.
RunOutput simulate_run(const RunConfig& config, bool keep_logs = true);

/// Open-loop replay of recorded streams: stop requests are logged but the
/// motion follows the recording.
RunOutput replay_run(const RunLog& log, PipelineConfig config);

}  // namespace slipnav

#endif  // SLIPNAV_RUNNER_HPP_
