#ifndef SLIPNAV_RUN_LOG_HPP_
#define SLIPNAV_RUN_LOG_HPP_

#include <string>
#include <vector>

#include "slipnav/autonomy.hpp"
#include "slipnav/config.hpp"
#include "slipnav/forecast.hpp"
#include "slipnav/metrics.hpp"
#include "slipnav/nav_core.hpp"
#include "slipnav/pipeline.hpp"

namespace slipnav {

/// Canonical on-disk run: imu.csv, odo.csv, truth.csv and meta.txt in one
/// directory.
struct RunLog {
  double t0 = 0.0;
  NavState initial;
  double imu_rate = 50.0;  // Hz
  double odo_rate = 10.0;  // Hz
  std::vector<ImuSample> imu;
  std::vector<WheelOdomSample> odo;
  std::vector<TruthRow> truth;
  KeyValueMap meta;  // extra key=value pairs (configuration, seed, ...)
};

inline const std::vector<std::string> kImuColumns = {"t_s", "wx", "wy", "wz", "fx", "fy", "fz"};
inline const std::vector<std::string> kOdoColumns = {"t_s", "w_fl", "w_fr", "w_rl", "w_rr"};
inline const std::vector<std::string> kTruthColumns = {"t_s", "e_m", "n_m", "u_m",
                                                       "v_e", "v_n", "v_u"};
inline const std::vector<std::string> kTraceColumns = {"t_s", "e_m", "n_m", "u_m",
                                                       "v_e", "v_n", "v_u", "sigma_h_m"};

void write_run_log(const std::string& dir, const RunLog& log);

/// Parses and validates a run directory: strictly increasing timestamps,
/// declared rates matching the data within 1 %. Errors name file and line.
RunLog read_run_log(const std::string& dir);

void write_trace(const std::string& path, const std::vector<TraceRow>& trace);
std::vector<TraceRow> read_trace(const std::string& path);
std::vector<TruthRow> read_truth(const std::string& path);

/// Decision log: t_s, mode, predicted_stop_time_s, epsilon_m, sigma_h_at_horizon_m, fallback.
void write_decisions(const std::string& path, const std::vector<Decision>& decisions);

/// One row per dispatched forecast with the fitted hyperparameters.
void write_forecast_records(const std::string& path, const std::vector<ForecastRecord>& records);

/// Forecast curve: t_s, sigma_h_m.
void write_forecast_curve(const std::string& path, const ForecastResult& result);

}  // namespace slipnav

#endif  // SLIPNAV_RUN_LOG_HPP_
