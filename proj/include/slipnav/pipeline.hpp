#ifndef SLIPNAV_PIPELINE_HPP_
#define SLIPNAV_PIPELINE_HPP_

#include <deque>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "slipnav/autonomy.hpp"
#include "slipnav/eskf.hpp"
#include "slipnav/forecast.hpp"
#include "slipnav/gp.hpp"
#include "slipnav/slip.hpp"

namespace slipnav {

/// How stops are scheduled: slip-forecast driven, fixed interval, or never
/// (blind wheel-inertial odometry without ZUPT or NHC).
enum class StopMode { kAutonomous, kPeriodic, kNone };

const char* to_string(StopMode mode);
StopMode parse_stop_mode(const std::string& text);

struct PipelineConfig {
  StopMode mode = StopMode::kAutonomous;
  double periodic_interval = 15.0;  // s of driving between periodic stops
  AutonomyConfig autonomy;
  FilterConfig filter;
  VehicleParams vehicle;
  KernelParams gp_init;
  OptimizerOptions gp_options;
  StationarityThresholds stationarity;
  double stationarity_window = 0.5;  // s
  double stationary_wheel_speed = 0.01;  // m/s, encoder speed counted as standing still
  double imu_rate = 50.0;            // Hz
  int odo_every = 5;                 // IMU samples per odometry sample
  double nhc_min_speed = 0.05;       // m/s
  // Encoder speed is scaled by (1 - mean slip) of the last completed window
  // and its forward noise widened by the slip spread.
  bool slip_compensation = true;
  double odometry_noise_prior = 1.0;  // (m/s)^2 until the first window is in
  double slip_compensation_min = 0.03;  // smaller mean slip is left uncorrected
  // Mode none runs as plain wheel-inertial odometry: raw encoder speed with
  // this velocity noise in place of filter.R_odo.
  double blind_odometry_noise = 0.04;  // (m/s)^2
  double forecast_yaw_var = 1.0;     // (rad/s)^2
  bool forecast_from_last_stop = true;  // leg covariance as P0
  bool initial_alignment = true;     // stationary ZUPT period before driving
  bool monitor_covariance = true;
  bool asynchronous_forecast = true;

  void validate() const;
  bool compensating() const { return slip_compensation && mode != StopMode::kNone; }
};

/// Slip statistics of the last completed window, as used by the live filter.
struct SlipEstimate {
  bool valid = false;
  double mean = 0.0;
  double variance = 0.0;
};

struct TraceRow {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  double sigma_h = 0.0;  // horizontal 1-sigma of the filter covariance
};

struct ForecastRecord {
  double t = 0.0;
  bool failed = false;
  KernelParams params;
  bool optimizer_fallback = false;
  double mu_vel = 0.0;
  std::optional<double> stop_time;
  double sigma_h_start = 0.0;
  double sigma_h_end = 0.0;
};

struct PipelineStats {
  int stops = 0;
  int zupt_timeouts = 0;
  int forecasts = 0;
  int forecast_failures = 0;
  int window_restarts = 0;
};

/// Live estimator plus stop policy. Feed samples in time order: for each IMU
/// epoch call on_imu(), then on_odometry() if an odometry sample shares it.
class Pipeline {
 public:
  Pipeline(const PipelineConfig& config, const NavState& initial, double t0);
  ~Pipeline();

  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  void on_imu(const ImuSample& imu);
  void on_odometry(const WheelOdomSample& odo);

  /// Whether the vehicle is currently commanded to stand still.
  bool stop_requested() const { return stopping_; }

  const Eskf& filter() const { return filter_; }
  const std::vector<TraceRow>& trace() const { return trace_; }
  const std::vector<double>& stop_times() const { return stop_times_; }
  const std::vector<Decision>& decisions() const;
  const std::vector<ForecastRecord>& forecasts() const { return forecast_log_; }
  const std::optional<ForecastResult>& latest_forecast() const { return latest_curve_; }
  const PipelineStats& stats() const { return stats_; }
  const SlipEstimate& slip_estimate() const { return slip_estimate_; }
  const PipelineConfig& config() const { return config_; }

 private:
  struct Job {
    ForecastResult result;
    ForecastRecord record;
  };

  void begin_stop(double t, bool counted);
  void handle_stop(const ImuSample& imu);
  void finish_stop(double t);
  void collect_forecast(double t);
  void dispatch(SlipWindow window, double t);
  static Job run_forecast(SlipWindow window, ForecastRequest request,
                          PipelineConfig config);
  void execute(const std::vector<AutonomyCommand>& commands);
  OdomSpeed compensate(const OdomSpeed& raw, double v_forward);

  PipelineConfig config_;
  Eskf filter_;
  std::optional<AutonomyStateMachine> machine_;
  SlipCollector collector_;
  std::deque<ImuSample> buffer_;
  std::size_t buffer_capacity_;

  bool stopping_ = false;
  bool aligning_ = false;
  double stop_command_t_ = 0.0;
  std::optional<double> zupt_start_;
  double last_resume_;

  std::optional<std::future<Job>> pending_;
  std::optional<ForecastResult> latest_curve_;
  SlipEstimate slip_estimate_;
  double slip_sum_ = 0.0;
  double slip_sq_sum_ = 0.0;
  double speed_sum_ = 0.0;
  double speed_sq_sum_ = 0.0;
  int slip_count_ = 0;
  int slip_target_;
  Vec3 interval_velocity_sum_ = Vec3::Zero();
  int interval_samples_ = 0;
  OdomSpeed last_odo_;
  bool have_odo_ = false;

  std::vector<TraceRow> trace_;
  std::vector<double> stop_times_;
  std::vector<ForecastRecord> forecast_log_;
  std::vector<Decision> no_decisions_;
  PipelineStats stats_;
};

}  // namespace slipnav

#endif  // SLIPNAV_PIPELINE_HPP_
