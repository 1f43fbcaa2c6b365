#ifndef SLIPNAV_AUTONOMY_HPP_
#define SLIPNAV_AUTONOMY_HPP_

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "slipnav/forecast.hpp"
#include "slipnav/nav_core.hpp"

namespace slipnav {

struct AutonomyConfig {
  double window_duration = 15.0;    // s
  double horizon = 60.0;            // s
  double epsilon = 3.0;             // m
  double zupt_duration = 5.0;       // s, counted from the first stationary check
  double min_stop_interval = 15.0;  // s, between consecutive stop commands
  double forward_speed_cmd = 0.8;   // m/s
  double sigma_multiplier = 1.0;
  double zupt_timeout = 10.0;       // s without a stationary check before resuming

  void validate() const;
};

enum class Mode { kCollecting, kAwaitingForecast, kDrivingFree, kCountdown, kStoppedZupt };

const char* to_string(Mode mode);

enum class EventKind { kTick, kWindowReady, kForecastReady, kForecastFailed, kStopReached, kZuptDone };

struct AutonomyEvent {
  EventKind kind = EventKind::kTick;
  double t = 0.0;
  std::optional<ForecastResult> forecast;  // for kForecastReady

  static AutonomyEvent tick(double t) { return {EventKind::kTick, t, std::nullopt}; }
  static AutonomyEvent window_ready(double t) { return {EventKind::kWindowReady, t, std::nullopt}; }
  static AutonomyEvent forecast_ready(double t, ForecastResult r) {
    return {EventKind::kForecastReady, t, std::move(r)};
  }
  static AutonomyEvent forecast_failed(double t) {
    return {EventKind::kForecastFailed, t, std::nullopt};
  }
  static AutonomyEvent stop_reached(double t) { return {EventKind::kStopReached, t, std::nullopt}; }
  static AutonomyEvent zupt_done(double t) { return {EventKind::kZuptDone, t, std::nullopt}; }
};

enum class CommandKind { kDrive, kStop, kDispatchForecast };

struct AutonomyCommand {
  CommandKind kind = CommandKind::kDrive;
  double t = 0.0;
  double speed = 0.0;  // m/s for kDrive
};

/// One row of the decision log.
struct Decision {
  double t = 0.0;
  Mode mode = Mode::kCollecting;
  std::optional<double> predicted_stop_time;
  double epsilon = 0.0;
  double sigma_h_at_horizon = 0.0;
  bool fallback = false;
};

/// Drive / collect / forecast / stop state machine. Transitions are pure
/// functions of the delivered events; the caller executes the commands.
class AutonomyStateMachine {
 public:
  explicit AutonomyStateMachine(const AutonomyConfig& config, double t0 = 0.0);

  std::vector<AutonomyCommand> step(const AutonomyEvent& event);

  Mode mode() const { return mode_; }
  /// Scheduled stop time while in kCountdown.
  double t_stop() const { return t_stop_; }
  /// Time the current stop started while in kStoppedZupt.
  double stop_started() const { return last_stop_; }
  bool fallback_active() const { return fallback_; }
  bool collecting() const { return mode_ == Mode::kCollecting || mode_ == Mode::kDrivingFree; }
  const std::optional<ForecastResult>& latest_forecast() const { return latest_; }
  const std::vector<Decision>& decisions() const { return decisions_; }
  const std::vector<double>& stop_times() const { return stop_times_; }
  int forecasts_dispatched() const { return dispatched_; }
  const AutonomyConfig& config() const { return config_; }

 private:
  void enter(Mode mode, double t);
  void schedule_stop(double t_now, double t_stop, bool fallback);

  AutonomyConfig config_;
  Mode mode_ = Mode::kCollecting;
  double t_stop_ = 0.0;
  double last_stop_;
  double last_resume_;
  bool have_stopped_ = false;
  bool fallback_ = false;
  int dispatched_ = 0;
  std::optional<ForecastResult> latest_;
  std::vector<Decision> decisions_;
  std::vector<double> stop_times_;
};

/// Variance test over a buffered IMU window: the largest per-axis accel
/// variance below accel_var and the largest per-axis gyro variance below
/// gyro_var. Throws InputError on an empty buffer.
struct StationarityThresholds {
  double accel_var = 0.02;  // (m/s^2)^2
  double gyro_var = 1e-5;   // (rad/s)^2
};

bool zupt_stationarity_check(const std::deque<ImuSample>& buffer,
                             const StationarityThresholds& thresholds = {});

}  // namespace slipnav

#endif  // SLIPNAV_AUTONOMY_HPP_
