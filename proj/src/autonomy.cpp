#include "slipnav/autonomy.hpp"

#include <algorithm>
#include <cmath>

namespace slipnav {

void AutonomyConfig::validate() const {
  const double v[] = {window_duration, horizon,          epsilon,          zupt_duration,
                      min_stop_interval, forward_speed_cmd, sigma_multiplier, zupt_timeout};
  for (double x : v) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw InputError("AutonomyConfig: all values must be positive and finite");
    }
  }
  if (horizon < window_duration) {
    throw InputError("AutonomyConfig: horizon must be at least the window duration");
  }
}

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::kCollecting:
      return "COLLECTING";
    case Mode::kAwaitingForecast:
      return "AWAITING_FORECAST";
    case Mode::kDrivingFree:
      return "DRIVING_FREE";
    case Mode::kCountdown:
      return "COUNTDOWN";
    case Mode::kStoppedZupt:
      return "STOPPED_ZUPT";
  }
  return "UNKNOWN";
}

AutonomyStateMachine::AutonomyStateMachine(const AutonomyConfig& config, double t0)
    : config_(config), last_stop_(t0), last_resume_(t0) {
  config_.validate();
}

void AutonomyStateMachine::enter(Mode mode, double t) {
  mode_ = mode;
  Decision d;
  d.t = t;
  d.mode = mode;
  d.epsilon = config_.epsilon;
  d.fallback = fallback_;
  if (mode == Mode::kCountdown || mode == Mode::kStoppedZupt) {
    d.predicted_stop_time = t_stop_;
  }
  if (latest_ && latest_->sigma_h.size() > 0) {
    d.sigma_h_at_horizon = latest_->sigma_h(latest_->sigma_h.size() - 1);
  }
  decisions_.push_back(d);
}

void AutonomyStateMachine::schedule_stop(double t_now, double t_stop, bool fallback) {
  fallback_ = fallback;
  double target = std::max(t_stop, t_now);
  if (have_stopped_) {
    target = std::max(target, last_stop_ + config_.min_stop_interval);
  }
  t_stop_ = target;
  enter(Mode::kCountdown, t_now);
}

std::vector<AutonomyCommand> AutonomyStateMachine::step(const AutonomyEvent& ev) {
  std::vector<AutonomyCommand> out;
  switch (ev.kind) {
    case EventKind::kTick:
    case EventKind::kStopReached:
      if (mode_ == Mode::kCountdown &&
          (ev.kind == EventKind::kStopReached || ev.t >= t_stop_)) {
        last_stop_ = ev.t;
        have_stopped_ = true;
        stop_times_.push_back(ev.t);
        enter(Mode::kStoppedZupt, ev.t);
        out.push_back({CommandKind::kStop, ev.t, 0.0});
      }
      break;

    case EventKind::kWindowReady:
      if (collecting()) {
        ++dispatched_;
        enter(Mode::kAwaitingForecast, ev.t);
        out.push_back({CommandKind::kDispatchForecast, ev.t, 0.0});
      }
      break;

    case EventKind::kForecastReady:
      if (mode_ != Mode::kAwaitingForecast) break;
      if (!ev.forecast || ev.forecast->aborted) {
        return step(AutonomyEvent::forecast_failed(ev.t));
      }
      latest_ = ev.forecast;
      if (latest_->stop_time) {
        schedule_stop(ev.t, *latest_->stop_time, false);
        if (t_stop_ <= ev.t) {
          auto now = step(AutonomyEvent::stop_reached(ev.t));
          out.insert(out.end(), now.begin(), now.end());
        }
      } else {
        fallback_ = false;
        enter(Mode::kDrivingFree, ev.t);
      }
      break;

    case EventKind::kForecastFailed:
      if (mode_ != Mode::kAwaitingForecast) break;
      schedule_stop(ev.t, last_resume_ + config_.window_duration, true);
      if (t_stop_ <= ev.t) {
        auto now = step(AutonomyEvent::stop_reached(ev.t));
        out.insert(out.end(), now.begin(), now.end());
      }
      break;

    case EventKind::kZuptDone:
      if (mode_ == Mode::kStoppedZupt) {
        last_resume_ = ev.t;
        fallback_ = false;
        enter(Mode::kCollecting, ev.t);
        out.push_back({CommandKind::kDrive, ev.t, config_.forward_speed_cmd});
      }
      break;
  }
  return out;
}

bool zupt_stationarity_check(const std::deque<ImuSample>& buffer,
                             const StationarityThresholds& thresholds) {
  if (buffer.empty()) {
    throw InputError("zupt_stationarity_check: empty IMU buffer");
  }
  const double n = static_cast<double>(buffer.size());
  Vec3 mean_f = Vec3::Zero();
  Vec3 mean_w = Vec3::Zero();
  for (const auto& s : buffer) {
    mean_f += s.f_ib_b;
    mean_w += s.omega_ib_b;
  }
  mean_f /= n;
  mean_w /= n;
  Vec3 var_f = Vec3::Zero();
  Vec3 var_w = Vec3::Zero();
  for (const auto& s : buffer) {
    var_f += (s.f_ib_b - mean_f).cwiseAbs2();
    var_w += (s.omega_ib_b - mean_w).cwiseAbs2();
  }
  var_f /= n;
  var_w /= n;
  return var_f.maxCoeff() < thresholds.accel_var && var_w.maxCoeff() < thresholds.gyro_var;
}

}  // namespace slipnav
