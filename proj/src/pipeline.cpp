#include "slipnav/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace slipnav {

namespace {

FilterConfig effective_filter(const PipelineConfig& config) {
  FilterConfig f = config.filter;
  if (config.mode == StopMode::kNone) f.R_odo = config.blind_odometry_noise;
  return f;
}

}  // namespace

const char* to_string(StopMode mode) {
  switch (mode) {
    case StopMode::kAutonomous:
      return "autonomous";
    case StopMode::kPeriodic:
      return "periodic";
    case StopMode::kNone:
      return "none";
  }
  return "unknown";
}

StopMode parse_stop_mode(const std::string& text) {
  if (text == "autonomous") return StopMode::kAutonomous;
  if (text == "periodic") return StopMode::kPeriodic;
  if (text == "none") return StopMode::kNone;
  throw InputError("unknown mode '" + text + "' (expected autonomous, periodic or none)");
}

void PipelineConfig::validate() const {
  autonomy.validate();
  filter.validate();
  vehicle.validate();
  gp_init.validate();
  if (!(periodic_interval > 0.0) || !(stationarity_window > 0.0) || !(imu_rate > 0.0) ||
      odo_every < 1 || !(nhc_min_speed >= 0.0) || !(forecast_yaw_var >= 0.0) ||
      !(stationary_wheel_speed > 0.0) || !(odometry_noise_prior > 0.0) || !(blind_odometry_noise > 0.0) ||
      !(slip_compensation_min >= 0.0)) {
    throw InputError("PipelineConfig: invalid rates or intervals");
  }
}

Pipeline::Pipeline(const PipelineConfig& config, const NavState& initial, double t0)
    : config_(config),
      filter_(initial, effective_filter(config), config.vehicle, t0),
      collector_(config.autonomy.window_duration, config.imu_rate / config.odo_every),
      last_resume_(t0) {
  config_.validate();
  buffer_capacity_ = static_cast<std::size_t>(
      std::max(1L, std::lround(config_.stationarity_window * config_.imu_rate)));
  filter_.set_covariance_monitor(config_.monitor_covariance);
  slip_target_ = collector_.target_samples();
  if (config_.compensating()) {
    filter_.set_forward_odometry_noise(std::max(config_.filter.R_odo, config_.odometry_noise_prior));
  }
  if (config_.mode != StopMode::kNone && config_.initial_alignment) {
    aligning_ = true;
    begin_stop(t0, false);
  } else if (config_.mode == StopMode::kAutonomous) {
    machine_.emplace(config_.autonomy, t0);
  }
}

Pipeline::~Pipeline() {
  if (pending_ && pending_->valid()) pending_->wait();
}

const std::vector<Decision>& Pipeline::decisions() const {
  return machine_ ? machine_->decisions() : no_decisions_;
}

void Pipeline::on_imu(const ImuSample& imu) {
  filter_.propagate(imu);
  const double t = imu.t;

  buffer_.push_back(imu);
  while (buffer_.size() > buffer_capacity_) buffer_.pop_front();

  collect_forecast(t);
  if (machine_) {
    execute(machine_->step(AutonomyEvent::tick(t)));
  }
  if (config_.mode == StopMode::kPeriodic && !stopping_ &&
      t - last_resume_ >= config_.periodic_interval) {
    begin_stop(t, true);
  }

  if (stopping_) {
    handle_stop(imu);
  } else if (config_.mode != StopMode::kNone && have_odo_ &&
             std::abs(last_odo_.v_odo) > config_.nhc_min_speed) {
    const Vec3 vb = filter_.body_velocity();
    filter_.nhc(imu.omega_ib_b, slip_angle(vb.y(), vb.x()));
  }

  interval_velocity_sum_ += filter_.body_velocity();
  ++interval_samples_;

  const auto& est = filter_.estimate();
  trace_.push_back({t, est.nav.p_b, est.nav.v_eb_n, horizontal_sigma(est.P)});
}

void Pipeline::on_odometry(const WheelOdomSample& odo) {
  if (!is_finite(odo)) {
    throw InputError("Pipeline: non-finite odometry sample at t=" + std::to_string(odo.t));
  }
  last_odo_ = wheel_speed(odo, config_.vehicle);
  have_odo_ = true;
  // Encoder rates are averages over the odometry interval; compare them with
  // the filter velocity averaged over the same interval.
  const Vec3 v_interval = interval_samples_ > 0
                              ? Vec3(interval_velocity_sum_ / interval_samples_)
                              : filter_.body_velocity();
  interval_velocity_sum_.setZero();
  interval_samples_ = 0;
  const Vec3 omega = buffer_.empty() ? Vec3::Zero() : buffer_.back().omega_ib_b;
  filter_.wheel_odometry(
      config_.compensating() ? compensate(last_odo_, v_interval.x()) : last_odo_, odo.t, omega);

  if (!machine_) return;
  const bool moving = machine_->collecting() && !stopping_;
  const int restarts_before = collector_.restarts();
  const bool ready =
      collector_.add(odo.t, v_interval, odo, config_.vehicle, moving);
  stats_.window_restarts += collector_.restarts() - restarts_before;
  if (ready && machine_->collecting() && !pending_) {
    SlipWindow window = collector_.take();
    for (const auto& c : machine_->step(AutonomyEvent::window_ready(odo.t))) {
      if (c.kind == CommandKind::kDispatchForecast) dispatch(std::move(window), odo.t);
    }
  }
}

OdomSpeed Pipeline::compensate(const OdomSpeed& raw, double v_forward) {
  if (!stopping_ && std::abs(raw.v_odo) > config_.nhc_min_speed) {
    const double s = slip_ratio(v_forward, raw.v_odo, 1.0, 0.0).s;
    slip_sum_ += s;
    slip_sq_sum_ += s * s;
    speed_sum_ += raw.v_odo * s;
    speed_sq_sum_ += raw.v_odo * s * raw.v_odo * s;
    if (++slip_count_ >= slip_target_) {
      const double n = slip_count_;
      slip_estimate_.valid = true;
      slip_estimate_.mean = slip_sum_ / n;
      slip_estimate_.variance = std::max(0.0, slip_sq_sum_ / n - slip_estimate_.mean * slip_estimate_.mean);
      // Spread in speed units, so low-speed ramps around stops barely count.
      const double mean_loss = speed_sum_ / n;
      filter_.set_forward_odometry_noise(
          config_.filter.R_odo + std::max(0.0, speed_sq_sum_ / n - mean_loss * mean_loss));
      slip_sum_ = slip_sq_sum_ = speed_sum_ = speed_sq_sum_ = 0.0;
      slip_count_ = 0;
    }
  }
  OdomSpeed out = raw;
  if (std::abs(slip_estimate_.mean) >= config_.slip_compensation_min) {
    out.v_odo = raw.v_odo * (1.0 - slip_estimate_.mean);
  }
  return out;
}

void Pipeline::begin_stop(double t, bool counted) {
  stopping_ = true;
  stop_command_t_ = t;
  zupt_start_.reset();
  if (counted) {
    stop_times_.push_back(t);
    ++stats_.stops;
  }
}

void Pipeline::handle_stop(const ImuSample& imu) {
  const double t = imu.t;
  // A steady deceleration has low IMU variance too, so the encoders must agree.
  const bool wheels_still =
      have_odo_ && std::abs(last_odo_.v_odo) < config_.stationary_wheel_speed;
  if (wheels_still && buffer_.size() >= buffer_capacity_ &&
      zupt_stationarity_check(buffer_, config_.stationarity)) {
    if (!zupt_start_) zupt_start_ = t;
    if (filter_.zupt(imu.omega_ib_b).status == UpdateStatus::kGated) {
      // The standstill is confirmed by wheels and IMU, so the filter is
      // overconfident: widen the velocity uncertainty and try again.
      const Vec3 v = filter_.nav().v_eb_n;
      filter_.inflate_velocity(v.cwiseAbs2() + Vec3::Constant(config_.filter.R_zupt_v));
      filter_.zupt(imu.omega_ib_b);
    }
  }
  if (zupt_start_) {
    if (t - *zupt_start_ >= config_.autonomy.zupt_duration) finish_stop(t);
  } else if (t - stop_command_t_ > config_.autonomy.zupt_timeout) {
    ++stats_.zupt_timeouts;
    finish_stop(t);
  }
}

void Pipeline::finish_stop(double t) {
  stopping_ = false;
  zupt_start_.reset();
  last_resume_ = t;
  filter_.restart_leg();
  collector_.reset();
  if (aligning_) {
    aligning_ = false;
    if (config_.mode == StopMode::kAutonomous) machine_.emplace(config_.autonomy, t);
    return;
  }
  if (machine_) execute(machine_->step(AutonomyEvent::zupt_done(t)));
}

void Pipeline::execute(const std::vector<AutonomyCommand>& commands) {
  for (const auto& c : commands) {
    if (c.kind == CommandKind::kStop) begin_stop(c.t, true);
  }
}

void Pipeline::dispatch(SlipWindow window, double t) {
  ForecastRequest req;
  req.now = t;
  req.P0 = config_.forecast_from_last_stop ? filter_.leg_covariance() : filter_.covariance();
  req.F = filter_.last_F();
  req.Q = filter_.last_Q();
  req.H = odometry_jacobian(filter_.estimate(), config_.vehicle);
  req.mu_vel = window.mean_forward_speed;
  req.horizon = config_.autonomy.horizon;
  req.imu_rate = config_.imu_rate;
  req.odo_every = config_.odo_every;
  req.yaw_var = config_.forecast_yaw_var;
  ++stats_.forecasts;
  const auto policy =
      config_.asynchronous_forecast ? std::launch::async : std::launch::deferred;
  pending_ = std::async(policy, &Pipeline::run_forecast, std::move(window), std::move(req),
                        config_);
}

Pipeline::Job Pipeline::run_forecast(SlipWindow window, ForecastRequest req,
                                     PipelineConfig config) {
  Job job;
  job.record.t = req.now;
  job.record.mu_vel = req.mu_vel;
  try {
    const OptimizeResult opt = optimize_hyperparams(window, config.gp_init, config.gp_options);
    job.record.params = opt.params;
    job.record.optimizer_fallback = opt.fallback;
    const GpModel model = fit(window, opt.params);
    const double odo_dt = config.odo_every / config.imu_rate;
    req.prediction = predict(model, future_times(req.now, req.horizon, odo_dt));
    job.result = forecast_covariance(req, config.autonomy.epsilon,
                                     config.autonomy.sigma_multiplier);
  } catch (const std::exception&) {
    job.result = ForecastResult{};
    job.result.aborted = true;
  }
  job.record.failed = job.result.aborted;
  job.record.stop_time = job.result.stop_time;
  if (job.result.sigma_h.size() > 0) {
    job.record.sigma_h_start = job.result.sigma_h(0);
    job.record.sigma_h_end = job.result.sigma_h(job.result.sigma_h.size() - 1);
  }
  return job;
}

void Pipeline::collect_forecast(double t) {
  if (!pending_) return;
  Job job = pending_->get();
  pending_.reset();
  forecast_log_.push_back(job.record);
  if (job.result.aborted) {
    ++stats_.forecast_failures;
    execute(machine_->step(AutonomyEvent::forecast_failed(t)));
    return;
  }
  latest_curve_ = job.result;
  execute(machine_->step(AutonomyEvent::forecast_ready(t, std::move(job.result))));
}

}  // namespace slipnav
