#include "slipnav/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace slipnav {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kStoppedSpeed = 1e-3;  // m/s
constexpr double kWaypointRadius = 2.0;  // m
constexpr double kVibrationFreqAccel = 9.3;  // Hz
constexpr double kVibrationFreqGyro = 7.7;   // Hz

double wrap_angle(double a) {
  while (a > kPi) a -= 2.0 * kPi;
  while (a < -kPi) a += 2.0 * kPi;
  return a;
}

void require_nonnegative(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw InputError(std::string("SensorErrorModel: ") + name + " must be non-negative");
  }
}

TerrainProfile make_profile(const std::string& name, double mean, double std_dev, double rate,
                            double slope) {
  TerrainProfile p;
  p.name = name;
  const double slopes[] = {0.0, slope, 0.0, -slope};
  const double lengths[] = {40.0, 30.0, 40.0, 30.0};
  for (int i = 0; i < 4; ++i) {
    p.segments.push_back({lengths[i], mean, std_dev, rate, slopes[i]});
  }
  return p;
}

}  // namespace

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * kPi * u2);
  return r * std::cos(2.0 * kPi * u2);
}

void TerrainProfile::validate() const {
  if (segments.empty()) {
    throw InputError("TerrainProfile: no segments");
  }
  for (const auto& s : segments) {
    if (!(s.length > 0.0)) throw InputError("TerrainProfile: segment length must be positive");
    if (s.slip_mean < 0.0 || s.slip_std < 0.0 || s.slip_impulse_rate < 0.0) {
      throw InputError("TerrainProfile: slip statistics must be non-negative");
    }
    if (!(s.slip_mean + 3.0 * s.slip_std < 1.0)) {
      throw InputError("TerrainProfile: slip_mean + 3 slip_std must stay below 1");
    }
    if (!(std::abs(s.slope) < 0.5)) throw InputError("TerrainProfile: slope too steep");
  }
  if (!(slip_tau > 0.0) || impulse_min < 0.0 || impulse_max < impulse_min ||
      !(impulse_duration_min > 0.0) || impulse_duration_max < impulse_duration_min) {
    throw InputError("TerrainProfile: invalid slip process parameters");
  }
}

const SlipSegment& TerrainProfile::segment_at(double distance) const {
  double total = 0.0;
  for (const auto& s : segments) total += s.length;
  double d = std::fmod(std::max(0.0, distance), total);
  for (const auto& s : segments) {
    if (d < s.length) return s;
    d -= s.length;
  }
  return segments.back();
}

double TerrainProfile::mean_slip() const {
  double total = 0.0;
  double acc = 0.0;
  for (const auto& s : segments) {
    total += s.length;
    acc += s.length * s.slip_mean;
  }
  return acc / total;
}

std::vector<TerrainProfile> terrain_presets() {
  return {
      make_profile("paved", 0.01, 0.01, 0.0, 0.0),
      make_profile("unpaved", 0.12, 0.06, 2.5, 0.05),
      make_profile("gravel", 0.24, 0.09, 3.5, 0.06),
      make_profile("rough", 0.25, 0.10, 4.0, 0.08),
  };
}

TerrainProfile terrain_preset(const std::string& name) {
  for (auto& p : terrain_presets()) {
    if (p.name == name) return p;
  }
  throw InputError("unknown terrain preset '" + name + "'");
}

void SensorErrorModel::validate() const {
  require_nonnegative(gyro_noise_density, "gyro_noise_density");
  require_nonnegative(accel_noise_density, "accel_noise_density");
  require_nonnegative(gyro_bias_sigma, "gyro_bias_sigma");
  require_nonnegative(accel_bias_sigma, "accel_bias_sigma");
  require_nonnegative(gyro_bias_rw, "gyro_bias_rw");
  require_nonnegative(accel_bias_rw, "accel_bias_rw");
  require_nonnegative(vibration_accel, "vibration_accel");
  require_nonnegative(vibration_gyro, "vibration_gyro");
  if (!(encoder_resolution > 0.0)) {
    throw InputError("SensorErrorModel: encoder_resolution must be positive");
  }
  if (!gyro_bias_fixed.allFinite() || !accel_bias_fixed.allFinite()) {
    throw InputError("SensorErrorModel: non-finite fixed bias");
  }
}

SensorErrorModel SensorErrorModel::ideal(std::uint64_t seed) {
  SensorErrorModel m;
  m.gyro_noise_density = 0.0;
  m.accel_noise_density = 0.0;
  m.gyro_bias_sigma = 0.0;
  m.accel_bias_sigma = 0.0;
  m.gyro_bias_rw = 0.0;
  m.accel_bias_rw = 0.0;
  m.vibration_accel = 0.0;
  m.vibration_gyro = 0.0;
  m.encoder_resolution = 1e-9;
  m.seed = seed;
  return m;
}

void DrivePlan::validate() const {
  if (waypoints.size() < 2) throw InputError("DrivePlan: at least two waypoints required");
  if (!(speed > 0.0) || !(distance > 0.0) || !(max_accel > 0.0) || !(max_yaw_rate > 0.0) ||
      !(heading_gain > 0.0) || !(pitch_tau > 0.0) || initial_hold < 0.0) {
    throw InputError("DrivePlan: speed, distance and limits must be positive");
  }
  double length = 0.0;
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    length += (waypoints[i] - waypoints[i - 1]).norm();
  }
  if (length < distance) {
    throw InputError("DrivePlan: route is shorter than the requested distance");
  }
}

DrivePlan make_plan(double distance, std::uint64_t seed, double speed) {
  if (!(distance > 0.0)) throw InputError("make_plan: distance must be positive");
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  DrivePlan plan;
  plan.speed = speed;
  plan.distance = distance;
  Eigen::Vector2d p = Eigen::Vector2d::Zero();
  double heading = 0.0;
  double length = 0.0;
  plan.waypoints.push_back(p);
  while (length < distance + 100.0) {
    const double leg = rng.uniform(20.0, 40.0);
    p += leg * Eigen::Vector2d(std::cos(heading), std::sin(heading));
    plan.waypoints.push_back(p);
    length += leg;
    heading = wrap_angle(heading + rng.uniform(-kPi / 3.0, kPi / 3.0));
  }
  return plan;
}

DrivePlan straight_plan(double distance, double speed) {
  DrivePlan plan;
  plan.speed = speed;
  plan.distance = distance;
  plan.waypoints = {Eigen::Vector2d::Zero(), Eigen::Vector2d(distance + 100.0, 0.0)};
  return plan;
}

RoverSim::RoverSim(const DrivePlan& plan, const TerrainProfile& terrain,
                   const SensorErrorModel& errors, const VehicleParams& params,
                   double imu_rate, int odo_every)
    : plan_(plan),
      terrain_(terrain),
      errors_(errors),
      params_(params),
      dt_(1.0 / imu_rate),
      odo_every_(odo_every),
      rng_(errors.seed) {
  plan_.validate();
  terrain_.validate();
  errors_.validate();
  params_.validate();
  if (!(imu_rate > 0.0) || odo_every < 1) {
    throw InputError("RoverSim: imu_rate and odo_every must be positive");
  }
  const Eigen::Vector2d d = plan_.waypoints[1] - plan_.waypoints[0];
  heading_ = std::atan2(d.y(), d.x());
  initial_.C_b_n = attitude_from_heading_pitch(heading_, 0.0);
  initial_.p_b << plan_.waypoints[0], 0.0;
  truth_.nav = initial_;
  truth_.gyro_bias = errors_.gyro_bias_sigma * rng_.normal3() + errors_.gyro_bias_fixed;
  truth_.accel_bias = errors_.accel_bias_sigma * rng_.normal3() + errors_.accel_bias_fixed;
  base_slip_ = terrain_.segment_at(0.0).slip_mean;
  vib_phase_a_ = rng_.uniform(0.0, 2.0 * kPi);
  vib_phase_g_ = rng_.uniform(0.0, 2.0 * kPi);
}

double RoverSim::update_slip(bool moving) {
  const SlipSegment& seg = terrain_.segment_at(truth_.distance);
  // Base slip: Ornstein-Uhlenbeck process around the segment mean.
  const double tau = terrain_.slip_tau;
  base_slip_ += (seg.slip_mean - base_slip_) * dt_ / tau +
                seg.slip_std * std::sqrt(2.0 * dt_ / tau) * rng_.normal();
  // Impulses: Poisson arrivals with a triangular profile.
  const double arrival = rng_.uniform();
  if (impulse_left_ <= 0.0 && moving && arrival < seg.slip_impulse_rate / 60.0 * dt_) {
    impulse_duration_ = rng_.uniform(terrain_.impulse_duration_min, terrain_.impulse_duration_max);
    impulse_amp_ = rng_.uniform(terrain_.impulse_min, terrain_.impulse_max);
    impulse_left_ = impulse_duration_;
  }
  double impulse = 0.0;
  if (impulse_left_ > 0.0) {
    const double phase = 1.0 - impulse_left_ / impulse_duration_;
    impulse = impulse_amp_ * (1.0 - std::abs(2.0 * phase - 1.0));
    impulse_left_ -= dt_;
  }
  if (!moving) return 0.0;
  return std::clamp(base_slip_ + impulse, 0.0, 0.95);
}

SimStep RoverSim::step(bool stop_requested) {
  ++k_;
  const double t = static_cast<double>(k_) * dt_;
  const NavState prev = truth_.nav;
  const double u_prev = truth_.speed;

  const bool hold = t <= plan_.initial_hold;
  const double u_cmd = (stop_requested || hold || finished()) ? 0.0 : plan_.speed;
  const double du = std::clamp(u_cmd - u_prev, -plan_.max_accel * dt_, plan_.max_accel * dt_);
  double u = u_prev + du;
  if (u < kStoppedSpeed && u_cmd == 0.0) u = 0.0;

  if (u > 0.05 && waypoint_ < plan_.waypoints.size()) {
    const Eigen::Vector2d pos = prev.p_b.head<2>();
    while (waypoint_ + 1 < plan_.waypoints.size() &&
           (plan_.waypoints[waypoint_] - pos).norm() < kWaypointRadius) {
      ++waypoint_;
    }
    const Eigen::Vector2d d = plan_.waypoints[waypoint_] - pos;
    const double err = wrap_angle(std::atan2(d.y(), d.x()) - heading_);
    const double rate =
        std::clamp(plan_.heading_gain * err, -plan_.max_yaw_rate, plan_.max_yaw_rate);
    heading_ = wrap_angle(heading_ + rate * dt_);
  }
  const double slope = terrain_.segment_at(truth_.distance).slope;
  pitch_ += (slope - pitch_) * dt_ / plan_.pitch_tau;

  NavState nav;
  nav.C_b_n = attitude_from_heading_pitch(heading_, pitch_);
  nav.v_eb_n = nav.C_b_n * Vec3(u, 0.0, 0.0);
  nav.p_b = prev.p_b + 0.5 * (prev.v_eb_n + nav.v_eb_n) * dt_;

  // Sensor values consistent with the discrete truth under the strapdown scheme.
  const Vec3 omega = log_so3(prev.C_b_n.transpose() * nav.C_b_n) / dt_;
  const Mat3 C_mid = 0.5 * (prev.C_b_n + nav.C_b_n);
  const Vec3 f = C_mid.inverse() * ((nav.v_eb_n - prev.v_eb_n) / dt_ - params_.gravity_n());

  const bool moving = u > kStoppedSpeed;
  const double slip = update_slip(moving);

  truth_.gyro_bias += errors_.gyro_bias_rw * std::sqrt(dt_) * rng_.normal3();
  truth_.accel_bias += errors_.accel_bias_rw * std::sqrt(dt_) * rng_.normal3();

  SimStep out;
  out.imu.t = t;
  out.imu.omega_ib_b =
      omega + truth_.gyro_bias + errors_.gyro_noise_density / std::sqrt(dt_) * rng_.normal3();
  out.imu.f_ib_b =
      f + truth_.accel_bias + errors_.accel_noise_density / std::sqrt(dt_) * rng_.normal3();
  if (moving) {
    const double scale = u / plan_.speed;
    const double sa = std::sin(2.0 * kPi * kVibrationFreqAccel * t + vib_phase_a_);
    const double sg = std::sin(2.0 * kPi * kVibrationFreqGyro * t + vib_phase_g_);
    out.imu.f_ib_b += scale * errors_.vibration_accel * Vec3(0.5 * sa, 0.0, sa);
    out.imu.omega_ib_b += scale * errors_.vibration_gyro * Vec3(sg, 0.0, 0.0);
  }

  // Encoders over-report rotation by 1 / (1 - s).
  Vec4 rates = Vec4::Zero();
  if (moving) {
    const double half_track = 0.5 * params_.track_width;
    const double left = (u - omega.z() * half_track) / (params_.wheel_radius * (1.0 - slip));
    const double right = (u + omega.z() * half_track) / (params_.wheel_radius * (1.0 - slip));
    rates << left, right, left, right;
  }
  wheel_angle_ += 0.5 * (wheel_rate_ + rates) * dt_;
  wheel_rate_ = rates;
  if (k_ % odo_every_ == 0) {
    WheelOdomSample odo;
    odo.t = t;
    const double span = static_cast<double>(odo_every_) * dt_;
    for (int w = 0; w < 4; ++w) {
      const auto ticks =
          static_cast<long long>(std::floor(wheel_angle_(w) / errors_.encoder_resolution));
      odo.omega_wheel(w) =
          static_cast<double>(ticks - last_ticks_(w)) * errors_.encoder_resolution / span;
      last_ticks_(w) = ticks;
    }
    out.odo = odo;
  }

  truth_.t = t;
  truth_.distance += (nav.p_b - prev.p_b).norm();
  truth_.nav = nav;
  truth_.speed = u;
  truth_.slip = slip;
  out.truth = truth_;
  return out;
}

SimRun generate_run(const DrivePlan& plan, const TerrainProfile& terrain,
                    const SensorErrorModel& errors, const VehicleParams& params,
                    const std::vector<StopWindow>& stops) {
  RoverSim sim(plan, terrain, errors, params);
  SimRun run;
  run.initial = sim.initial_state();
  run.truth.push_back(sim.truth());
  const long max_steps = static_cast<long>(
      std::ceil((plan.initial_hold + 10.0 * plan.distance / plan.speed + 600.0) / sim.dt()));
  for (long k = 0; k < max_steps && !sim.finished(); ++k) {
    const double t = static_cast<double>(k + 1) * sim.dt();
    bool stop = false;
    for (const auto& w : stops) {
      if (t >= w.t_begin && t < w.t_end) stop = true;
    }
    SimStep s = sim.step(stop);
    run.truth.push_back(s.truth);
    run.imu.push_back(s.imu);
    if (s.odo) run.odo.push_back(*s.odo);
  }
  if (!sim.finished()) {
    throw InputError("generate_run: plan is infeasible within the step budget");
  }
  return run;
}

}  // namespace slipnav
