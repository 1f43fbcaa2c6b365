#include "slipnav/slip.hpp"

#include <algorithm>
#include <cmath>

namespace slipnav {

SlipRatio slip_ratio(double v_x, double omega, double r, double deadband) {
  if (!(r > 0.0)) {
    throw InputError("slip_ratio: wheel radius must be positive");
  }
  if (!std::isfinite(v_x) || !std::isfinite(omega)) {
    throw InputError("slip_ratio: non-finite input");
  }
  double v = v_x;
  double rw = r * omega;
  if (std::abs(v - rw) < deadband) {
    return {};
  }
  // Reverse driving mirrors the forward branches.
  if (rw < 0.0 || (rw == 0.0 && v < 0.0)) {
    v = -v;
    rw = -rw;
  }

  SlipRatio out;
  if (v < rw) {
    out.s = 1.0 - v / rw;
  } else if (rw == 0.0) {
    out.s = -1.0;
    out.full_skid = true;
  } else {
    out.s = rw / v - 1.0;
  }
  out.s = std::clamp(out.s, -1.0, 1.0);
  return out;
}

double slip_angle(double v_y, double v_x, double deadband) {
  if (std::abs(v_y) < deadband && std::abs(v_x) < deadband) {
    return 0.0;
  }
  return std::atan2(v_y, v_x);
}

SlipRatio odometry_slip(double v_x, const WheelOdomSample& sample,
                        const VehicleParams& params, double deadband) {
  const double r = params.wheel_radius;
  return slip_ratio(v_x, wheel_speed(sample, params).v_odo / r, r, deadband);
}

std::vector<double> SlipWindow::times() const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.t);
  return out;
}

std::vector<double> SlipWindow::values() const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.s);
  return out;
}

SlipCollector::SlipCollector(double window_duration, double odo_rate) {
  if (!(window_duration > 0.0) || !(odo_rate > 0.0)) {
    throw InputError("SlipCollector: duration and rate must be positive");
  }
  target_ = std::max(1, static_cast<int>(std::floor(window_duration * odo_rate + 1e-9)));
  buffer_.reserve(target_);
}

void SlipCollector::reset() {
  buffer_.clear();
  speed_sum_ = 0.0;
}

bool SlipCollector::add(double t, const Vec3& body_velocity, const WheelOdomSample& odo,
                        const VehicleParams& params, bool moving) {
  if (!moving) {
    if (!buffer_.empty()) {
      ++restarts_;
      reset();
    }
    return false;
  }
  if (ready()) {
    return true;
  }
  if (!buffer_.empty() && !(t > buffer_.back().t)) {
    throw InputError("SlipCollector: sample times must be strictly increasing");
  }
  const SlipRatio sr = odometry_slip(body_velocity.x(), odo, params);
  buffer_.push_back({t, sr.s, slip_angle(body_velocity.y(), body_velocity.x()),
                     sr.full_skid});
  speed_sum_ += body_velocity.x();
  return ready();
}

double SlipCollector::mean_forward_speed() const {
  return buffer_.empty() ? 0.0 : speed_sum_ / static_cast<double>(buffer_.size());
}

SlipWindow SlipCollector::take() {
  if (!ready()) {
    throw InputError("SlipCollector: window is not complete");
  }
  SlipWindow w;
  w.mean_forward_speed = mean_forward_speed();
  w.samples = std::move(buffer_);
  w.t0 = w.samples.front().t;
  w.t1 = w.samples.back().t;
  buffer_ = {};
  buffer_.reserve(target_);
  speed_sum_ = 0.0;
  return w;
}

}  // namespace slipnav
