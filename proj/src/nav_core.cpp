#include "slipnav/nav_core.hpp"

#include <algorithm>
#include <cmath>

namespace slipnav {

void VehicleParams::validate() const {
  if (!(wheel_radius > 0.0) || !std::isfinite(wheel_radius)) {
    throw InputError("wheel_radius must be positive");
  }
  if (!(track_width > 0.0) || !std::isfinite(track_width)) {
    throw InputError("track_width must be positive");
  }
  if (!(gravity_magnitude > 0.0) || !std::isfinite(gravity_magnitude)) {
    throw InputError("gravity_magnitude must be positive");
  }
  if (!lever_arm.allFinite()) {
    throw InputError("lever_arm must be finite");
  }
}

Vec3 VehicleParams::earth_rate_n() const {
  if (!include_earth_rate) {
    return Vec3::Zero();
  }
  return {0.0, earth_rate * std::cos(latitude), earth_rate * std::sin(latitude)};
}

Mat3 skew(const Vec3& v) {
  Mat3 S;
  S << 0.0, -v.z(), v.y(),  //
      v.z(), 0.0, -v.x(),   //
      -v.y(), v.x(), 0.0;
  return S;
}

Mat3 exp_so3(const Vec3& phi) {
  const double angle = phi.norm();
  const Mat3 K = skew(phi);
  if (angle < 1e-8) {
    return Mat3::Identity() + K + 0.5 * K * K;
  }
  const double a = std::sin(angle) / angle;
  const double b = (1.0 - std::cos(angle)) / (angle * angle);
  return Mat3::Identity() + a * K + b * K * K;
}

Vec3 log_so3(const Mat3& R) {
  const double c = std::clamp(0.5 * (R.trace() - 1.0), -1.0, 1.0);
  const double angle = std::acos(c);
  const Vec3 w(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  if (angle < 1e-8) {
    return 0.5 * w;
  }
  return angle / (2.0 * std::sin(angle)) * w;
}

Mat3 orthonormalize(const Mat3& C) {
  Eigen::JacobiSVD<Mat3> svd(C, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 R = svd.matrixU() * svd.matrixV().transpose();
  if (R.determinant() < 0.0) {
    Mat3 U = svd.matrixU();
    U.col(2) *= -1.0;
    R = U * svd.matrixV().transpose();
  }
  return R;
}

double heading(const Mat3& C_b_n) { return std::atan2(C_b_n(1, 0), C_b_n(0, 0)); }

Mat3 attitude_from_heading_pitch(double heading, double pitch) {
  // Nose-up pitch is a negative rotation about body y (y points left).
  const Mat3 Rz = Eigen::AngleAxisd(heading, Vec3::UnitZ()).toRotationMatrix();
  const Mat3 Ry = Eigen::AngleAxisd(-pitch, Vec3::UnitY()).toRotationMatrix();
  return Rz * Ry;
}

bool is_finite(const NavState& s) {
  return s.C_b_n.allFinite() && s.v_eb_n.allFinite() && s.p_b.allFinite();
}

bool is_finite(const ImuSample& s) {
  return std::isfinite(s.t) && s.omega_ib_b.allFinite() && s.f_ib_b.allFinite();
}

bool is_finite(const WheelOdomSample& s) {
  return std::isfinite(s.t) && s.omega_wheel.allFinite();
}

NavState propagate_strapdown(const NavState& state, const ImuSample& imu,
                             double dt, const VehicleParams& params) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw InputError("propagate_strapdown: dt must be positive and finite");
  }
  if (!is_finite(state) || !is_finite(imu)) {
    throw InputError("propagate_strapdown: non-finite state or IMU sample at t=" +
                     std::to_string(imu.t));
  }

  const Vec3 w_ie = params.earth_rate_n();
  NavState out;

  Mat3 C = state.C_b_n * exp_so3(imu.omega_ib_b * dt);
  if (params.include_earth_rate) {
    C = exp_so3(-w_ie * dt) * C;
  }
  out.C_b_n = orthonormalize(C);

  const Vec3 f_n = 0.5 * (state.C_b_n + out.C_b_n) * imu.f_ib_b;
  Vec3 a_n = f_n + params.gravity_n();
  if (params.include_earth_rate) {
    a_n -= 2.0 * w_ie.cross(state.v_eb_n);
  }
  out.v_eb_n = state.v_eb_n + a_n * dt;
  out.p_b = state.p_b + 0.5 * (state.v_eb_n + out.v_eb_n) * dt;
  return out;
}

OdomSpeed wheel_speed(const WheelOdomSample& sample, const VehicleParams& params) {
  const Vec4& w = sample.omega_wheel;
  const double r = params.wheel_radius;
  const double left = 0.5 * (w[kFrontLeft] + w[kRearLeft]);
  const double right = 0.5 * (w[kFrontRight] + w[kRearRight]);
  OdomSpeed out;
  out.v_odo = r * w.mean();
  out.yaw_rate_odo = r * (right - left) / params.track_width;
  return out;
}

}  // namespace slipnav
