#ifndef SLIPNAV_NAV_CORE_HPP_
#define SLIPNAV_NAV_CORE_HPP_

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace slipnav {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;

/// Malformed or out-of-contract input (non-finite samples, bad parameters).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine could not produce a valid result (e.g. lost PSD).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ImuSample {
  double t = 0.0;
  Vec3 omega_ib_b = Vec3::Zero();  // rad/s
  Vec3 f_ib_b = Vec3::Zero();      // m/s^2, specific force
};

/// Per-wheel angular rates of a skid-steer rover, ordered FL, FR, RL, RR.
struct WheelOdomSample {
  double t = 0.0;
  Vec4 omega_wheel = Vec4::Zero();  // rad/s
};

enum Wheel { kFrontLeft = 0, kFrontRight = 1, kRearLeft = 2, kRearRight = 3 };

/// Total navigation solution in a local ENU frame.
struct NavState {
  Mat3 C_b_n = Mat3::Identity();  // body -> nav
  Vec3 v_eb_n = Vec3::Zero();
  Vec3 p_b = Vec3::Zero();
};

struct VehicleParams {
  double wheel_radius = 0.1;  // m
  double track_width = 0.6;   // m
  // Position of the IMU (body origin) relative to the rear-axle midpoint,
  // resolved in body axes. The rear-axle velocity is C_n^b v - omega x L.
  Vec3 lever_arm = Vec3::Zero();
  double gravity_magnitude = 9.81;
  bool include_earth_rate = false;
  double earth_rate = 7.292115e-5;  // rad/s
  double latitude = 0.0;            // rad, only used with the earth-rate term

  void validate() const;
  Vec3 gravity_n() const { return {0.0, 0.0, -gravity_magnitude}; }
  /// Earth rotation rate resolved in the local ENU frame (zero if disabled).
  Vec3 earth_rate_n() const;
};

struct OdomSpeed {
  double v_odo = 0.0;         // m/s, forward
  double yaw_rate_odo = 0.0;  // rad/s, body z
};

Mat3 skew(const Vec3& v);

/// Rotation matrix exp([phi x]) (Rodrigues).
Mat3 exp_so3(const Vec3& phi);

/// Inverse of exp_so3 for rotations with angle < pi.
Vec3 log_so3(const Mat3& R);

/// Nearest rotation matrix in the Frobenius sense (via SVD).
Mat3 orthonormalize(const Mat3& C);

/// Heading of the body x axis, measured counter-clockwise from East.
double heading(const Mat3& C_b_n);

/// Body->ENU rotation for a vehicle with the given heading (CCW from East)
/// and nose-up pitch. Body axes are x forward, y left, z up.
Mat3 attitude_from_heading_pitch(double heading, double pitch);

bool is_finite(const NavState& s);
bool is_finite(const ImuSample& s);
bool is_finite(const WheelOdomSample& s);

/// One strapdown step over `dt` using an already bias-compensated sample.
///
/// Attitude is advanced with the rotation increment of the (constant) body
/// rate over the step and re-orthonormalized; velocity uses the mean of the
/// start/end attitudes to rotate the specific force (trapezoidal), position
/// the mean of the start/end velocities.
NavState propagate_strapdown(const NavState& state, const ImuSample& imu,
                             double dt, const VehicleParams& params);

/// Skid-steer kinematics: mean wheel speed and differential yaw rate.
OdomSpeed wheel_speed(const WheelOdomSample& sample,
                      const VehicleParams& params);

}  // namespace slipnav

#endif  // SLIPNAV_NAV_CORE_HPP_
