#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "slipnav/nav_core.hpp"
#include "test_support.hpp"

namespace slipnav {
namespace {

constexpr double kPi = 3.14159265358979323846;

ImuSample at_rest(const VehicleParams& p) {
  ImuSample s;
  s.f_ib_b = -p.gravity_n();
  return s;
}

TEST(NavCore, SkewMatchesCrossProduct) {
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const Vec3 a = rng.normal3(), b = rng.normal3();
    EXPECT_LT((skew(a) * b - a.cross(b)).norm(), 1e-14);
  }
}

TEST(NavCore, ExpLogRoundTrip) {
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    Vec3 phi = rng.normal3();
    phi *= rng.uniform(0.0, 3.0) / std::max(phi.norm(), 1e-9);
    const Mat3 R = exp_so3(phi);
    EXPECT_LT((R * R.transpose() - Mat3::Identity()).norm(), 1e-12);
    EXPECT_NEAR(R.determinant(), 1.0, 1e-12);
    EXPECT_LT((log_so3(R) - phi).norm(), 1e-9);
  }
}

TEST(NavCore, ExpAgreesWithAngleAxis) {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const Vec3 phi = rng.normal3();
    const Mat3 oracle = Eigen::AngleAxisd(phi.norm(), phi.normalized()).toRotationMatrix();
    EXPECT_LT((exp_so3(phi) - oracle).norm(), 1e-12);
  }
  EXPECT_EQ(exp_so3(Vec3::Zero()), Mat3::Identity());
}

TEST(NavCore, OrthonormalizeRestoresRotation) {
  Rng rng(4);
  const Mat3 R = exp_so3(rng.normal3());
  Mat3 noisy = R;
  noisy(0, 1) += 1e-4;
  noisy(2, 0) -= 2e-4;
  const Mat3 fixed = orthonormalize(noisy);
  EXPECT_LT((fixed * fixed.transpose() - Mat3::Identity()).norm(), 1e-13);
  EXPECT_LT((fixed - R).norm(), 1e-3);
}

TEST(NavCore, HeadingOfAttitude) {
  for (double h : {-2.5, -0.3, 0.0, 0.7, 3.0}) {
    EXPECT_NEAR(heading(attitude_from_heading_pitch(h, 0.1)), h, 1e-12);
  }
  // Nose-up pitch raises the body x axis.
  const Mat3 C = attitude_from_heading_pitch(0.0, 0.2);
  EXPECT_NEAR(C(2, 0), std::sin(0.2), 1e-12);
}

TEST(Strapdown, StationaryIsEquilibrium) {
  VehicleParams p;
  NavState s;
  s.p_b = Vec3(1.0, 2.0, 3.0);
  ImuSample imu = at_rest(p);
  imu.t = 0.02;
  const NavState out = propagate_strapdown(s, imu, 0.02, p);
  EXPECT_LT((out.C_b_n - s.C_b_n).norm(), 1e-12);
  EXPECT_LT(out.v_eb_n.norm(), 1e-12);
  EXPECT_LT((out.p_b - s.p_b).norm(), 1e-12);
}

TEST(Strapdown, ConstantForwardAcceleration) {
  VehicleParams p;
  ImuSample imu = at_rest(p);
  imu.f_ib_b.x() += 1.0;
  const NavState out = propagate_strapdown(NavState{}, imu, 0.02, p);
  EXPECT_NEAR(out.v_eb_n.x(), 0.02, 1e-12);
  // x = a t^2 / 2
  EXPECT_NEAR(out.p_b.x(), 0.5 * 0.02 * 0.02, 1e-12);
  EXPECT_NEAR(out.v_eb_n.z(), 0.0, 1e-12);
}

TEST(Strapdown, PureYawRate) {
  VehicleParams p;
  NavState s;
  ImuSample imu = at_rest(p);
  imu.omega_ib_b = Vec3(0.0, 0.0, 0.1);
  for (int k = 0; k < 500; ++k) s = propagate_strapdown(s, imu, 0.02, p);
  EXPECT_NEAR(heading(s.C_b_n), 1.0, 1e-6);
  EXPECT_LT(s.p_b.norm(), 1e-9);
  EXPECT_LT(s.v_eb_n.norm(), 1e-9);
}

TEST(Strapdown, RejectsBadInput) {
  VehicleParams p;
  ImuSample imu = at_rest(p);
  EXPECT_THROW(propagate_strapdown(NavState{}, imu, 0.0, p), InputError);
  imu.omega_ib_b.x() = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(propagate_strapdown(NavState{}, imu, 0.02, p), InputError);
  NavState bad;
  bad.v_eb_n.y() = std::numeric_limits<double>::infinity();
  EXPECT_THROW(propagate_strapdown(bad, at_rest(p), 0.02, p), InputError);
}

TEST(WheelSpeed, Examples) {
  VehicleParams p;
  p.wheel_radius = 0.1;
  p.track_width = 0.6;
  WheelOdomSample s;
  s.omega_wheel = Vec4::Constant(8.0);
  OdomSpeed o = wheel_speed(s, p);
  EXPECT_NEAR(o.v_odo, 0.8, 1e-12);
  EXPECT_NEAR(o.yaw_rate_odo, 0.0, 1e-12);

  s.omega_wheel << 7.0, 9.0, 7.0, 9.0;  // FL FR RL RR
  o = wheel_speed(s, p);
  EXPECT_NEAR(o.v_odo, 0.8, 1e-12);
  EXPECT_NEAR(o.yaw_rate_odo, (0.9 - 0.7) / 0.6, 1e-12);

  s.omega_wheel.setZero();
  o = wheel_speed(s, p);
  EXPECT_EQ(o.v_odo, 0.0);
  EXPECT_EQ(o.yaw_rate_odo, 0.0);
}

TEST(VehicleParams, EarthRateOnlyWhenEnabled) {
  VehicleParams p;
  EXPECT_EQ(p.earth_rate_n(), Vec3::Zero());
  p.include_earth_rate = true;
  p.latitude = kPi / 4.0;
  const Vec3 w = p.earth_rate_n();
  EXPECT_NEAR(w.norm(), p.earth_rate, 1e-15);
  EXPECT_NEAR(w.x(), 0.0, 1e-15);  // no East component in ENU
  EXPECT_NEAR(w.y(), w.z(), 1e-15);
}

TEST(VehicleParams, Validation) {
  VehicleParams p;
  EXPECT_NO_THROW(p.validate());
  p.wheel_radius = 0.0;
  EXPECT_THROW(p.validate(), InputError);
}

}  // namespace
}  // namespace slipnav
