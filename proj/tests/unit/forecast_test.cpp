#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "slipnav/forecast.hpp"
#include "test_support.hpp"

namespace slipnav {
namespace {

GpPrediction flat_prediction(int n, double mu, double var) {
  GpPrediction p;
  p.t_star = Eigen::VectorXd::LinSpaced(n, 0.1, 0.1 * n);
  p.mu_star = Eigen::VectorXd::Constant(n, mu);
  p.var_star = Eigen::VectorXd::Constant(n, var);
  return p;
}

// Request built from a level vehicle driving East at 0.8 m/s.
ForecastRequest driving_request(double mu_s, double var_s) {
  FilterEstimate est;
  est.nav.v_eb_n = Vec3(0.8, 0.0, 0.0);
  est.P = initial_covariance(FilterConfig{});
  ImuSample imu;
  imu.f_ib_b = Vec3(0.0, 0.0, 9.81);
  ForecastRequest req;
  req.now = 15.0;
  req.P0 = est.P;
  req.P0.block<3, 3>(block::kPos, block::kPos).setZero();
  req.F = build_F(est.nav, imu, 0.02);
  req.Q = build_Q(FilterConfig{}, 0.02);
  req.H = odometry_jacobian(est, VehicleParams{});
  req.mu_vel = 0.8;
  req.prediction = flat_prediction(600, mu_s, var_s);
  return req;
}

ForecastResult curve(std::initializer_list<double> sigma, double t0, double dt) {
  ForecastResult r;
  r.sigma_h.resize(static_cast<Eigen::Index>(sigma.size()));
  r.t.resize(r.sigma_h.size());
  Eigen::Index k = 0;
  for (double s : sigma) {
    r.t(k) = t0 + dt * static_cast<double>(k);
    r.sigma_h(k++) = s;
  }
  return r;
}

TEST(SigmaTransform, Examples) {
  const SigmaTransform a = sigma_velocity_transform(0.8, 0.5, 0.1);
  // chi = 0.8 / (0.5, 0.4, 0.6)
  const double chi[3] = {1.6, 2.0, 0.8 / 0.6};
  const double mean = (chi[0] + chi[1] + chi[2]) / 3.0;
  double var = 0.0;
  for (double c : chi) var += (c - mean) * (c - mean) / 3.0;
  EXPECT_NEAR(a.chi_est, 74.0 / 45.0, 1e-12);
  EXPECT_NEAR(a.chi_est, mean, 1e-12);
  EXPECT_NEAR(a.var_chi, var, 1e-12);
  EXPECT_NEAR(a.var_chi, 0.0750617, 1e-7);
  EXPECT_FALSE(a.saturated);

  const SigmaTransform b = sigma_velocity_transform(0.8, 0.3, 0.0);
  EXPECT_NEAR(b.chi_est, 0.8 / 0.7, 1e-12);
  EXPECT_NEAR(b.var_chi, 0.0, 1e-15);

  const SigmaTransform c = sigma_velocity_transform(0.8, 0.0, 0.0);
  EXPECT_NEAR(c.chi_est, 0.8, 1e-15);
  EXPECT_NEAR(c.var_chi, 0.0, 1e-15);
}

TEST(SigmaTransform, SaturatesNearFullSlip) {
  const SigmaTransform t = sigma_velocity_transform(0.8, 0.97, 0.05);
  EXPECT_TRUE(t.saturated);
  EXPECT_TRUE(std::isfinite(t.chi_est));
  EXPECT_LE(t.chi_est, 0.8 / kSlipDenominatorFloor + 1e-12);
  EXPECT_THROW(sigma_velocity_transform(0.8, 0.1, -0.1), InputError);
  EXPECT_THROW(sigma_velocity_transform(std::numeric_limits<double>::quiet_NaN(), 0.1, 0.1),
               InputError);
}

TEST(SigmaTransform, SpreadGrowsWithSlipUncertainty) {
  double last = -1.0;
  for (double sigma = 0.0; sigma < 0.3; sigma += 0.02) {
    const double v = sigma_velocity_transform(0.8, 0.2, sigma).var_chi;
    EXPECT_GT(v, last);
    last = v;
  }
}

TEST(RGp, Examples) {
  Mat4 expected = Mat4::Zero();
  expected(3, 3) = 1.0;
  EXPECT_EQ(build_R_gp(0.0), expected);
  expected.diagonal() << 0.0750617, 0.0750617, 0.0750617, 1.0;
  EXPECT_EQ(build_R_gp(0.0750617), expected);
  EXPECT_THROW(build_R_gp(-1.0), InputError);
}

TEST(HorizontalSigma, UsesEastNorthVariances) {
  Mat15 P = Mat15::Identity();
  P(block::kPos, block::kPos) = 9.0;
  P(block::kPos + 1, block::kPos + 1) = 16.0;
  P(block::kPos + 2, block::kPos + 2) = 100.0;
  EXPECT_DOUBLE_EQ(horizontal_sigma(P), 5.0);
}

TEST(ForecastCovariance, CountsStepsAndUpdates) {
  const ForecastResult r = forecast_covariance(driving_request(0.2, 0.01), 3.0);
  EXPECT_EQ(r.propagations, 3000);
  EXPECT_EQ(r.updates, 600);
  ASSERT_EQ(r.t.size(), 3001);
  EXPECT_DOUBLE_EQ(r.t(0), 15.0);
  EXPECT_NEAR(r.t(3000), 75.0, 1e-9);
  EXPECT_FALSE(r.aborted);
}

TEST(ForecastCovariance, NoGrowthWithoutProcessNoise) {
  ForecastRequest req = driving_request(0.0, 0.0);
  req.Q.setZero();
  req.P0.setZero();
  req.P0(block::kPos, block::kPos) = 0.04;
  req.P0(block::kPos + 1, block::kPos + 1) = 0.05;
  const ForecastResult r = forecast_covariance(req, 3.0);
  ASSERT_FALSE(r.aborted);
  for (Eigen::Index k = 0; k < r.sigma_h.size(); ++k) {
    EXPECT_NEAR(r.sigma_h(k), r.sigma_h(0), 1e-12);
  }
  EXPECT_NEAR(r.sigma_h(0), 0.3, 1e-15);
  EXPECT_FALSE(r.stop_time.has_value());
}

TEST(ForecastCovariance, MoreSlipNeverShrinksUncertainty) {
  const ForecastResult low = forecast_covariance(driving_request(0.0, 0.0), 3.0);
  const ForecastResult high = forecast_covariance(driving_request(0.3, 0.02), 3.0);
  ASSERT_EQ(low.sigma_h.size(), high.sigma_h.size());
  for (Eigen::Index k = 0; k < low.sigma_h.size(); ++k) {
    EXPECT_LE(low.sigma_h(k), high.sigma_h(k) + 1e-12) << "step " << k;
  }
  EXPECT_GT(high.sigma_h(3000), low.sigma_h(3000));
}

TEST(ForecastCovariance, MonotoneInGpVarianceProperty) {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const double mu = rng.uniform(0.0, 0.5);
    const double var = rng.uniform(0.0, 0.02);
    const double extra = rng.uniform(0.001, 0.05);
    const ForecastResult a = forecast_covariance(driving_request(mu, var), 3.0);
    const ForecastResult b = forecast_covariance(driving_request(mu, var + extra), 3.0);
    EXPECT_LE((a.sigma_h - b.sigma_h).maxCoeff(), 1e-12);
  }
}

TEST(ForecastCovariance, StopTimeIsFirstCrossing) {
  const ForecastResult r = forecast_covariance(driving_request(0.3, 0.02), 0.5);
  ASSERT_TRUE(r.stop_time.has_value());
  Eigen::Index k = 0;
  while (r.sigma_h(k) <= 0.5) ++k;
  EXPECT_DOUBLE_EQ(*r.stop_time, r.t(k));
}

TEST(ForecastCovariance, RejectsShortPrediction) {
  ForecastRequest req = driving_request(0.1, 0.01);
  req.prediction = flat_prediction(100, 0.1, 0.01);
  EXPECT_THROW(forecast_covariance(req, 3.0), InputError);
  req = driving_request(0.1, 0.01);
  req.odo_every = 0;
  EXPECT_THROW(forecast_covariance(req, 3.0), InputError);
}

TEST(FindStopTime, Examples) {
  const ForecastResult rising = curve({1.0, 2.0, 2.9, 3.1, 4.0}, 15.0, 9.0);
  EXPECT_FALSE(find_stop_time(rising, std::numeric_limits<double>::infinity(), 15.0));
  // Crosses 3 m at t = 15 + 27 = 42 s.
  const auto countdown = find_stop_time(rising, 3.0, 15.0);
  ASSERT_TRUE(countdown.has_value());
  EXPECT_DOUBLE_EQ(*countdown, 27.0);
  const ForecastResult above = curve({3.5, 4.0}, 15.0, 1.0);
  EXPECT_EQ(find_stop_time(above, 3.0, 15.0), 0.0);
  EXPECT_THROW(find_stop_time(rising, 0.0, 15.0), InputError);
}

TEST(FindStopTime, MultiplierScalesCurve) {
  const ForecastResult rising = curve({1.0, 2.0, 3.0}, 0.0, 1.0);
  EXPECT_FALSE(find_stop_time(rising, 3.0, 0.0).has_value());
  EXPECT_EQ(find_stop_time(rising, 3.0, 0.0, 2.0), 1.0);
}

TEST(FindStopTime, MonotoneInThreshold) {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    ForecastResult r;
    const int n = 50 + static_cast<int>(rng.uniform() * 200);
    r.t.resize(n);
    r.sigma_h.resize(n);
    double level = rng.uniform(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
      r.t(i) = 0.02 * i;
      level = std::max(0.0, level + 0.05 * rng.normal() + 0.01);
      r.sigma_h(i) = level;
    }
    double previous = -1.0;
    for (double eps = 0.1; eps < 5.0; eps += 0.1) {
      const auto st = find_stop_time(r, eps, 0.0);
      const double value = st ? *st : std::numeric_limits<double>::infinity();
      EXPECT_GE(value, previous);
      previous = value;
    }
  }
}

}  // namespace
}  // namespace slipnav
