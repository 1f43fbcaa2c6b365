#ifndef SLIPNAV_FORECAST_HPP_
#define SLIPNAV_FORECAST_HPP_

#include <optional>

#include <Eigen/Dense>

#include "slipnav/eskf.hpp"
#include "slipnav/gp.hpp"

namespace slipnav {

inline constexpr double kSlipDenominatorFloor = 0.05;

struct SigmaTransform {
  double chi_est = 0.0;  // m/s
  double var_chi = 0.0;  // (m/s)^2
  bool saturated = false;
};

/// Pushes mu_s and mu_s -/+ sigma_s through v / (1 - s) and returns the mean
/// and (1/3) sum of squared deviations of the three images. Denominators are
/// floored at 0.05.
SigmaTransform sigma_velocity_transform(double mu_vel, double mu_s, double sigma_s);

/// Forecast odometry noise diag(var_chi, var_chi, var_chi, yaw_var).
Mat4 build_R_gp(double var_chi, double yaw_var = 1.0);

struct ForecastRequest {
  double now = 0.0;  // s, end of the learning window
  Mat15 P0 = Mat15::Zero();
  Mat15 F = Mat15::Identity();
  Mat15 Q = Mat15::Zero();
  OdoJacobian H = OdoJacobian::Zero();
  double mu_vel = 0.0;
  GpPrediction prediction;  // one entry per odometry update over the horizon
  double horizon = 60.0;
  double imu_rate = 50.0;
  int odo_every = 5;
  double yaw_var = 1.0;

  void validate() const;
  int steps() const;
};

struct ForecastResult {
  Eigen::VectorXd t;        // now, now + dt, ..., now + horizon
  Eigen::VectorXd sigma_h;  // sqrt(P_EE + P_NN) at each t
  std::optional<double> stop_time;  // absolute time of the first crossing
  bool aborted = false;
  int propagations = 0;
  int updates = 0;
  int saturated_updates = 0;
};

/// Horizontal 1-sigma of a covariance: sqrt(P_EE + P_NN).
double horizontal_sigma(const Mat15& P);

/// Forward-propagates P0 with the frozen F, Q and H, applying a simulated
/// odometry update with the GP-derived noise every `odo_every` steps.
/// The crossing of multiplier * sigma_h > epsilon is stored in stop_time.
ForecastResult forecast_covariance(const ForecastRequest& req, double epsilon,
                                   double sigma_multiplier = 1.0);

/// Remaining time until multiplier * sigma_h first exceeds epsilon, measured
/// from `now`; zero if the curve already starts above, empty if it never does.
std::optional<double> find_stop_time(const ForecastResult& result, double epsilon,
                                     double now, double sigma_multiplier = 1.0);

}  // namespace slipnav

#endif  // SLIPNAV_FORECAST_HPP_
