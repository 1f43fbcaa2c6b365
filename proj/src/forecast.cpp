#include "slipnav/forecast.hpp"

#include <algorithm>
#include <cmath>

namespace slipnav {

SigmaTransform sigma_velocity_transform(double mu_vel, double mu_s, double sigma_s) {
  if (!std::isfinite(mu_vel) || !std::isfinite(mu_s) || !std::isfinite(sigma_s) ||
      sigma_s < 0.0) {
    throw InputError("sigma_velocity_transform: invalid input");
  }
  SigmaTransform out;
  const double denom[3] = {1.0 - mu_s, 1.0 - mu_s - sigma_s, 1.0 - mu_s + sigma_s};
  double chi[3];
  for (int i = 0; i < 3; ++i) {
    double d = denom[i];
    if (d < kSlipDenominatorFloor) {
      d = kSlipDenominatorFloor;
      out.saturated = true;
    }
    chi[i] = mu_vel / d;
  }
  out.chi_est = (chi[0] + chi[1] + chi[2]) / 3.0;
  for (double c : chi) {
    out.var_chi += (c - out.chi_est) * (c - out.chi_est);
  }
  out.var_chi /= 3.0;
  return out;
}

Mat4 build_R_gp(double var_chi, double yaw_var) {
  if (!(var_chi >= 0.0) || !(yaw_var >= 0.0)) {
    throw InputError("build_R_gp: variances must be non-negative");
  }
  Mat4 R = Mat4::Zero();
  R.diagonal() << var_chi, var_chi, var_chi, yaw_var;
  return R;
}

void ForecastRequest::validate() const {
  if (!(horizon > 0.0) || !(imu_rate > 0.0) || odo_every < 1) {
    throw InputError("ForecastRequest: horizon, imu_rate and odo_every must be positive");
  }
  if (!P0.allFinite() || !F.allFinite() || !Q.allFinite() || !H.allFinite() ||
      !std::isfinite(mu_vel)) {
    throw InputError("ForecastRequest: non-finite matrices");
  }
  const int needed = steps() / odo_every;
  if (prediction.mu_star.size() < needed || prediction.var_star.size() < needed) {
    throw InputError("ForecastRequest: prediction does not cover the horizon");
  }
}

int ForecastRequest::steps() const {
  return static_cast<int>(std::llround(horizon * imu_rate));
}

double horizontal_sigma(const Mat15& P) {
  const double v = P(block::kPos, block::kPos) + P(block::kPos + 1, block::kPos + 1);
  return std::sqrt(std::max(0.0, v));
}

ForecastResult forecast_covariance(const ForecastRequest& req, double epsilon,
                                   double sigma_multiplier) {
  req.validate();
  const int n = req.steps();
  const double dt = 1.0 / req.imu_rate;
  const Eigen::MatrixXd H = req.H;

  ForecastResult out;
  out.t.resize(n + 1);
  out.sigma_h.resize(n + 1);

  Mat15 P = req.P0;
  out.t(0) = req.now;
  out.sigma_h(0) = horizontal_sigma(P);
  for (int k = 1; k <= n; ++k) {
    try {
      P = predict(P, req.F, req.Q);
    } catch (const NumericalError&) {
      out.aborted = true;
    }
    ++out.propagations;
    if (!out.aborted && k % req.odo_every == 0) {
      const int j = k / req.odo_every - 1;
      const double sigma_s = std::sqrt(std::max(0.0, req.prediction.var_star(j)));
      const SigmaTransform st =
          sigma_velocity_transform(req.mu_vel, req.prediction.mu_star(j), sigma_s);
      if (st.saturated) ++out.saturated_updates;
      const Eigen::MatrixXd R = build_R_gp(st.var_chi, req.yaw_var);
      if (!covariance_update(P, H, R, false) || !P.allFinite()) {
        out.aborted = true;
      }
      ++out.updates;
    }
    if (out.aborted) {
      out.t.conservativeResize(k);
      out.sigma_h.conservativeResize(k);
      return out;
    }
    out.t(k) = req.now + static_cast<double>(k) * dt;
    out.sigma_h(k) = horizontal_sigma(P);
  }

  if (const auto countdown = find_stop_time(out, epsilon, req.now, sigma_multiplier)) {
    out.stop_time = req.now + *countdown;
  }
  return out;
}

std::optional<double> find_stop_time(const ForecastResult& result, double epsilon,
                                     double now, double sigma_multiplier) {
  if (!(epsilon > 0.0)) {
    throw InputError("find_stop_time: epsilon must be positive");
  }
  for (Eigen::Index k = 0; k < result.sigma_h.size(); ++k) {
    if (sigma_multiplier * result.sigma_h(k) > epsilon) {
      return std::max(0.0, result.t(k) - now);
    }
  }
  return std::nullopt;
}

}  // namespace slipnav
