#ifndef SLIPNAV_GP_HPP_
#define SLIPNAV_GP_HPP_

#include <vector>

#include <Eigen/Dense>

#include "slipnav/nav_core.hpp"
#include "slipnav/slip.hpp"

namespace slipnav {

/// Hyperparameters of the composite kernel
///   k(t, t') = sigma2_b * min(t, t') * sigma2_rbf * exp(-(t - t')^2 / (2 ell^2))
/// plus i.i.d. observation noise sigma2_noise.
struct KernelParams {
  double sigma2_rbf = 0.05;
  double ell = 2.0;  // s
  double sigma2_b = 0.01;
  double sigma2_noise = 1.0e-3;

  void validate() const;

  /// Log-parameters in the fixed order (sigma2_rbf, ell, sigma2_b, sigma2_noise).
  Eigen::Vector4d to_log() const;
  static KernelParams from_log(const Eigen::Vector4d& x);
};

struct KernelBounds {
  KernelParams lower{1.0e-6, 0.1, 1.0e-6, 1.0e-6};
  KernelParams upper{10.0, 60.0, 10.0, 1.0};

  bool contains(const KernelParams& p) const;
  KernelParams clamp(const KernelParams& p) const;
};

double kernel_eval(double t, double t_prime, const KernelParams& params);

/// Noise-free Gram matrix K_f over window-relative times.
Eigen::MatrixXd gram_matrix(const Eigen::VectorXd& t, const KernelParams& params);

/// Fitted GP. Training times are stored relative to `origin`; every public
/// entry point takes times in the caller's (absolute) frame.
struct GpModel {
  double origin = 0.0;
  Eigen::VectorXd T_train;  // t - origin
  Eigen::VectorXd s_train;
  KernelParams params;
  double jitter = 0.0;     // diagonal jitter that made the factorization succeed
  Eigen::MatrixXd L;       // lower Cholesky factor of K_f + (sigma2_noise + jitter) I
  Eigen::VectorXd alpha;   // (K_f + sigma2_noise I)^-1 s
};

struct GpPrediction {
  Eigen::VectorXd t_star;
  Eigen::VectorXd mu_star;
  Eigen::VectorXd var_star;
};

/// Builds and factorizes the Gram matrix. Jitter starts at 1e-10 * trace / N
/// and grows x10 for up to three retries; throws NumericalError afterwards.
GpModel fit(const Eigen::VectorXd& t, const Eigen::VectorXd& s, const KernelParams& params,
            double origin = 0.0);

/// Window fit (at least 10 samples), with time measured from window.t0.
GpModel fit(const SlipWindow& window, const KernelParams& params);

inline constexpr int kMinWindowSamples = 10;

struct Evidence {
  double value = 0.0;
  /// d value / d log-parameter, order as in KernelParams::to_log().
  Eigen::Vector4d gradient = Eigen::Vector4d::Zero();
};

Evidence log_marginal_likelihood(const GpModel& model);

struct OptimizerOptions {
  KernelBounds bounds;
  int max_iterations = 60;
  double gradient_tolerance = 1e-3;
  double value_tolerance = 1e-6;  // two iterations gaining less than this end a start
};

struct OptimizeResult {
  KernelParams params;
  double log_evidence = 0.0;
  bool fallback = false;  // every start failed; params == clamped init
  int successful_starts = 0;
  int evaluations = 0;
};

/// Maximizes the log evidence from three starts (init, 10 x init, 0.1 x init,
/// clamped into bounds) and returns the best. Deterministic.
OptimizeResult optimize_hyperparams(const Eigen::VectorXd& t, const Eigen::VectorXd& s,
                                    const KernelParams& init,
                                    const OptimizerOptions& options = {},
                                    double origin = 0.0);

OptimizeResult optimize_hyperparams(const SlipWindow& window, const KernelParams& init,
                                    const OptimizerOptions& options = {});

/// Posterior mean and variance (floored at zero) at `t_star`.
GpPrediction predict(const GpModel& model, const Eigen::VectorXd& t_star);

/// Evenly spaced prediction times t1 + step, ..., t1 + horizon.
Eigen::VectorXd future_times(double t1, double horizon, double step);

}  // namespace slipnav

#endif  // SLIPNAV_GP_HPP_
