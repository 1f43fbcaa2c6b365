#ifndef SLIPNAV_ESKF_HPP_
#define SLIPNAV_ESKF_HPP_

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "slipnav/nav_core.hpp"

namespace slipnav {

inline constexpr int kErrorStateDim = 15;

/// Offsets of the error-state blocks inside the 15-vector.
namespace block {
inline constexpr int kAtt = 0;
inline constexpr int kVel = 3;
inline constexpr int kPos = 6;
inline constexpr int kAccelBias = 9;
inline constexpr int kGyroBias = 12;
}  // namespace block

using Vec15 = Eigen::Matrix<double, kErrorStateDim, 1>;
using Mat15 = Eigen::Matrix<double, kErrorStateDim, kErrorStateDim>;
using OdoJacobian = Eigen::Matrix<double, 4, kErrorStateDim>;
using Mat4 = Eigen::Matrix4d;

// Error-state sign convention (Groves-style local-frame closed loop):
//   d_psi : small angle with C_true = exp([d_psi x]) * C_est
//   d_v   : v_est - v_true
//   d_p   : p_est - p_true
//   b_a   : residual accel bias, b_true - b_est (added on injection)
//   b_g   : residual gyro bias,  b_true - b_est (added on injection)
// Under this convention the ZUPT innovation [-v, -omega] has H = [-I on
// velocity; -I on gyro bias] and attitude errors are driven by -C_b^n b_g.
struct ErrorState {
  Vec3 d_psi = Vec3::Zero();
  Vec3 d_v = Vec3::Zero();
  Vec3 d_p = Vec3::Zero();
  Vec3 b_a = Vec3::Zero();
  Vec3 b_g = Vec3::Zero();

  Vec15 to_vector() const;
  static ErrorState from_vector(const Vec15& x);
  bool is_zero() const { return to_vector().isZero(0.0); }
};

struct FilterConfig {
  // Continuous-time noise densities.
  double gyro_noise_psd = 5.0e-5 * 5.0e-5;        // (rad/s)^2/Hz
  double accel_noise_psd = 1.0e-3 * 1.0e-3;       // (m/s^2)^2/Hz
  double accel_bias_rw_psd = 1.0e-5 * 1.0e-5;     // (m/s^3)^2/Hz
  double gyro_bias_rw_psd = 1.0e-6 * 1.0e-6;      // (rad/s^2)^2/Hz
  // Measurement noise variances.
  double R_odo = 0.01 * 0.01;       // (m/s)^2, body-frame odometry velocity
  double R_odo_yaw = 1.0;           // (rad/s)^2, skid-steer yaw rate is poor
  double R_nhc = 0.05 * 0.05;       // (m/s)^2
  double R_zupt_v = 1.0e-3 * 1.0e-3;  // (m/s)^2
  double R_zupt_g = 5.0e-4 * 5.0e-4;  // (rad/s)^2
  double beta_max = 0.17;           // rad, sideslip gate for the lateral NHC row
  double gate_probability = 0.999;  // chi-square innovation gate
  double odo_max_age = 0.15;        // s
  // Initial 1-sigma values for the diagonal initial covariance.
  double init_att_sigma = 1.0 * 3.14159265358979323846 / 180.0;
  double init_vel_sigma = 0.1;
  double init_pos_sigma = 0.01;
  double init_accel_bias_sigma = 2.0e-3;
  double init_gyro_bias_sigma = 1.0e-4;

  void validate() const;
};

Mat15 initial_covariance(const FilterConfig& config);

/// Estimate of the whole filter: nominal navigation state, accumulated bias
/// estimates and the error covariance.
struct FilterEstimate {
  NavState nav;
  Vec3 accel_bias = Vec3::Zero();
  Vec3 gyro_bias = Vec3::Zero();
  Mat15 P = Mat15::Identity();

  /// IMU sample with the current bias estimates removed.
  ImuSample corrected(const ImuSample& raw) const;
};

/// Closed-loop correction: apply `dx` to the estimate (see sign convention).
FilterEstimate inject(const FilterEstimate& est, const ErrorState& dx);

/// Error of `est` with respect to a truth state and true sensor biases,
/// using the same convention as `inject` (inject(est, error) == truth).
ErrorState error_between(const FilterEstimate& est, const NavState& truth,
                         const Vec3& true_accel_bias, const Vec3& true_gyro_bias);

/// Discrete error-state transition over `dt`, linearized about the
/// post-propagation state and the bias-compensated IMU sample.
Mat15 build_F(const NavState& state, const ImuSample& imu, double dt,
              const Vec3& earth_rate_n = Vec3::Zero());

Mat15 build_Q(const FilterConfig& config, double dt);

void symmetrize(Mat15& P);

/// P <- F P F^T + Q, symmetrized. Throws NumericalError if the result is
/// non-finite or has a diagonal entry below -1e-12.
Mat15 predict(const Mat15& P, const Mat15& F, const Mat15& Q);

struct CovarianceCheck {
  double asymmetry = 0.0;
  double min_eigenvalue = 0.0;
  bool ok = true;
};

/// Symmetric within 1e-10 and eigenvalues >= -1e-12 (relative to scale).
CovarianceCheck check_covariance(const Mat15& P);

/// Chi-square quantile used by the innovation gate.
double chi2_gate(int dof, double probability);

enum class UpdateStatus { kApplied, kGated, kStale, kFailed };

struct UpdateReport {
  UpdateStatus status = UpdateStatus::kFailed;
  double nis = 0.0;  // normalized innovation squared
  int dim = 0;
};

struct UpdateResult {
  FilterEstimate estimate;
  UpdateReport report;
};

/// Measurement model in innovation form: dz ~= H dx + noise(R).
struct LinearMeasurement {
  Eigen::VectorXd dz;
  Eigen::MatrixXd H;
  Eigen::MatrixXd R;
};

/// Covariance update for a measurement. Joseph-stabilized when `joseph`,
/// otherwise the plain (I - K H) P form. Returns false if the innovation
/// covariance cannot be factorized even after diagonal jitter.
bool covariance_update(Mat15& P, const Eigen::MatrixXd& H, const Eigen::MatrixXd& R,
                       bool joseph = true);

/// Gated EKF update followed by injection and error-state reset.
UpdateResult kalman_update(const FilterEstimate& est, const LinearMeasurement& m,
                           double gate_probability);

/// ZUPT model: dz = [-v_est ; -omega_est], H = [0 -I 0 0 0 ; 0 0 0 0 -I].
/// `omega_meas` is a raw (uncompensated) body rate.
LinearMeasurement zupt_measurement(const FilterEstimate& est, const Vec3& omega_meas,
                                   const FilterConfig& config,
                                   const VehicleParams& params);

UpdateResult update_zupt(const FilterEstimate& est, const Vec3& omega_meas,
                         const FilterConfig& config, const VehicleParams& params);

/// Non-holonomic constraint model. The lateral row is omitted whenever
/// |beta| >= beta_max.
LinearMeasurement nhc_measurement(const FilterEstimate& est, const Vec3& omega_meas,
                                  const VehicleParams& params, double beta,
                                  const FilterConfig& config);

UpdateResult update_nhc(const FilterEstimate& est, const Vec3& omega_meas,
                        const VehicleParams& params, double beta,
                        const FilterConfig& config);

/// Observation matrix of the 4-dim odometry measurement
/// [body forward, body lateral, body vertical velocity, yaw rate].
OdoJacobian odometry_jacobian(const FilterEstimate& est, const VehicleParams& params);

Mat4 odometry_noise(const FilterConfig& config);

LinearMeasurement odometry_measurement(const FilterEstimate& est, const OdomSpeed& odo,
                                       const Vec3& omega_meas, const Mat4& R,
                                       const VehicleParams& params);

UpdateResult update_wheel_odometry(const FilterEstimate& est, const OdomSpeed& odo,
                                   const Vec3& omega_meas, const Mat4& R,
                                   const VehicleParams& params, double gate_probability);

enum class FilterEventKind {
  kZuptGated,
  kNhcGated,
  kOdoGated,
  kOdoStale,
  kUpdateFailed,
  kVelocityInflated
};

struct FilterEvent {
  double t = 0.0;
  FilterEventKind kind = FilterEventKind::kUpdateFailed;
  double nis = 0.0;
};

const char* to_string(FilterEventKind kind);

struct FilterStats {
  long propagations = 0;
  long zupt_applied = 0;
  long nhc_applied = 0;
  long odo_applied = 0;
  long gated = 0;
  long stale = 0;
  long failed = 0;
  long inflations = 0;
  long covariance_checks = 0;
  long covariance_violations = 0;
};

/// Sequential filter: owns the estimate, the last transition/noise matrices
/// and a second "leg" covariance whose position block is re-referenced to
/// the position at the last restart_leg() call.
class Eskf {
 public:
  Eskf(const NavState& initial, const FilterConfig& config,
       const VehicleParams& params, double t0);

  /// Propagate with a raw IMU sample; dt is taken from the sample time.
  void propagate(const ImuSample& raw);

  UpdateReport zupt(const Vec3& omega_meas);
  UpdateReport nhc(const Vec3& omega_meas, double beta);
  UpdateReport wheel_odometry(const OdomSpeed& odo, double odo_time,
                              const Vec3& omega_meas);

  /// Add `extra_var` to the velocity variances of both covariances. Used to
  /// recover when a confirmed standstill contradicts an overconfident filter.
  void inflate_velocity(const Vec3& extra_var);

  /// Replace the forward-speed variance of the live odometry noise.
  void set_forward_odometry_noise(double var);
  const Mat4& live_odometry_noise() const { return R_odo_; }

  /// Zero the position rows/columns of the leg covariance.
  void restart_leg();

  void set_covariance_monitor(bool enabled) { monitor_ = enabled; }

  double time() const { return t_; }
  const FilterEstimate& estimate() const { return est_; }
  const NavState& nav() const { return est_.nav; }
  const Mat15& covariance() const { return est_.P; }
  const Mat15& leg_covariance() const { return P_leg_; }
  const Mat15& last_F() const { return F_; }
  const Mat15& last_Q() const { return Q_; }
  const FilterConfig& config() const { return config_; }
  const VehicleParams& params() const { return params_; }
  const FilterStats& stats() const { return stats_; }
  const std::vector<FilterEvent>& events() const { return events_; }

  /// Velocity resolved in body axes.
  Vec3 body_velocity() const { return est_.nav.C_b_n.transpose() * est_.nav.v_eb_n; }

 private:
  UpdateReport apply(const LinearMeasurement& m, FilterEventKind gated_kind);
  void monitor();

  FilterConfig config_;
  VehicleParams params_;
  FilterEstimate est_;
  Mat15 P_leg_;
  Mat15 F_ = Mat15::Identity();
  Mat15 Q_ = Mat15::Zero();
  Mat4 R_odo_;
  double t_;
  bool monitor_ = false;
  FilterStats stats_;
  std::vector<FilterEvent> events_;
};

}  // namespace slipnav

#endif  // SLIPNAV_ESKF_HPP_
