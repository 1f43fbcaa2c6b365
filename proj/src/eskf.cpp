#include "slipnav/eskf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <gsl/gsl_cdf.h>

namespace slipnav {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw InputError(std::string("FilterConfig: ") + name + " must be positive");
  }
}

// Factorizes S, adding diagonal jitter (1e-12, then x10) if needed.
bool factor_innovation(MatrixXd S, Eigen::LLT<MatrixXd>& llt) {
  double jitter = 1e-12;
  for (int attempt = 0; attempt < 4; ++attempt) {
    llt.compute(S);
    if (llt.info() == Eigen::Success) {
      return true;
    }
    S.diagonal().array() += jitter;
    jitter *= 10.0;
  }
  return false;
}

}  // namespace

Vec15 ErrorState::to_vector() const {
  Vec15 x;
  x << d_psi, d_v, d_p, b_a, b_g;
  return x;
}

ErrorState ErrorState::from_vector(const Vec15& x) {
  ErrorState e;
  e.d_psi = x.segment<3>(block::kAtt);
  e.d_v = x.segment<3>(block::kVel);
  e.d_p = x.segment<3>(block::kPos);
  e.b_a = x.segment<3>(block::kAccelBias);
  e.b_g = x.segment<3>(block::kGyroBias);
  return e;
}

void FilterConfig::validate() const {
  require_positive(gyro_noise_psd, "gyro_noise_psd");
  require_positive(accel_noise_psd, "accel_noise_psd");
  require_positive(accel_bias_rw_psd, "accel_bias_rw_psd");
  require_positive(gyro_bias_rw_psd, "gyro_bias_rw_psd");
  require_positive(R_odo, "R_odo");
  require_positive(R_odo_yaw, "R_odo_yaw");
  require_positive(R_nhc, "R_nhc");
  require_positive(R_zupt_v, "R_zupt_v");
  require_positive(R_zupt_g, "R_zupt_g");
  require_positive(beta_max, "beta_max");
  require_positive(odo_max_age, "odo_max_age");
  require_positive(init_att_sigma, "init_att_sigma");
  require_positive(init_vel_sigma, "init_vel_sigma");
  require_positive(init_pos_sigma, "init_pos_sigma");
  require_positive(init_accel_bias_sigma, "init_accel_bias_sigma");
  require_positive(init_gyro_bias_sigma, "init_gyro_bias_sigma");
  if (!(gate_probability > 0.0 && gate_probability < 1.0)) {
    throw InputError("FilterConfig: gate_probability must be in (0, 1)");
  }
}

Mat15 initial_covariance(const FilterConfig& config) {
  Vec15 sigma;
  sigma << Vec3::Constant(config.init_att_sigma), Vec3::Constant(config.init_vel_sigma),
      Vec3::Constant(config.init_pos_sigma), Vec3::Constant(config.init_accel_bias_sigma),
      Vec3::Constant(config.init_gyro_bias_sigma);
  return sigma.array().square().matrix().asDiagonal();
}

ImuSample FilterEstimate::corrected(const ImuSample& raw) const {
  ImuSample out = raw;
  out.omega_ib_b -= gyro_bias;
  out.f_ib_b -= accel_bias;
  return out;
}

FilterEstimate inject(const FilterEstimate& est, const ErrorState& dx) {
  FilterEstimate out = est;
  out.nav.C_b_n = exp_so3(dx.d_psi) * est.nav.C_b_n;
  out.nav.v_eb_n = est.nav.v_eb_n - dx.d_v;
  out.nav.p_b = est.nav.p_b - dx.d_p;
  out.accel_bias = est.accel_bias + dx.b_a;
  out.gyro_bias = est.gyro_bias + dx.b_g;
  return out;
}

ErrorState error_between(const FilterEstimate& est, const NavState& truth,
                         const Vec3& true_accel_bias, const Vec3& true_gyro_bias) {
  ErrorState e;
  e.d_psi = log_so3(truth.C_b_n * est.nav.C_b_n.transpose());
  e.d_v = est.nav.v_eb_n - truth.v_eb_n;
  e.d_p = est.nav.p_b - truth.p_b;
  e.b_a = true_accel_bias - est.accel_bias;
  e.b_g = true_gyro_bias - est.gyro_bias;
  return e;
}

Mat15 build_F(const NavState& state, const ImuSample& imu, double dt,
              const Vec3& earth_rate_n) {
  using namespace block;
  const Mat3& C = state.C_b_n;
  Mat15 F = Mat15::Identity();
  F.block<3, 3>(kAtt, kGyroBias) = -C * dt;
  F.block<3, 3>(kVel, kAtt) = skew(C * imu.f_ib_b) * dt;
  F.block<3, 3>(kVel, kAccelBias) = C * dt;
  F.block<3, 3>(kPos, kVel) = Mat3::Identity() * dt;
  if (!earth_rate_n.isZero(0.0)) {
    F.block<3, 3>(kAtt, kAtt) -= skew(earth_rate_n) * dt;
    F.block<3, 3>(kVel, kVel) -= 2.0 * skew(earth_rate_n) * dt;
  }
  return F;
}

Mat15 build_Q(const FilterConfig& config, double dt) {
  Vec15 q;
  q << Vec3::Constant(config.gyro_noise_psd), Vec3::Constant(config.accel_noise_psd),
      Vec3::Zero(), Vec3::Constant(config.accel_bias_rw_psd),
      Vec3::Constant(config.gyro_bias_rw_psd);
  return (q * dt).asDiagonal();
}

void symmetrize(Mat15& P) { P = 0.5 * (P + P.transpose()).eval(); }

Mat15 predict(const Mat15& P, const Mat15& F, const Mat15& Q) {
  Mat15 out = F * P * F.transpose() + Q;
  symmetrize(out);
  if (!out.allFinite() || out.diagonal().minCoeff() < -1e-12) {
    throw NumericalError("predict: covariance lost positive semi-definiteness");
  }
  return out;
}

CovarianceCheck check_covariance(const Mat15& P) {
  CovarianceCheck c;
  if (!P.allFinite()) {
    c.ok = false;
    c.asymmetry = std::numeric_limits<double>::infinity();
    c.min_eigenvalue = -std::numeric_limits<double>::infinity();
    return c;
  }
  c.asymmetry = (P - P.transpose()).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Mat15> eig(P, Eigen::EigenvaluesOnly);
  c.min_eigenvalue = eig.eigenvalues().minCoeff();
  const double scale = std::max(1.0, P.diagonal().cwiseAbs().maxCoeff());
  c.ok = c.asymmetry <= 1e-10 * scale && c.min_eigenvalue >= -1e-12 * scale;
  return c;
}

double chi2_gate(int dof, double probability) {
  return gsl_cdf_chisq_Pinv(probability, static_cast<double>(dof));
}

bool covariance_update(Mat15& P, const MatrixXd& H, const MatrixXd& R, bool joseph) {
  const MatrixXd PHt = P * H.transpose();
  Eigen::LLT<MatrixXd> llt;
  if (!factor_innovation(H * PHt + R, llt)) {
    return false;
  }
  const MatrixXd K = llt.solve(PHt.transpose()).transpose();
  const Mat15 I_KH = Mat15::Identity() - K * H;
  if (joseph) {
    P = I_KH * P * I_KH.transpose() + K * R * K.transpose();
  } else {
    P = I_KH * P;
  }
  symmetrize(P);
  return true;
}

UpdateResult kalman_update(const FilterEstimate& est, const LinearMeasurement& m,
                           double gate_probability) {
  UpdateResult result{est, {}};
  const int dim = static_cast<int>(m.dz.size());
  result.report.dim = dim;

  const MatrixXd PHt = est.P * m.H.transpose();
  Eigen::LLT<MatrixXd> llt;
  if (!factor_innovation(m.H * PHt + m.R, llt)) {
    result.report.status = UpdateStatus::kFailed;
    return result;
  }
  const VectorXd Sinv_dz = llt.solve(m.dz);
  result.report.nis = m.dz.dot(Sinv_dz);
  if (!std::isfinite(result.report.nis)) {
    result.report.status = UpdateStatus::kFailed;
    return result;
  }
  if (result.report.nis > chi2_gate(dim, gate_probability)) {
    result.report.status = UpdateStatus::kGated;
    return result;
  }

  const MatrixXd K = llt.solve(PHt.transpose()).transpose();
  const Vec15 dx = K * m.dz;
  const Mat15 I_KH = Mat15::Identity() - K * m.H;
  Mat15 P = I_KH * est.P * I_KH.transpose() + K * m.R * K.transpose();
  symmetrize(P);

  result.estimate = inject(est, ErrorState::from_vector(dx));
  result.estimate.P = P;
  result.report.status = UpdateStatus::kApplied;
  return result;
}

LinearMeasurement zupt_measurement(const FilterEstimate& est, const Vec3& omega_meas,
                                   const FilterConfig& config,
                                   const VehicleParams& params) {
  using namespace block;
  const Vec3 omega_est = omega_meas - est.gyro_bias -
                         est.nav.C_b_n.transpose() * params.earth_rate_n();
  LinearMeasurement m;
  m.dz.resize(6);
  m.dz << -est.nav.v_eb_n, -omega_est;
  m.H = MatrixXd::Zero(6, kErrorStateDim);
  m.H.block<3, 3>(0, kVel) = -Mat3::Identity();
  m.H.block<3, 3>(3, kGyroBias) = -Mat3::Identity();
  m.R = MatrixXd::Zero(6, 6);
  m.R.diagonal() << Vec3::Constant(config.R_zupt_v), Vec3::Constant(config.R_zupt_g);
  return m;
}

UpdateResult update_zupt(const FilterEstimate& est, const Vec3& omega_meas,
                         const FilterConfig& config, const VehicleParams& params) {
  return kalman_update(est, zupt_measurement(est, omega_meas, config, params),
                       config.gate_probability);
}

LinearMeasurement nhc_measurement(const FilterEstimate& est, const Vec3& omega_meas,
                                  const VehicleParams& params, double beta,
                                  const FilterConfig& config) {
  const Mat3 C_n_b = est.nav.C_b_n.transpose();
  const Vec3 omega_est = omega_meas - est.gyro_bias;
  const Vec3 v_rear = C_n_b * est.nav.v_eb_n - omega_est.cross(params.lever_arm);

  const bool lateral = std::abs(beta) < config.beta_max;
  const int rows = lateral ? 2 : 1;
  const int first_axis = lateral ? 1 : 2;

  LinearMeasurement m;
  m.dz.resize(rows);
  m.H = MatrixXd::Zero(rows, kErrorStateDim);
  for (int i = 0; i < rows; ++i) {
    const int axis = first_axis + i;
    m.dz(i) = -v_rear(axis);
    m.H.block<1, 3>(i, block::kVel) = -C_n_b.row(axis);
  }
  m.R = MatrixXd::Identity(rows, rows) * config.R_nhc;
  return m;
}

UpdateResult update_nhc(const FilterEstimate& est, const Vec3& omega_meas,
                        const VehicleParams& params, double beta,
                        const FilterConfig& config) {
  return kalman_update(est, nhc_measurement(est, omega_meas, params, beta, config),
                       config.gate_probability);
}

OdoJacobian odometry_jacobian(const FilterEstimate& est, const VehicleParams& params) {
  using namespace block;
  const Mat3 C_n_b = est.nav.C_b_n.transpose();
  OdoJacobian H = OdoJacobian::Zero();
  H.block<3, 3>(0, kAtt) = C_n_b * skew(est.nav.v_eb_n);
  H.block<3, 3>(0, kVel) = -C_n_b;
  H.block<3, 3>(0, kGyroBias) = -skew(params.lever_arm);
  H(3, kGyroBias + 2) = -1.0;
  return H;
}

Mat4 odometry_noise(const FilterConfig& config) {
  Mat4 R = Mat4::Zero();
  R.diagonal() << config.R_odo, config.R_odo, config.R_odo, config.R_odo_yaw;
  return R;
}

LinearMeasurement odometry_measurement(const FilterEstimate& est, const OdomSpeed& odo,
                                       const Vec3& omega_meas, const Mat4& R,
                                       const VehicleParams& params) {
  const Mat3 C_n_b = est.nav.C_b_n.transpose();
  const Vec3 omega_est = omega_meas - est.gyro_bias -
                         C_n_b * params.earth_rate_n();
  const Vec3 v_rear = C_n_b * est.nav.v_eb_n - omega_est.cross(params.lever_arm);

  LinearMeasurement m;
  m.dz.resize(4);
  m.dz << odo.v_odo - v_rear.x(), -v_rear.y(), -v_rear.z(),
      odo.yaw_rate_odo - omega_est.z();
  m.H = odometry_jacobian(est, params);
  m.R = R;
  return m;
}

UpdateResult update_wheel_odometry(const FilterEstimate& est, const OdomSpeed& odo,
                                   const Vec3& omega_meas, const Mat4& R,
                                   const VehicleParams& params, double gate_probability) {
  return kalman_update(est, odometry_measurement(est, odo, omega_meas, R, params),
                       gate_probability);
}

const char* to_string(FilterEventKind kind) {
  switch (kind) {
    case FilterEventKind::kZuptGated:
      return "zupt_gated";
    case FilterEventKind::kNhcGated:
      return "nhc_gated";
    case FilterEventKind::kOdoGated:
      return "odo_gated";
    case FilterEventKind::kOdoStale:
      return "odo_stale";
    case FilterEventKind::kUpdateFailed:
      return "update_failed";
    case FilterEventKind::kVelocityInflated:
      return "velocity_inflated";
  }
  return "unknown";
}

// ----------------------------------------------------------------------------

Eskf::Eskf(const NavState& initial, const FilterConfig& config,
           const VehicleParams& params, double t0)
    : config_(config), params_(params), t_(t0) {
  config_.validate();
  params_.validate();
  if (!is_finite(initial)) {
    throw InputError("Eskf: non-finite initial state");
  }
  est_.nav = initial;
  est_.P = initial_covariance(config_);
  P_leg_ = est_.P;
  R_odo_ = odometry_noise(config_);
}

void Eskf::propagate(const ImuSample& raw) {
  const double dt = raw.t - t_;
  if (!(dt > 0.0)) {
    throw InputError("Eskf: IMU timestamps must be strictly increasing (t=" +
                     std::to_string(raw.t) + ")");
  }
  const ImuSample imu = est_.corrected(raw);
  est_.nav = propagate_strapdown(est_.nav, imu, dt, params_);
  F_ = build_F(est_.nav, imu, dt, params_.earth_rate_n());
  Q_ = build_Q(config_, dt);
  est_.P = predict(est_.P, F_, Q_);
  P_leg_ = predict(P_leg_, F_, Q_);
  t_ = raw.t;
  ++stats_.propagations;
  monitor();
}

UpdateReport Eskf::apply(const LinearMeasurement& m, FilterEventKind gated_kind) {
  UpdateResult r = kalman_update(est_, m, config_.gate_probability);
  switch (r.report.status) {
    case UpdateStatus::kApplied:
      est_ = r.estimate;
      if (!covariance_update(P_leg_, m.H, m.R, true)) {
        throw NumericalError("Eskf: leg covariance update failed");
      }
      monitor();
      break;
    case UpdateStatus::kGated:
      ++stats_.gated;
      events_.push_back({t_, gated_kind, r.report.nis});
      break;
    default:
      ++stats_.failed;
      events_.push_back({t_, FilterEventKind::kUpdateFailed, r.report.nis});
      break;
  }
  return r.report;
}

UpdateReport Eskf::zupt(const Vec3& omega_meas) {
  UpdateReport r = apply(zupt_measurement(est_, omega_meas, config_, params_),
                         FilterEventKind::kZuptGated);
  if (r.status == UpdateStatus::kApplied) ++stats_.zupt_applied;
  return r;
}

UpdateReport Eskf::nhc(const Vec3& omega_meas, double beta) {
  UpdateReport r = apply(nhc_measurement(est_, omega_meas, params_, beta, config_),
                         FilterEventKind::kNhcGated);
  if (r.status == UpdateStatus::kApplied) ++stats_.nhc_applied;
  return r;
}

UpdateReport Eskf::wheel_odometry(const OdomSpeed& odo, double odo_time,
                                  const Vec3& omega_meas) {
  if (t_ - odo_time > config_.odo_max_age) {
    ++stats_.stale;
    events_.push_back({t_, FilterEventKind::kOdoStale, 0.0});
    UpdateReport r;
    r.status = UpdateStatus::kStale;
    r.dim = 4;
    return r;
  }
  UpdateReport r = apply(odometry_measurement(est_, odo, omega_meas, R_odo_, params_),
                         FilterEventKind::kOdoGated);
  if (r.status == UpdateStatus::kApplied) ++stats_.odo_applied;
  return r;
}

void Eskf::inflate_velocity(const Vec3& extra_var) {
  if (!(extra_var.array() >= 0.0).all() || !extra_var.allFinite()) {
    throw InputError("Eskf: velocity inflation must be finite and nonnegative");
  }
  est_.P.diagonal().segment<3>(block::kVel) += extra_var;
  P_leg_.diagonal().segment<3>(block::kVel) += extra_var;
  ++stats_.inflations;
  events_.push_back({t_, FilterEventKind::kVelocityInflated, extra_var.sum()});
}

void Eskf::set_forward_odometry_noise(double var) {
  if (!(var > 0.0) || !std::isfinite(var)) {
    throw InputError("Eskf: odometry noise must be positive and finite");
  }
  R_odo_(0, 0) = var;
}

void Eskf::restart_leg() {
  P_leg_ = est_.P;
  P_leg_.middleRows<3>(block::kPos).setZero();
  P_leg_.middleCols<3>(block::kPos).setZero();
}

void Eskf::monitor() {
  if (!monitor_) {
    return;
  }
  ++stats_.covariance_checks;
  if (!check_covariance(est_.P).ok) {
    ++stats_.covariance_violations;
  }
}

}  // namespace slipnav
