#include "slipnav/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

namespace slipnav {

namespace {

using Eigen::MatrixXd;
using Eigen::Vector4d;
using Eigen::VectorXd;

// Time-only quantities reused across hyperparameter evaluations.
struct Geometry {
  MatrixXd min_t;  // min(t_i, t_j)
  MatrixXd d2;     // (t_i - t_j)^2
};

Geometry make_geometry(const VectorXd& t) {
  const Eigen::Index n = t.size();
  Geometry g{MatrixXd(n, n), MatrixXd(n, n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      g.min_t(i, j) = std::min(t(i), t(j));
      const double d = t(i) - t(j);
      g.d2(i, j) = d * d;
    }
  }
  return g;
}

MatrixXd gram_from_geometry(const Geometry& g, const KernelParams& p) {
  const double amp = p.sigma2_b * p.sigma2_rbf;
  const double c = -0.5 / (p.ell * p.ell);
  return amp * (g.min_t.array() * (c * g.d2.array()).exp()).matrix();
}

struct Factor {
  MatrixXd L;
  double jitter = 0.0;
};

bool factorize(const MatrixXd& K_f, double noise, Factor& out) {
  const Eigen::Index n = K_f.rows();
  const double trace = K_f.trace() + noise * static_cast<double>(n);
  double jitter = std::max(1e-10 * trace / static_cast<double>(n), 1e-14);
  MatrixXd K = K_f;
  K.diagonal().array() += noise;
  for (int attempt = 0; attempt < 4; ++attempt) {
    MatrixXd Kj = K;
    Kj.diagonal().array() += jitter;
    Eigen::LLT<MatrixXd> llt(Kj);
    if (llt.info() == Eigen::Success) {
      out.L = llt.matrixL();
      out.jitter = jitter;
      return true;
    }
    jitter *= 10.0;
  }
  return false;
}

void check_inputs(const VectorXd& t, const VectorXd& s) {
  if (t.size() == 0) {
    throw InputError("gp: at least one training sample is required");
  }
  if (t.size() != s.size()) {
    throw InputError("gp: time and value vectors differ in length");
  }
  if (!t.allFinite() || !s.allFinite()) {
    throw InputError("gp: non-finite training data");
  }
}

VectorXd shifted(const VectorXd& t, double origin) {
  VectorXd rel = t.array() - origin;
  if (rel.minCoeff() < 0.0) {
    throw InputError("gp: times must not precede the window origin");
  }
  return rel;
}

// Inverse of a lower-triangular factor, column by column. Skipping the zeros
// of the identity right-hand side costs a third of a dense triangular solve.
MatrixXd lower_inverse(const MatrixXd& L) {
  const Eigen::Index n = L.rows();
  MatrixXd X = MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    X(j, j) = 1.0;
    for (Eigen::Index k = j; k < n; ++k) {
      X(k, j) /= L(k, k);
      const Eigen::Index m = n - k - 1;
      if (m > 0) X.col(j).segment(k + 1, m) -= X(k, j) * L.col(k).segment(k + 1, m);
    }
  }
  return X;
}

double evidence_value(const VectorXd& s, const Factor& f, VectorXd& alpha) {
  alpha = f.L.triangularView<Eigen::Lower>().solve(s);
  f.L.transpose().triangularView<Eigen::Upper>().solveInPlace(alpha);
  return -0.5 * s.dot(alpha) - f.L.diagonal().array().log().sum() -
         0.5 * static_cast<double>(s.size()) * std::log(2.0 * std::numbers::pi);
}

// Log evidence and gradient w.r.t. log-parameters from a factorized model.
Evidence evidence(const Geometry& g, const MatrixXd& K_f, const VectorXd& s,
                  const KernelParams& p, const Factor& f) {
  const Eigen::Index n = s.size();
  VectorXd alpha;
  Evidence e;
  e.value = evidence_value(s, f, alpha);

  const MatrixXd Linv = lower_inverse(f.L);
  MatrixXd Kinv(n, n);
  Kinv.noalias() = Linv.transpose().triangularView<Eigen::Upper>() * Linv;
  const MatrixXd W = alpha * alpha.transpose() - Kinv;

  // 0.5 * tr(W dK) with dK symmetric reduces to 0.5 * sum(W .* dK).
  const double dK_amp = 0.5 * (W.array() * K_f.array()).sum();
  const double dK_ell =
      0.5 * (W.array() * K_f.array() * g.d2.array()).sum() / (p.ell * p.ell);
  const double dK_noise = 0.5 * p.sigma2_noise * W.trace();
  e.gradient << dK_amp, dK_ell, dK_amp, dK_noise;
  return e;
}

struct ObjectiveData {
  const Geometry* geometry;
  const VectorXd* s;
  Vector4d lo;  // log lower bounds
  Vector4d hi;  // log upper bounds
  int evaluations = 0;
};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Vector4d to_log_params(const gsl_vector* x, const ObjectiveData& d) {
  Vector4d lp;
  for (int i = 0; i < 4; ++i) {
    lp(i) = d.lo(i) + (d.hi(i) - d.lo(i)) * sigmoid(gsl_vector_get(x, i));
  }
  return lp;
}

// Negative log evidence over unconstrained coordinates; NaN on failure.
double objective(const gsl_vector* x, ObjectiveData& d, gsl_vector* grad) {
  ++d.evaluations;
  const Vector4d lp = to_log_params(x, d);
  const KernelParams p = KernelParams::from_log(lp);
  const MatrixXd K_f = gram_from_geometry(*d.geometry, p);
  Factor f;
  if (!factorize(K_f, p.sigma2_noise, f)) {
    if (grad) gsl_vector_set_zero(grad);
    return std::numeric_limits<double>::quiet_NaN();
  }
  if (!grad) {
    VectorXd alpha;
    return -evidence_value(*d.s, f, alpha);
  }
  const Evidence e = evidence(*d.geometry, K_f, *d.s, p, f);
  {
    for (int i = 0; i < 4; ++i) {
      const double sg = sigmoid(gsl_vector_get(x, i));
      gsl_vector_set(grad, i, -e.gradient(i) * (d.hi(i) - d.lo(i)) * sg * (1.0 - sg));
    }
  }
  return -e.value;
}

double f_cb(const gsl_vector* x, void* data) {
  return objective(x, *static_cast<ObjectiveData*>(data), nullptr);
}

void df_cb(const gsl_vector* x, void* data, gsl_vector* g) {
  objective(x, *static_cast<ObjectiveData*>(data), g);
}

void fdf_cb(const gsl_vector* x, void* data, double* f, gsl_vector* g) {
  *f = objective(x, *static_cast<ObjectiveData*>(data), g);
}

double logit(double u) { return std::log(u / (1.0 - u)); }

struct StartResult {
  bool ok = false;
  double value = 0.0;  // log evidence
  Vector4d log_params;
};

StartResult run_start(ObjectiveData& d, const Vector4d& log_init, const OptimizerOptions& opt) {
  gsl_vector* x = gsl_vector_alloc(4);
  for (int i = 0; i < 4; ++i) {
    double u = (log_init(i) - d.lo(i)) / (d.hi(i) - d.lo(i));
    u = std::clamp(u, 1e-6, 1.0 - 1e-6);
    gsl_vector_set(x, i, logit(u));
  }

  StartResult out;
  const double f0 = f_cb(x, &d);
  if (!std::isfinite(f0)) {
    gsl_vector_free(x);
    return out;
  }

  gsl_multimin_function_fdf fn;
  fn.n = 4;
  fn.f = &f_cb;
  fn.df = &df_cb;
  fn.fdf = &fdf_cb;
  fn.params = &d;

  gsl_multimin_fdfminimizer* m =
      gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, 4);
  gsl_multimin_fdfminimizer_set(m, &fn, x, 0.1, 0.1);
  double previous = f0;
  int stalled = 0;
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    if (gsl_multimin_fdfminimizer_iterate(m) != GSL_SUCCESS) {
      break;
    }
    if (gsl_multimin_test_gradient(m->gradient, opt.gradient_tolerance) == GSL_SUCCESS) {
      break;
    }
    stalled = previous - m->f < opt.value_tolerance ? stalled + 1 : 0;
    if (stalled >= 2) break;
    previous = m->f;
  }
  const double fmin = m->f;
  if (std::isfinite(fmin)) {
    out.ok = true;
    out.value = -fmin;
    out.log_params = to_log_params(m->x, d);
  }
  gsl_multimin_fdfminimizer_free(m);
  gsl_vector_free(x);
  return out;
}

// GSL's default handler aborts; errors are reported through return codes.
struct GslHandlerGuard {
  gsl_error_handler_t* previous = gsl_set_error_handler_off();
  ~GslHandlerGuard() { gsl_set_error_handler(previous); }
};

}  // namespace

void KernelParams::validate() const {
  const double v[] = {sigma2_rbf, ell, sigma2_b, sigma2_noise};
  for (double x : v) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw InputError("KernelParams: all hyperparameters must be positive and finite");
    }
  }
}

Vector4d KernelParams::to_log() const {
  return {std::log(sigma2_rbf), std::log(ell), std::log(sigma2_b), std::log(sigma2_noise)};
}

KernelParams KernelParams::from_log(const Vector4d& x) {
  return {std::exp(x(0)), std::exp(x(1)), std::exp(x(2)), std::exp(x(3))};
}

bool KernelBounds::contains(const KernelParams& p) const {
  auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
  return in(p.sigma2_rbf, lower.sigma2_rbf, upper.sigma2_rbf) &&
         in(p.ell, lower.ell, upper.ell) && in(p.sigma2_b, lower.sigma2_b, upper.sigma2_b) &&
         in(p.sigma2_noise, lower.sigma2_noise, upper.sigma2_noise);
}

KernelParams KernelBounds::clamp(const KernelParams& p) const {
  return {std::clamp(p.sigma2_rbf, lower.sigma2_rbf, upper.sigma2_rbf),
          std::clamp(p.ell, lower.ell, upper.ell),
          std::clamp(p.sigma2_b, lower.sigma2_b, upper.sigma2_b),
          std::clamp(p.sigma2_noise, lower.sigma2_noise, upper.sigma2_noise)};
}

double kernel_eval(double t, double t_prime, const KernelParams& p) {
  const double d = t - t_prime;
  return p.sigma2_b * std::min(t, t_prime) * p.sigma2_rbf *
         std::exp(-d * d / (2.0 * p.ell * p.ell));
}

MatrixXd gram_matrix(const VectorXd& t, const KernelParams& params) {
  return gram_from_geometry(make_geometry(t), params);
}

GpModel fit(const VectorXd& t, const VectorXd& s, const KernelParams& params, double origin) {
  check_inputs(t, s);
  params.validate();
  GpModel m;
  m.origin = origin;
  m.T_train = shifted(t, origin);
  m.s_train = s;
  m.params = params;
  Factor f;
  if (!factorize(gram_matrix(m.T_train, params), params.sigma2_noise, f)) {
    throw NumericalError("gp: Gram matrix factorization failed after jitter retries");
  }
  m.L = std::move(f.L);
  m.jitter = f.jitter;
  const auto L = m.L.triangularView<Eigen::Lower>();
  m.alpha = L.solve(s);
  m.L.transpose().triangularView<Eigen::Upper>().solveInPlace(m.alpha);
  return m;
}

namespace {

void window_data(const SlipWindow& window, VectorXd& t, VectorXd& s) {
  if (static_cast<int>(window.samples.size()) < kMinWindowSamples) {
    throw InputError("gp: window needs at least " + std::to_string(kMinWindowSamples) +
                     " samples");
  }
  const auto n = static_cast<Eigen::Index>(window.samples.size());
  t.resize(n);
  s.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    t(i) = window.samples[i].t;
    s(i) = window.samples[i].s;
  }
}

}  // namespace

GpModel fit(const SlipWindow& window, const KernelParams& params) {
  VectorXd t;
  VectorXd s;
  window_data(window, t, s);
  return fit(t, s, params, window.t0);
}

Evidence log_marginal_likelihood(const GpModel& model) {
  const Geometry g = make_geometry(model.T_train);
  const MatrixXd K_f = gram_from_geometry(g, model.params);
  Factor f{model.L, model.jitter};
  return evidence(g, K_f, model.s_train, model.params, f);
}

OptimizeResult optimize_hyperparams(const VectorXd& t, const VectorXd& s,
                                    const KernelParams& init, const OptimizerOptions& options,
                                    double origin) {
  check_inputs(t, s);
  init.validate();
  options.bounds.lower.validate();
  options.bounds.upper.validate();

  const VectorXd rel = shifted(t, origin);
  const Geometry g = make_geometry(rel);
  ObjectiveData d{&g, &s, options.bounds.lower.to_log(), options.bounds.upper.to_log()};
  for (int i = 0; i < 4; ++i) {
    if (!(d.hi(i) > d.lo(i))) {
      throw InputError("gp: lower bounds must be below upper bounds");
    }
  }

  const GslHandlerGuard guard;
  const Vector4d base = options.bounds.clamp(init).to_log();
  const double factors[] = {1.0, 10.0, 0.1};

  OptimizeResult result;
  result.params = options.bounds.clamp(init);
  result.fallback = true;
  result.log_evidence = -std::numeric_limits<double>::infinity();
  for (double factor : factors) {
    Vector4d start = base;
    start.array() += std::log(factor);
    const StartResult r = run_start(d, start, options);
    if (!r.ok) continue;
    ++result.successful_starts;
    if (r.value > result.log_evidence) {
      result.log_evidence = r.value;
      result.params = options.bounds.clamp(KernelParams::from_log(r.log_params));
      result.fallback = false;
    }
  }
  result.evaluations = d.evaluations;
  return result;
}

OptimizeResult optimize_hyperparams(const SlipWindow& window, const KernelParams& init,
                                    const OptimizerOptions& options) {
  VectorXd t;
  VectorXd s;
  window_data(window, t, s);
  return optimize_hyperparams(t, s, init, options, window.t0);
}

GpPrediction predict(const GpModel& model, const VectorXd& t_star) {
  const VectorXd rel = shifted(t_star, model.origin);
  const Eigen::Index n = model.T_train.size();
  const Eigen::Index m = rel.size();
  MatrixXd Ks(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      Ks(i, j) = kernel_eval(model.T_train(i), rel(j), model.params);
    }
  }
  GpPrediction out;
  out.t_star = t_star;
  out.mu_star = Ks.transpose() * model.alpha;
  model.L.triangularView<Eigen::Lower>().solveInPlace(Ks);
  out.var_star.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double prior = kernel_eval(rel(j), rel(j), model.params);
    out.var_star(j) = std::max(0.0, prior - Ks.col(j).squaredNorm());
  }
  return out;
}

VectorXd future_times(double t1, double horizon, double step) {
  if (!(horizon > 0.0) || !(step > 0.0)) {
    throw InputError("future_times: horizon and step must be positive");
  }
  const auto n = static_cast<Eigen::Index>(std::llround(horizon / step));
  VectorXd out(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out(k) = t1 + static_cast<double>(k + 1) * step;
  }
  return out;
}

}  // namespace slipnav
