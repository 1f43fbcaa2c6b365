#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "slipnav/gp.hpp"
#include "slipnav/sim.hpp"

namespace slipnav {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

const KernelParams kUnit{1.0, 1.0, 1.0, 0.01};

VectorXd grid(int n, double step) {
  VectorXd t(n);
  for (int i = 0; i < n; ++i) t(i) = step * (i + 1);
  return t;
}

// Brute-force Gaussian log density with a dense LU determinant.
double dense_log_evidence(const VectorXd& t, const VectorXd& s, const KernelParams& p) {
  const int n = static_cast<int>(t.size());
  MatrixXd K(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      K(i, j) = p.sigma2_b * p.sigma2_rbf * std::min(t(i), t(j)) *
                    std::exp(-(t(i) - t(j)) * (t(i) - t(j)) / (2.0 * p.ell * p.ell)) +
                (i == j ? p.sigma2_noise : 0.0);
  const Eigen::FullPivLU<MatrixXd> lu(K);
  return -0.5 * s.dot(lu.solve(s)) - 0.5 * std::log(lu.determinant()) -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

// Draw one sample path of the kernel with known hyperparameters.
VectorXd sample_path(const VectorXd& t, const KernelParams& p, Rng& rng) {
  MatrixXd K = gram_matrix(t, p);
  K.diagonal().array() += p.sigma2_noise;
  const MatrixXd L = K.llt().matrixL();
  VectorXd z(t.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return L * z;
}

TEST(Kernel, Examples) {
  EXPECT_EQ(kernel_eval(0.0, 0.0, kUnit), 0.0);
  EXPECT_DOUBLE_EQ(kernel_eval(4.0, 4.0, kUnit), 4.0);
  KernelParams p = kUnit;
  p.ell = 3.0;
  EXPECT_NEAR(kernel_eval(2.0, 5.0, p), 2.0 * std::exp(-0.5), 1e-12);
  EXPECT_NEAR(kernel_eval(2.0, 5.0, p), 1.21306, 1e-5);
  EXPECT_DOUBLE_EQ(kernel_eval(2.0, 5.0, p), kernel_eval(5.0, 2.0, p));
}

TEST(Kernel, ParamsLogRoundTripAndValidation) {
  const KernelParams p{0.3, 2.5, 0.02, 1e-4};
  const KernelParams q = KernelParams::from_log(p.to_log());
  EXPECT_NEAR(q.sigma2_rbf, p.sigma2_rbf, 1e-15);
  EXPECT_NEAR(q.ell, p.ell, 1e-15);
  EXPECT_NEAR(q.sigma2_b, p.sigma2_b, 1e-17);
  EXPECT_NEAR(q.sigma2_noise, p.sigma2_noise, 1e-19);
  KernelParams bad = p;
  bad.ell = 0.0;
  EXPECT_THROW(bad.validate(), InputError);
  const KernelBounds b;
  EXPECT_TRUE(b.contains(p));
  KernelParams big = p;
  big.ell = 1e3;
  EXPECT_FALSE(b.contains(big));
  EXPECT_EQ(b.clamp(big).ell, b.upper.ell);
}

TEST(Gram, SymmetricAndFactorizable) {
  Rng rng(31);
  const VectorXd t = grid(150, 0.1);
  const MatrixXd K = gram_matrix(t, KernelParams{});
  EXPECT_EQ(K, K.transpose());
  VectorXd s(150);
  for (int i = 0; i < 150; ++i) s(i) = 0.2 + 0.05 * rng.normal();
  const GpModel m = fit(t, s, KernelParams{});
  EXPECT_LT((m.L * m.L.transpose() - K - (m.params.sigma2_noise + m.jitter) *
                                            MatrixXd::Identity(150, 150))
                .norm(),
            1e-10);
}

TEST(Gram, DuplicateTimesAreHandled) {
  VectorXd t(4), s(4);
  t << 1.0, 1.0, 2.0, 2.0;
  s << 0.1, 0.1, 0.2, 0.2;
  KernelParams p = kUnit;
  p.sigma2_noise = 1e-14;
  EXPECT_NO_THROW({
    const GpModel m = fit(t, s, p);
    EXPECT_TRUE(m.alpha.allFinite());
  });
}

TEST(Fit, RejectsBadInput) {
  EXPECT_THROW(fit(VectorXd(), VectorXd(), kUnit), InputError);
  EXPECT_THROW(fit(grid(3, 1.0), VectorXd::Zero(2), kUnit), InputError);
  EXPECT_THROW(fit(grid(3, 1.0), VectorXd::Zero(3), kUnit, 2.0), InputError);
  SlipWindow small;
  small.samples.resize(kMinWindowSamples - 1);
  EXPECT_THROW(fit(small, kUnit), InputError);
}

TEST(Evidence, MatchesDenseOracle) {
  Rng rng(32);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 5 + trial * 4;
    const VectorXd t = grid(n, rng.uniform(0.05, 0.5));
    VectorXd s(n);
    for (int i = 0; i < n; ++i) s(i) = rng.normal() * 0.2;
    const KernelParams p{rng.uniform(0.1, 2.0), rng.uniform(0.5, 4.0), rng.uniform(0.01, 0.5),
                         rng.uniform(1e-3, 0.05)};
    const double value = log_marginal_likelihood(fit(t, s, p)).value;
    EXPECT_NEAR(value, dense_log_evidence(t, s, p), 1e-8 * std::max(1.0, std::abs(value)));
  }
}

TEST(Evidence, GradientMatchesFiniteDifference) {
  Rng rng(33);
  const VectorXd t = grid(40, 0.2);
  VectorXd s(40);
  for (int i = 0; i < 40; ++i) s(i) = 0.2 + 0.1 * std::sin(0.5 * t(i)) + 0.02 * rng.normal();
  const KernelParams p{0.4, 1.5, 0.05, 2e-3};
  const Evidence e = log_marginal_likelihood(fit(t, s, p));
  for (int j = 0; j < 4; ++j) {
    Eigen::Vector4d up = p.to_log(), down = p.to_log();
    up(j) += 1e-5;
    down(j) -= 1e-5;
    const double fd = (log_marginal_likelihood(fit(t, s, KernelParams::from_log(up))).value -
                       log_marginal_likelihood(fit(t, s, KernelParams::from_log(down))).value) /
                      2e-5;
    EXPECT_NEAR(e.gradient(j), fd, 1e-5 * std::max(1.0, std::abs(fd))) << "parameter " << j;
  }
}

TEST(GpPredict, TrainingPointWithTinyNoise) {
  KernelParams p = kUnit;
  p.sigma2_noise = 1e-10;
  VectorXd t(3), s(3);
  t << 1.0, 2.0, 3.0;
  s << 0.1, 0.3, 0.2;
  const GpModel m = fit(t, s, p);
  VectorXd ts(1);
  ts << 2.0;
  const GpPrediction pr = predict(m, ts);
  EXPECT_NEAR(pr.mu_star(0), 0.3, 1e-6);
  EXPECT_LT(pr.var_star(0), 1e-8);
}

TEST(GpPredict, FarFutureRevertsToPrior) {
  const VectorXd t = grid(20, 0.5);
  const VectorXd s = VectorXd::Constant(20, 0.3);
  const GpModel m = fit(t, s, kUnit);
  VectorXd ts(1);
  ts << 100.0;
  const GpPrediction pr = predict(m, ts);
  EXPECT_NEAR(pr.mu_star(0), 0.0, 1e-12);
  EXPECT_NEAR(pr.var_star(0), kernel_eval(100.0, 100.0, kUnit), 1e-9);
}

TEST(GpPredict, OriginShiftsTimes) {
  const VectorXd t = grid(10, 0.5);
  VectorXd s(10);
  for (int i = 0; i < 10; ++i) s(i) = 0.1 * i;
  const GpModel a = fit(t, s, kUnit);
  const GpModel b = fit(t.array() + 50.0, s, kUnit, 50.0);
  const VectorXd ts = future_times(5.0, 3.0, 0.5);
  const GpPrediction pa = predict(a, ts);
  const GpPrediction pb = predict(b, ts.array() + 50.0);
  EXPECT_LT((pa.mu_star - pb.mu_star).norm(), 1e-12);
  EXPECT_LT((pa.var_star - pb.var_star).norm(), 1e-12);
}

TEST(GpPredict, VarianceNeverNegative) {
  Rng rng(34);
  const VectorXd t = grid(150, 0.1);
  VectorXd s(150);
  for (int i = 0; i < 150; ++i) s(i) = 0.25 + 0.01 * rng.normal();
  const GpPrediction pr = predict(fit(t, s, KernelParams{1.0, 0.3, 1.0, 1e-6}), grid(600, 0.1));
  EXPECT_GE(pr.var_star.minCoeff(), 0.0);
}

TEST(FutureTimes, EvenSpacing) {
  const VectorXd f = future_times(15.0, 60.0, 0.1);
  ASSERT_EQ(f.size(), 600);
  EXPECT_NEAR(f(0), 15.1, 1e-12);
  EXPECT_NEAR(f(599), 75.0, 1e-9);
  EXPECT_THROW(future_times(0.0, 0.0, 0.1), InputError);
}

// Maximum-likelihood length scales of 15 s windows scatter widely around the
// truth, so the success rate is measured over 60 draws rather than 20.
TEST(Optimize, RecoversLengthScale) {
  const KernelParams truth{1.0, 2.0, 0.01, 1e-4};
  const KernelParams init{0.05, 6.0, 0.01, 1e-3};
  const VectorXd t = grid(150, 0.1);
  const int draws = 60;
  int recovered = 0;
  for (int seed = 1; seed <= draws; ++seed) {
    Rng rng(1000 + seed);
    const VectorXd s = sample_path(t, truth, rng);
    const OptimizeResult r = optimize_hyperparams(t, s, init);
    ASSERT_FALSE(r.fallback);
    // The optimum can be no worse than the generating parameters.
    EXPECT_GE(r.log_evidence, log_marginal_likelihood(fit(t, s, truth)).value - 1e-6)
        << "seed " << seed;
    if (r.params.ell > truth.ell / 2.0 && r.params.ell < truth.ell * 2.0) ++recovered;
  }
  EXPECT_GE(recovered, 0.8 * draws);
}

TEST(Optimize, ZeroSlipShrinksVariances) {
  const VectorXd t = grid(150, 0.1);
  const VectorXd s = VectorXd::Zero(150);
  const OptimizerOptions opt;
  const KernelParams init;
  const OptimizeResult r = optimize_hyperparams(t, s, init, opt);
  EXPECT_LT(r.params.sigma2_rbf * r.params.sigma2_b, 1e-2 * init.sigma2_rbf * init.sigma2_b);
  EXPECT_LT(r.params.sigma2_noise, 1e-2 * init.sigma2_noise);
}

TEST(Optimize, DeterministicAndNoWorseThanStart) {
  Rng rng(35);
  const VectorXd t = grid(80, 0.1);
  VectorXd s(80);
  for (int i = 0; i < 80; ++i) s(i) = 0.3 + 0.05 * std::sin(t(i)) + 0.02 * rng.normal();
  const KernelParams init;
  const OptimizeResult a = optimize_hyperparams(t, s, init);
  const OptimizeResult b = optimize_hyperparams(t, s, init);
  EXPECT_EQ(a.params.ell, b.params.ell);
  EXPECT_EQ(a.log_evidence, b.log_evidence);
  EXPECT_EQ(a.successful_starts, 3);
  EXPECT_GE(a.log_evidence, log_marginal_likelihood(fit(t, s, init)).value);
  EXPECT_TRUE(OptimizerOptions{}.bounds.contains(a.params));
}

TEST(Optimize, WindowOverloadUsesWindowOrigin) {
  Rng rng(36);
  SlipWindow w;
  for (int i = 1; i <= 60; ++i) {
    w.samples.push_back({100.0 + 0.1 * i, 0.2 + 0.02 * rng.normal(), 0.0, false});
  }
  w.t0 = w.samples.front().t;
  w.t1 = w.samples.back().t;
  VectorXd t(60), s(60);
  for (int i = 0; i < 60; ++i) {
    t(i) = w.samples[i].t;
    s(i) = w.samples[i].s;
  }
  const OptimizeResult a = optimize_hyperparams(w, KernelParams{});
  const OptimizeResult b = optimize_hyperparams(t, s, KernelParams{}, {}, w.t0);
  EXPECT_EQ(a.log_evidence, b.log_evidence);
}

}  // namespace
}  // namespace slipnav
