#include <fracldp/ldp_harness.hpp>

#include <boost/math/distributions/normal.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace fracldp;

namespace {

// X_T = x0 + sqrt(eps) sigma B^H_T with no fast process.
SlowFastSpec pure_fbm(double sigma, double H, double x0 = 0.0) {
  SlowFastSpec s;
  s.fast = 0;
  s.ell = 0;
  s.H = H;
  s.x0 = Vec::Constant(1, x0);
  s.y0 = Vec(0);
  s.sigma1 = [sigma](const Vec&, const Vec&) { return Mat::Constant(1, 1, sigma); };
  return s;
}

LaplaceExperiment small_experiment(Functional h) {
  LaplaceExperiment e;
  e.spec = pure_fbm(1.0, 0.7);
  e.schedule = power_schedule({0.1, 0.01});
  e.h = h;
  e.grid = {9, 1.0, 1};
  e.trials = 1000;
  e.seed = 11;
  return e;
}

}  // namespace

TEST(Laplace, ZeroFunctionalGivesZero) {
  for (const auto& row : estimate_laplace(small_experiment({})))
    EXPECT_EQ(row.estimate, 0.0);
}

TEST(Laplace, ConstantFunctionalFactorsOut) {
  Functional h;
  h.kind = Functional::Kind::constant;
  h.kappa = 0.37;
  for (const auto& row : estimate_laplace(small_experiment(h))) {
    EXPECT_NEAR(row.estimate, 0.37, 1e-14);
    EXPECT_NEAR(row.std_error, 0.0, 1e-12);
  }
}

TEST(Laplace, LogDomainSurvivesUnderflow) {
  // exp(-h/eps) underflows to zero in double precision for every sample.
  std::vector<double> h{800.0, 801.0, 802.0};
  const auto row = laplace_estimate(h, 1.0);
  const double ref = -std::log((std::exp(-0.0) + std::exp(-1.0) + std::exp(-2.0)) / 3.0) + 800.0;
  EXPECT_NEAR(row.estimate, ref, 1e-10);
  EXPECT_TRUE(std::isfinite(row.std_error));
}

TEST(Laplace, NonNegativeForNonNegativeFunctional) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> h(200);
    for (auto& v : h) v = u(rng);
    const auto row = laplace_estimate(h, 0.05);
    EXPECT_GE(row.estimate + 2.0 * row.std_error, 0.0);
    EXPECT_LE(row.estimate, *std::max_element(h.begin(), h.end()));
  }
}

TEST(Laplace, GaussianEndpointOracle) {
  // h = rho (X_T - a)^2 with a cap far above any relevant value.
  const double rho = 1.0, a = 0.5, H = 0.7;
  Functional h;
  h.kind = Functional::Kind::terminal_penalty;
  h.rho = rho;
  h.lo = h.hi = a;
  h.cap = 1e3;
  LaplaceExperiment e;
  e.spec = pure_fbm(1.0, H);
  e.schedule = power_schedule({0.01});
  e.h = h;
  e.grid = {17, 1.0, 1};
  e.trials = 10000;
  e.seed = 2024;
  const auto rows = estimate_laplace(e);
  ASSERT_EQ(rows.size(), 1u);
  const double limit = gaussian_oracle::laplace_limit(rho, a, 0.0, 1.0, 1.0, H);
  const double exact = gaussian_oracle::laplace_exact(rho, a, 0.0, 1.0, 1.0, H, 0.01);
  EXPECT_NEAR(rows[0].estimate, limit, 0.25 * limit);
  EXPECT_NEAR(rows[0].estimate, exact, 5.0 * rows[0].std_error + 1e-4);
  EXPECT_EQ(rows[0].aborted, 0u);
}

TEST(Laplace, Preconditions) {
  auto e = small_experiment({});
  e.trials = 999;
  EXPECT_THROW(estimate_laplace(e), InvalidInput);
  e.trials = 1000;
  e.schedule = {{0.1, 0.01}, {0.05, 0.05}};
  EXPECT_THROW(estimate_laplace(e), InvalidInput);
}

TEST(Laplace, AllTrialsAbortedIsAnExperimentFailure) {
  auto e = small_experiment({});
  e.spec.c = [](const Vec& x, const Vec&) { return Vec::Constant(1, 1e200 * (1.0 + x[0] * x[0])); };
  EXPECT_THROW(estimate_laplace(e), ExperimentError);
}

TEST(Laplace, DeterministicAndThreadIndependent) {
  Functional h;
  h.kind = Functional::Kind::smoothed_exceedance;
  h.kappa = 1.0;
  h.lo = 0.2;
  auto e = small_experiment(h);
  const auto a = estimate_laplace(e);
  const auto b = estimate_laplace(e);
  e.threads = 3;
  const auto c = estimate_laplace(e);
  ASSERT_EQ(a.size(), c.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].estimate, b[i].estimate);
    EXPECT_EQ(a[i].estimate, c[i].estimate);
    EXPECT_EQ(a[i].std_error, c[i].std_error);
  }
  e.threads = 1;
  e.seed = 12;
  EXPECT_NE(estimate_laplace(e)[0].estimate, a[0].estimate);
}

TEST(Schedule, RegimeChecks) {
  EXPECT_NO_THROW(check_schedule(default_schedule(), std::nullopt));
  EXPECT_THROW(check_schedule({}, std::nullopt), InvalidInput);
  EXPECT_THROW(check_schedule({{0.1, 0.01}, {0.05, 0.01}}, std::nullopt), InvalidInput);
  // beta = 0.4: eta = eps^{1/(2 beta) - margin} keeps sqrt(eps)/eta^beta decreasing.
  const auto ok = power_schedule({0.1, 0.05, 0.02}, 1.0 / 0.8 - 0.05);
  EXPECT_NO_THROW(check_schedule(ok, 0.4));
  const auto bad = power_schedule({0.1, 0.05, 0.02}, 1.0 / 0.8 + 0.05);
  EXPECT_THROW(check_schedule(bad, 0.4), InvalidInput);
}

TEST(Wilson, AgainstClosedFormAndCoverage) {
  const auto iv = wilson_interval(10, 100);
  // Closed form for p = 0.1, n = 100, z = 1.96.
  EXPECT_NEAR(iv.lo, 0.05522, 1e-4);
  EXPECT_NEAR(iv.hi, 0.17437, 1e-4);
  const auto zero = wilson_interval(0, 50);
  EXPECT_EQ(zero.lo, 0.0);
  EXPECT_GT(zero.hi, 0.0);
  const auto all = wilson_interval(50, 50);
  EXPECT_EQ(all.hi, 1.0);
  // Empirical coverage near 95% for a binomial(200, 0.3).
  std::mt19937_64 rng(9);
  std::binomial_distribution<int> bin(200, 0.3);
  int cover = 0;
  for (int r = 0; r < 2000; ++r) {
    const auto w = wilson_interval(static_cast<std::size_t>(bin(rng)), 200);
    cover += (w.lo <= 0.3 && 0.3 <= w.hi) ? 1 : 0;
  }
  EXPECT_NEAR(cover / 2000.0, 0.95, 0.02);
}

TEST(RareEvent, ThresholdAtStartGivesOneHalf) {
  RareEventOptions opt;
  opt.grid = {9, 1.0, 1};
  const auto res = estimate_rare_event(pure_fbm(1.0, 0.7, 0.3), 0.3, power_schedule({0.1, 0.01}), 4000, 5, opt);
  EXPECT_TRUE(res.pilot_feasible);
  for (const auto& row : res.rows) {
    EXPECT_LE(row.p_interval.lo, 0.5);
    EXPECT_GE(row.p_interval.hi, 0.5);
    EXPECT_NEAR(row.estimate, -row.eps * std::log(0.5), 4.0 * row.std_error);
  }
  EXPECT_FALSE(res.notes.empty());
}

TEST(RareEvent, GaussianTailOracle) {
  // Exact exceedance probability of N(x0, eps sigma^2) compared at moderate eps.
  const double sigma = 0.8, H = 0.65, a = 0.5;
  RareEventOptions opt;
  opt.grid = {9, 1.0, 1};
  opt.prediction = gaussian_oracle::exceedance_rate(a, 0.0, sigma, 1.0, H);
  const auto res = estimate_rare_event(pure_fbm(sigma, H), a, power_schedule({0.2, 0.1}), 20000, 77, opt);
  for (const auto& row : res.rows) {
    const boost::math::normal nd(0.0, sigma * std::sqrt(row.eps));
    const double p = boost::math::cdf(boost::math::complement(nd, a));
    const auto wide = wilson_interval(row.hits, row.trials - row.aborted, 3.29);
    EXPECT_LE(wide.lo, p);
    EXPECT_GE(wide.hi, p);
    EXPECT_LE(row.p_interval.hi - row.p_interval.lo, wide.hi - wide.lo);
    ASSERT_TRUE(row.prediction);
    EXPECT_NEAR(*row.prediction, a * a / (2.0 * sigma * sigma), 1e-14);
  }
}

TEST(RareEvent, ZeroHitsReportedAsOneSidedBound) {
  RareEventOptions opt;
  opt.grid = {9, 1.0, 1};
  opt.pilot_trials = 1000;
  const auto res = estimate_rare_event(pure_fbm(1.0, 0.7), 5.0, power_schedule({0.01}), 1000, 1, opt);
  EXPECT_FALSE(res.pilot_feasible);
  ASSERT_EQ(res.rows.size(), 1u);
  EXPECT_EQ(res.rows[0].hits, 0u);
  EXPECT_TRUE(res.rows[0].one_sided);
  EXPECT_TRUE(std::isnan(res.rows[0].std_error));
  EXPECT_TRUE(std::isinf(res.rows[0].estimate_interval.hi));
  EXPECT_GT(res.rows[0].estimate, 0.0);
}

TEST(Stabilization, SuccessiveDifferences) {
  EXPECT_TRUE(stabilizes({0.18, 0.12, 0.085, 0.069}));
  EXPECT_FALSE(stabilizes({0.18, 0.17, 0.10}));
  EXPECT_TRUE(stabilizes({1.0, 2.0}));
}
