#include <fracldp/poisson_cell.hpp>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace fracldp;

namespace {

ScalarFn constant(double v) {
  return [v](double) { return v; };
}

double std_normal_pdf(double y) { return std::exp(-0.5 * y * y) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

TEST(InvariantDensity, OrnsteinUhlenbeckIsStandardNormal) {
  for (double alpha : {0.5, 1.0, 3.0}) {
    const auto mu = invariant_density_1d([alpha](double y) { return -alpha * y; }, constant(std::sqrt(2.0 * alpha)));
    double mass = 0.0, err = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      mass += mu.quad.weights[i];
      err = std::max(err, std::abs(mu.density[i] - std_normal_pdf(mu.y[i])));
    }
    EXPECT_NEAR(mass, 1.0, 1e-6);
    EXPECT_LT(err, 1e-10);
    EXPECT_NEAR(mu.sd, 1.0, 1e-8);
    EXPECT_NEAR(mu.L, 8.0, 0.5);
  }
}

TEST(InvariantDensity, QuarticPotentialAgainstQuadratureOracle) {
  // f = -y^3, tau = sqrt(2): rho ~ exp(-y^4/4).
  const auto mu = invariant_density_1d([](double y) { return -y * y * y; }, constant(std::sqrt(2.0)));
  boost::math::quadrature::exp_sinh<double> es;
  const double Z = 2.0 * es.integrate([](double y) { return std::exp(-0.25 * y * y * y * y); }, 0.0,
                                      std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < mu.size(); i += 97) {
    const double ref = std::exp(-0.25 * std::pow(mu.y[i], 4)) / Z;
    EXPECT_NEAR(mu.density[i], ref, 1e-9);
  }
  for (double v : mu.density) EXPECT_GE(v, 0.0);
}

TEST(InvariantDensity, ScalingLeavesDensityUnchanged) {
  auto f = [](double y) { return -y - 0.3 * y * y * y; };
  const auto a = invariant_density_1d(f, constant(1.2), 6.0);
  const double c = 2.5;
  const auto b = invariant_density_1d([&](double y) { return c * c * f(y); }, constant(c * 1.2), 6.0);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.density[i], b.density[i], 1e-12);
}

TEST(InvariantDensity, StateDependentDiffusion) {
  // tau^2 = 2(1 + y^2/2), f = -y: rho ~ (1 + y^2/2)^{-2}.
  const auto mu = invariant_density_1d([](double y) { return -y; },
                                       [](double y) { return std::sqrt(2.0 + y * y); }, 400.0, 40001);
  boost::math::quadrature::tanh_sinh<double> ts;
  auto raw = [](double y) { return std::pow(1.0 + 0.5 * y * y, -2.0); };
  const double Z = ts.integrate(raw, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity());
  for (double y : {-2.0, 0.0, 1.0, 3.0}) EXPECT_NEAR(mu.density_at(y), raw(y) / Z, 1e-4 * raw(y) / Z);
}

TEST(InvariantDensity, Errors) {
  EXPECT_THROW(invariant_density_1d([](double y) { return -y; }, constant(std::sqrt(2.0)), 3.0), TruncationError);
  EXPECT_THROW(invariant_density_1d([](double y) { return -y; }, constant(0.0), 5.0), DegeneracyError);
  EXPECT_THROW(invariant_density_1d([](double) { return 0.0; }, constant(1.0)), TruncationError);
}

TEST(Poisson, ZeroRightHandSide) {
  const auto mu = invariant_density_1d([](double y) { return -y; }, constant(std::sqrt(2.0)));
  const auto sol = solve_poisson_1d(constant(0.0), [](double y) { return -y; }, constant(std::sqrt(2.0)), mu);
  EXPECT_EQ(sol.psi.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(sol.grad.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Poisson, OrnsteinUhlenbeckMatchesAnalytic) {
  for (double alpha : {0.5, 2.0}) {
    const double lambda = 1.7;
    auto f = [alpha](double y) { return -alpha * y; };
    const auto tau = constant(std::sqrt(2.0 * alpha));
    const auto mu = invariant_density_1d(f, tau);
    const auto sol = solve_poisson_1d([lambda](double y) { return lambda * y; }, f, tau, mu);
    double err = 0.0, gerr = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j) {
      if (std::abs(mu.y[j]) > mu.L / 2) continue;
      err = std::max(err, std::abs(sol.psi(static_cast<Eigen::Index>(j), 0) - lambda * mu.y[j] / alpha));
      gerr = std::max(gerr, std::abs(sol.grad(static_cast<Eigen::Index>(j), 0) - lambda / alpha));
    }
    EXPECT_LT(err, 1e-6) << "alpha = " << alpha;
    EXPECT_LT(gerr, 1e-6);
    EXPECT_FALSE(sol.analytic);
  }
}

TEST(Poisson, CubicRightHandSideResidual) {
  auto f = [](double y) { return -y; };
  const auto tau = constant(std::sqrt(2.0));
  auto b = [](double y) { return y * y * y; };
  const auto mu = invariant_density_1d(f, tau);
  const auto sol = solve_poisson_1d(b, f, tau, mu);
  EXPECT_LT(generator_residual(sol, 0, b, f, tau), 1e-4);
  // Exact centered solution: Psi = y^3/3 + 2y.
  for (std::size_t j = 0; j < mu.size(); j += 50)
    if (std::abs(mu.y[j]) <= mu.L / 2)
      EXPECT_NEAR(sol.psi(static_cast<Eigen::Index>(j), 0), std::pow(mu.y[j], 3) / 3.0 + 2.0 * mu.y[j], 1e-6);
}

TEST(Poisson, ResidualShrinksUnderRefinement) {
  auto f = [](double y) { return -y - y * y * y; };
  const auto tau = constant(1.0);
  auto b = [](double y) { return std::sin(y); };  // odd, so centered
  double prev = 1e300;
  for (std::size_t n : {401, 801, 1601}) {
    const auto mu = invariant_density_1d(f, tau, 5.0, n);
    const auto sol = solve_poisson_1d(b, f, tau, mu);
    const double r = generator_residual(sol, 0, b, f, tau);
    EXPECT_LT(r, prev);
    prev = r;
  }
}

TEST(Poisson, CenteringOfSolutionAndViolation) {
  auto f = [](double y) { return -2.0 * y; };
  const auto tau = constant(1.0);
  const auto mu = invariant_density_1d(f, tau);
  const auto sol = solve_poisson_1d({[](double y) { return y * y * y - y; }, [](double y) { return std::tanh(y); }},
                                    f, tau, mu);
  for (Eigen::Index c = 0; c < 2; ++c) {
    double avg = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j) avg += mu.quad.weights[j] * sol.psi(static_cast<Eigen::Index>(j), c);
    EXPECT_LT(std::abs(avg), 1e-6);
  }
  try {
    solve_poisson_1d([](double y) { return 1.0 + y; }, f, tau, mu);
    FAIL() << "expected a centering error";
  } catch (const CenteringError& e) {
    EXPECT_NEAR(e.average, 1.0, 1e-8);
  }
}

TEST(Averages, CosineExampleConstants) {
  const auto mu = invariant_density_1d([](double y) { return -y; }, constant(std::sqrt(2.0)));
  const Vec x = Vec::Zero(1);
  const double s1 = average_coeff([](const Vec&, const Vec& y) { return std::cos(y[0]); }, mu, x);
  const double s2 = average_coeff([](const Vec&, const Vec& y) { return std::cos(y[0]) * std::cos(y[0]); }, mu, x);
  EXPECT_NEAR(s1 * s1, std::exp(-1.0), 1e-6);
  EXPECT_NEAR(s2, 0.5 * (1.0 + std::exp(-2.0)), 1e-6);
  // The compact Gauss rule reproduces the same averages.
  const auto g = mu.gauss_rule(40);
  EXPECT_NEAR(average_coeff([](const Vec&, const Vec& y) { return std::cos(y[0]); }, g, x), std::exp(-0.5), 1e-10);
  const auto gh = gaussian_measure(1, 30);
  EXPECT_NEAR(gh.expect([](const Vec& y) { return std::cos(y[0]); }), std::exp(-0.5), 1e-12);
}

TEST(Averages, LinearMonotoneAndYIndependent) {
  const auto mu = invariant_density_1d([](double y) { return -y - y * y * y; }, constant(1.0));
  const Vec x = Vec::Constant(1, 0.4);
  auto p = [](const Vec& xx, const Vec& y) { return xx[0] + y[0] * y[0]; };
  auto q = [](const Vec&, const Vec& y) { return std::exp(-y[0]); };
  const double ap = average_coeff(p, mu, x), aq = average_coeff(q, mu, x);
  const double alin = average_coeff([&](const Vec& xx, const Vec& y) { return 2.0 * p(xx, y) - 3.0 * q(xx, y); }, mu, x);
  EXPECT_NEAR(alin, 2.0 * ap - 3.0 * aq, 1e-12);
  EXPECT_GE(aq, 0.0);
  EXPECT_NEAR(average_coeff([](const Vec& xx, const Vec&) { return 3.0 * xx[0]; }, mu, x), 1.2, 1e-9);
  const Mat mat = average_coeff([](const Vec& xx, const Vec&) { return Mat::Identity(2, 2) * xx[0]; }, mu, x);
  EXPECT_NEAR(mat(1, 1), 0.4, 1e-9);
}

TEST(Averages, QuantileBinsCarryEqualMass) {
  const auto mu = invariant_density_1d([](double y) { return -y; }, constant(std::sqrt(2.0)));
  const auto bins = mu.quantile_bins(64);
  ASSERT_EQ(bins.size(), 64u);
  double total = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    EXPECT_NEAR(bins.weights[i], 1.0 / 64.0, 2e-3);
    total += bins.weights[i];
    mean += bins.weights[i] * bins.nodes[i][0];
    if (i > 0) EXPECT_GT(bins.nodes[i][0], bins.nodes[i - 1][0]);
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_NEAR(mean, 0.0, 1e-10);
}

TEST(EffectiveQ, OrnsteinUhlenbeckExample) {
  const double alpha = 2.0, lambda = 0.8;
  SlowFastSpec spec;
  spec.m = 1;
  spec.fast = 1;
  spec.ell = 1;
  spec.b = [lambda](const Vec& y) { return Vec(lambda * y); };
  spec.f = [alpha](const Vec& y) { return Vec(-alpha * y); };
  spec.tau = [alpha](const Vec&) { return Mat::Constant(1, 1, std::sqrt(2.0 * alpha)); };
  const auto mu = invariant_measure(spec);
  const auto psol = solve_poisson(spec, mu);
  const auto q = effective_q(spec, psol, mu.quad, spec.x0);
  EXPECT_NEAR(q.Q(Vec::Constant(1, 0.3))(0, 0), std::sqrt(2.0) * lambda / std::sqrt(alpha), 1e-6);
  EXPECT_NEAR(q.qqt_bar(0, 0), 2.0 * lambda * lambda / alpha, 1e-6);
  EXPECT_TRUE(q.nondegenerate);

  // Adding a nonnegative constant sigma2 cannot lower the minimum eigenvalue.
  spec.sigma2 = [](const Vec&, const Vec&) { return Mat::Constant(1, 1, 0.5); };
  const auto q2 = effective_q(spec, psol, mu.quad, spec.x0);
  EXPECT_GE(q2.min_eigenvalue, 2.0 * lambda * lambda / alpha - 1e-9);
}

TEST(EffectiveQ, AnalyticMultiDimensionalOU) {
  const double alpha = 1.5;
  Mat Lambda(2, 2);
  Lambda << 1.0, 0.5, -0.2, 0.7;
  const auto psol = solve_poisson_ou(alpha, Lambda);
  SlowFastSpec spec;
  spec.m = 2;
  spec.fast = 2;
  spec.ell = 2;
  spec.b = [Lambda](const Vec& y) { return Vec(Lambda * y); };
  spec.tau = [alpha](const Vec&) { return Mat(std::sqrt(2.0 * alpha) * Mat::Identity(2, 2)); };
  const auto q = effective_q(spec, psol, gaussian_measure(2, 4), Vec::Zero(2));
  const Mat ref = 2.0 / alpha * Lambda * Lambda.transpose();
  EXPECT_LT((q.qqt_bar - ref).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((psol.value(Vec::Ones(2)) - Lambda * Vec::Ones(2) / alpha).norm(), 1e-14);
}

TEST(EffectiveQ, BrownianOnlyIsIdentity) {
  SlowFastSpec spec;
  spec.m = 2;
  spec.fast = 0;
  spec.ell = 2;
  spec.y0 = Vec(0);
  spec.sigma2 = [](const Vec&, const Vec&) { return Mat(Mat::Identity(2, 2)); };
  const auto psol = PoissonSolution::zero(2, 0);
  const auto q = effective_q(spec, psol, DiscreteMeasure::point(Vec(0)), Vec::Zero(2));
  EXPECT_TRUE(q.qqt_bar.isApprox(Mat::Identity(2, 2)));
  EXPECT_NEAR(q.min_eigenvalue, 1.0, 1e-14);
}
