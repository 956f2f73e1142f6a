#include <fracldp/cameron_martin.hpp>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace fracldp;

namespace {

GridPath sample(const HurstContext& ctx, const std::function<double(double)>& fn) {
  return GridPath::from_function(0.0, ctx.dt(), ctx.n(), fn);
}

// Kdot_H[t^a](s) = c_H Gamma(a + 3/2 - H) / Gamma(a + 1) s^{a + H - 1/2}.
double kdot_monomial(double H, double a, double s) {
  return c_H(H) * boost::math::tgamma(a + 1.5 - H) / boost::math::tgamma(a + 1.0) * std::pow(s, a + H - 0.5);
}

}  // namespace

TEST(CH, KnownValues) {
  EXPECT_NEAR(c_H(0.5), 1.0, 1e-15);
  const double ref = std::sqrt(1.5 * boost::math::tgamma(0.75) * boost::math::tgamma(1.25) / boost::math::tgamma(0.5));
  EXPECT_NEAR(c_H(0.75), ref, 1e-14);
  EXPECT_NEAR(c_H(0.75), 0.9695, 5e-4);
  EXPECT_NEAR(c_H(0.51) * std::tgamma(1.5 - 0.51), 1.0, 0.05);
  EXPECT_THROW(c_H(1.0), InvalidInput);
  EXPECT_THROW(c_H(0.0), InvalidInput);
}

TEST(CH, SquareMatchesDefinitionAcrossRange) {
  for (double H = 0.05; H < 1.0; H += 0.05) {
    const double c = c_H(H);
    const double sq = 2.0 * H * boost::math::tgamma(1.5 - H) * boost::math::tgamma(H + 0.5) / boost::math::tgamma(2.0 - 2.0 * H);
    EXPECT_GT(c, 0.0);
    EXPECT_NEAR(c * c, sq, 1e-13 * sq);
  }
}

TEST(HurstContext, RejectsOutOfRangeH) {
  EXPECT_THROW(HurstContext(0.5, 16, 0.1), InvalidInput);
  EXPECT_THROW(HurstContext(1.0, 16, 0.1), InvalidInput);
}

class PerHurst : public ::testing::TestWithParam<double> {};

TEST_P(PerHurst, KdotOfOneMatchesClosedForm) {
  const double H = GetParam();
  const auto ctx = HurstContext::on_interval(H, 1.0, 2048);
  const auto out = apply_KH_dot(sample(ctx, [](double) { return 1.0; }), ctx);
  EXPECT_EQ(out(0), 0.0);
  for (std::size_t k = 10; k < ctx.n(); ++k) {
    const double ref = closed_form::kdot_one(H, out.time(k));
    EXPECT_NEAR(out(k), ref, 1e-4 * ref) << "k = " << k;
  }
}

TEST_P(PerHurst, KdotOfMonomialsMatchesClosedForm) {
  const double H = GetParam();
  const auto ctx = HurstContext::on_interval(H, 2.0, 513);
  for (double a : {1.0, 2.0}) {
    const auto out = apply_KH_dot(sample(ctx, [a](double t) { return std::pow(t, a); }), ctx);
    for (std::size_t k = 16; k < ctx.n(); k += 16) {
      const double ref = kdot_monomial(H, a, out.time(k));
      EXPECT_NEAR(out(k), ref, 1e-4 * std::abs(ref) + ctx.dt() * ctx.dt());
    }
  }
}

TEST_P(PerHurst, KOfOneMatchesClosedForm) {
  const double H = GetParam();
  const auto ctx = HurstContext::on_interval(H, 1.0, 1025);
  const auto u = apply_KH(sample(ctx, [](double) { return 1.0; }), ctx);
  EXPECT_EQ(u(0), 0.0);
  for (std::size_t k = 1; k < ctx.n(); ++k) {
    const double ref = closed_form::k_one(H, u.time(k));
    EXPECT_NEAR(u(k), ref, 1e-12 + 1e-10 * ref);
  }
}

TEST_P(PerHurst, InverseOfClosedFormIsOne) {
  const double H = GetParam();
  const auto ctx = HurstContext::on_interval(H, 1.0, 2048);
  const auto v = apply_KH_inverse(sample(ctx, [H](double t) { return closed_form::k_one(H, t); }), ctx);
  for (std::size_t k = 0; k < ctx.n(); ++k)
    if (v.time(k) >= 0.05) EXPECT_NEAR(v(k), 1.0, 1e-3);
}

TEST_P(PerHurst, RoundTripOnRandomSmoothFunctions) {
  const double H = GetParam();
  const auto ctx = HurstContext::on_interval(H, 1.0, 2048);
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const double a0 = U(rng), a1 = U(rng), a2 = U(rng), w = 1.0 + 3.0 * std::abs(U(rng)), ph = U(rng);
    auto fn = [=](double t) { return 1.5 + a0 + a1 * t + a2 * std::sin(w * t + ph); };
    const auto v = sample(ctx, fn);
    const auto back = apply_KH_inverse(apply_KH(v, ctx), ctx);
    for (std::size_t k = 0; k < ctx.n(); ++k)
      if (v.time(k) >= 0.05) EXPECT_NEAR(back(k), v(k), 1e-3 * std::abs(v(k))) << "t = " << v.time(k);
  }
}

TEST_P(PerHurst, NormIsometry) {
  const double H = GetParam();
  const auto ctx = HurstContext::on_interval(H, 1.0, 1024);
  EXPECT_NEAR(hH_norm(apply_KH(sample(ctx, [](double) { return 1.0; }), ctx), ctx), 1.0, 1e-3);
  auto fn = [](double t) { return std::cos(3.0 * t) + 2.0 * t; };
  boost::math::quadrature::tanh_sinh<double> ts;
  const double ref = std::sqrt(ts.integrate([&](double t) { return fn(t) * fn(t); }, 0.0, 1.0));
  EXPECT_NEAR(hH_norm(apply_KH(sample(ctx, fn), ctx), ctx), ref, 1e-3 * ref);
}

TEST_P(PerHurst, DerivativeOfKMatchesKdot) {
  const double H = GetParam();
  auto fn = [](double t) { return std::exp(-t) + t * t; };
  double prev = 1e300;
  for (std::size_t n : {129, 257, 513}) {
    const auto ctx = HurstContext::on_interval(H, 1.0, n);
    const auto v = sample(ctx, fn);
    const auto u = apply_KH(v, ctx);
    const auto kd = apply_KH_dot(v, ctx);
    double err = 0.0;
    for (std::size_t k = n / 4; k + 1 < n; ++k)
      err = std::max(err, std::abs((u(k + 1) - u(k - 1)) / (2.0 * ctx.dt()) - kd(k)));
    EXPECT_LT(err, prev);
    prev = err;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST_P(PerHurst, KdotPreservesPositivity) {
  const double H = GetParam();
  const auto ctx = HurstContext::on_interval(H, 1.0, 257);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  GridPath v(0.0, ctx.dt(), ctx.n(), 1);
  for (std::size_t k = 0; k < ctx.n(); ++k) v(k) = U(rng) < 0.3 ? 0.0 : U(rng);
  const auto out = apply_KH_dot(v, ctx);
  for (std::size_t k = 0; k < ctx.n(); ++k) EXPECT_GE(out(k), 0.0);
}

TEST_P(PerHurst, KdotInverseSplitsSingularPart) {
  const double H = GetParam();
  const auto ctx = HurstContext::on_interval(H, 1.0, 1025);
  // psi = Kdot[v] for smooth v: ||Kdot^{-1} psi||^2 = ||v||^2.
  auto vfn = [](double t) { return 1.0 + t * t; };
  std::vector<double> psi(ctx.n());
  for (std::size_t k = 0; k < ctx.n(); ++k) {
    const double t = k * ctx.dt();
    psi[k] = t == 0.0 ? 0.0 : kdot_monomial(H, 0.0, t) + kdot_monomial(H, 2.0, t);
  }
  const auto ki = kdot_inverse(GridPath::scalar(0.0, ctx.dt(), psi), ctx);
  EXPECT_EQ(ki.coeff[0], 0.0);
  const double ref = 1.0 + 2.0 / 3.0 + 1.0 / 5.0;
  EXPECT_NEAR(kdot_inverse_sq_norm(ki, ctx), ref, 2e-3 * ref);
  for (std::size_t k = 0; k < ctx.n(); ++k)
    if (k * ctx.dt() >= 0.05) EXPECT_NEAR(ki.regular(k), vfn(k * ctx.dt()), 2e-3);

  // psi = 1: purely singular, exact.
  const auto one = kdot_inverse(GridPath::scalar(0.0, ctx.dt(), std::vector<double>(ctx.n(), 1.0)), ctx);
  const double A = closed_form::kdot_inverse_one_coeff(H);
  EXPECT_DOUBLE_EQ(one.coeff[0], A);
  EXPECT_NEAR(kdot_inverse_sq_norm(one, ctx), A * A / (2.0 - 2.0 * H), 1e-12);
}

TEST_P(PerHurst, WeightedTableReproducesPowerWeight) {
  const double H = GetParam();
  const auto ctx = HurstContext::on_interval(H, 1.0, 257);
  const auto& w = ctx.weighted_table();
  // Summing all basis functions gives z^{1/2-H}, whose image is constant.
  const double ref = c_H(H) * boost::math::tgamma(2.0 - 2.0 * H) / boost::math::tgamma(1.5 - H);
  for (std::size_t i = 0; i < w.cells; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j <= i; ++j) s += w.at(i, j);
    EXPECT_NEAR(s, ref, 1e-10 * ref) << "row " << i;
  }
}

INSTANTIATE_TEST_SUITE_P(Hurst, PerHurst, ::testing::Values(0.6, 0.75, 0.9));

TEST(CameronMartin, ZeroMapsToZero) {
  const auto ctx = HurstContext::on_interval(0.7, 1.0, 65);
  const GridPath z(0.0, ctx.dt(), ctx.n(), 2);
  for (const auto& out : {apply_KH(z, ctx), apply_KH_dot(z, ctx), apply_KH_inverse(z, ctx)})
    for (double x : out.values()) EXPECT_EQ(x, 0.0);
  EXPECT_EQ(hH_norm(z, ctx), 0.0);
}

TEST(CameronMartin, InverseRequiresVanishingStart) {
  const auto ctx = HurstContext::on_interval(0.7, 1.0, 33);
  const auto u = GridPath::from_function(0.0, ctx.dt(), ctx.n(), [](double t) { return 1.0 + t; });
  EXPECT_THROW(apply_KH_inverse(u, ctx), InvalidInput);
}

TEST(CameronMartin, GridMismatchRejected) {
  const auto ctx = HurstContext::on_interval(0.7, 1.0, 33);
  const GridPath other(0.0, 0.5, 33, 1);
  EXPECT_THROW(apply_KH(other, ctx), InvalidInput);
}

TEST(CameronMartin, KdotApproachesIdentityAsHDecreases) {
  auto fn = [](double t) { return 1.0 + t * t; };
  double prev = 1e300;
  for (double H : {0.7, 0.6, 0.55, 0.51}) {
    const auto ctx = HurstContext::on_interval(H, 1.0, 513);
    const auto out = apply_KH_dot(GridPath::from_function(0.0, ctx.dt(), ctx.n(), fn), ctx);
    double err = 0.0;
    for (std::size_t k = 50; k < ctx.n(); ++k) err = std::max(err, std::abs(out(k) - fn(out.time(k))));
    EXPECT_LT(err, prev) << "H = " << H;
    prev = err;
  }
  EXPECT_LT(prev, 0.05);
}
