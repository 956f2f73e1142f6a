#pragma once

// Product-integration building blocks shared by the fractional operators.
//
// Singular power kernels are integrated exactly (or to round-off) per grid
// cell against polynomial pieces of the interpolant. Cells are addressed by
// their distance d >= 1 (in cells) from the singular point, with local
// coordinate theta in [0,1] increasing towards the singular point:
//
//   L_p(d) = \int_0^1 theta^p (d - theta)^{-gamma} dtheta.
//
// For a cell whose far end is the singular point (d == 1) the moment exists
// only for gamma < 1; numerators that vanish there use
//   V_p = \int_0^1 theta^p (1 - theta)^{1-gamma} dtheta = B(p+1, 2-gamma).

#include <fracldp/errors.hpp>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace fracldp::quad {

/// Gauss-Legendre rule mapped to [0,1].
template <unsigned N>
struct UnitGauss {
  std::array<double, N> x{};
  std::array<double, N> w{};

  UnitGauss() {
    using rule = boost::math::quadrature::gauss<double, N>;
    const auto& a = rule::abscissa();
    const auto& wt = rule::weights();
    std::size_t k = 0;
    // Boost stores the non-negative half of the symmetric rule.
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] == 0.0) {
        x[k] = 0.5;
        w[k++] = 0.5 * wt[i];
      } else {
        x[k] = 0.5 * (1.0 - a[i]);
        w[k++] = 0.5 * wt[i];
        x[k] = 0.5 * (1.0 + a[i]);
        w[k++] = 0.5 * wt[i];
      }
    }
  }

  static const UnitGauss& get() {
    static const UnitGauss rule;
    return rule;
  }

  template <class F>
  double integrate(F&& f, double lo = 0.0, double hi = 1.0) const {
    double s = 0.0;
    const double h = hi - lo;
    for (unsigned q = 0; q < N; ++q) s += w[q] * f(lo + h * x[q]);
    return s * h;
  }
};

using Gauss10 = UnitGauss<10>;
using Gauss20 = UnitGauss<20>;

/// Toeplitz moments of the kernel x^{-gamma} for p = 0, 1, 2.
class PowerMoments {
 public:
  PowerMoments() = default;

  PowerMoments(double gamma, std::size_t max_distance) : gamma_(gamma), L_(max_distance + 1) {
    if (!(gamma < 2.0)) throw InvalidInput("PowerMoments: exponent must be < 2");
    const auto& g = Gauss20::get();
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    L_[0] = {nan, nan, nan};
    if (max_distance >= 1) {
      if (gamma < 1.0) {
        for (int p = 0; p < 3; ++p) L_[1][p] = boost::math::beta(p + 1.0, 1.0 - gamma);
      } else {
        L_[1] = {nan, nan, nan};
      }
    }
    for (std::size_t d = 2; d <= max_distance; ++d) {
      const double dd = static_cast<double>(d);
      std::array<double, 3> m{0.0, 0.0, 0.0};
      for (unsigned q = 0; q < 20; ++q) {
        const double th = g.x[q];
        const double k = g.w[q] * std::pow(dd - th, -gamma);
        m[0] += k;
        m[1] += k * th;
        m[2] += k * th * th;
      }
      L_[d] = m;
    }
    if (gamma < 2.0) {
      for (int p = 0; p < 3; ++p) V_[p] = boost::math::beta(p + 1.0, 2.0 - gamma);
    }
  }

  double gamma() const noexcept { return gamma_; }
  std::size_t max_distance() const noexcept { return L_.empty() ? 0 : L_.size() - 1; }

  /// \int_0^1 theta^p (d - theta)^{-gamma}, theta = 1 at the singular point.
  double L(std::size_t d, int p) const { return L_[d][static_cast<std::size_t>(p)]; }

  /// Same cell seen from a singular point at its near end:
  /// \int_0^1 theta^p (d - 1 + theta)^{-gamma}, theta = 0 at the singular point side.
  double R(std::size_t d, int p) const {
    const auto& m = L_[d];
    switch (p) {
      case 0: return m[0];
      case 1: return m[0] - m[1];
      default: return m[0] - 2.0 * m[1] + m[2];
    }
  }

  /// \int_0^1 theta^p (1-theta)^{1-gamma}: adjacent cell with a vanishing numerator.
  double V(int p) const { return V_[static_cast<std::size_t>(p)]; }

 private:
  double gamma_ = 0.0;
  std::vector<std::array<double, 3>> L_;
  std::array<double, 3> V_{};
};

/// \int_{x0}^{x1} N(x) x^{-gamma} dx for N linear with N(x0)=n0, N(x1)=n1, 0 <= x0 < x1.
/// When x0 == 0 the caller guarantees n0 == 0 if gamma >= 1. With `absolute`
/// the integrand is |N(x)| x^{-gamma}; the segment is split at the root of N.
inline double linear_power_integral(double x0, double x1, double n0, double n1, double gamma,
                                    bool absolute = false) {
  if (x1 <= x0) return 0.0;
  if (absolute && ((n0 < 0.0 && n1 > 0.0) || (n0 > 0.0 && n1 < 0.0))) {
    const double xr = x0 + (x1 - x0) * n0 / (n0 - n1);
    return linear_power_integral(x0, xr, n0, 0.0, gamma, true) +
           linear_power_integral(xr, x1, 0.0, n1, gamma, true);
  }
  if (absolute) {
    n0 = std::abs(n0);
    n1 = std::abs(n1);
  }
  const double h = x1 - x0;
  if (x0 >= h) {
    // Singularity at least one segment length away: Gauss is at round-off.
    const auto& g = Gauss20::get();
    double s = 0.0;
    for (unsigned q = 0; q < 20; ++q) {
      const double th = g.x[q];
      s += g.w[q] * (n0 + (n1 - n0) * th) * std::pow(x0 + h * th, -gamma);
    }
    return s * h;
  }
  // N(x) = A + B x on the segment.
  const double B = (n1 - n0) / h;
  const double A = (x0 == 0.0) ? (gamma >= 1.0 ? 0.0 : n0) : n0 - B * x0;
  auto pint = [](double lo, double hi, double e) {
    // \int_lo^hi x^{e} dx, e > -1 or lo > 0
    if (std::abs(e + 1.0) < 1e-14) return std::log(hi / lo);
    return (std::pow(hi, e + 1.0) - (lo == 0.0 ? 0.0 : std::pow(lo, e + 1.0))) / (e + 1.0);
  };
  double s = B * pint(x0, x1, 1.0 - gamma);
  if (A != 0.0) s += A * pint(x0, x1, -gamma);
  return s;
}

}  // namespace fracldp::quad
