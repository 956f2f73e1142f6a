#pragma once

// Cameron-Martin operators of fractional Brownian motion with H in (1/2, 1):
//
//   Kdot_H v(s) = c_H / Gamma(H-1/2) * s^{H-1/2} \int_0^s z^{1/2-H} (s-z)^{H-3/2} v(z) dz,
//   K_H v(t)    = \int_0^t Kdot_H v(s) ds,
//   K_H^{-1} u  = (c_H Gamma(3/2-H))^{-1} [ g(t) + (H-1/2) t^{H-1/2} \int_0^t (g(t)-g(s)) (t-s)^{-H-1/2} ds ],
//                 g(s) = s^{1/2-H} u'(s).

#include <fracldp/errors.hpp>
#include <fracldp/frac_calc.hpp>
#include <fracldp/grid_path.hpp>
#include <fracldp/quadrature.hpp>

#include <boost/math/special_functions/beta.hpp>

#include <cmath>
#include <cstddef>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace fracldp {

/// c_H = sqrt(2H Gamma(3/2-H) Gamma(H+1/2) / Gamma(2-2H)).
inline double c_H(double H) {
  if (!(H > 0.0 && H < 1.0)) throw InvalidInput("c_H: Hurst index must lie in (0,1)");
  return std::sqrt(2.0 * H * std::tgamma(1.5 - H) * std::tgamma(H + 0.5) / std::tgamma(2.0 - 2.0 * H));
}

/// Closed forms used as references and for the exact singular parts.
namespace closed_form {
/// Kdot_H[1](s) = c_H Gamma(3/2-H) s^{H-1/2}.
inline double kdot_one(double H, double s) { return c_H(H) * std::tgamma(1.5 - H) * std::pow(s, H - 0.5); }
/// K_H[1](t) = c_H Gamma(3/2-H) t^{H+1/2} / (H+1/2).
inline double k_one(double H, double t) {
  return c_H(H) * std::tgamma(1.5 - H) * std::pow(t, H + 0.5) / (H + 0.5);
}
/// Kdot_H^{-1}[1](t) = Gamma(3/2-H) / (c_H Gamma(2-2H)) t^{1/2-H}.
inline double kdot_inverse_one_coeff(double H) {
  return std::tgamma(1.5 - H) / (c_H(H) * std::tgamma(2.0 - 2.0 * H));
}
}  // namespace closed_form

/// Weighted piecewise-constant discretization of Kdot_H used by the general
/// rate evaluator: basis functions e_j(z) = z^{1/2-H} 1_{cell j}(z), outputs
/// collocated at cell midpoints m_i = (i + 1/2) dt. Entry (i, j), j <= i, is
/// Kdot_H e_j (m_i).
struct WeightedKdotTable {
  std::size_t cells = 0;
  std::vector<double> P;      ///< packed lower triangle, row i holds j = 0..i
  std::vector<double> omega;  ///< \int_{cell j} z^{1-2H} dz
  double at(std::size_t i, std::size_t j) const { return P[i * (i + 1) / 2 + j]; }
};

/// H plus grid-dependent kernel tables. Immutable after construction and
/// cheap to copy (tables are shared).
class HurstContext {
 public:
  HurstContext(double H, std::size_t n, double dt) : H_(H), n_(n), dt_(dt) {
    if (!(H > 0.5 && H < 1.0))
      throw InvalidInput("HurstContext: H must lie in (1/2, 1); H = 1/2 has dedicated evaluators");
    if (n < 2) throw InvalidInput("HurstContext: need at least two grid points");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("HurstContext: dt must be positive");
    cH_ = c_H(H);
    tables_ = std::make_shared<const Tables>(build(H, n));
    lazy_ = std::make_shared<Lazy>();
  }

  static HurstContext on_interval(double H, double T, std::size_t n) {
    return HurstContext(H, n, T / static_cast<double>(n - 1));
  }

  double H() const noexcept { return H_; }
  double cH() const noexcept { return cH_; }
  std::size_t n() const noexcept { return n_; }
  double dt() const noexcept { return dt_; }

  /// Packed PL Kdot table: \int_0^1 theta^p (j+theta)^{1/2-H} (i-j-theta)^{H-3/2} dtheta.
  double kdot_w(std::size_t i, std::size_t j, int p) const {
    return (p == 0 ? tables_->w0 : tables_->w1)[i * (i - 1) / 2 + j];
  }
  const quad::PowerMoments& origin_moments() const { return tables_->origin; }
  const quad::PowerMoments& marchaud_moments() const { return tables_->marchaud; }
  const quad::PowerMoments& weight_moments() const { return tables_->weight; }

  /// Built on first use; thread-safe.
  const WeightedKdotTable& weighted_table() const {
    std::call_once(lazy_->once, [this] { lazy_->weighted = build_weighted(H_, n_ - 1); });
    return lazy_->weighted;
  }

  void check_path(const GridPath& p, const char* who) const {
    if (p.size() != n_ || std::abs(p.dt() - dt_) > 1e-12 * dt_ || p.t0() != 0.0)
      throw InvalidInput(std::string(who) + ": path grid does not match the HurstContext grid");
  }

 private:
  struct Tables {
    std::vector<double> w0, w1;
    quad::PowerMoments origin;    // gamma = 1/2 - H: s^{H-1/2} from the origin
    quad::PowerMoments marchaud;  // gamma = H + 1/2
    quad::PowerMoments weight;    // gamma = H - 1/2: s^{1/2-H} from the origin
  };
  struct Lazy {
    std::once_flag once;
    WeightedKdotTable weighted;
  };

  static Tables build(double H, std::size_t n) {
    const double a = 1.5 - H, b = H - 0.5;
    Tables t;
    const std::size_t total = n * (n - 1) / 2;
    t.w0.assign(total, 0.0);
    t.w1.assign(total, 0.0);
    const auto& g = quad::Gauss20::get();
    constexpr unsigned Q = 20;
    // Precomputed factors keep pow out of the O(n^2) loop.
    std::vector<double> Lf((n + 1) * Q), Rf((n + 1) * Q);
    for (std::size_t j = 0; j <= n; ++j)
      for (unsigned q = 0; q < Q; ++q) {
        Lf[j * Q + q] = std::pow(static_cast<double>(j) + g.x[q], a - 1.0);
        Rf[j * Q + q] = std::pow(static_cast<double>(j) - g.x[q], b - 1.0);
      }
    using boost::math::beta;
    for (std::size_t i = 1; i < n; ++i) {
      const std::size_t row = i * (i - 1) / 2;
      const double di = static_cast<double>(i);
      if (i == 1) {
        t.w0[row] = beta(a, b);
        t.w1[row] = beta(a + 1.0, b);
        continue;
      }
      const double x = 1.0 / di;
      t.w0[row] = beta(a, b, x);
      t.w1[row] = di * beta(a + 1.0, b, x);
      const double e0 = beta(b, a, x);
      t.w0[row + i - 1] = e0;
      t.w1[row + i - 1] = e0 - di * beta(b + 1.0, a, x);
      for (std::size_t j = 1; j + 1 < i; ++j) {
        const double* lf = &Lf[j * Q];
        const double* rf = &Rf[(i - j) * Q];
        double s0 = 0.0, s1 = 0.0;
        for (unsigned q = 0; q < Q; ++q) {
          const double k = g.w[q] * lf[q] * rf[q];
          s0 += k;
          s1 += k * g.x[q];
        }
        t.w0[row + j] = s0;
        t.w1[row + j] = s1;
      }
    }
    t.origin = quad::PowerMoments(0.5 - H, n);
    t.marchaud = quad::PowerMoments(H + 0.5, n);
    t.weight = quad::PowerMoments(H - 0.5, n);
    return t;
  }

  static WeightedKdotTable build_weighted(double H, std::size_t cells) {
    // Unit-cell kernel x^{1-2H} (M - x)^{H-3/2}, M = i + 1/2; the substitution
    // x = M y gives M^{1/2-H} B(2-2H, H-1/2; y) for the incomplete pieces.
    const double ap = 2.0 - 2.0 * H, b = H - 0.5;
    WeightedKdotTable w;
    w.cells = cells;
    w.P.assign(cells * (cells + 1) / 2, 0.0);
    w.omega.resize(cells);
    for (std::size_t j = 0; j < cells; ++j)
      w.omega[j] = (std::pow(j + 1.0, ap) - std::pow(static_cast<double>(j), ap)) / ap;
    const auto& g = quad::Gauss20::get();
    const double pre = c_H(H) / std::tgamma(b);
    std::vector<double> xf(cells * 20);
    for (std::size_t j = 0; j < cells; ++j)
      for (unsigned q = 0; q < 20; ++q) xf[j * 20 + q] = std::pow(static_cast<double>(j) + g.x[q], ap - 1.0);
    // (M - j - theta) depends on i - j only.
    std::vector<double> df((cells + 1) * 20);
    for (std::size_t d = 0; d <= cells; ++d)
      for (unsigned q = 0; q < 20; ++q) df[d * 20 + q] = std::pow(static_cast<double>(d) + 0.5 - g.x[q], b - 1.0);
    using boost::math::beta;
    using boost::math::betac;
    for (std::size_t i = 0; i < cells; ++i) {
      const double M = static_cast<double>(i) + 0.5;
      const double scale = std::pow(M, 0.5 - H);
      const std::size_t row = i * (i + 1) / 2;
      for (std::size_t j = 0; j <= i; ++j) {
        const double lo = static_cast<double>(j) / M;
        double v;
        // Upper pieces use the complement to avoid cancellation near y = 1.
        if (j == i) {
          v = scale * betac(ap, b, lo);
        } else if (j + 1 == i) {
          v = scale * (betac(ap, b, lo) - betac(ap, b, (j + 1.0) / M));
        } else if (j == 0) {
          v = scale * beta(ap, b, 1.0 / M);
        } else {
          double s = 0.0;
          for (unsigned q = 0; q < 20; ++q) s += g.w[q] * xf[j * 20 + q] * df[(i - j) * 20 + q];
          v = s;
        }
        // Output weight m^{H-1/2} in unit cells.
        w.P[row + j] = pre * std::pow(M, H - 0.5) * v;
      }
    }
    return w;
  }

  double H_ = 0.75;
  double cH_ = 1.0;
  std::size_t n_ = 0;
  double dt_ = 1.0;
  std::shared_ptr<const Tables> tables_;
  std::shared_ptr<Lazy> lazy_;
};

namespace detail {

// h(s_i) with Kdot v(s_i) = s_i^{H-1/2} h(s_i), v piecewise linear.
inline std::vector<double> kdot_reduced(const std::vector<double>& v, const HurstContext& ctx) {
  const std::size_t n = v.size();
  const double H = ctx.H();
  const double pre = ctx.cH() / std::tgamma(H - 0.5);
  std::vector<double> h(n, 0.0);
  h[0] = ctx.cH() * std::tgamma(1.5 - H) * v[0];
  for (std::size_t i = 1; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < i; ++j) {
      const double w0 = ctx.kdot_w(i, j, 0), w1 = ctx.kdot_w(i, j, 1);
      s += v[j] * (w0 - w1) + v[j + 1] * w1;
    }
    h[i] = pre * s;
  }
  return h;
}

template <class Op>
GridPath componentwise(const GridPath& p, Op op) {
  GridPath out(p.t0(), p.dt(), p.size(), p.dim());
  for (std::size_t c = 0; c < p.dim(); ++c) {
    const auto r = op(p.component(c));
    for (std::size_t k = 0; k < p.size(); ++k) out(k, c) = r[k];
  }
  return out;
}

// Kdot^{-1} applied to a derivative given at nodes, via the Marchaud form with
// g(s) = s^{1/2-H} udot(s); g0 is the value used at s = 0.
inline std::vector<double> kdot_inverse_from_g(std::vector<double> g, const HurstContext& ctx) {
  const std::size_t n = g.size();
  const double H = ctx.H(), dt = ctx.dt();
  const auto J = delta_left_unit(g, ctx.marchaud_moments());
  const double norm = 1.0 / (ctx.cH() * std::tgamma(1.5 - H));
  const double jscale = (H - 0.5) * std::pow(dt, 0.5 - H);
  std::vector<double> out(n);
  out[0] = norm * g[0];
  for (std::size_t k = 1; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    out[k] = norm * (g[k] + jscale * std::pow(t, H - 0.5) * J[k]);
    if (!std::isfinite(out[k]))
      throw RegularityError("K_H inverse: singular integral diverged at t = " + std::to_string(t));
  }
  return out;
}

}  // namespace detail

/// Kdot_H v on the grid, v piecewise linear. Kdot_H v(0) = 0.
inline GridPath apply_KH_dot(const GridPath& v, const HurstContext& ctx) {
  ctx.check_path(v, "apply_KH_dot");
  const double H = ctx.H(), dt = ctx.dt();
  return detail::componentwise(v, [&](const std::vector<double>& y) {
    auto h = detail::kdot_reduced(y, ctx);
    h[0] = 0.0;
    for (std::size_t i = 1; i < h.size(); ++i) h[i] *= std::pow(static_cast<double>(i) * dt, H - 0.5);
    return h;
  });
}

/// K_H v: exact product integration of s^{H-1/2} h(s) with h piecewise linear.
inline GridPath apply_KH(const GridPath& v, const HurstContext& ctx) {
  ctx.check_path(v, "apply_KH");
  const double H = ctx.H(), dt = ctx.dt();
  const auto& m = ctx.origin_moments();
  const double scale = std::pow(dt, H + 0.5);
  return detail::componentwise(v, [&](const std::vector<double>& y) {
    const auto h = detail::kdot_reduced(y, ctx);
    std::vector<double> u(h.size(), 0.0);
    for (std::size_t j = 0; j + 1 < h.size(); ++j) {
      const double cell = h[j] * m.R(j + 1, 0) + (h[j + 1] - h[j]) * m.R(j + 1, 1);
      u[j + 1] = u[j] + scale * cell;
    }
    return u;
  });
}

/// Centered differences inside, second-order one-sided at the ends.
inline std::vector<double> grid_derivative(const std::vector<double>& u, double dt) {
  const std::size_t n = u.size();
  std::vector<double> d(n, 0.0);
  if (n == 2) {
    d[0] = d[1] = (u[1] - u[0]) / dt;
    return d;
  }
  d[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dt);
  for (std::size_t k = 1; k + 1 < n; ++k) d[k] = (u[k + 1] - u[k - 1]) / (2.0 * dt);
  d[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * dt);
  return d;
}

/// K_H^{-1} u, u(0) = 0. The weight s^{1/2-H} at s = 0 multiplies the
/// first difference evaluated at the half step.
inline GridPath apply_KH_inverse(const GridPath& u, const HurstContext& ctx) {
  ctx.check_path(u, "apply_KH_inverse");
  const double H = ctx.H(), dt = ctx.dt();
  double scale = 0.0;
  for (double x : u.values()) scale = std::max(scale, std::abs(x));
  for (std::size_t c = 0; c < u.dim(); ++c)
    if (std::abs(u(0, c)) > 1e-12 * scale)
      throw InvalidInput("apply_KH_inverse: u(0) must vanish");
  return detail::componentwise(u, [&](const std::vector<double>& y) {
    const std::size_t n = y.size();
    std::vector<double> g(n);
    if (n == 2) {
      g[0] = std::pow(0.5 * dt, 0.5 - H) * (y[1] - y[0]) / dt;
      g[1] = std::pow(dt, 0.5 - H) * (y[1] - y[0]) / dt;
    } else {
      const auto ud = grid_derivative(y, dt);
      g[0] = std::pow(0.5 * dt, 0.5 - H) * (y[1] - y[0]) / dt;
      for (std::size_t k = 1; k < n; ++k) g[k] = std::pow(static_cast<double>(k) * dt, 0.5 - H) * ud[k];
    }
    return detail::kdot_inverse_from_g(std::move(g), ctx);
  });
}

/// Kdot_H^{-1} psi for a derivative psi given at the nodes. The constant part
/// psi(0) is inverted in closed form; the result is returned split so that
/// callers can integrate the t^{1/2-H} singularity exactly:
///   Kdot^{-1} psi (t) = coeff * t^{1/2-H} + regular(t).
struct KdotInverse {
  std::vector<double> coeff;  ///< per component
  GridPath regular;
  double H = 0.75;

  /// Pointwise value; infinite at t = 0 if coeff != 0.
  GridPath total() const {
    GridPath out = regular;
    for (std::size_t k = 0; k < out.size(); ++k)
      for (std::size_t c = 0; c < out.dim(); ++c) {
        if (coeff[c] == 0.0) continue;
        const double t = out.time(k);
        out(k, c) += t == 0.0 ? std::copysign(INFINITY, coeff[c]) : coeff[c] * std::pow(t, 0.5 - H);
      }
    return out;
  }
};

inline KdotInverse kdot_inverse(const GridPath& psi, const HurstContext& ctx) {
  ctx.check_path(psi, "kdot_inverse");
  const double H = ctx.H(), dt = ctx.dt();
  KdotInverse res{std::vector<double>(psi.dim()), GridPath(0.0, dt, psi.size(), psi.dim()), H};
  const double A = closed_form::kdot_inverse_one_coeff(H);
  for (std::size_t c = 0; c < psi.dim(); ++c) {
    const double p0 = psi(0, c);
    res.coeff[c] = A * p0;
    std::vector<double> g(psi.size());
    for (std::size_t k = 1; k < psi.size(); ++k)
      g[k] = std::pow(static_cast<double>(k) * dt, 0.5 - H) * (psi(k, c) - p0);
    // s^{1/2-H} (psi - psi(0)) has a finite limit at 0 (nonzero when psi
    // itself behaves like s^{H-1/2}); extrapolate it linearly.
    g[0] = psi.size() > 2 ? 2.0 * g[1] - g[2] : g[1];
    const auto r = detail::kdot_inverse_from_g(std::move(g), ctx);
    for (std::size_t k = 0; k < psi.size(); ++k) res.regular(k, c) = r[k];
  }
  return res;
}

/// \int_0^T |Kdot^{-1} psi|^2 dt with the singular part integrated exactly.
inline double kdot_inverse_sq_norm(const KdotInverse& ki, const HurstContext& ctx) {
  const double H = ctx.H(), dt = ctx.dt();
  const std::size_t n = ki.regular.size();
  const double T = static_cast<double>(n - 1) * dt;
  const auto& m = ctx.weight_moments();  // s^{1/2-H} from the origin
  const double wscale = std::pow(dt, 1.5 - H);
  double total = 0.0;
  for (std::size_t c = 0; c < ki.regular.dim(); ++c) {
    const double a = ki.coeff[c];
    double rr = 0.0, cross = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
      const double r0 = ki.regular(j, c), r1 = ki.regular(j + 1, c);
      rr += (r0 * r0 + r0 * r1 + r1 * r1) / 3.0;
      cross += r0 * m.R(j + 1, 0) + (r1 - r0) * m.R(j + 1, 1);
    }
    total += a * a * std::pow(T, 2.0 - 2.0 * H) / (2.0 - 2.0 * H) + 2.0 * a * wscale * cross + dt * rr;
  }
  return total;
}

/// ||K_H^{-1} u||_{L^2} by the trapezoid rule.
inline double hH_norm(const GridPath& u, const HurstContext& ctx) {
  const auto v = apply_KH_inverse(u, ctx);
  double s = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double w = (k == 0 || k + 1 == v.size()) ? 0.5 : 1.0;
    for (std::size_t c = 0; c < v.dim(); ++c) s += w * v(k, c) * v(k, c);
  }
  return std::sqrt(s * v.dt());
}

}  // namespace fracldp
