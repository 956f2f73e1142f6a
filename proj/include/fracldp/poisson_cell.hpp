#pragma once

// Invariant measure of a one-dimensional fast diffusion, the centered Poisson
// (cell) problem L Psi = -b, and mu-averages of coefficients.
//
// The fast generator is L = (tau^2/2) d^2/dy^2 + f d/dy. Its invariant density
// is rho(y) ~ tau(y)^{-2} exp(U(y)) with U' = 2f/tau^2, and the Poisson problem
// has the quadrature solution
//
//   Psi'(y) = -2/(tau^2 rho)(y) * \int_{-inf}^y b rho.
//
// Both are evaluated in log space: the ratio rho(s)/rho(y) is formed from
// differences of U, so nothing underflows in the tails.

#include <fracldp/errors.hpp>
#include <fracldp/quadrature.hpp>
#include <fracldp/slow_fast.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace fracldp {

using ScalarFn = std::function<double(double)>;

/// Finite weighted point set standing in for a probability measure on Y.
struct DiscreteMeasure {
  std::vector<Vec> nodes;
  std::vector<double> weights;

  std::size_t size() const noexcept { return nodes.size(); }
  std::size_t dim() const noexcept { return nodes.empty() ? 0 : static_cast<std::size_t>(nodes.front().size()); }

  /// Sum of w_i fn(node_i); fn may return a scalar or an Eigen object.
  template <class F>
  auto expect(F&& fn) const {
    using R = std::decay_t<decltype(fn(nodes.front()))>;
    if constexpr (std::is_arithmetic_v<R>) {
      double s = 0.0;
      for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * fn(nodes[i]);
      return s;
    } else {
      using P = typename R::PlainObject;
      P s = weights[0] * P(fn(nodes[0]));
      for (std::size_t i = 1; i < nodes.size(); ++i) s += weights[i] * P(fn(nodes[i]));
      return s;
    }
  }

  /// Unit point mass at a dimension-0 node: the measure of an absent fast process.
  static DiscreteMeasure point(const Vec& y) { return DiscreteMeasure{{y}, {1.0}}; }
};

namespace detail {

/// Gauss rule from a symmetric tridiagonal Jacobi matrix (Golub-Welsch).
inline DiscreteMeasure golub_welsch(const std::vector<double>& a, const std::vector<double>& b, double mass) {
  const auto n = static_cast<Eigen::Index>(a.size());
  Mat J = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    J(i, i) = a[static_cast<std::size_t>(i)];
    if (i + 1 < n) J(i, i + 1) = J(i + 1, i) = b[static_cast<std::size_t>(i)];
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(J);
  DiscreteMeasure out;
  for (Eigen::Index i = 0; i < n; ++i) {
    out.nodes.push_back(Vec::Constant(1, es.eigenvalues()[i]));
    const double v = es.eigenvectors()(0, i);
    out.weights.push_back(mass * v * v);
  }
  return out;
}

}  // namespace detail

/// Gauss-Hermite tensor rule for the standard normal law on R^dim.
inline DiscreteMeasure gaussian_measure(std::size_t dim, std::size_t nodes_per_dim = 16) {
  if (dim == 0) return DiscreteMeasure::point(Vec(0));
  if (nodes_per_dim == 0) throw InvalidInput("gaussian_measure: need at least one node");
  std::vector<double> a(nodes_per_dim, 0.0), b(nodes_per_dim - 1);
  for (std::size_t i = 0; i + 1 < nodes_per_dim; ++i) b[i] = std::sqrt(static_cast<double>(i + 1));
  const auto rule = detail::golub_welsch(a, b, 1.0);
  DiscreteMeasure out;
  std::vector<std::size_t> idx(dim, 0);
  while (true) {
    Vec node(static_cast<Eigen::Index>(dim));
    double w = 1.0;
    for (std::size_t d = 0; d < dim; ++d) {
      node[static_cast<Eigen::Index>(d)] = rule.nodes[idx[d]][0];
      w *= rule.weights[idx[d]];
    }
    out.nodes.push_back(std::move(node));
    out.weights.push_back(w);
    std::size_t d = 0;
    while (d < dim && ++idx[d] == nodes_per_dim) idx[d++] = 0;
    if (d == dim) break;
  }
  return out;
}

/// Invariant density of the 1-D fast diffusion on a truncated grid.
struct InvariantMeasure {
  double L = 0.0;
  double h = 0.0;
  std::vector<double> y;        ///< grid on [-L, L]
  std::vector<double> density;  ///< normalized rho
  double log_normalization = 0.0;
  double mean = 0.0, sd = 0.0;
  DiscreteMeasure quad;  ///< grid nodes with trapezoid weights h*rho

  std::size_t size() const noexcept { return y.size(); }

  /// Compact Gauss rule for the grid measure (discretized Stieltjes + Golub-Welsch).
  DiscreteMeasure gauss_rule(std::size_t npts = 48) const {
    const std::size_t N = quad.size();
    npts = std::min(npts, N);
    std::vector<double> w(quad.weights), p_prev(N, 0.0), p(N), a, b;
    double mass = 0.0;
    for (double v : w) mass += v;
    for (std::size_t i = 0; i < N; ++i) p[i] = 1.0 / std::sqrt(mass);
    double beta = 0.0;
    for (std::size_t k = 0; k < npts; ++k) {
      double ak = 0.0;
      for (std::size_t i = 0; i < N; ++i) ak += w[i] * y[i] * p[i] * p[i];
      a.push_back(ak);
      if (k + 1 == npts) break;
      std::vector<double> q(N);
      double nrm = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        q[i] = (y[i] - ak) * p[i] - beta * p_prev[i];
        nrm += w[i] * q[i] * q[i];
      }
      beta = std::sqrt(nrm);
      b.push_back(beta);
      p_prev.swap(p);
      for (std::size_t i = 0; i < N; ++i) p[i] = q[i] / beta;
    }
    return detail::golub_welsch(a, b, mass);
  }

  /// Bins of equal mu-mass; node = conditional mean, weight = bin mass.
  DiscreteMeasure quantile_bins(std::size_t nbins = 64) const {
    if (nbins == 0) throw InvalidInput("quantile_bins: need at least one bin");
    std::vector<double> m(nbins, 0.0), s(nbins, 0.0);
    double total = 0.0;
    for (double w : quad.weights) total += w;
    double cum = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
      const double w = quad.weights[i];
      const double mid = (cum + 0.5 * w) / total;
      cum += w;
      const auto bin = std::min(nbins - 1, static_cast<std::size_t>(mid * static_cast<double>(nbins)));
      m[bin] += w;
      s[bin] += w * y[i];
    }
    DiscreteMeasure out;
    for (std::size_t k = 0; k < nbins; ++k) {
      if (m[k] <= 0.0) continue;
      out.nodes.push_back(Vec::Constant(1, s[k] / m[k]));
      out.weights.push_back(m[k] / total);
    }
    return out;
  }

  /// Linear interpolation of the density; zero outside the grid.
  double density_at(double v) const {
    if (v < y.front() || v > y.back()) return 0.0;
    const double pos = (v - y.front()) / h;
    const auto i = std::min(static_cast<std::size_t>(pos), size() - 2);
    const double th = pos - static_cast<double>(i);
    return (1.0 - th) * density[i] + th * density[i + 1];
  }
};

namespace detail {

struct DensityGrid {
  std::vector<double> y, logrho;
};

inline void require_positive_tau(double t, double y) {
  if (!(t * t > 0.0) || !std::isfinite(t))
    throw DegeneracyError("invariant density: tau vanishes or is not finite at y = " + std::to_string(y));
}

/// log of the unnormalized density, U - 2 log|tau|, on an n-point grid over [-L, L].
inline DensityGrid log_density(const ScalarFn& f, const ScalarFn& tau, double L, std::size_t n) {
  const auto& G = quad::Gauss10::get();
  const double h = 2.0 * L / static_cast<double>(n - 1);
  auto drift_ratio = [&](double s) {
    const double t = tau(s);
    return 2.0 * f(s) / (t * t);
  };
  DensityGrid g{std::vector<double>(n), std::vector<double>(n)};
  double U = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    g.y[i] = -L + static_cast<double>(i) * h;
    if (i > 0) U += G.integrate(drift_ratio, g.y[i - 1], g.y[i]);
    const double t = tau(g.y[i]);
    require_positive_tau(t, g.y[i]);
    g.logrho[i] = U - 2.0 * std::log(std::abs(t));
  }
  return g;
}

inline InvariantMeasure normalize(const DensityGrid& g, double L) {
  InvariantMeasure mu;
  const std::size_t n = g.y.size();
  mu.L = L;
  mu.h = 2.0 * L / static_cast<double>(n - 1);
  mu.y = g.y;
  const double top = *std::max_element(g.logrho.begin(), g.logrho.end());
  if (!std::isfinite(top)) throw TruncationError("invariant density: density is not finite on the grid");
  mu.density.resize(n);
  double Z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mu.density[i] = std::exp(g.logrho[i] - top);
    Z += (i == 0 || i + 1 == n ? 0.5 : 1.0) * mu.density[i];
  }
  Z *= mu.h;
  mu.log_normalization = std::log(Z) + top;
  for (double& r : mu.density) r /= Z;
  mu.quad.nodes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    mu.quad.nodes.push_back(Vec::Constant(1, mu.y[i]));
    mu.quad.weights.push_back((i == 0 || i + 1 == n ? 0.5 : 1.0) * mu.h * mu.density[i]);
  }
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    m1 += mu.quad.weights[i] * mu.y[i];
    m2 += mu.quad.weights[i] * mu.y[i] * mu.y[i];
  }
  mu.mean = m1;
  mu.sd = std::sqrt(std::max(0.0, m2 - m1 * m1));
  return mu;
}

inline bool tails_ok(const InvariantMeasure& mu, double rel = 1e-8) {
  const double peak = *std::max_element(mu.density.begin(), mu.density.end());
  return mu.density.front() <= rel * peak && mu.density.back() <= rel * peak;
}

}  // namespace detail

/// Invariant density rho ~ tau^{-2} exp(\int 2f/tau^2) on [-L, L].
/// Without L, the window is sized to |mean| + 8 standard deviations.
inline InvariantMeasure invariant_density_1d(const ScalarFn& f, const ScalarFn& tau,
                                             std::optional<double> L = std::nullopt, std::size_t n = 4001) {
  if (!f || !tau) throw InvalidInput("invariant_density_1d: f and tau are required");
  if (n < 3) throw InvalidInput("invariant_density_1d: need at least three grid points");
  if (n % 2 == 0) ++n;  // keep y = 0 on the grid
  if (L) {
    if (!(*L > 0.0)) throw InvalidInput("invariant_density_1d: L must be positive");
    auto mu = detail::normalize(detail::log_density(f, tau, *L, n), *L);
    if (!detail::tails_ok(mu))
      throw TruncationError("invariant density: mass at +-L exceeds 1e-8 of the peak; enlarge L");
    return mu;
  }
  double Lt = 10.0;
  for (int it = 0; it < 40; ++it) {
    auto mu = detail::normalize(detail::log_density(f, tau, Lt, n), Lt);
    if (!detail::tails_ok(mu)) {
      Lt *= 2.0;
      continue;
    }
    const double next = std::abs(mu.mean) + 8.0 * mu.sd;
    if (std::abs(next - Lt) <= 0.05 * Lt) return mu;
    // Shrinking may cut the tails of heavier-than-Gaussian laws; keep the last valid window then.
    auto trial = detail::normalize(detail::log_density(f, tau, next, n), next);
    if (!detail::tails_ok(trial)) return mu;
    Lt = next;
  }
  throw TruncationError("invariant density: could not find a truncation window with negligible tails");
}

/// Solution of the centered Poisson problem; Psi takes values in X (m components).
struct PoissonSolution {
  std::vector<double> y;  ///< grid (numeric case)
  Mat psi;                ///< n x m
  Mat grad;               ///< n x m, dPsi/dy from the quadrature formula
  bool analytic = false;
  Mat grad_const;         ///< analytic case: m x fast
  Vec b_average;          ///< mu-average of b before centering
  std::size_t m = 0, fast = 0;

  /// dPsi(y) as an m x fast matrix.
  Mat gradient(const Vec& v) const {
    if (analytic) return grad_const;
    if (y.empty()) return Mat::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(fast));
    return interp(grad, v[0]).transpose();
  }

  Vec value(const Vec& v) const {
    if (analytic) return grad_const * v;
    if (y.empty()) return Vec::Zero(static_cast<Eigen::Index>(m));
    return interp(psi, v[0]).transpose();
  }

  static PoissonSolution zero(std::size_t m, std::size_t fast) {
    PoissonSolution s;
    s.analytic = true;
    s.m = m;
    s.fast = fast;
    s.grad_const = Mat::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(fast));
    s.b_average = Vec::Zero(static_cast<Eigen::Index>(m));
    return s;
  }

 private:
  Eigen::RowVectorXd interp(const Mat& tab, double v) const {
    const double h = y[1] - y[0];
    const double pos = std::clamp((v - y.front()) / h, 0.0, static_cast<double>(y.size() - 1));
    const auto i = std::min(static_cast<std::size_t>(pos), y.size() - 2);
    const double th = pos - static_cast<double>(i);
    const auto r = static_cast<Eigen::Index>(i);
    return (1.0 - th) * tab.row(r) + th * tab.row(r + 1);
  }
};

namespace detail {

/// Per-cell weights exp(logrho(s_q) - logrho(endpoint)) on the half-step grid.
struct PoissonKernel {
  std::vector<double> z, logrho, tau2;
  std::vector<std::array<double, 10>> nodes, w_right, w_left;  // ratios to rho(z_{i+1}) and rho(z_i)
  std::size_t mode = 0;

  PoissonKernel(const ScalarFn& f, const ScalarFn& tau, double L, std::size_t n) {
    const auto& G = quad::Gauss10::get();
    const std::size_t N = 2 * (n - 1) + 1;
    const double hz = 2.0 * L / static_cast<double>(N - 1);
    auto ratio = [&](double s) {
      const double t = tau(s);
      return 2.0 * f(s) / (t * t);
    };
    z.resize(N);
    logrho.resize(N);
    tau2.resize(N);
    std::vector<double> U(N, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
      z[i] = -L + static_cast<double>(i) * hz;
      if (i > 0) U[i] = U[i - 1] + G.integrate(ratio, z[i - 1], z[i]);
      const double t = tau(z[i]);
      require_positive_tau(t, z[i]);
      tau2[i] = t * t;
      logrho[i] = U[i] - std::log(tau2[i]);
    }
    mode = static_cast<std::size_t>(std::max_element(logrho.begin(), logrho.end()) - logrho.begin());
    nodes.resize(N - 1);
    w_right.resize(N - 1);
    w_left.resize(N - 1);
    for (std::size_t i = 0; i + 1 < N; ++i) {
      for (unsigned q = 0; q < 10; ++q) {
        const double s = z[i] + hz * G.x[q];
        const double t = tau(s);
        const double lr = U[i] + G.integrate(ratio, z[i], s) - std::log(t * t);
        nodes[i][q] = s;
        w_right[i][q] = hz * G.w[q] * std::exp(lr - logrho[i + 1]);
        w_left[i][q] = hz * G.w[q] * std::exp(lr - logrho[i]);
      }
    }
  }

  /// Psi' on the half-step grid for a centered scalar b.
  std::vector<double> derivative(const ScalarFn& b, double bbar) const {
    const std::size_t N = z.size();
    std::vector<double> bq(10);
    std::vector<double> G(N, 0.0);
    // Left sweep up to the mode: G_i = \int_{-L}^{z_i} b rho / rho(z_i).
    for (std::size_t i = 0; i < mode; ++i) {
      double acc = 0.0;
      for (unsigned q = 0; q < 10; ++q) acc += w_right[i][q] * (b(nodes[i][q]) - bbar);
      G[i + 1] = G[i] * std::exp(logrho[i] - logrho[i + 1]) + acc;
    }
    // Right sweep: the centered integral from -inf equals minus the one to +inf.
    double R = 0.0;
    for (std::size_t i = N - 1; i > mode; --i) {
      double acc = 0.0;
      for (unsigned q = 0; q < 10; ++q) acc += w_left[i - 1][q] * (b(nodes[i - 1][q]) - bbar);
      const double Rprev = R * std::exp(logrho[i] - logrho[i - 1]) + acc;
      if (i - 1 > mode) G[i - 1] = -Rprev;
      R = Rprev;
    }
    std::vector<double> d(N);
    for (std::size_t i = 0; i < N; ++i) d[i] = -2.0 * G[i] / tau2[i];
    return d;
  }
};

}  // namespace detail

/// Centered solution of (tau^2/2) Psi'' + f Psi' = -b for each component of b.
/// Throws CenteringError when some |\int b_c dmu| >= tol.
inline PoissonSolution solve_poisson_1d(const std::vector<ScalarFn>& b, const ScalarFn& f, const ScalarFn& tau,
                                        const InvariantMeasure& mu, double tol = 1e-4) {
  if (mu.size() < 3) throw InvalidInput("solve_poisson_1d: invariant measure grid too small");
  PoissonSolution sol;
  sol.m = b.size();
  sol.fast = 1;
  sol.y = mu.y;
  const std::size_t n = mu.size();
  const auto mi = static_cast<Eigen::Index>(sol.m);
  sol.psi = Mat::Zero(static_cast<Eigen::Index>(n), mi);
  sol.grad = Mat::Zero(static_cast<Eigen::Index>(n), mi);
  sol.b_average = Vec::Zero(mi);
  for (std::size_t c = 0; c < b.size(); ++c) {
    const double bbar = mu.quad.expect([&](const Vec& v) { return b[c](v[0]); });
    sol.b_average[static_cast<Eigen::Index>(c)] = bbar;
    if (!(std::abs(bbar) < tol)) throw CenteringError("solve_poisson_1d: b is not centered under mu", bbar);
  }
  if (b.empty()) return sol;
  const detail::PoissonKernel K(f, tau, mu.L, n);
  for (std::size_t c = 0; c < b.size(); ++c) {
    const auto ci = static_cast<Eigen::Index>(c);
    const auto d = K.derivative(b[c], sol.b_average[ci]);
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j > 0) acc += mu.h / 6.0 * (d[2 * j - 2] + 4.0 * d[2 * j - 1] + d[2 * j]);
      sol.psi(static_cast<Eigen::Index>(j), ci) = acc;
      sol.grad(static_cast<Eigen::Index>(j), ci) = d[2 * j];
    }
    double center = 0.0;
    for (std::size_t j = 0; j < n; ++j) center += mu.quad.weights[j] * sol.psi(static_cast<Eigen::Index>(j), ci);
    sol.psi.col(ci).array() -= center;
  }
  return sol;
}

inline PoissonSolution solve_poisson_1d(const ScalarFn& b, const ScalarFn& f, const ScalarFn& tau,
                                        const InvariantMeasure& mu, double tol = 1e-4) {
  return solve_poisson_1d(std::vector<ScalarFn>{b}, f, tau, mu, tol);
}

/// Analytic solution for f = -alpha y, tau = sqrt(2 alpha) Id, b(y) = Lambda y: Psi = Lambda y / alpha.
inline PoissonSolution solve_poisson_ou(double alpha, const Mat& Lambda) {
  if (!(alpha > 0.0)) throw InvalidInput("solve_poisson_ou: alpha must be positive");
  PoissonSolution s;
  s.analytic = true;
  s.m = static_cast<std::size_t>(Lambda.rows());
  s.fast = static_cast<std::size_t>(Lambda.cols());
  s.grad_const = Lambda / alpha;
  s.b_average = Vec::Zero(Lambda.rows());
  return s;
}

/// Sup of |(tau^2/2) Psi'' + f Psi' + b| over |y| <= fraction * L, Psi'' by central differences.
inline double generator_residual(const PoissonSolution& sol, std::size_t component, const ScalarFn& b,
                                 const ScalarFn& f, const ScalarFn& tau, double fraction = 0.5) {
  if (sol.analytic || sol.y.size() < 3) throw InvalidInput("generator_residual: needs a grid solution");
  const auto c = static_cast<Eigen::Index>(component);
  const double h = sol.y[1] - sol.y[0];
  const double lim = fraction * sol.y.back();
  double worst = 0.0;
  for (std::size_t j = 1; j + 1 < sol.y.size(); ++j) {
    const double y = sol.y[j];
    if (std::abs(y) > lim) continue;
    const auto r = static_cast<Eigen::Index>(j);
    const double d2 = (sol.psi(r + 1, c) - 2.0 * sol.psi(r, c) + sol.psi(r - 1, c)) / (h * h);
    const double t = tau(y);
    worst = std::max(worst, std::abs(0.5 * t * t * d2 + f(y) * sol.grad(r, c) + b(y)));
  }
  return worst;
}

/// mu-average of phi(x, .) at the point x.
template <class F>
auto average_coeff(F&& phi, const DiscreteMeasure& mu, const Vec& x) {
  return mu.expect([&](const Vec& y) { return phi(x, y); });
}

template <class F>
auto average_coeff(F&& phi, const InvariantMeasure& mu, const Vec& x) {
  return average_coeff(std::forward<F>(phi), mu.quad, x);
}

/// Invariant measure of the spec's fast process (1-D numeric, or a point mass when absent).
inline InvariantMeasure invariant_measure(const SlowFastSpec& spec, std::optional<double> L = std::nullopt,
                                          std::size_t n = 4001) {
  if (spec.fast != 1) throw InvalidInput("invariant_measure: numeric invariant measures are one-dimensional");
  if (!spec.f || !spec.tau) throw InvalidInput("invariant_measure: f and tau are required");
  const ScalarFn f = [&spec](double y) { return spec.f(Vec::Constant(1, y))[0]; };
  const ScalarFn tau = [&spec](double y) {
    const Mat t = spec.tau(Vec::Constant(1, y));
    return std::sqrt((t * t.transpose())(0, 0));
  };
  return invariant_density_1d(f, tau, L, n);
}

/// Poisson solution for the spec's b on the given 1-D invariant measure.
inline PoissonSolution solve_poisson(const SlowFastSpec& spec, const InvariantMeasure& mu, double tol = 1e-4) {
  if (!spec.b) return PoissonSolution::zero(spec.m, spec.fast);
  if (spec.fast != 1) throw InvalidInput("solve_poisson: numeric solves are one-dimensional; use solve_poisson_ou");
  std::vector<ScalarFn> comps;
  for (std::size_t c = 0; c < spec.m; ++c)
    comps.push_back([&spec, c](double y) { return spec.b(Vec::Constant(1, y))[static_cast<Eigen::Index>(c)]; });
  const ScalarFn f = [&spec](double y) { return spec.f(Vec::Constant(1, y))[0]; };
  const ScalarFn tau = [&spec](double y) {
    const Mat t = spec.tau(Vec::Constant(1, y));
    return std::sqrt((t * t.transpose())(0, 0));
  };
  return solve_poisson_1d(comps, f, tau, mu, tol);
}

struct EffectiveQ {
  std::function<Mat(const Vec& y)> Q;  ///< y -> dPsi(y) tau(y) + sigma2(x, y), m x ell
  Mat qqt_bar;
  double min_eigenvalue = 0.0;
  bool nondegenerate = false;
};

/// Q(x, .) = dPsi tau + sigma2(x, .) and its mu-averaged Gram matrix.
inline EffectiveQ effective_q(const SlowFastSpec& spec, const PoissonSolution& psol, const DiscreteMeasure& mu,
                              const Vec& x, double tol = 1e-8) {
  const auto m = static_cast<Eigen::Index>(spec.m), l = static_cast<Eigen::Index>(spec.ell);
  EffectiveQ out;
  out.Q = [&spec, &psol, x, m, l](const Vec& y) {
    Mat q = Mat::Zero(m, l);
    if (spec.b && spec.tau) q += psol.gradient(y) * spec.tau(y);
    if (spec.sigma2) q += spec.sigma2(x, y);
    return q;
  };
  out.qqt_bar = Mat::Zero(m, m);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const Mat q = out.Q(mu.nodes[i]);
    out.qqt_bar += mu.weights[i] * q * q.transpose();
  }
  out.min_eigenvalue = m == 0 ? 0.0 : Eigen::SelfAdjointEigenSolver<Mat>(out.qqt_bar).eigenvalues().minCoeff();
  out.nondegenerate = out.min_eigenvalue > tol;
  return out;
}

}  // namespace fracldp
