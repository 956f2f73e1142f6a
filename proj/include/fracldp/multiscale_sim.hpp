#pragma once

// Euler time stepping of the slow-fast system and its controlled version,
// plus dt-weighted occupation histograms.
//
// The noise bundle lives on a fine grid that refines the output grid by an
// integer factor. Y advances by Euler-Maruyama on the fine grid; X uses the
// same left-point rule, which for H > 1/2 is a Riemann sum of the Young
// integral against B^H and the Ito sum against W.

#include <fracldp/cameron_martin.hpp>
#include <fracldp/errors.hpp>
#include <fracldp/fbm.hpp>
#include <fracldp/grid_path.hpp>
#include <fracldp/slow_fast.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace fracldp {

struct SimPaths {
  GridPath X;
  GridPath Y;
  std::vector<std::string> warnings;
};

struct Substeps {
  std::size_t value = 1;
  bool capped = false;
};

/// ceil(10 dt / eta), limited to `cap`.
inline Substeps default_substeps(double dt, double eta, std::size_t cap = 1000) {
  if (!(dt > 0.0) || !(eta > 0.0)) throw InvalidInput("default_substeps: dt and eta must be positive");
  const double want = std::ceil(10.0 * dt / eta);
  if (want > static_cast<double>(cap)) return {cap, true};
  return {std::max<std::size_t>(1, static_cast<std::size_t>(want)), false};
}

namespace detail {

/// Frobenius norm of the finite-difference Jacobian of f at y.
inline double jacobian_norm(const FieldY& f, const Vec& y) {
  if (!f || y.size() == 0) return 0.0;
  const Vec f0 = f(y);
  double s = 0.0;
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(y[j]));
    Vec yp = y;
    yp[j] += h;
    s += ((f(yp) - f0) / h).squaredNorm();
  }
  return std::sqrt(s);
}

struct ControlIncrements {
  GridPath du1;  ///< u1 increments per coarse cell, u1 = K_H v1
  GridPath u2;   ///< running integral of u2dot
};

inline ControlIncrements prepare_controls(const SlowFastSpec& spec, const ControlPair& ctrl, std::size_t n,
                                          double dt) {
  if (ctrl.v1.size() != n || ctrl.u2dot.size() != n || ctrl.v1.dim() != spec.k || ctrl.u2dot.dim() != spec.ell)
    throw InvalidInput("simulate_controlled: control grids do not match the output grid");
  if (std::abs(ctrl.v1.dt() - dt) > 1e-12 * dt || std::abs(ctrl.u2dot.dt() - dt) > 1e-12 * dt)
    throw InvalidInput("simulate_controlled: control time step does not match the output grid");
  ctrl.check_bound();
  ControlIncrements out{GridPath(0.0, dt, n, spec.k), GridPath(0.0, dt, n, spec.ell)};
  if (spec.k > 0) {
    const HurstContext ctx(spec.H, n, dt);
    out.du1 = apply_KH(GridPath(0.0, dt, spec.k, ctrl.v1.values()), ctx);
  }
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t c = 0; c < spec.ell; ++c)
      out.u2(i, c) = out.u2(i - 1, c) + 0.5 * dt * (ctrl.u2dot(i - 1, c) + ctrl.u2dot(i, c));
  return out;
}

inline SimPaths run(const SlowFastSpec& spec, const NoiseBundle& noise, std::size_t substeps,
                    const ControlIncrements* ctl) {
  spec.validate();
  if (substeps == 0) throw InvalidInput("simulate: substeps must be positive");
  const std::size_t nf = noise.bh.size();
  if (nf < 2 || (nf - 1) % substeps != 0)
    throw InvalidInput("simulate: noise grid does not refine the output grid by `substeps`");
  if (noise.bh.dim() != spec.k || noise.w.dim() != spec.ell || noise.w.size() != nf)
    throw InvalidInput("simulate: noise dimensions do not match the spec");
  const std::size_t n = (nf - 1) / substeps + 1;
  const double h = noise.bh.dt();
  const double dt = h * static_cast<double>(substeps);

  SimPaths out{GridPath(0.0, dt, n, spec.m), GridPath(0.0, dt, n, spec.fast), {}};
  const double lip = detail::jacobian_norm(spec.f, spec.y0);
  if (spec.eta < 2.0 * h * lip)
    out.warnings.push_back("fast Euler step may be unstable: eta < 2 dt_fast |grad f| at y0");

  const double se = std::sqrt(spec.eps);
  const double b_scale = std::sqrt(spec.eps / spec.eta);
  const double g_scale = 1.0 / std::sqrt(spec.eps * spec.eta);
  const double w_scale = 1.0 / std::sqrt(spec.eta);
  const auto k = static_cast<Eigen::Index>(spec.k), l = static_cast<Eigen::Index>(spec.ell);
  const double inv_sub = 1.0 / static_cast<double>(substeps);

  Vec x = spec.x0, y = spec.y0, xn, yn, dB(k), dW(l), du1(k), du2(l);
  out.X.set(0, x);
  out.Y.set(0, y);
  for (std::size_t i = 0; i + 1 < nf; ++i) {
    for (Eigen::Index c = 0; c < k; ++c) dB[c] = noise.bh(i + 1, c) - noise.bh(i, c);
    for (Eigen::Index c = 0; c < l; ++c) dW[c] = noise.w(i + 1, c) - noise.w(i, c);
    if (ctl) {
      const std::size_t cell = i / substeps;
      for (Eigen::Index c = 0; c < k; ++c) du1[c] = inv_sub * (ctl->du1(cell + 1, c) - ctl->du1(cell, c));
      for (Eigen::Index c = 0; c < l; ++c) du2[c] = inv_sub * (ctl->u2(cell + 1, c) - ctl->u2(cell, c));
    }

    xn = x;
    if (spec.b) xn.noalias() += (b_scale * h) * spec.b(y);
    if (spec.c) xn.noalias() += h * spec.c(x, y);
    if (spec.sigma1) {
      const Mat s1 = spec.sigma1(x, y);
      xn.noalias() += se * (s1 * dB);
      if (ctl) xn.noalias() += s1 * du1;
    }
    if (spec.sigma2) {
      const Mat s2 = spec.sigma2(x, y);
      xn.noalias() += se * (s2 * dW);
      if (ctl) xn.noalias() += s2 * du2;
    }
    if (spec.fast > 0) {
      yn = y;
      if (spec.f) yn.noalias() += (h / spec.eta) * spec.f(y);
      if (spec.g) yn.noalias() += (h * g_scale) * spec.g(x, y);
      if (spec.tau) {
        const Mat t = spec.tau(y);
        yn.noalias() += w_scale * (t * dW);
        if (ctl) yn.noalias() += g_scale * (t * du2);
      }
      y.swap(yn);
    }
    x.swap(xn);
    if (!x.allFinite() || !y.allFinite())
      throw DivergenceError("simulate: state became non-finite", noise.bh.time(i + 1));
    if ((i + 1) % substeps == 0) {
      out.X.set((i + 1) / substeps, x);
      out.Y.set((i + 1) / substeps, y);
    }
  }
  return out;
}

}  // namespace detail

/// Uncontrolled trajectory on the grid coarsened from the noise grid by `substeps`.
inline SimPaths simulate(const SlowFastSpec& spec, const NoiseBundle& noise, std::size_t substeps) {
  return detail::run(spec, noise, substeps, nullptr);
}

/// Controlled trajectory: adds sigma1 du1 with u1 = K_H v1, sigma2 u2dot dt, and
/// tau u2dot dt / sqrt(eps eta) to the fast drift. Controls live on the output grid.
inline SimPaths simulate_controlled(const SlowFastSpec& spec, const NoiseBundle& noise, const ControlPair& ctrl,
                                   std::size_t substeps) {
  if (substeps == 0 || noise.bh.size() < 2 || (noise.bh.size() - 1) % substeps != 0)
    throw InvalidInput("simulate_controlled: noise grid does not refine the output grid by `substeps`");
  const std::size_t n = (noise.bh.size() - 1) / substeps + 1;
  const double dt = noise.bh.dt() * static_cast<double>(substeps);
  const auto inc = detail::prepare_controls(spec, ctrl, n, dt);
  return detail::run(spec, noise, substeps, &inc);
}

/// Per-axis bin edges over (v1 coordinates, u2dot coordinates, Y coordinates).
struct OccupationBins {
  std::vector<std::vector<double>> edges;

  static std::vector<double> uniform(double lo, double hi, std::size_t nbins) {
    if (!(hi > lo) || nbins == 0) throw InvalidInput("OccupationBins: need hi > lo and at least one bin");
    std::vector<double> e(nbins + 1);
    for (std::size_t i = 0; i <= nbins; ++i) e[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(nbins);
    return e;
  }
};

/// dt-weighted joint histogram; samples outside the edges fall into the end bins.
struct OccupationHistogram {
  std::vector<std::vector<double>> edges;
  std::vector<double> mass;  ///< row-major over the axes
  double T = 0.0;

  std::size_t bins(std::size_t axis) const { return edges[axis].size() - 1; }

  double total() const {
    double s = 0.0;
    for (double v : mass) s += v;
    return s;
  }

  /// Mass per bin along one axis.
  std::vector<double> marginal(std::size_t axis) const {
    std::vector<double> out(bins(axis), 0.0);
    std::size_t stride = 1;
    for (std::size_t a = axis + 1; a < edges.size(); ++a) stride *= bins(a);
    for (std::size_t i = 0; i < mass.size(); ++i) out[(i / stride) % bins(axis)] += mass[i];
    return out;
  }
};

inline OccupationHistogram empirical_occupation(const GridPath& Y, const ControlPair& ctrl, const OccupationBins& spec) {
  if (!Y.same_grid(ctrl.v1) || !Y.same_grid(ctrl.u2dot))
    throw InvalidInput("empirical_occupation: paths must share one grid");
  const std::size_t axes = ctrl.v1.dim() + ctrl.u2dot.dim() + Y.dim();
  if (spec.edges.size() != axes) throw InvalidInput("empirical_occupation: one edge list per coordinate is required");
  OccupationHistogram hist{spec.edges, {}, Y.t_end() - Y.t0()};
  std::size_t cells = 1;
  for (const auto& e : spec.edges) {
    if (e.size() < 2 || !std::is_sorted(e.begin(), e.end()))
      throw InvalidInput("empirical_occupation: edges must be sorted with at least one bin");
    cells *= e.size() - 1;
  }
  hist.mass.assign(cells, 0.0);
  auto locate = [](const std::vector<double>& e, double v) {
    const auto it = std::upper_bound(e.begin() + 1, e.end() - 1, v);
    return static_cast<std::size_t>(it - (e.begin() + 1));
  };
  // Left-point weights: sample s carries [t_s, t_{s+1}), so the total is exactly T.
  for (std::size_t s = 0; s + 1 < Y.size(); ++s) {
    std::size_t idx = 0, axis = 0;
    for (const GridPath* p : {&ctrl.v1, &ctrl.u2dot, &Y})
      for (std::size_t c = 0; c < p->dim(); ++c, ++axis) idx = idx * (spec.edges[axis].size() - 1) + locate(spec.edges[axis], (*p)(s, c));
    hist.mass[idx] += Y.dt();
  }
  return hist;
}

}  // namespace fracldp
