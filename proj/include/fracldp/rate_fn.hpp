#pragma once

// Rate functionals of the averaged dynamics
//
//   phi' = cbar(phi) + gradPsiG_bar(phi) + sigma1_bar(phi) Kdot_H u1 + \int Q(phi, y) u2(y) dmu(y).
//
// explicit    1/2 ||Kdot_H^{-1} psi||^2 with psi = sigma1_bar^{-1}(phi' - cbar)
// general     1/2 <r, G^{-1} r> for the Gram operator G of the control map
// fw_half     1/2 \int <r, Q_half^{-1} r>, Q_half = avg(sigma1 sigma1^T) + avg(Q Q^T)
// tilde_half  1/2 \int <r, (sigma1_bar sigma1_bar^T)^{-1} r>
//
// with r = phi' - cbar - gradPsiG_bar. phi' uses the shared grid_derivative
// convention (centered inside, second-order one-sided at the ends).

#include <fracldp/cameron_martin.hpp>
#include <fracldp/errors.hpp>
#include <fracldp/grid_path.hpp>
#include <fracldp/poisson_cell.hpp>
#include <fracldp/slow_fast.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace fracldp {

/// Averaged coefficients along which rates are evaluated.
struct LimitDrift {
  std::size_t m = 1, k = 1, ell = 0;
  std::function<Vec(const Vec&)> cbar;
  std::function<Vec(const Vec&)> gradPsiG_bar;
  std::function<Mat(const Vec&)> sigma1_bar;     ///< m x k
  std::function<Mat(const Vec&)> sigma1_sq_bar;  ///< m x m, average of sigma1 sigma1^T
  std::function<Mat(const Vec&)> qqt_bar;        ///< m x m
  std::function<Mat(const Vec&, const Vec&)> Q;  ///< m x ell, feedback form of the u2 action
  std::optional<Vec> x0;

  /// Q_half(x) = avg(sigma1 sigma1^T)(x) + avg(Q Q^T)(x).
  Mat q_half(const Vec& x) const {
    Mat q = Mat::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    if (sigma1_sq_bar) q += sigma1_sq_bar(x);
    if (qqt_bar) q += qqt_bar(x);
    return q;
  }
};

/// Averages the spec's coefficients against `mu` (typically a compact Gauss rule).
inline LimitDrift make_limit_drift(const SlowFastSpec& spec, const PoissonSolution& psol, const DiscreteMeasure& mu) {
  struct Shared {
    SlowFastSpec spec;
    PoissonSolution psol;
    DiscreteMeasure mu;
  };
  auto sh = std::make_shared<const Shared>(Shared{spec, psol, mu});
  const auto m = static_cast<Eigen::Index>(spec.m), k = static_cast<Eigen::Index>(spec.k),
             l = static_cast<Eigen::Index>(spec.ell);
  LimitDrift d;
  d.m = spec.m;
  d.k = spec.k;
  d.ell = spec.ell;
  d.x0 = spec.x0;
  d.cbar = [sh, m](const Vec& x) -> Vec {
    if (!sh->spec.c) return Vec::Zero(m);
    return sh->mu.expect([&](const Vec& y) { return sh->spec.c(x, y); });
  };
  d.gradPsiG_bar = [sh, m](const Vec& x) -> Vec {
    if (!sh->spec.g || !sh->spec.b) return Vec::Zero(m);
    return sh->mu.expect([&](const Vec& y) -> Vec { return sh->psol.gradient(y) * sh->spec.g(x, y); });
  };
  d.sigma1_bar = [sh, m, k](const Vec& x) -> Mat {
    if (!sh->spec.sigma1) return Mat::Zero(m, k);
    return sh->mu.expect([&](const Vec& y) { return sh->spec.sigma1(x, y); });
  };
  d.sigma1_sq_bar = [sh, m](const Vec& x) -> Mat {
    if (!sh->spec.sigma1) return Mat::Zero(m, m);
    return sh->mu.expect([&](const Vec& y) -> Mat {
      const Mat s = sh->spec.sigma1(x, y);
      return s * s.transpose();
    });
  };
  d.Q = [sh, m, l](const Vec& x, const Vec& y) -> Mat {
    Mat q = Mat::Zero(m, l);
    if (sh->spec.b && sh->spec.tau) q += sh->psol.gradient(y) * sh->spec.tau(y);
    if (sh->spec.sigma2) q += sh->spec.sigma2(x, y);
    return q;
  };
  d.qqt_bar = [sh, m, q = d.Q](const Vec& x) -> Mat {
    if (!(sh->spec.b && sh->spec.tau) && !sh->spec.sigma2) return Mat::Zero(m, m);
    return sh->mu.expect([&](const Vec& y) -> Mat {
      const Mat v = q(x, y);
      return v * v.transpose();
    });
  };
  return d;
}

enum class RateMethod { explicit_form, general, fw_half, tilde_half };

inline const char* to_string(RateMethod m) {
  switch (m) {
    case RateMethod::explicit_form: return "explicit";
    case RateMethod::general: return "general";
    case RateMethod::fw_half: return "fw-half";
    case RateMethod::tilde_half: return "tilde-half";
  }
  return "?";
}

struct RateEvalResult {
  double value = 0.0;
  RateMethod method = RateMethod::explicit_form;
  bool admissible = true;
  std::string reason;
  GridPath psi;                   ///< explicit: sigma1_bar^{-1}(phi' - cbar) at the nodes
  std::optional<KdotInverse> v1;  ///< explicit: minimizing L2 control Kdot^{-1} psi
  GridPath w;                     ///< general: G^{-1} r at cell midpoints; half forms: Q^{-1} r at nodes
  Mat u1_coeff;                   ///< general: u1*(z) = u1_coeff.row(j) z^{1/2-H} on cell j
  std::map<std::string, double> diagnostics;

  static RateEvalResult infinite(RateMethod m, std::string why) {
    RateEvalResult r;
    r.value = std::numeric_limits<double>::infinity();
    r.method = m;
    r.admissible = false;
    r.reason = std::move(why);
    return r;
  }
};

namespace rate_detail {

inline constexpr double degeneracy_tol = 1e-8;

inline void check_start(const GridPath& phi, const LimitDrift& d, const char* who) {
  if (phi.size() < 3) throw InvalidInput(std::string(who) + ": path needs at least three points");
  if (phi.dim() != d.m) throw InvalidInput(std::string(who) + ": path dimension differs from the slow dimension");
  if (d.x0 && (phi.vec(0) - *d.x0).norm() > 1e-9 * std::max(1.0, d.x0->norm()))
    throw InvalidInput(std::string(who) + ": phi(0) must equal x0");
}

inline GridPath derivative(const GridPath& phi) {
  GridPath out(phi.t0(), phi.dt(), phi.size(), phi.dim());
  for (std::size_t c = 0; c < phi.dim(); ++c) {
    const auto d = grid_derivative(phi.component(c), phi.dt());
    for (std::size_t k = 0; k < phi.size(); ++k) out(k, c) = d[k];
  }
  return out;
}

/// r = phi' - cbar - gradPsiG_bar at the nodes.
inline GridPath residual_drift(const GridPath& phi, const LimitDrift& d, bool with_corrector = true) {
  GridPath r = derivative(phi);
  for (std::size_t k = 0; k < phi.size(); ++k) {
    const Vec x = phi.vec(k);
    Vec v = r.vec(k);
    if (d.cbar) v -= d.cbar(x);
    if (with_corrector && d.gradPsiG_bar) v -= d.gradPsiG_bar(x);
    r.set(k, v);
  }
  return r;
}

/// 1/2 \int <r, Q^{-1} r> dt by the trapezoid rule with pointwise Cholesky solves.
inline RateEvalResult quadratic_form(const GridPath& r, const GridPath& phi, const std::function<Mat(const Vec&)>& Q,
                                     RateMethod method) {
  RateEvalResult res;
  res.method = method;
  res.w = GridPath(r.t0(), r.dt(), r.size(), r.dim());
  double s = 0.0, min_eig = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < r.size(); ++k) {
    const Mat q = Q(phi.vec(k));
    const double lo = Eigen::SelfAdjointEigenSolver<Mat>(q, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    min_eig = std::min(min_eig, lo);
    if (!(lo > degeneracy_tol))
      throw DegeneracyError(std::string(to_string(method)) + ": diffusion matrix is degenerate at t = " +
                            std::to_string(r.time(k)));
    const Vec rk = r.vec(k);
    const Vec wk = q.llt().solve(rk);
    res.w.set(k, wk);
    s += (k == 0 || k + 1 == r.size() ? 0.5 : 1.0) * rk.dot(wk);
  }
  res.value = 0.5 * r.dt() * s;
  res.diagnostics["min_eigenvalue"] = min_eig;
  return res;
}

}  // namespace rate_detail

/// 1/2 ||Kdot_H^{-1} psi||^2 with psi = sigma1_bar(phi)^{-1}(phi' - cbar(phi)); requires m = k.
inline RateEvalResult eval_rate_explicit(const GridPath& phi, const LimitDrift& drift, const HurstContext& ctx) {
  rate_detail::check_start(phi, drift, "eval_rate_explicit");
  ctx.check_path(phi, "eval_rate_explicit");
  if (drift.m != drift.k) throw InvalidInput("eval_rate_explicit: sigma1_bar must be square");
  if (!drift.sigma1_bar) throw DegeneracyError("eval_rate_explicit: sigma1_bar is zero");
  const GridPath r = rate_detail::residual_drift(phi, drift);
  GridPath psi(0.0, phi.dt(), phi.size(), drift.k);
  double min_sv = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < phi.size(); ++k) {
    const Mat s = drift.sigma1_bar(phi.vec(k));
    Eigen::JacobiSVD<Mat> svd(s, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const double lo = svd.singularValues().minCoeff();
    min_sv = std::min(min_sv, lo);
    if (!(lo > rate_detail::degeneracy_tol))
      throw DegeneracyError("eval_rate_explicit: sigma1_bar is singular at t = " + std::to_string(phi.time(k)));
    psi.set(k, svd.solve(r.vec(k)));
  }
  auto ki = kdot_inverse(psi, ctx);
  RateEvalResult res;
  res.method = RateMethod::explicit_form;
  res.diagnostics["min_singular_value"] = min_sv;
  const double sq = kdot_inverse_sq_norm(ki, ctx);
  if (!std::isfinite(sq) || !ki.regular.all_finite())
    return RateEvalResult::infinite(RateMethod::explicit_form, "divergent singular integral in Kdot_H^{-1} psi");
  res.value = 0.5 * sq;
  res.psi = std::move(psi);
  res.v1 = std::move(ki);
  return res;
}

/// Discrete control map at the cell midpoints.
///
/// Columns: u1 coefficients a_j (cells x k, u1 = a_j z^{1/2-H} on cell j), then u2
/// values at the basis nodes per cell (cells x nodes x ell). Rows: cells x m.
/// `metric` holds the L2 weight of each column, so the Gram operator is
/// dt * A diag(metric)^{-1} A^T.
struct QHOperator {
  Mat A;
  Vec metric;
  std::size_t cells = 0, m = 0, k = 0, ell = 0, nodes = 0;
};

inline QHOperator assemble_QH(const GridPath& phi, const LimitDrift& drift, const HurstContext& ctx,
                              const DiscreteMeasure& u2_basis) {
  ctx.check_path(phi, "assemble_QH");
  const std::size_t cells = phi.size() - 1, m = drift.m, k = drift.k, l = drift.ell, nb = u2_basis.size();
  const double dt = phi.dt(), H = ctx.H();
  const auto& P = ctx.weighted_table();
  QHOperator op;
  op.cells = cells;
  op.m = m;
  op.k = k;
  op.ell = l;
  op.nodes = nb;
  const auto cols1 = static_cast<Eigen::Index>(cells * k), cols2 = static_cast<Eigen::Index>(cells * nb * l);
  op.A = Mat::Zero(static_cast<Eigen::Index>(cells * m), cols1 + cols2);
  op.metric = Vec::Zero(cols1 + cols2);
  const double wscale = std::pow(dt, 2.0 - 2.0 * H);
  for (std::size_t j = 0; j < cells; ++j)
    for (std::size_t c = 0; c < k; ++c) op.metric[static_cast<Eigen::Index>(j * k + c)] = wscale * P.omega[j];
  for (std::size_t i = 0; i < cells; ++i) {
    const Vec mid = 0.5 * (phi.vec(i) + phi.vec(i + 1));
    const auto row = static_cast<Eigen::Index>(i * m);
    if (drift.sigma1_bar && k > 0) {
      const Mat s = drift.sigma1_bar(mid);
      for (std::size_t j = 0; j <= i; ++j)
        op.A.block(row, static_cast<Eigen::Index>(j * k), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) =
            P.at(i, j) * s;
    }
    if (drift.Q && l > 0) {
      for (std::size_t b = 0; b < nb; ++b) {
        const auto col = cols1 + static_cast<Eigen::Index>((i * nb + b) * l);
        op.A.block(row, col, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(l)) =
            u2_basis.weights[b] * drift.Q(mid, u2_basis.nodes[b]);
        for (std::size_t c = 0; c < l; ++c) op.metric[col + static_cast<Eigen::Index>(c)] = dt * u2_basis.weights[b];
      }
    }
  }
  return op;
}

/// Rate via the Gram operator G = Q_H Q_H^*, collocated at cell midpoints.
/// The sigma1 block uses the weighted Kdot table; the u2 block is the exact
/// mu-average qqt_bar, so no Y discretization enters G.
inline RateEvalResult eval_rate_general(const GridPath& phi, const LimitDrift& drift, const HurstContext& ctx,
                                        double max_condition = 1e8) {
  rate_detail::check_start(phi, drift, "eval_rate_general");
  ctx.check_path(phi, "eval_rate_general");
  const std::size_t cells = phi.size() - 1, m = drift.m, k = drift.k;
  const double dt = phi.dt(), H = ctx.H();
  const auto mi = static_cast<Eigen::Index>(m), ki = static_cast<Eigen::Index>(k);
  const auto N = static_cast<Eigen::Index>(cells * m);

  Vec r(N);
  std::vector<Vec> mids(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    mids[i] = 0.5 * (phi.vec(i) + phi.vec(i + 1));
    Vec v = (phi.vec(i + 1) - phi.vec(i)) / dt;
    if (drift.cbar) v -= drift.cbar(mids[i]);
    if (drift.gradPsiG_bar) v -= drift.gradPsiG_bar(mids[i]);
    r.segment(static_cast<Eigen::Index>(i * m), mi) = v;
  }

  // B = [sigma1_bar(m_i) P_ij omega_j^{-1/2}], so the sigma1 block of G is dt^{2H-1} B B^T.
  Mat G = Mat::Zero(N, N);
  Mat B;
  const auto& P = ctx.weighted_table();
  const bool has_s1 = drift.sigma1_bar && k > 0;
  std::vector<Mat> S(cells);
  if (has_s1) {
    B = Mat::Zero(N, static_cast<Eigen::Index>(cells * k));
    for (std::size_t i = 0; i < cells; ++i) {
      S[i] = drift.sigma1_bar(mids[i]);
      for (std::size_t j = 0; j <= i; ++j)
        B.block(static_cast<Eigen::Index>(i * m), static_cast<Eigen::Index>(j * k), mi, ki) =
            (P.at(i, j) / std::sqrt(P.omega[j])) * S[i];
    }
    G.selfadjointView<Eigen::Lower>().rankUpdate(B, std::pow(dt, 2.0 * H - 1.0));
    G.triangularView<Eigen::StrictlyUpper>() = G.transpose();
  }
  double qmin = std::numeric_limits<double>::infinity();
  if (drift.qqt_bar) {
    for (std::size_t i = 0; i < cells; ++i) {
      const Mat q = drift.qqt_bar(mids[i]);
      qmin = std::min(qmin, Eigen::SelfAdjointEigenSolver<Mat>(q, Eigen::EigenvaluesOnly).eigenvalues().minCoeff());
      G.block(static_cast<Eigen::Index>(i * m), static_cast<Eigen::Index>(i * m), mi, mi) += q;
    }
  }

  Eigen::LLT<Mat> llt(G);
  if (llt.info() != Eigen::Success)
    throw IllConditionedError("eval_rate_general: Gram operator is not positive definite",
                              std::numeric_limits<double>::infinity());
  const double cond = 1.0 / llt.rcond();
  if (!(cond <= max_condition))
    throw IllConditionedError("eval_rate_general: estimated condition number " + std::to_string(cond) +
                                  " exceeds the limit",
                              cond);
  const Vec w = llt.solve(r);

  RateEvalResult res;
  res.method = RateMethod::general;
  res.value = 0.5 * dt * r.dot(w);
  res.w = GridPath(0.5 * dt, dt, m, std::vector<double>(w.data(), w.data() + w.size()));
  res.diagnostics["condition"] = cond;
  res.diagnostics["min_eigenvalue_qqt"] = std::isfinite(qmin) ? qmin : 0.0;
  if (has_s1) {
    // u1* = W^{-1} A^T (dt w): a_j = dt^{2H-1} / omega_j sum_{i >= j} P_ij sigma1_bar(m_i)^T w_i.
    res.u1_coeff = Mat::Zero(static_cast<Eigen::Index>(cells), ki);
    const double sc = std::pow(dt, 2.0 * H - 1.0);
    for (std::size_t j = 0; j < cells; ++j) {
      Vec a = Vec::Zero(ki);
      for (std::size_t i = j; i < cells; ++i) a += P.at(i, j) * S[i].transpose() * w.segment(static_cast<Eigen::Index>(i * m), mi);
      res.u1_coeff.row(static_cast<Eigen::Index>(j)) = (sc / P.omega[j]) * a.transpose();
    }
    double e = 0.0;
    for (std::size_t j = 0; j < cells; ++j)
      e += res.u1_coeff.row(static_cast<Eigen::Index>(j)).squaredNorm() * std::pow(dt, 2.0 - 2.0 * H) * P.omega[j];
    res.diagnostics["u1_energy"] = e;
  }
  return res;
}

/// H = 1/2 Freidlin-Wentzell form with a caller-supplied Q_half.
inline RateEvalResult eval_rate_fw_half(const GridPath& phi, const LimitDrift& drift,
                                        const std::function<Mat(const Vec&)>& q_half) {
  rate_detail::check_start(phi, drift, "eval_rate_fw_half");
  return rate_detail::quadratic_form(rate_detail::residual_drift(phi, drift), phi, q_half, RateMethod::fw_half);
}

inline RateEvalResult eval_rate_fw_half(const GridPath& phi, const LimitDrift& drift) {
  return eval_rate_fw_half(phi, drift, [&drift](const Vec& x) { return drift.q_half(x); });
}

/// 1/2 \int <phi' - cbar, (sigma1_bar sigma1_bar^T)^{-1}(phi' - cbar)>.
inline RateEvalResult eval_rate_tilde_half(const GridPath& phi, const LimitDrift& drift) {
  rate_detail::check_start(phi, drift, "eval_rate_tilde_half");
  if (!drift.sigma1_bar) throw DegeneracyError("eval_rate_tilde_half: sigma1_bar is zero");
  auto q = [&drift](const Vec& x) -> Mat {
    const Mat s = drift.sigma1_bar(x);
    return s * s.transpose();
  };
  return rate_detail::quadratic_form(rate_detail::residual_drift(phi, drift, false), phi, q, RateMethod::tilde_half);
}

struct Admissibility {
  bool ok = true;
  double growth = 0.0;  ///< max |psi(t_1)| / t_1^alpha over max |psi(t_10)| / t_10^alpha
};

/// Heuristic near-origin check that psi / t^alpha stays bounded on the first ten grid points.
inline Admissibility check_admissibility(const GridPath& psi, double alpha = 1.01, double growth_limit = 2.0) {
  Admissibility a;
  const std::size_t last = std::min<std::size_t>(10, psi.size() - 1);
  double near = 0.0, far = 0.0;
  for (std::size_t c = 0; c < psi.dim(); ++c) {
    near = std::max(near, std::abs(psi(1, c)) / std::pow(psi.time(1), alpha));
    far = std::max(far, std::abs(psi(last, c)) / std::pow(psi.time(last), alpha));
  }
  const double scale = 1e-300 + far;
  a.growth = near / scale;
  a.ok = near <= growth_limit * far || near == 0.0;
  return a;
}

struct LimitStudyRow {
  double H = 0.0;
  double S_H = 0.0;
  double gap_tilde = 0.0;  ///< |S^H - S~^{1/2}| / S~^{1/2}
  double gap_half = 0.0;   ///< |S^H - S^{1/2}| / S^{1/2}
};

struct LimitStudy {
  std::vector<LimitStudyRow> rows;
  double S_tilde_half = 0.0;
  double S_half = 0.0;
  Admissibility admissibility;
  bool admissibility_is_heuristic = true;
};

/// S^H (explicit form) along H_list next to S~^{1/2} and S^{1/2}.
inline LimitStudy h_limit_study(const GridPath& phi, const LimitDrift& drift, const std::vector<double>& H_list,
                                bool enforce_admissibility = true) {
  LimitStudy out;
  out.S_tilde_half = eval_rate_tilde_half(phi, drift).value;
  out.S_half = eval_rate_fw_half(phi, drift).value;
  bool checked = false;
  for (double H : H_list) {
    const HurstContext ctx(H, phi.size(), phi.dt());
    const auto r = eval_rate_explicit(phi, drift, ctx);
    if (!checked) {
      out.admissibility = check_admissibility(r.psi);
      checked = true;
      if (enforce_admissibility && !out.admissibility.ok)
        throw AdmissibilityError("h_limit_study: psi / t^alpha grows towards t = 0 (heuristic check)");
    }
    LimitStudyRow row;
    row.H = H;
    row.S_H = r.value;
    row.gap_tilde = std::abs(r.value - out.S_tilde_half) / out.S_tilde_half;
    row.gap_half = std::abs(r.value - out.S_half) / out.S_half;
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace fracldp
