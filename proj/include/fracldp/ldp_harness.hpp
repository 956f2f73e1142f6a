#pragma once

// Plain Monte Carlo checks of Laplace and rare-event asymptotics.
//
// Trial i at schedule entry j draws its noise from stream (j << 32) + i, and
// per-trial results are reduced in index order, so the output does not depend
// on the number of worker threads.

#include <fracldp/errors.hpp>
#include <fracldp/fbm.hpp>
#include <fracldp/multiscale_sim.hpp>
#include <fracldp/slow_fast.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace fracldp {

struct EpsEta {
  double eps = 0.1;
  double eta = 0.0316;
};

/// eta = eps^power for each eps.
inline std::vector<EpsEta> power_schedule(const std::vector<double>& eps, double power = 1.5) {
  std::vector<EpsEta> out;
  for (double e : eps) out.push_back({e, std::pow(e, power)});
  return out;
}

inline std::vector<EpsEta> default_schedule() { return power_schedule({0.1, 0.05, 0.02, 0.01}); }

/// sqrt(eta/eps) must decrease along the schedule; with a declared beta so must sqrt(eps)/eta^beta.
inline void check_schedule(const std::vector<EpsEta>& s, std::optional<double> beta) {
  if (s.empty()) throw InvalidInput("schedule: empty");
  for (const auto& e : s)
    if (!(e.eps > 0.0) || !(e.eta > 0.0)) throw InvalidInput("schedule: eps and eta must be positive");
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (!(std::sqrt(s[i].eta / s[i].eps) < std::sqrt(s[i - 1].eta / s[i - 1].eps)))
      throw InvalidInput("schedule: sqrt(eta)/sqrt(eps) must decrease");
    if (beta && !(std::sqrt(s[i].eps) / std::pow(s[i].eta, *beta) <
                  std::sqrt(s[i - 1].eps) / std::pow(s[i - 1].eta, *beta)))
      throw InvalidInput("schedule: sqrt(eps)/eta^beta must decrease");
  }
}

/// Built-in bounded test functionals of the slow path.
struct Functional {
  enum class Kind { zero, constant, terminal_penalty, smoothed_exceedance };
  Kind kind = Kind::zero;
  double kappa = 0.0;  ///< constant value, or height of the exceedance penalty
  double rho = 1.0;    ///< terminal penalty weight
  double lo = 0.0, hi = 0.0;  ///< target set A = [lo, hi] for component 0
  double width = 0.05;        ///< smoothing width of the exceedance penalty
  double cap = 50.0;          ///< upper bound of the terminal penalty

  /// h(phi) from the terminal state.
  double operator()(const Vec& xT) const {
    const double x = xT[0];
    switch (kind) {
      case Kind::zero: return 0.0;
      case Kind::constant: return kappa;
      case Kind::terminal_penalty: {
        const double d = x < lo ? lo - x : (x > hi ? x - hi : 0.0);
        return std::min(cap, rho * d * d);
      }
      case Kind::smoothed_exceedance: return kappa / (1.0 + std::exp((x - lo) / width));
    }
    return 0.0;
  }
};

struct GridSpec {
  std::size_t n = 65;
  double T = 1.0;
  std::size_t substeps = 0;  ///< 0 selects default_substeps
};

struct LaplaceExperiment {
  SlowFastSpec spec;
  std::vector<EpsEta> schedule = default_schedule();
  Functional h;
  GridSpec grid;
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct LaplaceRow {
  double eps = 0.0, eta = 0.0;
  double estimate = 0.0;  ///< -eps log mean exp(-h/eps)
  double std_error = 0.0;
  std::size_t trials = 0, aborted = 0;
};

namespace detail {

struct TrialOutcome {
  Vec xT;
  bool aborted = false;
};

/// Terminal states for one schedule entry.
inline std::vector<TrialOutcome> run_trials(const SlowFastSpec& base, const EpsEta& ee, const GridSpec& grid,
                                            std::size_t trials, std::uint64_t seed, std::uint64_t entry,
                                            unsigned threads) {
  SlowFastSpec spec = base;
  spec.eps = ee.eps;
  spec.eta = ee.eta;
  spec.validate();
  if (grid.n < 2 || !(grid.T > 0.0)) throw InvalidInput("run_trials: invalid grid");
  const double dt = grid.T / static_cast<double>(grid.n - 1);
  const std::size_t sub = grid.substeps ? grid.substeps : default_substeps(dt, spec.eta).value;
  const std::size_t nf = (grid.n - 1) * sub + 1;
  std::vector<TrialOutcome> out(trials);
  auto work = [&](std::size_t begin, std::size_t end) {
    NoiseGenerator gen(spec.H, nf, grid.T, spec.k, spec.ell);
    for (std::size_t i = begin; i < end; ++i) {
      try {
        const auto nb = gen.draw(seed, (entry << 32) + i);
        const auto p = simulate(spec, nb, sub);
        out[i].xT = p.X.vec(p.X.size() - 1);
      } catch (const DivergenceError&) {
        out[i].aborted = true;
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, trials))));
  if (threads == 1) {
    work(0, trials);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (trials + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t b = std::min(trials, t * chunk), e = std::min(trials, b + chunk);
      pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }
  return out;
}

}  // namespace detail

/// Log-sum-exp estimate of -eps log E[exp(-h/eps)] with a delta-method standard error.
inline LaplaceRow laplace_estimate(const std::vector<double>& h, double eps) {
  LaplaceRow row;
  row.eps = eps;
  row.trials = h.size();
  if (h.empty()) throw ExperimentError("laplace_estimate: no completed trials");
  double top = -std::numeric_limits<double>::infinity();
  for (double v : h) top = std::max(top, -v / eps);
  double s = 0.0, s2 = 0.0;
  for (double v : h) {
    const double y = std::exp(-v / eps - top);
    s += y;
    s2 += y * y;
  }
  const double N = static_cast<double>(h.size());
  const double mean = s / N;
  row.estimate = -eps * (top + std::log(mean));
  const double var = h.size() > 1 ? std::max(0.0, (s2 - N * mean * mean) / (N - 1.0)) : 0.0;
  row.std_error = eps * std::sqrt(var / N) / mean;
  return row;
}

inline std::vector<LaplaceRow> estimate_laplace(const LaplaceExperiment& exp) {
  if (exp.trials < 1000) throw InvalidInput("estimate_laplace: at least 1000 trials are required");
  check_schedule(exp.schedule, exp.spec.sigma1_depends_on_y ? exp.spec.beta : std::nullopt);
  std::vector<LaplaceRow> rows;
  for (std::size_t j = 0; j < exp.schedule.size(); ++j) {
    const auto res = detail::run_trials(exp.spec, exp.schedule[j], exp.grid, exp.trials, exp.seed, j, exp.threads);
    std::vector<double> h;
    std::size_t aborted = 0;
    for (const auto& r : res) {
      if (r.aborted) {
        ++aborted;
        continue;
      }
      h.push_back(exp.h(r.xT));
    }
    if (h.empty()) throw ExperimentError("estimate_laplace: all trials aborted at eps = " + std::to_string(exp.schedule[j].eps));
    auto row = laplace_estimate(h, exp.schedule[j].eps);
    row.eta = exp.schedule[j].eta;
    row.trials = exp.trials;
    row.aborted = aborted;
    rows.push_back(row);
  }
  return rows;
}

/// Wilson score interval for a binomial proportion.
struct Interval {
  double lo = 0.0, hi = 1.0;
};

inline Interval wilson_interval(std::size_t hits, std::size_t n, double z = 1.96) {
  if (n == 0) return {0.0, 1.0};
  const double N = static_cast<double>(n), p = static_cast<double>(hits) / N, z2 = z * z;
  const double centre = (p + z2 / (2.0 * N)) / (1.0 + z2 / N);
  const double half = z / (1.0 + z2 / N) * std::sqrt(p * (1.0 - p) / N + z2 / (4.0 * N * N));
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

struct RareEventRow {
  double eps = 0.0, eta = 0.0;
  std::size_t trials = 0, hits = 0, aborted = 0;
  double p_hat = 0.0;
  Interval p_interval;
  double estimate = 0.0;   ///< -eps log p_hat; a lower bound when one_sided
  double std_error = 0.0;  ///< delta method, eps sqrt((1-p)/(n p))
  Interval estimate_interval;
  bool one_sided = false;
  std::optional<double> prediction;
};

struct RareEventResult {
  std::vector<RareEventRow> rows;
  double pilot_p = 0.0;
  bool pilot_feasible = true;
  std::vector<std::string> notes;
};

struct RareEventOptions {
  GridSpec grid;
  std::size_t pilot_trials = 1000;
  unsigned threads = 1;
  std::optional<double> prediction;  ///< inf{S(phi) : phi_T >= a} when known in closed form
  double z = 1.96;                   ///< Wilson interval quantile
};

/// Exceedance frequencies of X_T[0] >= a along the schedule (a heuristic companion of the
/// Laplace principle: the indicator is not continuous).
inline RareEventResult estimate_rare_event(const SlowFastSpec& spec, double a, const std::vector<EpsEta>& schedule,
                                           std::size_t trials, std::uint64_t seed,
                                           const RareEventOptions& opt = {}) {
  if (trials == 0) throw InvalidInput("estimate_rare_event: need trials");
  check_schedule(schedule, spec.sigma1_depends_on_y ? spec.beta : std::nullopt);
  RareEventResult out;
  out.notes.push_back("indicator functional: heuristic companion of the Laplace principle");
  // Pilot at the largest eps on a disjoint stream block.
  const auto largest = *std::max_element(schedule.begin(), schedule.end(),
                                         [](const EpsEta& x, const EpsEta& y) { return x.eps < y.eps; });
  if (opt.pilot_trials > 0) {
    const auto pilot = detail::run_trials(spec, largest, opt.grid, opt.pilot_trials, seed ^ 0x9e3779b97f4a7c15ULL,
                                          0xffffffffULL, opt.threads);
    std::size_t hits = 0;
    for (const auto& r : pilot) hits += (!r.aborted && r.xT[0] >= a) ? 1 : 0;
    out.pilot_p = static_cast<double>(hits) / static_cast<double>(opt.pilot_trials);
    out.pilot_feasible = out.pilot_p >= 10.0 / static_cast<double>(trials);
    if (!out.pilot_feasible) out.notes.push_back("pilot: event probability below 10/trials at the largest eps");
  }
  for (std::size_t j = 0; j < schedule.size(); ++j) {
    const auto res = detail::run_trials(spec, schedule[j], opt.grid, trials, seed, j, opt.threads);
    RareEventRow row;
    row.eps = schedule[j].eps;
    row.eta = schedule[j].eta;
    row.trials = trials;
    for (const auto& r : res) {
      if (r.aborted)
        ++row.aborted;
      else if (r.xT[0] >= a)
        ++row.hits;
    }
    const std::size_t done = trials - row.aborted;
    if (done == 0) throw ExperimentError("estimate_rare_event: all trials aborted at eps = " + std::to_string(row.eps));
    row.p_hat = static_cast<double>(row.hits) / static_cast<double>(done);
    row.p_interval = wilson_interval(row.hits, done, opt.z);
    row.estimate_interval = {-row.eps * std::log(row.p_interval.hi),
                             row.p_interval.lo > 0.0 ? -row.eps * std::log(row.p_interval.lo)
                                                     : std::numeric_limits<double>::infinity()};
    if (row.hits == 0) {
      row.one_sided = true;
      row.estimate = row.estimate_interval.lo;
      row.std_error = std::numeric_limits<double>::quiet_NaN();
    } else {
      row.estimate = -row.eps * std::log(row.p_hat);
      row.std_error = row.eps * std::sqrt((1.0 - row.p_hat) / (static_cast<double>(done) * row.p_hat));
    }
    row.prediction = opt.prediction;
    out.rows.push_back(row);
  }
  return out;
}

/// Successive differences of a sequence of estimates shrink in absolute value.
inline bool stabilizes(const std::vector<double>& est) {
  for (std::size_t i = 2; i < est.size(); ++i)
    if (!(std::abs(est[i] - est[i - 1]) < std::abs(est[i - 1] - est[i - 2]))) return false;
  return true;
}

/// Closed forms for X_T = x0 + sqrt(eps) sigma B^H_T, whose variance is eps v with v = sigma^2 T^{2H}.
namespace gaussian_oracle {

inline double variance(double sigma, double T, double H) { return sigma * sigma * std::pow(T, 2.0 * H); }

/// inf{S(phi) : phi_T >= a} = (a - x0)^2 / (2 v) for a >= x0.
inline double exceedance_rate(double a, double x0, double sigma, double T, double H) {
  const double d = std::max(0.0, a - x0);
  return d * d / (2.0 * variance(sigma, T, H));
}

/// eps-limit of -eps log E exp(-rho (X_T - a)^2 / eps): rho (x0 - a)^2 / (1 + 2 rho v).
inline double laplace_limit(double rho, double a, double x0, double sigma, double T, double H) {
  const double v = variance(sigma, T, H);
  return rho * (x0 - a) * (x0 - a) / (1.0 + 2.0 * rho * v);
}

/// Exact value at finite eps: the limit plus (eps/2) log(1 + 2 rho v).
inline double laplace_exact(double rho, double a, double x0, double sigma, double T, double H, double eps) {
  const double v = variance(sigma, T, H);
  return laplace_limit(rho, a, x0, sigma, T, H) + 0.5 * eps * std::log(1.0 + 2.0 * rho * v);
}

}  // namespace gaussian_oracle

}  // namespace fracldp
