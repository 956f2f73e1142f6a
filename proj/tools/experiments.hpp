#pragma once

// Experiment runners behind the command-line tool. Each writes its artifacts
// and returns their paths; every number is formatted with the shortest
// round-trip representation so reruns are byte-identical.

#include <fracldp/config.hpp>
#include <fracldp/fbm.hpp>
#include <fracldp/ldp_harness.hpp>
#include <fracldp/multiscale_sim.hpp>
#include <fracldp/poisson_cell.hpp>
#include <fracldp/rate_fn.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

namespace fracldp::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

using Files = std::vector<fs::path>;

inline void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

inline void write_text(const fs::path& p, const std::string& text) {
  ensure_parent(p);
  std::ofstream f(p, std::ios::binary);
  if (!f) throw InvalidInput("cannot open '" + p.string() + "' for writing");
  f << text;
}

inline void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

/// Minimal CSV builder with shortest round-trip numbers.
class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) out_ += (i ? "," : "") + header[i];
    out_ += '\n';
  }
  Csv& num(double v) {
    sep();
    if (std::isnan(v)) out_ += "nan";
    else if (std::isinf(v)) out_ += v > 0 ? "inf" : "-inf";
    else detail::append_double(out_, v);
    return *this;
  }
  Csv& count(std::size_t v) {
    sep();
    out_ += std::to_string(v);
    return *this;
  }
  Csv& text(const std::string& s) {
    sep();
    out_ += s;
    return *this;
  }
  void end_row() {
    out_ += '\n';
    fresh_ = true;
  }
  const std::string& str() const { return out_; }

 private:
  void sep() {
    if (!fresh_) out_ += ',';
    fresh_ = false;
  }
  std::string out_;
  bool fresh_ = true;
};

inline json to_json(const ValidationReport& rep) {
  json checks = json::array();
  for (const auto& c : rep.checks) checks.push_back({{"check", c.name}, {"status", to_string(c.status)}, {"detail", c.detail}});
  return {{"blocking", rep.blocking()}, {"checks", checks}};
}

// --- sample-fbm ------------------------------------------------------------

inline Files sample_fbm_csv(double H, std::size_t n, double T, std::size_t dim, std::uint64_t seed, const fs::path& out) {
  const auto p = sample_fbm(H, n, T, dim, seed);
  ensure_parent(out);
  save_csv(out.string(), p);
  return {out};
}

// --- simulate --------------------------------------------------------------

struct SimulateOptions {
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  unsigned parallel = 1;
};

/// Per-trial paths (columns v0 = X, v1 = Y) and a JSON summary including the sup-distance
/// of each trial to the averaged limit path.
inline Files simulate_experiment(const ExperimentConfig& cfg, const SimulateOptions& opt, const fs::path& dir) {
  const auto lm = build_limit(cfg);
  const SlowFastSpec& spec = lm.spec;
  const std::size_t n = cfg.grid.n;
  const double dt = cfg.grid.T / static_cast<double>(n - 1);
  const auto sub = cfg.grid.substeps ? Substeps{cfg.grid.substeps, false}
                                     : default_substeps(dt, spec.eta, static_cast<std::size_t>(cfg.tol.substep_cap));
  const std::size_t nf = (n - 1) * sub.value + 1;
  const GridPath limit = integrate_limit_path(lm.drift, [](double) { return 0.0; }, cfg.grid.T, n);

  struct Trial {
    std::optional<GridPath> path;
    std::vector<std::string> warnings;
    double sup_error = 0.0;
    double abort_time = 0.0;
  };
  std::vector<Trial> trials(opt.trials);
  auto work = [&](std::size_t begin, std::size_t end) {
    NoiseGenerator gen(spec.H, nf, cfg.grid.T, spec.k, spec.ell);
    for (std::size_t i = begin; i < end; ++i) {
      try {
        const auto sim = simulate(spec, gen.draw(opt.seed, i), sub.value);
        GridPath joint(0.0, dt, n, spec.m + spec.fast);
        double err = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          joint(k, 0) = sim.X(k, 0);
          if (spec.fast) joint(k, 1) = sim.Y(k, 0);
          err = std::max(err, std::abs(sim.X(k, 0) - limit(k)));
        }
        trials[i].path = std::move(joint);
        trials[i].warnings = sim.warnings;
        trials[i].sup_error = err;
      } catch (const DivergenceError& e) {
        trials[i].abort_time = e.time;
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(opt.parallel, static_cast<unsigned>(std::max<std::size_t>(1, opt.trials))));
  if (threads == 1) {
    work(0, opt.trials);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (opt.trials + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back(work, std::min(opt.trials, t * chunk), std::min(opt.trials, (t + 1) * chunk));
    for (auto& th : pool) th.join();
  }

  Files files;
  std::vector<double> xT, errs;
  json aborted = json::array();
  std::vector<std::string> warnings;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (!trials[i].path) {
      aborted.push_back({{"trial", i}, {"time", trials[i].abort_time}});
      continue;
    }
    char name[32];
    std::snprintf(name, sizeof name, "trial_%05zu.csv", i);
    const fs::path p = dir / "paths" / name;
    ensure_parent(p);
    save_csv(p.string(), *trials[i].path);
    files.push_back(p);
    xT.push_back((*trials[i].path)(n - 1, 0));
    errs.push_back(trials[i].sup_error);
    for (const auto& w : trials[i].warnings)
      if (std::find(warnings.begin(), warnings.end(), w) == warnings.end()) warnings.push_back(w);
  }
  if (sub.capped) warnings.push_back("fast substeps capped at " + std::to_string(sub.value));

  json summary{{"experiment", "simulate"},
               {"eps", spec.eps},
               {"eta", spec.eta},
               {"H", spec.H},
               {"n", n},
               {"T", cfg.grid.T},
               {"substeps", sub.value},
               {"trials", opt.trials},
               {"completed", xT.size()},
               {"aborted", aborted.size()},
               {"aborted_trials", aborted},
               {"warnings", warnings}};
  if (!xT.empty()) {
    double mean = 0.0, var = 0.0, emean = 0.0;
    for (double v : xT) mean += v;
    mean /= static_cast<double>(xT.size());
    for (double v : xT) var += (v - mean) * (v - mean);
    var = xT.size() > 1 ? var / static_cast<double>(xT.size() - 1) : 0.0;
    for (double e : errs) emean += e;
    emean /= static_cast<double>(errs.size());
    summary["terminal"] = {{"mean", mean},
                           {"variance", var},
                           {"min", *std::min_element(xT.begin(), xT.end())},
                           {"max", *std::max_element(xT.begin(), xT.end())}};
    summary["averaged_limit_terminal"] = limit(n - 1);
    summary["sup_error_vs_averaged_limit"] = {{"mean", emean}, {"max", *std::max_element(errs.begin(), errs.end())}};
  }
  const fs::path sp = dir / "simulate_summary.json";
  write_json(sp, summary);
  files.push_back(sp);
  const fs::path lp = dir / "averaged_limit.csv";
  save_csv(lp.string(), limit);
  files.push_back(lp);
  return files;
}

// --- poisson ---------------------------------------------------------------

inline Files poisson_experiment(const ExperimentConfig& cfg, const fs::path& out) {
  if (!cfg.fast) throw ConfigError("poisson: the model has no fast process");
  const auto lm = build_limit(cfg);
  const auto& mu = *lm.mu;
  const Vec x0 = Vec::Constant(1, cfg.x0);
  const auto eq = effective_q(lm.spec, lm.psol, lm.rule, x0, cfg.tol.qqt_min_eigenvalue);
  json y = json::array(), rho = json::array(), psi = json::array(), grad = json::array();
  for (std::size_t j = 0; j < mu.size(); ++j) {
    y.push_back(mu.y[j]);
    rho.push_back(mu.density[j]);
    const Vec yj = Vec::Constant(1, mu.y[j]);
    psi.push_back(lm.psol.value(yj)[0]);
    grad.push_back(lm.psol.gradient(yj)(0, 0));
  }
  json j{{"experiment", "poisson"},
         {"truncation_L", mu.L},
         {"mean", mu.mean},
         {"sd", mu.sd},
         {"sigma1_bar_at_x0", lm.drift.sigma1_bar(x0)(0, 0)},
         {"sigma1_sq_bar_at_x0", lm.drift.sigma1_sq_bar(x0)(0, 0)},
         {"qqt_bar_at_x0", eq.qqt_bar(0, 0)},
         {"qqt_min_eigenvalue", eq.min_eigenvalue},
         {"qqt_nondegenerate", eq.nondegenerate},
         {"y", y},
         {"density", rho},
         {"psi", psi},
         {"grad_psi", grad}};
  write_json(out, j);
  return {out};
}

// --- rate / limit-study ----------------------------------------------------

inline GridPath rate_path(const ExperimentConfig& cfg, const LimitModel& lm, const std::string& path_override) {
  if (!path_override.empty()) return load_csv(path_override);
  return config_path(cfg, lm.drift);
}

inline Files rate_experiment(const ExperimentConfig& cfg, const std::string& path_file, const std::string& method,
                             std::optional<double> hurst, const fs::path& out) {
  const auto lm = build_limit(cfg);
  const GridPath phi = rate_path(cfg, lm, path_file);
  const double H = hurst.value_or(cfg.rate_hurst.value_or(cfg.H));
  RateEvalResult r;
  if (method == "explicit") r = eval_rate_explicit(phi, lm.drift, HurstContext(H, phi.size(), phi.dt()));
  else if (method == "general") r = eval_rate_general(phi, lm.drift, HurstContext(H, phi.size(), phi.dt()), cfg.tol.max_condition);
  else if (method == "fw-half") r = eval_rate_fw_half(phi, lm.drift);
  else if (method == "tilde-half") r = eval_rate_tilde_half(phi, lm.drift);
  else throw ConfigError("rate: unknown method '" + method + "'");
  json diag = json::object();
  for (const auto& [k, v] : r.diagnostics) diag[k] = v;
  json j{{"experiment", "rate"},
         {"method", to_string(r.method)},
         {"H", method == "explicit" || method == "general" ? json(H) : json(nullptr)},
         {"n", phi.size()},
         {"T", phi.t_end()},
         {"value", r.value},
         {"admissible", r.admissible},
         {"reason", r.reason},
         {"diagnostics", diag}};
  write_json(out, j);
  return {out};
}

inline Files limit_study_experiment(const ExperimentConfig& cfg, const std::string& path_file,
                                    const std::vector<double>& hurst_list, const fs::path& out) {
  const auto lm = build_limit(cfg);
  const GridPath phi = rate_path(cfg, lm, path_file);
  const auto st = h_limit_study(phi, lm.drift, hurst_list);
  Csv csv({"H", "S_H", "S_tilde_half", "S_half", "gap_tilde", "gap_half"});
  for (const auto& row : st.rows)
    csv.num(row.H).num(row.S_H).num(st.S_tilde_half).num(st.S_half).num(row.gap_tilde).num(row.gap_half).end_row();
  write_text(out, csv.str());
  return {out};
}

// --- Monte Carlo -----------------------------------------------------------

inline std::optional<double> laplace_prediction(const ExperimentConfig& cfg) {
  // Gaussian endpoint: pure fBm with constant sigma1 and a quadratic terminal penalty.
  if (cfg.fast || !cfg.c.is_zero() || !cfg.sigma2.is_zero() || cfg.sigma1.name != "const" ||
      cfg.functional.kind != Functional::Kind::terminal_penalty || cfg.functional.lo != cfg.functional.hi)
    return std::nullopt;
  return gaussian_oracle::laplace_limit(cfg.functional.rho, cfg.functional.lo, cfg.x0, cfg.sigma1.p[0], cfg.grid.T,
                                        cfg.H);
}

inline Files laplace_experiment(const ExperimentConfig& cfg, unsigned parallel, const fs::path& out) {
  LaplaceExperiment e;
  e.spec = build_spec(cfg);
  e.schedule = cfg.schedule();
  e.h = cfg.functional;
  e.grid = cfg.grid;
  e.trials = cfg.trials;
  e.seed = cfg.seed;
  e.threads = parallel;
  const auto rows = estimate_laplace(e);
  const auto pred = laplace_prediction(cfg);
  Csv csv({"eps", "eta", "estimate", "std_error", "trials", "aborted", "prediction"});
  for (const auto& r : rows) {
    csv.num(r.eps).num(r.eta).num(r.estimate).num(r.std_error).count(r.trials).count(r.aborted);
    if (pred) csv.num(*pred);
    else csv.text("");
    csv.end_row();
  }
  write_text(out, csv.str());
  return {out};
}

inline Files rare_event_experiment(const ExperimentConfig& cfg, unsigned parallel, const fs::path& out) {
  const auto lm = build_limit(cfg);
  RareEventOptions opt;
  opt.grid = cfg.grid;
  opt.pilot_trials = cfg.pilot_trials;
  opt.threads = parallel;
  opt.prediction = exceedance_prediction(cfg, lm);
  opt.z = cfg.tol.wilson_z;
  const auto res = estimate_rare_event(lm.spec, cfg.threshold, cfg.schedule(), cfg.trials, cfg.seed, opt);
  Csv csv({"eps", "eta", "trials", "hits", "aborted", "p_hat", "p_lo", "p_hi", "estimate", "std_error", "estimate_lo",
           "estimate_hi", "one_sided", "prediction", "functional"});
  std::vector<double> est;
  for (const auto& r : res.rows) {
    csv.num(r.eps).num(r.eta).count(r.trials).count(r.hits).count(r.aborted).num(r.p_hat).num(r.p_interval.lo)
        .num(r.p_interval.hi).num(r.estimate).num(r.std_error).num(r.estimate_interval.lo).num(r.estimate_interval.hi)
        .text(r.one_sided ? "1" : "0");
    if (r.prediction) csv.num(*r.prediction);
    else csv.text("");
    csv.text("indicator-heuristic").end_row();
    est.push_back(r.estimate);
  }
  write_text(out, csv.str());
  fs::path side = out;
  side.replace_extension(".json");
  json j{{"experiment", "rare-event"},
         {"threshold", cfg.threshold},
         {"pilot_p", res.pilot_p},
         {"pilot_feasible", res.pilot_feasible},
         {"stabilizes", stabilizes(est)},
         {"prediction", opt.prediction ? json(*opt.prediction) : json(nullptr)},
         {"notes", res.notes}};
  write_json(side, j);
  return {out, side};
}

}  // namespace fracldp::cli
