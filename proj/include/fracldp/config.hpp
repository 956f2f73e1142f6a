#pragma once

// Declarative experiment configuration: an INI-style file whose coefficient
// entries name built-in scalar functions, plus the validation report that
// gates every run. See docs/config.md for the schema.
//
// Configured models are scalar: one slow coordinate driven by one fBm, an
// optional one-dimensional fast process and at most one Brownian motion.
// Library users with vector-valued models build SlowFastSpec directly.

#include <fracldp/errors.hpp>
#include <fracldp/grid_path.hpp>
#include <fracldp/ldp_harness.hpp>
#include <fracldp/poisson_cell.hpp>
#include <fracldp/rate_fn.hpp>
#include <fracldp/slow_fast.hpp>

#include <boost/program_options/options_description.hpp>
#include <boost/program_options/parsers.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fracldp {

/// Every tolerance and numeric default used by validation, experiments and the acceptance suite.
struct Defaults {
  double centering = 1e-4;            ///< |int b dmu| bound
  double qqt_min_eigenvalue = 1e-8;   ///< QQ^T-bar degeneracy threshold
  double max_condition = 1e8;         ///< general rate evaluator Gram condition number
  double poisson_grid = 4001;         ///< grid points of the invariant density
  double gauss_nodes = 40;            ///< size of the compact Gauss rule used for averages
  double substep_cap = 1000;          ///< cap of the default fast substep count
  double wilson_z = 1.96;             ///< rare-event interval quantile
  double roundtrip = 1e-3;            ///< K_H round-trip relative error
  double kernel_closed_form = 1e-4;   ///< Kdot_H[1] relative error
  double young = 1e-3;                ///< Young integral absolute error on smooth data
  double young_rough = 1e-2;          ///< Young integral relative error against a refined Riemann sum
  double poisson_analytic = 1e-6;     ///< OU Poisson solution and cosine averages
  double homogenization = 0.1;        ///< mean sup-error of the averaged slow path
  double rate_agreement = 1e-2;       ///< explicit vs general evaluator
  double limit_gap = 0.05;            ///< final S^H vs S~^{1/2} relative gap
  double half_ratio = 1e-3;           ///< S~^{1/2} / S^{1/2} against its closed form
  double ldp_relative = 0.25;         ///< Monte Carlo rate vs prediction
  double statistics_sigmas = 4.0;     ///< fBm moment checks, in standard errors

  static const std::vector<std::pair<std::string, double Defaults::*>>& fields() {
    static const std::vector<std::pair<std::string, double Defaults::*>> f{
        {"centering", &Defaults::centering},
        {"qqt_min_eigenvalue", &Defaults::qqt_min_eigenvalue},
        {"max_condition", &Defaults::max_condition},
        {"poisson_grid", &Defaults::poisson_grid},
        {"gauss_nodes", &Defaults::gauss_nodes},
        {"substep_cap", &Defaults::substep_cap},
        {"wilson_z", &Defaults::wilson_z},
        {"roundtrip", &Defaults::roundtrip},
        {"kernel_closed_form", &Defaults::kernel_closed_form},
        {"young", &Defaults::young},
        {"young_rough", &Defaults::young_rough},
        {"poisson_analytic", &Defaults::poisson_analytic},
        {"homogenization", &Defaults::homogenization},
        {"rate_agreement", &Defaults::rate_agreement},
        {"limit_gap", &Defaults::limit_gap},
        {"half_ratio", &Defaults::half_ratio},
        {"ldp_relative", &Defaults::ldp_relative},
        {"statistics_sigmas", &Defaults::statistics_sigmas},
    };
    return f;
  }
};

/// A named scalar function of (x, y) from the built-in library.
struct Builtin {
  std::string name = "zero";
  std::vector<double> p;
  std::string text = "zero";

  bool is_zero() const { return name == "zero"; }
  bool uses_x() const { return name == "linear" && p[0] != 0.0; }
  bool uses_y() const {
    if (name == "linear") return p[1] != 0.0;
    return name == "ou" || name == "cos" || name == "sin" || name == "cubic" || name == "tanh";
  }

  double operator()(double x, double y) const {
    if (name == "zero") return 0.0;
    if (name == "const") return p[0];
    if (name == "linear") return p[0] * x + p[1] * y + p[2];
    if (name == "ou") return -p[0] * y;
    if (name == "cos") return p[0] * std::cos(p[1] * y);
    if (name == "sin") return p[0] * std::sin(p[1] * y);
    if (name == "cubic") return p[0] * y * y * y + p[1] * y;
    if (name == "tanh") return p[0] * std::tanh(p[1] * y);
    return 0.0;
  }
};

namespace config_detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// number | -number | sqrt(number) | e | pi
inline double parse_number(std::string s, const std::string& key) {
  s = trim(s);
  double sign = 1.0;
  if (!s.empty() && s.front() == '-') {
    sign = -1.0;
    s = trim(s.substr(1));
  }
  if (s == "e") return sign * std::numbers::e;
  if (s == "pi") return sign * std::numbers::pi;
  if (s.rfind("sqrt(", 0) == 0 && s.back() == ')') {
    const double v = parse_number(s.substr(5, s.size() - 6), key);
    if (v < 0.0) throw ConfigError(key + ": sqrt of a negative number");
    return sign * std::sqrt(v);
  }
  try {
    return sign * detail::parse_double(s);
  } catch (const InvalidInput&) {
    throw ConfigError(key + ": cannot parse number '" + s + "'");
  }
}

inline std::vector<double> parse_list(const std::string& s, const std::string& key) {
  std::vector<double> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(item, key));
  return out;
}

inline std::vector<std::string> parse_words(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline Builtin parse_builtin(const std::string& raw, const std::string& key) {
  const std::string s = trim(raw);
  Builtin b;
  b.text = s;
  const auto open = s.find('(');
  std::vector<double> args;
  if (open == std::string::npos) {
    b.name = s;
  } else {
    if (s.back() != ')') throw ConfigError(key + ": unbalanced parentheses in '" + s + "'");
    b.name = trim(s.substr(0, open));
    args = parse_list(s.substr(open + 1, s.size() - open - 2), key);
  }
  // name -> (required, defaults for the optional tail)
  static const std::map<std::string, std::pair<std::size_t, std::vector<double>>> sig{
      {"zero", {0, {}}},          {"const", {1, {}}},        {"linear", {1, {0.0, 0.0}}},
      {"ou", {1, {}}},            {"cos", {0, {1.0, 1.0}}},  {"sin", {0, {1.0, 1.0}}},
      {"cubic", {2, {}}},         {"tanh", {0, {1.0, 1.0}}},
  };
  const auto it = sig.find(b.name);
  if (it == sig.end())
    throw ConfigError(key + ": unknown built-in '" + b.name +
                      "' (known: zero, const, linear, ou, cos, sin, cubic, tanh)");
  const auto& [required, tail] = it->second;
  if (args.size() < required || args.size() > required + tail.size())
    throw ConfigError(key + ": wrong number of parameters for '" + b.name + "'");
  for (std::size_t i = args.size(); i < required + tail.size(); ++i) args.push_back(tail[i - required]);
  for (double v : args)
    if (!std::isfinite(v)) throw ConfigError(key + ": parameters must be finite");
  b.p = std::move(args);
  return b;
}

}  // namespace config_detail

enum class ExperimentKind { simulate, poisson, rate, limit_study, laplace, rare_event, sample_fbm };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::simulate: return "simulate";
    case ExperimentKind::poisson: return "poisson";
    case ExperimentKind::rate: return "rate";
    case ExperimentKind::limit_study: return "limit-study";
    case ExperimentKind::laplace: return "laplace";
    case ExperimentKind::rare_event: return "rare-event";
    case ExperimentKind::sample_fbm: return "sample-fbm";
  }
  return "?";
}

inline ExperimentKind parse_kind(const std::string& s) {
  for (auto k : {ExperimentKind::simulate, ExperimentKind::poisson, ExperimentKind::rate, ExperimentKind::limit_study,
                 ExperimentKind::laplace, ExperimentKind::rare_event, ExperimentKind::sample_fbm})
    if (s == to_string(k)) return k;
  throw ConfigError("experiment.run: unknown experiment '" + s + "'");
}

struct ExperimentConfig {
  std::string name = "experiment";
  std::vector<ExperimentKind> run;
  std::uint64_t seed = 0;
  std::size_t trials = 100;
  unsigned parallel = 1;

  // model
  double H = 0.75, eps = 0.01;
  std::optional<double> eta, eta_power;
  double x0 = 0.0, y0 = 0.0;
  bool fast = true;
  std::optional<double> beta;
  Builtin b, c, sigma1, sigma2, f, g, tau;

  GridSpec grid;

  // schedule
  std::vector<double> schedule_eps{0.1, 0.05, 0.02, 0.01};
  std::vector<double> schedule_eta;
  double schedule_power = 1.5;

  Functional functional;
  double threshold = 1.0;
  std::size_t pilot_trials = 1000;

  // path for rate experiments: psi(t) = sum psi[i] t^i, or a CSV file
  std::vector<double> path_psi{0.0, 0.0, 1.0};
  std::string path_file;
  std::size_t path_n = 1025;
  double path_T = 1.0;

  std::string rate_method = "explicit";
  std::optional<double> rate_hurst;
  std::vector<double> hurst_list{0.6, 0.55, 0.52};

  std::size_t fbm_dim = 1;

  Defaults tol;
  std::string source;  ///< raw file text, hashed into the manifest

  double effective_eta() const {
    if (eta) return *eta;
    return std::pow(eps, eta_power.value_or(1.5));
  }

  std::vector<EpsEta> schedule() const {
    if (!schedule_eta.empty()) {
      if (schedule_eta.size() != schedule_eps.size())
        throw ConfigError("schedule: eps and eta lists differ in length");
      std::vector<EpsEta> out;
      for (std::size_t i = 0; i < schedule_eps.size(); ++i) out.push_back({schedule_eps[i], schedule_eta[i]});
      return out;
    }
    return power_schedule(schedule_eps, schedule_power);
  }

  std::size_t ell() const { return (fast || !sigma2.is_zero()) ? 1 : 0; }
  bool sigma1_depends_on_y() const { return sigma1.uses_y(); }
};

/// Parses configuration text. Unknown keys and duplicates are errors.
inline ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {}) {
  namespace po = boost::program_options;
  std::istringstream is(text);
  po::options_description none;
  po::parsed_options parsed(&none);
  try {
    parsed = po::parse_config_file(is, none, true);
  } catch (const po::error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  std::map<std::string, std::string> kv;
  for (const auto& o : parsed.options) {
    if (o.value.size() != 1) throw ConfigError("config: key '" + o.string_key + "' has no value");
    if (!kv.emplace(o.string_key, o.value.front()).second)
      throw ConfigError("config: duplicate key '" + o.string_key + "'");
  }

  ExperimentConfig cfg;
  cfg.source = text;
  std::set<std::string> used;
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    used.insert(key);
    return config_detail::trim(it->second);
  };
  auto num = [&](const std::string& key, double& dst) {
    if (auto v = get(key)) dst = config_detail::parse_number(*v, key);
  };
  auto opt_num = [&](const std::string& key, std::optional<double>& dst) {
    if (auto v = get(key)) dst = config_detail::parse_number(*v, key);
  };
  auto count = [&](const std::string& key, auto& dst, double lo) {
    if (auto v = get(key)) {
      const double d = config_detail::parse_number(*v, key);
      if (!(d >= lo) || d != std::floor(d) || d > 1e15) throw ConfigError(key + ": expected an integer >= " + std::to_string(static_cast<long long>(lo)));
      dst = static_cast<std::remove_reference_t<decltype(dst)>>(d);
    }
  };
  auto coeff = [&](const std::string& key, Builtin& dst) {
    if (auto v = get(key)) dst = config_detail::parse_builtin(*v, key);
  };
  auto list = [&](const std::string& key, std::vector<double>& dst) {
    if (auto v = get(key)) dst = config_detail::parse_list(*v, key);
  };

  if (auto v = get("experiment.name")) cfg.name = *v;
  if (auto v = get("experiment.run"))
    for (const auto& w : config_detail::parse_words(*v)) cfg.run.push_back(parse_kind(w));
  count("experiment.seed", cfg.seed, 0);
  count("experiment.trials", cfg.trials, 1);
  count("experiment.parallel", cfg.parallel, 1);

  num("model.H", cfg.H);
  num("model.eps", cfg.eps);
  opt_num("model.eta", cfg.eta);
  opt_num("model.eta_power", cfg.eta_power);
  num("model.x0", cfg.x0);
  num("model.y0", cfg.y0);
  if (auto v = get("model.fast")) {
    if (*v == "on") cfg.fast = true;
    else if (*v == "off") cfg.fast = false;
    else throw ConfigError("model.fast: expected 'on' or 'off'");
  }
  opt_num("model.beta", cfg.beta);
  coeff("model.b", cfg.b);
  coeff("model.c", cfg.c);
  coeff("model.sigma1", cfg.sigma1);
  coeff("model.sigma2", cfg.sigma2);
  coeff("model.f", cfg.f);
  coeff("model.g", cfg.g);
  coeff("model.tau", cfg.tau);

  count("grid.n", cfg.grid.n, 2);
  num("grid.T", cfg.grid.T);
  count("grid.substeps", cfg.grid.substeps, 0);

  list("schedule.eps", cfg.schedule_eps);
  list("schedule.eta", cfg.schedule_eta);
  num("schedule.eta_power", cfg.schedule_power);

  if (auto v = get("functional.kind")) {
    using K = Functional::Kind;
    static const std::map<std::string, K> kinds{{"zero", K::zero},
                                                {"constant", K::constant},
                                                {"terminal-penalty", K::terminal_penalty},
                                                {"smoothed-exceedance", K::smoothed_exceedance}};
    const auto it = kinds.find(*v);
    if (it == kinds.end()) throw ConfigError("functional.kind: unknown functional '" + *v + "'");
    cfg.functional.kind = it->second;
  }
  num("functional.kappa", cfg.functional.kappa);
  num("functional.rho", cfg.functional.rho);
  if (auto v = get("functional.a")) cfg.functional.lo = cfg.functional.hi = config_detail::parse_number(*v, "functional.a");
  num("functional.lo", cfg.functional.lo);
  num("functional.hi", cfg.functional.hi);
  num("functional.width", cfg.functional.width);
  num("functional.cap", cfg.functional.cap);

  num("rare_event.a", cfg.threshold);
  count("rare_event.pilot_trials", cfg.pilot_trials, 0);

  list("path.psi", cfg.path_psi);
  if (auto v = get("path.file")) {
    std::filesystem::path p(*v);
    cfg.path_file = (p.is_relative() && !base_dir.empty() ? base_dir / p : p).string();
  }
  count("path.n", cfg.path_n, 3);
  num("path.T", cfg.path_T);

  if (auto v = get("rate.method")) cfg.rate_method = *v;
  opt_num("rate.hurst", cfg.rate_hurst);
  list("rate.hurst_list", cfg.hurst_list);

  count("fbm.dim", cfg.fbm_dim, 1);

  for (const auto& [name, member] : Defaults::fields()) num("tolerances." + name, cfg.tol.*member);

  for (const auto& [k, v] : kv)
    if (!used.count(k)) throw ConfigError("config: unknown key '" + k + "'");

  // Static ranges; model-level conditions are left to validate().
  if (!(cfg.grid.T > 0.0) || !(cfg.path_T > 0.0)) throw ConfigError("grid.T and path.T must be positive");
  if (!(cfg.eps > 0.0)) throw ConfigError("model.eps must be positive");
  if (cfg.eta && !(*cfg.eta > 0.0)) throw ConfigError("model.eta must be positive");
  if (cfg.eta && cfg.eta_power) throw ConfigError("model.eta and model.eta_power are mutually exclusive");
  for (const auto* y_only : {&cfg.b, &cfg.f, &cfg.tau})
    if (y_only->uses_x()) throw ConfigError("model: b, f and tau depend on y only");
  if (!cfg.fast && (!cfg.b.is_zero() || !cfg.f.is_zero() || !cfg.g.is_zero() || !cfg.tau.is_zero()))
    throw ConfigError("model: fast = off excludes b, f, g and tau");
  if (cfg.fast && (cfg.f.is_zero() || cfg.tau.is_zero())) throw ConfigError("model: fast = on requires f and tau");
  if (cfg.rate_method != "explicit" && cfg.rate_method != "general" && cfg.rate_method != "fw-half" &&
      cfg.rate_method != "tilde-half")
    throw ConfigError("rate.method: expected explicit, general, fw-half or tilde-half");
  for (const auto& [name, member] : Defaults::fields())
    if (!(cfg.tol.*member > 0.0)) throw ConfigError("tolerances." + name + " must be positive");
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + file.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), file.parent_path());
}

/// 64-bit FNV-1a of the config text, hex encoded.
inline std::string config_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// SlowFastSpec realizing the configured built-ins at (eps, eta).
inline SlowFastSpec build_spec(const ExperimentConfig& cfg, std::optional<EpsEta> ee = std::nullopt) {
  SlowFastSpec s;
  s.m = 1;
  s.k = 1;
  s.fast = cfg.fast ? 1 : 0;
  s.ell = cfg.ell();
  s.H = cfg.H;
  s.eps = ee ? ee->eps : cfg.eps;
  s.eta = ee ? ee->eta : cfg.effective_eta();
  s.x0 = Vec::Constant(1, cfg.x0);
  s.y0 = cfg.fast ? Vec::Constant(1, cfg.y0) : Vec(0);
  s.beta = cfg.beta;
  s.sigma1_depends_on_y = cfg.sigma1_depends_on_y();
  auto yv = [](const Vec& y) { return y.size() ? y[0] : 0.0; };
  if (!cfg.b.is_zero()) s.b = [fn = cfg.b, yv](const Vec& y) { return Vec::Constant(1, fn(0.0, yv(y))); };
  if (!cfg.c.is_zero())
    s.c = [fn = cfg.c, yv](const Vec& x, const Vec& y) { return Vec::Constant(1, fn(x[0], yv(y))); };
  if (!cfg.sigma1.is_zero())
    s.sigma1 = [fn = cfg.sigma1, yv](const Vec& x, const Vec& y) { return Mat::Constant(1, 1, fn(x[0], yv(y))); };
  if (!cfg.sigma2.is_zero())
    s.sigma2 = [fn = cfg.sigma2, yv](const Vec& x, const Vec& y) { return Mat::Constant(1, 1, fn(x[0], yv(y))); };
  if (!cfg.f.is_zero()) s.f = [fn = cfg.f](const Vec& y) { return Vec::Constant(1, fn(0.0, y[0])); };
  if (!cfg.g.is_zero())
    s.g = [fn = cfg.g](const Vec& x, const Vec& y) { return Vec::Constant(1, fn(x[0], y[0])); };
  if (!cfg.tau.is_zero()) s.tau = [fn = cfg.tau](const Vec& y) { return Mat::Constant(1, 1, fn(0.0, y[0])); };
  return s;
}

/// Invariant measure, Poisson solution and averaged drift of a configured model.
struct LimitModel {
  SlowFastSpec spec;
  std::optional<InvariantMeasure> mu;
  PoissonSolution psol;
  DiscreteMeasure rule;
  LimitDrift drift;
};

inline LimitModel build_limit(const ExperimentConfig& cfg) {
  LimitModel lm;
  lm.spec = build_spec(cfg);
  if (cfg.fast) {
    lm.mu = invariant_measure(lm.spec, std::nullopt, static_cast<std::size_t>(cfg.tol.poisson_grid));
    lm.psol = solve_poisson(lm.spec, *lm.mu, cfg.tol.centering);
    lm.rule = lm.mu->gauss_rule(static_cast<std::size_t>(cfg.tol.gauss_nodes));
  } else {
    lm.psol = PoissonSolution::zero(1, 0);
    lm.rule = DiscreteMeasure::point(Vec(0));
  }
  lm.drift = make_limit_drift(lm.spec, lm.psol, lm.rule);
  return lm;
}

/// phi' = cbar(phi) + gradPsiG_bar(phi) + sigma1_bar(phi) psi(t) from x0, by RK4 on a 16x finer grid.
inline GridPath integrate_limit_path(const LimitDrift& d, const std::function<double(double)>& psi, double T,
                                     std::size_t n) {
  GridPath phi = GridPath::on_interval(T, n, 1);
  const std::size_t sub = 16;
  const double h = phi.dt() / static_cast<double>(sub);
  double x = d.x0 ? (*d.x0)[0] : 0.0, t = 0.0;
  auto rhs = [&](double tt, double xx) {
    const Vec X = Vec::Constant(1, xx);
    double v = psi(tt) * d.sigma1_bar(X)(0, 0);
    if (d.cbar) v += d.cbar(X)[0];
    if (d.gradPsiG_bar) v += d.gradPsiG_bar(X)[0];
    return v;
  };
  phi(0) = x;
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t s = 0; s < sub; ++s) {
      const double k1 = rhs(t, x), k2 = rhs(t + h / 2, x + h / 2 * k1), k3 = rhs(t + h / 2, x + h / 2 * k2),
                   k4 = rhs(t + h, x + h * k3);
      x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
      t += h;
    }
    phi(i) = x;
  }
  return phi;
}

/// The configured rate path: a CSV file, or the controlled limit path for psi = sum c_i t^i.
inline GridPath config_path(const ExperimentConfig& cfg, const LimitDrift& d) {
  if (!cfg.path_file.empty()) return load_csv(cfg.path_file);
  auto psi = [c = cfg.path_psi](double t) {
    double v = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) v = v * t + c[i];
    return v;
  };
  return integrate_limit_path(d, psi, cfg.path_T, cfg.path_n);
}

/// Closed-form inf{S(phi) : phi_T >= a} when sigma1 is the only nonzero slow coefficient and depends on y alone.
inline std::optional<double> exceedance_prediction(const ExperimentConfig& cfg, const LimitModel& lm) {
  if (!cfg.b.is_zero() || !cfg.c.is_zero() || !cfg.sigma2.is_zero() || cfg.sigma1.uses_x()) return std::nullopt;
  const double sbar = lm.drift.sigma1_bar(Vec::Constant(1, cfg.x0))(0, 0);
  return gaussian_oracle::exceedance_rate(cfg.threshold, cfg.x0, sbar, cfg.grid.T, cfg.H);
}

struct ValidationCheck {
  enum class Status { pass, warn, fail };
  std::string name;
  Status status = Status::pass;
  std::string detail;
};

inline const char* to_string(ValidationCheck::Status s) {
  switch (s) {
    case ValidationCheck::Status::pass: return "pass";
    case ValidationCheck::Status::warn: return "warn";
    case ValidationCheck::Status::fail: return "fail";
  }
  return "?";
}

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool blocking() const {
    for (const auto& c : checks)
      if (c.status == ValidationCheck::Status::fail) return true;
    return false;
  }
  bool has_warnings() const {
    for (const auto& c : checks)
      if (c.status == ValidationCheck::Status::warn) return true;
    return false;
  }
};

/// Numeric spot checks of the configured model. Side-effect free.
inline ValidationReport validate(const ExperimentConfig& cfg) {
  using S = ValidationCheck::Status;
  ValidationReport rep;
  auto add = [&](std::string name, S s, std::string detail) { rep.checks.push_back({std::move(name), s, std::move(detail)}); };
  auto fmt = [](double v) {
    std::ostringstream o;
    o.precision(6);
    o << v;
    return o.str();
  };

  const SlowFastSpec spec = build_spec(cfg);

  // Hurst range and the sigma1 dependence branch.
  if (cfg.sigma1_depends_on_y()) {
    if (!(cfg.H > 0.75 && cfg.H < 1.0))
      add("hurst-branch", S::fail, "sigma1 depends on y, so H must lie in (3/4, 1); H = " + fmt(cfg.H));
    else if (!cfg.beta || !(*cfg.beta > 2.0 * (1.0 - cfg.H) && *cfg.beta < 0.5))
      add("hurst-branch", S::fail, "sigma1 depends on y: declare beta in (2(1-H), 1/2)");
    else
      add("hurst-branch", S::pass, "y-dependent sigma1 with H = " + fmt(cfg.H) + ", beta = " + fmt(*cfg.beta));
  } else if (cfg.H > 0.5 && cfg.H < 1.0) {
    add("hurst-branch", S::pass, "sigma1 = sigma1(x), H = " + fmt(cfg.H) + " in (1/2, 1)");
  } else {
    add("hurst-branch", S::fail, "H must lie in (1/2, 1); H = " + fmt(cfg.H));
  }

  const bool branch_ok = rep.checks.back().status == S::pass;
  if (branch_ok) {
    try {
      spec.validate();
      add("spec", S::pass, "dimensions, shapes and single (eps, eta) regime");
    } catch (const InvalidInput& e) {
      add("spec", S::fail, e.what());
    }
  }

  // Regime along the schedule.
  try {
    const auto sched = cfg.schedule();
    check_schedule(sched, cfg.sigma1_depends_on_y() ? cfg.beta : std::nullopt);
    std::string detail = "sqrt(eta/eps):";
    for (const auto& e : sched) detail += " " + fmt(std::sqrt(e.eta / e.eps));
    if (cfg.sigma1_depends_on_y() && cfg.beta) {
      for (const auto& e : sched)
        if (std::sqrt(e.eps) > std::pow(e.eta, *cfg.beta)) throw InvalidInput("sqrt(eps) <= eta^beta fails at eps = " + fmt(e.eps));
    }
    add("schedule", S::pass, detail);
  } catch (const std::exception& e) {
    add("schedule", S::fail, e.what());
  }

  if (!cfg.fast) {
    add("fast-process", S::pass, "no fast process: averages are evaluations at x");
    if (!cfg.sigma2.is_zero()) add("qqt-bar", S::pass, "sigma2 present");
    return rep;
  }

  // tau non-degeneracy, centering and QQ^T-bar through poisson_cell.
  std::optional<InvariantMeasure> mu;
  try {
    mu = invariant_measure(spec, std::nullopt, static_cast<std::size_t>(cfg.tol.poisson_grid));
    double tmin = std::numeric_limits<double>::infinity();
    for (double y : mu->y) tmin = std::min(tmin, std::abs(cfg.tau(0.0, y)));
    add("tau", S::pass, "min |tau| on [-" + fmt(mu->L) + ", " + fmt(mu->L) + "] = " + fmt(tmin));
  } catch (const DegeneracyError& e) {
    add("tau", S::fail, e.what());
    return rep;
  } catch (const NumericalError& e) {
    add("invariant-measure", S::fail, e.what());
    return rep;
  }

  PoissonSolution psol = PoissonSolution::zero(1, 1);
  if (cfg.b.is_zero()) {
    add("centering", S::pass, "b = 0");
  } else {
    const double avg = average_coeff([&](const Vec&, const Vec& y) { return cfg.b(0.0, y[0]); }, *mu, spec.x0);
    if (std::abs(avg) < cfg.tol.centering) {
      add("centering", S::pass, "|int b dmu| = " + fmt(std::abs(avg)));
      psol = solve_poisson(spec, *mu, cfg.tol.centering);
    } else {
      add("centering", S::fail, "|int b dmu| = " + fmt(std::abs(avg)) + " >= " + fmt(cfg.tol.centering));
      return rep;
    }
  }

  const auto eq = effective_q(spec, psol, mu->gauss_rule(static_cast<std::size_t>(cfg.tol.gauss_nodes)), spec.x0,
                              cfg.tol.qqt_min_eigenvalue);
  add("qqt-bar", eq.nondegenerate ? S::pass : S::warn,
      "min eigenvalue at x0 = " + fmt(eq.min_eigenvalue) +
          (eq.nondegenerate ? "" : " (general and fw-half rate forms unavailable)"));
  return rep;
}

}  // namespace fracldp
