// fracldp: command-line front end for simulation, rate-function and Monte
// Carlo experiments.
//
// Exit codes: 0 success, 2 validation or usage failure, 3 numerical failure,
// 1 unexpected I/O or internal error.

#include "experiments.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iostream>

#ifndef FRACLDP_VERSION
#define FRACLDP_VERSION "unknown"
#endif

namespace {

using namespace fracldp;
using namespace fracldp::cli;

constexpr int exit_validation = 2;
constexpr int exit_numerical = 3;

fs::path default_out_dir() {
  if (const char* env = std::getenv("FRACLDP_OUT_DIR"); env && *env) return env;
  return "fracldp-out";
}

fs::path resolve_out(const std::string& given, const std::string& fallback) {
  return given.empty() ? default_out_dir() / fallback : fs::path(given);
}

void print_report(const ValidationReport& rep, std::ostream& os) {
  for (const auto& c : rep.checks) os << "  [" << to_string(c.status) << "] " << c.name << ": " << c.detail << "\n";
}

/// Validates and reports; returns false when execution must stop.
bool gate(const ExperimentConfig& cfg, bool force) {
  const auto rep = validate(cfg);
  if (rep.blocking() || rep.has_warnings()) {
    std::cerr << "validation of '" << cfg.name << "':\n";
    print_report(rep, std::cerr);
  }
  if (rep.blocking() && !force) {
    std::cerr << "validation failed; rerun with --force to ignore\n";
    return false;
  }
  return true;
}

std::vector<double> parse_hurst_list(const std::string& s) { return config_detail::parse_list(s, "--hurst-list"); }

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunArgs {
  std::string config;
  std::string out_dir;
  bool force = false;
  unsigned parallel = 0;
};

/// Runs every experiment listed in the config and writes a manifest, also on failure.
int run_config(const RunArgs& a) {
  const auto cfg = load_config(a.config);
  const fs::path dir = a.out_dir.empty() ? default_out_dir() / cfg.name : fs::path(a.out_dir);
  fs::create_directories(dir);
  const unsigned parallel = a.parallel ? a.parallel : cfg.parallel;

  json manifest{{"tool", "fracldp"},
                {"version", FRACLDP_VERSION},
                {"config", fs::path(a.config).filename().string()},
                {"config_hash", config_hash(cfg.source)},
                {"seed", cfg.seed},
                {"parallel", parallel},
                {"experiments", json::array()}};
  for (auto k : cfg.run) manifest["experiments"].push_back(to_string(k));

  const auto rep = validate(cfg);
  write_json(dir / "validation.json", to_json(rep));
  json files = json::array({"validation.json"});
  int code = 0;
  std::string status = "ok", error;
  if (rep.blocking() && !a.force) {
    print_report(rep, std::cerr);
    status = "validation-failed";
    code = exit_validation;
  } else {
    try {
      for (auto kind : cfg.run) {
        Files out;
        switch (kind) {
          case ExperimentKind::simulate:
            out = simulate_experiment(cfg, {cfg.trials, cfg.seed, parallel}, dir / "simulate");
            break;
          case ExperimentKind::poisson: out = poisson_experiment(cfg, dir / "poisson.json"); break;
          case ExperimentKind::rate:
            out = rate_experiment(cfg, "", cfg.rate_method, std::nullopt, dir / "rate.json");
            break;
          case ExperimentKind::limit_study:
            out = limit_study_experiment(cfg, "", cfg.hurst_list, dir / "limit_study.csv");
            break;
          case ExperimentKind::laplace: out = laplace_experiment(cfg, parallel, dir / "laplace.csv"); break;
          case ExperimentKind::rare_event: out = rare_event_experiment(cfg, parallel, dir / "rare_event.csv"); break;
          case ExperimentKind::sample_fbm:
            out = sample_fbm_csv(cfg.H, cfg.grid.n, cfg.grid.T, cfg.fbm_dim, cfg.seed, dir / "fbm.csv");
            break;
        }
        for (const auto& f : out) files.push_back(fs::relative(f, dir).generic_string());
      }
    } catch (const NumericalError& e) {
      status = "numerical-failure";
      error = e.what();
      code = exit_numerical;
    } catch (const ConfigError& e) {
      status = "validation-failed";
      error = e.what();
      code = exit_validation;
    } catch (const InvalidInput& e) {
      status = "validation-failed";
      error = e.what();
      code = exit_validation;
    }
  }
  manifest["files"] = files;
  manifest["status"] = status;
  if (!error.empty()) {
    manifest["error"] = error;
    std::cerr << "error: " << error << "\n";
  }
  manifest["timestamp"] = utc_timestamp();
  write_json(dir / "manifest.json", manifest);
  if (code == 0) std::cout << "wrote " << files.size() << " files to " << dir.string() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fracldp: fractional slow-fast large deviations toolkit"};
  app.set_version_flag("--version", FRACLDP_VERSION);
  app.require_subcommand(1);
  std::function<int()> action;

  // sample-fbm
  auto* s_fbm = app.add_subcommand("sample-fbm", "Sample fractional Brownian motion paths to CSV");
  double f_H = 0.7, f_T = 1.0;
  std::size_t f_n = 513, f_dim = 1;
  std::uint64_t f_seed = 0;
  std::string f_out;
  s_fbm->add_option("--hurst", f_H, "Hurst index in (0, 1)")->required();
  s_fbm->add_option("--n", f_n, "grid points including t = 0")->check(CLI::Range(2ul, 1ul << 26));
  s_fbm->add_option("--horizon", f_T, "time horizon T")->check(CLI::PositiveNumber);
  s_fbm->add_option("--dim", f_dim, "number of independent components")->check(CLI::Range(1ul, 1024ul));
  s_fbm->add_option("--seed", f_seed, "RNG seed");
  s_fbm->add_option("--out", f_out, "output CSV");
  s_fbm->callback([&] {
    action = [&] {
      const auto out = resolve_out(f_out, "fbm.csv");
      sample_fbm_csv(f_H, f_n, f_T, f_dim, f_seed, out);
      std::cout << out.string() << "\n";
      return 0;
    };
  });

  // simulate
  auto* s_sim = app.add_subcommand("simulate", "Simulate the slow-fast system");
  std::string spec_file, out_dir, out_file, path_file;
  std::optional<std::uint64_t> sim_seed;
  std::optional<std::size_t> sim_trials;
  unsigned parallel = 0;
  bool force = false;
  s_sim->add_option("--spec", spec_file, "config file")->required()->check(CLI::ExistingFile);
  s_sim->add_option("--seed", sim_seed, "override experiment.seed");
  s_sim->add_option("--trials", sim_trials, "override experiment.trials")->check(CLI::PositiveNumber);
  s_sim->add_option("--out-dir", out_dir, "output directory");
  s_sim->add_option("--parallel", parallel, "worker threads");
  s_sim->add_flag("--force", force, "run despite validation failures");
  s_sim->callback([&] {
    action = [&] {
      const auto cfg = load_config(spec_file);
      if (!gate(cfg, force)) return exit_validation;
      const fs::path dir = out_dir.empty() ? default_out_dir() / cfg.name / "simulate" : fs::path(out_dir);
      const auto files = simulate_experiment(
          cfg, {sim_trials.value_or(cfg.trials), sim_seed.value_or(cfg.seed), parallel ? parallel : cfg.parallel}, dir);
      std::cout << "wrote " << files.size() << " files to " << dir.string() << "\n";
      return 0;
    };
  });

  // poisson
  auto* s_poi = app.add_subcommand("poisson", "Invariant density, Poisson solution and QQ^T-bar");
  s_poi->add_option("--spec", spec_file, "config file")->required()->check(CLI::ExistingFile);
  s_poi->add_option("--out", out_file, "output JSON");
  s_poi->add_flag("--force", force, "run despite validation failures");
  s_poi->callback([&] {
    action = [&] {
      const auto cfg = load_config(spec_file);
      if (!gate(cfg, force)) return exit_validation;
      const auto out = resolve_out(out_file, "poisson.json");
      poisson_experiment(cfg, out);
      std::cout << out.string() << "\n";
      return 0;
    };
  });

  // rate
  auto* s_rate = app.add_subcommand("rate", "Evaluate a rate functional on a path");
  std::string method = "explicit";
  std::optional<double> hurst;
  s_rate->add_option("--spec", spec_file, "config file")->required()->check(CLI::ExistingFile);
  s_rate->add_option("--path", path_file, "path CSV (default: the config's [path])")->check(CLI::ExistingFile);
  s_rate->add_option("--method", method, "rate form")
      ->check(CLI::IsMember({"explicit", "general", "fw-half", "tilde-half"}));
  s_rate->add_option("--hurst", hurst, "Hurst index (default: rate.hurst or model.H)");
  s_rate->add_option("--out", out_file, "output JSON");
  s_rate->add_flag("--force", force, "run despite validation failures");
  s_rate->callback([&] {
    action = [&] {
      const auto cfg = load_config(spec_file);
      if (!gate(cfg, force)) return exit_validation;
      const auto out = resolve_out(out_file, "rate.json");
      rate_experiment(cfg, path_file, method, hurst, out);
      std::cout << out.string() << "\n";
      return 0;
    };
  });

  // limit-study
  auto* s_lim = app.add_subcommand("limit-study", "S^H along a list of Hurst indices next to the H = 1/2 forms");
  std::string hurst_list;
  s_lim->add_option("--spec", spec_file, "config file")->required()->check(CLI::ExistingFile);
  s_lim->add_option("--path", path_file, "path CSV (default: the config's [path])")->check(CLI::ExistingFile);
  s_lim->add_option("--hurst-list", hurst_list, "comma-separated Hurst indices (default: rate.hurst_list)");
  s_lim->add_option("--out", out_file, "output CSV");
  s_lim->add_flag("--force", force, "run despite validation failures");
  s_lim->callback([&] {
    action = [&] {
      const auto cfg = load_config(spec_file);
      if (!gate(cfg, force)) return exit_validation;
      const auto out = resolve_out(out_file, "limit_study.csv");
      limit_study_experiment(cfg, path_file, hurst_list.empty() ? cfg.hurst_list : parse_hurst_list(hurst_list), out);
      std::cout << out.string() << "\n";
      return 0;
    };
  });

  // mc laplace|rare-event
  auto* s_mc = app.add_subcommand("mc", "Monte Carlo checks of the Laplace principle");
  s_mc->require_subcommand(1);
  for (const char* which : {"laplace", "rare-event"}) {
    auto* sub = s_mc->add_subcommand(which, std::string(which) + " experiment along the eps schedule");
    sub->add_option("--config", spec_file, "config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_file, "output CSV");
    sub->add_option("--parallel", parallel, "worker threads");
    sub->add_flag("--force", force, "run despite validation failures");
    const std::string kind = which;
    sub->callback([&, kind] {
      action = [&, kind] {
        const auto cfg = load_config(spec_file);
        if (!gate(cfg, force)) return exit_validation;
        const unsigned p = parallel ? parallel : cfg.parallel;
        const auto out = resolve_out(out_file, kind == "laplace" ? "laplace.csv" : "rare_event.csv");
        if (kind == "laplace") laplace_experiment(cfg, p, out);
        else rare_event_experiment(cfg, p, out);
        std::cout << out.string() << "\n";
        return 0;
      };
    });
  }

  // validate
  auto* s_val = app.add_subcommand("validate", "Spot-check model conditions without running anything");
  s_val->add_option("--spec", spec_file, "config file")->required()->check(CLI::ExistingFile);
  s_val->add_option("--out", out_file, "optional JSON report");
  s_val->callback([&] {
    action = [&] {
      const auto cfg = load_config(spec_file);
      const auto rep = validate(cfg);
      print_report(rep, std::cout);
      if (!out_file.empty()) write_json(out_file, to_json(rep));
      return rep.blocking() ? exit_validation : 0;
    };
  });

  // run
  auto* s_run = app.add_subcommand("run", "Run every experiment listed in a config and write a manifest");
  RunArgs run_args;
  s_run->add_option("--config", run_args.config, "config file")->required()->check(CLI::ExistingFile);
  s_run->add_option("--out-dir", run_args.out_dir, "output directory (default: $FRACLDP_OUT_DIR/<name>)");
  s_run->add_option("--parallel", run_args.parallel, "worker threads");
  s_run->add_flag("--force", run_args.force, "run despite validation failures");
  s_run->callback([&] { action = [&] { return run_config(run_args); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_validation;
  }

  try {
    return action ? action() : exit_validation;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_validation;
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return exit_validation;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return exit_numerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
