#include <fracldp/config.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace fracldp;

namespace {

const char* ou_text = R"(
# OU homogenization
[experiment]
name = ou
run = simulate, poisson
seed = 7
trials = 20

[model]
H = 0.7
eps = 0.01
eta_power = 1.5
x0 = 1
c = linear(-1, 1)
sigma1 = const(1)
f = ou(1)
tau = const(sqrt(2))
)";

const char* cos_text = R"(
[model]
H = 0.9
beta = 0.4
eta_power = 1.2
sigma1 = cos(1, 1)
f = ou(1)
tau = const(sqrt(2))
[schedule]
eps = 0.1, 0.05, 0.02
eta_power = 1.2
)";

}  // namespace

TEST(Config, ParsesSectionsAndBuiltins) {
  const auto cfg = parse_config(ou_text);
  EXPECT_EQ(cfg.name, "ou");
  ASSERT_EQ(cfg.run.size(), 2u);
  EXPECT_EQ(cfg.run[0], ExperimentKind::simulate);
  EXPECT_EQ(cfg.run[1], ExperimentKind::poisson);
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.trials, 20u);
  EXPECT_DOUBLE_EQ(cfg.effective_eta(), std::pow(0.01, 1.5));
  EXPECT_DOUBLE_EQ(cfg.tau(0.0, 3.0), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(cfg.c(2.0, 0.5), -1.5);
  EXPECT_DOUBLE_EQ(cfg.f(0.0, 2.0), -2.0);
  EXPECT_FALSE(cfg.sigma1_depends_on_y());
  EXPECT_EQ(cfg.ell(), 1u);
}

TEST(Config, BuiltinLibraryValues) {
  using config_detail::parse_builtin;
  EXPECT_DOUBLE_EQ(parse_builtin("cos(2, 3)", "k")(0.0, 0.5), 2.0 * std::cos(1.5));
  EXPECT_DOUBLE_EQ(parse_builtin("cos", "k")(0.0, 0.5), std::cos(0.5));
  EXPECT_DOUBLE_EQ(parse_builtin("sin(1, 2)", "k")(0.0, 0.5), std::sin(1.0));
  EXPECT_DOUBLE_EQ(parse_builtin("cubic(-1, -1)", "k")(0.0, 2.0), -10.0);
  EXPECT_DOUBLE_EQ(parse_builtin("tanh(2)", "k")(0.0, 0.5), 2.0 * std::tanh(0.5));
  EXPECT_DOUBLE_EQ(parse_builtin("linear(2)", "k")(3.0, 5.0), 6.0);
  EXPECT_DOUBLE_EQ(parse_builtin("const(-sqrt(4))", "k")(0.0, 0.0), -2.0);
  EXPECT_DOUBLE_EQ(parse_builtin("const(pi)", "k")(0.0, 0.0), std::numbers::pi);
  EXPECT_THROW(parse_builtin("exp(1)", "k"), ConfigError);
  EXPECT_THROW(parse_builtin("ou", "k"), ConfigError);
  EXPECT_THROW(parse_builtin("const(1, 2)", "k"), ConfigError);
  EXPECT_THROW(parse_builtin("const(abc)", "k"), ConfigError);
  EXPECT_THROW(parse_builtin("const(sqrt(-1))", "k"), ConfigError);
}

TEST(Config, Rejections) {
  EXPECT_THROW(parse_config("[model]\nfoo = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[model]\nH = 0.7\nH = 0.8\n"), ConfigError);
  EXPECT_THROW(parse_config("[experiment]\nrun = bogus\n"), ConfigError);
  EXPECT_THROW(parse_config("[model]\nfast = off\nf = ou(1)\n"), ConfigError);
  EXPECT_THROW(parse_config("[model]\nf = zero\n"), ConfigError);
  EXPECT_THROW(parse_config("[model]\nb = linear(1, 1)\nf = ou(1)\ntau = const(1)\n"), ConfigError);
  EXPECT_THROW(parse_config("[grid]\nn = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[grid]\nn = 2.5\n"), ConfigError);
  EXPECT_THROW(parse_config("[tolerances]\ncentering = -1\n"), ConfigError);
  EXPECT_THROW(parse_config("[rate]\nmethod = magic\nf = ou(1)\n"), ConfigError);
}

TEST(Config, TolerancesOverrideDefaults) {
  const auto cfg = parse_config(std::string(ou_text) + "[tolerances]\ncentering = 1e-6\n");
  EXPECT_DOUBLE_EQ(cfg.tol.centering, 1e-6);
  EXPECT_DOUBLE_EQ(cfg.tol.max_condition, Defaults{}.max_condition);
}

TEST(Config, HashIsStableAndSensitive) {
  EXPECT_EQ(config_hash(""), "cbf29ce484222325");
  EXPECT_EQ(config_hash("a"), "af63dc4c8601ec8c");
  EXPECT_NE(config_hash(ou_text), config_hash(std::string(ou_text) + " "));
}

TEST(Config, BuildSpecEvaluatesBuiltins) {
  const auto cfg = parse_config(ou_text);
  const auto s = build_spec(cfg);
  EXPECT_NO_THROW(s.validate());
  const Vec x = Vec::Constant(1, 2.0), y = Vec::Constant(1, 0.5);
  EXPECT_DOUBLE_EQ(s.c(x, y)[0], -1.5);
  EXPECT_DOUBLE_EQ(s.sigma1(x, y)(0, 0), 1.0);
  EXPECT_FALSE(s.b);
  EXPECT_FALSE(s.sigma2);
  EXPECT_FALSE(s.g);
}

TEST(Validate, OuWithLinearBIsCentered) {
  const auto cfg = parse_config(std::string(ou_text) + "b = linear(0, 1.5)\n");
  const auto rep = validate(cfg);
  EXPECT_FALSE(rep.blocking());
  bool saw = false;
  for (const auto& c : rep.checks)
    if (c.name == "centering") {
      saw = true;
      EXPECT_EQ(c.status, ValidationCheck::Status::pass);
    }
  EXPECT_TRUE(saw);
}

TEST(Validate, CenteringViolationBlocks) {
  const auto rep = validate(parse_config(std::string(ou_text) + "b = linear(0, 1, 0.5)\n"));
  EXPECT_TRUE(rep.blocking());
}

TEST(Validate, CosineSigmaNeedsHAboveThreeQuarters) {
  EXPECT_FALSE(validate(parse_config(cos_text)).blocking());
  std::string low(cos_text);
  low.replace(low.find("H = 0.9"), 7, "H = 0.7");
  const auto rep = validate(parse_config(low));
  EXPECT_TRUE(rep.blocking());
  EXPECT_EQ(rep.checks.front().name, "hurst-branch");
  EXPECT_EQ(rep.checks.front().status, ValidationCheck::Status::fail);
}

TEST(Validate, XOnlySigmaAcceptsLowH) {
  const auto rep = validate(parse_config("[model]\nH = 0.6\nsigma1 = linear(0.1, 0, 1)\nf = ou(1)\ntau = const(1)\n"));
  EXPECT_FALSE(rep.blocking());
  EXPECT_EQ(rep.checks.front().status, ValidationCheck::Status::pass);
}

TEST(Validate, BetaRegimeAlongSchedule) {
  std::string bad(cos_text);
  bad.replace(bad.rfind("eta_power = 1.2"), 15, "eta_power = 1.5");
  const auto rep = validate(parse_config(bad));
  EXPECT_TRUE(rep.blocking());
  for (const auto& c : rep.checks)
    EXPECT_EQ(c.status == ValidationCheck::Status::fail, c.name == "schedule") << c.name;
}

TEST(Validate, DegenerateQQtIsAWarning) {
  // b = 0 and sigma2 = 0: QQ^T-bar vanishes.
  const auto rep = validate(parse_config(ou_text));
  EXPECT_FALSE(rep.blocking());
  EXPECT_TRUE(rep.has_warnings());
}

TEST(Validate, IsSideEffectFree) {
  const auto cfg = parse_config(ou_text);
  const auto a = validate(cfg), b = validate(cfg);
  ASSERT_EQ(a.checks.size(), b.checks.size());
  for (std::size_t i = 0; i < a.checks.size(); ++i) EXPECT_EQ(a.checks[i].detail, b.checks[i].detail);
}

TEST(LimitModel, CosineAverageAndPrediction) {
  auto cfg = parse_config(std::string(cos_text) + "[rare_event]\na = 0.5\n");
  const auto lm = build_limit(cfg);
  EXPECT_NEAR(lm.drift.sigma1_bar(Vec::Zero(1))(0, 0), std::exp(-0.5), 1e-9);
  const auto pred = exceedance_prediction(cfg, lm);
  ASSERT_TRUE(pred);
  EXPECT_NEAR(*pred, std::exp(1.0) * 0.25 / 2.0, 1e-8);
}

TEST(LimitModel, PathFromControlSolvesLimitOde) {
  // c = -x, sigma1 = 1, psi = 1: phi = 1 - e^{-t}.
  const auto cfg = parse_config("[model]\nfast = off\nc = linear(-1)\nsigma1 = const(1)\n[path]\npsi = 1\nn = 101\n");
  const auto lm = build_limit(cfg);
  const auto phi = config_path(cfg, lm.drift);
  for (std::size_t i = 0; i < phi.size(); i += 10) EXPECT_NEAR(phi(i), 1.0 - std::exp(-phi.time(i)), 1e-10);
}
