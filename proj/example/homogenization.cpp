// Slow-fast system dX = (-X + Y) dt + sqrt(eps) dB^H with a fast OU process Y.
// Prints the mean sup-distance between X and the averaged limit x0 e^{-t}
// as eps shrinks with eta = eps^{3/2}.

#include <fracldp/multiscale_sim.hpp>

#include <cmath>
#include <cstdio>

using namespace fracldp;

int main() {
  const std::size_t n = 101, trials = 50;
  std::printf("%8s %10s %14s\n", "eps", "eta", "mean sup err");
  for (double eps : {0.1, 0.03, 0.01, 0.003}) {
    SlowFastSpec s;
    s.H = 0.75;
    s.eps = eps;
    s.eta = std::pow(eps, 1.5);
    s.x0 = Vec::Constant(1, 1.0);
    s.y0 = Vec::Zero(1);
    s.c = [](const Vec& x, const Vec& y) { return Vec(-x + y); };
    s.sigma1 = [](const Vec&, const Vec&) { return Mat::Constant(1, 1, 1.0); };
    s.f = [](const Vec& y) { return Vec(-y); };
    s.tau = [](const Vec&) { return Mat::Constant(1, 1, std::sqrt(2.0)); };

    const auto sub = default_substeps(1.0 / (n - 1), s.eta);
    NoiseGenerator gen(s.H, (n - 1) * sub.value + 1, 1.0, s.k, s.ell);
    double total = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const auto X = simulate(s, gen.draw(1, t), sub.value).X;
      double e = 0.0;
      for (std::size_t i = 0; i < X.size(); ++i) e = std::max(e, std::abs(X(i) - std::exp(-X.time(i))));
      total += e;
    }
    std::printf("%8.3g %10.3g %14.4f\n", eps, s.eta, total / trials);
  }
}
