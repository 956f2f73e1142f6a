// Rate of the path phi(t) = t for X = sqrt(eps) B^H as H approaches 1/2.
// The explicit and general evaluators agree; the H = 1/2 value is 1/2.

#include <fracldp/rate_fn.hpp>

#include <cstdio>

using namespace fracldp;

int main() {
  LimitDrift drift;
  drift.cbar = [](const Vec&) { return Vec(Vec::Zero(1)); };
  drift.sigma1_bar = [](const Vec&) { return Mat(Mat::Identity(1, 1)); };
  drift.sigma1_sq_bar = [](const Vec&) { return Mat(Mat::Identity(1, 1)); };
  drift.x0 = Vec::Zero(1);

  const std::size_t n = 513;
  const auto phi = GridPath::from_function(0.0, 1.0 / (n - 1), n, [](double t) { return t; });
  std::printf("%6s %12s %12s\n", "H", "explicit", "general");
  for (double H : {0.9, 0.75, 0.6, 0.55, 0.52}) {
    const HurstContext ctx(H, n, phi.dt());
    std::printf("%6.2f %12.6f %12.6f\n", H, eval_rate_explicit(phi, drift, ctx).value,
                eval_rate_general(phi, drift, ctx).value);
  }
  std::printf("%6s %12.6f\n", "1/2", eval_rate_tilde_half(phi, drift).value);
}
