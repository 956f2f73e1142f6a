#pragma once

// Coefficient set of the slow-fast system and the control pair that drives
// its controlled version.
//
// Coefficients are callables on Eigen vectors. An empty callable stands for
// the zero coefficient, which the simulator skips entirely; this keeps pure
// fBm experiments cheap.

#include <fracldp/errors.hpp>
#include <fracldp/grid_path.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>

namespace fracldp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

using FieldY = std::function<Vec(const Vec& y)>;
using FieldXY = std::function<Vec(const Vec& x, const Vec& y)>;
using MatrixY = std::function<Mat(const Vec& y)>;
using MatrixXY = std::function<Mat(const Vec& x, const Vec& y)>;

struct SlowFastSpec {
  std::size_t m = 1;     ///< slow dimension
  std::size_t fast = 1;  ///< fast dimension d - m (0 disables the fast process)
  std::size_t k = 1;     ///< fBm dimension
  std::size_t ell = 1;   ///< Brownian dimension

  FieldY b;         ///< Y -> X
  FieldXY c;        ///< X x Y -> X
  MatrixXY sigma1;  ///< m x k
  MatrixXY sigma2;  ///< m x ell
  FieldY f;         ///< Y -> Y
  FieldXY g;        ///< X x Y -> Y
  MatrixY tau;      ///< fast x ell

  double H = 0.75;
  double eps = 0.01;
  double eta = 1e-3;
  Vec x0 = Vec::Zero(1);
  Vec y0 = Vec::Zero(1);

  /// Whether sigma1 varies with y; selects the regime branch checked by validate().
  bool sigma1_depends_on_y = false;
  std::optional<double> beta;

  /// Checks dimensions, parameter ranges and the regime branch. Throws InvalidInput.
  void validate() const {
    if (!(eps > 0.0) || !(eta > 0.0)) throw InvalidInput("SlowFastSpec: eps and eta must be positive");
    if (!(H > 0.5 && H < 1.0)) throw InvalidInput("SlowFastSpec: H must lie in (1/2, 1)");
    if (m == 0) throw InvalidInput("SlowFastSpec: slow dimension must be positive");
    if (static_cast<std::size_t>(x0.size()) != m) throw InvalidInput("SlowFastSpec: x0 has the wrong dimension");
    if (static_cast<std::size_t>(y0.size()) != fast) throw InvalidInput("SlowFastSpec: y0 has the wrong dimension");
    if (sigma1_depends_on_y) {
      if (!(H > 0.75)) throw InvalidInput("SlowFastSpec: y-dependent sigma1 requires H in (3/4, 1)");
      if (!beta) throw InvalidInput("SlowFastSpec: y-dependent sigma1 requires a declared beta");
      if (!(*beta > 2.0 * (1.0 - H) && *beta < 0.5))
        throw InvalidInput("SlowFastSpec: beta must lie in (2(1-H), 1/2)");
      if (std::sqrt(eps) > std::pow(eta, *beta))
        throw InvalidInput("SlowFastSpec: sqrt(eps) <= eta^beta is violated");
    }
    if (fast == 0 && (b || f || g || tau))
      throw InvalidInput("SlowFastSpec: fast coefficients given without a fast process");
    const auto check = [](bool ok, const char* what) {
      if (!ok) throw InvalidInput(std::string("SlowFastSpec: ") + what + " returns the wrong shape");
    };
    const auto mi = static_cast<Eigen::Index>(m), fi = static_cast<Eigen::Index>(fast);
    if (b) check(b(y0).size() == mi, "b");
    if (c) check(c(x0, y0).size() == mi, "c");
    if (sigma1) {
      const Mat s = sigma1(x0, y0);
      check(s.rows() == mi && s.cols() == static_cast<Eigen::Index>(k), "sigma1");
    }
    if (sigma2) {
      const Mat s = sigma2(x0, y0);
      check(s.rows() == mi && s.cols() == static_cast<Eigen::Index>(ell), "sigma2");
    }
    if (f) check(f(y0).size() == fi, "f");
    if (g) check(g(x0, y0).size() == fi, "g");
    if (tau) {
      const Mat t = tau(y0);
      check(t.rows() == fi && t.cols() == static_cast<Eigen::Index>(ell), "tau");
    }
  }
};

/// Controls (v1, u2dot) with v1 = K_H^{-1} u1 and u2dot the derivative of u2.
struct ControlPair {
  GridPath v1;
  GridPath u2dot;
  std::optional<double> bound;

  /// L2 energy ||v1||^2 + ||u2dot||^2 by the trapezoid rule.
  double energy() const {
    double e = 0.0;
    for (const GridPath* p : {&v1, &u2dot}) {
      for (std::size_t i = 0; i + 1 < p->size(); ++i)
        for (std::size_t c = 0; c < p->dim(); ++c)
          e += 0.5 * p->dt() * ((*p)(i, c) * (*p)(i, c) + (*p)(i + 1, c) * (*p)(i + 1, c));
    }
    return e;
  }

  void check_bound() const {
    if (bound && energy() > *bound * *bound * (1.0 + 1e-12))
      throw InvalidInput("ControlPair: control energy exceeds the declared bound");
  }

  static ControlPair zero(double dt, std::size_t n, std::size_t k, std::size_t ell) {
    return ControlPair{GridPath(0.0, dt, n, k), GridPath(0.0, dt, n, ell), std::nullopt};
  }
};

}  // namespace fracldp
