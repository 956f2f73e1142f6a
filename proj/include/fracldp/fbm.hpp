#pragma once

// Fractional Brownian motion by circulant embedding of the increment
// covariance (Davies-Harte), with a dense Cholesky fallback, plus the
// regularity diagnostics of paths ([f]_{C^alpha}, W^{alpha,infty} norms).

#include <fracldp/errors.hpp>
#include <fracldp/grid_path.hpp>
#include <fracldp/quadrature.hpp>
#include <fracldp/rng.hpp>

#include <Eigen/Dense>
#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <vector>

namespace fracldp {

namespace detail {

// FFTW planning is not thread-safe; execution on distinct plans is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};
struct FftwPlanDestroy {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(p);
  }
};

}  // namespace detail

/// Autocovariance of unit-step fBm increments (fractional Gaussian noise).
inline double fgn_autocov(double H, std::size_t k) {
  const double kk = static_cast<double>(k);
  const double h2 = 2.0 * H;
  return 0.5 * (std::pow(kk + 1.0, h2) - 2.0 * std::pow(kk, h2) + std::pow(std::abs(kk - 1.0), h2));
}

/// fBm covariance R_H(s,t).
inline double fbm_cov(double H, double s, double t) {
  const double h2 = 2.0 * H;
  return 0.5 * (std::pow(s, h2) + std::pow(t, h2) - std::pow(std::abs(t - s), h2));
}

enum class FbmMethod { automatic, cholesky };

/// Reusable sampler for paths with n grid points on [0, T].
/// Not safe for concurrent use of one object; create one per worker.
class FbmSampler {
 public:
  FbmSampler(double H, std::size_t n, double T, FbmMethod method = FbmMethod::automatic)
      : H_(H), n_(n), T_(T) {
    if (!(H > 0.0 && H < 1.0)) throw InvalidInput("sample_fbm: Hurst index must lie in (0,1)");
    if (n < 2) throw InvalidInput("sample_fbm: need at least two grid points");
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidInput("sample_fbm: horizon must be positive");
    m_ = n - 1;
    scale_ = std::pow(T / static_cast<double>(m_), H);
    M_ = 2 * m_;
    in_.reset(fftw_alloc_complex(M_));
    out_.reset(fftw_alloc_complex(M_));
    {
      std::lock_guard lock(detail::fftw_planner_mutex());
      plan_.reset(fftw_plan_dft_1d(static_cast<int>(M_), in_.get(), out_.get(), FFTW_FORWARD, FFTW_ESTIMATE));
    }
    if (!plan_) throw NumericalError("sample_fbm: FFT planning failed");

    // Eigenvalues of the circulant embedding [r0 .. r_m, r_{m-1} .. r1].
    for (std::size_t k = 0; k < M_; ++k) {
      const std::size_t lag = k <= m_ ? k : M_ - k;
      in_.get()[k][0] = fgn_autocov(H, lag);
      in_.get()[k][1] = 0.0;
    }
    fftw_execute(plan_.get());
    sqrt_lambda_.resize(M_);
    double lmax = 0.0;
    for (std::size_t k = 0; k < M_; ++k) lmax = std::max(lmax, out_.get()[k][0]);
    bool ok = true;
    for (std::size_t k = 0; k < M_; ++k) {
      double l = out_.get()[k][0];
      if (l < 0.0) {
        if (l < -1e-10 * lmax) ok = false;
        l = 0.0;
      }
      sqrt_lambda_[k] = std::sqrt(l / static_cast<double>(M_));
    }
    if (!ok || method == FbmMethod::cholesky) build_cholesky();
  }

  double H() const noexcept { return H_; }
  std::size_t n() const noexcept { return n_; }
  double T() const noexcept { return T_; }
  bool circulant() const noexcept { return chol_.size() == 0; }

  /// Fills a path with `dim` i.i.d. fBm coordinates.
  GridPath sample(NormalSource& z, std::size_t dim) {
    GridPath out(0.0, T_ / static_cast<double>(m_), n_, dim);
    if (dim == 0) return out;
    for (std::size_t c = 0; c < dim;) {
      if (circulant()) {
        // One FFT yields two independent increment sequences (real and imaginary parts).
        for (std::size_t k = 0; k < M_; ++k) {
          in_.get()[k][0] = sqrt_lambda_[k] * z();
          in_.get()[k][1] = sqrt_lambda_[k] * z();
        }
        fftw_execute(plan_.get());
        for (int part = 0; part < 2 && c < dim; ++part, ++c) {
          double acc = 0.0;
          out(0, c) = 0.0;
          for (std::size_t k = 0; k < m_; ++k) {
            acc += scale_ * out_.get()[k][part];
            out(k + 1, c) = acc;
          }
        }
      } else {
        Eigen::VectorXd w(static_cast<Eigen::Index>(m_));
        for (std::size_t k = 0; k < m_; ++k) w[static_cast<Eigen::Index>(k)] = z();
        const Eigen::VectorXd x = chol_ * w;
        double acc = 0.0;
        out(0, c) = 0.0;
        for (std::size_t k = 0; k < m_; ++k) {
          acc += scale_ * x[static_cast<Eigen::Index>(k)];
          out(k + 1, c) = acc;
        }
        ++c;
      }
    }
    return out;
  }

 private:
  void build_cholesky() {
    const auto m = static_cast<Eigen::Index>(m_);
    Eigen::MatrixXd C(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) C(i, j) = fgn_autocov(H_, static_cast<std::size_t>(std::abs(i - j)));
    Eigen::LLT<Eigen::MatrixXd> llt(C);
    if (llt.info() != Eigen::Success)
      throw NumericalError("sample_fbm: circulant embedding and Cholesky factorization both failed");
    chol_ = llt.matrixL();
  }

  double H_;
  std::size_t n_, m_ = 0, M_ = 0;
  double T_;
  double scale_ = 1.0;
  std::unique_ptr<fftw_complex, detail::FftwFree> in_, out_;
  std::unique_ptr<fftw_plan_s, detail::FftwPlanDestroy> plan_;
  std::vector<double> sqrt_lambda_;
  Eigen::MatrixXd chol_;
};

/// k-dimensional fBm with i.i.d. coordinates, n grid points on [0, T].
inline GridPath sample_fbm(double H, std::size_t n, double T, std::size_t dim, std::uint64_t seed) {
  FbmSampler s(H, n, T);
  NormalSource z(seed, 0, StreamTag::fbm);
  return s.sample(z, dim);
}

/// Standard Brownian motion in `dim` dimensions from the given stream.
inline GridPath sample_brownian(std::size_t n, double T, std::size_t dim, NormalSource& z) {
  if (n < 2) throw InvalidInput("sample_brownian: need at least two grid points");
  const double dt = T / static_cast<double>(n - 1);
  GridPath w(0.0, dt, n, dim);
  const double sd = std::sqrt(dt);
  for (std::size_t k = 1; k < n; ++k)
    for (std::size_t c = 0; c < dim; ++c) w(k, c) = w(k - 1, c) + sd * z();
  return w;
}

struct NoiseBundle {
  GridPath bh;  ///< k-dimensional fBm
  GridPath w;   ///< ell-dimensional Brownian motion
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  double H = 0.5;
};

/// Draws bundles for successive trials, reusing the FFT setup.
class NoiseGenerator {
 public:
  NoiseGenerator(double H, std::size_t n, double T, std::size_t k, std::size_t ell)
      : fbm_(H, n, T), k_(k), ell_(ell) {}

  /// Bundle for (seed, stream); fBm and Brownian parts come from disjoint substreams.
  NoiseBundle draw(std::uint64_t seed, std::uint64_t stream) {
    NormalSource zb(seed, stream, StreamTag::fbm);
    NormalSource zw(seed, stream, StreamTag::brownian);
    NoiseBundle b{fbm_.sample(zb, k_), sample_brownian(fbm_.n(), fbm_.T(), ell_, zw), seed, stream, fbm_.H()};
    return b;
  }

  const FbmSampler& fbm() const { return fbm_; }

 private:
  FbmSampler fbm_;
  std::size_t k_, ell_;
};

inline NoiseBundle sample_noise_bundle(double H, std::size_t n, double T, std::size_t k, std::size_t ell,
                                       std::uint64_t seed, std::uint64_t stream = 0) {
  NoiseGenerator g(H, n, T, k, ell);
  return g.draw(seed, stream);
}

struct PathNorms {
  double holder_seminorm = 0.0;  ///< [f]_{C^alpha}
  double w0_norm = 0.0;          ///< sup_t (|f_t| + |Delta_alpha| f_{0,t})
  double wT_norm = 0.0;          ///< sup_{s<t} (|f_t - f_s| / (t-s)^alpha + |Delta^-_alpha| f_{s,t})
};

namespace detail {

inline double vec_dist(const GridPath& f, std::size_t a, std::size_t b) {
  double s = 0.0;
  for (std::size_t c = 0; c < f.dim(); ++c) {
    const double d = f(a, c) - f(b, c);
    s += d * d;
  }
  return std::sqrt(s);
}

// \int_0^1 |N(theta)| (x(theta))^{-gamma} dtheta for one unit cell, where N is
// linear from n0 (theta = 0) to n1 (theta = 1) and x runs from x0 to x0 +/- 1.
inline double abs_cell_scalar(double n0, double n1, double x_at0, double x_at1, double gamma) {
  if (x_at0 < x_at1) return quad::linear_power_integral(x_at0, x_at1, n0, n1, gamma, true);
  return quad::linear_power_integral(x_at1, x_at0, n1, n0, gamma, true);
}

}  // namespace detail

/// Grid maxima defining the Holder seminorm and the two W^{alpha,infty} norms.
inline PathNorms path_norms(const GridPath& f, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("path_norms: order must lie in (0,1)");
  if (f.size() < 2 || f.dim() == 0) throw InvalidInput("path_norms: need a non-empty path with two points");
  const std::size_t n = f.size();
  const double dt = f.dt();
  const double gamma = 1.0 + alpha;
  const double cell_scale = std::pow(dt, -alpha);
  const quad::PowerMoments m(gamma, n);
  const double v0 = m.V(0);
  const bool scalar = f.dim() == 1;
  const auto& gl = quad::Gauss20::get();

  auto cell = [&](std::size_t anchor, std::size_t j, bool plus) {
    // |numerator| over cell [t_j, t_{j+1}] against the kernel anchored at `anchor`.
    const std::size_t d = plus ? anchor - j : j + 1 - anchor;
    if (d == 1) {
      const std::size_t other = plus ? j : j + 1;
      return detail::vec_dist(f, anchor, other) * v0;
    }
    if (scalar) {
      const double n0 = plus ? f(anchor) - f(j) : f(j) - f(anchor);
      const double n1 = plus ? f(anchor) - f(j + 1) : f(j + 1) - f(anchor);
      if ((n0 >= 0.0) == (n1 >= 0.0)) {
        const double dn = n1 - n0;
        const double v = plus ? n0 * m.L(d, 0) + dn * m.L(d, 1) : n0 * m.R(d, 0) + dn * m.R(d, 1);
        return std::abs(v);
      }
      const double x0 = plus ? static_cast<double>(d) : static_cast<double>(d - 1);
      const double x1 = plus ? static_cast<double>(d - 1) : static_cast<double>(d);
      return detail::abs_cell_scalar(n0, n1, x0, x1, gamma);
    }
    double s = 0.0;
    for (unsigned q = 0; q < 20; ++q) {
      const double th = gl.x[q];
      double nsq = 0.0;
      for (std::size_t c = 0; c < f.dim(); ++c) {
        const double fr = f(j, c) + th * (f(j + 1, c) - f(j, c));
        const double dv = f(anchor, c) - fr;
        nsq += dv * dv;
      }
      const double x = plus ? static_cast<double>(d) - th : static_cast<double>(d - 1) + th;
      s += gl.w[q] * std::sqrt(nsq) * std::pow(x, -gamma);
    }
    return s;
  };

  PathNorms out;
  for (std::size_t i = 0; i < n; ++i) {
    double sup0 = 0.0;
    for (std::size_t c = 0; c < f.dim(); ++c) sup0 += f(i, c) * f(i, c);
    sup0 = std::sqrt(sup0);
    double acc = 0.0;
    for (std::size_t j = 0; j < i; ++j) acc += cell(i, j, true);
    out.w0_norm = std::max(out.w0_norm, sup0 + cell_scale * acc);
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = i + 1; k < n; ++k) {
      acc += cell(i, k - 1, false);
      const double inc = detail::vec_dist(f, k, i);
      const double ratio = inc / std::pow(static_cast<double>(k - i) * dt, alpha);
      out.holder_seminorm = std::max(out.holder_seminorm, ratio);
      out.wT_norm = std::max(out.wT_norm, ratio + cell_scale * acc);
    }
  }
  return out;
}

}  // namespace fracldp
