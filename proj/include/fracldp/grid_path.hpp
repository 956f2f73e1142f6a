#pragma once

// Uniform-grid path carrier and its CSV form.
//
// A GridPath holds n samples of a d-dimensional path at times t0 + k*dt,
// stored row-major (sample k occupies values[k*d .. k*d+d-1]).

#include <fracldp/errors.hpp>

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace fracldp {

class GridPath {
 public:
  GridPath() = default;

  GridPath(double t0, double dt, std::size_t n, std::size_t dim)
      : t0_(t0), dt_(dt), n_(n), dim_(dim), values_(n * dim, 0.0) {
    check_grid();
  }

  GridPath(double t0, double dt, std::size_t dim, std::vector<double> values)
      : t0_(t0), dt_(dt), dim_(dim), values_(std::move(values)) {
    if (dim_ == 0) throw InvalidInput("GridPath: dimension-0 paths need an explicit sample count");
    if (values_.size() % dim_ != 0)
      throw InvalidInput("GridPath: value count is not a multiple of the dimension");
    n_ = values_.size() / dim_;
    check_grid();
  }

  /// Scalar path from samples.
  static GridPath scalar(double t0, double dt, std::vector<double> values) {
    return GridPath(t0, dt, 1, std::move(values));
  }

  /// Samples `fn(t)` on the grid t0 + k*dt, k < n.
  static GridPath from_function(double t0, double dt, std::size_t n,
                                const std::function<double(double)>& fn) {
    GridPath p(t0, dt, n, 1);
    for (std::size_t k = 0; k < n; ++k) p(k) = fn(p.time(k));
    return p;
  }

  /// Grid with n points covering [0, T].
  static GridPath on_interval(double T, std::size_t n, std::size_t dim = 1) {
    if (n < 2) throw InvalidInput("GridPath: need at least two grid points");
    return GridPath(0.0, T / static_cast<double>(n - 1), n, dim);
  }

  double t0() const noexcept { return t0_; }
  double dt() const noexcept { return dt_; }
  std::size_t size() const noexcept { return n_; }
  std::size_t dim() const noexcept { return dim_; }
  double time(std::size_t k) const noexcept { return t0_ + static_cast<double>(k) * dt_; }
  double t_end() const noexcept { return time(n_ == 0 ? 0 : n_ - 1); }

  double& operator()(std::size_t k, std::size_t c = 0) { return values_[k * dim_ + c]; }
  double operator()(std::size_t k, std::size_t c = 0) const { return values_[k * dim_ + c]; }

  std::span<double> row(std::size_t k) { return {values_.data() + k * dim_, dim_}; }
  std::span<const double> row(std::size_t k) const { return {values_.data() + k * dim_, dim_}; }

  Eigen::VectorXd vec(std::size_t k) const {
    return Eigen::Map<const Eigen::VectorXd>(values_.data() + k * dim_,
                                             static_cast<Eigen::Index>(dim_));
  }
  void set(std::size_t k, const Eigen::VectorXd& v) {
    if (static_cast<std::size_t>(v.size()) != dim_) throw InvalidInput("GridPath::set: dimension mismatch");
    for (std::size_t c = 0; c < dim_; ++c) values_[k * dim_ + c] = v[static_cast<Eigen::Index>(c)];
  }

  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }

  /// Component c as a contiguous vector.
  std::vector<double> component(std::size_t c) const {
    std::vector<double> out(n_);
    for (std::size_t k = 0; k < n_; ++k) out[k] = values_[k * dim_ + c];
    return out;
  }

  GridPath component_path(std::size_t c) const { return GridPath(t0_, dt_, 1, component(c)); }

  /// Every `stride`-th sample, starting at 0.
  GridPath subsample(std::size_t stride) const {
    if (stride == 0) throw InvalidInput("GridPath::subsample: zero stride");
    const std::size_t m = (n_ - 1) / stride + 1;
    GridPath out(t0_, dt_ * static_cast<double>(stride), m, dim_);
    for (std::size_t k = 0; k < m; ++k)
      for (std::size_t c = 0; c < dim_; ++c) out(k, c) = (*this)(k * stride, c);
    return out;
  }

  bool all_finite() const {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool same_grid(const GridPath& o) const noexcept {
    return n_ == o.n_ && t0_ == o.t0_ && std::abs(dt_ - o.dt_) <= 1e-12 * dt_;
  }

  friend bool operator==(const GridPath&, const GridPath&) = default;

 private:
  void check_grid() const {
    if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw InvalidInput("GridPath: dt must be positive and finite");
    if (!std::isfinite(t0_)) throw InvalidInput("GridPath: t0 must be finite");
    if (n_ == 0) throw InvalidInput("GridPath: empty path");
  }

  double t0_ = 0.0;
  double dt_ = 1.0;
  std::size_t n_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

namespace detail {

inline void append_double(std::string& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw InvalidInput("CSV: cannot parse number '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace detail

/// Writes `t,v0,...,v{d-1}` followed by one row per grid point, shortest
/// round-trip formatting for every number.
inline void write_csv(std::ostream& os, const GridPath& p) {
  std::string out = "t";
  for (std::size_t c = 0; c < p.dim(); ++c) out += ",v" + std::to_string(c);
  out += '\n';
  for (std::size_t k = 0; k < p.size(); ++k) {
    detail::append_double(out, p.time(k));
    for (std::size_t c = 0; c < p.dim(); ++c) {
      out += ',';
      detail::append_double(out, p(k, c));
    }
    out += '\n';
  }
  os << out;
}

inline GridPath read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidInput("CSV: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split(line, ',');
  if (header.empty() || header[0] != "t") throw InvalidInput("CSV: header must start with 't'");
  const std::size_t dim = header.size() - 1;
  for (std::size_t c = 0; c < dim; ++c)
    if (header[c + 1] != "v" + std::to_string(c)) throw InvalidInput("CSV: unexpected column name");

  std::vector<double> times;
  std::vector<double> values;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split(line, ',');
    if (cells.size() != dim + 1) throw InvalidInput("CSV: ragged row");
    times.push_back(detail::parse_double(cells[0]));
    for (std::size_t c = 0; c < dim; ++c) values.push_back(detail::parse_double(cells[c + 1]));
  }
  const std::size_t n = times.size();
  if (n < 2) throw InvalidInput("CSV: need at least two rows to recover the grid");

  // Recover dt exactly when possible: the writer emitted t0 + k*dt.
  const double t0 = times.front();
  const double guess = (times.back() - t0) / static_cast<double>(n - 1);
  double dt = guess;
  double cand = guess;
  for (int i = 0; i < 8; ++i) cand = std::nextafter(cand, -INFINITY);
  for (int i = 0; i < 17; ++i, cand = std::nextafter(cand, INFINITY)) {
    bool ok = true;
    for (std::size_t k = 0; k < n && ok; ++k) ok = (t0 + static_cast<double>(k) * cand == times[k]);
    if (ok) {
      dt = cand;
      break;
    }
  }
  for (std::size_t k = 0; k < n; ++k)
    if (std::abs(t0 + static_cast<double>(k) * dt - times[k]) > 1e-9 * std::max(1.0, std::abs(times[k])))
      throw InvalidInput("CSV: time column is not a uniform grid");

  if (dim == 0) return GridPath(t0, dt, n, 0);
  return GridPath(t0, dt, dim, std::move(values));
}

inline void save_csv(const std::string& path, const GridPath& p) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidInput("cannot open '" + path + "' for writing");
  write_csv(f, p);
}

inline GridPath load_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidInput("cannot open '" + path + "'");
  return read_csv(f);
}

}  // namespace fracldp
