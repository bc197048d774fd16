#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <numeric>
#include <queue>
#include <span>
#include <vector>

#include "qb/core/errors.hpp"

namespace qb {

using cplx = std::complex<double>;

inline double norm_pdf(double x) noexcept {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

// erfc keeps full relative accuracy in both tails.
inline double norm_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double softplus(double x) noexcept {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline bool all_finite(std::span<const double> xs) noexcept {
  return std::all_of(xs.begin(), xs.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// Sample statistics

struct SampleStats {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double std_error() const { return n > 0 ? std::sqrt(variance / static_cast<double>(n)) : 0.0; }
  double stddev() const { return std::sqrt(variance); }
};

/// Two-pass mean/variance (stable for the large MC samples used throughout).
inline SampleStats sample_stats(std::span<const double> xs) {
  SampleStats s;
  s.n = xs.size();
  if (s.n == 0) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.variance = ss / static_cast<double>(s.n - 1);
  }
  return s;
}

/// Standard error of the unbiased sample variance, using the sample fourth central moment.
inline double variance_std_error(std::span<const double> xs) {
  const SampleStats s = sample_stats(xs);
  if (s.n < 4) return INFINITY;
  double m4 = 0.0;
  for (double x : xs) {
    const double d = x - s.mean;
    m4 += d * d * d * d;
  }
  m4 /= static_cast<double>(s.n);
  const double n = static_cast<double>(s.n);
  return std::sqrt(std::max(0.0, (m4 - (n - 3.0) / (n - 1.0) * s.variance * s.variance) / n));
}

// ---------------------------------------------------------------------------
// Adaptive Gauss-Kronrod (7/15) quadrature, globally adaptive on the worst interval.

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t intervals = 0;
  bool converged = false;
};

struct QuadratureOptions {
  double abs_tol = 1e-9;
  double rel_tol = 0.0;
  std::size_t max_intervals = 4000;
};

namespace detail {

struct GkPanel {
  double a, b, value, error;
  bool operator<(const GkPanel& o) const { return error < o.error; }
};

template <class F>
GkPanel gk15(const F& f, double a, double b) {
  static constexpr std::array<double, 8> xgk = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.0};
  static constexpr std::array<double, 8> wgk = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr std::array<double, 4> wg = {
      0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
      0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * wgk[7];
  double gauss = fc * wg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * xgk[j];
    const double pair = f(center - dx) + f(center + dx);
    kronrod += wgk[j] * pair;
    if (j % 2 == 1) gauss += wg[j / 2] * pair;
  }
  kronrod *= half;
  gauss *= half;
  return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace detail

template <class F>
QuadratureResult integrate(const F& f, double a, double b, const QuadratureOptions& opt = {}) {
  std::priority_queue<detail::GkPanel> panels;
  panels.push(detail::gk15(f, a, b));
  double total = panels.top().value;
  double error = panels.top().error;
  std::size_t count = 1;
  auto tolerance = [&] { return std::max(opt.abs_tol, opt.rel_tol * std::abs(total)); };
  while (error > tolerance() && count < opt.max_intervals) {
    const detail::GkPanel worst = panels.top();
    panels.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const detail::GkPanel left = detail::gk15(f, worst.a, mid);
    const detail::GkPanel right = detail::gk15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    panels.push(left);
    panels.push(right);
    ++count;
  }
  // Re-sum to shed the drift of the running updates.
  double value = 0.0;
  double err = 0.0;
  while (!panels.empty()) {
    value += panels.top().value;
    err += panels.top().error;
    panels.pop();
  }
  return {value, err, count, err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(value))};
}

// ---------------------------------------------------------------------------
// Root bracketing

/// Bisection for a sign change of f on [lo, hi]; stops when the bracket is
/// narrower than rel_tol * |midpoint| (or abs_tol).
template <class F>
double bisect(const F& f, double lo, double hi, double rel_tol = 1e-14, double abs_tol = 0.0) {
  double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo < 0.0) == (fhi < 0.0)) throw NumericalFailure("bisect: no sign change in bracket");
  for (int iter = 0; iter < 400; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= std::max(abs_tol, rel_tol * std::abs(mid)) || mid == lo || mid == hi) return mid;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Small dense linear algebra (row-major), enough for GP and regression sizes.

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// In-place lower Cholesky factor. Returns false if a pivot is not strictly positive.
inline bool cholesky_in_place(Matrix& a) {
  const std::size_t n = a.rows();
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    const double ljj = std::sqrt(d);
    a(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
      a(i, j) = s / ljj;
    }
    for (std::size_t k = j + 1; k < n; ++k) a(j, k) = 0.0;
  }
  return true;
}

/// Solves L y = b in place.
inline void forward_substitute(const Matrix& l, std::span<double> b) {
  for (std::size_t i = 0; i < l.rows(); ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * b[k];
    b[i] = s / l(i, i);
  }
}

/// Solves L^T x = y in place.
inline void backward_substitute(const Matrix& l, std::span<double> y) {
  for (std::size_t ii = l.rows(); ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < l.rows(); ++k) s -= l(k, ii) * y[k];
    y[ii] = s / l(ii, ii);
  }
}

}  // namespace qb
