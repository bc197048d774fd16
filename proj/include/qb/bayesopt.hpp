#pragma once

// Gaussian-process Bayesian optimization (maximization) with expected
// improvement, and the four-parameter hierarchical prior draw.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "qb/core/errors.hpp"
#include "qb/core/numeric.hpp"
#include "qb/core/random.hpp"

namespace qb {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

using Bounds = std::vector<Interval>;

inline void validate_bounds(const Bounds& b) {
  require(!b.empty(), "bounds need at least one dimension");
  for (const auto& iv : b)
    require(std::isfinite(iv.lo) && std::isfinite(iv.hi) && iv.lo < iv.hi, "each bound needs lo < hi");
}

struct Observation {
  std::vector<double> x;
  double y = 0.0;
};

using Observations = std::vector<Observation>;

struct GpHyper {
  double lengthscale = 1.0;
  double signal_variance = 1.0;
  double noise_variance = 0.0;
};

struct GpModel {
  GpHyper hyper;
  Observations train;
  Matrix chol;                 // lower factor of K + (noise + jitter) I
  std::vector<double> alpha;   // (K + ...)^{-1} y
  double jitter = 0.0;         // diagonal added on top of the noise variance

  double kernel(std::span<const double> a, std::span<const double> b) const {
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = a[i] - b[i];
      d2 += d * d;
    }
    return hyper.signal_variance * std::exp(-0.5 * d2 / (hyper.lengthscale * hyper.lengthscale));
  }
};

/// Exact GP regression. The Cholesky factorization is retried with diagonal
/// jitter 1e-10, 1e-9, ..., 1e-6 (relative to the signal variance) when needed.
inline GpModel gp_fit(const Observations& obs, const GpHyper& hyper = {}) {
  require(!obs.empty(), "gp_fit needs at least one observation");
  require(hyper.lengthscale > 0.0 && hyper.signal_variance > 0.0 && hyper.noise_variance >= 0.0,
          "GP hyperparameters must be positive (noise >= 0)");
  const std::size_t dim = obs.front().x.size();
  for (const auto& o : obs) {
    require(o.x.size() == dim, "observations have inconsistent dimension");
    require(std::isfinite(o.y), "observation values must be finite");
  }
  GpModel m;
  m.hyper = hyper;
  m.train = obs;
  const std::size_t n = obs.size();
  Matrix k(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) k(i, j) = k(j, i) = m.kernel(obs[i].x, obs[j].x);

  const double jitters[] = {0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6};
  bool ok = false;
  for (double jit : jitters) {
    m.chol = k;
    const double diag = hyper.noise_variance + jit * hyper.signal_variance;
    for (std::size_t i = 0; i < n; ++i) m.chol(i, i) += diag;
    if (cholesky_in_place(m.chol)) {
      m.jitter = jit * hyper.signal_variance;
      ok = true;
      break;
    }
  }
  if (!ok) throw NumericalFailure("gp_fit: kernel matrix ill-conditioned even with jitter 1e-6");
  m.alpha.resize(n);
  for (std::size_t i = 0; i < n; ++i) m.alpha[i] = obs[i].y;
  forward_substitute(m.chol, m.alpha);
  backward_substitute(m.chol, m.alpha);
  return m;
}

struct GpPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

inline GpPrediction gp_predict(const GpModel& m, std::span<const double> x) {
  const std::size_t n = m.train.size();
  std::vector<double> kx(n);
  for (std::size_t i = 0; i < n; ++i) kx[i] = m.kernel(x, m.train[i].x);
  GpPrediction p;
  for (std::size_t i = 0; i < n; ++i) p.mean += kx[i] * m.alpha[i];
  forward_substitute(m.chol, kx);
  double explained = 0.0;
  for (double v : kx) explained += v * v;
  p.variance = std::max(m.hyper.signal_variance - explained, 0.0);
  return p;
}

/// E[max(Y - best - xi, 0)] for Y ~ N(mean, sd^2).
inline double expected_improvement(double mean, double sd, double best_y, double xi = 0.01) {
  const double gain = mean - best_y - xi;
  if (!(sd > 0.0)) return std::max(gain, 0.0);
  const double z = gain / sd;
  return std::max(gain * norm_cdf(z) + sd * norm_pdf(z), 0.0);
}

inline double expected_improvement(const GpModel& m, std::span<const double> x, double best_y, double xi = 0.01) {
  const GpPrediction p = gp_predict(m, x);
  return expected_improvement(p.mean, std::sqrt(p.variance), best_y, xi);
}

// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<unsigned> first_primes(std::size_t count) {
  std::vector<unsigned> primes;
  for (unsigned c = 2; primes.size() < count; ++c) {
    bool prime = true;
    for (unsigned p : primes) {
      if (p * p > c) break;
      if (c % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) primes.push_back(c);
  }
  return primes;
}

inline double radical_inverse(std::uint64_t i, unsigned base) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += static_cast<double>(i % base) * f;
    i /= base;
    f *= inv;
  }
  return r;
}

}  // namespace detail

/// Halton points in [0,1)^dim with a seeded Cranley-Patterson shift.
inline std::vector<std::vector<double>> shifted_halton(std::size_t count, std::size_t dim, Stream& rng) {
  const auto primes = detail::first_primes(dim);
  std::vector<double> shift(dim);
  for (auto& s : shift) s = rng.uniform();
  std::vector<std::vector<double>> pts(count, std::vector<double>(dim));
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t d = 0; d < dim; ++d) {
      const double v = detail::radical_inverse(i + 1, primes[d]) + shift[d];
      pts[i][d] = v - std::floor(v);
    }
  return pts;
}

struct BoOptions {
  GpHyper hyper{0.2, 1.0, 0.0};  // on the unit cube with standardized targets
  double xi = 0.01;
  std::size_t candidates = 2048;
  std::size_t local_candidates = 64;
  /// Draw one extra uniform sample per iteration before each acquisition step.
  bool prior_sample_each_iteration = false;
};

struct TraceEntry {
  std::size_t iteration = 0;
  std::vector<double> x;
  double y = 0.0;        // raw objective value (may be non-finite)
  double best_y = 0.0;   // best finite value so far
  bool penalized = false;
  std::string source;    // init | prior | acquisition
};

struct BoResult {
  std::vector<double> x_best;
  double v_best = -std::numeric_limits<double>::infinity();
  std::vector<TraceEntry> trace;
};

using Objective = std::function<double(std::span<const double>)>;

/// Sequential GP/EI optimization: init_count uniform samples, then one
/// acquisition maximizer per evaluation until the budget is spent.
inline BoResult bo_run(const Objective& objective, const Bounds& bounds, std::size_t budget, std::size_t init_count,
                       std::uint64_t seed, const BoOptions& opt = {}) {
  validate_bounds(bounds);
  require(init_count >= 2 && budget >= init_count, "bo_run needs budget >= init_count >= 2");
  const std::size_t dim = bounds.size();
  Stream rng(seed, 0);

  auto to_box = [&](std::span<const double> u) {
    std::vector<double> x(dim);
    for (std::size_t d = 0; d < dim; ++d) x[d] = bounds[d].lo + u[d] * (bounds[d].hi - bounds[d].lo);
    return x;
  };

  BoResult res;
  std::vector<std::vector<double>> unit_points;
  std::vector<double> values;  // raw

  auto evaluate = [&](std::vector<double> u, const char* source) {
    std::vector<double> x = to_box(u);
    double y = objective(x);
    TraceEntry e;
    e.iteration = res.trace.size();
    e.x = x;
    e.y = y;
    e.penalized = !std::isfinite(y);
    e.source = source;
    if (!e.penalized && y > res.v_best) {
      res.v_best = y;
      res.x_best = x;
    }
    e.best_y = res.v_best;
    res.trace.push_back(std::move(e));
    unit_points.push_back(std::move(u));
    values.push_back(y);
  };

  auto uniform_point = [&] {
    std::vector<double> u(dim);
    for (auto& v : u) v = rng.uniform();
    return u;
  };

  for (std::size_t i = 0; i < init_count; ++i) evaluate(uniform_point(), "init");

  while (res.trace.size() < budget) {
    if (opt.prior_sample_each_iteration) {
      evaluate(uniform_point(), "prior");
      if (res.trace.size() >= budget) break;
    }

    // Standardize targets; failed evaluations sit below the worst finite value.
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double v : values)
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    if (!std::isfinite(lo)) lo = hi = 0.0;
    const double penalty = lo - std::max(1.0, hi - lo);
    std::vector<double> used(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) used[i] = std::isfinite(values[i]) ? values[i] : penalty;
    const SampleStats st = sample_stats(used);
    const double scale = st.variance > 0.0 ? std::sqrt(st.variance) : 1.0;
    Observations obs(values.size());
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      obs[i] = {unit_points[i], (used[i] - st.mean) / scale};
      if (used[i] > used[best_i]) best_i = i;
    }
    const GpModel gp = gp_fit(obs, opt.hyper);
    const double best_std = obs[best_i].y;
    auto acquisition = [&](std::span<const double> u) { return expected_improvement(gp, u, best_std, opt.xi); };

    std::vector<double> arg = unit_points[best_i];
    double top = -1.0;
    auto consider = [&](const std::vector<double>& u) {
      const double a = acquisition(u);
      if (a > top) {
        top = a;
        arg = u;
      }
    };
    for (const auto& u : shifted_halton(opt.candidates, dim, rng)) consider(u);
    const double radius = 0.05;
    for (std::size_t i = 0; i < opt.local_candidates; ++i) {
      std::vector<double> u = unit_points[best_i];
      for (auto& v : u) v = std::clamp(v + radius * rng.normal(), 0.0, 1.0);
      consider(u);
    }
    // compass search on the acquisition from the best candidate
    for (double step = 0.02; step > 1e-7; step *= 0.5) {
      bool moved = true;
      for (int guard = 0; moved && guard < 50; ++guard) {
        moved = false;
        for (std::size_t d = 0; d < dim; ++d)
          for (double sign : {-1.0, 1.0}) {
            std::vector<double> u = arg;
            u[d] = std::clamp(u[d] + sign * step, 0.0, 1.0);
            const double a = acquisition(u);
            if (a > top) {
              top = a;
              arg = std::move(u);
              moved = true;
            }
          }
      }
    }
    evaluate(std::move(arg), "acquisition");
  }
  if (res.x_best.empty()) throw NumericalFailure("bo_run: objective never returned a finite value");
  return res;
}

// ---------------------------------------------------------------------------

struct HierarchicalPriorSample {
  double theta = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double sigma = 0.0;           // raw N(0,1) draw
  double sigma_positive = 0.0;  // softplus(sigma), used wherever a scale is needed
};

/// Independent N(0,1) draws for theta, alpha, beta and sigma.
inline HierarchicalPriorSample sample_hierarchical_priors(std::uint64_t seed) {
  Stream rng(seed, 0);
  HierarchicalPriorSample s;
  s.theta = rng.normal();
  s.alpha = rng.normal();
  s.beta = rng.normal();
  s.sigma = rng.normal();
  s.sigma_positive = softplus(s.sigma);
  return s;
}

}  // namespace qb
