#pragma once

// Ruin theory for the compound-Poisson (Cramer-Lundberg) surplus process and
// tail measures recovered from a cumulant generating function by contour
// inversion.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "qb/core/errors.hpp"
#include "qb/core/io.hpp"
#include "qb/core/numeric.hpp"
#include "qb/core/parallel.hpp"
#include "qb/core/random.hpp"

namespace qb {

enum class ClaimKind { exponential, gamma, deterministic, lognormal };

/// Claim-size law plus Poisson arrival rate and safety loading. The premium rate
/// c = (1 + theta) lambda mu is derived at construction.
class ClaimModel {
 public:
  static ClaimModel exponential(double mean, double lambda, double loading) {
    require(mean > 0.0, "exponential claim mean must be > 0");
    return ClaimModel(ClaimKind::exponential, mean, 1.0, mean, lambda, loading);
  }
  static ClaimModel gamma(double shape, double scale, double lambda, double loading) {
    require(shape > 0.0 && scale > 0.0, "gamma claim shape and scale must be > 0");
    return ClaimModel(ClaimKind::gamma, shape * scale, shape, scale, lambda, loading);
  }
  static ClaimModel deterministic(double amount, double lambda, double loading) {
    require(amount > 0.0, "deterministic claim amount must be > 0");
    return ClaimModel(ClaimKind::deterministic, amount, 0.0, 0.0, lambda, loading);
  }
  /// Lognormal claims have no moment generating function; they can be simulated
  /// but have no adjustment coefficient.
  static ClaimModel lognormal(double mu_log, double sigma_log, double lambda, double loading) {
    require(sigma_log > 0.0 && std::isfinite(mu_log), "lognormal claim parameters invalid");
    return ClaimModel(ClaimKind::lognormal, std::exp(mu_log + 0.5 * sigma_log * sigma_log), mu_log, sigma_log,
                      lambda, loading);
  }

  ClaimKind kind() const noexcept { return kind_; }
  double mean() const noexcept { return mean_; }
  double lambda() const noexcept { return lambda_; }
  double loading() const noexcept { return loading_; }
  double premium_rate() const noexcept { return premium_; }
  bool has_mgf() const noexcept { return kind_ != ClaimKind::lognormal; }

  /// Right end of the MGF's domain (infinity for bounded claims).
  double t_sup() const {
    switch (kind_) {
      case ClaimKind::exponential: return 1.0 / mean_;
      case ClaimKind::gamma: return 1.0 / b_;
      case ClaimKind::deterministic: return std::numeric_limits<double>::infinity();
      case ClaimKind::lognormal: break;
    }
    throw InvalidInput("lognormal claims have no moment generating function");
  }

  /// M_X(t) - 1, without cancellation near t = 0.
  double mgf_minus_one(double t) const {
    switch (kind_) {
      case ClaimKind::exponential: return mean_ * t / (1.0 - mean_ * t);
      case ClaimKind::gamma: return std::expm1(-a_ * std::log1p(-b_ * t));
      case ClaimKind::deterministic: return std::expm1(mean_ * t);
      case ClaimKind::lognormal: break;
    }
    throw InvalidInput("lognormal claims have no moment generating function");
  }

  double mgf_derivative(double t) const {
    switch (kind_) {
      case ClaimKind::exponential: return mean_ / ((1.0 - mean_ * t) * (1.0 - mean_ * t));
      case ClaimKind::gamma: return a_ * b_ * std::pow(1.0 - b_ * t, -a_ - 1.0);
      case ClaimKind::deterministic: return mean_ * std::exp(mean_ * t);
      case ClaimKind::lognormal: break;
    }
    throw InvalidInput("lognormal claims have no moment generating function");
  }

  double sample(Stream& rng) const {
    switch (kind_) {
      case ClaimKind::exponential: return mean_ * rng.exponential();
      case ClaimKind::gamma: return b_ * rng.gamma(a_);
      case ClaimKind::deterministic: return mean_;
      case ClaimKind::lognormal: return std::exp(a_ + b_ * rng.normal());
    }
    return 0.0;
  }

  std::string name() const {
    switch (kind_) {
      case ClaimKind::exponential: return "exponential";
      case ClaimKind::gamma: return "gamma";
      case ClaimKind::deterministic: return "deterministic";
      case ClaimKind::lognormal: return "lognormal";
    }
    return "?";
  }

 private:
  ClaimModel(ClaimKind kind, double mean, double a, double b, double lambda, double loading)
      : kind_(kind), mean_(mean), a_(a), b_(b), lambda_(lambda), loading_(loading),
        premium_((1.0 + loading) * lambda * mean) {
    require(std::isfinite(lambda) && lambda > 0.0, "claim arrival rate must be > 0");
    require(std::isfinite(loading) && loading >= 0.0, "safety loading must be >= 0");
  }

  ClaimKind kind_;
  double mean_;
  double a_;  // gamma shape | lognormal mu
  double b_;  // gamma scale | lognormal sigma
  double lambda_;
  double loading_;
  double premium_;
};

struct AdjustmentCoefficient {
  double kappa = 0.0;
  bool degenerate = false;  // zero loading: no positive root, kappa reported as 0
};

/// Positive root of lambda M_X(k) = lambda + k c by bisection inside (0, t_sup).
inline AdjustmentCoefficient adjustment_coefficient(const ClaimModel& model) {
  if (!model.has_mgf())
    throw InvalidInput("adjustment coefficient undefined: " + model.name() + " claims have no MGF");
  if (model.loading() == 0.0) return {0.0, true};
  const double lambda = model.lambda();
  const double c = model.premium_rate();
  auto lundberg = [&](double t) { return lambda * model.mgf_minus_one(t) - c * t; };
  double hi = model.t_sup();
  double lo = 0.0;
  if (std::isfinite(hi)) {
    lo = hi * 1e-9;
    hi = hi * (1.0 - 1e-12);
  } else {
    lo = 1e-9 / model.mean();
    hi = 1.0 / model.mean();
    for (int i = 0; i < 200 && lundberg(hi) <= 0.0; ++i) hi *= 2.0;
  }
  if (!(lundberg(lo) < 0.0 && lundberg(hi) > 0.0))
    throw NumericalFailure("adjustment coefficient: no sign change of the Lundberg equation in (0, t_sup)");
  return {bisect(lundberg, lo, hi, 1e-15), false};
}

inline double lundberg_bound(double u, double kappa) {
  require(u >= 0.0 && kappa >= 0.0, "lundberg_bound requires u >= 0 and kappa >= 0");
  return std::exp(-kappa * u);
}

/// C in psi(u) ~ C e^{-kappa u}: mu theta / (M'_X(kappa) - mu (1 + theta)).
inline double cramer_constant(const ClaimModel& model) {
  const AdjustmentCoefficient adj = adjustment_coefficient(model);
  if (adj.degenerate) throw InvalidInput("Cramer constant undefined for zero safety loading");
  const double mu = model.mean();
  const double theta = model.loading();
  return mu * theta / (model.mgf_derivative(adj.kappa) - mu * (1.0 + theta));
}

/// Initial surplus that caps the Lundberg bound at alpha: -ln(alpha) / kappa.
inline double surplus_for_confidence(double alpha, double kappa) {
  require(alpha > 0.0 && alpha < 1.0 && kappa > 0.0, "surplus_for_confidence needs alpha in (0,1), kappa > 0");
  return -std::log(alpha) / kappa;
}

struct RuinReport {
  double u = 0.0;
  double psi_hat = 0.0;
  double std_error = 0.0;
  double ci_halfwidth = 0.0;  // 3 standard errors
  double lundberg_bound = 1.0;
  double kappa = 0.0;
  std::size_t n_paths = 0;
  std::size_t ruined = 0;
};

struct RuinOptions {
  /// A path whose surplus reaches a level where e^{-kappa U} <= stop_bound is
  /// counted as surviving (Lundberg bounds the remaining ruin chance). 0 disables.
  double stop_bound = 1e-9;
};

/// Event-driven simulation of U(t) = u + c t - sum of claims; ruin is checked at
/// each claim instant before the horizon.
inline RuinReport simulate_ruin(const ClaimModel& model, double u, double horizon, std::size_t n_paths,
                                std::uint64_t seed, const RuinOptions& opt = {}) {
  require(u >= 0.0 && std::isfinite(u), "initial surplus must be >= 0");
  require(horizon > 0.0 && std::isfinite(horizon), "ruin horizon must be > 0");
  require(n_paths >= 1000, "simulate_ruin needs n_paths >= 1000");
  RuinReport rep;
  rep.u = u;
  rep.n_paths = n_paths;
  double stop_level = std::numeric_limits<double>::infinity();
  if (model.has_mgf()) {
    rep.kappa = adjustment_coefficient(model).kappa;
    rep.lundberg_bound = lundberg_bound(u, rep.kappa);
    if (rep.kappa > 0.0 && opt.stop_bound > 0.0) stop_level = -std::log(opt.stop_bound) / rep.kappa;
  } else {
    rep.kappa = std::numeric_limits<double>::quiet_NaN();
    rep.lundberg_bound = std::numeric_limits<double>::quiet_NaN();
  }
  const double c = model.premium_rate();
  const double rate = model.lambda();
  std::vector<std::uint8_t> ruined(n_paths, 0);
  parallel_for(n_paths, [&](std::size_t p) {
    Stream rng(seed, p);
    double t = 0.0;
    double surplus = u;
    for (;;) {
      const double wait = rng.exponential() / rate;
      t += wait;
      if (t > horizon) return;
      surplus += c * wait - model.sample(rng);
      if (surplus < 0.0) {
        ruined[p] = 1;
        return;
      }
      if (surplus >= stop_level) return;
    }
  });
  for (auto r : ruined) rep.ruined += r;
  const double n = static_cast<double>(n_paths);
  rep.psi_hat = static_cast<double>(rep.ruined) / n;
  rep.std_error = std::sqrt(rep.psi_hat * (1.0 - rep.psi_hat) / n);
  rep.ci_halfwidth = 3.0 * rep.std_error;
  return rep;
}

/// A few surplus trajectories as (time, surplus) breakpoints, for plotting.
/// Each path holds the value just before and just after every claim.
inline std::vector<std::vector<std::pair<double, double>>> sample_surplus_paths(const ClaimModel& model, double u,
                                                                                double horizon, std::size_t count,
                                                                                std::uint64_t seed) {
  std::vector<std::vector<std::pair<double, double>>> out(count);
  const double c = model.premium_rate();
  for (std::size_t p = 0; p < count; ++p) {
    Stream rng(seed, p);
    auto& path = out[p];
    path.emplace_back(0.0, u);
    double t = 0.0;
    double surplus = u;
    for (;;) {
      const double wait = rng.exponential() / model.lambda();
      if (t + wait > horizon) {
        path.emplace_back(horizon, surplus + c * (horizon - t));
        break;
      }
      t += wait;
      surplus += c * wait;
      path.emplace_back(t, surplus);
      surplus -= model.sample(rng);
      path.emplace_back(t, surplus);
      if (surplus < 0.0) break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cumulant generating function inversion

struct CgfSpec {
  std::function<cplx(cplx)> cgf;  // K_X, analytic on the strip Re t in (0, t_sup)
  double t_sup = std::numeric_limits<double>::infinity();
  std::string name;

  static CgfSpec normal(double mean = 0.0, double sd = 1.0) {
    return {[mean, sd](cplx t) { return mean * t + 0.5 * sd * sd * t * t; },
            std::numeric_limits<double>::infinity(), "normal"};
  }
  static CgfSpec exponential(double mean) {
    return {[mean](cplx t) { return -std::log(1.0 - mean * t); }, 1.0 / mean, "exponential"};
  }
  static CgfSpec gamma(double shape, double scale) {
    return {[shape, scale](cplx t) { return -shape * std::log(1.0 - scale * t); }, 1.0 / scale, "gamma"};
  }
};

struct InversionOptions {
  std::size_t max_nodes = 10000;
};

namespace detail {

// K'(t) on the real axis by complex-step differentiation.
inline double cgf_slope(const CgfSpec& c, double t) {
  const double h = 1e-20 * std::max(1.0, std::abs(t));
  return c.cgf(cplx{t, h}).imag() / h;
}

struct Saddlepoint {
  double t;
  double curvature;  // K''(t)
};

inline Saddlepoint solve_saddlepoint(const CgfSpec& c, double x) {
  require(static_cast<bool>(c.cgf), "CGF not set");
  double lo = 1e-10 * (std::isfinite(c.t_sup) ? c.t_sup : 1.0);
  double hi = std::isfinite(c.t_sup) ? c.t_sup * (1.0 - 1e-12) : 1.0;
  auto f = [&](double t) { return cgf_slope(c, t) - x; };
  if (!std::isfinite(c.t_sup))
    for (int i = 0; i < 200 && f(hi) <= 0.0; ++i) hi *= 2.0;
  const double flo = f(lo);
  const double fhi = f(hi);
  if (!(flo < 0.0 && fhi > 0.0) || !std::isfinite(flo) || !std::isfinite(fhi))
    throw InvalidInput("saddlepoint for x=" + io::format_double(x) +
                       " not bracketed in (0, t_sup); x must exceed the mean");
  const double t = bisect(f, lo, hi, 1e-15);
  const double h = 1e-5 * std::max(t, 1e-3);
  const double lo_t = std::max(t - h, 0.5 * t);
  const double hi_t = std::isfinite(c.t_sup) ? std::min(t + h, 0.5 * (t + c.t_sup)) : t + h;
  const double curvature = (cgf_slope(c, hi_t) - cgf_slope(c, lo_t)) / (hi_t - lo_t);
  return {t, curvature};
}

// (1/pi) int_0^inf Re[exp(K(t) - t x) / t^power] dy along t = t_hat + i y, trapezoidal.
inline double bromwich(const CgfSpec& c, double x, const Saddlepoint& sp, int power, const InversionOptions& opt) {
  const double width = 1.0 / std::sqrt(std::max(sp.curvature, 1e-300));
  // step small enough that the aliased copies (offset 2 pi / h) are below 1e-13
  const double step = std::min(0.25 * width, 2.0 * std::numbers::pi * sp.t / 30.0);
  auto term = [&](double y) {
    const cplx t{sp.t, y};
    cplx v = std::exp(c.cgf(t) - t * x);
    for (int k = 0; k < power; ++k) v /= t;
    return v.real();
  };
  double sum = 0.5 * term(0.0);
  const double scale0 = std::abs(sum);
  for (std::size_t n = 1; n < opt.max_nodes; ++n) {
    const double y = static_cast<double>(n) * step;
    const cplx t{sp.t, y};
    const double v = term(y);
    sum += v;
    const double envelope = std::abs(std::exp(c.cgf(t) - t * x)) / std::pow(std::abs(t), power);
    if (envelope < 1e-18 * std::max(scale0, 1e-300)) break;
  }
  return step * sum / std::numbers::pi;
}

}  // namespace detail

/// P(X > x) from the CGF by a Bromwich integral through the saddlepoint K'(t) = x.
inline double tail_probability(const CgfSpec& cgf, double x, const InversionOptions& opt = {}) {
  const detail::Saddlepoint sp = detail::solve_saddlepoint(cgf, x);
  return std::clamp(detail::bromwich(cgf, x, sp, 1, opt), 0.0, 1.0);
}

/// E[X | X > x] = x + (1 / P(X > x)) * (1/2 pi i) int e^{K(t) - t x} / t^2 dt.
inline double expected_shortfall(const CgfSpec& cgf, double x, const InversionOptions& opt = {}) {
  const detail::Saddlepoint sp = detail::solve_saddlepoint(cgf, x);
  const double tail = detail::bromwich(cgf, x, sp, 1, opt);
  if (!(tail > 0.0)) throw NumericalFailure("expected_shortfall: tail probability underflows at x=" +
                                            io::format_double(x));
  const double excess = detail::bromwich(cgf, x, sp, 2, opt);
  return x + std::max(excess, 0.0) / tail;
}

}  // namespace qb
