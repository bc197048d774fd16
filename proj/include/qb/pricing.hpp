#pragma once

// European option pricing: Black-Scholes-Merton closed form and Greeks, Black
// caplets, characteristic-function pricing (Lewis contour and Carr-Madan
// damping, both by direct adaptive quadrature) and least-squares Monte Carlo
// for American puts.

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qb/core/errors.hpp"
#include "qb/core/numeric.hpp"
#include "qb/paths.hpp"

namespace qb {


struct OptionSpec {
  double S = 100.0;      // spot
  double K = 100.0;      // strike
  double T = 1.0;        // years to maturity
  double r = 0.0;        // continuously compounded rate
  double sigma = 0.2;    // Black-Scholes volatility

  void validate() const {
    require(std::isfinite(S) && std::isfinite(K) && std::isfinite(T) && std::isfinite(r) && std::isfinite(sigma),
            "option spec must be finite");
    require(S > 0.0, "spot must be > 0");
    require(K > 0.0, "strike must be > 0");
    require(T >= 0.0, "maturity must be >= 0");
    require(sigma >= 0.0, "volatility must be >= 0");
  }
  double discount() const noexcept { return std::exp(-r * T); }
};

struct GreeksReport {
  double delta = 0.0;
  double gamma = 0.0;
  double theta = 0.0;  // -dC/d(time to maturity), per year
  double vega = 0.0;   // per unit volatility
  double rho = 0.0;    // per unit rate
};

namespace detail {
struct D12 {
  double d1, d2, sqrt_t;
};
inline D12 d12(const OptionSpec& s) {
  const double sqrt_t = std::sqrt(s.T);
  const double d1 = (std::log(s.S / s.K) + (s.r + 0.5 * s.sigma * s.sigma) * s.T) / (s.sigma * sqrt_t);
  return {d1, d1 - s.sigma * sqrt_t, sqrt_t};
}
}  // namespace detail

/// S N(d1) - K e^{-rT} N(d2); T = 0 or sigma = 0 return the deterministic limit max(S - K e^{-rT}, 0).
inline double bsm_call(const OptionSpec& spec) {
  spec.validate();
  if (spec.T == 0.0 || spec.sigma == 0.0) return std::max(spec.S - spec.K * spec.discount(), 0.0);
  const auto [d1, d2, sqrt_t] = detail::d12(spec);
  return spec.S * norm_cdf(d1) - spec.K * spec.discount() * norm_cdf(d2);
}

/// Put by parity.
inline double bsm_put(const OptionSpec& spec) {
  return std::max(bsm_call(spec) - spec.S + spec.K * spec.discount(), 0.0);
}

inline GreeksReport greeks(const OptionSpec& spec) {
  spec.validate();
  if (spec.T == 0.0 || spec.sigma == 0.0)
    throw DegenerateContract("greeks undefined at T = 0 or sigma = 0; use the payoff/forward limits");
  const auto [d1, d2, sqrt_t] = detail::d12(spec);
  const double nd1 = norm_pdf(d1);
  const double disc_k = spec.K * spec.discount();
  GreeksReport g;
  g.delta = norm_cdf(d1);
  g.gamma = nd1 / (spec.S * spec.sigma * sqrt_t);
  g.theta = -spec.S * nd1 * spec.sigma / (2.0 * sqrt_t) - spec.r * disc_k * norm_cdf(d2);
  g.vega = spec.S * nd1 * sqrt_t;
  g.rho = disc_k * spec.T * norm_cdf(d2);
  return g;
}

// ---------------------------------------------------------------------------
// Black caplets

struct CapletSpec {
  double discount = 1.0;   // P(t, t_i)
  double forward = 0.04;   // L_i(t)
  double strike = 0.04;    // cap level L
  double accrual = 0.5;    // delta_i
  double total_vol = 0.2;  // integrated volatility sigma-bar_i (dimensionless)

  void validate() const {
    require(accrual > 0.0, "caplet accrual must be > 0");
    require(total_vol >= 0.0 && std::isfinite(total_vol), "caplet total vol must be >= 0");
    require(forward > 0.0 && strike > 0.0, "caplet forward and strike must be > 0");
    require(discount > 0.0 && std::isfinite(discount), "caplet discount factor must be > 0");
  }
};

inline double black_caplet(const CapletSpec& c) {
  c.validate();
  const double scale = c.accrual * c.discount;
  if (c.total_vol == 0.0) return scale * std::max(c.forward - c.strike, 0.0);
  const double d1 = (std::log(c.forward / c.strike) + 0.5 * c.total_vol * c.total_vol) / c.total_vol;
  const double d2 = d1 - c.total_vol;
  return scale * (c.forward * norm_cdf(d1) - c.strike * norm_cdf(d2));
}

inline double black_cap(std::span<const CapletSpec> caplets, double notional = 1.0) {
  double sum = 0.0;
  for (const auto& c : caplets) sum += black_caplet(c);
  return notional * sum;
}

// ---------------------------------------------------------------------------
// Characteristic functions of the log-return X_T = log(S_T / S_0) - rT

namespace detail {
// exp(w) - 1 without cancellation for small |w|.
inline cplx expm1(cplx w) {
  const double half_sin = std::sin(0.5 * w.imag());
  return {std::expm1(w.real()) * std::cos(w.imag()) - 2.0 * half_sin * half_sin,
          std::exp(w.real()) * std::sin(w.imag())};
}
}  // namespace detail

/// Heston characteristic function E[exp(i z X_T)] in the non-trapping (Albrecher)
/// form, rearranged so nothing is divided by sigma_v^2: the sigma_v -> 0 limit is
/// evaluated without cancellation.
inline cplx heston_cf(cplx z, const HestonParams& p, double T) {
  const cplx i{0.0, 1.0};
  const cplx a = i * z + z * z;
  if (a == cplx{0.0, 0.0}) return {1.0, 0.0};  // z = 0 and z = -i
  const double s2 = p.sigma_v * p.sigma_v;
  const cplx b = p.kappa - p.rho * p.sigma_v * i * z;
  const cplx d = std::sqrt(b * b + s2 * a);
  const cplx bd = b + d;
  if (std::abs(bd) == 0.0) throw NumericalFailure("heston_cf: singular Riccati solution at z=" +
                                                  io::format_double(z.real()) + "+" + io::format_double(z.imag()) + "i");
  const cplx e = std::exp(-d * T);
  const cplx g_hat = -a / (bd * bd);  // g = sigma_v^2 * g_hat
  const cplx g = s2 * g_hat;
  const cplx one_minus_e = -detail::expm1(-d * T);
  const cplx D = -a / bd * one_minus_e / (1.0 - g * e);
  const cplx w = g * one_minus_e / (1.0 - g);
  cplx log1p_over_w;
  if (std::abs(w) < 1e-3) {
    log1p_over_w = 1.0 - w * (0.5 - w * (1.0 / 3.0 - w * (0.25 - w * 0.2)));
  } else {
    log1p_over_w = std::log(1.0 + w) / w;
  }
  const cplx C = p.kappa * p.theta_bar * (-a * T / bd - 2.0 * g_hat * one_minus_e / (1.0 - g) * log1p_over_w);
  const cplx phi = std::exp(C + D * p.v0);
  if (!std::isfinite(phi.real()) || !std::isfinite(phi.imag()))
    throw NumericalFailure("heston_cf: overflow at z=" + io::format_double(z.real()) + "+" +
                           io::format_double(z.imag()) + "i");
  return phi;
}

inline cplx black_scholes_cf(cplx z, double sigma, double T) {
  const cplx i{0.0, 1.0};
  const double v = sigma * sigma;
  return std::exp(i * z * (-0.5 * v * T) - z * z * (0.5 * v * T));
}

struct BlackScholesModel {
  double sigma = 0.2;
};

class CharacteristicFunction {
 public:
  using Model = std::variant<BlackScholesModel, HestonParams>;

  static CharacteristicFunction black_scholes(double sigma, double T) {
    require(sigma >= 0.0 && std::isfinite(sigma), "cf: sigma must be >= 0");
    return CharacteristicFunction(BlackScholesModel{sigma}, T);
  }
  static CharacteristicFunction heston(const HestonParams& p, double T) {
    p.validate();
    return CharacteristicFunction(p, T);
  }

  cplx operator()(cplx z) const {
    return std::visit(
        [&](const auto& m) -> cplx {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, BlackScholesModel>) {
            return black_scholes_cf(z, m.sigma, maturity_);
          } else {
            return heston_cf(z, m, maturity_);
          }
        },
        model_);
  }

  double maturity() const noexcept { return maturity_; }
  const Model& model() const noexcept { return model_; }
  std::string tag() const { return model_.index() == 0 ? "black-scholes" : "heston"; }

 private:
  CharacteristicFunction(Model m, double T) : model_(std::move(m)), maturity_(T) {
    require(T > 0.0 && std::isfinite(T), "cf: maturity must be > 0");
  }
  Model model_;
  double maturity_;
};

struct FourierOptions {
  double z_max = 200.0;
  double abs_tol = 1e-9;
  std::size_t max_intervals = 4000;
};

struct FourierPrice {
  double price = 0.0;
  double error = 0.0;  // quadrature estimate plus truncation estimate, in price units
};

namespace detail {
inline void check_cf_maturity(const CharacteristicFunction& cf, const OptionSpec& spec) {
  spec.validate();
  require(std::abs(cf.maturity() - spec.T) <= 1e-12 * std::max(1.0, spec.T),
          "characteristic function maturity does not match the option");
}

template <class F>
FourierPrice finish_fourier(const F& integrand, double scale, double offset, const FourierOptions& opt,
                            const char* name) {
  const QuadratureResult q = integrate(integrand, 0.0, opt.z_max, {opt.abs_tol, 0.0, opt.max_intervals});
  // integrand decays at least like 1/z^2 beyond z_max
  const double tail = std::abs(integrand(opt.z_max)) * opt.z_max;
  const double error = std::abs(scale) * (q.error + tail);
  if (!q.converged)
    throw NumericalFailure(std::string(name) + ": quadrature did not converge (error estimate " +
                           io::format_double(error) + ")");
  return {offset + scale * q.value, error};
}
}  // namespace detail

/// C0 = S - sqrt(S K) e^{-rT/2} / pi * int_0^inf Re[e^{izk} phi(z - i/2)] dz / (z^2 + 1/4),
/// k = log(S/K) + rT.
inline FourierPrice lewis_call(const CharacteristicFunction& cf, const OptionSpec& spec,
                               const FourierOptions& opt = {}) {
  detail::check_cf_maturity(cf, spec);
  const double k = std::log(spec.S / spec.K) + spec.r * spec.T;
  const cplx half_i{0.0, 0.5};
  auto integrand = [&](double z) {
    const cplx v = std::exp(cplx{0.0, z * k}) * cf(cplx{z, 0.0} - half_i);
    return v.real() / (z * z + 0.25);
  };
  const double scale = -std::sqrt(spec.S * spec.K) * std::exp(-0.5 * spec.r * spec.T) / std::numbers::pi;
  return detail::finish_fourier(integrand, scale, spec.S, opt, "lewis_call");
}

/// Damped-call transform priced by direct quadrature in forward-normalized log strike
/// k = log(K / (S e^{rT})): C0 = S e^{-alpha k} / pi * int_0^inf Re[e^{-ivk} psi(v)] dv.
inline FourierPrice carr_madan_call(const CharacteristicFunction& cf, const OptionSpec& spec, double alpha,
                                    const FourierOptions& opt = {}) {
  detail::check_cf_maturity(cf, spec);
  require(alpha > 0.0 && std::isfinite(alpha), "carr_madan: damping alpha must be > 0");
  const cplx shift{0.0, alpha + 1.0};
  const cplx at_zero = cf(-shift);
  require(std::isfinite(at_zero.real()) && at_zero.real() > 0.0,
          "carr_madan: characteristic function not finite at -(alpha+1)i; reduce alpha");
  const double k = std::log(spec.K / (spec.S * std::exp(spec.r * spec.T)));
  auto integrand = [&](double v) {
    const cplx denom{alpha * alpha + alpha - v * v, (2.0 * alpha + 1.0) * v};
    const cplx psi = cf(cplx{v, 0.0} - shift) / denom;
    return (std::exp(cplx{0.0, -v * k}) * psi).real();
  };
  const double scale = spec.S * std::exp(-alpha * k) / std::numbers::pi;
  return detail::finish_fourier(integrand, scale, 0.0, opt, "carr_madan_call");
}

// ---------------------------------------------------------------------------
// Least-squares Monte Carlo (American put)

struct LsmcResult {
  double price = 0.0;
  double std_error = 0.0;
  std::size_t fallback_steps = 0;     // steps with too few in-the-money paths to regress
  std::size_t degree_reductions = 0;  // steps where the basis was rank-deficient
  bool exercise_at_start = false;
};

namespace detail {

// Least squares of y on monomials of x up to `degree`; lowers the degree while
// the normal matrix is numerically singular. Returns the fitted coefficients.
inline std::vector<double> fit_polynomial(std::span<const double> x, std::span<const double> y, int degree,
                                          std::size_t& reductions) {
  for (int deg = degree; deg >= 0; --deg) {
    const std::size_t m = static_cast<std::size_t>(deg) + 1;
    Matrix normal(m, m);
    std::vector<double> rhs(m, 0.0);
    std::vector<double> powers(m);
    for (std::size_t i = 0; i < x.size(); ++i) {
      powers[0] = 1.0;
      for (std::size_t a = 1; a < m; ++a) powers[a] = powers[a - 1] * x[i];
      for (std::size_t a = 0; a < m; ++a) {
        rhs[a] += powers[a] * y[i];
        for (std::size_t b = 0; b <= a; ++b) normal(a, b) += powers[a] * powers[b];
      }
    }
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = a + 1; b < m; ++b) normal(a, b) = normal(b, a);
    std::vector<double> diag(m);
    for (std::size_t a = 0; a < m; ++a) diag[a] = normal(a, a);
    bool ok = cholesky_in_place(normal);
    for (std::size_t a = 0; ok && a < m; ++a)
      if (normal(a, a) * normal(a, a) < 1e-12 * diag[a]) ok = false;
    if (ok) {
      forward_substitute(normal, rhs);
      backward_substitute(normal, rhs);
      return rhs;
    }
    ++reductions;
  }
  return {0.0};
}

}  // namespace detail

/// Backward induction over the recorded columns of `asset`, regressing discounted
/// continuation cash flows on monomials of S/K over in-the-money paths.
inline LsmcResult lsmc_american_put(const PathMatrix& asset, double K, double r, int basis_degree = 3) {
  require(asset.rows() >= 1 && asset.cols() >= 2, "lsmc: need at least one path and one step");
  require(K > 0.0 && std::isfinite(r), "lsmc: strike must be > 0 and rate finite");
  require(basis_degree >= 0, "lsmc: basis degree must be >= 0");
  const std::size_t n = asset.rows();
  const std::size_t last = asset.cols() - 1;
  const double disc = std::exp(-r * asset.grid().dt);
  auto payoff = [K](double s) { return std::max(K - s, 0.0); };

  LsmcResult out;
  std::vector<double> cash(n);
  for (std::size_t i = 0; i < n; ++i) cash[i] = payoff(asset(i, last));
  std::vector<double> xs, ys;
  std::vector<std::size_t> itm;
  for (std::size_t k = last; k-- > 1;) {
    for (double& c : cash) c *= disc;
    itm.clear();
    xs.clear();
    ys.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (payoff(asset(i, k)) > 0.0) {
        itm.push_back(i);
        xs.push_back(asset(i, k) / K);
        ys.push_back(cash[i]);
      }
    }
    if (itm.size() < static_cast<std::size_t>(basis_degree) + 1) {
      ++out.fallback_steps;
      continue;
    }
    const std::vector<double> coef = detail::fit_polynomial(xs, ys, basis_degree, out.degree_reductions);
    for (std::size_t j = 0; j < itm.size(); ++j) {
      double cont = 0.0;
      for (std::size_t a = coef.size(); a-- > 0;) cont = cont * xs[j] + coef[a];
      const double ex = payoff(asset(itm[j], k));
      if (ex > cont) cash[itm[j]] = ex;
    }
  }
  for (double& c : cash) c *= disc;
  const SampleStats stats = sample_stats(cash);
  const double immediate = payoff(asset(0, 0));
  if (immediate > stats.mean) {
    out.price = immediate;
    out.exercise_at_start = true;
  } else {
    out.price = stats.mean;
    out.std_error = stats.std_error();
  }
  return out;
}

}  // namespace qb
