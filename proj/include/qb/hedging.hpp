#pragma once

// Discrete-time delta(-gamma) hedging of a short European call.
//
// Faithful mode follows the original recipe literally: the relative price
// shock has standard deviation sigma*dt, maturity is never decremented, and
// each step books delta_new * dS + gamma_prev * dS^2. Corrected mode uses the
// diffusion-consistent shock sigma*sqrt(dt), decays maturity, and holds the
// previous step's delta in stock with the remainder in a bond accruing at r,
// which is a genuine self-financing replication.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "qb/core/errors.hpp"
#include "qb/core/numeric.hpp"
#include "qb/core/parallel.hpp"
#include "qb/core/random.hpp"
#include "qb/pricing.hpp"

namespace qb {

struct HedgeConfig {
  OptionSpec spec;
  double dt = 1.0 / 252.0;
  /// Starting portfolio value; NaN means "the option premium".
  double initial_value = std::numeric_limits<double>::quiet_NaN();
  bool faithful = true;
  /// Decrement the maturity each step. Unset: on in corrected mode, off in faithful mode.
  std::optional<bool> decay_maturity;
  /// Volatility used for premium and Greeks when it differs from the simulated one.
  std::optional<double> hedge_vol;

  bool decays() const { return decay_maturity.value_or(!faithful); }
  std::size_t steps() const { return static_cast<std::size_t>(std::llround(spec.T / dt)); }

  void validate() const {
    spec.validate();
    require(std::isfinite(dt) && dt > 0.0, "hedge dt must be > 0");
    require(dt <= spec.T, "hedge dt must not exceed the maturity");
    require(!hedge_vol || (std::isfinite(*hedge_vol) && *hedge_vol >= 0.0), "hedge_vol must be >= 0");
  }
};

struct HedgeResult {
  double initial_value = 0.0;
  double initial_spot = 0.0;
  double final_value = 0.0;
  double dt = 0.0;
  double bond_rate = 0.0;            // rate the cash position accrued at (0 in faithful mode)
  GreeksReport initial_greeks;       // theta is recorded here but never enters the update
  std::vector<double> adjustments;   // per step
  std::vector<double> spots;         // spot after each step
  std::vector<GreeksReport> greeks;  // greeks at the post-step state
  std::vector<double> stock_units;   // stock held over each step
  std::vector<double> values;        // portfolio value after each step
  std::size_t truncated = 0;         // 1 if the spot was driven <= 0 and the path stopped early

  std::size_t steps() const noexcept { return adjustments.size(); }
  double final_spot() const noexcept { return spots.empty() ? initial_spot : spots.back(); }
};

/// Greeks with the deterministic limits at T = 0 or sigma = 0 (where the call is
/// max(S - K e^{-rT}, 0)).
inline GreeksReport greeks_or_limit(const OptionSpec& spec) {
  if (spec.T > 1e-12 && spec.sigma > 0.0) return greeks(spec);
  GreeksReport g;
  const double disc_k = spec.K * std::exp(-spec.r * spec.T);
  if (spec.S > disc_k) {
    g.delta = 1.0;
    g.theta = -spec.r * disc_k;
    g.rho = spec.T * disc_k;
  }
  return g;
}

/// One hedging run. `stream` selects an independent random stream (trial index);
/// `forced_moves`, when non-empty, supplies the spot increment of each step instead
/// of a random shock.
inline HedgeResult dynamic_hedge(const HedgeConfig& cfg, std::uint64_t seed, std::uint64_t stream = 0,
                                 std::span<const double> forced_moves = {}) {
  cfg.validate();
  const OptionSpec& base = cfg.spec;
  const std::size_t n = cfg.steps();
  const bool decay = cfg.decays();
  const double shock_sd = cfg.faithful ? base.sigma * cfg.dt : base.sigma * std::sqrt(cfg.dt);
  const double carry = cfg.faithful ? 0.0 : std::expm1(base.r * cfg.dt);

  auto state = [&](double spot, std::size_t step) {
    OptionSpec s = base;
    s.S = spot;
    s.sigma = cfg.hedge_vol.value_or(base.sigma);
    if (decay) s.T = std::max(0.0, base.T - static_cast<double>(step) * cfg.dt);
    return s;
  };

  HedgeResult res;
  res.dt = cfg.dt;
  res.bond_rate = cfg.faithful ? 0.0 : base.r;
  res.initial_spot = base.S;
  res.initial_value = std::isnan(cfg.initial_value) ? bsm_call(state(base.S, 0)) : cfg.initial_value;
  res.initial_greeks = greeks_or_limit(state(base.S, 0));
  res.adjustments.reserve(n);
  res.spots.reserve(n);
  res.greeks.reserve(n);
  res.stock_units.reserve(n);
  res.values.reserve(n);

  Stream rng(seed, stream);
  double spot = base.S;
  double value = res.initial_value;
  GreeksReport prev = res.initial_greeks;
  for (std::size_t k = 0; k < n; ++k) {
    const double move = k < forced_moves.size() ? forced_moves[k] : spot * shock_sd * rng.normal();
    const double next = spot + move;
    if (!(next > 0.0)) {
      res.truncated = 1;
      break;
    }
    const GreeksReport g = greeks_or_limit(state(next, decay ? k + 1 : 0));
    double units = 0.0;
    double adjustment = 0.0;
    if (cfg.faithful) {
      units = g.delta + prev.gamma * move;
      adjustment = g.delta * move + prev.gamma * move * move;
    } else {
      units = prev.delta;
      adjustment = units * move + (value - units * spot) * carry;
    }
    value += adjustment;
    res.adjustments.push_back(adjustment);
    res.spots.push_back(next);
    res.greeks.push_back(g);
    res.stock_units.push_back(units);
    res.values.push_back(value);
    spot = next;
    prev = g;
  }
  res.final_value = value;
  return res;
}

/// Largest rebalancing-time mismatch between the booked portfolio value and the
/// value of the holdings carried into that date (stock units plus the remaining
/// cash grown at `bond_rate`).
inline double self_financing_residual(const HedgeResult& result, double bond_rate) {
  const double growth = std::exp(bond_rate * result.dt);
  double worst = 0.0;
  double prev_value = result.initial_value;
  double prev_spot = result.initial_spot;
  for (std::size_t k = 0; k < result.steps(); ++k) {
    const double units = result.stock_units[k];
    const double carried = units * result.spots[k] + (prev_value - units * prev_spot) * growth;
    const double booked = prev_value + result.adjustments[k];
    worst = std::max({worst, std::abs(booked - carried), std::abs(result.values[k] - booked)});
    prev_value = result.values[k];
    prev_spot = result.spots[k];
  }
  return worst;
}

struct HedgeErrorStats {
  double std_hedged = 0.0;    // std of (final hedge portfolio - option payoff)
  double std_unhedged = 0.0;  // std of the naked short-call P&L
  double ratio = 0.0;         // std_hedged / std_unhedged, 0 when both vanish
  double mean_hedged = 0.0;
  std::size_t trials = 0;
  std::size_t truncated = 0;
};

inline HedgeErrorStats hedge_error_stats(const HedgeConfig& cfg, std::size_t n_trials, std::uint64_t seed) {
  cfg.validate();
  require(n_trials >= 2, "hedge_error_stats needs at least 2 trials");
  std::vector<double> hedged(n_trials), unhedged(n_trials);
  std::vector<std::uint8_t> cut(n_trials);
  const double growth = std::exp(cfg.spec.r * cfg.spec.T);
  parallel_for(n_trials, [&](std::size_t t) {
    const HedgeResult r = dynamic_hedge(cfg, seed, t);
    const double payoff = std::max(r.final_spot() - cfg.spec.K, 0.0);
    hedged[t] = r.final_value - payoff;
    unhedged[t] = r.initial_value * growth - payoff;
    cut[t] = static_cast<std::uint8_t>(r.truncated);
  });
  HedgeErrorStats out;
  out.trials = n_trials;
  for (auto c : cut) out.truncated += c;
  const SampleStats h = sample_stats(hedged);
  const SampleStats u = sample_stats(unhedged);
  out.std_hedged = h.stddev();
  out.std_unhedged = u.stddev();
  out.mean_hedged = h.mean;
  out.ratio = out.std_unhedged > 0.0 ? out.std_hedged / out.std_unhedged : 0.0;
  return out;
}

}  // namespace qb
