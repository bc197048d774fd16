#pragma once

// Seeded Monte-Carlo simulators for short-rate, volatility and forward-rate
// models on a uniform time grid. Every path owns a counter-based random
// stream keyed by (seed, path index), so results do not depend on the number
// of worker threads.

#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qb/core/errors.hpp"
#include "qb/core/io.hpp"
#include "qb/core/numeric.hpp"
#include "qb/core/parallel.hpp"
#include "qb/core/random.hpp"

namespace qb {

struct TimeGrid {
  double t0 = 0.0;
  double dt = 0.01;
  std::size_t n_steps = 1;

  double time(std::size_t k) const noexcept { return t0 + static_cast<double>(k) * dt; }
  double horizon() const noexcept { return time(n_steps); }

  void validate() const {
    require(std::isfinite(t0) && std::isfinite(dt), "time grid: non-finite t0/dt");
    require(dt > 0.0, "time grid: dt must be > 0");
    require(n_steps >= 1, "time grid: n_steps must be >= 1");
  }
};

/// Rows are paths, columns are recorded grid points (column 0 is the initial condition).
class PathMatrix {
 public:
  PathMatrix() = default;
  PathMatrix(TimeGrid grid, std::size_t n_paths, std::uint64_t seed, std::vector<double> values)
      : grid_(grid), n_paths_(n_paths), seed_(seed), values_(std::move(values)) {
    require(values_.size() == n_paths_ * cols(), "PathMatrix: value count does not match shape");
    if (!all_finite(values_)) throw NumericalFailure("PathMatrix: simulation produced non-finite values");
  }

  std::size_t rows() const noexcept { return n_paths_; }
  std::size_t cols() const noexcept { return grid_.n_steps + 1; }
  const TimeGrid& grid() const noexcept { return grid_; }
  std::uint64_t seed() const noexcept { return seed_; }

  double operator()(std::size_t path, std::size_t k) const noexcept { return values_[path * cols() + k]; }
  std::span<const double> row(std::size_t path) const noexcept { return {values_.data() + path * cols(), cols()}; }
  std::span<const double> values() const noexcept { return values_; }

  std::vector<double> column(std::size_t k) const {
    std::vector<double> out(rows());
    for (std::size_t i = 0; i < rows(); ++i) out[i] = (*this)(i, k);
    return out;
  }
  std::vector<double> terminal() const { return column(cols() - 1); }

  /// Header holds the grid times; one row per path; 17 significant digits.
  void write_csv(std::ostream& os) const {
    std::vector<double> times(cols());
    for (std::size_t k = 0; k < cols(); ++k) times[k] = grid_.time(k);
    io::write_row(os, times);
    for (std::size_t i = 0; i < rows(); ++i) io::write_row(os, row(i));
  }
  std::string to_csv() const {
    std::ostringstream os;
    write_csv(os);
    return os.str();
  }

  friend bool operator==(const PathMatrix& a, const PathMatrix& b) {
    return a.n_paths_ == b.n_paths_ && a.grid_.n_steps == b.grid_.n_steps && a.values_ == b.values_;
  }

 private:
  TimeGrid grid_{};
  std::size_t n_paths_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<double> values_;
};

/// Only every `record_stride`-th grid point is stored (saves memory for long
/// grids when only terminal statistics are needed). Stride must divide n_steps.
struct RecordOptions {
  std::size_t record_stride = 1;
};

namespace detail {

inline TimeGrid recorded_grid(const TimeGrid& grid, const RecordOptions& rec) {
  require(rec.record_stride >= 1 && grid.n_steps % rec.record_stride == 0,
          "record_stride must divide n_steps");
  return {grid.t0, grid.dt * static_cast<double>(rec.record_stride), grid.n_steps / rec.record_stride};
}

// Drives one scalar recursion per path; step(x, k, rng) returns x_{k+1}.
template <class Init, class Step>
PathMatrix simulate_scalar(const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed, const RecordOptions& rec,
                           Init&& init, Step&& step) {
  const TimeGrid out_grid = recorded_grid(grid, rec);
  const std::size_t cols = out_grid.n_steps + 1;
  std::vector<double> values(n_paths * cols);
  parallel_for(n_paths, [&](std::size_t p) {
    Stream rng(seed, p);
    double x = init(p);
    double* row = values.data() + p * cols;
    row[0] = x;
    for (std::size_t k = 0; k < grid.n_steps; ++k) {
      x = step(x, k, rng);
      if ((k + 1) % rec.record_stride == 0) row[(k + 1) / rec.record_stride] = x;
    }
  });
  return PathMatrix(out_grid, n_paths, seed, std::move(values));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Ornstein-Uhlenbeck / Vasicek and Hull-White

struct OuParams {
  double theta = 1.0;  // mean-reversion rate
  double mu = 0.0;     // long-run level
  double sigma = 0.0;
  double x0 = 0.0;

  void validate() const {
    require(std::isfinite(theta) && std::isfinite(mu) && std::isfinite(sigma) && std::isfinite(x0),
            "OU parameters must be finite");
    require(theta >= 0.0, "OU theta must be >= 0");
    require(sigma >= 0.0, "OU sigma must be >= 0");
  }
};

using LevelFunction = std::function<double(double)>;

/// Euler scheme for dr = (level(t) - a r) dt + sigma dW, with a = params.theta.
inline PathMatrix simulate_hull_white(const OuParams& params, const LevelFunction& level, const TimeGrid& grid,
                                      std::size_t n_paths, std::uint64_t seed, const RecordOptions& rec = {}) {
  params.validate();
  grid.validate();
  require(n_paths >= 1, "n_paths must be >= 1");
  std::vector<double> levels(grid.n_steps);
  for (std::size_t k = 0; k < grid.n_steps; ++k) {
    levels[k] = level(grid.time(k));
    require(std::isfinite(levels[k]), "Hull-White level function is not finite at t=" +
                                          io::format_double(grid.time(k)));
  }
  const double a = params.theta;
  const double dt = grid.dt;
  const double vol = params.sigma * std::sqrt(dt);
  return detail::simulate_scalar(
      grid, n_paths, seed, rec, [&](std::size_t) { return params.x0; },
      [&](double x, std::size_t k, Stream& rng) { return x + (levels[k] - a * x) * dt + vol * rng.normal(); });
}

/// Euler-Maruyama for dX = theta (mu - X) dt + sigma dW. Shares the Hull-White
/// kernel with the constant level theta * mu, so the two agree bit for bit.
inline PathMatrix simulate_ou(const OuParams& params, const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed,
                              const RecordOptions& rec = {}) {
  params.validate();
  const double level = params.theta * params.mu;
  return simulate_hull_white(params, [level](double) { return level; }, grid, n_paths, seed, rec);
}

// ---------------------------------------------------------------------------
// Literal "rough volatility" recursion: dX = dt (gamma X + sigma dW)

struct RoughVolParams {
  std::vector<double> S0;  // one entry per path
  double sigma = 0.0;
  double gamma = 0.0;
};

/// `scaled_noise` swaps the literal sigma*dW*dt shock for the diffusion-consistent sigma*dW*sqrt(dt).
/// The step count is T/dt rounded to the nearest integer.
inline PathMatrix simulate_rough_vol(const RoughVolParams& params, double T, double dt, std::uint64_t seed,
                                     bool scaled_noise = false, const RecordOptions& rec = {}) {
  require(std::isfinite(T) && std::isfinite(dt), "rough vol: T and dt must be finite");
  require(dt > 0.0, "rough vol: dt must be > 0");
  require(T >= dt, "rough vol: T must be >= dt");
  require(!params.S0.empty(), "rough vol: S0 must be non-empty");
  require(params.sigma >= 0.0 && std::isfinite(params.sigma) && std::isfinite(params.gamma),
          "rough vol: sigma must be finite and >= 0");
  const TimeGrid grid{0.0, dt, static_cast<std::size_t>(std::llround(T / dt))};
  const double gamma = params.gamma;
  const double shock = scaled_noise ? params.sigma * std::sqrt(dt) : params.sigma * dt;
  return detail::simulate_scalar(
      grid, params.S0.size(), seed, rec, [&](std::size_t p) { return params.S0[p]; },
      [&](double x, std::size_t, Stream& rng) { return x + (dt * gamma * x + shock * rng.normal()); });
}

// ---------------------------------------------------------------------------
// rBergomi variance

struct RBergomiParams {
  double xi0 = 0.04;  // flat forward variance
  double eta = 1.9;   // vol-of-vol
  double hurst = 0.1;

  double kernel_exponent() const noexcept { return 0.5 - hurst; }

  void validate() const {
    require(std::isfinite(xi0) && std::isfinite(eta) && std::isfinite(hurst), "rBergomi parameters must be finite");
    require(xi0 > 0.0, "rBergomi xi0 must be > 0");
    require(eta >= 0.0, "rBergomi eta must be >= 0");
    require(hurst > 0.0 && hurst <= 0.5, "rBergomi hurst must lie in (0, 0.5]");
  }
};

enum class VolterraScheme {
  /// Each interval's kernel weight matches the exact variance of the kernel over
  /// that interval, so Var(W~(t_k)) = t_k^{2H} holds exactly on the grid.
  variance_matched,
  /// Kernel evaluated at the left end of each Brownian increment.
  left_point,
};

/// Weights b_m (m = 1..n) with W~(t_k) = sum_{j<k} b_{k-j} Z_j, Z_j iid N(0,1).
inline std::vector<double> volterra_weights(double hurst, double dt, std::size_t n, VolterraScheme scheme) {
  std::vector<double> b(n + 1, 0.0);
  const double gamma = 0.5 - hurst;
  for (std::size_t m = 1; m <= n; ++m) {
    const double md = static_cast<double>(m);
    if (scheme == VolterraScheme::variance_matched) {
      b[m] = std::pow(dt, hurst) * std::sqrt(std::pow(md, 2.0 * hurst) - std::pow(md - 1.0, 2.0 * hurst));
    } else {
      b[m] = std::sqrt(2.0 * hurst * dt) * std::pow(md * dt, -gamma);
    }
  }
  return b;
}

/// The Volterra driver W~(u) = sqrt(2H) int_0^u (u-s)^{-gamma} dW_s on the grid (u measured from t0).
inline PathMatrix simulate_volterra_driver(double hurst, const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed,
                                           VolterraScheme scheme = VolterraScheme::variance_matched,
                                           const RecordOptions& rec = {}) {
  require(hurst > 0.0 && hurst <= 0.5, "hurst must lie in (0, 0.5]");
  grid.validate();
  require(n_paths >= 1, "n_paths must be >= 1");
  const TimeGrid out_grid = detail::recorded_grid(grid, rec);
  const std::size_t n = grid.n_steps;
  const std::size_t cols = out_grid.n_steps + 1;
  const std::vector<double> b = volterra_weights(hurst, grid.dt, n, scheme);
  std::vector<double> values(n_paths * cols, 0.0);
  parallel_for(n_paths, [&](std::size_t p) {
    Stream rng(seed, p);
    std::vector<double> z(n);
    rng.fill_normal(z);
    double* row = values.data() + p * cols;
    for (std::size_t c = 1; c < cols; ++c) {
      const std::size_t k = c * rec.record_stride;
      double acc = 0.0;
      for (std::size_t j = 0; j < k; ++j) acc += b[k - j] * z[j];
      row[c] = acc;
    }
  });
  return PathMatrix(out_grid, n_paths, seed, std::move(values));
}

/// v(u) = xi0 exp(eta W~(u) - eta^2 u^{2H} / 2): lognormal with mean xi0 at every grid point.
inline PathMatrix simulate_rbergomi_variance(const RBergomiParams& params, const TimeGrid& grid, std::size_t n_paths,
                                             std::uint64_t seed,
                                             VolterraScheme scheme = VolterraScheme::variance_matched,
                                             const RecordOptions& rec = {}) {
  params.validate();
  const PathMatrix driver = simulate_volterra_driver(params.hurst, grid, n_paths, seed, scheme, rec);
  const TimeGrid& g = driver.grid();
  std::vector<double> values(driver.values().begin(), driver.values().end());
  for (std::size_t p = 0; p < driver.rows(); ++p) {
    for (std::size_t k = 0; k < driver.cols(); ++k) {
      const double u = static_cast<double>(k) * g.dt;
      double& v = values[p * driver.cols() + k];
      v = params.xi0 * std::exp(params.eta * v - 0.5 * params.eta * params.eta * std::pow(u, 2.0 * params.hurst));
    }
  }
  return PathMatrix(g, driver.rows(), seed, std::move(values));
}

// ---------------------------------------------------------------------------
// Heston and geometric Brownian motion

struct HestonParams {
  double v0 = 0.04;
  double kappa = 1.5;
  double theta_bar = 0.04;
  double sigma_v = 0.3;
  double rho = -0.7;
  double r = 0.0;

  void validate() const {
    require(std::isfinite(v0) && std::isfinite(kappa) && std::isfinite(theta_bar) && std::isfinite(sigma_v) &&
                std::isfinite(rho) && std::isfinite(r),
            "Heston parameters must be finite");
    require(v0 >= 0.0 && kappa >= 0.0 && theta_bar >= 0.0 && sigma_v >= 0.0,
            "Heston v0, kappa, theta_bar, sigma_v must be >= 0");
    require(std::abs(rho) <= 1.0, "Heston rho must lie in [-1, 1]");
  }
};

struct HestonPaths {
  PathMatrix asset;
  PathMatrix variance;
};

/// Full-truncation Euler: max(V, 0) feeds both drift and diffusion; the asset
/// is advanced in log space.
inline HestonPaths simulate_heston(const HestonParams& params, double S0, const TimeGrid& grid, std::size_t n_paths,
                                   std::uint64_t seed, const RecordOptions& rec = {}) {
  params.validate();
  grid.validate();
  require(S0 > 0.0 && std::isfinite(S0), "Heston S0 must be > 0");
  require(n_paths >= 1, "n_paths must be >= 1");
  const TimeGrid out_grid = detail::recorded_grid(grid, rec);
  const std::size_t cols = out_grid.n_steps + 1;
  std::vector<double> asset(n_paths * cols);
  std::vector<double> variance(n_paths * cols);
  const double dt = grid.dt;
  const double rho_perp = std::sqrt(std::max(0.0, 1.0 - params.rho * params.rho));
  parallel_for(n_paths, [&](std::size_t p) {
    Stream rng(seed, p);
    double log_s = std::log(S0);
    double v = params.v0;
    asset[p * cols] = S0;
    variance[p * cols] = v;
    for (std::size_t k = 0; k < grid.n_steps; ++k) {
      const double z1 = rng.normal();
      const double z2 = rng.normal();
      const double vp = std::max(v, 0.0);
      const double sq = std::sqrt(vp * dt);
      log_s += (params.r - 0.5 * vp) * dt + sq * z1;
      v += params.kappa * (params.theta_bar - vp) * dt + params.sigma_v * sq * (params.rho * z1 + rho_perp * z2);
      if ((k + 1) % rec.record_stride == 0) {
        const std::size_t c = (k + 1) / rec.record_stride;
        asset[p * cols + c] = std::exp(log_s);
        variance[p * cols + c] = v;
      }
    }
  });
  return {PathMatrix(out_grid, n_paths, seed, std::move(asset)),
          PathMatrix(out_grid, n_paths, seed, std::move(variance))};
}

/// Exact log-normal stepping of dS = r S dt + sigma S dW.
inline PathMatrix simulate_gbm(double S0, double r, double sigma, const TimeGrid& grid, std::size_t n_paths,
                               std::uint64_t seed, const RecordOptions& rec = {}) {
  grid.validate();
  require(S0 > 0.0 && std::isfinite(S0) && std::isfinite(r) && sigma >= 0.0 && std::isfinite(sigma),
          "GBM requires S0 > 0, finite r, sigma >= 0");
  const double drift = (r - 0.5 * sigma * sigma) * grid.dt;
  const double vol = sigma * std::sqrt(grid.dt);
  return detail::simulate_scalar(
      grid, n_paths, seed, rec, [&](std::size_t) { return S0; },
      [&](double s, std::size_t, Stream& rng) { return s * std::exp(drift + vol * rng.normal()); });
}

// ---------------------------------------------------------------------------
// LIBOR market model under the terminal measure

struct LiborCurve {
  std::vector<double> forwards;          // L_i(0)
  std::vector<double> vols;              // sigma_i
  std::vector<double> accruals;          // delta_i
  std::vector<double> discount_factors;  // P(0, t_i), payment dates
  double first_fixing = 1.0;             // t_0, fixing time of the first forward
  std::vector<double> displacements;     // a_i; empty means all zero
  double alpha = 1.0;                    // constant scalar loading of the displaced diffusion

  std::size_t size() const noexcept { return forwards.size(); }
  double displacement(std::size_t i) const noexcept { return displacements.empty() ? 0.0 : displacements[i]; }

  void validate() const {
    const std::size_t n = forwards.size();
    require(n >= 1, "LIBOR curve needs at least one forward");
    require(vols.size() == n && accruals.size() == n, "LIBOR curve: forwards/vols/accruals sizes differ");
    require(discount_factors.empty() || discount_factors.size() == n, "LIBOR curve: discount factor count");
    require(displacements.empty() || displacements.size() == n, "LIBOR curve: displacement count");
    require(std::isfinite(alpha) && std::isfinite(first_fixing) && first_fixing > 0.0,
            "LIBOR curve: first fixing must be > 0");
    for (std::size_t i = 0; i < n; ++i) {
      require(accruals[i] > 0.0, "LIBOR accruals must be > 0");
      require(forwards[i] > -1.0 / accruals[i], "LIBOR forwards must exceed -1/delta");
      require(vols[i] >= 0.0 && std::isfinite(vols[i]), "LIBOR vols must be >= 0");
      require(displacement(i) <= 1.0 / accruals[i], "LIBOR displacement must be <= 1/delta");
      require(forwards[i] + displacement(i) > 0.0, "LIBOR displaced forward must be positive");
    }
  }
};

struct LiborSimulation {
  std::vector<PathMatrix> forwards;    // one matrix per forward rate
  std::vector<std::uint8_t> absorbed;  // per path
  std::size_t absorbed_count = 0;
};

/// Log-Euler on log(L_j + a_j) with the terminal-measure drift
///   -alpha^2 gamma_j sum_{i>j} delta_i (L_i + a_i) gamma_i / (1 + delta_i L_i)
/// (single driving Brownian motion). The last forward is driftless.
/// A path on which some forward reaches -1/delta is frozen and flagged absorbed.
inline LiborSimulation simulate_libor(const LiborCurve& curve, const TimeGrid& grid, std::size_t n_paths,
                                      std::uint64_t seed, const RecordOptions& rec = {}) {
  curve.validate();
  grid.validate();
  require(n_paths >= 1, "n_paths must be >= 1");
  require(grid.horizon() <= curve.first_fixing + 1e-12, "LIBOR grid horizon must not exceed the first fixing time");
  const std::size_t n = curve.size();
  const TimeGrid out_grid = detail::recorded_grid(grid, rec);
  const std::size_t cols = out_grid.n_steps + 1;
  std::vector<std::vector<double>> values(n, std::vector<double>(n_paths * cols));
  std::vector<std::uint8_t> absorbed(n_paths, 0);
  const double dt = grid.dt;
  const double sqdt = std::sqrt(dt);
  const double a2 = curve.alpha * curve.alpha;
  parallel_for(n_paths, [&](std::size_t p) {
    Stream rng(seed, p);
    std::vector<double> L(curve.forwards);
    std::vector<double> drift(n);
    for (std::size_t j = 0; j < n; ++j) values[j][p * cols] = L[j];
    bool dead = false;
    for (std::size_t k = 0; k < grid.n_steps; ++k) {
      const double dw = rng.normal() * sqdt;
      if (!dead) {
        double tail = 0.0;  // sum over i > j, accumulated from the back
        for (std::size_t jj = n; jj-- > 0;) {
          const double g = curve.vols[jj];
          drift[jj] = -a2 * g * tail - 0.5 * a2 * g * g;
          tail += curve.accruals[jj] * (L[jj] + curve.displacement(jj)) * g / (1.0 + curve.accruals[jj] * L[jj]);
        }
        for (std::size_t j = 0; j < n; ++j) {
          const double a = curve.displacement(j);
          L[j] = (L[j] + a) * std::exp(drift[j] * dt + curve.alpha * curve.vols[j] * dw) - a;
          if (!(L[j] > -1.0 / curve.accruals[j]) || !std::isfinite(L[j])) dead = true;
        }
        if (dead) {
          // keep the last admissible state for the record
          for (std::size_t j = 0; j < n; ++j)
            if (!std::isfinite(L[j])) L[j] = -1.0 / curve.accruals[j];
        }
      }
      if ((k + 1) % rec.record_stride == 0) {
        const std::size_t c = (k + 1) / rec.record_stride;
        for (std::size_t j = 0; j < n; ++j) values[j][p * cols + c] = L[j];
      }
    }
    absorbed[p] = dead ? 1 : 0;
  });
  LiborSimulation out;
  out.forwards.reserve(n);
  for (std::size_t j = 0; j < n; ++j) out.forwards.emplace_back(out_grid, n_paths, seed, std::move(values[j]));
  out.absorbed = std::move(absorbed);
  for (auto flag : out.absorbed) out.absorbed_count += flag;
  return out;
}

}  // namespace qb
