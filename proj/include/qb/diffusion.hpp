#pragma once

// Reverse-time diffusion sampler driven by a market drift plus a mean-reverting
// "transport" movement.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "qb/core/errors.hpp"
#include "qb/core/io.hpp"
#include "qb/core/parallel.hpp"
#include "qb/core/random.hpp"

namespace qb {

enum class DriftModel { vasicek, hull_white, libor, longstaff_schwartz };

/// Tagged drift parameters. Fields unused by the tag are ignored.
struct DriftSpec {
  DriftModel model = DriftModel::vasicek;
  double theta = 0.5;             // vasicek / longstaff_schwartz reversion speed
  double mu = 0.0;                // vasicek / longstaff_schwartz long-run level
  double a = 0.5;                 // hull_white reversion speed
  std::vector<double> levels{0.0};  // hull_white theta(t), piecewise constant per step
  double strike_bar = 0.0;        // longstaff_schwartz exercise boundary

  static DriftSpec vasicek(double theta, double mu) {
    DriftSpec s;
    s.model = DriftModel::vasicek;
    s.theta = theta;
    s.mu = mu;
    return s;
  }
  static DriftSpec hull_white(double a, std::vector<double> levels) {
    require(!levels.empty(), "hull_white drift needs at least one level");
    DriftSpec s;
    s.model = DriftModel::hull_white;
    s.a = a;
    s.levels = std::move(levels);
    return s;
  }
  static DriftSpec libor() {
    DriftSpec s;
    s.model = DriftModel::libor;
    return s;
  }
  static DriftSpec longstaff_schwartz(double theta, double mu, double strike_bar) {
    DriftSpec s;
    s.model = DriftModel::longstaff_schwartz;
    s.theta = theta;
    s.mu = mu;
    s.strike_bar = strike_bar;
    return s;
  }

  double level(double t) const {
    if (t <= 0.0) return levels.front();
    const auto k = static_cast<std::size_t>(t);
    return levels[std::min(k, levels.size() - 1)];
  }
};

inline std::string drift_model_name(DriftModel m) {
  switch (m) {
    case DriftModel::vasicek: return "vasicek";
    case DriftModel::hull_white: return "hull_white";
    case DriftModel::libor: return "libor";
    case DriftModel::longstaff_schwartz: return "longstaff_schwartz";
  }
  return "?";
}

inline DriftModel parse_drift_model(const std::string& s) {
  if (s == "vasicek") return DriftModel::vasicek;
  if (s == "hull_white") return DriftModel::hull_white;
  if (s == "libor") return DriftModel::libor;
  if (s == "longstaff_schwartz") return DriftModel::longstaff_schwartz;
  throw InvalidInput("unknown drift model '" + s + "'");
}

inline double drift_function(double x, double t, const DriftSpec& spec, double beta, double sigma) {
  switch (spec.model) {
    case DriftModel::vasicek: return spec.theta * (spec.mu - x);
    case DriftModel::hull_white: return spec.level(t) - spec.a * x;
    case DriftModel::libor: return -0.5 * sigma * sigma * x;  // log-forward drift
    case DriftModel::longstaff_schwartz:
      return spec.theta * (spec.mu - x) + beta * std::max(spec.strike_bar - x, 0.0);
  }
  return 0.0;
}

/// (1 - e^{-theta t}) / theta, continuous through theta = 0.
inline double transport_variance_factor(double theta, double t) {
  if (theta == 0.0) return t;
  return -std::expm1(-theta * t) / theta;
}

/// theta (mu - x) + sigma sqrt((1 - e^{-theta t}) / theta) * gauss
inline double transport_component(double x, double t, double theta, double mu, double sigma, double gauss) {
  require(sigma >= 0.0, "transport sigma must be >= 0");
  const double factor = transport_variance_factor(theta, t);
  require(factor >= 0.0, "transport variance factor is negative (theta t < 0)");
  return theta * (mu - x) + sigma * std::sqrt(factor) * gauss;
}

namespace detail {
enum : std::uint64_t { noise_tag = 1, transport_tag = 2, transition_tag = 3 };
}

/// Seeded variant; deterministic = true drops the Gaussian term.
inline double transport_component(double x, double t, double theta, double mu, double sigma, std::uint64_t seed,
                                  bool deterministic) {
  if (deterministic) return transport_component(x, t, theta, mu, sigma, 0.0);
  Stream rng(seed, static_cast<std::uint64_t>(t), detail::transport_tag);
  return transport_component(x, t, theta, mu, sigma, rng.normal());
}

enum class NoiseMode { gaussian, sine_of_gaussian };

inline NoiseMode parse_noise_mode(const std::string& s) {
  if (s == "gaussian") return NoiseMode::gaussian;
  if (s == "sine_of_gaussian") return NoiseMode::sine_of_gaussian;
  throw InvalidInput("unknown noise mode '" + s + "'");
}

inline std::string noise_mode_name(NoiseMode m) {
  return m == NoiseMode::gaussian ? "gaussian" : "sine_of_gaussian";
}

inline double noise_draw(NoiseMode mode, std::uint64_t seed, std::uint64_t t) {
  Stream rng(seed, t, detail::noise_tag);
  const double w = rng.normal();
  return mode == NoiseMode::gaussian ? w : std::sin(w);
}

struct DiffusionConfig {
  int T = 100;
  double theta = 0.5;
  double alpha = 0.0;  // carried for interface completeness; unused by the loop
  double beta = 0.0;   // long-run level of the transport step, also passed to the drift
  std::vector<double> sigma_schedule;
  NoiseMode noise_mode = NoiseMode::gaussian;
  double x_init = 0.0;
  bool unit_noise_off = false;
  bool deterministic_transport = false;

  void validate() const {
    require(T >= 1, "diffusion T must be >= 1");
    require(sigma_schedule.size() == static_cast<std::size_t>(T), "sigma_schedule length must equal T");
    for (double s : sigma_schedule) require(std::isfinite(s) && s >= 0.0, "sigma_schedule entries must be >= 0");
    require(std::isfinite(theta) && std::isfinite(beta) && std::isfinite(alpha) && std::isfinite(x_init),
            "diffusion parameters must be finite");
  }
};

struct Trajectory {
  std::vector<double> states;     // x_T, x_{T-1}, ..., x_0
  std::vector<double> transport;  // transport component used for each transition
  std::uint64_t seed = 0;

  std::string to_csv() const {
    std::ostringstream os;
    os << "t,x,transport\n";
    const std::size_t n = states.size();
    for (std::size_t i = 0; i < n; ++i) {
      os << (n - 1 - i) << ',' << io::format_double(states[i]) << ',';
      os << (i == 0 ? std::string("0") : io::format_double(transport[i - 1])) << '\n';
    }
    return os.str();
  }
  bool operator==(const Trajectory&) const = default;
};

/// Loop t = T-1 .. 0: z is drawn only while t > 1; the next state is normal with
/// mean drift + transport + sigma[t] z and unit standard deviation.
inline Trajectory reverse_sample(const DiffusionConfig& cfg, const DriftSpec& spec, std::uint64_t seed) {
  cfg.validate();
  Trajectory tr;
  tr.seed = seed;
  tr.states.reserve(static_cast<std::size_t>(cfg.T) + 1);
  tr.transport.reserve(static_cast<std::size_t>(cfg.T));
  double x = cfg.x_init;
  tr.states.push_back(x);
  for (int t = cfg.T - 1; t >= 0; --t) {
    const auto tu = static_cast<std::uint64_t>(t);
    const double z = t > 1 ? noise_draw(cfg.noise_mode, seed, tu) : 0.0;
    const double s = cfg.sigma_schedule[tu];
    const double move =
        transport_component(x, static_cast<double>(t), cfg.theta, cfg.beta, s, seed, cfg.deterministic_transport);
    const double mean = drift_function(x, static_cast<double>(t), spec, cfg.beta, s) + move + s * z;
    x = cfg.unit_noise_off ? mean : mean + Stream(seed, tu, detail::transition_tag).normal();
    if (!std::isfinite(x)) throw NumericalFailure("reverse_sample: state became non-finite at t=" + std::to_string(t));
    tr.transport.push_back(move);
    tr.states.push_back(x);
  }
  return tr;
}

/// Independent trajectories, one per seed, computed concurrently.
inline std::vector<Trajectory> reverse_sample_batch(const DiffusionConfig& cfg, const DriftSpec& spec,
                                                    std::span<const std::uint64_t> seeds) {
  std::vector<Trajectory> out(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) { out[i] = reverse_sample(cfg, spec, seeds[i]); });
  return out;
}

}  // namespace qb
