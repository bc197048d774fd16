#pragma once

// Command-line front end: one subcommand per workflow, parameters from a JSON
// config and/or flags (flags win), every run echoed to run.json.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <cctype>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qb/audio.hpp"
#include "qb/backdoor.hpp"
#include "qb/bayesopt.hpp"
#include "qb/core/errors.hpp"
#include "qb/core/io.hpp"
#include "qb/diffusion.hpp"
#include "qb/hedging.hpp"
#include "qb/paths.hpp"
#include "qb/plot.hpp"
#include "qb/pricing.hpp"
#include "qb/risk.hpp"

namespace qb::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

enum class Kind { number, integer, text, flag, numbers, texts };

struct Param {
  std::string name;
  Kind kind;
  json value;  // default; null means "unset"
  std::string help;
};

inline std::string flag_name(const std::string& key) {
  std::string f = key;
  std::replace(f.begin(), f.end(), '_', '-');
  return "--" + f;
}

class Context {
 public:
  Context(json params, std::uint64_t seed, fs::path out) : params_(std::move(params)), seed_(seed), out_(std::move(out)) {}

  std::uint64_t seed() const noexcept { return seed_; }
  const fs::path& out() const noexcept { return out_; }
  const json& params() const noexcept { return params_; }

  bool has(const std::string& k) const { return !params_.at(k).is_null(); }
  double num(const std::string& k) const { return params_.at(k).get<double>(); }
  std::optional<double> opt_num(const std::string& k) const {
    if (!has(k)) return std::nullopt;
    return num(k);
  }
  long long integer(const std::string& k) const { return params_.at(k).get<long long>(); }
  std::size_t count(const std::string& k) const {
    const long long v = integer(k);
    if (v < 0) throw InvalidInput(flag_name(k) + " must be >= 0");
    return static_cast<std::size_t>(v);
  }
  std::string text(const std::string& k) const { return params_.at(k).get<std::string>(); }
  bool flag(const std::string& k) const { return params_.at(k).get<bool>(); }
  std::vector<double> list(const std::string& k) const { return params_.at(k).get<std::vector<double>>(); }
  std::vector<std::string> texts(const std::string& k) const { return params_.at(k).get<std::vector<std::string>>(); }

  void write(const std::string& name, const std::string& contents) const { io::write_file_atomic(out_ / name, contents); }
  void write_json(const std::string& name, const json& j) const { write(name, j.dump(2) + "\n"); }

 private:
  json params_;
  std::uint64_t seed_;
  fs::path out_;
};

struct Command {
  std::string name;
  std::string help;
  std::vector<Param> params;
  std::function<json(const Context&)> run;  // returns the summary printed to stdout
};

// ---------------------------------------------------------------------------
// value coercion

inline json coerce_json(const Param& p, const json& v) {
  const std::string where = "config key '" + p.name + "'";
  if (v.is_null()) return v;
  switch (p.kind) {
    case Kind::number:
      if (!v.is_number()) throw InvalidInput(where + " must be a number");
      return v.get<double>();
    case Kind::integer:
      if (v.is_number_integer()) return v.get<long long>();
      if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>()) return static_cast<long long>(v.get<double>());
      throw InvalidInput(where + " must be an integer");
    case Kind::text:
      if (!v.is_string()) throw InvalidInput(where + " must be a string");
      return v;
    case Kind::flag:
      if (!v.is_boolean()) throw InvalidInput(where + " must be true or false");
      return v;
    case Kind::numbers: {
      if (v.is_number()) return json::array({v.get<double>()});
      if (!v.is_array()) throw InvalidInput(where + " must be an array of numbers");
      json out = json::array();
      for (const auto& e : v) {
        if (!e.is_number()) throw InvalidInput(where + " must be an array of numbers");
        out.push_back(e.get<double>());
      }
      return out;
    }
    case Kind::texts: {
      if (v.is_string()) return json::array({v});
      if (!v.is_array()) throw InvalidInput(where + " must be an array of strings");
      for (const auto& e : v)
        if (!e.is_string()) throw InvalidInput(where + " must be an array of strings");
      return v;
    }
  }
  return v;
}

inline json coerce_flag(const Param& p, const std::string& raw) {
  const std::string where = flag_name(p.name);
  switch (p.kind) {
    case Kind::number: return io::parse_double(raw);
    case Kind::integer: {
      try {
        std::size_t used = 0;
        const long long v = std::stoll(raw, &used);
        if (used == raw.size()) return v;
      } catch (const std::exception&) {
      }
      throw InvalidInput(where + " expects an integer, got '" + raw + "'");
    }
    case Kind::text: return raw;
    case Kind::flag:
      if (raw == "true" || raw == "1") return true;
      if (raw == "false" || raw == "0") return false;
      throw InvalidInput(where + " expects true or false, got '" + raw + "'");
    case Kind::numbers: return io::parse_double_list(raw);
    case Kind::texts: {
      json out = json::array();
      if (!io::trim(raw).empty())
        for (const auto& s : io::split(raw)) out.push_back(io::trim(s));
      return out;
    }
  }
  return raw;
}

// ---------------------------------------------------------------------------
// shared helpers

inline OptionSpec option_spec(const Context& c) {
  OptionSpec s{c.num("spot"), c.num("strike"), c.num("maturity"), c.num("rate"), c.num("vol")};
  s.validate();
  return s;
}

inline json spec_json(const OptionSpec& s) {
  return {{"spot", s.S}, {"strike", s.K}, {"maturity", s.T}, {"rate", s.r}, {"vol", s.sigma}};
}

inline json greeks_json(const GreeksReport& g) {
  return {{"delta", g.delta}, {"gamma", g.gamma}, {"theta", g.theta}, {"vega", g.vega}, {"rho", g.rho}};
}

inline std::vector<Param> option_params() {
  return {{"spot", Kind::number, 100.0, "spot price"},
          {"strike", Kind::number, 100.0, "strike"},
          {"maturity", Kind::number, 1.0, "years to maturity"},
          {"rate", Kind::number, 0.05, "risk-free rate"},
          {"vol", Kind::number, 0.2, "volatility"}};
}

inline std::vector<Param> heston_params() {
  return {{"v0", Kind::number, 0.04, "Heston initial variance"},
          {"kappa", Kind::number, 1.5, "Heston reversion speed"},
          {"theta_bar", Kind::number, 0.04, "Heston long-run variance"},
          {"sigma_v", Kind::number, 0.3, "Heston vol of vol"},
          {"rho", Kind::number, -0.7, "Heston correlation"}};
}

inline HestonParams heston_from(const Context& c, double r) {
  HestonParams h{c.num("v0"), c.num("kappa"), c.num("theta_bar"), c.num("sigma_v"), c.num("rho"), r};
  h.validate();
  return h;
}

inline std::vector<Param> concat(std::vector<Param> a, const std::vector<Param>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

inline json terminal_summary(const PathMatrix& m) {
  const auto term = m.terminal();
  const SampleStats st = sample_stats(term);
  return {{"terminal_mean", st.mean}, {"terminal_std_error", st.std_error()}, {"terminal_variance", st.variance},
          {"n_paths", m.rows()}, {"columns", m.cols()}};
}

inline std::string safe_file_name(std::string id) {
  for (auto& ch : id)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.')) ch = '-';
  return id;
}

struct ManifestEntry {
  std::string id;
  fs::path path;
  int label;
};

inline LabeledDataset read_manifest(const fs::path& manifest) {
  const io::CsvTable t = io::read_csv(manifest);
  const std::size_t ci = t.column("id"), cp = t.column("path"), cl = t.column("label");
  LabeledDataset ds;
  const fs::path base = manifest.parent_path();
  int max_label = -1;
  for (const auto& row : t.rows) {
    if (row.size() <= std::max({ci, cp, cl})) throw InvalidInput("short manifest row in " + manifest.string());
    const fs::path p = fs::path(row[cp]).is_absolute() ? fs::path(row[cp]) : base / row[cp];
    AudioClip clip = read_wav(p);
    clip.id = row[ci];
    const double label = io::parse_double(row[cl]);
    if (label < 0 || std::floor(label) != label) throw InvalidInput("manifest label must be a non-negative integer");
    clip.label = static_cast<int>(label);
    max_label = std::max(max_label, clip.label);
    ds.clips.push_back(std::move(clip));
  }
  if (ds.clips.empty()) throw InvalidInput("manifest " + manifest.string() + " lists no clips");
  ds.num_classes = max_label + 1;
  return ds;
}

/// Writes every clip as <dir>/<id>.wav plus a manifest id,path,label (paths relative to the manifest).
inline void write_dataset(const Context& c, const LabeledDataset& ds, const std::string& manifest,
                          const std::string& dir) {
  fs::create_directories(c.out() / dir);
  std::ostringstream os;
  os << "id,path,label\n";
  for (const auto& clip : ds.clips) {
    const std::string rel = dir + "/" + safe_file_name(clip.id) + ".wav";
    write_wav(c.out() / rel, clip);
    os << clip.id << ',' << rel << ',' << clip.label << '\n';
  }
  c.write(manifest, os.str());
}

// ---------------------------------------------------------------------------
// subcommands

inline Command simulate_command() {
  Command cmd{"simulate", "simulate paths (ou, hull_white, rough_vol, rbergomi, heston, gbm, libor)", {}, nullptr};
  cmd.params = concat(
      {{"model", Kind::text, "ou", "path model"},
       {"n_paths", Kind::integer, 100, "number of paths"},
       {"n_steps", Kind::integer, 252, "time steps"},
       {"dt", Kind::number, 1.0 / 252.0, "step size (years)"},
       {"t0", Kind::number, 0.0, "start time"},
       {"record_stride", Kind::integer, 1, "store every k-th grid point"},
       {"theta", Kind::number, 1.0, "OU reversion rate / Hull-White a"},
       {"mu", Kind::number, 0.05, "OU long-run level"},
       {"sigma", Kind::number, 0.1, "diffusion volatility"},
       {"x0", Kind::number, 0.05, "initial level"},
       {"levels", Kind::numbers, json::array({0.005}), "Hull-White theta(t), equal pieces over the horizon"},
       {"s0", Kind::numbers, json::array({1.0}), "rough_vol initial values (one, or one per path)"},
       {"gamma", Kind::number, 0.0, "rough_vol drift coefficient"},
       {"scaled_noise", Kind::flag, false, "rough_vol: shock sigma dW sqrt(dt) instead of sigma dW dt"},
       {"xi0", Kind::number, 0.04, "rBergomi forward variance"},
       {"eta", Kind::number, 1.9, "rBergomi vol of vol"},
       {"hurst", Kind::number, 0.1, "rBergomi Hurst exponent"},
       {"scheme", Kind::text, "variance_matched", "rBergomi kernel weights: variance_matched | left_point"},
       {"rate", Kind::number, 0.0, "risk-free rate (heston, gbm)"},
       {"spot", Kind::number, 100.0, "initial asset price (heston, gbm)"},
       {"vol", Kind::number, 0.2, "gbm volatility"},
       {"forwards", Kind::numbers, json::array({0.05, 0.05}), "LIBOR forwards"},
       {"vols", Kind::numbers, json::array({0.2, 0.2}), "LIBOR vols"},
       {"accruals", Kind::numbers, json::array({0.5, 0.5}), "LIBOR accrual fractions"},
       {"first_fixing", Kind::number, 1.0, "LIBOR first fixing time"}},
      heston_params());
  cmd.run = [](const Context& c) -> json {
    const std::string model = c.text("model");
    const TimeGrid grid{c.num("t0"), c.num("dt"), c.count("n_steps")};
    const std::size_t n = c.count("n_paths");
    const RecordOptions rec{c.count("record_stride")};
    json summary{{"model", model}};
    auto emit = [&](const std::string& file, const PathMatrix& m) {
      c.write(file, m.to_csv());
      summary[file] = terminal_summary(m);
    };
    if (model == "ou") {
      emit("paths.csv", simulate_ou({c.num("theta"), c.num("mu"), c.num("sigma"), c.num("x0")}, grid, n, c.seed(), rec));
    } else if (model == "hull_white") {
      const auto levels = c.list("levels");
      require(!levels.empty(), "--levels must not be empty");
      const double horizon = grid.horizon() - grid.t0;
      auto level = [&](double t) {
        const auto k = static_cast<std::size_t>(std::floor((t - grid.t0) / horizon * static_cast<double>(levels.size())));
        return levels[std::min(k, levels.size() - 1)];
      };
      emit("paths.csv",
           simulate_hull_white({c.num("theta"), 0.0, c.num("sigma"), c.num("x0")}, level, grid, n, c.seed(), rec));
    } else if (model == "rough_vol") {
      RoughVolParams p{c.list("s0"), c.num("sigma"), c.num("gamma")};
      if (p.S0.size() == 1) p.S0.assign(n, p.S0.front());
      require(p.S0.size() == n, "--s0 must hold one value or one per path");
      emit("paths.csv", simulate_rough_vol(p, grid.dt * static_cast<double>(grid.n_steps), grid.dt, c.seed(),
                                           c.flag("scaled_noise"), rec));
    } else if (model == "rbergomi") {
      const std::string s = c.text("scheme");
      require(s == "variance_matched" || s == "left_point", "--scheme must be variance_matched or left_point");
      emit("paths.csv", simulate_rbergomi_variance({c.num("xi0"), c.num("eta"), c.num("hurst")}, grid, n, c.seed(),
                                                   s == "left_point" ? VolterraScheme::left_point
                                                                     : VolterraScheme::variance_matched,
                                                   rec));
    } else if (model == "heston") {
      const HestonPaths h = simulate_heston(heston_from(c, c.num("rate")), c.num("spot"), grid, n, c.seed(), rec);
      emit("paths.csv", h.asset);
      emit("variance.csv", h.variance);
    } else if (model == "gbm") {
      emit("paths.csv", simulate_gbm(c.num("spot"), c.num("rate"), c.num("vol"), grid, n, c.seed(), rec));
    } else if (model == "libor") {
      LiborCurve curve;
      curve.forwards = c.list("forwards");
      curve.vols = c.list("vols");
      curve.accruals = c.list("accruals");
      curve.first_fixing = c.num("first_fixing");
      const LiborSimulation sim = simulate_libor(curve, grid, n, c.seed(), rec);
      for (std::size_t i = 0; i < sim.forwards.size(); ++i) emit("forward_" + std::to_string(i) + ".csv", sim.forwards[i]);
      summary["absorbed"] = sim.absorbed_count;
    } else {
      throw InvalidInput("unknown --model '" + model + "'");
    }
    c.write_json("summary.json", summary);
    return summary;
  };
  return cmd;
}

inline Command price_command() {
  Command cmd{"price", "price a European option (bsm) or an American put (lsmc)", {}, nullptr};
  cmd.params = concat({{"method", Kind::text, "bsm", "bsm | lsmc"},
                       {"option", Kind::text, "call", "call | put"},
                       {"n_paths", Kind::integer, 20000, "lsmc paths"},
                       {"n_steps", Kind::integer, 50, "lsmc exercise dates"},
                       {"degree", Kind::integer, 3, "lsmc polynomial degree"}},
                      option_params());
  cmd.run = [](const Context& c) -> json {
    const OptionSpec s = option_spec(c);
    const std::string method = c.text("method");
    const std::string option = c.text("option");
    require(option == "call" || option == "put", "--option must be call or put");
    json out{{"method", method}, {"option", option}, {"inputs", spec_json(s)}};
    if (method == "bsm") {
      out["price"] = option == "call" ? bsm_call(s) : bsm_put(s);
      if (option == "call" && s.T > 0.0 && s.sigma > 0.0) out["greeks"] = greeks_json(greeks(s));
    } else if (method == "lsmc") {
      require(option == "put", "lsmc prices American puts only; use --option put");
      require(s.T > 0.0, "lsmc needs maturity > 0");
      const std::size_t steps = c.count("n_steps");
      require(steps >= 1, "--n-steps must be >= 1");
      const PathMatrix asset =
          simulate_gbm(s.S, s.r, s.sigma, {0.0, s.T / static_cast<double>(steps), steps}, c.count("n_paths"), c.seed());
      const LsmcResult r = lsmc_american_put(asset, s.K, s.r, static_cast<int>(c.integer("degree")));
      out["price"] = r.price;
      out["std_error"] = r.std_error;
      out["european_put"] = bsm_put(s);
      out["degree_reductions"] = r.degree_reductions;
    } else {
      throw InvalidInput("unknown --method '" + method + "' (bsm | lsmc)");
    }
    c.write_json("price.json", out);
    return out;
  };
  return cmd;
}

inline Command greeks_command() {
  Command cmd{"greeks", "Black-Scholes call Greeks", option_params(), nullptr};
  cmd.run = [](const Context& c) -> json {
    const OptionSpec s = option_spec(c);
    json out{{"inputs", spec_json(s)}, {"price", bsm_call(s)}, {"greeks", greeks_json(greeks(s))}};
    c.write_json("greeks.json", out);
    return out;
  };
  return cmd;
}

inline Command hedge_command() {
  Command cmd{"hedge", "dynamic delta-gamma hedge of a short call", {}, nullptr};
  cmd.params = concat({{"dt", Kind::number, 1.0 / 252.0, "rebalancing interval"},
                       {"mode", Kind::text, "faithful", "faithful | corrected"},
                       {"hedge_vol", Kind::number, nullptr, "volatility used for Greeks (default: vol)"},
                       {"initial_value", Kind::number, nullptr, "starting portfolio value (default: premium)"},
                       {"trials", Kind::integer, 1, "independent hedges for error statistics"}},
                      option_params());
  cmd.run = [](const Context& c) -> json {
    HedgeConfig cfg;
    cfg.spec = option_spec(c);
    cfg.dt = c.num("dt");
    const std::string mode = c.text("mode");
    require(mode == "faithful" || mode == "corrected", "--mode must be faithful or corrected");
    cfg.faithful = mode == "faithful";
    cfg.hedge_vol = c.opt_num("hedge_vol");
    if (c.has("initial_value")) cfg.initial_value = c.num("initial_value");
    const HedgeResult r = dynamic_hedge(cfg, c.seed());
    std::ostringstream os;
    os << "step,S,delta,gamma,adjustment,portfolio_value\n";
    io::write_row(os, std::vector<double>{0, r.initial_spot, r.initial_greeks.delta, r.initial_greeks.gamma, 0,
                                          r.initial_value});
    for (std::size_t k = 0; k < r.steps(); ++k)
      io::write_row(os, std::vector<double>{static_cast<double>(k + 1), r.spots[k], r.greeks[k].delta,
                                            r.greeks[k].gamma, r.adjustments[k], r.values[k]});
    c.write("hedge.csv", os.str());
    json out{{"mode", mode},
             {"inputs", spec_json(cfg.spec)},
             {"steps", r.steps()},
             {"initial_value", r.initial_value},
             {"final_value", r.final_value},
             {"final_spot", r.final_spot()},
             {"payoff", std::max(r.final_spot() - cfg.spec.K, 0.0)},
             {"truncated", r.truncated}};
    const std::size_t trials = c.count("trials");
    if (trials >= 2) {
      const HedgeErrorStats st = hedge_error_stats(cfg, trials, c.seed());
      out["error_stats"] = {{"trials", st.trials},       {"std_hedged", st.std_hedged},
                            {"std_unhedged", st.std_unhedged}, {"ratio", st.ratio},
                            {"mean_hedged", st.mean_hedged},   {"truncated", st.truncated}};
    }
    c.write_json("summary.json", out);
    return out;
  };
  return cmd;
}

inline Command fourier_command() {
  Command cmd{"fourier-price", "European call by Fourier inversion (lewis | carr-madan)", {}, nullptr};
  cmd.params = concat(concat({{"method", Kind::text, "lewis", "lewis | carr-madan"},
                              {"model", Kind::text, "black_scholes", "black_scholes | heston"},
                              {"alpha", Kind::number, 1.5, "Carr-Madan damping"},
                              {"z_max", Kind::number, 200.0, "integration cut-off"},
                              {"abs_tol", Kind::number, 1e-9, "quadrature tolerance"}},
                             option_params()),
                      heston_params());
  cmd.run = [](const Context& c) -> json {
    const OptionSpec s = option_spec(c);
    require(s.T > 0.0, "fourier pricing needs maturity > 0");
    const std::string model = c.text("model");
    const std::string method = c.text("method");
    CharacteristicFunction cf = model == "black_scholes" ? CharacteristicFunction::black_scholes(s.sigma, s.T)
                                : model == "heston"
                                    ? CharacteristicFunction::heston(heston_from(c, s.r), s.T)
                                    : throw InvalidInput("unknown --model '" + model + "'");
    const FourierOptions fo{c.num("z_max"), c.num("abs_tol"), 4000};
    FourierPrice p;
    if (method == "lewis") p = lewis_call(cf, s, fo);
    else if (method == "carr-madan") p = carr_madan_call(cf, s, c.num("alpha"), fo);
    else throw InvalidInput("unknown --method '" + method + "' (lewis | carr-madan)");
    json out{{"method", method}, {"model", model}, {"inputs", spec_json(s)}, {"price", p.price},
             {"quadrature_error", p.error}};
    if (model == "black_scholes") out["bsm_reference"] = bsm_call(s);
    c.write_json("fourier.json", out);
    return out;
  };
  return cmd;
}

inline ClaimModel claim_model(const Context& c) {
  const std::string kind = c.text("claims");
  const double lambda = c.num("lambda"), loading = c.num("loading");
  if (kind == "exponential") return ClaimModel::exponential(c.num("mean"), lambda, loading);
  if (kind == "gamma") return ClaimModel::gamma(c.num("shape"), c.num("scale"), lambda, loading);
  if (kind == "deterministic") return ClaimModel::deterministic(c.num("mean"), lambda, loading);
  if (kind == "lognormal") return ClaimModel::lognormal(c.num("mu_log"), c.num("sigma_log"), lambda, loading);
  throw InvalidInput("unknown --claims '" + kind + "'");
}

inline Command ruin_command() {
  Command cmd{"ruin", "Cramer-Lundberg ruin probabilities", {}, nullptr};
  cmd.params = {{"claims", Kind::text, "exponential", "exponential | gamma | deterministic | lognormal"},
                {"mean", Kind::number, 1.0, "claim mean (exponential, deterministic)"},
                {"shape", Kind::number, 2.0, "gamma shape"},
                {"scale", Kind::number, 0.5, "gamma scale"},
                {"mu_log", Kind::number, 0.0, "lognormal log-mean"},
                {"sigma_log", Kind::number, 1.0, "lognormal log-sd"},
                {"lambda", Kind::number, 1.0, "claim arrival rate"},
                {"loading", Kind::number, 0.5, "safety loading theta"},
                {"u", Kind::numbers, json::array({0, 1, 2, 4, 8}), "initial surplus grid"},
                {"horizon", Kind::number, 500.0, "simulation horizon"},
                {"n_paths", Kind::integer, 100000, "paths per surplus level"},
                {"sample_paths", Kind::integer, 5, "surplus paths written for plotting"},
                {"sample_horizon", Kind::number, 20.0, "horizon of the plotted paths"}};
  cmd.run = [](const Context& c) -> json {
    const ClaimModel model = claim_model(c);
    const auto us = c.list("u");
    require(!us.empty(), "--u must list at least one surplus");
    json out{{"claims", model.name()}, {"premium_rate", model.premium_rate()}};
    if (model.has_mgf()) {
      const AdjustmentCoefficient adj = adjustment_coefficient(model);
      out["kappa"] = adj.kappa;
      out["degenerate"] = adj.degenerate;
      out["C"] = adj.degenerate ? json(nullptr) : json(cramer_constant(model));
    } else {
      out["kappa"] = nullptr;
      out["C"] = nullptr;
    }
    json psi = json::array(), bound = json::array(), ci = json::array(), se = json::array();
    for (std::size_t i = 0; i < us.size(); ++i) {
      const RuinReport r = simulate_ruin(model, us[i], c.num("horizon"), c.count("n_paths"), derive_key(c.seed(), i));
      psi.push_back(r.psi_hat);
      bound.push_back(std::isnan(r.lundberg_bound) ? json(nullptr) : json(r.lundberg_bound));
      ci.push_back(r.ci_halfwidth);
      se.push_back(r.std_error);
    }
    out["u"] = us;
    out["psi_hat"] = psi;
    out["bound"] = bound;
    out["ci"] = ci;
    out["std_error"] = se;
    std::ostringstream os;
    os << "path,t,surplus\n";
    const auto paths =
        sample_surplus_paths(model, us.front(), c.num("sample_horizon"), c.count("sample_paths"), derive_key(c.seed(), 999));
    for (std::size_t p = 0; p < paths.size(); ++p)
      for (const auto& [t, v] : paths[p]) io::write_row(os, std::vector<double>{static_cast<double>(p), t, v});
    c.write("surplus_paths.csv", os.str());
    c.write_json("ruin.json", out);
    return out;
  };
  return cmd;
}

/// Built-in objectives (maximized).
inline Objective builtin_objective(const std::string& name, std::uint64_t seed, std::size_t trials) {
  if (name == "quadratic")
    return [](std::span<const double> x) {
      double s = 0.0;
      for (double v : x) s -= (v - 2.0) * (v - 2.0);
      return s;
    };
  if (name == "hedging-pnl-variance")
    // x[0]: volatility used for Greeks; the market runs at 0.2.
    return [seed, trials](std::span<const double> x) {
      HedgeConfig cfg;
      cfg.spec = {100.0, 100.0, 0.25, 0.02, 0.2};
      cfg.faithful = false;
      cfg.hedge_vol = x[0];
      const HedgeErrorStats st = hedge_error_stats(cfg, std::max<std::size_t>(trials, 2), seed);
      return -st.std_hedged * st.std_hedged;
    };
  if (name == "trigger-asr-proxy") {
    // x[0]: embedding SNR in dB. Rewards the quietest trigger that still moves
    // the log-mel features: tanh(rms feature shift / 0.1) + snr / 100.
    SyntheticConfig sc;
    sc.classes = 4;
    sc.clips_per_class = 2;
    sc.seed = derive_key(seed, 1);
    auto data = std::make_shared<LabeledDataset>(make_synthetic_dataset(sc));
    auto trig = std::make_shared<TriggerWave>(make_trigger(derive_key(seed, 4)));
    auto clean = std::make_shared<FeatureSet>(featurize(*data));
    return [data, trig, clean](std::span<const double> x) {
      double shift = 0.0;
      std::size_t count = 0;
      for (std::size_t i = 0; i < data->clips.size(); ++i) {
        const FeatureVector f = extract_features(embed_trigger(data->clips[i], *trig, x[0]));
        for (std::size_t j = 0; j < f.values.size(); ++j) {
          const double d = f.values[j] - clean->x(i, j);
          shift += d * d;
          ++count;
        }
      }
      return std::tanh(std::sqrt(shift / static_cast<double>(count)) / 0.1) + x[0] / 100.0;
    };
  }
  throw InvalidInput("unknown --objective '" + name + "' (quadratic | hedging-pnl-variance | trigger-asr-proxy)");
}

inline Command bayesopt_command() {
  Command cmd{"bayesopt", "Gaussian-process Bayesian optimization of a built-in objective", {}, nullptr};
  cmd.params = {{"objective", Kind::text, "quadratic", "quadratic | hedging-pnl-variance | trigger-asr-proxy"},
                {"lo", Kind::numbers, json::array({0.0}), "lower bounds"},
                {"hi", Kind::numbers, json::array({4.0}), "upper bounds"},
                {"budget", Kind::integer, 30, "objective evaluations"},
                {"init", Kind::integer, 5, "initial uniform samples"},
                {"xi", Kind::number, 0.01, "EI exploration offset"},
                {"lengthscale", Kind::number, 0.2, "kernel lengthscale on the unit cube"},
                {"candidates", Kind::integer, 2048, "quasi-random acquisition candidates"},
                {"trials", Kind::integer, 200, "hedges per evaluation (hedging-pnl-variance)"}};
  cmd.run = [](const Context& c) -> json {
    const auto lo = c.list("lo"), hi = c.list("hi");
    require(lo.size() == hi.size(), "--lo and --hi must have the same length");
    Bounds b;
    for (std::size_t i = 0; i < lo.size(); ++i) b.push_back({lo[i], hi[i]});
    BoOptions opt;
    opt.xi = c.num("xi");
    opt.hyper.lengthscale = c.num("lengthscale");
    opt.candidates = c.count("candidates");
    const std::string name = c.text("objective");
    const Objective f = builtin_objective(name, c.seed(), c.count("trials"));
    const BoResult r = bo_run(f, b, c.count("budget"), c.count("init"), c.seed(), opt);
    json trace = json::array();
    std::ostringstream os;
    os << "iteration";
    for (std::size_t d = 0; d < b.size(); ++d) os << ",x" << d;
    os << ",y,best_y\n";
    for (const auto& e : r.trace) {
      trace.push_back({{"iteration", e.iteration}, {"x", e.x}, {"y", std::isfinite(e.y) ? json(e.y) : json(nullptr)},
                       {"best_y", e.best_y}, {"source", e.source}});
      std::vector<double> row{static_cast<double>(e.iteration)};
      row.insert(row.end(), e.x.begin(), e.x.end());
      row.push_back(e.y);
      row.push_back(e.best_y);
      io::write_row(os, row);
    }
    c.write("trace.csv", os.str());
    json out{{"objective", name}, {"x_best", r.x_best}, {"v_best", r.v_best}, {"trace", trace}};
    c.write_json("bayesopt.json", out);
    return json{{"objective", name}, {"x_best", r.x_best}, {"v_best", r.v_best}};
  };
  return cmd;
}

inline std::vector<Param> diffusion_params(int T, double theta, double sigma, double drift_theta) {
  return {{"T", Kind::integer, T, "number of reverse steps"},
          {"theta", Kind::number, theta, "transport reversion"},
          {"alpha", Kind::number, 0.0, "carried, unused"},
          {"beta", Kind::number, 0.0, "transport level, also the drift's beta"},
          {"sigma", Kind::number, sigma, "constant sigma schedule"},
          {"sigma_schedule", Kind::numbers, json::array(), "explicit schedule of length T (overrides sigma)"},
          {"noise_mode", Kind::text, "gaussian", "gaussian | sine_of_gaussian"},
          {"x_init", Kind::number, 0.0, "initial state x_T"},
          {"unit_noise_off", Kind::flag, false, "use the transition mean instead of a unit-sd draw"},
          {"deterministic_transport", Kind::flag, false, "drop the transport's Gaussian term"},
          {"drift", Kind::text, "vasicek", "vasicek | hull_white | libor | longstaff_schwartz"},
          {"drift_theta", Kind::number, drift_theta, "drift reversion speed"},
          {"drift_mu", Kind::number, 0.0, "drift long-run level"},
          {"drift_a", Kind::number, 0.5, "hull_white a"},
          {"drift_levels", Kind::numbers, json::array({0.0}), "hull_white theta(t) per step"},
          {"strike_bar", Kind::number, 0.0, "longstaff_schwartz boundary"}};
}

inline std::pair<DiffusionConfig, DriftSpec> diffusion_from(const Context& c) {
  DiffusionConfig cfg;
  cfg.T = static_cast<int>(c.integer("T"));
  require(cfg.T >= 1, "--T must be >= 1");
  cfg.theta = c.num("theta");
  cfg.alpha = c.num("alpha");
  cfg.beta = c.num("beta");
  cfg.sigma_schedule = c.list("sigma_schedule");
  if (cfg.sigma_schedule.empty()) cfg.sigma_schedule.assign(static_cast<std::size_t>(cfg.T), c.num("sigma"));
  cfg.noise_mode = parse_noise_mode(c.text("noise_mode"));
  cfg.x_init = c.num("x_init");
  cfg.unit_noise_off = c.flag("unit_noise_off");
  cfg.deterministic_transport = c.flag("deterministic_transport");
  cfg.validate();
  DriftSpec spec;
  spec.model = parse_drift_model(c.text("drift"));
  spec.theta = c.num("drift_theta");
  spec.mu = c.num("drift_mu");
  spec.a = c.num("drift_a");
  spec.levels = c.list("drift_levels");
  require(!spec.levels.empty(), "--drift-levels must not be empty");
  spec.strike_bar = c.num("strike_bar");
  return {cfg, spec};
}

inline Command diffuse_command() {
  Command cmd{"diffuse", "reverse diffusion trajectory", diffusion_params(100, 0.5, 0.1, 0.5), nullptr};
  cmd.run = [](const Context& c) -> json {
    const auto [cfg, spec] = diffusion_from(c);
    const Trajectory tr = reverse_sample(cfg, spec, c.seed());
    c.write("trajectory.csv", tr.to_csv());
    json out{{"T", cfg.T}, {"drift", drift_model_name(spec.model)}, {"x_T", tr.states.front()},
             {"x_0", tr.states.back()}};
    c.write_json("summary.json", out);
    return out;
  };
  return cmd;
}

inline Command gen_trigger_command() {
  Command cmd{"gen-trigger", "synthesize a trigger waveform from a diffusion trajectory", {}, nullptr};
  const DiffusionConfig d = default_trigger_config(pipeline_rate);
  cmd.params = concat({{"length", Kind::integer, pipeline_rate, "trigger length in samples"},
                       {"sample_rate", Kind::integer, pipeline_rate, "sample rate (Hz)"}},
                      diffusion_params(d.T, d.theta, d.sigma_schedule.front(), default_trigger_drift().theta));
  cmd.run = [](const Context& c) -> json {
    const auto [cfg, spec] = diffusion_from(c);
    const std::size_t length = c.count("length");
    const int rate = static_cast<int>(c.integer("sample_rate"));
    require(rate > 0, "--sample-rate must be > 0");
    const Trajectory tr = reverse_sample(cfg, spec, c.seed());
    const std::string prov = "diffusion:" + drift_model_name(spec.model) + ":seed=" + std::to_string(c.seed());
    const TriggerWave w = synthesize_trigger(tr, length, rate, prov);
    write_wav(c.out() / "trigger.wav", AudioClip{w.samples, rate, 0, "trigger", prov});
    std::ostringstream os;
    os << "sample\n";
    for (double v : w.samples) io::write_row(os, std::vector<double>{v});
    c.write("trigger.csv", os.str());
    json out{{"length", length}, {"sample_rate", rate}, {"provenance", prov}};
    c.write_json("trigger.json", out);
    return out;
  };
  return cmd;
}

inline Command poison_command() {
  Command cmd{"poison", "build train / test / triggered-test splits with a poisoned training set", {}, nullptr};
  cmd.params = {{"dataset", Kind::text, "synthetic", "'synthetic' or a manifest CSV (id,path,label)"},
                {"classes", Kind::integer, 10, "synthetic classes"},
                {"clips_per_class", Kind::integer, 200, "synthetic clips per class"},
                {"duration", Kind::number, 1.0, "synthetic clip length (s)"},
                {"noise_snr_db", Kind::number, 20.0, "synthetic background noise SNR"},
                {"test_fraction", Kind::number, 0.2, "stratified test share"},
                {"trigger", Kind::text, "", "trigger WAV (default: synthesized from the seed)"},
                {"rate", Kind::number, 0.1, "poison rate"},
                {"snr_db", Kind::number, 30.0, "trigger embedding SNR"},
                {"target", Kind::integer, 3, "target label"},
                {"mode", Kind::text, "label_flip", "label_flip | clean_label"}};
  cmd.run = [](const Context& c) -> json {
    const BenchmarkConfig seeds = benchmark_config(c.seed());
    LabeledDataset all;
    const std::string source = c.text("dataset");
    if (source == "synthetic") {
      SyntheticConfig sc;
      sc.classes = static_cast<int>(c.integer("classes"));
      sc.clips_per_class = static_cast<int>(c.integer("clips_per_class"));
      sc.duration = c.num("duration");
      sc.noise_snr_db = c.num("noise_snr_db");
      sc.seed = seeds.data.seed;
      all = make_synthetic_dataset(sc);
    } else {
      all = read_manifest(source);
    }
    auto [train, test] = split_dataset(all, c.num("test_fraction"), seeds.data.seed);
    TriggerWave trig;
    if (c.text("trigger").empty()) {
      trig = make_trigger(seeds.trigger_seed);
    } else {
      const AudioClip t = read_wav(c.text("trigger"));
      trig.samples = t.samples;
      trig.provenance = "file:" + fs::path(c.text("trigger")).filename().string();
    }
    PoisonConfig pc;
    pc.poison_rate = c.num("rate");
    pc.snr_db = c.num("snr_db");
    pc.target_label = static_cast<int>(c.integer("target"));
    pc.mode = parse_poison_mode(c.text("mode"));
    pc.seed = seeds.poison.seed;
    const LabeledDataset poisoned = build_poisoned_dataset(train, pc, trig);
    const LabeledDataset triggered = make_triggered_test(test, trig, pc.target_label, pc.snr_db);
    write_dataset(c, poisoned, "train.csv", "train");
    write_dataset(c, test, "test_clean.csv", "test_clean");
    write_dataset(c, triggered, "test_poisoned.csv", "test_poisoned");
    json out{{"train", poisoned.clips.size()},
             {"poisoned", poisoned.clips.size() - train.clips.size()},
             {"test_clean", test.clips.size()},
             {"test_poisoned", triggered.clips.size()},
             {"num_classes", all.num_classes},
             {"trigger", trig.provenance}};
    c.write_json("summary.json", out);
    return out;
  };
  return cmd;
}

inline Command train_eval_command() {
  Command cmd{"train-eval", "train the surrogate classifier and report BA / ASR", {}, nullptr};
  cmd.params = {{"train", Kind::text, "train.csv", "training manifest"},
                {"test", Kind::text, "test_clean.csv", "clean test manifest"},
                {"test_poisoned", Kind::text, "test_poisoned.csv", "triggered test manifest"},
                {"epochs", Kind::integer, 200, "training epochs"},
                {"step_size", Kind::number, 0.1, "gradient step"},
                {"batch_size", Kind::integer, 32, "mini-batch size"},
                {"target", Kind::integer, 3, "target label"}};
  cmd.run = [](const Context& c) -> json {
    const LabeledDataset train = read_manifest(c.text("train"));
    const LabeledDataset test = read_manifest(c.text("test"));
    const LabeledDataset trig = read_manifest(c.text("test_poisoned"));
    TrainConfig tc;
    tc.epochs = static_cast<int>(c.integer("epochs"));
    tc.step_size = c.num("step_size");
    tc.batch_size = c.count("batch_size");
    tc.seed = benchmark_config(c.seed()).train.seed;
    const int classes = std::max({train.num_classes, test.num_classes, trig.num_classes});
    const ClassifierModel model = train_classifier(featurize(train), classes, tc);
    const int target = static_cast<int>(c.integer("target"));
    const Metrics m = evaluate(model, featurize(test), featurize(trig), target);
    json out{{"ba", m.ba},
             {"asr", m.asr},
             {"m", m.m},
             {"n", m.n},
             {"final_loss", model.final_loss()},
             {"config", {{"epochs", tc.epochs}, {"step_size", tc.step_size}, {"batch_size", tc.batch_size},
                         {"target", target}}}};
    c.write_json("metrics.json", out);
    return out;
  };
  return cmd;
}

inline Command plot_command() {
  Command cmd{"plot", "SVG line plot of CSV columns (or of PathMatrix rows)", {}, nullptr};
  cmd.params = {{"csv", Kind::text, "", "input CSV"},
                {"x", Kind::text, "", "x column (columns layout)"},
                {"y", Kind::texts, json::array(), "y columns (columns layout)"},
                {"layout", Kind::text, "columns", "columns | rows (rows: header = x, one series per row)"},
                {"max_rows", Kind::integer, 20, "rows layout: series drawn"},
                {"title", Kind::text, "", "title"},
                {"xlabel", Kind::text, "", "x-axis label"},
                {"ylabel", Kind::text, "", "y-axis label"},
                {"output", Kind::text, "plot.svg", "SVG file name inside --out"}};
  cmd.run = [](const Context& c) -> json {
    require(!c.text("csv").empty(), "--csv is required");
    const io::CsvTable t = io::read_csv(c.text("csv"));
    PlotSpec spec{c.text("title"), c.text("xlabel"), c.text("ylabel"), {}, 800, 500};
    const std::string layout = c.text("layout");
    if (layout == "columns") {
      const auto ys = c.texts("y");
      require(!ys.empty(), "--y must name at least one column");
      const std::size_t xi = t.column(c.text("x"));
      for (const auto& name : ys) {
        const std::size_t yi = t.column(name);
        PlotSeries s{name, {}, {}};
        for (const auto& row : t.rows) {
          require(row.size() > std::max(xi, yi), "short CSV row");
          s.x.push_back(io::parse_double(row[xi]));
          s.y.push_back(io::parse_double(row[yi]));
        }
        spec.series.push_back(std::move(s));
      }
    } else if (layout == "rows") {
      std::vector<double> xs;
      for (const auto& h : t.header) xs.push_back(io::parse_double(h));
      const std::size_t n = std::min(t.rows.size(), c.count("max_rows"));
      require(n > 0, "CSV has no data rows");
      for (std::size_t r = 0; r < n; ++r) {
        require(t.rows[r].size() == xs.size(), "row length differs from header");
        PlotSeries s{"row " + std::to_string(r), xs, {}};
        for (const auto& v : t.rows[r]) s.y.push_back(io::parse_double(v));
        spec.series.push_back(std::move(s));
      }
    } else {
      throw InvalidInput("--layout must be columns or rows");
    }
    const std::string file = c.text("output");
    c.write(file, render_svg(spec));
    return json{{"output", file}, {"series", spec.series.size()}};
  };
  return cmd;
}

inline std::vector<Command> commands() {
  return {simulate_command(), price_command(),    greeks_command(),  hedge_command(),
          fourier_command(),  ruin_command(),     bayesopt_command(), diffuse_command(),
          gen_trigger_command(), poison_command(), train_eval_command(), plot_command()};
}

// ---------------------------------------------------------------------------

/// Resolves defaults <- config file <- flags, writes run.json, runs the command.
/// Exit codes: 0 success, 1 invalid input, 2 numerical failure.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  const std::vector<Command> cmds = commands();
  CLI::App app{"quantitative finance and audio backdoor toolkit"};
  app.require_subcommand(1);
  struct Bound {
    CLI::App* sub;
    std::map<std::string, std::string> raw;
    std::string seed, config, outdir = "out";
  };
  std::vector<Bound> bound(cmds.size());
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    auto& b = bound[i];
    b.sub = app.add_subcommand(cmds[i].name, cmds[i].help);
    b.sub->add_option("--seed", b.seed, "64-bit seed (default 0)");
    b.sub->add_option("--config", b.config, "JSON config (flat keys, or a run.json)");
    b.sub->add_option("--out", b.outdir, "output directory");
    for (const auto& p : cmds[i].params) b.sub->add_option(flag_name(p.name), b.raw[p.name], p.help);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  std::size_t which = 0;
  while (!bound[which].sub->parsed()) ++which;
  const Command& cmd = cmds[which];
  const Bound& b = bound[which];
  try {
    json params = json::object();
    for (const auto& p : cmd.params) params[p.name] = p.value;
    std::optional<std::uint64_t> seed;
    if (!b.config.empty()) {
      json cfg;
      try {
        cfg = json::parse(io::read_file(b.config));
      } catch (const json::exception& e) {
        throw InvalidInput("cannot parse config " + b.config + ": " + e.what());
      }
      if (!cfg.is_object()) throw InvalidInput("config must be a JSON object");
      if (cfg.contains("params")) {
        if (cfg.contains("subcommand") && cfg["subcommand"] != cmd.name)
          throw InvalidInput("config was written by '" + cfg["subcommand"].get<std::string>() + "', not '" +
                             cmd.name + "'");
        if (cfg.contains("seed")) seed = cfg["seed"].get<std::uint64_t>();
        cfg = cfg["params"];
      }
      for (const auto& [key, value] : cfg.items()) {
        if (key == "seed") {
          if (!value.is_number_integer()) throw InvalidInput("config key 'seed' must be an integer");
          seed = value.get<std::uint64_t>();
          continue;
        }
        const auto it = std::find_if(cmd.params.begin(), cmd.params.end(), [&](const Param& p) { return p.name == key; });
        if (it == cmd.params.end()) throw InvalidInput("unknown config key '" + key + "' for " + cmd.name);
        params[key] = coerce_json(*it, value);
      }
    }
    for (const auto& p : cmd.params) {
      const CLI::Option* opt = b.sub->get_option(flag_name(p.name));
      if (opt->count() > 0) params[p.name] = coerce_flag(p, b.raw.at(p.name));
    }
    if (!b.seed.empty()) {
      try {
        std::size_t used = 0;
        seed = std::stoull(b.seed, &used);
        if (used != b.seed.size() || b.seed.front() == '-') throw std::invalid_argument("seed");
      } catch (const std::exception&) {
        throw InvalidInput("--seed expects a non-negative 64-bit integer, got '" + b.seed + "'");
      }
    }
    const fs::path outdir = b.outdir;
    fs::create_directories(outdir);
    const Context ctx(params, seed.value_or(0), outdir);
    ctx.write_json("run.json", json{{"subcommand", cmd.name}, {"seed", ctx.seed()}, {"params", params}});
    const json summary = cmd.run(ctx);
    out << summary.dump(2) << "\n";
    return 0;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const InvalidInput& e) {
    err << "invalid input: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    err << "invalid input: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "invalid input: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace qb::cli
