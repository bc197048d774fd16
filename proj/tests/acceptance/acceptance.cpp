// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qb/backdoor.hpp"
#include "qb/bayesopt.hpp"
#include "qb/cli.hpp"
#include "qb/core/parallel.hpp"
#include "qb/diffusion.hpp"
#include "qb/hedging.hpp"
#include "qb/paths.hpp"
#include "qb/pricing.hpp"
#include "qb/risk.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += "failed: " + what;
    }
  }
  void note(const std::string& s) {
    if (!detail.empty()) detail += "; ";
    detail += s;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Moments {
  double mean = 0, var = 0, se_mean = 0, se_var = 0;
};

Moments moments(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  Moments m;
  for (double v : x) m.mean += v;
  m.mean /= n;
  double m2 = 0, m4 = 0;
  for (double v : x) {
    const double d = (v - m.mean) * (v - m.mean);
    m2 += d;
    m4 += d * d;
  }
  m.var = m2 / (n - 1);
  m.se_mean = std::sqrt(m.var / n);
  m.se_var = std::sqrt(std::max(m4 / n - (m2 / n) * (m2 / n), 0.0) / n);
  return m;
}

double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double phi_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::acos(-1.0)); }

bool within(double a, double b, double tol) { return std::abs(a - b) <= std::max(tol, tol * std::abs(b)); }

// ---------------------------------------------------------------------------

Outcome pricing_oracles() {
  Outcome o;
  double worst_lewis = 0, worst_cm = 0, worst_parity = 0;
  for (double T : {0.1, 0.5, 1.0, 2.0}) {
    const auto cf = qb::CharacteristicFunction::black_scholes(0.2, T);
    for (int i = 0; i <= 10; ++i) {
      const qb::OptionSpec s{100.0, 100.0 * (0.5 + 0.1 * i), T, 0.05, 0.2};
      const double bs = qb::bsm_call(s);
      worst_lewis = std::max(worst_lewis, std::abs(qb::lewis_call(cf, s).price - bs));
      worst_cm = std::max(worst_cm, std::abs(qb::carr_madan_call(cf, s, 1.5).price - bs));
      worst_parity = std::max(worst_parity, std::abs(bs - qb::bsm_put(s) - s.S + s.K * std::exp(-s.r * s.T)));
    }
  }
  o.check(worst_lewis <= 1e-5, "lewis");
  o.check(worst_cm <= 1e-4, "carr-madan");
  o.check(worst_parity <= 1e-12, "parity");
  o.note("lewis " + fmt("%.2e", worst_lewis) + ", carr-madan " + fmt("%.2e", worst_cm) + ", parity " +
         fmt("%.2e", worst_parity));
  return o;
}

Outcome greeks_vs_fd() {
  Outcome o;
  std::mt19937_64 gen(20240101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_dual = 0;
  int bad = 0;
  for (int i = 0; i < 100; ++i) {
    const qb::OptionSpec s{60 + 80 * u(gen), 60 + 80 * u(gen), 0.1 + 1.9 * u(gen), 0.1 * u(gen), 0.1 + 0.4 * u(gen)};
    const auto g = qb::greeks(s);
    auto central = [&](auto f, auto set, double base, double scale) {
      const double h = 1e-5 * scale;
      qb::OptionSpec up = s, dn = s;
      set(up, base + h);
      set(dn, base - h);
      return (f(up) - f(dn)) / (2 * h);
    };
    auto price = [](const qb::OptionSpec& x) { return qb::bsm_call(x); };
    auto delta = [](const qb::OptionSpec& x) { return qb::greeks(x).delta; };
    const double fd_delta = central(price, [](qb::OptionSpec& x, double v) { x.S = v; }, s.S, s.S);
    const double fd_gamma = central(delta, [](qb::OptionSpec& x, double v) { x.S = v; }, s.S, s.S);
    const double fd_vega = central(price, [](qb::OptionSpec& x, double v) { x.sigma = v; }, s.sigma, s.sigma);
    const double fd_rho = central(price, [](qb::OptionSpec& x, double v) { x.r = v; }, s.r, std::max(s.r, 1e-3));
    const double fd_theta = -central(price, [](qb::OptionSpec& x, double v) { x.T = v; }, s.T, s.T);
    if (!within(g.delta, fd_delta, 1e-6) || !within(g.gamma, fd_gamma, 1e-6) || !within(g.vega, fd_vega, 1e-6) ||
        !within(g.rho, fd_rho, 1e-6) || !within(g.theta, fd_theta, 1e-6))
      ++bad;
    const double sd = s.sigma * std::sqrt(s.T);
    const double d1 = (std::log(s.S / s.K) + (s.r + 0.5 * s.sigma * s.sigma) * s.T) / sd;
    const double dual = s.K * std::exp(-s.r * s.T) * std::sqrt(s.T) * phi_pdf(d1 - sd);
    worst_dual = std::max(worst_dual, std::abs(g.vega - dual) / std::max(1.0, g.vega));
  }
  o.check(bad == 0, std::to_string(bad) + " specs off");
  o.check(worst_dual <= 1e-10, "vega dual identity");
  o.note("100 specs, dual residual " + fmt("%.2e", worst_dual));
  return o;
}

Outcome ruin_theory() {
  Outcome o;
  const auto m = qb::ClaimModel::exponential(1.0, 1.0, 0.5);
  const double kappa = qb::adjustment_coefficient(m).kappa;
  o.check(std::abs(kappa - 1.0 / 3.0) <= 1e-12, "kappa");
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = qb::simulate_ruin(m, 2.0, 500.0, 1000000, 7);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.check(std::abs(rep.psi_hat - 0.342278) <= 3.0 * rep.std_error, "psi(2)");
  o.check(secs < 60.0, "psi(2) runtime");
  for (double u : {0.0, 1.0, 2.0, 4.0, 8.0}) {
    const auto r = qb::simulate_ruin(m, u, 500.0, 100000, 8);
    o.check(r.psi_hat <= std::exp(-kappa * u) + 3.0 * r.std_error, "lundberg at u=" + fmt("%g", u));
  }
  o.note("kappa " + fmt("%.15f", kappa) + ", psi(2) " + fmt("%.6f", rep.psi_hat) + " +- " +
         fmt("%.6f", rep.std_error) + " in " + fmt("%.1f", secs) + "s");
  return o;
}

Outcome cgf_inversion() {
  Outcome o;
  const double a = qb::tail_probability(qb::CgfSpec::normal(), 1.6448536);
  const double b = qb::tail_probability(qb::CgfSpec::exponential(1.0), 2.0);
  const double c = qb::expected_shortfall(qb::CgfSpec::normal(), 1.0);
  o.check(std::abs(a - 0.05) <= 1e-6, "normal tail");
  o.check(std::abs(b - std::exp(-2.0)) <= 1e-6, "exponential tail");
  o.check(std::abs(c - 1.5251352) <= 1e-5, "normal shortfall");
  o.note(fmt("%.8f", a) + ", " + fmt("%.8f", b) + ", " + fmt("%.7f", c));
  return o;
}

Outcome simulators() {
  Outcome o;
  {
    const double theta = 2.0, mu = 0.05, sigma = 0.1, x0 = 0.2;
    const auto m = qb::simulate_ou({theta, mu, sigma, x0}, {0.0, 1e-3, 1000}, 100000, 2024, {1000});
    const auto st = moments(m.terminal());
    o.check(std::abs(st.mean - (mu + (x0 - mu) * std::exp(-theta))) <= 3 * st.se_mean, "ou mean");
    o.check(std::abs(st.var - sigma * sigma * (1 - std::exp(-2 * theta)) / (2 * theta)) <= 3 * st.se_var, "ou var");
  }
  {
    const qb::HestonParams p{0.09, 2.0, 0.04, 0.3, -0.7, 0.0};
    const auto h = qb::simulate_heston(p, 100.0, {0.0, 1e-3, 1000}, 200000, 13, {1000});
    const auto st = moments(h.variance.terminal());
    o.check(std::abs(st.mean - (p.theta_bar + (p.v0 - p.theta_bar) * std::exp(-p.kappa))) <= 3 * st.se_mean,
            "heston variance mean");
  }
  {
    const auto v = qb::simulate_rbergomi_variance({0.04, 0.0, 0.1}, {0.0, 0.01, 50}, 10, 3);
    bool flat = true;
    for (double x : v.values()) flat = flat && x == 0.04;
    o.check(flat, "rbergomi eta=0");
    const auto w = qb::simulate_volterra_driver(0.5, {0.0, 0.02, 50}, 100000, 8,
                                                qb::VolterraScheme::variance_matched, {25});
    const auto st = moments(w.terminal());
    const auto mid = moments(w.column(1));
    o.check(std::abs(st.var - 1.0) <= 3 * st.se_var && std::abs(mid.var - 0.5) <= 3 * mid.se_var, "rbergomi H=0.5");
  }
  {
    qb::LiborCurve c;
    c.forwards = {0.04, 0.045, 0.05};
    c.vols = {0.2, 0.25, 0.3};
    c.accruals = {0.5, 0.5, 0.5};
    c.first_fixing = 1.0;
    const auto sim = qb::simulate_libor(c, {0.0, 0.01, 100}, 100000, 31, {100});
    const auto st = moments(sim.forwards.back().terminal());
    o.check(std::abs(st.mean - 0.05) <= 3 * st.se_mean, "libor terminal forward martingale");
  }
  o.note("seeds ou 2024, heston 13, rbergomi 3/8, libor 31");
  return o;
}

Outcome bayesian_optimization() {
  Outcome o;
  auto f = [](std::span<const double> x) { return -(x[0] - 2.0) * (x[0] - 2.0); };
  std::vector<double> errs;
  bool monotone = true;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = qb::bo_run(f, {{0.0, 4.0}}, 30, 5, seed);
    for (std::size_t i = 1; i < r.trace.size(); ++i) monotone = monotone && r.trace[i].best_y >= r.trace[i - 1].best_y;
    errs.push_back(std::abs(r.x_best[0] - 2.0));
  }
  std::sort(errs.begin(), errs.end());
  const double median = 0.5 * (errs[9] + errs[10]);
  o.check(median <= 0.05, "median error");
  o.check(monotone, "best-so-far monotone");

  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  qb::Observations obs;
  for (int i = 0; i < 12; ++i) {
    const double x = u(gen);
    obs.push_back({{x}, std::sin(x) + 0.1 * x * x});
  }
  const auto gp = qb::gp_fit(obs, {0.7, 1.5, 0.0});
  double resid = 0;
  for (const auto& ob : obs) resid = std::max(resid, std::abs(qb::gp_predict(gp, ob.x).mean - ob.y));
  o.check(resid <= 1e-8, "gp interpolation");
  o.note("median |x-2| " + fmt("%.2e", median) + ", gp residual " + fmt("%.2e", resid));
  return o;
}

Outcome diffusion_sampler() {
  Outcome o;
  qb::DiffusionConfig cfg;
  cfg.T = 1;
  cfg.theta = 0.3;
  cfg.beta = 0.1;
  cfg.sigma_schedule = {0.4};
  cfg.x_init = 1.0;
  const auto spec = qb::DriftSpec::vasicek(0.5, 0.2);
  auto det = cfg;
  det.unit_noise_off = true;
  det.deterministic_transport = true;
  const double one_step = 0.5 * (0.2 - 1.0) + 0.3 * (0.1 - 1.0);
  o.check(std::abs(qb::reverse_sample(det, spec, 3).states[1] - one_step) <= 1e-12, "T=1");

  auto noisy = cfg;
  noisy.deterministic_transport = true;
  std::vector<double> resid(100000);
  for (std::size_t i = 0; i < resid.size(); ++i)
    resid[i] = qb::reverse_sample(noisy, spec, i).states[1] - one_step;
  const auto st = moments(resid);
  o.check(std::abs(st.mean) <= 3 * st.se_mean && std::abs(st.var - 1.0) <= 3 * st.se_var, "unit variance");

  qb::DiffusionConfig fp;
  fp.T = 40;
  fp.theta = -1.0;
  fp.beta = 0.0;
  fp.sigma_schedule.assign(40, 0.0);
  fp.x_init = 1.0;
  fp.unit_noise_off = true;
  fp.deterministic_transport = true;
  const auto tr = qb::reverse_sample(fp, qb::DriftSpec::vasicek(0.25, 2.0), 1);
  double x = 1.0, worst = 0;
  for (std::size_t k = 1; k < tr.states.size(); ++k) {
    x = x + 0.25 * (2.0 - x);
    worst = std::max(worst, std::abs(tr.states[k] - x));
  }
  o.check(worst <= 1e-12, "fixed point");

  qb::DiffusionConfig big = cfg;
  big.T = 64;
  big.sigma_schedule.assign(64, 0.5);
  std::vector<std::uint64_t> seeds(64);
  std::iota(seeds.begin(), seeds.end(), 100);
  std::vector<qb::Trajectory> one, four;
  {
    qb::ScopedThreadCount t(1);
    one = qb::reverse_sample_batch(big, qb::DriftSpec::hull_white(0.3, {0.1, 0.2}), seeds);
  }
  {
    qb::ScopedThreadCount t(4);
    four = qb::reverse_sample_batch(big, qb::DriftSpec::hull_white(0.3, {0.1, 0.2}), seeds);
  }
  bool same = one.size() == four.size();
  for (std::size_t i = 0; same && i < one.size(); ++i) same = one[i].to_csv() == four[i].to_csv();
  o.check(same, "thread determinism");
  o.note("resid var " + fmt("%.4f", st.var) + " +- " + fmt("%.4f", st.se_var));
  return o;
}

Outcome hedging() {
  Outcome o;
  qb::HedgeConfig cfg;
  cfg.spec = {100.0, 100.0, 1.0, 0.0, 0.2};
  cfg.dt = 1.0 / 252.0;
  cfg.faithful = false;

  auto flat = cfg;
  flat.spec.sigma = 0.0;
  for (bool faithful : {true, false}) {
    flat.faithful = faithful;
    const auto r = qb::dynamic_hedge(flat, 5);
    o.check(r.final_value == r.initial_value, "zero-vol P&L");
  }

  const auto t0 = std::chrono::steady_clock::now();
  const auto stats = qb::hedge_error_stats(cfg, 10000, 2024);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.check(stats.ratio <= 0.25, "ratio");
  o.check(secs < 120.0, "runtime");

  // Oracles: payoff std under a lognormal terminal law, and the discrete-hedging
  // error approximation sqrt(pi/4) vega sigma / sqrt(N).
  const double S = 100, K = 100, s = 0.2, T = 1.0, vt = s * std::sqrt(T);
  const double d1 = (std::log(S / K) + 0.5 * vt * vt) / vt, d2 = d1 - vt;
  const double c = S * phi(d1) - K * phi(d2);
  const double ex2 = S * S * std::exp(vt * vt) * phi(d1 + vt) - 2 * K * S * phi(d1) + K * K * phi(d2);
  const double sd_unhedged = std::sqrt(ex2 - c * c);
  const double vega = S * std::sqrt(T) * phi_pdf(d1);
  const double sd_hedged = std::sqrt(std::acos(-1.0) / 4.0) * vega * s / std::sqrt(252.0);
  o.check(std::abs(stats.std_unhedged / sd_unhedged - 1.0) <= 0.03, "unhedged std vs oracle");
  o.check(std::abs(stats.std_hedged / sd_hedged - 1.0) <= 0.15, "hedged std vs oracle");
  o.note("ratio " + fmt("%.4f", stats.ratio) + " (oracle " + fmt("%.4f", sd_hedged / sd_unhedged) + ") in " +
         fmt("%.1f", secs) + "s");
  return o;
}

Outcome backdoor() {
  Outcome o;
  std::vector<double> asr, ba_gap, clean_asr;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto r = qb::run_backdoor_benchmark(qb::benchmark_config(seed));
    asr.push_back(r.poisoned.asr);
    ba_gap.push_back(std::abs(r.poisoned.ba - r.clean.ba));
    clean_asr.push_back(r.clean.asr);
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  const double a = median(asr), g = median(ba_gap), c = median(clean_asr);
  o.check(a >= 0.90, "ASR");
  o.check(g <= 0.05, "BA gap");
  o.check(c <= 0.30, "clean-model ASR");
  o.note("median ASR " + fmt("%.3f", a) + ", BA gap " + fmt("%.3f", g) + ", clean ASR " + fmt("%.3f", c));
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = slurp(e.path());
  return files;
}

int cli(std::vector<std::string> args, std::string& err) {
  args.insert(args.begin(), "qb");
  args.insert(args.end(), {"--seed", "1234"});
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, e;
  const int code = qb::cli::run(static_cast<int>(argv.size()), argv.data(), out, e);
  err = e.str();
  return code;
}

Outcome reproducibility() {
  Outcome o;
  const std::vector<std::vector<std::string>> runs = {
      {"simulate", "--model", "ou", "--n-paths", "20", "--n-steps", "50", "--out", "simulate"},
      {"simulate", "--model", "rbergomi", "--n-paths", "10", "--n-steps", "30", "--out", "rbergomi"},
      {"price", "--method", "lsmc", "--option", "put", "--n-paths", "5000", "--n-steps", "25", "--out", "price"},
      {"greeks", "--out", "greeks"},
      {"hedge", "--mode", "corrected", "--trials", "200", "--out", "hedge"},
      {"fourier-price", "--method", "lewis", "--model", "heston", "--out", "fourier"},
      {"ruin", "--n-paths", "20000", "--u", "0,1,2,4,8", "--out", "ruin"},
      {"bayesopt", "--budget", "15", "--out", "bayesopt"},
      {"diffuse", "--T", "100", "--out", "diffuse"},
      {"gen-trigger", "--length", "8000", "--out", "trigger"},
      {"poison", "--classes", "4", "--clips-per-class", "10", "--duration", "0.25", "--rate", "0.1", "--out",
       "poison"},
      {"train-eval", "--train", "poison/train.csv", "--test", "poison/test_clean.csv", "--test-poisoned",
       "poison/test_poisoned.csv", "--epochs", "50", "--out", "train"},
      {"plot", "--csv", "simulate/paths.csv", "--layout", "rows", "--out", "plot"},
  };
  const fs::path root = fs::temp_directory_path() / "qb_acceptance_repro";
  fs::remove_all(root);
  const fs::path home = fs::current_path();
  std::size_t files = 0;
  for (const char* side : {"a", "b"}) {
    fs::create_directories(root / side);
    fs::current_path(root / side);
    for (const auto& args : runs) {
      std::string err;
      const int code = cli(args, err);
      o.check(code == 0, args.front() + " exit " + std::to_string(code) + " " + err);
    }
    fs::current_path(home);
  }
  const auto a = tree(root / "a"), b = tree(root / "b");
  files = a.size();
  o.check(a.size() == b.size(), "file count");
  for (const auto& [name, bytes] : a) {
    const auto it = b.find(name);
    o.check(it != b.end() && it->second == bytes, name);
  }
  o.note(std::to_string(files) + " artifacts from " + std::to_string(runs.size()) + " invocations compared");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"pricing oracle suite", pricing_oracles},
      {"greeks vs finite differences", greeks_vs_fd},
      {"ruin theory", ruin_theory},
      {"cgf inversion", cgf_inversion},
      {"simulators", simulators},
      {"bayesian optimization", bayesian_optimization},
      {"diffusion sampler", diffusion_sampler},
      {"hedging", hedging},
      {"backdoor benchmark", backdoor},
      {"reproducibility", reproducibility},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.note(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (i == 0) o.check(secs < 10.0, "runtime");
    if (i == 4) o.check(secs < 120.0, "runtime");
    if (i == 8) o.check(secs < 600.0, "runtime");
    if (!o.pass) ++failures;
    std::printf("criterion %zu %s: %s (%s; %.1fs)\n", i + 1, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
