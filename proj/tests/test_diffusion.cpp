#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "qb/core/parallel.hpp"
#include "qb/diffusion.hpp"
#include "test_support.hpp"

using Catch::Approx;

namespace {

qb::DiffusionConfig config(int T, double sigma) {
  qb::DiffusionConfig c;
  c.T = T;
  c.theta = 0.3;
  c.beta = 0.1;
  c.sigma_schedule.assign(static_cast<std::size_t>(T), sigma);
  c.x_init = 1.0;
  return c;
}

}  // namespace

TEST_CASE("transport component") {
  CHECK(qb::transport_component(2.0, 5.0, 0.4, 1.0, 0.0, 0.0) == 0.4 * (1.0 - 2.0));
  CHECK(qb::transport_component(1.0, 5.0, 0.4, 1.0, 0.0, 0.7) == 0.0);
  CHECK(qb::transport_component(2.0, 5.0, 0.4, 1.0, 0.8, 123, true) == 0.4 * (1.0 - 2.0));
  CHECK(std::abs(qb::transport_variance_factor(1e-10, 1.0) - 1.0) <= 1e-8);
  CHECK(qb::transport_variance_factor(0.0, 3.0) == 3.0);
  CHECK(qb::transport_variance_factor(0.5, 2.0) == Approx((1 - std::exp(-1.0)) / 0.5).epsilon(1e-15));
  const double g = 0.37;
  CHECK(qb::transport_component(0.0, 2.0, 0.5, 1.0, 0.6, g) ==
        Approx(0.5 + 0.6 * std::sqrt((1 - std::exp(-1.0)) / 0.5) * g).epsilon(1e-15));
  REQUIRE_THROWS_AS(qb::transport_component(0.0, 1.0, 0.5, 0.0, -1.0, 0.0), qb::InvalidInput);
}

TEST_CASE("drift functions") {
  CHECK(qb::drift_function(0.7, 3.0, qb::DriftSpec::vasicek(0.5, 0.7), 0.0, 0.2) == 0.0);
  CHECK(qb::drift_function(0.7, 3.0, qb::DriftSpec::libor(), 0.0, 0.0) == 0.0);
  CHECK(qb::drift_function(2.0, 3.0, qb::DriftSpec::libor(), 0.0, 0.3) == Approx(-0.09));
  const double a = 0.4, mu = 1.3;
  const auto hw = qb::DriftSpec::hull_white(a, {a * mu});
  const auto va = qb::DriftSpec::vasicek(a, mu);
  for (double x = -2; x <= 2; x += 0.25)
    for (double t = 0; t <= 10; t += 1) REQUIRE(qb::drift_function(x, t, hw, 0, 0) == Approx(qb::drift_function(x, t, va, 0, 0)).epsilon(1e-14));
  const auto ls = qb::DriftSpec::longstaff_schwartz(0.5, 1.0, 0.8);
  CHECK(qb::drift_function(0.5, 0, ls, 2.0, 0) == Approx(0.25 + 2.0 * 0.3));
  CHECK(qb::drift_function(0.9, 0, ls, 2.0, 0) == Approx(0.05));
}

TEST_CASE("noise draws") {
  std::vector<double> g(100000), s(1000000);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = qb::noise_draw(qb::NoiseMode::gaussian, i, 5);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = qb::noise_draw(qb::NoiseMode::sine_of_gaussian, 7, i);
    REQUIRE(std::abs(s[i]) <= 1.0);
  }
  const auto mg = qbt::moments(g);
  CHECK(std::abs(mg.mean) <= 3 * mg.se_mean);
  CHECK(std::abs(mg.var - 1.0) <= 3 * mg.se_var);
  const auto ms = qbt::moments(s);
  CHECK(std::abs(ms.mean) <= 3 * ms.se_mean);
}

TEST_CASE("single step trajectory") {
  auto cfg = config(1, 0.4);
  cfg.unit_noise_off = true;
  cfg.deterministic_transport = true;
  const auto spec = qb::DriftSpec::vasicek(0.5, 0.2);
  const auto tr = qb::reverse_sample(cfg, spec, 3);
  REQUIRE(tr.states.size() == 2);
  CHECK(tr.states[0] == 1.0);
  const double expect = 0.5 * (0.2 - 1.0) + 0.3 * (0.1 - 1.0);
  CHECK(std::abs(tr.states[1] - expect) <= 1e-12);
  CHECK(tr.transport[0] == 0.3 * (0.1 - 1.0));
}

TEST_CASE("transition has unit variance around its mean") {
  auto cfg = config(1, 0.4);
  const auto spec = qb::DriftSpec::vasicek(0.5, 0.2);
  auto det = cfg;
  det.unit_noise_off = true;
  std::vector<double> resid(100000);
  for (std::size_t i = 0; i < resid.size(); ++i) {
    const double mean = qb::reverse_sample(det, spec, i).states[1];
    resid[i] = qb::reverse_sample(cfg, spec, i).states[1] - mean;
  }
  const auto m = qbt::moments(resid);
  CHECK(std::abs(m.mean) <= 3 * m.se_mean);
  CHECK(std::abs(m.var - 1.0) <= 3 * m.se_var);
}

TEST_CASE("deterministic mode is a fixed-point iteration") {
  SECTION("x + theta (mu - x) via a unit negative transport rate") {
    auto cfg = config(40, 0.0);
    cfg.theta = -1.0;
    cfg.beta = 0.0;
    cfg.unit_noise_off = true;
    cfg.deterministic_transport = true;
    const double th = 0.25, mu = 2.0;
    const auto tr = qb::reverse_sample(cfg, qb::DriftSpec::vasicek(th, mu), 1);
    double x = cfg.x_init;
    for (int k = 1; k <= 40; ++k) {
      x = x + th * (mu - x);
      REQUIRE(std::abs(tr.states[static_cast<std::size_t>(k)] - x) <= 1e-12);
    }
    CHECK(std::abs(tr.states.back() - mu) <= 1e-4);
  }
  SECTION("general literal map") {
    auto cfg = config(25, 0.0);
    cfg.unit_noise_off = true;
    cfg.deterministic_transport = true;
    const auto tr = qb::reverse_sample(cfg, qb::DriftSpec::vasicek(0.2, 0.5), 9);
    double x = cfg.x_init;
    for (std::size_t k = 1; k < tr.states.size(); ++k) {
      x = 0.2 * (0.5 - x) + 0.3 * (0.1 - x);
      REQUIRE(std::abs(tr.states[k] - x) <= 1e-12);
    }
  }
}

TEST_CASE("trajectories are seed-deterministic across thread counts") {
  const auto cfg = config(64, 0.5);
  const auto spec = qb::DriftSpec::hull_white(0.3, {0.1, 0.2, 0.3});
  std::vector<std::uint64_t> seeds(32);
  std::iota(seeds.begin(), seeds.end(), 100);
  std::vector<qb::Trajectory> one, many;
  {
    qb::ScopedThreadCount t(1);
    one = qb::reverse_sample_batch(cfg, spec, seeds);
  }
  {
    qb::ScopedThreadCount t(4);
    many = qb::reverse_sample_batch(cfg, spec, seeds);
  }
  REQUIRE(one.size() == many.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    REQUIRE(one[i] == many[i]);
    REQUIRE(one[i].to_csv() == many[i].to_csv());
    REQUIRE(one[i].states.size() == 65);
    REQUIRE(one[i].states.front() == cfg.x_init);
  }
  CHECK(qb::reverse_sample(cfg, spec, 100) == one[0]);
  CHECK_FALSE(one[0] == one[1]);
}

TEST_CASE("trajectory csv layout") {
  auto cfg = config(2, 0.0);
  cfg.unit_noise_off = true;
  cfg.deterministic_transport = true;
  const auto tr = qb::reverse_sample(cfg, qb::DriftSpec::vasicek(0.0, 0.0), 0);
  const std::string csv = tr.to_csv();
  CHECK(csv.rfind("t,x,transport\n2,1,0\n1,", 0) == 0);
}

TEST_CASE("diffusion config validation") {
  auto cfg = config(3, 0.1);
  cfg.sigma_schedule.pop_back();
  REQUIRE_THROWS_AS(qb::reverse_sample(cfg, qb::DriftSpec::libor(), 0), qb::InvalidInput);
  cfg = config(0, 0.1);
  REQUIRE_THROWS_AS(qb::reverse_sample(cfg, qb::DriftSpec::libor(), 0), qb::InvalidInput);
  REQUIRE_THROWS_AS(qb::parse_drift_model("cir"), qb::InvalidInput);
  REQUIRE_THROWS_AS(qb::parse_noise_mode("uniform"), qb::InvalidInput);
}
