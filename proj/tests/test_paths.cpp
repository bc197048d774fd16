#include <catch_amalgamated.hpp>

#include <cmath>

#include "qb/core/parallel.hpp"
#include "qb/paths.hpp"
#include "qb/pricing.hpp"
#include "test_support.hpp"

using Catch::Approx;

TEST_CASE("ou zero noise follows the Euler recursion on every path") {
  const qb::TimeGrid grid{0.0, 0.01, 100};
  const auto m = qb::simulate_ou({1.0, 0.0, 0.0, 1.0}, grid, 7, 42);
  REQUIRE(m.rows() == 7);
  REQUIRE(m.cols() == 101);
  double x = 1.0;
  for (std::size_t k = 0; k <= 100; ++k) {
    for (std::size_t p = 0; p < 7; ++p) REQUIRE(m(p, k) == Approx(x).epsilon(1e-14));
    x *= 1.0 - 0.01;
  }
}

TEST_CASE("ou with theta and sigma zero stays at x0") {
  const auto m = qb::simulate_ou({0.0, 3.0, 0.0, 0.7}, {0.0, 0.1, 20}, 3, 1);
  for (double v : m.values()) REQUIRE(v == 0.7);
}

TEST_CASE("ou terminal moments match the analytic OU law") {
  const double theta = 2.0, mu = 0.05, sigma = 0.1, x0 = 0.2;
  const qb::TimeGrid grid{0.0, 1e-3, 1000};
  const auto m = qb::simulate_ou({theta, mu, sigma, x0}, grid, 100000, 2024, {1000});
  REQUIRE(m.cols() == 2);
  REQUIRE(m(0, 0) == x0);
  const auto st = qbt::moments(m.terminal());
  const double mean = mu + (x0 - mu) * std::exp(-theta);
  const double var = sigma * sigma * (1.0 - std::exp(-2.0 * theta)) / (2.0 * theta);
  CHECK(std::abs(st.mean - mean) <= 3.0 * st.se_mean);
  CHECK(std::abs(st.var - var) <= 3.0 * st.se_var);
}

TEST_CASE("ou rejects bad parameters") {
  REQUIRE_THROWS_AS(qb::simulate_ou({-1.0, 0.0, 0.1, 0.0}, {0.0, 0.1, 10}, 1, 0), qb::InvalidInput);
  REQUIRE_THROWS_AS(qb::simulate_ou({1.0, NAN, 0.1, 0.0}, {0.0, 0.1, 10}, 1, 0), qb::InvalidInput);
  REQUIRE_THROWS_AS(qb::simulate_ou({1.0, 0.0, 0.1, 0.0}, {0.0, 0.0, 10}, 1, 0), qb::InvalidInput);
}

TEST_CASE("hull-white with constant level a*mu is bitwise the OU simulation") {
  const qb::OuParams p{0.7, 0.03, 0.02, 0.01};
  const qb::TimeGrid grid{0.0, 0.01, 50};
  const auto ou = qb::simulate_ou(p, grid, 64, 9);
  const auto hw = qb::simulate_hull_white(p, [&](double) { return p.theta * p.mu; }, grid, 64, 9);
  REQUIRE(ou == hw);
}

TEST_CASE("hull-white with a = 0 and unit level drifts linearly") {
  const auto m = qb::simulate_hull_white({0.0, 0.0, 0.0, 0.5}, [](double) { return 1.0; }, {0.0, 0.01, 100}, 2, 3);
  for (std::size_t k = 0; k <= 100; ++k) REQUIRE(m(1, k) == Approx(0.5 + 0.01 * k).margin(1e-12));
}

TEST_CASE("hull-white piecewise level: terminal mean matches an RK4 solution of the mean ODE") {
  const double a = 0.5, sigma = 0.05, x0 = 0.03;
  auto level = [](double t) { return t < 0.5 ? 0.02 : 0.06; };
  const auto m = qb::simulate_hull_white({a, 0.0, sigma, x0}, level, {0.0, 1e-3, 1000}, 20000, 77, {1000});
  // dm/dt = level(t) - a m, integrated piece by piece with RK4
  double x = x0;
  const double h = 1e-4;
  for (int piece = 0; piece < 2; ++piece) {
    const double lv = piece == 0 ? 0.02 : 0.06;
    auto f = [&](double y) { return lv - a * y; };
    for (int i = 0; i < 5000; ++i) {
      const double k1 = f(x), k2 = f(x + 0.5 * h * k1), k3 = f(x + 0.5 * h * k2), k4 = f(x + h * k3);
      x += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
  }
  const auto st = qbt::moments(m.terminal());
  CHECK(std::abs(st.mean - x) <= 3.0 * st.se_mean);
}

TEST_CASE("rough vol literal recursion") {
  SECTION("no noise, no drift: constant at S0") {
    const auto m = qb::simulate_rough_vol({{1.0, 2.0, 3.0}, 0.0, 0.0}, 1.0, 0.1, 5);
    for (std::size_t p = 0; p < 3; ++p)
      for (std::size_t k = 0; k < m.cols(); ++k) REQUIRE(m(p, k) == static_cast<double>(p + 1));
  }
  SECTION("no noise, gamma = 1: compounding by 1 + dt") {
    const auto m = qb::simulate_rough_vol({{1.0}, 0.0, 1.0}, 1.0, 0.1, 5);
    REQUIRE(m.cols() == 11);
    double x = 1.0;
    for (std::size_t k = 0; k < m.cols(); ++k, x *= 1.1) REQUIRE(m(0, k) == Approx(x).epsilon(1e-14));
  }
  SECTION("faithful shock: Var(x_K - x_0) = K dt^2") {
    const std::size_t n = 100000;
    const auto m = qb::simulate_rough_vol({std::vector<double>(n, 0.0), 1.0, 0.0}, 1.0, 0.1, 11);
    const auto st = qbt::moments(m.terminal());
    CHECK(std::abs(st.var - 10 * 0.01) <= 3.0 * st.se_var);
  }
  SECTION("scaled shock: Var(x_K - x_0) = K dt") {
    const std::size_t n = 50000;
    const auto m = qb::simulate_rough_vol({std::vector<double>(n, 0.0), 1.0, 0.0}, 1.0, 0.1, 11, true);
    const auto st = qbt::moments(m.terminal());
    CHECK(std::abs(st.var - 1.0) <= 3.0 * st.se_var);
  }
  REQUIRE_THROWS_AS(qb::simulate_rough_vol({{1.0}, 0.1, 0.0}, 1.0, 0.0, 1), qb::InvalidInput);
}

TEST_CASE("rbergomi reductions and moments") {
  SECTION("eta = 0 gives flat variance") {
    const auto v = qb::simulate_rbergomi_variance({0.04, 0.0, 0.1}, {0.0, 0.01, 50}, 10, 3);
    for (double x : v.values()) REQUIRE(x == 0.04);
  }
  SECTION("H = 1/2: the driver is a Brownian motion") {
    const qb::TimeGrid grid{0.0, 0.02, 50};
    for (auto scheme : {qb::VolterraScheme::variance_matched, qb::VolterraScheme::left_point}) {
      const auto w = qb::simulate_volterra_driver(0.5, grid, 100000, 8, scheme, {25});
      const auto st = qbt::moments(w.terminal());
      CHECK(std::abs(st.var - 1.0) <= 3.0 * st.se_var);
      const auto mid = qbt::moments(w.column(1));
      CHECK(std::abs(mid.var - 0.5) <= 3.0 * mid.se_var);
    }
  }
  SECTION("H = 0.1, dt = 1/500: Var(W~(1)) within 5% of 1 and E[v] = xi0") {
    const qb::TimeGrid grid{0.0, 1.0 / 500.0, 500};
    const qb::RBergomiParams p{0.04, 1.9, 0.1};
    const auto w = qb::simulate_volterra_driver(p.hurst, grid, 20000, 21, qb::VolterraScheme::variance_matched, {500});
    const auto st = qbt::moments(w.terminal());
    CHECK(std::abs(st.var - 1.0) <= 0.05);
    const auto v = qb::simulate_rbergomi_variance(p, grid, 20000, 21, qb::VolterraScheme::variance_matched, {500});
    const auto sv = qbt::moments(v.terminal());
    CHECK(std::abs(sv.mean - p.xi0) <= 3.0 * sv.se_mean);
  }
  SECTION("left-point sum has the variance of its own discretized kernel") {
    const double H = 0.1, dt = 1.0 / 100.0;
    const auto w = qb::simulate_volterra_driver(H, {0.0, dt, 100}, 40000, 5, qb::VolterraScheme::left_point, {100});
    double exact = 0.0;  // 2H sum_m (m dt)^{-2 gamma} dt
    for (int m = 1; m <= 100; ++m) exact += 2.0 * H * std::pow(m * dt, -2.0 * (0.5 - H)) * dt;
    const auto st = qbt::moments(w.terminal());
    CHECK(std::abs(st.var - exact) <= 3.0 * st.se_var);
  }
  REQUIRE_THROWS_AS(qb::simulate_rbergomi_variance({0.04, 1.0, 0.6}, {0.0, 0.1, 5}, 1, 0), qb::InvalidInput);
  REQUIRE_THROWS_AS(qb::simulate_rbergomi_variance({0.04, 1.0, 0.0}, {0.0, 0.1, 5}, 1, 0), qb::InvalidInput);
}

TEST_CASE("heston") {
  SECTION("sigma_v = 0 and v0 = theta_bar: flat variance, lognormal asset") {
    const qb::HestonParams p{0.04, 1.5, 0.04, 0.0, -0.5, 0.03};
    const auto h = qb::simulate_heston(p, 100.0, {0.0, 0.01, 100}, 50000, 4, {100});
    for (double v : h.variance.values()) REQUIRE(v == 0.04);
    std::vector<double> logret;
    for (double s : h.asset.terminal()) logret.push_back(std::log(s / 100.0));
    const auto st = qbt::moments(logret);
    CHECK(std::abs(st.mean - (0.03 - 0.02)) <= 3.0 * st.se_mean);
    CHECK(std::abs(st.var - 0.04) <= 3.0 * st.se_var);
  }
  SECTION("rho = 0: asset and variance increments uncorrelated") {
    const qb::HestonParams p{0.04, 2.0, 0.04, 0.3, 0.0, 0.0};
    const auto h = qb::simulate_heston(p, 100.0, {0.0, 0.01, 1}, 100000, 6);
    std::vector<double> ds, dv;
    for (std::size_t i = 0; i < h.asset.rows(); ++i) {
      ds.push_back(std::log(h.asset(i, 1) / h.asset(i, 0)));
      dv.push_back(h.variance(i, 1) - h.variance(i, 0));
    }
    const double n = static_cast<double>(ds.size());
    CHECK(std::abs(qbt::sample_corr(ds, dv)) <= 3.0 / std::sqrt(n));
  }
  SECTION("E[V_1] follows the CIR mean") {
    const qb::HestonParams p{0.09, 2.0, 0.04, 0.3, -0.7, 0.0};
    const auto h = qb::simulate_heston(p, 100.0, {0.0, 1e-3, 1000}, 200000, 13, {1000});
    const auto st = qbt::moments(h.variance.terminal());
    const double target = p.theta_bar + (p.v0 - p.theta_bar) * std::exp(-p.kappa);
    CHECK(std::abs(st.mean - target) <= 3.0 * st.se_mean);
  }
  REQUIRE_THROWS_AS(qb::simulate_heston({0.04, 1.0, 0.04, 0.3, 1.5, 0.0}, 100.0, {0.0, 0.1, 2}, 1, 0), qb::InvalidInput);
}

TEST_CASE("libor market model") {
  SECTION("single forward is a martingale") {
    qb::LiborCurve c;
    c.forwards = {0.05};
    c.vols = {0.3};
    c.accruals = {0.5};
    c.first_fixing = 1.0;
    const auto sim = qb::simulate_libor(c, {0.0, 0.01, 100}, 100000, 31, {100});
    const auto st = qbt::moments(sim.forwards[0].terminal());
    CHECK(std::abs(st.mean - 0.05) <= 3.0 * st.se_mean);
    CHECK(sim.absorbed_count == 0);
  }
  SECTION("zero vols keep forwards constant") {
    qb::LiborCurve c;
    c.forwards = {0.04, 0.05, 0.06};
    c.vols = {0.0, 0.0, 0.0};
    c.accruals = {0.25, 0.25, 0.25};
    const auto sim = qb::simulate_libor(c, {0.0, 0.1, 10}, 5, 1);
    for (std::size_t j = 0; j < 3; ++j)
      for (double v : sim.forwards[j].values()) REQUIRE(v == c.forwards[j]);
  }
  SECTION("caplet on the terminal forward matches Black") {
    qb::LiborCurve c;
    c.forwards = {0.05, 0.055};
    c.vols = {0.2, 0.2};
    c.accruals = {0.5, 0.5};
    c.discount_factors = {0.97, 0.945};
    c.first_fixing = 1.0;
    const double K = 0.05, Th = 1.0;
    const auto sim = qb::simulate_libor(c, {0.0, 0.01, 100}, 200000, 57, {100});
    std::vector<double> pay;
    for (double L : sim.forwards[1].terminal()) pay.push_back(0.945 * 0.5 * std::max(L - K, 0.0));
    const auto st = qbt::moments(pay);
    // Black written out: P delta (F N(d1) - K N(d2)), d1 = (ln(F/K) + s^2/2)/s, s = vol sqrt(T)
    const double s = 0.2 * std::sqrt(Th), F = 0.055;
    const double d1 = (std::log(F / K) + 0.5 * s * s) / s;
    const double black = 0.945 * 0.5 * (F * qbt::phi_cdf(d1) - K * qbt::phi_cdf(d1 - s));
    CHECK(std::abs(st.mean - black) <= 3.0 * st.se_mean);
    CHECK(qb::black_caplet({0.945, F, K, 0.5, s}) == Approx(black).epsilon(1e-12));
  }
  SECTION("horizon beyond the first fixing is rejected") {
    qb::LiborCurve c;
    c.forwards = {0.05};
    c.vols = {0.2};
    c.accruals = {0.5};
    c.first_fixing = 0.5;
    REQUIRE_THROWS_AS(qb::simulate_libor(c, {0.0, 0.1, 10}, 1, 0), qb::InvalidInput);
  }
}

TEST_CASE("path matrices are independent of the thread count") {
  const qb::TimeGrid grid{0.0, 0.01, 40};
  qb::PathMatrix a = [&] {
    qb::ScopedThreadCount one(1);
    return qb::simulate_ou({1.0, 0.0, 0.3, 0.1}, grid, 257, 99);
  }();
  qb::PathMatrix b = [&] {
    qb::ScopedThreadCount four(4);
    return qb::simulate_ou({1.0, 0.0, 0.3, 0.1}, grid, 257, 99);
  }();
  REQUIRE(a == b);
  REQUIRE(a.to_csv() == b.to_csv());
}

TEST_CASE("path matrix csv layout") {
  const auto m = qb::simulate_ou({1.0, 0.0, 0.0, 0.25}, {0.0, 0.5, 2}, 2, 0);
  REQUIRE(m.to_csv() == "0,0.5,1\n0.25,0.125,0.0625\n0.25,0.125,0.0625\n");
}
