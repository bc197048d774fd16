// Prices a call three ways, prints its Greeks and a ruin estimate.

#include <cstdio>

#include "qb/pricing.hpp"
#include "qb/risk.hpp"

int main() {
  const qb::OptionSpec spec{100.0, 105.0, 0.75, 0.03, 0.25};
  const auto cf = qb::CharacteristicFunction::black_scholes(spec.sigma, spec.T);
  std::printf("closed form  %.8f\n", qb::bsm_call(spec));
  std::printf("lewis        %.8f\n", qb::lewis_call(cf, spec).price);
  std::printf("carr-madan   %.8f\n", qb::carr_madan_call(cf, spec, 1.5).price);

  const auto g = qb::greeks(spec);
  std::printf("delta %.6f gamma %.6f vega %.6f theta %.6f rho %.6f\n", g.delta, g.gamma, g.vega, g.theta, g.rho);

  const auto claims = qb::ClaimModel::gamma(2.0, 0.5, 1.0, 0.3);
  const double kappa = qb::adjustment_coefficient(claims).kappa;
  const auto rep = qb::simulate_ruin(claims, 5.0, 200.0, 100000, 42);
  std::printf("kappa %.6f  psi(5) %.5f +- %.5f  bound %.5f\n", kappa, rep.psi_hat, rep.std_error,
              qb::lundberg_bound(5.0, kappa));
}
