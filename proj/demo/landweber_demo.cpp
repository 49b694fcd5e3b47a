// Library walk-through without config files: a monomial problem with Hoelder exponent 1/3,
// solved with a power-law regularization sequence, then checked against the one-step recursion.

#include <cstdio>

#include "irlw/irlw.hpp"

int main()
{
  using namespace irlw;

  const auto space = SpaceGeometry::hilbert(4);
  const auto problem = make_monomial(space, 1.5, {1.0, 1.2, 0.9, 1.1}, 0.25);
  const auto& c = problem->constants();

  SolverConfig cfg;
  cfg.mu = 0.9 * step_size_bound(*space, c);
  cfg.rho_sq = std::min(rho_squared(*space, c), 0.5 * 0.25 * 0.25);
  cfg.schedule = BetaSchedule::power(0.1, 2.0);
  cfg.max_iterations = 2000;
  cfg.gamma_tolerance = 1e-12;
  cfg.u0 = 0.95 * *problem->ground_truth();
  const auto rc = evaluate_rate_constants(*space, c, cfg.mu, cfg.rho_sq, 0.0);
  cfg.bound = RecursionBound::holder(space, rc, c.stability_eps);

  const auto trace = solve(*problem, cfg);
  std::printf("eps = %.4f  mu = %.6f  rho^2 = %.6f  K2 = %.6f  K5 = %.6f\n", c.stability_eps,
              cfg.mu, cfg.rho_sq, rc.k2, rc.k5);
  std::printf("%5s %12s %14s %14s\n", "k", "beta", "gamma", "residual");
  for (const auto& r : trace.records)
    if (r.k % 5 == 0 || &r == &trace.records.back())
      std::printf("%5zu %12.4e %14.6e %14.6e\n", r.k, r.beta, *r.gamma, r.residual);

  const auto chk = check_recursion(trace, *cfg.bound);
  std::printf("status = %s, min recursion slack = %.3e\n", to_string(trace.status).c_str(),
              chk.min_slack);

  const auto fit = estimate_stability(*problem, 500, 42, 0.25);
  std::printf("fitted eps = %.4f (declared %.4f), slope = %.4f +- %.4f\n", fit.fitted_eps,
              c.stability_eps, fit.regression_slope, fit.slope_stderr);
  return chk.holds() ? 0 : 1;
}
