#pragma once

/**
 * \file solver.hpp
 * \brief Iteratively regularized Landweber iteration, regularization schedules and run traces.
 *
 * The standard update works on the dual side of the shift u - u0:
 *
 *   J_p(u_{k+1} - u0) = (1 - beta_k) J_p(u_k - u0) - mu F'(u_k)^* j_p(F(u_k) - v),
 *   u_{k+1}           = u0 + J_q^*(J_p(u_{k+1} - u0)).
 *
 * The unshifted variant updates J_p(u_k) directly and pulls toward u0 through
 * beta_k J_p(u0 - u_k).
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "irlw/constants.hpp"
#include "irlw/errors.hpp"
#include "irlw/geometry.hpp"
#include "irlw/problems.hpp"

namespace irlw {

enum class ScheduleKind
{
  zero,
  power,     ///< base / (k+1)^decay, decay > 1
  geometric, ///< base * decay^k, decay in (0, 1)
  adaptive   ///< min(base * decay^k, smoothness_C * gamma_k)
};

inline std::string to_string(ScheduleKind k)
{
  switch (k) {
  case ScheduleKind::zero: return "zero";
  case ScheduleKind::power: return "power";
  case ScheduleKind::geometric: return "geometric";
  case ScheduleKind::adaptive: return "adaptive";
  }
  return "?";
}

inline ScheduleKind schedule_kind_from_string(const std::string& s)
{
  if (s == "zero") return ScheduleKind::zero;
  if (s == "power") return ScheduleKind::power;
  if (s == "geometric") return ScheduleKind::geometric;
  if (s == "adaptive") return ScheduleKind::adaptive;
  throw ConfigError("unknown schedule kind '" + s + "' (zero|power|geometric|adaptive)");
}

/// Regularization sequence beta_k; every emitted value is clamped to [0, beta_max].
struct BetaSchedule
{
  ScheduleKind kind{ScheduleKind::zero};
  double base{0.0};
  double decay{2.0};
  double smoothness_C{1.0};
  double beta_max{0.5};

  static BetaSchedule zero() { return {}; }
  static BetaSchedule power(double base, double exponent, double beta_max = 0.5)
  {
    return {ScheduleKind::power, base, exponent, 1.0, beta_max};
  }
  static BetaSchedule geometric(double base, double ratio, double beta_max = 0.5)
  {
    return {ScheduleKind::geometric, base, ratio, 1.0, beta_max};
  }
  static BetaSchedule adaptive(double base, double ratio, double c, double beta_max = 0.5)
  {
    return {ScheduleKind::adaptive, base, ratio, c, beta_max};
  }

  void validate() const
  {
    if (!(beta_max >= 0.0 && beta_max < 1.0))
      throw ConfigError("beta_max must lie in [0, 1), got " + std::to_string(beta_max));
    if (kind == ScheduleKind::zero)
      return;
    if (!(base > 0.0 && base < 1.0))
      throw ConfigError("schedule base must lie in (0, 1), got " + std::to_string(base));
    switch (kind) {
    case ScheduleKind::power:
      if (!(decay > 1.0) || !std::isfinite(decay))
        throw ConfigError("power schedule exponent must be > 1 for a summable sequence, got " +
                          std::to_string(decay));
      break;
    case ScheduleKind::geometric:
    case ScheduleKind::adaptive:
      if (!(decay > 0.0 && decay < 1.0))
        throw ConfigError("geometric ratio must lie in (0, 1), got " + std::to_string(decay));
      if (kind == ScheduleKind::adaptive && !(smoothness_C > 0.0))
        throw ConfigError("adaptive schedule needs smoothness_C > 0");
      break;
    default: break;
    }
  }
};

/// beta_k for iteration k; \p gamma_k is required by the adaptive kind.
inline double emit_beta(const BetaSchedule& s, std::size_t k,
                        std::optional<double> gamma_k = std::nullopt)
{
  double b = 0.0;
  switch (s.kind) {
  case ScheduleKind::zero: return 0.0;
  case ScheduleKind::power: b = s.base / std::pow(double(k) + 1.0, s.decay); break;
  case ScheduleKind::geometric: b = s.base * std::pow(s.decay, double(k)); break;
  case ScheduleKind::adaptive:
    if (!gamma_k)
      throw ConfigError("adaptive schedule needs gamma_k, which requires a known ground truth");
    b = std::min(s.base * std::pow(s.decay, double(k)), s.smoothness_C * *gamma_k);
    break;
  }
  return std::clamp(b, 0.0, s.beta_max);
}

enum class Variant
{
  standard,  ///< dual update of u - u0
  unshifted  ///< dual update of u with pull term beta_k J_p(u0 - u_k)
};

inline std::string to_string(Variant v) { return v == Variant::standard ? "standard" : "unshifted"; }

inline Variant variant_from_string(const std::string& s)
{
  if (s == "standard") return Variant::standard;
  if (s == "unshifted") return Variant::unshifted;
  throw ConfigError("unknown variant '" + s + "' (standard|unshifted)");
}

enum class Status
{
  running,
  residual_converged,
  gamma_converged,
  max_iterations,
  left_ball,
  non_finite
};

inline std::string to_string(Status s)
{
  switch (s) {
  case Status::running: return "running";
  case Status::residual_converged: return "residual_converged";
  case Status::gamma_converged: return "gamma_converged";
  case Status::max_iterations: return "max_iterations";
  case Status::left_ball: return "left_ball";
  case Status::non_finite: return "non_finite";
  }
  return "?";
}

struct SolverConfig
{
  double mu{0.1};
  BetaSchedule schedule{};
  Variant variant{Variant::standard};
  std::size_t max_iterations{1000};
  double residual_tolerance{0.0};
  double gamma_tolerance{0.0};
  std::optional<PrimalVector> u0; ///< defaults to the zero vector
  double rho_sq{std::numeric_limits<double>::infinity()}; ///< radius of the Bregman ball B
  bool allow_large_step{false};   ///< skip the step-size bound check
  std::optional<RecursionBound> bound; ///< fills alpha and bound_rhs in the trace
};

inline PrimalVector initial_guess(const ForwardProblem& problem, const SolverConfig& config)
{
  return config.u0 ? *config.u0 : PrimalVector::zero(problem.domain_space());
}

/// Checks the configuration against the problem; throws ConfigError or InfeasibleError.
inline void validate(const SolverConfig& config, const ForwardProblem& problem)
{
  if (!(config.mu > 0.0) || !std::isfinite(config.mu))
    throw ConfigError("step size mu must be positive and finite");
  config.schedule.validate();
  if (config.variant == Variant::unshifted && !(config.schedule.beta_max < 0.5))
    throw ConfigError("the unshifted variant needs beta_max < 1/2, got " +
                      std::to_string(config.schedule.beta_max));
  if (!(config.residual_tolerance >= 0.0) || !(config.gamma_tolerance >= 0.0))
    throw ConfigError("tolerances must be non-negative");
  if (!(config.rho_sq > 0.0))
    throw ConfigError("rho_sq must be positive");
  if (config.schedule.kind == ScheduleKind::adaptive && !problem.ground_truth())
    throw ConfigError("adaptive schedule needs gamma_k, which requires a known ground truth");
  const auto u0 = initial_guess(problem, config);
  detail::require_same_space(u0.space(), problem.domain_space());
  if (!config.allow_large_step) {
    const double bound = step_size_bound(*problem.domain_space(), problem.constants());
    if (!(config.mu < bound))
      throw InfeasibleError("step size mu = " + std::to_string(config.mu) +
                            " is not below the admissible bound " + std::to_string(bound));
  }
  if (problem.ground_truth() && std::isfinite(config.rho_sq)) {
    const double g0 = shifted_bregman(*problem.ground_truth(), u0, u0);
    if (g0 > config.rho_sq)
      throw ConfigError("initial guess lies outside the ball: gamma_0 = " + std::to_string(g0) +
                        " > rho^2 = " + std::to_string(config.rho_sq));
  }
}

namespace detail {

inline PrimalVector standard_update(const ForwardProblem& problem, const PrimalVector& u0,
                                    double mu, const PrimalVector& u_k,
                                    const PrimalVector& residual, double beta)
{
  const DualVector descent = problem.apply_adjoint(u_k, duality_map(residual));
  const DualVector dual = (1.0 - beta) * duality_map(u_k - u0) - mu * descent;
  return u0 + inverse_duality_map(dual);
}

inline PrimalVector unshifted_update(const ForwardProblem& problem, const PrimalVector& u0,
                                     double mu, const PrimalVector& u_k,
                                     const PrimalVector& residual, double beta)
{
  const DualVector descent = problem.apply_adjoint(u_k, duality_map(residual));
  const DualVector dual = duality_map(u_k) - mu * descent + beta * duality_map(u0 - u_k);
  return inverse_duality_map(dual);
}

} // namespace detail

/// One standard step from u_k with regularization weight beta_k.
inline PrimalVector step(const ForwardProblem& problem, const SolverConfig& config,
                         const PrimalVector& u_k, double beta_k)
{
  const PrimalVector residual = problem.apply(u_k) - problem.data();
  return detail::standard_update(problem, initial_guess(problem, config), config.mu, u_k, residual,
                                 beta_k);
}

/// One step of the unshifted variant.
inline PrimalVector step_variant_b(const ForwardProblem& problem, const SolverConfig& config,
                                   const PrimalVector& u_k, double beta_k)
{
  if (!(config.schedule.beta_max < 0.5))
    throw ConfigError("the unshifted variant needs beta_max < 1/2");
  const PrimalVector residual = problem.apply(u_k) - problem.data();
  return detail::unshifted_update(problem, initial_guess(problem, config), config.mu, u_k,
                                  residual, beta_k);
}

struct IterationRecord
{
  std::size_t k{0};
  double beta{0.0};
  std::optional<double> gamma;
  double residual{0.0};
  std::optional<double> err_norm;
  bool in_ball{true};
  std::optional<double> alpha;
  std::optional<double> bound_rhs; ///< recursion bound on gamma_{k+1}
};

struct IterationTrace
{
  std::vector<IterationRecord> records;
  Status status{Status::running};
  std::optional<PrimalVector> final_iterate;

  bool has_gamma() const
  {
    return !records.empty() && std::all_of(records.begin(), records.end(),
                                            [](const auto& r) { return r.gamma.has_value(); });
  }
  std::vector<double> gammas() const
  {
    std::vector<double> g;
    for (const auto& r : records)
      g.push_back(r.gamma.value_or(std::numeric_limits<double>::quiet_NaN()));
    return g;
  }
  std::vector<double> betas() const
  {
    std::vector<double> b;
    for (const auto& r : records)
      b.push_back(r.beta);
    return b;
  }
};

/**
 * \brief Run the iteration until a stopping rule fires.
 *
 * Row k records the state u_k and the beta_k used to produce u_{k+1}. Stops on non-finite values,
 * on leaving B (gamma_k > rho^2), on the residual or gamma tolerance, or after max_iterations.
 */
inline IterationTrace solve(const ForwardProblem& problem, const SolverConfig& config)
{
  validate(config, problem);
  const auto u0 = initial_guess(problem, config);
  const auto& truth = problem.ground_truth();
  const double ball_tol = 1e-12 * std::max(1.0, std::isfinite(config.rho_sq) ? config.rho_sq : 1.0);

  IterationTrace trace;
  PrimalVector u = u0;
  for (std::size_t k = 0;; ++k) {
    IterationRecord rec;
    rec.k = k;
    std::optional<PrimalVector> residual;
    try {
      residual = problem.apply(u) - problem.data();
    } catch (const DomainError&) {
      // Vector constructors reject non-finite coefficients.
      trace.status = Status::non_finite;
      break;
    }
    rec.residual = norm(*residual);
    if (truth) {
      rec.gamma = shifted_bregman(*truth, u, u0);
      rec.err_norm = norm(u - *truth);
      rec.in_ball = *rec.gamma <= config.rho_sq + ball_tol;
    }
    rec.beta = emit_beta(config.schedule, k, rec.gamma);
    if (config.bound) {
      rec.alpha = config.bound->alpha(rec.beta);
      if (rec.gamma)
        rec.bound_rhs = config.bound->rhs(*rec.gamma, rec.beta);
    }
    trace.records.push_back(rec);

    if (!std::isfinite(rec.residual) || (rec.gamma && !std::isfinite(*rec.gamma)))
      trace.status = Status::non_finite;
    else if (!rec.in_ball)
      trace.status = Status::left_ball;
    else if (rec.residual <= config.residual_tolerance)
      trace.status = Status::residual_converged;
    else if (rec.gamma && *rec.gamma <= config.gamma_tolerance)
      trace.status = Status::gamma_converged;
    else if (k >= config.max_iterations)
      trace.status = Status::max_iterations;
    if (trace.status != Status::running)
      break;

    try {
      u = config.variant == Variant::standard
              ? detail::standard_update(problem, u0, config.mu, u, *residual, rec.beta)
              : detail::unshifted_update(problem, u0, config.mu, u, *residual, rec.beta);
    } catch (const DomainError&) {
      trace.status = Status::non_finite;
      break;
    }
  }
  trace.final_iterate = u;
  return trace;
}

// ---------------------------------------------------------------------------------------------
// Serialization

namespace detail {

inline std::string fmt17(double x)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string fmt_opt(const std::optional<double>& x) { return x ? fmt17(*x) : std::string(); }

} // namespace detail

inline void write_trace_csv(std::ostream& os, const IterationTrace& trace)
{
  os << "k,beta,gamma,residual,err_norm,in_ball,alpha,bound_rhs,status\n";
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const auto& r = trace.records[i];
    os << r.k << ',' << detail::fmt17(r.beta) << ',' << detail::fmt_opt(r.gamma) << ','
       << detail::fmt17(r.residual) << ',' << detail::fmt_opt(r.err_norm) << ','
       << (r.in_ball ? 1 : 0) << ',' << detail::fmt_opt(r.alpha) << ','
       << detail::fmt_opt(r.bound_rhs) << ',';
    if (i + 1 == trace.records.size())
      os << to_string(trace.status);
    os << '\n';
  }
}

} // namespace irlw
