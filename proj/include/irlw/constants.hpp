#pragma once

/**
 * \file constants.hpp
 * \brief Closed-form step-size bounds, ball radius and the constant families of the rate analysis.
 *
 * All evaluators are pure functions of their arguments.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "irlw/errors.hpp"
#include "irlw/geometry.hpp"

namespace irlw {

/// Constants a forward problem declares about itself on the ball B.
struct ProblemConstants
{
  double lipschitz_L{0.0};      ///< ||F'(u1) - F'(u2)|| <= L ||u1 - u2||; 0 for linear maps.
  double deriv_bound_Lhat{1.0}; ///< ||F'(u)|| <= Lhat.
  double stability_CF{1.0};     ///< Hoelder stability constant.
  double stability_eps{1.0};    ///< Hoelder exponent in [0, 1]; 1 is Lipschitz stability.

  void validate() const
  {
    if (!(lipschitz_L >= 0.0) || !std::isfinite(lipschitz_L))
      throw DomainError("Lipschitz constant L must be finite and >= 0");
    if (!(deriv_bound_Lhat > 0.0) || !std::isfinite(deriv_bound_Lhat))
      throw DomainError("derivative bound Lhat must be positive and finite");
    if (!(stability_CF > 0.0) || !std::isfinite(stability_CF))
      throw DomainError("stability constant C_F must be positive and finite");
    if (!(stability_eps >= 0.0 && stability_eps <= 1.0))
      throw DomainError("stability exponent eps must lie in [0, 1]");
  }
};

/// K1..K5, M_1 and the per-iteration alpha_k.
struct RateConstants
{
  double k1{0.0};
  double k2{0.0};
  double k3{0.0};
  double k4{0.0};
  double k5{0.0};
  double m1{0.0};
  double mu{0.0};
  double rho_sq{0.0};
  double t{0.0}; ///< (1 - eps) / (1 + eps)
  double alpha{1.0};
};

namespace detail {

inline std::array<double, 4> kappa_terms(double p)
{
  const double q = p / (p - 1.0);
  const double r3 = std::sqrt(3.0);
  return {std::min(0.5 * p * (p - 1.0), 1.0), std::min(0.5 * p, 1.0) * (p - 1.0),
          (p - 1.0) * (1.0 - std::pow(r3 - 1.0, q)),
          1.0 - std::pow(1.0 + (2.0 - r3) * p / (p - 1.0), 1.0 - p)};
}

inline void require_gauge(double p)
{
  if (!(p > 1.0) || !std::isfinite(p))
    throw DomainError("exponent p must be > 1, got " + std::to_string(p));
}

} // namespace detail

/// K_p = 4 (2 + sqrt 3) times the smallest of the four bracketed terms.
inline double kappa_p(double p)
{
  detail::require_gauge(p);
  const auto terms = detail::kappa_terms(p);
  return 4.0 * (2.0 + std::sqrt(3.0)) * *std::min_element(terms.begin(), terms.end());
}

/// 1-based index of the term selected by the minimum in kappa_p.
inline int kappa_p_min_term(double p)
{
  detail::require_gauge(p);
  const auto terms = detail::kappa_terms(p);
  return int(std::min_element(terms.begin(), terms.end()) - terms.begin()) + 1;
}

/// Supremum of step sizes with mu^(q-1) < q / (2^q Lhat^q G_q).
inline double mu_max(const SpaceGeometry& space, const ProblemConstants& c)
{
  const double q = space.q();
  const double bound = q / (std::pow(2.0, q) * std::pow(c.deriv_bound_Lhat, q) * space.g_q());
  return std::pow(bound, 1.0 / (q - 1.0));
}

/// 1 - L C_F^2 (p / C_p)^(2/p) / 2; must be positive in the eps = 0 regime.
inline double eps0_bracket(const SpaceGeometry& space, const ProblemConstants& c)
{
  const double p = space.p();
  return 1.0 - 0.5 * c.lipschitz_L * c.stability_CF * c.stability_CF *
                   std::pow(p / space.c_p(), 2.0 / p);
}

/// Supremum of admissible step sizes when the stability exponent is zero.
inline double mu_max_eps0(const SpaceGeometry& space, const ProblemConstants& c)
{
  const double bracket = eps0_bracket(space, c);
  if (!(bracket > 0.0)) {
    std::ostringstream msg;
    msg << "no admissible step size for eps = 0: 1 - L*C_F^2*(p/C_p)^(2/p)/2 = " << bracket
        << " <= 0";
    throw InfeasibleError(msg.str());
  }
  const double q = space.q();
  const double bound =
      q / (std::pow(2.0, q - 1.0) * space.g_q() * std::pow(c.deriv_bound_Lhat, q)) * bracket;
  return std::pow(bound, 1.0 / (q - 1.0));
}

/// Step-size bound of the regime selected by the stability exponent.
inline double step_size_bound(const SpaceGeometry& space, const ProblemConstants& c)
{
  return c.stability_eps == 0.0 ? mu_max_eps0(space, c) : mu_max(space, c);
}

/**
 * \brief rho^2 = Lhat^(-p) (L C_F^2)^(-p/eps) (C_p/p)^(1 + 2/eps).
 *
 * Returns +infinity when L = 0: the residual restriction behind the radius is then void.
 */
inline double rho_squared(const SpaceGeometry& space, const ProblemConstants& c)
{
  const double eps = c.stability_eps;
  if (!(eps > 0.0))
    throw DomainError("rho_squared needs eps > 0; supply rho^2 explicitly when eps = 0");
  const double p = space.p();
  if (c.lipschitz_L == 0.0)
    return std::numeric_limits<double>::infinity();
  // log form keeps large exponents (small eps) from overflowing early.
  const double log_rho = -p * std::log(c.deriv_bound_Lhat) -
                         (p / eps) * std::log(c.lipschitz_L * c.stability_CF * c.stability_CF) +
                         (1.0 + 2.0 / eps) * std::log(space.c_p() / p);
  return std::exp(log_rho);
}

/**
 * \brief Largest beta_k keeping the one-step Bregman increment non-positive.
 *
 * ((q / (p G_q)) 2^(1-(p+q)) (C_p - p))^(1/(q-1)); requires C_p > p.
 */
inline double beta_admissible_max(const SpaceGeometry& space)
{
  const double p = space.p();
  const double q = space.q();
  if (!(space.c_p() > p)) {
    std::ostringstream msg;
    msg << "beta admissibility bound needs C_p > p (C_p = " << space.c_p() << ", p = " << p << ")";
    throw InfeasibleError(msg.str());
  }
  const double inner =
      q / (p * space.g_q()) * std::pow(2.0, 1.0 - (p + q)) * (space.c_p() - p);
  return std::pow(inner, 1.0 / (q - 1.0));
}

/// alpha_k = 1 + beta/C_p - beta + 2^(p+q-2) beta^q (G_q/q) (p/C_p).
inline double alpha_k(const SpaceGeometry& space, double beta)
{
  const double p = space.p();
  const double q = space.q();
  const double cp = space.c_p();
  return 1.0 + beta / cp - beta +
         std::pow(2.0, p + q - 2.0) * std::pow(beta, q) * (space.g_q() / q) * (p / cp);
}

/// Constant families without checking the step-size hypothesis; K1 or M_1 may be non-positive.
inline RateConstants evaluate_rate_constants(const SpaceGeometry& space, const ProblemConstants& c,
                                             double mu, double rho_sq, double beta_k)
{
  const double p = space.p();
  const double q = space.q();
  const double g = space.g_q();
  const double cp = space.c_p();
  const double eps = c.stability_eps;
  const double lhat_q = std::pow(c.deriv_bound_Lhat, q);
  const double cf2 = c.stability_CF * c.stability_CF;

  RateConstants rc;
  rc.mu = mu;
  rc.rho_sq = rho_sq;
  rc.t = (1.0 - eps) / (1.0 + eps);
  rc.k1 = 0.5 * mu - std::pow(2.0, q - 1.0) * (g / q) * std::pow(mu, q) * lhat_q;
  rc.k2 = rc.k1 / std::pow(c.stability_CF, 2.0 * p / (1.0 + eps));
  rc.k3 = std::pow(2.0, p + q - 2.0) * (g / q) * (p / cp) * rho_sq;
  rc.k4 = ((p - 1.0) / cp) * rho_sq;
  rc.k5 = rc.k3 + rc.k4;
  // Coefficient of -gamma^2 in the eps = 0 recursion; positive exactly when mu < mu_max_eps0.
  rc.m1 = std::pow(c.stability_CF, -2.0 * p) *
          (mu - std::pow(2.0, q - 1.0) * (g / q) * std::pow(mu, q) * lhat_q -
           0.5 * mu * c.lipschitz_L * cf2 * std::pow(p / cp, 2.0 / p));
  rc.alpha = alpha_k(space, beta_k);
  return rc;
}

/// Constant families; throws when mu violates the step-size bound of the eps regime.
inline RateConstants rate_constants(const SpaceGeometry& space, const ProblemConstants& c,
                                    double mu, double rho_sq, double beta_k)
{
  c.validate();
  const auto rc = evaluate_rate_constants(space, c, mu, rho_sq, beta_k);
  if (c.stability_eps == 0.0) {
    if (!(mu < mu_max_eps0(space, c)) || !(rc.m1 > 0.0))
      throw InfeasibleError("step size mu = " + std::to_string(mu) +
                            " violates the eps = 0 bound (M_1 <= 0)");
  } else if (!(mu < mu_max(space, c)) || !(rc.k1 > 0.0)) {
    throw InfeasibleError("step size mu = " + std::to_string(mu) + " >= mu_max (K1 <= 0)");
  }
  return rc;
}

/**
 * \brief Right-hand side of the one-step recursion
 *        gamma_{k+1} <= -decrease * gamma_k^exponent + alpha_k gamma_k + K5 beta_k.
 *
 * Built for eps > 0 with (K2, 2/(1+eps)) and for eps = 0 with (M_1, 2).
 */
class RecursionBound
{
public:
  RecursionBound(SpacePtr space, double decrease, double exponent, double k5)
      : space_(std::move(space)), decrease_(decrease), exponent_(exponent), k5_(k5)
  {
  }

  static RecursionBound holder(SpacePtr space, const RateConstants& rc, double eps)
  {
    return RecursionBound(std::move(space), rc.k2, 2.0 / (1.0 + eps), rc.k5);
  }

  static RecursionBound eps_zero(SpacePtr space, const RateConstants& rc)
  {
    return RecursionBound(std::move(space), rc.m1, 2.0, rc.k5);
  }

  double alpha(double beta) const { return alpha_k(*space_, beta); }

  double rhs(double gamma, double beta) const
  {
    // K5 * 0 stays 0 even for an unbounded ball.
    const double forcing = beta == 0.0 ? 0.0 : k5_ * beta;
    return -decrease_ * std::pow(gamma, exponent_) + alpha(beta) * gamma + forcing;
  }

  double decrease() const { return decrease_; }
  double exponent() const { return exponent_; }
  double k5() const { return k5_; }
  const SpacePtr& space() const { return space_; }

private:
  SpacePtr space_;
  double decrease_;
  double exponent_;
  double k5_;
};

} // namespace irlw
