#pragma once

/**
 * \file analysis.hpp
 * \brief Post-hoc checks of a trace against the one-step recursion, the rate envelopes and the
 *        O(beta_k^(q-1)) order claim.
 *
 * Every function is a pure function of its inputs.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "irlw/constants.hpp"
#include "irlw/errors.hpp"
#include "irlw/regression.hpp"
#include "irlw/solver.hpp"

namespace irlw {

/// Absolute slack allowed in recursion checks and relative slack for envelopes.
inline constexpr double recursion_tolerance = 1e-12;
inline constexpr double envelope_tolerance = 1e-9;

struct RecursionCheck
{
  std::vector<double> slack; ///< slack[k] = rhs(gamma_k, beta_k) - gamma_{k+1}
  double min_slack{std::numeric_limits<double>::infinity()};

  bool holds(double tol = recursion_tolerance) const { return min_slack >= -tol; }
};

namespace detail {

inline void require_gamma(const IterationTrace& trace, const char* who)
{
  if (!trace.has_gamma())
    throw PreconditionError(std::string(who) + ": trace has no gamma values (no ground truth)");
}

} // namespace detail

/// Compares each gamma_{k+1} with the recursion right-hand side evaluated at (gamma_k, beta_k).
inline RecursionCheck check_recursion(const IterationTrace& trace, const RecursionBound& bound)
{
  detail::require_gamma(trace, "check_recursion");
  RecursionCheck out;
  for (std::size_t k = 0; k + 1 < trace.records.size(); ++k) {
    const auto& r = trace.records[k];
    const double s = bound.rhs(*r.gamma, r.beta) - *trace.records[k + 1].gamma;
    out.slack.push_back(s);
    out.min_slack = std::min(out.min_slack, s);
  }
  return out;
}

/// Smallest C with beta_k <= C gamma_k along the trace; +inf if some beta_k > 0 meets gamma_k = 0.
inline double infer_smoothness_C(const IterationTrace& trace)
{
  detail::require_gamma(trace, "infer_smoothness_C");
  double c = 0.0;
  for (const auto& r : trace.records) {
    if (r.beta <= 0.0)
      continue;
    if (*r.gamma <= 0.0)
      return std::numeric_limits<double>::infinity();
    c = std::max(c, r.beta / *r.gamma);
  }
  return c;
}

/// beta_k <= C gamma_k at every record.
inline bool smoothness_condition_holds(const IterationTrace& trace, double c)
{
  detail::require_gamma(trace, "smoothness_condition_holds");
  if (!std::isfinite(c))
    return false;
  return std::all_of(trace.records.begin(), trace.records.end(), [&](const auto& r) {
    return r.beta <= c * *r.gamma * (1.0 + 1e-12);
  });
}

/// Per-k pieces of the rate envelope.
struct RateBoundSeries
{
  std::vector<double> d, e, f, g, h, alpha;
  double t{0.0};
  double decrease{0.0}; ///< K2, or M_1 when eps = 0
  double k5{0.0};
  double smoothness_C{0.0};
  double rho_sq{0.0};
  std::vector<double> predicted_bound; ///< predicted_bound[k] bounds gamma_k; [0] = rho^2
};

/**
 * \brief Envelope ((g_k rho^2)^(-t) + h_k)^(-1/t) for a general t in (0, 1].
 *
 * d_k = alpha_k + C K5, e_k = decrease / d_k, f_k = t e_k d_k^(-t), g_k = d_0 ... d_{k-1},
 * h_1 = f_0 and h_{k+1} = d_k^(-1/t) h_k + f_k. \p alphas must hold at least k_max entries.
 */
inline RateBoundSeries envelope_series(const std::vector<double>& alphas, double decrease,
                                       double k5, double smoothness_C, double rho_sq, double t,
                                       std::size_t k_max)
{
  if (!(t > 0.0 && t <= 1.0))
    throw DomainError("envelope exponent t must lie in (0, 1]");
  if (alphas.size() < k_max)
    throw PreconditionError("envelope needs alpha_0 .. alpha_{k_max-1}");
  RateBoundSeries s;
  s.t = t;
  s.decrease = decrease;
  s.k5 = k5;
  s.smoothness_C = smoothness_C;
  s.rho_sq = rho_sq;
  s.alpha.assign(alphas.begin(), alphas.begin() + std::ptrdiff_t(k_max));
  s.g.push_back(1.0);
  s.h.push_back(0.0);
  s.predicted_bound.push_back(rho_sq);
  for (std::size_t k = 0; k < k_max; ++k) {
    const double dk = alphas[k] + smoothness_C * k5;
    if (!(dk > 0.0) || !std::isfinite(dk))
      throw DomainError("envelope factor d_" + std::to_string(k) + " is not positive and finite");
    const double ek = decrease / dk;
    const double fk = t * ek * std::pow(dk, -t);
    s.d.push_back(dk);
    s.e.push_back(ek);
    s.f.push_back(fk);
    const double g_next = s.g.back() * dk;
    const double h_next = k == 0 ? fk : std::pow(dk, -1.0 / t) * s.h.back() + fk;
    s.g.push_back(g_next);
    s.h.push_back(h_next);
    s.predicted_bound.push_back(std::pow(std::pow(g_next * rho_sq, -t) + h_next, -1.0 / t));
  }
  return s;
}

/// Envelope for 0 < eps < 1 with t = (1 - eps) / (1 + eps) and decrease K2.
inline RateBoundSeries rate_envelope(const std::vector<double>& alphas, double k2, double k5,
                                     double smoothness_C, double rho_sq, double eps,
                                     std::size_t k_max)
{
  if (!(eps > 0.0 && eps < 1.0))
    throw DomainError("rate_envelope covers 0 < eps < 1; use product_bound_eps1 or "
                      "check_zero_exponent for the endpoints");
  return envelope_series(alphas, k2, k5, smoothness_C, rho_sq, (1.0 - eps) / (1.0 + eps), k_max);
}

struct ProductBound
{
  std::vector<double> bound;    ///< bound[k] = rho^2 prod_{i<k} factor_i
  std::vector<double> factors;  ///< -K2 + alpha_i + K5 C
  std::size_t factors_outside_unit{0}; ///< factors not in (0, 1): bound is not contracting there
};

/// Lipschitz-stable (eps = 1) bound gamma_k <= prod_{i<k} (-K2 + alpha_i + K5 C) rho^2.
inline ProductBound product_bound_eps1(const std::vector<double>& alphas, double k2, double k5,
                                       double smoothness_C, double rho_sq, std::size_t k_max)
{
  if (alphas.size() < k_max)
    throw PreconditionError("product bound needs alpha_0 .. alpha_{k_max-1}");
  ProductBound out;
  out.bound.push_back(rho_sq);
  for (std::size_t i = 0; i < k_max; ++i) {
    const double fac = -k2 + alphas[i] + k5 * smoothness_C;
    out.factors.push_back(fac);
    if (!(fac > 0.0 && fac < 1.0))
      ++out.factors_outside_unit;
    out.bound.push_back(out.bound.back() * fac);
  }
  return out;
}

/// Largest relative excess of gamma_k over bound_k for k >= 1; <= envelope_tolerance means it holds.
inline double envelope_excess(const std::vector<double>& gammas, const std::vector<double>& bound)
{
  double worst = -std::numeric_limits<double>::infinity();
  const std::size_t n = std::min(gammas.size(), bound.size());
  for (std::size_t k = 1; k < n; ++k) {
    const double b = bound[k];
    const double excess = b > 0.0 ? gammas[k] / b - 1.0
                                  : (gammas[k] > 0.0 ? std::numeric_limits<double>::infinity() : -1.0);
    worst = std::max(worst, excess);
  }
  return worst;
}

struct OrderCheck
{
  std::vector<double> eta;        ///< gamma_k / beta_k^(q-1)
  std::vector<char> condition;    ///< per-k truth of the eta-boundedness condition, k < n-1
  double eta_cap{0.0};            ///< max eta over the post-burn-in window
  std::size_t window_begin{0};
  double fitted_slope{std::numeric_limits<double>::quiet_NaN()};
  double slope_stderr{std::numeric_limits<double>::quiet_NaN()};
  bool all_conditions_hold{false};
};

/**
 * \brief Order check gamma_k = O(beta_k^(q-1)).
 *
 * eta_cap is the largest eta_k after the first burn_in fraction of records. The per-k condition is
 * K5 + eta_cap / beta_k * (alpha_k - (beta_{k+1}/beta_k)^(q-1)) <= 0. The slope is the log-log
 * regression of gamma on beta over the same window; it stays NaN when fewer than five usable
 * points remain.
 */
inline OrderCheck check_order(const std::vector<double>& gammas, const std::vector<double>& betas,
                              const std::vector<double>& alphas, double q, double k5,
                              double burn_in = 0.2)
{
  const std::size_t n = gammas.size();
  if (betas.size() != n || alphas.size() != n)
    throw PreconditionError("check_order: series lengths differ");
  if (n == 0)
    throw PreconditionError("check_order: empty trace");
  for (double b : betas)
    if (!(b > 0.0))
      throw PreconditionError("check_order needs beta_k > 0 for every k (zero schedule has no order)");
  if (!(burn_in >= 0.0 && burn_in < 1.0))
    throw PreconditionError("burn-in fraction must lie in [0, 1)");
  OrderCheck out;
  out.window_begin = std::min(n - 1, std::size_t(std::floor(burn_in * double(n))));
  for (std::size_t k = 0; k < n; ++k)
    out.eta.push_back(gammas[k] / std::pow(betas[k], q - 1.0));
  out.eta_cap = *std::max_element(out.eta.begin() + std::ptrdiff_t(out.window_begin), out.eta.end());
  out.all_conditions_hold = n > 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double ratio = std::pow(betas[k + 1] / betas[k], q - 1.0);
    const bool ok = k5 + out.eta_cap / betas[k] * (alphas[k] - ratio) <= 0.0;
    out.condition.push_back(ok ? 1 : 0);
    out.all_conditions_hold = out.all_conditions_hold && ok;
  }
  try {
    const auto fit = convergence_slope(betas, gammas, out.window_begin, n);
    out.fitted_slope = fit.slope;
    out.slope_stderr = fit.stderr_slope;
  } catch (const PreconditionError&) {
  }
  return out;
}

inline OrderCheck check_order(const IterationTrace& trace, const SpaceGeometry& space, double k5,
                              double burn_in = 0.2)
{
  detail::require_gamma(trace, "check_order");
  std::vector<double> alphas;
  for (const auto& r : trace.records)
    alphas.push_back(r.alpha ? *r.alpha : alpha_k(space, r.beta));
  return check_order(trace.gammas(), trace.betas(), alphas, space.q(), k5, burn_in);
}

struct ZeroExponentCheck
{
  RecursionCheck recursion;
  RateBoundSeries envelope;
  double envelope_excess{0.0};
};

/**
 * \brief eps = 0 regime: recursion with exponent 2 and constant M_1, envelope with t = 1.
 */
inline ZeroExponentCheck check_zero_exponent(const IterationTrace& trace, const SpaceGeometry& space,
                                           const ProblemConstants& constants,
                                           const RateConstants& rc, double smoothness_C)
{
  if (constants.stability_eps != 0.0)
    throw DomainError("the zero-exponent check needs a problem declared with eps = 0");
  detail::require_gamma(trace, "check_zero_exponent");
  // Non-owning handle: the bound only evaluates alpha_k through the geometry.
  const SpacePtr sp(std::shared_ptr<const SpaceGeometry>(), &space);
  ZeroExponentCheck out;
  out.recursion = check_recursion(trace, RecursionBound::eps_zero(sp, rc));
  std::vector<double> alphas;
  for (const auto& r : trace.records)
    alphas.push_back(alpha_k(space, r.beta));
  const std::size_t k_max = trace.records.size() - 1;
  out.envelope = envelope_series(alphas, rc.m1, rc.k5, smoothness_C, rc.rho_sq, 1.0, k_max);
  out.envelope_excess = envelope_excess(trace.gammas(), out.envelope.predicted_bound);
  return out;
}

// ---------------------------------------------------------------------------------------------
// Serialization

/// Per-k analysis table; empty cells where a column does not apply.
struct AnalysisTable
{
  std::vector<double> gamma;
  std::vector<std::optional<double>> bound;
  std::vector<std::optional<double>> slack;
  std::vector<std::optional<double>> eta;
  std::vector<std::optional<bool>> order_condition;
};

inline void write_analysis_csv(std::ostream& os, const AnalysisTable& t)
{
  os << "k,gamma,bound,slack,eta,cond_3_27\n";
  const auto cell = [](const auto& v, std::size_t k) -> std::string {
    if (k >= v.size() || !v[k])
      return {};
    return detail::fmt17(*v[k]);
  };
  for (std::size_t k = 0; k < t.gamma.size(); ++k) {
    os << k << ',' << detail::fmt17(t.gamma[k]) << ',' << cell(t.bound, k) << ','
       << cell(t.slack, k) << ',' << cell(t.eta, k) << ',';
    if (k < t.order_condition.size() && t.order_condition[k])
      os << (*t.order_condition[k] ? 1 : 0);
    os << '\n';
  }
}

/// Ordered key=value summary.
class Summary
{
public:
  void set(const std::string& key, const std::string& value)
  {
    for (auto& kv : entries_)
      if (kv.first == key) {
        kv.second = value;
        return;
      }
    entries_.emplace_back(key, value);
  }
  void set(const std::string& key, double value) { set(key, detail::fmt17(value)); }
  void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }
  void set(const std::string& key, std::size_t value) { set(key, std::to_string(value)); }

  const std::string* get(const std::string& key) const
  {
    for (const auto& kv : entries_)
      if (kv.first == key)
        return &kv.second;
    return nullptr;
  }
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  void write(std::ostream& os) const
  {
    for (const auto& [k, v] : entries_)
      os << k << '=' << v << '\n';
  }

private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

} // namespace irlw
