#pragma once

/**
 * \file geometry.hpp
 * \brief Weighted finite-dimensional l^r spaces: norms, duality mappings and Bregman distances.
 *
 * A space U is R^n with the norm (sum_i w_i |u_i|^r)^(1/r). Its dual U* is identified with R^n
 * under the pairing <u, w> = sum_i w_i u_i w_i, which makes U* the weighted l^s space with
 * 1/r + 1/s = 1. The duality mapping J_p uses the gauge t -> t^(p-1); its inverse is the
 * duality mapping of U* with gauge t -> t^(q-1), 1/p + 1/q = 1.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "irlw/errors.hpp"

namespace irlw {

class SpaceGeometry;
using SpacePtr = std::shared_ptr<const SpaceGeometry>;

/// Empirical convexity (C_p) and smoothness (G_q) constants.
struct ConvexityEstimate
{
  double c_p{0.0};
  double g_q{0.0};
};

ConvexityEstimate estimate_convexity_constants(const SpaceGeometry& space, std::size_t sample_count,
                                               std::uint64_t seed);

/**
 * \brief Exponents, quadrature weights and the two-sided Bregman constants of a weighted l^r space.
 *
 * Immutable after construction. The conjugate exponents q and s are always derived from p and r.
 */
class SpaceGeometry
{
public:
  /// Hilbert space (p = r = 2); C_p = G_q = 1 exactly.
  static SpacePtr hilbert(std::size_t dimension, std::vector<double> weights = {})
  {
    return make(dimension, 2.0, 2.0, std::move(weights), 1.0, 1.0);
  }

  /// General space with explicitly declared constants.
  static SpacePtr make(std::size_t dimension, double p, double r, std::vector<double> weights,
                       double c_p, double g_q)
  {
    return std::shared_ptr<const SpaceGeometry>(
        new SpaceGeometry(dimension, p, r, std::move(weights), c_p, g_q));
  }

  /// General space whose constants come from estimate_convexity_constants.
  static SpacePtr with_estimated_constants(std::size_t dimension, double p, double r,
                                           std::vector<double> weights, std::size_t sample_count,
                                           std::uint64_t seed)
  {
    const SpaceGeometry provisional(dimension, p, r, weights, 1.0, 1.0);
    const auto est = estimate_convexity_constants(provisional, sample_count, seed);
    return make(dimension, p, r, std::move(weights), est.c_p, est.g_q);
  }

  std::size_t dimension() const { return dimension_; }
  double p() const { return p_; }
  double q() const { return q_; }
  double r() const { return r_; }
  /// Exponent of the dual norm.
  double s() const { return s_; }
  double c_p() const { return c_p_; }
  double g_q() const { return g_q_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  bool unit_weights() const { return unit_weights_; }
  bool is_hilbert() const { return p_ == 2.0 && r_ == 2.0; }

  /// Same exponents, weights and constants.
  bool operator==(const SpaceGeometry& other) const
  {
    return dimension_ == other.dimension_ && p_ == other.p_ && r_ == other.r_ &&
           c_p_ == other.c_p_ && g_q_ == other.g_q_ && weights_ == other.weights_;
  }

private:
  SpaceGeometry(std::size_t dimension, double p, double r, std::vector<double> weights, double c_p,
                double g_q)
      : dimension_(dimension), p_(p), q_(p / (p - 1.0)), r_(r), s_(r / (r - 1.0)), c_p_(c_p),
        g_q_(g_q)
  {
    if (dimension == 0)
      throw DomainError("space dimension must be at least 1");
    if (!(p > 1.0) || !std::isfinite(p))
      throw DomainError("gauge exponent p must be > 1, got " + std::to_string(p));
    if (!(r > 1.0) || !std::isfinite(r))
      throw DomainError("norm exponent r must be > 1, got " + std::to_string(r));
    if (!(c_p > 0.0) || !(g_q > 0.0) || !std::isfinite(c_p) || !std::isfinite(g_q))
      throw DomainError("convexity constants c_p and g_q must be positive and finite");
    if (weights.empty())
      weights.assign(dimension, 1.0);
    if (weights.size() != dimension)
      throw DimensionError("expected " + std::to_string(dimension) + " weights, got " +
                           std::to_string(weights.size()));
    weights_ = Eigen::Map<const Eigen::VectorXd>(weights.data(), Eigen::Index(weights.size()));
    for (double w : weights)
      if (!(w > 0.0) || !std::isfinite(w))
        throw DomainError("space weights must be strictly positive and finite");
    unit_weights_ = (weights_.array() == 1.0).all();
  }

  std::size_t dimension_;
  double p_, q_, r_, s_;
  double c_p_, g_q_;
  Eigen::VectorXd weights_;
  bool unit_weights_{true};
};

namespace detail {

inline void require_same_space(const SpacePtr& a, const SpacePtr& b)
{
  if (a == b)
    return;
  if (!a || !b || !(*a == *b))
    throw DimensionError("vectors belong to different spaces");
}

inline void require_finite_length(const Eigen::VectorXd& c, const SpacePtr& space)
{
  if (!space)
    throw DimensionError("vector without a space");
  if (std::size_t(c.size()) != space->dimension())
    throw DimensionError("vector length " + std::to_string(c.size()) +
                         " does not match space dimension " + std::to_string(space->dimension()));
  if (!c.allFinite())
    throw DomainError("vector has non-finite entries");
}

// (sum_i w_i |c_i|^e)^(1/e), scaled by max |c_i| when e != 2.
inline double weighted_norm(const Eigen::VectorXd& c, const Eigen::VectorXd& w, double e)
{
  if (e == 2.0)
    return std::sqrt((w.array() * c.array().square()).sum());
  const double m = c.cwiseAbs().maxCoeff();
  if (m == 0.0)
    return 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i)
    acc += w[i] * std::pow(std::abs(c[i]) / m, e);
  return m * std::pow(acc, 1.0 / e);
}

// c -> norm^(gauge - e) * sign(c_i) |c_i|^(e - 1); zero maps to zero in every regime.
inline Eigen::VectorXd gauge_map(const Eigen::VectorXd& c, const Eigen::VectorXd& w, double e,
                                 double gauge)
{
  const double nrm = weighted_norm(c, w, e);
  if (nrm == 0.0)
    return Eigen::VectorXd::Zero(c.size());
  if (e == 2.0 && gauge == 2.0)
    return c;
  Eigen::VectorXd out(c.size());
  if (e == 2.0) {
    out = std::pow(nrm, gauge - e) * c;
    return out;
  }
  const double factor = std::pow(nrm, gauge - e);
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const double a = std::abs(c[i]);
    out[i] = a == 0.0 ? 0.0 : factor * std::copysign(std::pow(a, e - 1.0), c[i]);
  }
  return out;
}

} // namespace detail

/// Element of U; coefficients are the nodal values.
class PrimalVector
{
public:
  PrimalVector(SpacePtr space, Eigen::VectorXd coefficients)
      : space_(std::move(space)), c_(std::move(coefficients))
  {
    detail::require_finite_length(c_, space_);
  }

  PrimalVector(SpacePtr space, const std::vector<double>& coefficients)
      : PrimalVector(std::move(space), Eigen::Map<const Eigen::VectorXd>(
                                           coefficients.data(), Eigen::Index(coefficients.size())))
  {
  }

  PrimalVector(SpacePtr space, std::initializer_list<double> coefficients)
      : PrimalVector(std::move(space), std::vector<double>(coefficients))
  {
  }

  static PrimalVector zero(const SpacePtr& space)
  {
    return PrimalVector(space, Eigen::VectorXd::Zero(Eigen::Index(space->dimension())));
  }

  const SpacePtr& space() const { return space_; }
  const Eigen::VectorXd& coefficients() const { return c_; }
  std::size_t size() const { return std::size_t(c_.size()); }
  double operator[](std::size_t i) const { return c_[Eigen::Index(i)]; }

  friend PrimalVector operator+(const PrimalVector& a, const PrimalVector& b)
  {
    detail::require_same_space(a.space_, b.space_);
    return PrimalVector(a.space_, a.c_ + b.c_);
  }
  friend PrimalVector operator-(const PrimalVector& a, const PrimalVector& b)
  {
    detail::require_same_space(a.space_, b.space_);
    return PrimalVector(a.space_, a.c_ - b.c_);
  }
  friend PrimalVector operator*(double s, const PrimalVector& a)
  {
    return PrimalVector(a.space_, s * a.c_);
  }

private:
  SpacePtr space_;
  Eigen::VectorXd c_;
};

/// Element of U*, tagged with the predual space U.
class DualVector
{
public:
  DualVector(SpacePtr space, Eigen::VectorXd coefficients)
      : space_(std::move(space)), c_(std::move(coefficients))
  {
    detail::require_finite_length(c_, space_);
  }

  DualVector(SpacePtr space, const std::vector<double>& coefficients)
      : DualVector(std::move(space), Eigen::Map<const Eigen::VectorXd>(
                                         coefficients.data(), Eigen::Index(coefficients.size())))
  {
  }

  DualVector(SpacePtr space, std::initializer_list<double> coefficients)
      : DualVector(std::move(space), std::vector<double>(coefficients))
  {
  }

  static DualVector zero(const SpacePtr& space)
  {
    return DualVector(space, Eigen::VectorXd::Zero(Eigen::Index(space->dimension())));
  }

  const SpacePtr& space() const { return space_; }
  const Eigen::VectorXd& coefficients() const { return c_; }
  std::size_t size() const { return std::size_t(c_.size()); }
  double operator[](std::size_t i) const { return c_[Eigen::Index(i)]; }

  friend DualVector operator+(const DualVector& a, const DualVector& b)
  {
    detail::require_same_space(a.space_, b.space_);
    return DualVector(a.space_, a.c_ + b.c_);
  }
  friend DualVector operator-(const DualVector& a, const DualVector& b)
  {
    detail::require_same_space(a.space_, b.space_);
    return DualVector(a.space_, a.c_ - b.c_);
  }
  friend DualVector operator*(double s, const DualVector& a)
  {
    return DualVector(a.space_, s * a.c_);
  }

private:
  SpacePtr space_;
  Eigen::VectorXd c_;
};

inline double norm(const PrimalVector& u)
{
  return detail::weighted_norm(u.coefficients(), u.space()->weights(), u.space()->r());
}

inline double dual_norm(const DualVector& w)
{
  return detail::weighted_norm(w.coefficients(), w.space()->weights(), w.space()->s());
}

/// <u, w> = sum_i w_i u_i w_i.
inline double pairing(const PrimalVector& u, const DualVector& w)
{
  detail::require_same_space(u.space(), w.space());
  return (u.space()->weights().array() * u.coefficients().array() * w.coefficients().array()).sum();
}

/// J_p(u)_i = ||u||^(p-r) |u_i|^(r-2) u_i, with J_p(0) = 0 for every exponent pair.
inline DualVector duality_map(const PrimalVector& u)
{
  const auto& sp = *u.space();
  return DualVector(u.space(), detail::gauge_map(u.coefficients(), sp.weights(), sp.r(), sp.p()));
}

/// J_q^*(w)_i = ||w||_*^(q-s) |w_i|^(s-2) w_i; the inverse of duality_map.
inline PrimalVector inverse_duality_map(const DualVector& w)
{
  const auto& sp = *w.space();
  return PrimalVector(w.space(), detail::gauge_map(w.coefficients(), sp.weights(), sp.s(), sp.q()));
}

/// Delta_p(u1, u2) = ||u1||^p / p - ||u2||^p / p - <J_p(u2), u1 - u2>, clamped at zero.
inline double bregman(const PrimalVector& u1, const PrimalVector& u2)
{
  detail::require_same_space(u1.space(), u2.space());
  const auto& sp = *u1.space();
  if (sp.is_hilbert()) {
    const Eigen::VectorXd d = u1.coefficients() - u2.coefficients();
    return 0.5 * (sp.weights().array() * d.array().square()).sum();
  }
  const double p = sp.p();
  const double value = std::pow(norm(u1), p) / p - std::pow(norm(u2), p) / p -
                       pairing(u1 - u2, duality_map(u2));
  return std::max(0.0, value);
}

/// Bregman distance of w -> ||w||_*^q / q on the dual space.
inline double dual_bregman(const DualVector& w1, const DualVector& w2)
{
  detail::require_same_space(w1.space(), w2.space());
  const auto& sp = *w1.space();
  if (sp.is_hilbert()) {
    const Eigen::VectorXd d = w1.coefficients() - w2.coefficients();
    return 0.5 * (sp.weights().array() * d.array().square()).sum();
  }
  const double q = sp.q();
  const double value = std::pow(dual_norm(w1), q) / q - std::pow(dual_norm(w2), q) / q -
                       pairing(inverse_duality_map(w2), w1 - w2);
  return std::max(0.0, value);
}

/// Delta_p^{u0}(u_dag, u) = Delta_p(u_dag - u0, u - u0).
inline double shifted_bregman(const PrimalVector& u_dag, const PrimalVector& u,
                              const PrimalVector& u0)
{
  return bregman(u_dag - u0, u - u0);
}

// ---------------------------------------------------------------------------------------------
// Sampling helpers shared by the estimators and oracles.

/// Standard normal coefficients.
template <class Rng>
Eigen::VectorXd gaussian_coefficients(std::size_t n, Rng& rng)
{
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd c(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < c.size(); ++i)
    c[i] = normal(rng);
  return c;
}

/// Gaussian direction rescaled to unit norm in the space.
template <class Rng>
PrimalVector unit_direction(const SpacePtr& space, Rng& rng)
{
  for (;;) {
    Eigen::VectorXd c = gaussian_coefficients(space->dimension(), rng);
    const double n = detail::weighted_norm(c, space->weights(), space->r());
    if (n > 0.0)
      return PrimalVector(space, c / n);
  }
}

/// Random point of the norm ball {||u - center|| <= radius}, radius law R * U^(1/n).
template <class Rng>
PrimalVector sample_norm_ball(const PrimalVector& center, double radius, Rng& rng)
{
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto dir = unit_direction(center.space(), rng);
  const double t =
      radius * std::pow(unif(rng), 1.0 / double(center.space()->dimension()));
  return center + t * dir;
}

/**
 * \brief Random point of B = {u : Delta_p^{u0}(u_dag, u) <= rho_sq}.
 *
 * Rejection from the norm ball of radius (p rho_sq / C_p)^(1/p), which contains B whenever the
 * declared C_p satisfies the lower Bregman bound.
 */
template <class Rng>
PrimalVector sample_bregman_ball(const PrimalVector& u_dag, const PrimalVector& u0, double rho_sq,
                                 Rng& rng, std::size_t max_tries = 10000)
{
  const auto& sp = *u_dag.space();
  const double radius = std::pow(sp.p() * rho_sq / sp.c_p(), 1.0 / sp.p());
  for (std::size_t i = 0; i < max_tries; ++i) {
    auto u = sample_norm_ball(u_dag, radius, rng);
    if (shifted_bregman(u_dag, u, u0) <= rho_sq)
      return u;
  }
  throw SamplingError("rejection sampling of the Bregman ball failed after " +
                      std::to_string(max_tries) + " draws");
}

/**
 * \brief Empirical C_p and G_q from random pairs.
 *
 * C_p is the infimum of p Delta_p(u1,u2) / ||u1-u2||^p over primal pairs, G_q the supremum of
 * q Delta_q(w1,w2) / ||w1-w2||_*^q over dual pairs. Pairs mix scales through a log-normal
 * amplitude. Both bounds hold on every drawn pair by construction.
 */
inline ConvexityEstimate estimate_convexity_constants(const SpaceGeometry& space,
                                                      std::size_t sample_count, std::uint64_t seed)
{
  if (sample_count == 0)
    throw SamplingError("estimate_convexity_constants needs at least one sample");
  // Non-owning handle so vectors can refer to a stack geometry.
  const SpacePtr sp(std::shared_ptr<const SpaceGeometry>(), &space);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto amplitude = [&] { return std::exp(1.5 * normal(rng)); };
  const double p = space.p();
  const double q = space.q();

  double c_inf = std::numeric_limits<double>::infinity();
  double g_sup = 0.0;
  for (std::size_t i = 0; i < sample_count; ++i) {
    const PrimalVector u1(sp, amplitude() * gaussian_coefficients(space.dimension(), rng));
    const PrimalVector u2(sp, amplitude() * gaussian_coefficients(space.dimension(), rng));
    const double du = norm(u1 - u2);
    if (du > 0.0)
      c_inf = std::min(c_inf, p * bregman(u1, u2) / std::pow(du, p));

    const DualVector w1(sp, amplitude() * gaussian_coefficients(space.dimension(), rng));
    const DualVector w2(sp, amplitude() * gaussian_coefficients(space.dimension(), rng));
    const double dw = dual_norm(w1 - w2);
    if (dw > 0.0)
      g_sup = std::max(g_sup, q * dual_bregman(w1, w2) / std::pow(dw, q));
  }
  if (!std::isfinite(c_inf) || !(c_inf > 0.0) || !(g_sup > 0.0) || !std::isfinite(g_sup))
    throw SamplingError("convexity estimate degenerate (no usable pairs)");
  return {c_inf, g_sup};
}

} // namespace irlw
