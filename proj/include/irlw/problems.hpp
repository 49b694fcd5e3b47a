#pragma once

/**
 * \file problems.hpp
 * \brief Forward maps F: U -> V with derivative, adjoint and declared constants, three concrete test
 *        problems and the sampling oracles that check them.
 *
 * The data space V is always unweighted l^2 carrying the primal gauge p, so j_p(w) = ||w||^(p-2) w
 * and the Riesz map of V is the identity on coefficients.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "irlw/constants.hpp"
#include "irlw/errors.hpp"
#include "irlw/geometry.hpp"
#include "irlw/regression.hpp"

namespace irlw {

/// Unweighted l^2 data space of dimension \p dimension carrying gauge \p p.
inline SpacePtr data_space(std::size_t dimension, double p)
{
  return SpaceGeometry::make(dimension, p, 2.0, {}, 1.0, 1.0);
}

/**
 * \brief Abstract forward problem.
 *
 * Concrete problems implement apply, apply_derivative and apply_adjoint and call finalize() once
 * their constants are known. Objects are immutable afterwards.
 */
class ForwardProblem
{
public:
  virtual ~ForwardProblem() = default;

  const SpacePtr& domain_space() const { return domain_; }
  const SpacePtr& range_space() const { return range_; }
  const ProblemConstants& constants() const { return constants_; }
  const std::optional<PrimalVector>& ground_truth() const { return truth_; }
  const PrimalVector& data() const { return *data_; }
  /// Norm radius around the ground truth inside which the declared constants hold.
  double domain_radius() const { return domain_radius_; }

  virtual std::string kind() const = 0;
  virtual PrimalVector apply(const PrimalVector& u) const = 0;
  virtual PrimalVector apply_derivative(const PrimalVector& u, const PrimalVector& h) const = 0;
  virtual DualVector apply_adjoint(const PrimalVector& u, const DualVector& w) const = 0;

  /// Point around which estimate_stability samples by default.
  virtual PrimalVector stability_center() const
  {
    return truth_ ? *truth_ : PrimalVector::zero(domain_);
  }

  /// Dense matrix of F'(u) in coordinates, range dimension x domain dimension.
  Eigen::MatrixXd jacobian(const PrimalVector& u) const
  {
    const auto n = Eigen::Index(domain_->dimension());
    Eigen::MatrixXd jac(Eigen::Index(range_->dimension()), n);
    for (Eigen::Index j = 0; j < n; ++j) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
      e[j] = 1.0;
      jac.col(j) = apply_derivative(u, PrimalVector(domain_, e)).coefficients();
    }
    return jac;
  }

protected:
  ForwardProblem(SpacePtr domain, SpacePtr range)
      : domain_(std::move(domain)), range_(std::move(range))
  {
  }

  void finalize(const ProblemConstants& constants, std::optional<PrimalVector> truth,
                double domain_radius)
  {
    constants.validate();
    constants_ = constants;
    domain_radius_ = domain_radius;
    truth_ = std::move(truth);
    if (truth_) {
      detail::require_same_space(truth_->space(), domain_);
      data_ = apply(*truth_);
    }
  }

  /// Data for problems without a ground truth.
  void set_data(PrimalVector data)
  {
    detail::require_same_space(data.space(), range_);
    data_ = std::move(data);
  }

  void require_domain(const PrimalVector& u) const { detail::require_same_space(u.space(), domain_); }
  void require_range(const SpacePtr& s) const { detail::require_same_space(s, range_); }

private:
  SpacePtr domain_;
  SpacePtr range_;
  ProblemConstants constants_{};
  std::optional<PrimalVector> truth_;
  std::optional<PrimalVector> data_;
  double domain_radius_{std::numeric_limits<double>::infinity()};
};

using ProblemPtr = std::shared_ptr<const ForwardProblem>;

/// Result of a log-log fit of the Hoelder stability inequality.
struct StabilitySample
{
  double misfit{0.0};   ///< ||F(u1) - F(u2)||
  double bregman{0.0};  ///< Delta_p(u1, u2)
  double distance{0.0}; ///< ||u1 - u2||
};

struct StabilityFit
{
  double fitted_cf{0.0};
  double fitted_eps{0.0};
  double regression_slope{0.0};
  double regression_intercept{0.0};
  double slope_stderr{0.0};
  std::size_t sample_count{0};
  double residual_rms{0.0};
  /// Smallest C_F making the inequality hold on every sample with the declared eps.
  double cf_at_declared_eps{0.0};
  std::vector<StabilitySample> samples;
};

/**
 * \brief Fit Delta_p^{u0}(c, c + t h) against ||F(c) - F(c + t h)|| in log-log coordinates.
 *
 * Step lengths t are log-uniform in [1e-4 R, R] for the ball radius R, directions h uniform on
 * the unit sphere; c is the problem's stability center unless given. The shift u0 defaults to 0.
 */
inline StabilityFit estimate_stability(const ForwardProblem& problem, std::size_t sample_count,
                                       std::uint64_t seed, double ball_radius,
                                       std::optional<PrimalVector> center = std::nullopt,
                                       std::optional<PrimalVector> u0 = std::nullopt)
{
  if (sample_count < 5)
    throw SamplingError("estimate_stability needs at least 5 samples");
  if (!(ball_radius > 0.0) || !std::isfinite(ball_radius))
    throw SamplingError("estimate_stability: ball radius must be positive and finite, got " +
                        std::to_string(ball_radius));
  const auto& U = problem.domain_space();
  const PrimalVector c = center ? *center : problem.stability_center();
  const PrimalVector shift = u0 ? *u0 : PrimalVector::zero(U);
  const double p = U->p();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double log_lo = std::log(ball_radius * 1e-4);
  const double log_hi = std::log(ball_radius);
  const PrimalVector fc = problem.apply(c);

  StabilityFit fit;
  std::vector<double> xs, ys;
  std::size_t degenerate = 0;
  for (std::size_t i = 0; i < sample_count; ++i) {
    const double t = std::exp(log_lo + (log_hi - log_lo) * unif(rng));
    const auto dir = unit_direction(U, rng);
    const PrimalVector u2 = c + t * dir;
    const double misfit = norm(problem.apply(u2) - fc);
    const double dist = shifted_bregman(c, u2, shift);
    if (!(misfit >= 1e-14)) {
      ++degenerate;
      continue;
    }
    if (!(dist > 0.0))
      continue;
    fit.samples.push_back({misfit, dist, norm(u2 - c)});
    xs.push_back(misfit);
    ys.push_back(dist);
  }
  if (degenerate == sample_count)
    throw SamplingError("estimate_stability: every sampled misfit is below 1e-14");
  SlopeFit reg;
  try {
    reg = convergence_slope(xs, ys);
  } catch (const PreconditionError& e) {
    throw SamplingError(std::string("estimate_stability: ") + e.what());
  }
  fit.sample_count = xs.size();
  fit.regression_slope = reg.slope;
  fit.regression_intercept = reg.intercept;
  fit.slope_stderr = reg.stderr_slope;
  fit.residual_rms = reg.residual_rms;
  fit.fitted_eps = 2.0 * reg.slope / p - 1.0;
  double max_offset = -std::numeric_limits<double>::infinity();
  double max_ratio = 0.0;
  const double declared_power = (1.0 + problem.constants().stability_eps) * p / 2.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    max_offset = std::max(max_offset, std::log(ys[i]) - reg.slope * std::log(xs[i]));
    max_ratio = std::max(max_ratio, ys[i] / std::pow(xs[i], declared_power));
  }
  fit.fitted_cf = std::exp(max_offset / p);
  fit.cf_at_declared_eps = std::pow(max_ratio, 1.0 / p);
  return fit;
}

// ---------------------------------------------------------------------------------------------
// Concrete problems

/// F(u)_i = s_i u_i.
class DiagonalLinearProblem final : public ForwardProblem
{
public:
  DiagonalLinearProblem(SpacePtr domain, std::vector<double> singular_values,
                        std::vector<double> truth, std::uint64_t seed = 11)
      : ForwardProblem(domain, data_space(domain->dimension(), domain->p()))
  {
    if (singular_values.size() != domain->dimension())
      throw DimensionError("expected " + std::to_string(domain->dimension()) +
                           " singular values, got " + std::to_string(singular_values.size()));
    for (double s : singular_values)
      if (!(s > 0.0) || !std::isfinite(s))
        throw DomainError("singular values must be positive and finite");
    s_ = Eigen::Map<const Eigen::VectorXd>(singular_values.data(),
                                           Eigen::Index(singular_values.size()));
    PrimalVector u_dag(domain, truth);
    const auto& w = domain->weights();

    ProblemConstants c;
    c.lipschitz_L = 0.0;
    c.stability_eps = 1.0;
    if (domain->is_hilbert()) {
      c.deriv_bound_Lhat = (s_.array() / w.array().sqrt()).maxCoeff();
      c.stability_CF = std::sqrt(0.5 * (w.array() / s_.array().square()).maxCoeff());
      finalize(c, u_dag, std::numeric_limits<double>::infinity());
      return;
    }
    if (!domain->unit_weights())
      throw DomainError("diagonal problem on a non-Hilbert space needs unit weights");
    const double n = double(domain->dimension());
    const double r = domain->r();
    c.deriv_bound_Lhat = s_.maxCoeff() * (r > 2.0 ? std::pow(n, 0.5 - 1.0 / r) : 1.0);
    c.stability_CF = 1.0;
    const double radius = 2.0 * norm(u_dag) + 1.0;
    finalize(c, u_dag, radius);
    // Empirical C_F on the ball around the truth, with a safety factor for unseen pairs.
    const auto sampled = estimate_stability(*this, 400, seed, radius);
    constants_override(1.25 * sampled.cf_at_declared_eps);
  }

  std::string kind() const override { return "diagonal_linear"; }
  const Eigen::VectorXd& singular_values() const { return s_; }

  PrimalVector apply(const PrimalVector& u) const override
  {
    require_domain(u);
    return PrimalVector(range_space(), Eigen::VectorXd(s_.cwiseProduct(u.coefficients())));
  }

  PrimalVector apply_derivative(const PrimalVector& u, const PrimalVector& h) const override
  {
    require_domain(u);
    require_domain(h);
    return PrimalVector(range_space(), Eigen::VectorXd(s_.cwiseProduct(h.coefficients())));
  }

  DualVector apply_adjoint(const PrimalVector& u, const DualVector& w) const override
  {
    require_domain(u);
    require_range(w.space());
    const auto& om = domain_space()->weights();
    return DualVector(domain_space(),
                      Eigen::VectorXd(s_.array() * w.coefficients().array() / om.array()));
  }

private:
  void constants_override(double cf)
  {
    auto c = constants();
    c.stability_CF = cf;
    finalize(c, ground_truth(), domain_radius());
  }

  Eigen::VectorXd s_;
};

/// Hoelder exponent of the monomial map |u|^(m-1) u in the p = 2 Bregman form.
inline double monomial_epsilon(double m) { return 2.0 / m - 1.0; }

/**
 * \brief F(u)_i = |u_i|^(m-1) u_i on a unit-weight Hilbert space, m in (1, 2].
 *
 * Constants are declared on the domain D = {||u - u_dag|| <= R} with R < a = min |u_dag_i|, where
 * every |u_i| lies in [a - R, A + R]:
 *   L    = m (m-1) (a-R)^(m-2),
 *   Lhat = m (A+R)^(m-1),
 *   C_F^2 = (2R)^(1-eps) / (2 (m (a-R)^(m-1))^(1+eps)).
 * The Hoelder exponent eps = 2/m - 1 is sharp at the origin, which is the stability center.
 */
class MonomialProblem final : public ForwardProblem
{
public:
  MonomialProblem(SpacePtr domain, double m, std::vector<double> truth, double domain_radius)
      : ForwardProblem(domain, data_space(domain->dimension(), domain->p())), m_(m)
  {
    if (!(m > 1.0 && m <= 2.0))
      throw DomainError("monomial exponent m must lie in (1, 2], got " + std::to_string(m));
    if (!domain->is_hilbert() || !domain->unit_weights())
      throw DomainError("monomial problem needs a unit-weight Hilbert space");
    PrimalVector u_dag(domain, truth);
    const double a = u_dag.coefficients().cwiseAbs().minCoeff();
    const double big_a = u_dag.coefficients().cwiseAbs().maxCoeff();
    if (!(domain_radius > 0.0) || !(domain_radius < a))
      throw DomainError("monomial domain radius must lie in (0, min |u_dag_i|) = (0, " +
                        std::to_string(a) + ")");
    const double R = domain_radius;
    const double eps = monomial_epsilon(m);
    const double lower = m * std::pow(a - R, m - 1.0);
    ProblemConstants c;
    c.stability_eps = eps;
    c.lipschitz_L = m * (m - 1.0) * std::pow(a - R, m - 2.0);
    c.deriv_bound_Lhat = m * std::pow(big_a + R, m - 1.0);
    c.stability_CF = std::sqrt(0.5 * std::pow(2.0 * R, 1.0 - eps) / std::pow(lower, 1.0 + eps));
    finalize(c, u_dag, R);
  }

  std::string kind() const override { return "monomial"; }
  double exponent() const { return m_; }

  PrimalVector stability_center() const override { return PrimalVector::zero(domain_space()); }

  PrimalVector apply(const PrimalVector& u) const override
  {
    require_domain(u);
    const auto& c = u.coefficients();
    Eigen::VectorXd out(c.size());
    for (Eigen::Index i = 0; i < c.size(); ++i)
      out[i] = std::pow(std::abs(c[i]), m_ - 1.0) * c[i];
    return PrimalVector(range_space(), out);
  }

  PrimalVector apply_derivative(const PrimalVector& u, const PrimalVector& h) const override
  {
    require_domain(u);
    require_domain(h);
    return PrimalVector(range_space(), Eigen::VectorXd(slope(u).cwiseProduct(h.coefficients())));
  }

  DualVector apply_adjoint(const PrimalVector& u, const DualVector& w) const override
  {
    require_domain(u);
    require_range(w.space());
    return DualVector(domain_space(), Eigen::VectorXd(slope(u).cwiseProduct(w.coefficients())));
  }

private:
  Eigen::VectorXd slope(const PrimalVector& u) const
  {
    const auto& c = u.coefficients();
    Eigen::VectorXd d(c.size());
    for (Eigen::Index i = 0; i < c.size(); ++i)
      d[i] = m_ * std::pow(std::abs(c[i]), m_ - 1.0);
    return d;
  }

  double m_;
};

// ---------------------------------------------------------------------------------------------
// Resistor network

using Edge = std::pair<std::size_t, std::size_t>;

namespace detail {

// Nodes 0..nb-1 are boundary nodes, nb..nb+ni-1 interior nodes.
inline void validate_graph(std::size_t nb, std::size_t ni, const std::vector<Edge>& edges)
{
  const std::size_t n = nb + ni;
  if (nb < 2)
    throw StructuralError("network needs at least 2 boundary nodes");
  if (edges.empty())
    throw StructuralError("network has no edges");
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [a, b] = edges[e];
    if (a >= n || b >= n)
      throw StructuralError("edge " + std::to_string(e) + " references node outside 0.." +
                            std::to_string(n - 1));
    if (a == b)
      throw StructuralError("edge " + std::to_string(e) + " is a self-loop");
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    for (auto w : adj[v])
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        stack.push_back(w);
      }
  }
  if (count != n)
    throw StructuralError("network graph is disconnected (" + std::to_string(count) + " of " +
                          std::to_string(n) + " nodes reachable)");
}

inline Eigen::MatrixXd laplacian(std::size_t n, const std::vector<Edge>& edges,
                                 const Eigen::VectorXd& sigma)
{
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto a = Eigen::Index(edges[e].first);
    const auto b = Eigen::Index(edges[e].second);
    const double s = sigma[Eigen::Index(e)];
    lap(a, a) += s;
    lap(b, b) += s;
    lap(a, b) -= s;
    lap(b, a) -= s;
  }
  return lap;
}

// DtN matrix and the boundary-to-node harmonic extension P (n x nb).
struct SchurParts
{
  Eigen::MatrixXd dtn;
  Eigen::MatrixXd extension;
};

inline SchurParts schur_parts(std::size_t nb, std::size_t ni, const std::vector<Edge>& edges,
                              const Eigen::VectorXd& sigma)
{
  const auto B = Eigen::Index(nb);
  const auto I = Eigen::Index(ni);
  const Eigen::MatrixXd lap = laplacian(nb + ni, edges, sigma);
  SchurParts out;
  out.extension = Eigen::MatrixXd::Zero(B + I, B);
  out.extension.topRows(B).setIdentity();
  if (I == 0) {
    out.dtn = lap;
  } else {
    const Eigen::MatrixXd lii = lap.bottomRightCorner(I, I);
    const Eigen::MatrixXd lib = lap.bottomLeftCorner(I, B);
    const Eigen::MatrixXd x = lii.ldlt().solve(lib);
    out.dtn = lap.topLeftCorner(B, B) - lap.topRightCorner(B, I) * x;
    out.extension.bottomRows(I) = -x;
  }
  out.dtn = 0.5 * (out.dtn + out.dtn.transpose()).eval();
  return out;
}

inline Eigen::VectorXd flatten_row_major(const Eigen::MatrixXd& m)
{
  Eigen::VectorXd v(m.size());
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      v[k++] = m(i, j);
  return v;
}

} // namespace detail

/// Boundary DtN matrix of a resistor network (Schur complement of the weighted graph Laplacian).
inline Eigen::MatrixXd dirichlet_to_neumann(std::size_t boundary_nodes, std::size_t interior_nodes,
                                            const std::vector<Edge>& edges,
                                            const std::vector<double>& sigma)
{
  detail::validate_graph(boundary_nodes, interior_nodes, edges);
  if (sigma.size() != edges.size())
    throw DimensionError("expected one conductance per edge");
  for (double s : sigma)
    if (!(s > 0.0) || !std::isfinite(s))
      throw DomainError("conductances must be positive and finite");
  const Eigen::Map<const Eigen::VectorXd> sg(sigma.data(), Eigen::Index(sigma.size()));
  return detail::schur_parts(boundary_nodes, interior_nodes, edges, sg).dtn;
}

/// Input of make_resistor_network.
struct NetworkSpec
{
  std::size_t boundary_nodes{2};
  std::size_t interior_nodes{0};
  std::vector<Edge> edges;
  std::vector<double> sigma_truth;
  double domain_radius{0.1};
  std::vector<double> weights; ///< per-edge weights of U; empty means unit
  std::size_t constant_samples{200};
  std::uint64_t seed{7};
};

/**
 * \brief Edge conductances -> boundary DtN matrix flattened row-major into V.
 *
 * F'(sigma) dsigma = sum_e dsigma_e c_e c_e^T with c_e = P_a - P_b the difference of the harmonic
 * extension rows at the edge ends. L, Lhat and C_F (eps = 1) are sampled on the domain ball
 * around the truth and inflated by safety factors.
 */
class ResistorNetworkProblem final : public ForwardProblem
{
public:
  explicit ResistorNetworkProblem(const NetworkSpec& spec)
      : ForwardProblem(SpaceGeometry::hilbert(spec.edges.size(), spec.weights),
                       data_space(spec.boundary_nodes * spec.boundary_nodes, 2.0)),
        nb_(spec.boundary_nodes), ni_(spec.interior_nodes), edges_(spec.edges)
  {
    detail::validate_graph(nb_, ni_, edges_);
    if (spec.sigma_truth.size() != edges_.size())
      throw DimensionError("expected " + std::to_string(edges_.size()) + " conductances, got " +
                           std::to_string(spec.sigma_truth.size()));
    for (double s : spec.sigma_truth)
      if (!(s > 0.0) || !std::isfinite(s))
        throw DomainError("conductances must be positive and finite");
    PrimalVector truth(domain_space(), spec.sigma_truth);
    const double smin = truth.coefficients().minCoeff();
    const double R = spec.domain_radius;
    // |sigma_e - truth_e| <= R / sqrt(w_e) on the ball, so this keeps every conductance positive.
    const double wmin = domain_space()->weights().minCoeff();
    if (!(R > 0.0) || !(R / std::sqrt(wmin) < smin))
      throw DomainError("network domain radius must be positive and keep conductances positive");

    finalize(ProblemConstants{}, truth, R);
    finalize(sample_constants(spec.constant_samples, spec.seed), truth, R);
  }

  std::string kind() const override { return "resistor_network"; }
  std::size_t boundary_nodes() const { return nb_; }
  std::size_t interior_nodes() const { return ni_; }
  const std::vector<Edge>& edges() const { return edges_; }

  Eigen::MatrixXd dtn(const PrimalVector& sigma) const
  {
    require_domain(sigma);
    return detail::schur_parts(nb_, ni_, edges_, sigma.coefficients()).dtn;
  }

  PrimalVector apply(const PrimalVector& sigma) const override
  {
    return PrimalVector(range_space(), detail::flatten_row_major(dtn(sigma)));
  }

  PrimalVector apply_derivative(const PrimalVector& sigma, const PrimalVector& h) const override
  {
    require_domain(sigma);
    require_domain(h);
    const auto c = edge_vectors(sigma);
    const auto B = Eigen::Index(nb_);
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(B, B);
    for (Eigen::Index e = 0; e < c.cols(); ++e)
      d.noalias() += h.coefficients()[e] * c.col(e) * c.col(e).transpose();
    return PrimalVector(range_space(), detail::flatten_row_major(d));
  }

  DualVector apply_adjoint(const PrimalVector& sigma, const DualVector& w) const override
  {
    require_domain(sigma);
    require_range(w.space());
    const auto c = edge_vectors(sigma);
    const auto B = Eigen::Index(nb_);
    Eigen::MatrixXd wm(B, B);
    for (Eigen::Index i = 0; i < B; ++i)
      for (Eigen::Index j = 0; j < B; ++j)
        wm(i, j) = w.coefficients()[i * B + j];
    const auto& om = domain_space()->weights();
    Eigen::VectorXd out(c.cols());
    for (Eigen::Index e = 0; e < c.cols(); ++e)
      out[e] = c.col(e).dot(wm * c.col(e)) / om[e];
    return DualVector(domain_space(), out);
  }

private:
  // Columns c_e = P_a - P_b restricted to the boundary coordinates.
  Eigen::MatrixXd edge_vectors(const PrimalVector& sigma) const
  {
    const auto parts = detail::schur_parts(nb_, ni_, edges_, sigma.coefficients());
    Eigen::MatrixXd c(Eigen::Index(nb_), Eigen::Index(edges_.size()));
    for (std::size_t e = 0; e < edges_.size(); ++e)
      c.col(Eigen::Index(e)) = (parts.extension.row(Eigen::Index(edges_[e].first)) -
                                parts.extension.row(Eigen::Index(edges_[e].second)))
                                   .transpose();
    return c;
  }

  ProblemConstants sample_constants(std::size_t samples, std::uint64_t seed) const
  {
    const auto& truth = *ground_truth();
    const double R = domain_radius();
    const Eigen::VectorXd isw = domain_space()->weights().array().rsqrt();
    std::mt19937_64 rng(seed);
    const auto scaled = [&](const PrimalVector& s) {
      return Eigen::MatrixXd(jacobian(s) * isw.asDiagonal());
    };

    double lhat = 0.0, lip = 0.0, cf_sq = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
      const auto s1 = sample_norm_ball(truth, R, rng);
      const auto s2 = sample_norm_ball(truth, R, rng);
      const Eigen::MatrixXd j1 = scaled(s1);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(j1);
      const auto& sv = svd.singularValues();
      lhat = std::max(lhat, sv[0]);
      const double smin = sv[sv.size() - 1];
      if (!(smin > 0.0))
        throw StructuralError("network conductances are not identifiable from the DtN map "
                              "(rank-deficient derivative)");
      cf_sq = std::max(cf_sq, 0.5 / (smin * smin));
      const double dist = norm(s1 - s2);
      if (dist > 0.0) {
        const Eigen::MatrixXd diff = j1 - scaled(s2);
        lip = std::max(lip, Eigen::JacobiSVD<Eigen::MatrixXd>(diff).singularValues()[0] / dist);
        const double misfit = norm(apply(s1) - apply(s2));
        cf_sq = std::max(cf_sq, bregman(s1, s2) / (misfit * misfit));
      }
    }
    ProblemConstants c;
    c.stability_eps = 1.0;
    c.deriv_bound_Lhat = 1.1 * lhat;
    c.lipschitz_L = 1.25 * lip;
    c.stability_CF = 1.25 * std::sqrt(cf_sq);
    return c;
  }

  std::size_t nb_;
  std::size_t ni_;
  std::vector<Edge> edges_;
};

// ---------------------------------------------------------------------------------------------
// Factories

inline ProblemPtr make_diagonal_linear(SpacePtr domain, std::vector<double> singular_values,
                                       std::vector<double> truth, std::uint64_t seed = 11)
{
  return std::make_shared<const DiagonalLinearProblem>(std::move(domain),
                                                       std::move(singular_values),
                                                       std::move(truth), seed);
}

inline ProblemPtr make_monomial(SpacePtr domain, double m, std::vector<double> truth,
                                double domain_radius)
{
  return std::make_shared<const MonomialProblem>(std::move(domain), m, std::move(truth),
                                                 domain_radius);
}

inline ProblemPtr make_resistor_network(const NetworkSpec& spec)
{
  return std::make_shared<const ResistorNetworkProblem>(spec);
}

// ---------------------------------------------------------------------------------------------
// Oracles

struct FiniteDifferenceResult
{
  double max_relative_error{0.0};
  std::size_t tested{0};
  std::size_t skipped{0}; ///< directions with F'(u) h = 0
};

/// Central-difference check of F'(u) h over random unit directions.
inline FiniteDifferenceResult finite_difference_check(const ForwardProblem& problem,
                                                      const PrimalVector& u,
                                                      std::size_t directions, double step,
                                                      std::uint64_t seed)
{
  if (!(step > 0.0))
    throw DomainError("finite-difference step must be positive");
  std::mt19937_64 rng(seed);
  FiniteDifferenceResult res;
  for (std::size_t i = 0; i < directions; ++i) {
    const auto h = unit_direction(problem.domain_space(), rng);
    const auto exact = problem.apply_derivative(u, h);
    const double scale = norm(exact);
    if (!(scale > 0.0)) {
      ++res.skipped;
      continue;
    }
    const auto fd =
        (1.0 / (2.0 * step)) * (problem.apply(u + step * h) - problem.apply(u - step * h));
    res.max_relative_error = std::max(res.max_relative_error, norm(fd - exact) / scale);
    ++res.tested;
  }
  return res;
}

/// |<F'(u)h, w> - <h, F'(u)* w>| relative to max(|<h, F'(u)* w>|, ||F'(u)h|| ||w||_*).
inline double adjoint_error(const ForwardProblem& problem, const PrimalVector& u,
                            const PrimalVector& h, const DualVector& w)
{
  const auto fh = problem.apply_derivative(u, h);
  const double lhs = pairing(fh, w);
  const double rhs = pairing(h, problem.apply_adjoint(u, w));
  const double scale = std::max(std::abs(rhs), norm(fh) * dual_norm(w));
  if (scale == 0.0)
    return std::abs(lhs - rhs);
  return std::abs(lhs - rhs) / scale;
}

/// Max adjoint_error over random triples: u from the norm ball of the given radius around the
/// truth, h a unit direction, w standard normal.
inline double adjoint_check(const ForwardProblem& problem, std::size_t triples, double radius,
                            std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  const auto& U = problem.domain_space();
  const auto& V = problem.range_space();
  const PrimalVector center =
      problem.ground_truth() ? *problem.ground_truth() : PrimalVector::zero(U);
  double worst = 0.0;
  for (std::size_t i = 0; i < triples; ++i) {
    const auto u = sample_norm_ball(center, radius, rng);
    const auto h = unit_direction(U, rng);
    const DualVector w(V, gaussian_coefficients(V->dimension(), rng));
    worst = std::max(worst, adjoint_error(problem, u, h, w));
  }
  return worst;
}

namespace detail {

// Largest singular value of a linear map between weighted l^2 spaces given its action and adjoint.
template <class Forward, class Adjoint>
double power_iteration(const SpacePtr& U, const SpacePtr& V, Forward&& fwd, Adjoint&& adj,
                       std::size_t iterations, std::uint64_t seed)
{
  if (U->r() != 2.0 || V->r() != 2.0)
    throw DomainError("operator norm by power iteration needs l^2 norms on both spaces");
  std::mt19937_64 rng(seed);
  PrimalVector h = unit_direction(U, rng);
  double estimate = 0.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    const PrimalVector ah = fwd(h);
    estimate = norm(ah);
    const DualVector g = adj(DualVector(V, ah.coefficients()));
    // Riesz map of weighted l^2 is the identity on coefficients.
    PrimalVector next(U, g.coefficients());
    const double n = norm(next);
    if (!(n > 0.0))
      return estimate;
    h = (1.0 / n) * next;
  }
  return std::max(estimate, norm(fwd(h)));
}

} // namespace detail

/// ||F'(u)|| by power iteration on F'(u)* F'(u).
inline double derivative_norm(const ForwardProblem& problem, const PrimalVector& u,
                              std::size_t iterations = 200, std::uint64_t seed = 3)
{
  return detail::power_iteration(
      problem.domain_space(), problem.range_space(),
      [&](const PrimalVector& h) { return problem.apply_derivative(u, h); },
      [&](const DualVector& w) { return problem.apply_adjoint(u, w); }, iterations, seed);
}

/// ||F'(u1) - F'(u2)|| by power iteration on the difference map.
inline double derivative_difference_norm(const ForwardProblem& problem, const PrimalVector& u1,
                                         const PrimalVector& u2, std::size_t iterations = 200,
                                         std::uint64_t seed = 3)
{
  return detail::power_iteration(
      problem.domain_space(), problem.range_space(),
      [&](const PrimalVector& h) {
        return problem.apply_derivative(u1, h) - problem.apply_derivative(u2, h);
      },
      [&](const DualVector& w) { return problem.apply_adjoint(u1, w) - problem.apply_adjoint(u2, w); },
      iterations, seed);
}

} // namespace irlw
