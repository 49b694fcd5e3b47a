#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "irlw/problems.hpp"

using namespace irlw;

namespace {

ProblemPtr star_network()
{
  NetworkSpec spec;
  spec.boundary_nodes = 3;
  spec.interior_nodes = 1;
  spec.edges = {{0, 3}, {1, 3}, {2, 3}};
  spec.sigma_truth = {1.0, 1.5, 2.0};
  spec.domain_radius = 0.3;
  return make_resistor_network(spec);
}

ProblemPtr shipped_diag()
{
  return make_diagonal_linear(SpaceGeometry::hilbert(5, {1, 1, 0.5, 0.5, 0.25}),
                              {1.0, 0.8, 0.6, 0.5, 0.4}, {0.5, -0.3, 0.2, 0.4, -0.1});
}

ProblemPtr monomial(double m)
{
  return make_monomial(SpaceGeometry::hilbert(4), m, {1, 1, 1, 1}, 0.25);
}

// Dense Schur complement through an explicit inverse, independent of the library's LDLT path.
Eigen::MatrixXd dtn_oracle(std::size_t nb, std::size_t ni, const std::vector<Edge>& edges,
                           const std::vector<double>& sigma)
{
  const auto n = Eigen::Index(nb + ni);
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto a = Eigen::Index(edges[e].first), b = Eigen::Index(edges[e].second);
    lap(a, a) += sigma[e];
    lap(b, b) += sigma[e];
    lap(a, b) -= sigma[e];
    lap(b, a) -= sigma[e];
  }
  const auto B = Eigen::Index(nb), I = Eigen::Index(ni);
  if (I == 0)
    return lap;
  return lap.topLeftCorner(B, B) -
         lap.topRightCorner(B, I) * lap.bottomRightCorner(I, I).inverse() *
             lap.bottomLeftCorner(I, B);
}

// Random connected graph: spanning tree plus extra edges, every node count at most 12.
struct RandomGraph
{
  std::size_t nb, ni;
  std::vector<Edge> edges;
  std::vector<double> sigma;
};

RandomGraph random_graph(std::mt19937_64& rng)
{
  std::uniform_int_distribution<std::size_t> nodes(3, 12);
  const std::size_t n = nodes(rng);
  std::uniform_int_distribution<std::size_t> bsize(2, n);
  RandomGraph g{bsize(rng), 0, {}, {}};
  g.ni = n - g.nb;
  std::uniform_real_distribution<double> cond(0.1, 5.0);
  for (std::size_t v = 1; v < n; ++v) {
    std::uniform_int_distribution<std::size_t> parent(0, v - 1);
    g.edges.emplace_back(parent(rng), v);
  }
  std::uniform_int_distribution<std::size_t> any(0, n - 1);
  for (std::size_t extra = any(rng); extra > 0; --extra) {
    const std::size_t a = any(rng), b = any(rng);
    if (a != b)
      g.edges.emplace_back(std::min(a, b), std::max(a, b));
  }
  for (std::size_t e = 0; e < g.edges.size(); ++e)
    g.sigma.push_back(cond(rng));
  return g;
}

} // namespace

TEST(Diagonal, Examples)
{
  const auto h = SpaceGeometry::hilbert(2);
  const auto id = make_diagonal_linear(h, {1, 1}, {0, 0});
  const auto y = id->apply(PrimalVector(h, {2.0, 3.0}));
  EXPECT_EQ(y[0], 2.0);
  EXPECT_EQ(y[1], 3.0);
  const auto d = make_diagonal_linear(h, {2.0, 0.5}, {0, 0});
  const auto z = d->apply(PrimalVector(h, {1.0, 1.0}));
  EXPECT_EQ(z[0], 2.0);
  EXPECT_EQ(z[1], 0.5);
  EXPECT_EQ(d->constants().deriv_bound_Lhat, 2.0);
  EXPECT_EQ(d->constants().lipschitz_L, 0.0);
  EXPECT_EQ(d->constants().stability_eps, 1.0);
  EXPECT_THROW(make_diagonal_linear(h, {1.0, 0.0}, {0, 0}), DomainError);
  EXPECT_THROW(make_diagonal_linear(h, {1.0, -1.0}, {0, 0}), DomainError);
  EXPECT_THROW(make_diagonal_linear(h, {1.0}, {0, 0}), DimensionError);
}

TEST(Diagonal, WeightedHilbertConstants)
{
  const auto p = shipped_diag();
  const std::vector<double> w{1, 1, 0.5, 0.5, 0.25}, s{1.0, 0.8, 0.6, 0.5, 0.4};
  double lhat = 0, cf2 = 0;
  for (int i = 0; i < 5; ++i) {
    lhat = std::max(lhat, s[i] / std::sqrt(w[i]));
    cf2 = std::max(cf2, 0.5 * w[i] / (s[i] * s[i]));
  }
  EXPECT_NEAR(p->constants().deriv_bound_Lhat, lhat, 1e-15);
  EXPECT_NEAR(p->constants().stability_CF, std::sqrt(cf2), 1e-15);
  EXPECT_NEAR(derivative_norm(*p, *p->ground_truth(), 500), lhat, 1e-9);
}

TEST(Diagonal, NonHilbertEmpiricalConstant)
{
  const auto sp = SpaceGeometry::make(3, 3.0, 3.0, {}, 0.4, 2.0);
  const auto p = make_diagonal_linear(sp, {1.0, 0.7, 0.5}, {0.3, -0.2, 0.4});
  EXPECT_GT(p->constants().stability_CF, 0.0);
  EXPECT_TRUE(std::isfinite(p->domain_radius()));
  EXPECT_THROW(make_diagonal_linear(SpaceGeometry::make(2, 3, 3, {1, 2}, 1, 1), {1, 1}, {1, 1}),
               DomainError);
}

TEST(Monomial, ExponentExamples)
{
  EXPECT_EQ(monomial_epsilon(2.0), 0.0);
  EXPECT_NEAR(monomial_epsilon(1.5), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(monomial_epsilon(1.0), 1.0);
  EXPECT_THROW(monomial(1.0), DomainError);
  EXPECT_THROW(monomial(2.5), DomainError);
  EXPECT_THROW(make_monomial(SpaceGeometry::hilbert(2), 1.5, {1, 1}, 1.0), DomainError);
  EXPECT_THROW(make_monomial(SpaceGeometry::make(2, 3, 3, {}, 1, 1), 1.5, {1, 1}, 0.1),
               DomainError);
}

TEST(Monomial, DeclaredConstantsHandValues)
{
  // a = A = 1, R = 0.25, m = 1.5, eps = 1/3
  const auto p = monomial(1.5);
  const auto& c = p->constants();
  EXPECT_NEAR(c.lipschitz_L, 1.5 * 0.5 * std::pow(0.75, -0.5), 1e-14);
  EXPECT_NEAR(c.deriv_bound_Lhat, 1.5 * std::pow(1.25, 0.5), 1e-14);
  const double lower = 1.5 * std::pow(0.75, 0.5);
  EXPECT_NEAR(c.stability_CF * c.stability_CF,
              0.5 * std::pow(0.5, 2.0 / 3.0) / std::pow(lower, 4.0 / 3.0), 1e-14);
  EXPECT_EQ(p->stability_center().coefficients().norm(), 0.0);
}

TEST(Monomial, ApplyIsSignedPower)
{
  const auto p = monomial(1.5);
  const auto y = p->apply(PrimalVector(p->domain_space(), {4.0, -4.0, 0.0, 1.0}));
  EXPECT_NEAR(y[0], 8.0, 1e-14);
  EXPECT_NEAR(y[1], -8.0, 1e-14);
  EXPECT_EQ(y[2], 0.0);
  EXPECT_NEAR(y[3], 1.0, 1e-15);
}

TEST(Network, PathExampleIsExact)
{
  // Boundary nodes 0 and 1 joined through interior node 2 by unit conductances.
  const auto d = dirichlet_to_neumann(2, 1, {{0, 2}, {2, 1}}, {1.0, 1.0});
  EXPECT_EQ(d(0, 0), 0.5);
  EXPECT_EQ(d(0, 1), -0.5);
  EXPECT_EQ(d(1, 0), -0.5);
  EXPECT_EQ(d(1, 1), 0.5);
}

TEST(Network, SingleEdgeAndScaling)
{
  const auto d = dirichlet_to_neumann(2, 0, {{0, 1}}, {3.0});
  EXPECT_EQ(d(0, 0), 3.0);
  EXPECT_EQ(d(0, 1), -3.0);
  const std::vector<Edge> edges{{0, 3}, {1, 3}, {2, 3}, {0, 1}};
  const auto a = dirichlet_to_neumann(3, 1, edges, {1.0, 2.0, 0.5, 0.7});
  const auto b = dirichlet_to_neumann(3, 1, edges, {2.5, 5.0, 1.25, 1.75});
  EXPECT_LE((b - 2.5 * a).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Network, InvalidGraphs)
{
  EXPECT_THROW(dirichlet_to_neumann(2, 1, {{0, 1}}, {1.0}), StructuralError);
  EXPECT_THROW(dirichlet_to_neumann(2, 0, {{0, 1}}, {0.0}), DomainError);
  EXPECT_THROW(dirichlet_to_neumann(2, 0, {{0, 1}}, {-1.0}), DomainError);
  EXPECT_THROW(dirichlet_to_neumann(2, 0, {{0, 5}}, {1.0}), StructuralError);
  EXPECT_THROW(dirichlet_to_neumann(2, 0, {{0, 1}}, {1.0, 2.0}), DimensionError);
}

TEST(Network, RandomGraphsMatchOracleSymmetricZeroRowSums)
{
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = random_graph(rng);
    const auto d = dirichlet_to_neumann(g.nb, g.ni, g.edges, g.sigma);
    const auto o = dtn_oracle(g.nb, g.ni, g.edges, g.sigma);
    EXPECT_LE((d - o).cwiseAbs().maxCoeff(), 1e-10 * (1.0 + o.cwiseAbs().maxCoeff()));
    EXPECT_LE((d - d.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE(d.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12 * (1.0 + d.cwiseAbs().maxCoeff()));
  }
}

TEST(Network, DerivativeMatchesFiniteDifferenceOfDtn)
{
  const auto p = star_network();
  const auto fd = finite_difference_check(*p, *p->ground_truth(), 20, 1e-6, 3);
  EXPECT_EQ(fd.tested, 20u);
  EXPECT_LE(fd.max_relative_error, 1e-5);
}

TEST(Problems, DataIsForwardOfTruth)
{
  for (const auto& p : {shipped_diag(), monomial(1.5), star_network()}) {
    const auto expect = p->apply(*p->ground_truth());
    EXPECT_LE(norm(p->data() - expect), 1e-12 * norm(expect)) << p->kind();
  }
}

TEST(Problems, FiniteDifferences)
{
  std::mt19937_64 rng(5);
  const auto d = shipped_diag();
  // The map is linear, so a coarse step avoids cancellation without truncation error.
  EXPECT_LE(finite_difference_check(*d, *d->ground_truth(), 20, 1e-2, 1).max_relative_error, 1e-12);
  for (double m : {1.25, 1.5, 1.75, 2.0}) {
    const auto p = monomial(m);
    for (int i = 0; i < 20; ++i) {
      const auto u = sample_norm_ball(*p->ground_truth(), 0.25, rng);
      EXPECT_LE(finite_difference_check(*p, u, 5, 1e-5, i).max_relative_error, 1e-6) << m;
    }
  }
}

TEST(Problems, DerivativeIsLinearInDirection)
{
  std::mt19937_64 rng(7);
  for (const auto& p : {shipped_diag(), monomial(1.25), star_network()}) {
    const auto& U = p->domain_space();
    const auto& u = *p->ground_truth();
    for (int i = 0; i < 50; ++i) {
      const auto h1 = unit_direction(U, rng);
      const auto h2 = unit_direction(U, rng);
      const auto sum = p->apply_derivative(u, h1 + h2);
      const auto parts = p->apply_derivative(u, h1) + p->apply_derivative(u, h2);
      EXPECT_LE(norm(sum - parts), 1e-10 * (1.0 + norm(sum)));
      const auto scaled = p->apply_derivative(u, -3.0 * h1);
      EXPECT_LE(norm(scaled + 3.0 * p->apply_derivative(u, h1)), 1e-10 * (1.0 + norm(scaled)));
    }
  }
}

TEST(Problems, AdjointIdentity)
{
  EXPECT_LE(adjoint_check(*shipped_diag(), 1000, 1.0, 1), 1e-12);
  EXPECT_LE(adjoint_check(*monomial(1.5), 1000, 0.25, 2), 1e-12);
  EXPECT_LE(adjoint_check(*star_network(), 1000, 0.3, 3), 1e-10);
}

TEST(Problems, DerivativeBoundAndLipschitzHoldOnDomain)
{
  std::mt19937_64 rng(9);
  for (const auto& p : {monomial(1.25), monomial(1.75), star_network()}) {
    const auto& c = p->constants();
    const double R = p->domain_radius();
    for (int i = 0; i < 100; ++i) {
      const auto u1 = sample_norm_ball(*p->ground_truth(), R, rng);
      const auto u2 = sample_norm_ball(*p->ground_truth(), R, rng);
      EXPECT_LE(derivative_norm(*p, u1, 100), 1.01 * c.deriv_bound_Lhat) << p->kind();
      EXPECT_LE(derivative_difference_norm(*p, u1, u2, 100),
                1.01 * c.lipschitz_L * norm(u1 - u2) + 1e-14)
          << p->kind();
    }
  }
}

TEST(Problems, StabilityInequalityHoldsOnDomainPairs)
{
  std::mt19937_64 rng(13);
  for (const auto& p : {shipped_diag(), monomial(1.25), monomial(1.5), monomial(2.0),
                        star_network()}) {
    const auto& c = p->constants();
    const double R = std::isfinite(p->domain_radius()) ? p->domain_radius() : 1.0;
    const double pp = p->domain_space()->p();
    for (int i = 0; i < 500; ++i) {
      const auto u1 = sample_norm_ball(*p->ground_truth(), R, rng);
      const auto u2 = sample_norm_ball(*p->ground_truth(), R, rng);
      const double lhs = bregman(u1, u2);
      const double misfit = norm(p->apply(u1) - p->apply(u2));
      const double rhs =
          std::pow(c.stability_CF, pp) * std::pow(misfit, (1.0 + c.stability_eps) * pp / 2.0);
      EXPECT_LE(lhs, rhs * (1.0 + 1e-9)) << p->kind();
    }
  }
}

TEST(Stability, FittedExponents)
{
  const auto d = estimate_stability(*shipped_diag(), 500, 42, 1.0);
  EXPECT_NEAR(d.fitted_eps, 1.0, 0.05);
  const auto m = estimate_stability(*monomial(1.5), 500, 42, 0.25);
  EXPECT_NEAR(m.fitted_eps, 1.0 / 3.0, 0.1);
  EXPECT_EQ(m.sample_count, m.samples.size());
}

TEST(Stability, DegenerateInputs)
{
  const auto d = shipped_diag();
  EXPECT_THROW(estimate_stability(*d, 500, 1, 0.0), SamplingError);
  EXPECT_THROW(estimate_stability(*d, 3, 1, 1.0), SamplingError);
  EXPECT_THROW(estimate_stability(*d, 100, 1, 1e-300), SamplingError);
}

TEST(Stability, SeededFitIsReproducible)
{
  const auto a = estimate_stability(*monomial(1.75), 200, 8, 0.25);
  const auto b = estimate_stability(*monomial(1.75), 200, 8, 0.25);
  EXPECT_EQ(a.fitted_eps, b.fitted_eps);
  EXPECT_EQ(a.fitted_cf, b.fitted_cf);
}
