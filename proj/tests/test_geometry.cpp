#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "irlw/geometry.hpp"

using namespace irlw;

namespace {

// Plain-loop oracles on unweighted coefficient arrays, independent of the library kernels.
double lp_norm(const std::vector<double>& c, double r)
{
  double s = 0;
  for (double x : c)
    s += std::pow(std::abs(x), r);
  return std::pow(s, 1.0 / r);
}

std::vector<double> lp_duality(const std::vector<double>& c, double p, double r)
{
  const double n = lp_norm(c, r);
  std::vector<double> out(c.size(), 0.0);
  if (n == 0.0)
    return out;
  for (std::size_t i = 0; i < c.size(); ++i)
    out[i] = std::pow(n, p - r) * std::pow(std::abs(c[i]), r - 1.0) * (c[i] < 0 ? -1.0 : 1.0);
  return out;
}

double lp_bregman(const std::vector<double>& a, const std::vector<double>& b, double p)
{
  const auto jb = lp_duality(b, p, p);
  double pair = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    pair += jb[i] * (a[i] - b[i]);
  return std::pow(lp_norm(a, p), p) / p - std::pow(lp_norm(b, p), p) / p - pair;
}

SpacePtr lp(std::size_t n, double p, double r = 0.0)
{
  return SpaceGeometry::make(n, p, r == 0.0 ? p : r, {}, 1.0, 1.0);
}

} // namespace

TEST(Norm, Examples)
{
  const auto h = SpaceGeometry::hilbert(2);
  EXPECT_NEAR(norm(PrimalVector(h, {3.0, 4.0})), 5.0, 1e-12);
  EXPECT_EQ(norm(PrimalVector::zero(lp(3, 3.0))), 0.0);
  EXPECT_NEAR(norm(PrimalVector(lp(4, 4.0), {1, 1, 1, 1})), std::pow(4.0, 0.25), 1e-12);
}

TEST(Norm, WeightedMatchesScaledCoefficients)
{
  const auto sp = SpaceGeometry::make(3, 3.0, 3.0, {1.0, 8.0, 0.125}, 1.0, 1.0);
  const PrimalVector u(sp, {1.0, 0.5, 2.0});
  // sum w |u|^3 = 1 + 1 + 1
  EXPECT_NEAR(norm(u), std::cbrt(3.0), 1e-14);
}

TEST(Norm, HomogeneousAndTriangle)
{
  std::mt19937_64 rng(3);
  for (double p : {1.5, 2.0, 3.0, 4.0}) {
    const auto sp = lp(6, p);
    for (int i = 0; i < 200; ++i) {
      const PrimalVector a(sp, gaussian_coefficients(6, rng));
      const PrimalVector b(sp, gaussian_coefficients(6, rng));
      EXPECT_NEAR(norm(-2.5 * a), 2.5 * norm(a), 1e-12 * norm(a));
      EXPECT_LE(norm(a + b), norm(a) + norm(b) + 1e-12);
    }
  }
}

TEST(DualityMap, Examples)
{
  const auto h = SpaceGeometry::hilbert(2);
  const auto j = duality_map(PrimalVector(h, {1.0, 2.0}));
  EXPECT_EQ(j[0], 1.0);
  EXPECT_EQ(j[1], 2.0);

  const auto j3 = duality_map(PrimalVector(lp(3, 3.0), {2.0, 0.0, 0.0}));
  EXPECT_NEAR(j3[0], 4.0, 1e-12);
  EXPECT_EQ(j3[1], 0.0);
  EXPECT_EQ(j3[2], 0.0);

  const auto back = inverse_duality_map(DualVector(lp(2, 3.0), {4.0, 0.0}));
  EXPECT_NEAR(back[0], 2.0, 1e-12);
  EXPECT_EQ(back[1], 0.0);
}

TEST(DualityMap, ZeroMapsToZeroForEveryGauge)
{
  for (double p : {1.5, 2.0, 3.0})
    for (double r : {1.5, 2.0, 4.0}) {
      const auto sp = lp(3, p, r);
      const auto j = duality_map(PrimalVector::zero(sp));
      for (std::size_t i = 0; i < 3; ++i)
        EXPECT_EQ(j[i], 0.0);
      const auto u = inverse_duality_map(DualVector::zero(sp));
      for (std::size_t i = 0; i < 3; ++i)
        EXPECT_EQ(u[i], 0.0);
    }
}

TEST(DualityMap, MatchesLoopOracle)
{
  std::mt19937_64 rng(5);
  for (double p : {1.5, 2.0, 3.0})
    for (double r : {1.5, 2.5, 4.0}) {
      const auto sp = lp(5, p, r);
      for (int i = 0; i < 50; ++i) {
        const Eigen::VectorXd c = gaussian_coefficients(5, rng);
        const std::vector<double> cv(c.data(), c.data() + c.size());
        const auto expect = lp_duality(cv, p, r);
        const auto got = duality_map(PrimalVector(sp, c));
        for (std::size_t k = 0; k < 5; ++k)
          EXPECT_NEAR(got[k], expect[k], 1e-12 * (1.0 + std::abs(expect[k])));
      }
    }
}

TEST(DualityMap, DefiningPropertiesAndRoundTrip)
{
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double p : {1.5, 2.0, 3.0, 4.0})
    for (double r : {1.5, 2.0, 3.0})
      for (std::size_t n : {1, 2, 10}) {
        const auto sp = SpaceGeometry::make(n, p, r, {}, 1.0, 1.0);
        for (int i = 0; i < 100; ++i) {
          const PrimalVector u(sp, std::exp(2.0 * normal(rng)) * gaussian_coefficients(n, rng));
          const auto j = duality_map(u);
          const double nu = norm(u);
          EXPECT_NEAR(pairing(u, j), nu * dual_norm(j), 1e-10 * nu * dual_norm(j));
          EXPECT_NEAR(dual_norm(j), std::pow(nu, p - 1.0), 1e-10 * std::pow(nu, p - 1.0));
          const auto back = inverse_duality_map(j);
          EXPECT_LE(norm(back - u), 1e-10 * nu);
        }
      }
}

TEST(DualityMap, WeightedPairingIdentity)
{
  std::mt19937_64 rng(13);
  const auto sp = SpaceGeometry::make(4, 3.0, 2.5, {0.5, 2.0, 1.0, 4.0}, 1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const PrimalVector u(sp, gaussian_coefficients(4, rng));
    EXPECT_NEAR(pairing(u, duality_map(u)), std::pow(norm(u), 3.0), 1e-11 * std::pow(norm(u), 3.0));
    EXPECT_LE(norm(inverse_duality_map(duality_map(u)) - u), 1e-11 * norm(u));
  }
}

TEST(DualityMap, ContinuousAlongConvergentSequence)
{
  const auto sp = lp(3, 3.0, 1.5);
  const PrimalVector u(sp, {0.4, -1.0, 2.0});
  const PrimalVector h(sp, {1.0, 1.0, -1.0});
  const auto ju = duality_map(u);
  double prev = 1e300;
  for (int k = 1; k <= 8; ++k) {
    const double t = std::pow(10.0, -k);
    const double gap = dual_norm(duality_map(u + t * h) - ju);
    EXPECT_LT(gap, prev);
    prev = gap;
  }
  EXPECT_LT(prev, 1e-6);
}

TEST(Bregman, Examples)
{
  const auto h = SpaceGeometry::hilbert(2);
  EXPECT_NEAR(bregman(PrimalVector(h, {1.0, 0.0}), PrimalVector(h, {0.0, 1.0})), 1.0, 1e-12);
  const auto sp = lp(1, 3.0);
  // (8 - 1)/3 - 1 * (2 - 1)
  EXPECT_NEAR(bregman(PrimalVector(sp, {2.0}), PrimalVector(sp, {1.0})), 4.0 / 3.0, 1e-12);
  EXPECT_NEAR(shifted_bregman(PrimalVector(h, {1.0, 1.0}), PrimalVector(h, {0.0, 1.0}),
                              PrimalVector(h, {0.0, 1.0})),
              0.5, 1e-12);
}

TEST(Bregman, HilbertIsHalfSquaredDistance)
{
  std::mt19937_64 rng(17);
  const auto h = SpaceGeometry::hilbert(4, {1.0, 0.5, 2.0, 3.0});
  for (int i = 0; i < 200; ++i) {
    const PrimalVector a(h, gaussian_coefficients(4, rng));
    const PrimalVector b(h, gaussian_coefficients(4, rng));
    const double d2 = std::pow(norm(a - b), 2.0);
    EXPECT_NEAR(bregman(a, b), 0.5 * d2, 1e-12 * d2);
  }
}

TEST(Bregman, MatchesLoopOracleNonNegativeAndZeroOnDiagonal)
{
  std::mt19937_64 rng(19);
  for (double p : {1.5, 3.0, 4.0}) {
    const auto sp = lp(4, p);
    for (int i = 0; i < 200; ++i) {
      const Eigen::VectorXd a = gaussian_coefficients(4, rng);
      const Eigen::VectorXd b = gaussian_coefficients(4, rng);
      const std::vector<double> av(a.data(), a.data() + 4), bv(b.data(), b.data() + 4);
      const double got = bregman(PrimalVector(sp, a), PrimalVector(sp, b));
      EXPECT_NEAR(got, lp_bregman(av, bv, p), 1e-11 * (1.0 + std::abs(got)));
      EXPECT_GE(got, 0.0);
      EXPECT_EQ(bregman(PrimalVector(sp, a), PrimalVector(sp, a)), 0.0);
    }
  }
}

TEST(Bregman, DualBregmanNonNegative)
{
  std::mt19937_64 rng(23);
  const auto sp = lp(3, 3.0);
  for (int i = 0; i < 200; ++i) {
    const DualVector a(sp, gaussian_coefficients(3, rng));
    const DualVector b(sp, gaussian_coefficients(3, rng));
    EXPECT_GE(dual_bregman(a, b), 0.0);
  }
}

TEST(ConvexityConstants, HilbertIsExactlyOne)
{
  const auto est = estimate_convexity_constants(*SpaceGeometry::hilbert(3), 1000, 1);
  EXPECT_NEAR(est.c_p, 1.0, 1e-9);
  EXPECT_NEAR(est.g_q, 1.0, 1e-9);
  const auto one = estimate_convexity_constants(*SpaceGeometry::hilbert(3), 1, 1);
  EXPECT_NEAR(one.c_p, 1.0, 1e-9);
  EXPECT_NEAR(one.g_q, 1.0, 1e-9);
}

TEST(ConvexityConstants, P4RegressionPin)
{
  const auto est = estimate_convexity_constants(*lp(3, 4.0), 10000, 12345);
  EXPECT_GT(est.c_p, 0.0);
  EXPECT_LE(est.c_p, 1.0);
  EXPECT_NEAR(est.c_p, 0.3336060457870782, 1e-12);
  EXPECT_NEAR(est.g_q, 1.4402462803652878, 1e-12);

  // A pair through the origin gives ratio exactly one, so the infimum can never exceed it; a fresh
  // hand-computed sample must not undercut the estimate by much.
  std::mt19937_64 rng(777);
  double fresh = 1e300;
  for (int i = 0; i < 10000; ++i) {
    const Eigen::VectorXd a = gaussian_coefficients(3, rng);
    const Eigen::VectorXd b = gaussian_coefficients(3, rng);
    const std::vector<double> av(a.data(), a.data() + 3), bv(b.data(), b.data() + 3);
    std::vector<double> d(3);
    for (int k = 0; k < 3; ++k)
      d[k] = av[k] - bv[k];
    fresh = std::min(fresh, 4.0 * lp_bregman(av, bv, 4.0) / std::pow(lp_norm(d, 4.0), 4.0));
  }
  EXPECT_GT(fresh, 0.5 * est.c_p);
}

TEST(ConvexityConstants, EstimatedBoundsHoldOnTheirOwnSample)
{
  const auto sp = SpaceGeometry::with_estimated_constants(3, 3.0, 3.0, {}, 500, 9);
  EXPECT_GT(sp->c_p(), 0.0);
  EXPECT_GT(sp->g_q(), 0.0);
  EXPECT_THROW(estimate_convexity_constants(*sp, 0, 1), SamplingError);
}

TEST(Space, InvalidConstruction)
{
  EXPECT_THROW(SpaceGeometry::make(3, 1.0, 2.0, {}, 1, 1), DomainError);
  EXPECT_THROW(SpaceGeometry::make(3, 2.0, 0.5, {}, 1, 1), DomainError);
  EXPECT_THROW(SpaceGeometry::make(0, 2.0, 2.0, {}, 1, 1), Error);
  EXPECT_THROW(SpaceGeometry::make(2, 2.0, 2.0, {1.0, -1.0}, 1, 1), Error);
  EXPECT_THROW(SpaceGeometry::make(2, 2.0, 2.0, {1.0}, 1, 1), Error);
}

TEST(Space, MismatchIsRejected)
{
  const PrimalVector a(lp(2, 3.0), {1.0, 2.0});
  const PrimalVector b(lp(2, 2.5), {1.0, 2.0});
  const PrimalVector c(lp(3, 3.0), {1.0, 2.0, 3.0});
  EXPECT_THROW(bregman(a, b), DimensionError);
  EXPECT_THROW((void)(a - c), DimensionError);
}

TEST(Space, NonFiniteCoefficientsRejected)
{
  EXPECT_THROW(PrimalVector(lp(2, 2.0), {1.0, std::nan("")}), DomainError);
  EXPECT_THROW(DualVector(lp(2, 2.0), {INFINITY, 0.0}), DomainError);
}

TEST(Sampling, BregmanBallDrawsStayInside)
{
  std::mt19937_64 rng(29);
  const auto sp = SpaceGeometry::with_estimated_constants(3, 3.0, 3.0, {}, 2000, 4);
  const PrimalVector truth(sp, {1.0, -0.5, 0.25});
  const PrimalVector u0(sp, {0.8, -0.4, 0.2});
  for (int i = 0; i < 100; ++i)
    EXPECT_LE(shifted_bregman(truth, sample_bregman_ball(truth, u0, 0.01, rng), u0), 0.01);
}
