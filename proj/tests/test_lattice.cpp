#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "svx/lattice.hpp"

using namespace svx;

namespace {

WeightMatrix single_weight() { return WeightMatrix{1, 1, {1}}; }

SiteField random_section(int sites, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  SiteField z(sites, n);
  for (auto& v : z.v) v = cplx(nd(rng), nd(rng));
  return z;
}

GaugeMap random_gauge(int sites, int r, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  GaugeMap g(sites, r);
  for (auto& x : g.g) x = u(rng);
  return g;
}

}  // namespace

TEST(Torus, VolumeFromSidesAndLambda) {
  EXPECT_EQ(make_torus(16, 16, 1, 1).volume, 1.0);
  EXPECT_EQ(make_torus(16, 16, 2, 3).volume, 6.0);
  LambdaSpec two;
  two.constant = 2.0;
  EXPECT_NEAR(make_torus(8, 8, 1, 1, two).volume, 4.0, 1e-14);
}

TEST(Torus, RejectsBadInput) {
  EXPECT_THROW(make_torus(3, 8, 1, 1), NonPositiveDimension);
  EXPECT_THROW(make_torus(8, 8, 0, 1), NonPositiveDimension);
  LambdaSpec neg;
  neg.constant = -1.0;
  EXPECT_THROW(make_torus(8, 8, 1, 1, neg), NonPositiveConformalFactor);
  LambdaSpec table;
  table.table.assign(63, 1.0);
  EXPECT_THROW(make_torus(8, 8, 1, 1, table), ShapeMismatch);
  table.table.assign(64, 1.0);
  table.table[5] = 0.0;
  EXPECT_THROW(make_torus(8, 8, 1, 1, table), NonPositiveConformalFactor);
}

TEST(Torus, NeighbourIndexing) {
  const auto g = make_torus(5, 7, 1, 1);
  for (int k = 0; k < g.num_sites(); ++k) {
    EXPECT_EQ(g.west(g.east(k)), k);
    EXPECT_EQ(g.south(g.north(k)), k);
    EXPECT_EQ(g.site(g.i_of(k) + 5, g.j_of(k) - 7), k);
  }
}

TEST(Flux, ZeroDegreeUniformIsZero) {
  const auto g = make_torus(16, 16, 1, 1);
  const int d[] = {0};
  const auto a = make_connection_with_flux(g, d, FluxProfile::uniform);
  for (double f : curvature(g, a)) EXPECT_EQ(f, 0.0);
  for (double x : a.as) EXPECT_EQ(x, 0.0);
  for (double x : a.at) EXPECT_EQ(x, 0.0);
}

TEST(Flux, QuantizedForEveryProfile) {
  const auto g = make_torus(16, 12, 1.3, 0.7);
  for (auto prof : {FluxProfile::uniform, FluxProfile::seam, FluxProfile::random_plus_flux}) {
    for (int d : {-2, 0, 1, 3}) {
      const int deg[] = {d};
      const auto a = make_connection_with_flux(g, deg, prof, 42);
      EXPECT_NEAR(total_flux(g, a)[0], 2 * kPi * d, 1e-12) << static_cast<int>(prof) << " " << d;
    }
  }
}

TEST(Flux, UniformCurvatureIsConstant) {
  const auto g = make_torus(16, 16, 1, 1);
  const int d[] = {2};
  const auto a = make_connection_with_flux(g, d, FluxProfile::uniform);
  for (double f : curvature(g, a)) EXPECT_NEAR(f, 4 * kPi, 1e-10);
  for (double f : site_curvature(g, a)) EXPECT_NEAR(f, 4 * kPi, 1e-10);
}

TEST(Flux, MultipleGenerators) {
  const auto g = make_torus(8, 8, 1, 1);
  const int d[] = {1, -2};
  const auto a = make_connection_with_flux(g, d, FluxProfile::random_plus_flux, 3);
  const auto tf = total_flux(g, a);
  EXPECT_NEAR(tf[0], 2 * kPi, 1e-12);
  EXPECT_NEAR(tf[1], -4 * kPi, 1e-12);
}

TEST(Curvature, PureGaugeIsFlat) {
  const auto g = make_torus(12, 10, 1, 2);
  const auto dg = lattice_differential(g, random_gauge(g.num_sites(), 2, 7));
  for (double f : curvature(g, dg)) EXPECT_NEAR(f, 0.0, 1e-10);
  const auto tf = total_flux(g, dg);
  EXPECT_NEAR(tf[0], 0.0, 1e-12);
  EXPECT_NEAR(tf[1], 0.0, 1e-12);
}

TEST(Curvature, GeometryMismatch) {
  const auto g = make_torus(8, 8, 1, 1);
  const auto h = make_torus(8, 10, 1, 1);
  const int d[] = {1};
  const auto a = make_connection_with_flux(h, d, FluxProfile::uniform);
  EXPECT_THROW(curvature(g, a), GeometryMismatch);
}

TEST(CovariantDbar, ConstantSectionFlat) {
  const auto g = make_torus(8, 8, 1, 1);
  const int d[] = {0};
  const auto a = make_connection_with_flux(g, d, FluxProfile::uniform);
  SiteField z(g.num_sites(), 1);
  for (auto& v : z.v) v = cplx(0.3, -1.1);
  for (const auto& v : covariant_dbar(g, a, single_weight(), z).v) EXPECT_EQ(std::abs(v), 0.0);
}

TEST(CovariantDbar, PlaneWaveAbsorbedByConnection) {
  const auto g = make_torus(16, 16, 2, 1);
  const int d[] = {0};
  auto a = make_connection_with_flux(g, d, FluxProfile::uniform);
  for (auto& x : a.as) x = 2 * kPi / g.ls;
  SiteField z(g.num_sites(), 1);
  for (int k = 0; k < g.num_sites(); ++k) z(k, 0) = std::polar(1.0, 2 * kPi * g.position(k)[0] / g.ls);
  for (const auto& v : covariant_dbar(g, a, single_weight(), z).v) EXPECT_LT(std::abs(v), 1e-12);
}

TEST(CovariantDbar, ConsistentUnderRefinement) {
  // dbar of exp(2 pi i s) with no connection is pi i exp(2 pi i s); forward
  // differences converge at first order.
  double prev = 0.0;
  for (int n : {16, 32, 64, 128}) {
    const auto g = make_torus(n, n, 1, 1);
    const int d[] = {0};
    const auto a = make_connection_with_flux(g, d, FluxProfile::uniform);
    SiteField z(g.num_sites(), 1);
    for (int k = 0; k < g.num_sites(); ++k) z(k, 0) = std::polar(1.0, 2 * kPi * g.position(k)[0]);
    const auto db = covariant_dbar(g, a, single_weight(), z);
    double err = 0.0;
    for (int k = 0; k < g.num_sites(); ++k)
      err = std::max(err, std::abs(db(k, 0) - cplx(0, kPi) * z(k, 0)));
    if (prev > 0.0) EXPECT_NEAR(prev / err, 2.0, 0.1);
    prev = err;
  }
}

TEST(CovariantDbar, SeamTwistMatchesContinuation) {
  const auto g = make_torus(8, 8, 1, 1);
  const int d[] = {1};
  const auto a = make_connection_with_flux(g, d, FluxProfile::seam);
  const auto z = random_section(g.num_sites(), 1, 11);
  const auto D = covariant_differences(g, a, single_weight(), z);
  for (int j = 0; j < g.nt; ++j) {
    const int k = g.site(g.ns - 1, j);
    const cplx cont = std::polar(1.0, 2 * kPi * j / g.nt) * z(g.site(0, j), 0);
    EXPECT_NEAR(std::abs(D.ds(k, 0) - (cont - z(k, 0)) / g.hs), 0.0, 1e-12);
  }
}

TEST(Gauge, CovarianceOfDbar) {
  const auto g = make_torus(12, 12, 1, 1);
  const int d[] = {2, -1};
  const WeightMatrix w{3, 2, {1, 0, 2, -1, 0, 1}};
  const auto a = make_connection_with_flux(g, d, FluxProfile::random_plus_flux, 5, 0.5);
  const auto z = random_section(g.num_sites(), 3, 9);
  const auto gm = random_gauge(g.num_sites(), 2, 13);
  const auto [z2, a2] = gauge_transform(g, gm, w, z, a);
  const auto db1 = covariant_dbar(g, a, w, z);
  const auto db2 = covariant_dbar(g, a2, w, z2);
  for (int k = 0; k < g.num_sites(); ++k)
    for (int nu = 0; nu < 3; ++nu) {
      double ph = 0.0;
      for (int j = 0; j < 2; ++j) ph += w(nu, j) * gm.g[k * 2 + j];
      EXPECT_NEAR(std::abs(db2(k, nu) - std::polar(1.0, ph) * db1(k, nu)), 0.0, 1e-11);
    }
}

TEST(Gauge, CurvatureUnchangedAndDegreeKept) {
  const auto g = make_torus(10, 10, 1, 1);
  const int d[] = {3};
  const auto a = make_connection_with_flux(g, d, FluxProfile::uniform);
  const auto z = random_section(g.num_sites(), 1, 1);
  const auto [z2, a2] = gauge_transform(g, random_gauge(g.num_sites(), 1, 2), single_weight(), z, a);
  EXPECT_EQ(a2.degree, a.degree);
  const auto f1 = curvature(g, a);
  const auto f2 = curvature(g, a2);
  for (std::size_t p = 0; p < f1.size(); ++p) EXPECT_NEAR(f1[p], f2[p], 1e-12 * std::abs(f1[p]) + 1e-9);
}

TEST(Gauge, ConstantMapRotatesSection) {
  const auto g = make_torus(8, 8, 1, 1);
  const int d[] = {1};
  const auto a = make_connection_with_flux(g, d, FluxProfile::uniform);
  const auto z = random_section(g.num_sites(), 1, 4);
  GaugeMap gm(g.num_sites(), 1);
  for (auto& x : gm.g) x = 0.7;
  const auto [z2, a2] = gauge_transform(g, gm, single_weight(), z, a);
  EXPECT_EQ(a2.as, a.as);
  EXPECT_EQ(a2.at, a.at);
  for (int k = 0; k < g.num_sites(); ++k)
    EXPECT_NEAR(std::abs(z2(k, 0) - std::polar(1.0, 0.7) * z(k, 0)), 0.0, 1e-15);
}

TEST(Gauge, Composition) {
  const auto g = make_torus(8, 8, 1, 1);
  const int d[] = {1};
  const auto a = make_connection_with_flux(g, d, FluxProfile::seam);
  const auto z = random_section(g.num_sites(), 1, 4);
  const auto g1 = random_gauge(g.num_sites(), 1, 5);
  const auto g2 = random_gauge(g.num_sites(), 1, 6);
  GaugeMap sum(g.num_sites(), 1);
  for (std::size_t m = 0; m < sum.g.size(); ++m) sum.g[m] = g1.g[m] + g2.g[m];
  const auto [za, aa] = gauge_transform(g, g1, single_weight(), z, a);
  const auto [zb, ab] = gauge_transform(g, g2, single_weight(), za, aa);
  const auto [zc, ac] = gauge_transform(g, sum, single_weight(), z, a);
  for (std::size_t m = 0; m < zb.v.size(); ++m) EXPECT_NEAR(std::abs(zb.v[m] - zc.v[m]), 0.0, 1e-12);
  for (std::size_t m = 0; m < ab.as.size(); ++m) {
    EXPECT_NEAR(ab.as[m], ac.as[m], 1e-11);
    EXPECT_NEAR(ab.at[m], ac.at[m], 1e-11);
  }
}

TEST(Shapes, MismatchedWeights) {
  const auto g = make_torus(8, 8, 1, 1);
  const int d[] = {1};
  const auto a = make_connection_with_flux(g, d, FluxProfile::seam);
  const auto z = random_section(g.num_sites(), 2, 1);
  EXPECT_THROW(covariant_dbar(g, a, single_weight(), z), ShapeMismatch);
  const WeightMatrix w2{2, 2, {1, 0, 0, 1}};
  EXPECT_THROW(covariant_dbar(g, a, w2, z), ShapeMismatch);
}
