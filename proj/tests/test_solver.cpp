#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "svx/solver.hpp"

using namespace svx;

namespace {

SolveResult single_vortex(int n, double tau = 4 * kPi, std::array<double, 2> p = {0.5, 0.5}) {
  const auto g = make_torus(n, n, 1, 1);
  const auto m = make_weight_model(1, 1, {1}, {tau});
  InitSpec in;
  in.kind = InitKind::zeros;
  in.points = {p};
  return solve_vortex(g, m, {1}, in, SolveOptions{});
}

bool has_note(const ScanRecord& r, const std::string& prefix) {
  for (const auto& s : r.notes)
    if (s.rfind(prefix, 0) == 0) return true;
  return false;
}

}  // namespace

TEST(Options, Validation) {
  SolveOptions o;
  EXPECT_NO_THROW(validate_options(o));
  auto bad = [](auto f) {
    SolveOptions x;
    f(x);
    EXPECT_THROW(validate_options(x), InvalidArgument);
  };
  bad([](SolveOptions& x) { x.newton_tol = 0; });
  bad([](SolveOptions& x) { x.grad_tol = -1; });
  bad([](SolveOptions& x) { x.newton_iters = 0; });
  bad([](SolveOptions& x) { x.armijo = 0.7; });
  bad([](SolveOptions& x) { x.backtracking = 1.0; });
  bad([](SolveOptions& x) { x.max_restarts = -1; });
  bad([](SolveOptions& x) { x.damping_floor = 0; });
}

TEST(Descent, EnergyNonincreasing) {
  const auto g = make_torus(16, 16, 1, 1);
  const auto m = make_weight_model(1, 1, {1}, {4 * kPi});
  const int d[] = {1};
  VortexState s{g, SiteField(g.num_sites(), 1),
                make_connection_with_flux(g, d, FluxProfile::random_plus_flux, 5, 0.5), 1.0};
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.0, 2.0);
  for (auto& v : s.z.v) v = cplx(nd(rng), nd(rng));
  SolveOptions o;
  o.max_iters = 200;
  DescentStats st;
  const auto out = descend_energy(s, m, o, &st);
  ASSERT_GE(st.energies.size(), 2u);
  for (std::size_t i = 1; i < st.energies.size(); ++i) EXPECT_LT(st.energies[i], st.energies[i - 1]);
  EXPECT_LE(energy(out, m), energy(s, m));
}

TEST(Descent, CriticalStateUnchanged) {
  const auto g = make_torus(16, 16, 1, 1);
  const double tau = 3.0;
  const auto m = make_weight_model(1, 1, {1}, {tau});
  const int d[] = {0};
  VortexState s{g, SiteField(g.num_sites(), 1), make_connection_with_flux(g, d, FluxProfile::uniform), 1.0};
  for (auto& v : s.z.v) v = std::polar(std::sqrt(2 * tau), 0.3);
  DescentStats st;
  const auto out = descend_energy(s, m, SolveOptions{}, &st);
  EXPECT_EQ(st.accepted_steps, 0);
  EXPECT_EQ(out.z.v, s.z.v);
  EXPECT_EQ(out.a.as, s.a.as);
}

TEST(Descent, LatticeSolutionIsNearlyCritical) {
  // the lattice pairing is not exactly topological, so a solution of the
  // first-order system is critical for E only up to discretization error
  const auto sol = single_vortex(24);
  ASSERT_TRUE(sol.record.converged);
  const auto m = make_weight_model(1, 1, {1}, {4 * kPi});
  const auto coarse = single_vortex(12);
  const auto m12 = make_weight_model(1, 1, {1}, {4 * kPi});
  EXPECT_LT(gradient_norm(sol.state, m), 0.5 * gradient_norm(coarse.state, m12));
}

TEST(Descent, VacuumReachesZeroEnergy) {
  const auto g = make_torus(16, 16, 1, 1);
  const double tau = 2.0;
  const auto m = make_weight_model(1, 1, {1}, {tau});
  const int d[] = {0};
  // z = 0 is itself critical, so start just off it
  VortexState s{g, SiteField(g.num_sites(), 1), make_connection_with_flux(g, d, FluxProfile::uniform), 1.0};
  std::mt19937_64 rng(9);
  std::normal_distribution<double> nd(0.0, 1e-2);
  for (auto& v : s.z.v) v = cplx(nd(rng), nd(rng));
  SolveOptions o;
  o.grad_tol = 1e-7;
  o.basin_tol = 1e-12;
  const auto out = descend_energy(s, m, o);
  EXPECT_LE(energy(out, m), 1e-8);
  for (const auto& v : out.z.v) EXPECT_NEAR(std::norm(v), 2 * tau, 1e-3);
}

TEST(Newton, QuadraticContraction) {
  const auto g = make_torus(32, 32, 1, 1);
  const auto m = make_weight_model(1, 1, {1}, {4 * kPi});
  VortexState s{g, prescribe_zeros(g, m, {{0.5, 0.5}}), connection_for_zeros(g, m, 1, {{0.5, 0.5}}), 1.0};
  const auto start = descend_energy(s, m, SolveOptions{});
  SolveOptions o;
  o.newton_tol = 1e-11;
  NewtonStats st;
  newton_refine(start, m, o, &st);
  ASSERT_TRUE(st.converged);
  // steps that start below ~1e-8 only see rounding
  std::vector<std::pair<double, double>> steps;
  for (std::size_t k = 1; k < st.residuals.size(); ++k)
    if (st.residuals[k - 1] > 1e-8) steps.emplace_back(st.residuals[k - 1], st.residuals[k]);
  ASSERT_GE(steps.size(), 3u);
  for (std::size_t k = steps.size() - 3; k < steps.size(); ++k)
    EXPECT_LE(steps[k].second, 10.0 * steps[k].first * steps[k].first);
}

TEST(Newton, ExactStartReturnsUnchanged) {
  const auto sol = single_vortex(24);
  ASSERT_TRUE(sol.record.converged);
  const auto m = make_weight_model(1, 1, {1}, {4 * kPi});
  NewtonStats st;
  const auto out = newton_refine(sol.state, m, SolveOptions{}, &st);
  EXPECT_EQ(st.iterations, 0);
  EXPECT_EQ(out.z.v, sol.state.z.v);
}

TEST(Newton, ZeroSectionIsSingular) {
  const auto g = make_torus(16, 16, 1, 1);
  const auto m = make_weight_model(1, 1, {1}, {4 * kPi});
  const int d[] = {1};
  VortexState s{g, SiteField(g.num_sites(), 1), make_connection_with_flux(g, d, FluxProfile::uniform), 1.0};
  EXPECT_THROW(newton_refine(s, m, SolveOptions{}), SingularSystem);
}

TEST(Prescribe, ZeroCounts) {
  const auto g = make_torus(32, 32, 1, 1);
  const auto m = make_weight_model(1, 1, {1}, {8 * kPi});
  VortexState one{g, prescribe_zeros(g, m, {{0.5, 0.5}}), connection_for_zeros(g, m, 1, {{0.5, 0.5}}), 1.0};
  EXPECT_EQ(zero_count(one, m), 1);
  const std::vector<std::array<double, 2>> two{{0.25, 0.25}, {0.75, 0.75}};
  VortexState s2{g, prescribe_zeros(g, m, two), connection_for_zeros(g, m, 2, two), 1.0};
  EXPECT_EQ(zero_count(s2, m), 2);
}

TEST(Prescribe, PointsTooClose) {
  const auto g = make_torus(32, 32, 1, 1);
  const auto m = make_weight_model(1, 1, {1}, {8 * kPi});
  EXPECT_THROW(prescribe_zeros(g, m, {{0.5, 0.5}, {0.5 + 1.5 / 32, 0.5}}), PointsTooClose);
  // across the seam
  EXPECT_THROW(prescribe_zeros(g, m, {{0.01, 0.5}, {0.99, 0.5}}), PointsTooClose);
  InitSpec in;
  in.kind = InitKind::zeros;
  in.points = {{0.5, 0.5}};
  EXPECT_THROW(solve_vortex(g, m, {2}, in, SolveOptions{}), InvalidArgument);
}

TEST(ConnectionForZeros, FluxAndCenteredPoints) {
  const auto g = make_torus(16, 24, 1, 1.5);
  const auto m = make_weight_model(1, 1, {1}, {4 * kPi});
  const auto a = connection_for_zeros(g, m, 2, {{0.2, 0.75}, {0.8, 0.75}});
  const auto u = make_connection_with_flux(g, std::vector<int>{2}, FluxProfile::uniform);
  for (std::size_t i = 0; i < a.as.size(); ++i) {
    EXPECT_NEAR(a.as[i], u.as[i], 1e-14);
    EXPECT_NEAR(a.at[i], u.at[i], 1e-14);
  }
  const auto b = connection_for_zeros(g, m, 1, {{0.3, 0.2}});
  EXPECT_NEAR(total_flux(g, b)[0], 2 * kPi, 1e-12);
}

TEST(Solve, SingleVortexPinnedZero) {
  const auto sol = single_vortex(32, 4 * kPi, {0.3, 0.6});
  ASSERT_TRUE(sol.record.converged);
  const auto m = make_weight_model(1, 1, {1}, {4 * kPi});
  const auto b = energy_identity(sol.state, m);
  EXPECT_LE(b.dbar2 + b.resid2, 1e-16);
  EXPECT_NEAR(b.energy, b.pairing, 1e-8 * b.pairing);
  EXPECT_NEAR(b.pairing, continuum_pairing(m, {1}), 1e-3 * b.pairing);
  const auto z = zero_locations(sol.state, m);
  ASSERT_EQ(z.size(), 1u);
  EXPECT_LE(torus_distance(sol.state.geom, z[0], {0.3, 0.6}), 2.0 / 32);
}

TEST(Solve, BelowThresholdFailsWithBound) {
  const auto g = make_torus(24, 24, 1, 1);
  const auto m = make_weight_model(1, 1, {1}, {kPi});
  SolveOptions o;
  o.max_iters = 500;
  const auto r = solve_vortex(g, m, {1}, InitSpec{}, o);
  EXPECT_FALSE(r.record.converged);
  EXPECT_FALSE(r.record.above_threshold);
  EXPECT_TRUE(has_note(r.record, "BelowThreshold"));
  EXPECT_NEAR(r.record.residual_lower_bound, 0.5 * kPi * kPi, 1e-12);
  EXPECT_GE(r.record.dbar2 + r.record.resid2, r.record.residual_lower_bound * (1 - 1e-9));
}

TEST(Solve, ThresholdClassification) {
  const auto g = make_torus(8, 8, 1, 1);
  const auto m = make_weight_model(1, 1, {1}, {2 * kPi});
  EXPECT_FALSE(above_threshold(g, m, {1}, 1.0));
  EXPECT_TRUE(above_threshold(g, m, {1}, 0.99));
  EXPECT_EQ(residual_lower_bound(g, m, {1}, 1.0), 0.0);
  const auto cp1 = make_weight_model(2, 1, {1, 1}, {4 * kPi});
  EXPECT_FALSE(above_threshold(g, cp1, {2}, 1.0));
  EXPECT_TRUE(above_threshold(g, cp1, {1}, 1.0));
}

TEST(Solve, CP1RandomInit) {
  const auto g = make_torus(24, 24, 1, 1);
  const auto m = make_weight_model(2, 1, {1, 1}, {4 * kPi});
  const auto r = solve_vortex(g, m, {1}, InitSpec{}, SolveOptions{});
  EXPECT_TRUE(r.record.converged);
  EXPECT_LE(r.record.res_norm, 1e-8);
}

TEST(Moduli, DistinctPrescriptionsAreInequivalent) {
  const auto a = single_vortex(32, 4 * kPi, {0.5, 0.5});
  const auto b = single_vortex(32, 4 * kPi, {0.25, 0.75});
  ASSERT_TRUE(a.record.converged && b.record.converged);
  double diff = 0.0;
  for (std::size_t i = 0; i < a.state.z.v.size(); ++i)
    diff = std::max(diff, std::abs(std::abs(a.state.z.v[i]) - std::abs(b.state.z.v[i])));
  EXPECT_GT(diff, 1.0);
  EXPECT_NEAR(a.record.pairing, b.record.pairing, 1e-4 * a.record.pairing);
}

TEST(Moduli, TwoZerosStayNearPrescription) {
  // d = 2 needs tau Vol > 4 pi
  const auto g = make_torus(32, 32, 1, 1);
  const auto m = make_weight_model(1, 1, {1}, {6 * kPi});
  InitSpec in;
  in.kind = InitKind::zeros;
  in.points = {{0.3, 0.4}, {0.7, 0.65}};
  const auto r = solve_vortex(g, m, {2}, in, SolveOptions{});
  ASSERT_TRUE(r.record.converged);
  EXPECT_EQ(zero_count(r.state, m), 2);
  const auto z = zero_locations(r.state, m);
  ASSERT_EQ(z.size(), 2u);
  for (const auto& p : in.points) {
    const double dist = std::min(torus_distance(g, z[0], p), torus_distance(g, z[1], p));
    EXPECT_LE(dist, 2.0 / 32);
  }
}

TEST(Continuation, ScheduleValidation) {
  const auto sol = single_vortex(16);
  const auto m = make_weight_model(1, 1, {1}, {4 * kPi});
  EXPECT_THROW(epsilon_continuation(sol.state, m, {}, SolveOptions{}), InvalidArgument);
  EXPECT_THROW(epsilon_continuation(sol.state, m, {1, 1}, SolveOptions{}), InvalidArgument);
  EXPECT_THROW(epsilon_continuation(sol.state, m, {1, -0.5}, SolveOptions{}), InvalidArgument);
}

TEST(Continuation, HeadReproducesAndSupMuNonincreasing) {
  const auto sol = single_vortex(24);
  ASSERT_TRUE(sol.record.converged);
  const auto m = make_weight_model(1, 1, {1}, {4 * kPi});
  const auto rs = epsilon_continuation(sol.state, m, {1.0, 0.5, 0.25}, SolveOptions{});
  ASSERT_EQ(rs.size(), 3u);
  EXPECT_TRUE(rs[0].record.converged);
  EXPECT_NEAR(rs[0].record.energy, sol.record.energy, 1e-12 * sol.record.energy);
  for (std::size_t i = 1; i < rs.size(); ++i) {
    EXPECT_EQ(rs[i].record.control, i == 1 ? 0.5 : 0.25);
    EXPECT_LE(rs[i].record.sup_mu, rs[i - 1].record.sup_mu);
  }
}

TEST(TauScan, ThresholdPattern) {
  const auto g = make_torus(24, 24, 1, 1);
  const auto m = make_weight_model(1, 1, {1}, {1.0});
  SolveOptions o;
  o.max_iters = 800;
  o.max_restarts = 1;
  const std::vector<double> grid{kPi, 2 * kPi + 0.5, 4 * kPi};
  const auto rs = tau_scan(g, m, {1}, grid, o, 3);
  ASSERT_EQ(rs.size(), 3u);
  EXPECT_FALSE(rs[0].converged);
  EXPECT_TRUE(rs[1].converged);
  EXPECT_TRUE(rs[2].converged);
  EXPECT_GE(rs[0].dbar2 + rs[0].resid2, rs[0].residual_lower_bound * (1 - 1e-9));
  // converged pairings follow 2 pi tau d
  for (int i = 1; i < 3; ++i) EXPECT_NEAR(rs[i].pairing, 2 * kPi * grid[i], 5e-3 * rs[i].pairing);
  for (std::size_t i = 0; i < rs.size(); ++i) EXPECT_EQ(rs[i].control, grid[i]);
}

TEST(TauScan, DeterministicAcrossThreadCounts) {
  const auto g = make_torus(16, 16, 1, 1);
  const auto m = make_weight_model(1, 1, {1}, {1.0});
  SolveOptions o;
  o.max_iters = 300;
  o.max_restarts = 0;
  const std::vector<double> grid{3 * kPi, 4 * kPi, 5 * kPi};
  const auto a = tau_scan(g, m, {1}, grid, o, 1);
  const auto b = tau_scan(g, m, {1}, grid, o, 3);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_EQ(a[i].energy, b[i].energy);
    EXPECT_EQ(a[i].res_norm, b[i].res_norm);
    EXPECT_EQ(a[i].iterations, b[i].iterations);
  }
}
