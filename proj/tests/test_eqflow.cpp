#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "svx/eqflow.hpp"

using namespace svx;

TEST(Hamiltonian, ParsesAndDifferentiates) {
  const auto h = InvariantHamiltonian::parse("2*p0^2 - (p1 + 0.5) * p0 + 3 - -p1", 2);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 20; ++i) {
    std::vector<cplx> x{cplx(nd(rng), nd(rng)), cplx(nd(rng), nd(rng))};
    const double p0 = std::norm(x[0]), p1 = std::norm(x[1]);
    EXPECT_NEAR(h.value(x), 2 * p0 * p0 - (p1 + 0.5) * p0 + 3 + p1, 1e-12);
    const auto g = h.gradient(x);
    // real directional derivatives against central differences
    const double step = 1e-6;
    for (int nu = 0; nu < 2; ++nu)
      for (cplx dir : {cplx(1, 0), cplx(0, 1)}) {
        auto xp = x, xm = x;
        xp[nu] += step * dir;
        xm[nu] -= step * dir;
        const double fd = (h.value(xp) - h.value(xm)) / (2 * step);
        EXPECT_NEAR((std::conj(g[nu]) * dir).real(), fd, 1e-5 * (1 + std::abs(fd)));
      }
  }
}

TEST(Hamiltonian, QuadraticHelper) {
  const auto h = InvariantHamiltonian::quadratic({3.0, 0.5});
  const std::vector<cplx> x{cplx(1, 2), cplx(0, -1)};
  EXPECT_NEAR(h.value(x), 1.5 * 5 + 0.25 * 1, 1e-14);
  EXPECT_EQ(h.n(), 2);
}

TEST(Hamiltonian, RejectsBadInput) {
  EXPECT_THROW(InvariantHamiltonian::parse("p2", 2), InvalidArgument);
  EXPECT_THROW(InvariantHamiltonian::parse("p0 +", 1), InvalidArgument);
  EXPECT_THROW(InvariantHamiltonian::parse("(p0", 1), InvalidArgument);
  EXPECT_THROW(InvariantHamiltonian::parse("p0^-1", 1), InvalidArgument);
  EXPECT_THROW(InvariantHamiltonian::parse("x0", 1), InvalidArgument);
  EXPECT_THROW(InvariantHamiltonian::parse("p0 p0", 1), InvalidArgument);
  EXPECT_THROW(InvariantHamiltonian::parse("p0", 0), InvalidArgument);
}

TEST(Hamiltonian, FunctionsOfModuliAreInvariant) {
  const auto m = make_weight_model(3, 2, {1, 0, 2, 1, -1, 3}, {1.0, 2.0});
  const auto h = InvariantHamiltonian::parse("p0*p1^2 - 4*p2 + p0^3", 3);
  EXPECT_LE(invariance_defect(h, m, 200, 5), 1e-10 * 1e3);
}

TEST(Flow, StationaryWhenCritical) {
  const auto m = make_weight_model(1, 1, {1}, {2.0});
  const auto h = InvariantHamiltonian::parse("0", 1);
  const FlowState s{{cplx(0.0, 2.0)}, {0.0}, 0.0};
  const auto tr = flow_integrate(s, m, h, 1e-2, 100);
  for (const auto& st : tr.states) {
    EXPECT_EQ(st.x[0], s.x[0]);
    EXPECT_EQ(st.eta[0], 0.0);
  }
}

TEST(Flow, SeparatrixConvergesToRelativeFixedPoint) {
  const double tau = 1.0, a = 1.5;
  const auto m = make_weight_model(1, 1, {1}, {tau});
  const auto h = InvariantHamiltonian::quadratic({a});
  const double rate = std::sqrt(2 * tau);
  for (double p0 : {0.5, 4.0}) {
    const auto tr = flow_integrate(separatrix_start(tau, a, p0), m, h, 1e-3,
                                   static_cast<int>(17.0 / rate / 1e-3));
    const auto& end = tr.states.back();
    EXPECT_NEAR(std::norm(end.x[0]), 2 * tau, 1e-6) << "p0 " << p0;
    // stationarity a x = (W eta) x gives eta* = a
    EXPECT_NEAR(end.eta[0], a, 1e-6);
    EXPECT_TRUE(critical_check(end.x, end.eta, m, h, 1e-6));
    for (std::size_t i = 1; i < tr.functional.size(); ++i)
      ASSERT_LE(tr.functional[i] - tr.functional[i - 1], 1e-9) << "step " << i;
  }
}

TEST(Flow, FunctionalDecreasesFromGenericStart) {
  const auto m = make_weight_model(2, 1, {1, 2}, {3.0});
  const auto h = InvariantHamiltonian::parse("0.3*p0 + 0.1*p1^2 - 0.05*p0*p1", 2);
  const FlowState s{{cplx(0.3, 0.1), cplx(-0.2, 0.4)}, {0.2}, 0.0};
  const auto tr = flow_integrate(s, m, h, 1e-3, 2000);
  for (std::size_t i = 1; i < tr.functional.size(); ++i)
    ASSERT_LE(tr.functional[i] - tr.functional[i - 1], 1e-9);
}

TEST(Flow, Equivariance) {
  const auto m = make_weight_model(2, 1, {1, 2}, {3.0});
  const auto h = InvariantHamiltonian::parse("0.3*p0 + 0.1*p1^2", 2);
  const FlowState s{{cplx(0.3, 0.1), cplx(-0.2, 0.4)}, {0.2}, 0.0};
  const double th = 0.7;
  FlowState r = s;
  for (int nu = 0; nu < 2; ++nu) r.x[nu] *= std::polar(1.0, -m.w(nu, 0) * th);
  const auto a = flow_integrate(s, m, h, 1e-3, 1000).states.back();
  const auto b = flow_integrate(r, m, h, 1e-3, 1000).states.back();
  for (int nu = 0; nu < 2; ++nu)
    EXPECT_LE(std::abs(a.x[nu] * std::polar(1.0, -m.w(nu, 0) * th) - b.x[nu]), 1e-8);
  EXPECT_LE(std::abs(a.eta[0] - b.eta[0]), 1e-8);
}

TEST(Flow, Errors) {
  const auto m = make_weight_model(1, 1, {1}, {1.0});
  const auto h = InvariantHamiltonian::quadratic({1.0});
  const FlowState s{{cplx(1, 0)}, {0.0}, 0.0};
  EXPECT_THROW(flow_integrate(s, m, h, 0.0, 10), InvalidArgument);
  EXPECT_THROW(flow_integrate(FlowState{{cplx(1, 0)}, {0.0, 1.0}, 0.0}, m, h, 1e-3, 10), ShapeMismatch);
  // H = p^3 drives |x| to infinity in finite time
  const auto blow = InvariantHamiltonian::parse("p0^3", 1);
  EXPECT_THROW(flow_integrate(FlowState{{cplx(2, 0)}, {0.0}, 0.0}, m, blow, 1e-2, 10000), StepBlowup);
}

TEST(CriticalCheck, Examples) {
  const auto m = make_weight_model(1, 1, {1}, {1.0});
  const auto h = InvariantHamiltonian::quadratic({1.5});
  EXPECT_FALSE(critical_check({cplx(0, 0)}, {0.0}, m, h, 1e-6));
  EXPECT_FALSE(critical_check({cplx(0.3, 0.8)}, {0.1}, m, h, 1e-6));
  EXPECT_TRUE(critical_check({std::polar(std::sqrt(2.0), 0.3)}, {1.5}, m, h, 1e-12));
}

TEST(Nondegeneracy, ZeroDimensionalQuotient) {
  const auto m = make_weight_model(1, 1, {1}, {1.0});
  const std::vector<cplx> x{cplx(std::sqrt(2.0), 0)};
  const Eigen::MatrixXd g0 = group_matrix(m, {0.4});
  EXPECT_EQ(quotient_basis(x, m).cols(), 0);
  EXPECT_TRUE(nondeg_check(g0, x, g0, m, 1e-8));
}

TEST(Nondegeneracy, TwoDimensionalQuotient) {
  const auto m = make_weight_model(2, 1, {1, 1}, {1.0});
  const std::vector<cplx> x{cplx(1, 0), cplx(0, 1)};
  const Eigen::MatrixXd g0 = group_matrix(m, {0.9});
  const Eigen::MatrixXd p = quotient_basis(x, m);
  ASSERT_EQ(p.cols(), 2);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(4, 4);

  // f equal to the group action: dfx - g0 vanishes on the quotient
  EXPECT_FALSE(nondeg_check(g0, x, g0, m, 1e-8));
  // identity added along the quotient directions
  EXPECT_TRUE(nondeg_check(g0 * (id + p * p.transpose()), x, g0, m, 1e-8));

  // send the first quotient vector into the orbit direction at g0 x
  const Eigen::VectorXd y = g0 * to_real(x);
  Eigen::VectorXd orbit(4);
  for (int nu = 0; nu < 2; ++nu) {
    orbit[2 * nu] = y[2 * nu + 1];  // -i y
    orbit[2 * nu + 1] = -y[2 * nu];
  }
  const Eigen::MatrixXd bad =
      g0 + g0 * p.col(1) * p.col(1).transpose() + orbit * p.col(0).transpose();
  EXPECT_FALSE(nondeg_check(bad, x, g0, m, 1e-8));

  EXPECT_THROW(nondeg_check(Eigen::MatrixXd::Identity(3, 3), x, g0, m, 1e-8), ShapeMismatch);
}
