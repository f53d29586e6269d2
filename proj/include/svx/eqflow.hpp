#pragma once

// Equivariant gradient flow on C^n x R^r:
//
//   x' = grad H(x) - J X_eta(x) = grad H(x) - (W eta) x,    eta' = -mu(x)
//
// the negative gradient flow of L(x, eta) = <mu(x), eta> - H(x) in the product
// metric, so L is nonincreasing. Its rest points satisfy grad H = J X_eta and
// mu = 0; for H = a |x|^2 / 2 with W = [1] they are saddles (eigenvalues
// +-sqrt(2 tau) in the (log|x|^2, eta) plane), so only starts on the stable
// separatrix converge.

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "svx/target.hpp"

namespace svx {

struct FlowState {
  std::vector<cplx> x;
  std::vector<double> eta;
  double t = 0.0;
};

/// G-invariant Hamiltonian given by a polynomial in p_nu = |x_nu|^2.
class InvariantHamiltonian {
 public:
  /// Grammar: expr := term (('+'|'-') term)*, term := factor ('*' factor)*,
  /// factor := unary ('^' nonnegative integer)?, unary := '-' unary | atom,
  /// atom := number | 'p' index | '(' expr ')'.
  static InvariantHamiltonian parse(const std::string& text, int n);
  /// a_nu |x_nu|^2 / 2 summed.
  static InvariantHamiltonian quadratic(const std::vector<double>& a);

  double value(const std::vector<cplx>& x) const;
  /// Real gradient written as a complex vector: 2 dH/dp_nu x_nu.
  std::vector<cplx> gradient(const std::vector<cplx>& x) const;
  int n() const { return n_; }
  const std::string& text() const { return text_; }

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
  int n_ = 0;
  std::string text_;
};

/// max |H(exp(-i W theta) x) - H(x)| over `samples` random (theta, x).
double invariance_defect(const InvariantHamiltonian& h, const WeightModel& model, int samples,
                         std::uint64_t seed);

/// L(x, eta) = <mu(x), eta> - H(x).
double flow_functional(const FlowState& s, const WeightModel& model,
                       const InvariantHamiltonian& h);

struct Trajectory {
  std::vector<FlowState> states;  // initial state first
  std::vector<double> functional;
};

/// Classical RK4 with fixed step; a step producing non-finite values is
/// retried with halved steps. Throws StepBlowup when |x| + |eta| exceeds 1e8.
Trajectory flow_integrate(const FlowState& start, const WeightModel& model,
                          const InvariantHamiltonian& h, double dt, int steps);

bool critical_check(const std::vector<cplx>& x, const std::vector<double>& eta,
                    const WeightModel& model, const InvariantHamiltonian& h, double tol);

/// Start on the stable separatrix of the rest point |x|^2 = 2 tau, eta = a for
/// W = [1], H = a |x|^2 / 2, at |x|^2 = p0 (p0 != 2 tau).
FlowState separatrix_start(double tau, double a, double p0);

/// Real coordinates (re_0, im_0, re_1, im_1, ...) of C^n.
Eigen::VectorXd to_real(const std::vector<cplx>& x);

/// Action of exp(-i W theta) as a real 2n x 2n matrix.
Eigen::MatrixXd group_matrix(const WeightModel& model, const std::vector<double>& theta);

/// Nondegeneracy of a relative fixed point: dfx - g0 must induce an
/// invertible map ker dmu(x)/im L_x -> ker dmu(g0 x)/im L_{g0 x}. Both
/// quotients are represented by ker dmu intersected with (im L)^perp; the
/// test is sigma_min > tol, vacuously true for a zero-dimensional quotient.
bool nondeg_check(const Eigen::MatrixXd& dfx, const std::vector<cplx>& x,
                  const Eigen::MatrixXd& g0_action, const WeightModel& model, double tol);

/// Orthonormal basis (columns) of ker dmu(x) intersected with (im L_x)^perp.
Eigen::MatrixXd quotient_basis(const std::vector<cplx>& x, const WeightModel& model);

}  // namespace svx
