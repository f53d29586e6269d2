#pragma once

// Balancing an atomic measure on S^2 by the fractional linear maps
//
//   phi_eta(x) = [ s x + (<x,eta>/(1+s) - 1) eta ] / (1 - <x,eta>),  s = sqrt(1 - |eta|^2)
//
// parametrized by the open unit ball. This is the closed form
// sqrt(1-|eta|^2)/(1-<x,eta>) x_perp + (<x,e> - |eta|)/(1-<x,eta>) e, e = eta/|eta|,
// rewritten without the removable singularity at eta = 0. The inverse is
// phi_{-eta}; it is verified numerically and a per-point Newton inversion is
// used if the check ever fails.

#include <array>
#include <complex>
#include <cstdint>
#include <vector>

#include "svx/common.hpp"

namespace svx {

using Vec3 = std::array<double, 3>;

struct WeightedSphereMeasure {
  std::vector<Vec3> points;
  std::vector<double> weights;
};

/// Throws InvalidArgument unless points are unit vectors (1e-12), weights are
/// positive and the lists agree in length.
void validate_measure(const WeightedSphereMeasure& m);

WeightedSphereMeasure octahedron_measure();

struct BalancePoint {
  Vec3 eta{0.0, 0.0, 0.0};
  double residual = 0.0;  // |m(eta)|
  int iterations = 0;
  bool used_homotopy = false;
};

struct BalanceOptions {
  int max_iters = 200;
  int homotopy_steps = 32;
  Vec3 start{0.0, 0.0, 0.0};
  double radius_cap = 1.0 - 1e-6;
};

Vec3 mobius_map(const Vec3& eta, const Vec3& x);

/// phi_eta^{-1}(x); phi_{-eta} after the inverse identity has been checked.
Vec3 mobius_inverse(const Vec3& eta, const Vec3& x);

/// Jacobian d phi_eta(x) / d eta, row i = component, column k = eta_k.
std::array<Vec3, 3> mobius_jacobian(const Vec3& eta, const Vec3& x);

struct ExtendedComplex {
  std::complex<double> value;
  bool infinite = false;
};

ExtendedComplex stereographic(const Vec3& x);

/// m(eta) = sum w phi_eta^{-1}(x) / sum w.
Vec3 center_of_mass(const Vec3& eta, const WeightedSphereMeasure& m);

/// Damped Newton on m(eta) = 0 with |eta| capped below 1; falls back to a
/// homotopy from the octahedron measure, then to a start at the conformal
/// barycenter. Throws NoConvergence when tol is not met.
BalancePoint balance(const WeightedSphereMeasure& m, double tol, const BalanceOptions& opts = {});

struct FlowMonotonicity {
  std::vector<double> values;  // <eta, m(lambda(t) eta)> on the time grid
  double min_increment = 0.0;
  bool monotone = false;
  bool strictly_increasing = false;
};

/// The flow phi_t = phi_{lambda(t) eta}, lambda(t) = tanh(|eta| t)/|eta|,
/// on [0, T] with lambda(T) = 1, sampled in `steps` equal steps.
FlowMonotonicity flow_monotonicity_check(const WeightedSphereMeasure& m, const Vec3& eta,
                                         int steps);

/// Root of the axial balance equation <e, m(t e)> = 0 for t in (-1, 1) by
/// bisection; returns false if the function has no sign change.
bool axial_bisection(const WeightedSphereMeasure& m, const Vec3& axis, double tol, double* root);

}  // namespace svx
