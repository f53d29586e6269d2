#pragma once

// Linear torus actions on C^N with weight matrix W (N x r) and central
// shift tau. The Lie algebra of T^r is identified with R^r via xi = i xi_hat.
//
//   moment map     mu_j(z) = 1/2 sum_nu W_{nu j} |z_nu|^2 - tau_j
//   action field   X_xi(z)_nu = -i (W xi)_nu z_nu
//   symplectic     omega(v, w) = sum_nu Im(conj(v_nu) w_nu)
//
// With these choices d<mu, xi>(z) v = omega(X_xi(z), v).

#include <span>
#include <vector>

#include "svx/common.hpp"
#include "svx/lattice.hpp"

namespace svx {

struct WeightModel {
  WeightMatrix w;
  std::vector<double> tau;
  bool proper = false;
  std::vector<double> certificate;  // xi with (W xi)_nu > 0 when proper

  int n() const { return w.n; }
  int r() const { return w.r; }
};

/// Validates W (integer, no zero column) and tau, and runs properness_check.
WeightModel make_weight_model(int n, int r, std::vector<int> w, std::vector<double> tau);

std::vector<double> moment_map(const WeightModel& model, std::span<const cplx> z);

std::vector<cplx> infinitesimal_action(const WeightModel& model, std::span<const double> xi,
                                       std::span<const cplx> z);

double omega(std::span<const cplx> v, std::span<const cplx> w);

struct SwIdentity {
  double lhs = 0.0;
  double rhs = 0.0;
  double discrepancy = 0.0;
};

/// <z, (W mu) z> against 2 <mu, mu - mu(0)>; mu(0) = -tau is the central
/// element. Both sides are accumulated in extended precision.
SwIdentity sw_identity_check(const WeightModel& model, std::span<const cplx> z);

/// True iff some xi has (W xi)_nu > 0 for every nu. Exact for r <= 2
/// (integer candidates), phase-one simplex otherwise. On success the
/// certificate receives such a xi.
bool properness_check(const WeightMatrix& w, std::vector<double>* certificate = nullptr);

/// Upper bound on max |z|^2 at a vortex solution from the half-space
/// certificate: (<tau, xi> + |tau||xi|) / min_nu (W xi)_nu.
double sup_norm_bound(const WeightModel& model);

}  // namespace svx
