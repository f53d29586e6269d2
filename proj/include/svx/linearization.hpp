#pragma once

// Linearization of the vortex residual with the gauge slice appended.
//
// Unknown layout (S sites): [xi_re (S*N) | xi_im (S*N) | alpha_s (S*r) | alpha_t (S*r)],
// site-major inside each block (index k*N + nu or k*r + j).
// Row layout: [res1_re (S*N) | res1_im (S*N) | slice (S*r) | res2 (S*r)].
//
//   res1  : 1/2 (dD_s + i dD_t),  dD_s = (U xi(k+s) - xi(k))/hs - i (W alpha_s) U z(k+s)
//   slice : lambda^2 L*xi + div alpha,  (L*xi)_j = -sum_nu W_{nu j} Im(conj z_nu xi_nu)
//   res2  : lambda^-2 dF + eps^-2 sum_nu W_{nu j} Re(conj z_nu xi_nu)
//
// The J-derivative terms of the linearized dbar operator vanish for the
// constant complex structure on C^N and are not assembled.

#include <Eigen/SparseCore>
#include <cstdint>
#include <string>
#include <vector>

#include "svx/vortex.hpp"

namespace svx {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct LinearizedOp {
  SparseRowMatrix m;
  int sites = 0;
  int n = 0;
  int r = 0;

  int xi_re(int k, int nu) const { return k * n + nu; }
  int xi_im(int k, int nu) const { return sites * n + k * n + nu; }
  int alpha_s(int k, int j) const { return 2 * sites * n + k * r + j; }
  int alpha_t(int k, int j) const { return 2 * sites * n + sites * r + k * r + j; }
  int res1_re(int k, int nu) const { return xi_re(k, nu); }
  int res1_im(int k, int nu) const { return xi_im(k, nu); }
  int slice(int k, int j) const { return alpha_s(k, j); }
  int res2(int k, int j) const { return alpha_t(k, j); }
  int size() const { return (2 * n + 2 * r) * sites; }
};

LinearizedOp assemble_D(const VortexState& state, const WeightModel& model);

/// Residual (res1, 0, res2) in the row layout of assemble_D.
Eigen::VectorXd residual_vector(const VortexState& state, const WeightModel& model);

/// Row weights turning the Euclidean norm of a row vector into the
/// energy-weighted norm: res1 rows sqrt(2c), slice sqrt(c),
/// res2 rows sqrt(eps^2 lambda^2 c / 2).
Eigen::VectorXd row_weights(const VortexState& state);

/// state + t * v for a vector in the column layout.
VortexState perturb(const VortexState& state, const Eigen::VectorXd& v, double t);

/// Infinitesimal gauge direction (i W g z, dg) in the column layout.
Eigen::VectorXd gauge_direction(const VortexState& state, const WeightModel& model,
                                const GaugeMap& g);

struct IndexReport {
  std::vector<double> singular_values;  // ascending; values above theta_high are upper bounds
  double op_norm = 0.0;
  double theta_low = 0.0;
  double theta_high = 0.0;
  double gap_ratio = 0.0;  // next / last-small, or next / theta_low when none are small
  int inferred_dimension = 0;
  bool certified = false;
};

/// Smallest expected_dim + 2 singular values by shift-invert subspace
/// iteration on D^T D.
IndexReport moduli_dimension_probe(const LinearizedOp& op, double theta_low, double theta_high,
                                   int expected_dim, std::uint64_t seed = 1);

/// Largest singular value by power iteration on D^T D.
double operator_norm(const LinearizedOp& op, std::uint64_t seed = 1);

/// (2 - 2g)(n - dimG) + 2 c1B + k (2 + dimG).
long long index_formula(long long g, long long n, long long dim_g, long long c1b, long long k);

/// <c1^G, B> of the section class for a weight model: sum_nu (W d)_nu.
long long equivariant_c1(const WeightMatrix& w, const std::vector<int>& degree);

/// Coordinate text format: header line "rows cols nnz", then "row col value".
std::string export_coo(const LinearizedOp& op);

}  // namespace svx
