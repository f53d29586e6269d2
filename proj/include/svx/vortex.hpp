#pragma once

// Vortex residuals, the epsilon-weighted energy and its Bogomolny splitting.
//
// With c = hs*ht, D_s z, D_t z the forward covariant differences at a site,
// F the site-averaged curvature and mu the moment map at the site:
//
//   E      = 1/2 sum (|D_s z|^2 + |D_t z|^2 + eps^2 lambda^-2 F^2
//                     + eps^-2 lambda^2 |mu|^2) c
//   dbar2  = 1/2 sum |D_s z + i D_t z|^2 c            (= 2 sum |dbar z|^2 c)
//   resid2 = 1/2 sum eps^2 lambda^2 |lambda^-2 F + eps^-2 mu|^2 c
//   pairing=     sum (omega(D_s z, D_t z) - <F, mu>) c
//
// and E = dbar2 + resid2 + pairing holds site by site. In the continuum the
// pairing equals 2 pi <tau, d>; solutions need tau Vol > 2 pi d eps^2 when
// r = 1 and all weights are positive.

#include <vector>

#include "svx/lattice.hpp"
#include "svx/target.hpp"

namespace svx {

struct VortexState {
  TorusGeometry geom;
  SiteField z;
  LinkField a;
  double epsilon = 1.0;
};

struct EnergyBreakdown {
  double energy = 0.0;
  double dbar2 = 0.0;
  double resid2 = 0.0;
  double pairing = 0.0;
  double identity_gap = 0.0;
};

struct Residual {
  SiteField dbar;            // 1/2 (D_s z + i D_t z)
  std::vector<double> curv;  // lambda^-2 F + eps^-2 mu, per site and generator
};

/// Throws unless the state is finite and fits the model.
void validate_state(const VortexState& state, const WeightModel& model);

/// Moment map evaluated at every site, mu[k * r + j].
std::vector<double> moment_field(const WeightModel& model, const SiteField& z);

Residual residual(const VortexState& state, const WeightModel& model);

/// sqrt(dbar2 + resid2): the weighted residual norm used by the solvers.
double residual_norm(const VortexState& state, const WeightModel& model);

double energy(const VortexState& state, const WeightModel& model);

EnergyBreakdown energy_identity(const VortexState& state, const WeightModel& model);

double topological_pairing(const VortexState& state, const WeightModel& model);

/// Continuum value of the pairing, 2 pi <tau, d>.
double continuum_pairing(const WeightModel& model, const std::vector<int>& degree);

struct EnergyGradient {
  SiteField gz;  // dE = Re sum conj(gz) dz
  LinkField ga;  // dE = sum ga . da
};

EnergyGradient energy_gradient(const VortexState& state, const WeightModel& model);

struct SupBoundReport {
  double max_norm2 = 0.0;
  double bound = 0.0;
  double overshoot = 0.0;  // max_norm2 / bound - 1
  bool satisfied = false;
};

/// Maximum principle bound at a solution. Throws NotProper, or NotASolution
/// when residual_norm exceeds residual_tol.
SupBoundReport sup_bound_check(const VortexState& state, const WeightModel& model,
                               double residual_tol, double slack = 0.05);

/// Default zero threshold 0.1 sqrt(2 |tau|).
double default_zero_threshold(const WeightModel& model);

/// Gauge-invariant winding of component `component` around every plaquette.
/// A site where the component is exactly zero contributes the winding of the
/// ring around it to the plaquette it is the lower-left corner of.
std::vector<int> plaquette_winding(const VortexState& state, const WeightModel& model,
                                   int component = 0);

/// Sum of plaquette windings over cells whose corner minimum of |z_component|
/// is below theta. Throws AmbiguousZero when a winding cell has large modulus
/// or a cell winds more than once.
int zero_count(const VortexState& state, const WeightModel& model, int component = 0,
               double theta = -1.0);

/// Plaquette centers of the counted zeros, repeated by multiplicity.
std::vector<std::array<double, 2>> zero_locations(const VortexState& state,
                                                  const WeightModel& model, int component = 0,
                                                  double theta = -1.0);

/// Minimum-image distance between two points of the torus.
double torus_distance(const TorusGeometry& geom, std::array<double, 2> p, std::array<double, 2> q);

}  // namespace svx
