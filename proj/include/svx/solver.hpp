#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "svx/linearization.hpp"
#include "svx/vortex.hpp"

namespace svx {

struct SolveOptions {
  int max_iters = 4000;        // descent iterations
  double grad_tol = 1e-3;      // L2 norm of the energy gradient that ends descent
  double basin_tol = 2.0;      // residual norm at which descent hands over to Newton
  int newton_iters = 40;
  double newton_tol = 1e-8;    // sqrt(dbar2 + resid2) that counts as converged
  double armijo = 1e-4;
  double backtracking = 0.5;
  double damping_floor = 1e-10;
  double linear_tol = 1e-2;    // relative, scaled by the current residual
  int linear_max_iters = 20000;
  int lbfgs_memory = 12;
  int max_restarts = 3;
  std::uint64_t seed = 1;
};

void validate_options(const SolveOptions& opts);

struct DescentStats {
  int accepted_steps = 0;
  double grad_norm = 0.0;
  double energy = 0.0;
  std::vector<double> energies;  // after every accepted step, starting with the input
};

/// L2 norm of the energy gradient, sqrt(sum |g|^2 / c).
double gradient_norm(const VortexState& state, const WeightModel& model);

/// Backtracking descent on the energy along limited-memory quasi-Newton
/// directions; every accepted step satisfies the Armijo condition. Stops at
/// grad_tol, or once residual_norm <= basin_tol: lattice solutions are only
/// approximately critical for E, and descending further slides zeros along
/// the moduli.
VortexState descend_energy(const VortexState& state, const WeightModel& model,
                           const SolveOptions& opts, DescentStats* stats = nullptr);

struct NewtonStats {
  int iterations = 0;
  std::vector<double> residuals;  // residual_norm before each step and at exit
  bool converged = false;
  VortexState last;  // iterate at exit, kept when Newton fails
};

/// Damped Newton on (res1, slice, res2) with inexact least-squares steps.
/// Throws SingularSystem for sections that vanish identically and
/// NoConvergence when the tolerance is not reached.
VortexState newton_refine(const VortexState& state, const WeightModel& model,
                          const SolveOptions& opts, NewtonStats* stats = nullptr);

struct ScanRecord {
  double control = 0.0;
  double res_norm = 0.0;
  double dbar2 = 0.0;
  double resid2 = 0.0;
  double energy = 0.0;
  double pairing = 0.0;
  double residual_lower_bound = 0.0;  // from the integrated curvature equation
  double sup_mu = 0.0;
  int iterations = 0;
  int restarts = 0;
  bool converged = false;
  bool above_threshold = true;
  std::vector<std::string> notes;
};

enum class InitKind { random, zeros, file };

struct InitSpec {
  InitKind kind = InitKind::random;
  std::vector<std::array<double, 2>> points;  // for zeros
  std::string path;                           // for file
};

/// Section with prescribed zeros of unit winding, compatible with the seam
/// twist of degree points.size(): phases from a product of theta functions,
/// modulus a product of tanh profiles. Further components get zero sets with
/// the same sum, shifted apart. Throws PointsTooClose.
SiteField prescribe_zeros(const TorusGeometry& geom, const WeightModel& model,
                          const std::vector<std::array<double, 2>>& points, double epsilon = 1.0);

/// Uniform-curvature connection of the given degree plus the constant flat
/// part for which a holomorphic section with these zeros exists (the sum of
/// the zeros is fixed by the holonomy). Rank-one models only.
LinkField connection_for_zeros(const TorusGeometry& geom, const WeightModel& model, int degree,
                               const std::vector<std::array<double, 2>>& points);

/// Seeded random zero positions, at least 3 spacings apart.
std::vector<std::array<double, 2>> random_points(const TorusGeometry& geom, int count,
                                                 std::uint64_t seed);

/// Whether tau Vol > 2 pi d eps^2 holds for every generator whose weights
/// share a sign (other generators are not classified).
bool above_threshold(const TorusGeometry& geom, const WeightModel& model,
                     const std::vector<int>& degree, double epsilon);

/// Lower bound on resid2 for every state of this degree (zero above the
/// threshold).
double residual_lower_bound(const TorusGeometry& geom, const WeightModel& model,
                            const std::vector<int>& degree, double epsilon);

/// Fills a record from a state.
ScanRecord make_record(const VortexState& state, const WeightModel& model, double control,
                       const SolveOptions& opts);

struct SolveResult {
  VortexState state;
  ScanRecord record;
};

/// Connection of the given degree, initial section, descent, Newton. Random
/// inits are retried with fresh seeds up to opts.max_restarts times.
SolveResult solve_vortex(const TorusGeometry& geom, const WeightModel& model,
                         const std::vector<int>& degree, const InitSpec& init,
                         const SolveOptions& opts, double epsilon = 1.0);

/// Descent then Newton from a given state; never throws on non-convergence.
SolveResult refine_state(const VortexState& state, const WeightModel& model,
                         const SolveOptions& opts, double control);

/// Warm-started solves along a strictly decreasing schedule of epsilon.
std::vector<SolveResult> epsilon_continuation(const VortexState& state, const WeightModel& model,
                                              const std::vector<double>& eps_schedule,
                                              const SolveOptions& opts);

/// One solve per tau; grid points run on up to `threads` workers, each with
/// its own seed stream, and results are stored by index.
std::vector<ScanRecord> tau_scan(const TorusGeometry& geom, const WeightModel& model_template,
                                 const std::vector<int>& degree,
                                 const std::vector<double>& tau_grid, const SolveOptions& opts,
                                 int threads = 1, double epsilon = 1.0);

}  // namespace svx
