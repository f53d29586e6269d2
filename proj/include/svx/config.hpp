#pragma once

// Run configuration for the command-line tool. A config is a JSON object with
// an explicit "schema_version"; every block is optional at parse time and
// each command checks for the blocks it needs. Unknown keys are errors.
//
// Environment overrides (applied after the file, before command-line flags):
//   SVX_SEED, SVX_THREADS, SVX_OUT

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "svx/lattice.hpp"
#include "svx/solver.hpp"
#include "svx/target.hpp"

namespace svx {

inline constexpr int kConfigSchemaVersion = 1;

struct GeometrySpec {
  int ns = 32;
  int nt = 32;
  double ls = 1.0;
  double lt = 1.0;
  LambdaSpec lambda;
};

struct ModelSpec {
  int n = 0;
  int r = 0;
  std::vector<int> weights;  // row-major n x r
  std::vector<double> tau;
  double epsilon = 1.0;
};

struct SolveSpec {
  std::vector<int> degree;
  InitSpec init;
  SolveOptions options;
};

struct IndexSpec {
  long long g = 1;
  long long n = 1;
  long long dim_g = 1;
  long long c1b = 0;
  long long k = 0;
  bool probe = false;          // solve at geometry/model/solve and run the spectral probe
  int expected_dim = -1;       // defaults to the formula value
  double theta_low_rel = 1e-6; // relative to the operator norm
  double gap = 10.0;           // theta_high = gap * theta_low
};

struct BalanceSpec {
  std::string atoms;  // CSV with columns x,y,z,w
  double tol = 1e-10;
  int flow_steps = 100;
};

struct FlowSpec {
  std::string hamiltonian;
  std::vector<cplx> x;
  std::vector<double> eta;
  std::optional<std::array<double, 2>> separatrix;  // (a, p0), W = [1] only
  double dt = 1e-3;
  int steps = 1000;
  double tol = 1e-6;
};

struct CheckSpec {
  std::string snapshot;
  double residual_tol = 1e-6;
  int gauge_samples = 1;
};

struct RunConfig {
  int schema_version = kConfigSchemaVersion;
  std::optional<std::uint64_t> seed;
  std::string output_dir = "out";
  int threads = 1;
  std::optional<GeometrySpec> geometry;
  std::optional<ModelSpec> model;
  std::optional<SolveSpec> solve;
  std::vector<double> tau_grid;
  std::vector<double> eps_schedule;
  std::optional<IndexSpec> index;
  std::optional<BalanceSpec> balance;
  std::optional<FlowSpec> flow;
  std::optional<CheckSpec> check;
};

/// Parses and validates a config document. Relative paths inside the config
/// are resolved against base_dir. Throws ConfigError.
RunConfig parse_config(const std::string& text, const std::string& base_dir = ".");

RunConfig load_config(const std::string& path);

/// Applies SVX_SEED, SVX_THREADS and SVX_OUT from the process environment.
void apply_env_overrides(RunConfig& cfg);

TorusGeometry build_geometry(const RunConfig& cfg);
WeightModel build_model(const RunConfig& cfg);

}  // namespace svx
