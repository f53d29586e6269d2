#include "svx/commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "svx/eqflow.hpp"
#include "svx/field_io.hpp"
#include "svx/mobius.hpp"

namespace svx {

namespace {

using json = nlohmann::json;

std::string out_path(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.output_dir);
  return (std::filesystem::path(cfg.output_dir) / name).string();
}

void write_json(const RunConfig& cfg, const std::string& name, const json& j) {
  atomic_write(out_path(cfg, name), j.dump(2) + "\n");
}

void write_jsonl(const RunConfig& cfg, const std::string& name, const std::vector<json>& lines) {
  std::string s;
  for (const auto& l : lines) s += l.dump() + "\n";
  atomic_write(out_path(cfg, name), s);
}

std::string csv_num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

json to_json(const ScanRecord& r) {
  return json{{"control", r.control},
              {"res_norm", r.res_norm},
              {"dbar2", r.dbar2},
              {"resid2", r.resid2},
              {"energy", r.energy},
              {"pairing", r.pairing},
              {"residual_lower_bound", r.residual_lower_bound},
              {"sup_mu", r.sup_mu},
              {"iterations", r.iterations},
              {"restarts", r.restarts},
              {"converged", r.converged},
              {"above_threshold", r.above_threshold},
              {"notes", r.notes}};
}

json to_json(const EnergyBreakdown& e) {
  return json{{"energy", e.energy},
              {"dbar2", e.dbar2},
              {"resid2", e.resid2},
              {"pairing", e.pairing},
              {"identity_gap", e.identity_gap}};
}

json to_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

std::uint64_t need_seed(const RunConfig& cfg, const std::string& cmd) {
  if (!cfg.seed) throw ConfigError(cmd + " uses random numbers and needs a seed (config, SVX_SEED or --seed)");
  return *cfg.seed;
}

const SolveSpec& need_solve(const RunConfig& cfg) {
  if (!cfg.solve) throw ConfigError("this command needs a solve block");
  return *cfg.solve;
}

SolveOptions options_for(const RunConfig& cfg, std::uint64_t seed) {
  SolveOptions o = need_solve(cfg).options;
  o.seed = seed;
  validate_options(o);
  return o;
}

int cmd_solve(const RunConfig& cfg, std::ostream& out) {
  const auto seed = need_seed(cfg, "solve");
  const auto geom = build_geometry(cfg);
  const auto model = build_model(cfg);
  const auto& spec = need_solve(cfg);
  const auto opts = options_for(cfg, seed);
  const SolveResult res = solve_vortex(geom, model, spec.degree, spec.init, opts, cfg.model->epsilon);

  const EnergyBreakdown e = energy_identity(res.state, model);
  json summary = to_json(e);
  summary["converged"] = res.record.converged;
  summary["continuum_pairing"] = continuum_pairing(model, spec.degree);
  summary["notes"] = res.record.notes;
  write_snapshot(out_path(cfg, "state.snap"), res.state);
  write_json(cfg, "energy.json", summary);
  write_jsonl(cfg, "record.jsonl", {to_json(res.record)});
  atomic_write(out_path(cfg, "section.csv"), section_csv(res.state.geom, res.state.z));

  out << "converged=" << (res.record.converged ? "true" : "false")
      << " res_norm=" << res.record.res_norm << " energy=" << e.energy
      << " pairing=" << e.pairing << "\n";
  for (const auto& n : res.record.notes) out << "note: " << n << "\n";
  return res.record.converged ? kExitOk : kExitNegative;
}

int cmd_check(const RunConfig& cfg, const CommandArgs& args, std::ostream& out) {
  std::string snap = args.snapshot;
  CheckSpec spec = cfg.check.value_or(CheckSpec{});
  if (snap.empty()) snap = spec.snapshot;
  if (snap.empty()) throw ConfigError("check needs a snapshot (check.snapshot or --snapshot)");
  const auto seed = need_seed(cfg, "check");
  const auto model = build_model(cfg);
  const VortexState st = read_snapshot(snap);
  validate_state(st, model);
  const EnergyBreakdown e = energy_identity(st, model);
  const double scale = std::max(1.0, std::abs(e.energy));

  json checks;
  bool all = true;
  const bool id_ok = e.identity_gap <= 1e-10 * scale;
  checks["energy_identity"] = {{"pass", id_ok}, {"identity_gap", e.identity_gap}};
  all = all && id_ok;

  // random gauge, recompute, then undo
  {
    std::mt19937_64 rng(derive_seed(seed, 0));
    std::uniform_real_distribution<double> u(-kPi, kPi);
    double worst_inv = 0.0, worst_round = 0.0;
    for (int s = 0; s < std::max(1, spec.gauge_samples); ++s) {
      GaugeMap g(st.geom.num_sites(), st.a.r);
      for (auto& x : g.g) x = u(rng);
      auto [z1, a1] = gauge_transform(st.geom, g, model.w, st.z, st.a);
      VortexState moved{st.geom, z1, a1, st.epsilon};
      const EnergyBreakdown e1 = energy_identity(moved, model);
      for (auto [x, y] : {std::pair{e.energy, e1.energy}, std::pair{e.pairing, e1.pairing},
                          std::pair{e.dbar2, e1.dbar2}, std::pair{e.resid2, e1.resid2}})
        worst_inv = std::max(worst_inv, std::abs(x - y) / scale);
      GaugeMap back = g;
      for (auto& x : back.g) x = -x;
      auto [z2, a2] = gauge_transform(st.geom, back, model.w, z1, a1);
      for (std::size_t m = 0; m < z2.v.size(); ++m) worst_round = std::max(worst_round, std::abs(z2.v[m] - st.z.v[m]));
      for (std::size_t m = 0; m < a2.as.size(); ++m)
        worst_round = std::max({worst_round, std::abs(a2.as[m] - st.a.as[m]), std::abs(a2.at[m] - st.a.at[m])});
    }
    const bool ok = worst_inv <= 1e-10 && worst_round <= 1e-9;
    checks["gauge_round_trip"] = {{"pass", ok}, {"invariance_defect", worst_inv}, {"round_trip_error", worst_round}};
    all = all && ok;
  }

  const double res = residual_norm(st, model);
  const bool res_ok = res <= spec.residual_tol;
  checks["residual"] = {{"pass", res_ok}, {"res_norm", res}, {"tol", spec.residual_tol}};
  all = all && res_ok;

  if (res_ok) {
    const SupBoundReport sb = sup_bound_check(st, model, spec.residual_tol);
    checks["sup_bound"] = {{"pass", sb.satisfied}, {"max_norm2", sb.max_norm2}, {"bound", sb.bound},
                           {"overshoot", sb.overshoot}};
    all = all && sb.satisfied;
  } else {
    checks["sup_bound"] = {{"pass", false}, {"reason", "NotASolution"}};
    all = false;
  }

  long long expected = 0;
  for (int j = 0; j < model.r(); ++j) expected += static_cast<long long>(model.w(0, j)) * st.a.degree[j];
  try {
    const int zc = zero_count(st, model, 0);
    const bool ok = zc == expected;
    checks["zero_count"] = {{"pass", ok}, {"count", zc}, {"expected", expected}};
    all = all && ok;
  } catch (const AmbiguousZero& ex) {
    checks["zero_count"] = {{"pass", false}, {"reason", std::string("AmbiguousZero: ") + ex.what()}};
    all = false;
  }

  json verdict{{"snapshot", std::filesystem::path(snap).filename().string()}, {"checks", checks}, {"pass", all}};
  write_json(cfg, "check.json", verdict);
  out << (all ? "PASS" : "FAIL") << "\n";
  return all ? kExitOk : kExitNegative;
}

int cmd_scan_tau(const RunConfig& cfg, std::ostream& out) {
  const auto seed = need_seed(cfg, "scan-tau");
  if (cfg.tau_grid.empty()) throw ConfigError("scan-tau needs scan.tau");
  const auto geom = build_geometry(cfg);
  const auto model = build_model(cfg);
  const auto& spec = need_solve(cfg);
  const auto recs = tau_scan(geom, model, spec.degree, cfg.tau_grid, options_for(cfg, seed),
                             cfg.threads, cfg.model->epsilon);
  std::vector<json> lines;
  std::string csv = "tau,res_norm,energy,pairing,residual_lower_bound,converged\n";
  for (const auto& r : recs) {
    lines.push_back(to_json(r));
    csv += csv_num(r.control) + "," + csv_num(r.res_norm) + "," + csv_num(r.energy) + "," +
           csv_num(r.pairing) + "," + csv_num(r.residual_lower_bound) + "," + (r.converged ? "1" : "0") + "\n";
    out << "tau=" << r.control << " converged=" << (r.converged ? "true" : "false")
        << " res_norm=" << r.res_norm << "\n";
  }
  write_jsonl(cfg, "scan_tau.jsonl", lines);
  atomic_write(out_path(cfg, "scan_tau.csv"), csv);
  return kExitOk;
}

int cmd_scan_eps(const RunConfig& cfg, std::ostream& out) {
  const auto seed = need_seed(cfg, "scan-eps");
  if (cfg.eps_schedule.empty()) throw ConfigError("scan-eps needs eps.schedule");
  const auto geom = build_geometry(cfg);
  const auto model = build_model(cfg);
  const auto& spec = need_solve(cfg);
  const auto opts = options_for(cfg, seed);
  // validate the schedule before the (expensive) first solve
  for (std::size_t i = 0; i < cfg.eps_schedule.size(); ++i)
    if (!(cfg.eps_schedule[i] > 0.0) || (i > 0 && !(cfg.eps_schedule[i] < cfg.eps_schedule[i - 1])))
      throw ConfigError("eps.schedule must be positive and strictly decreasing");
  const SolveResult first = solve_vortex(geom, model, spec.degree, spec.init, opts, cfg.eps_schedule[0]);
  const auto results = epsilon_continuation(first.state, model, cfg.eps_schedule, opts);
  std::vector<json> lines;
  std::string csv = "epsilon,sup_mu,res_norm,energy,converged\n";
  bool all = true;
  for (const auto& r : results) {
    lines.push_back(to_json(r.record));
    csv += csv_num(r.record.control) + "," + csv_num(r.record.sup_mu) + "," + csv_num(r.record.res_norm) +
           "," + csv_num(r.record.energy) + "," + (r.record.converged ? "1" : "0") + "\n";
    out << "epsilon=" << r.record.control << " sup_mu=" << r.record.sup_mu
        << " converged=" << (r.record.converged ? "true" : "false") << "\n";
    all = all && r.record.converged;
  }
  write_jsonl(cfg, "scan_eps.jsonl", lines);
  atomic_write(out_path(cfg, "scan_eps.csv"), csv);
  return all ? kExitOk : kExitNegative;
}

int cmd_index(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.index) throw ConfigError("index needs an index block");
  const IndexSpec& s = *cfg.index;
  const long long idx = index_formula(s.g, s.n, s.dim_g, s.c1b, s.k);
  json j{{"index", idx}, {"g", s.g}, {"n", s.n}, {"dim_g", s.dim_g}, {"c1b", s.c1b}, {"k", s.k}};
  out << idx << "\n";
  if (s.probe) {
    const auto seed = need_seed(cfg, "index probe");
    const auto geom = build_geometry(cfg);
    const auto model = build_model(cfg);
    const auto& spec = need_solve(cfg);
    const SolveResult res =
        solve_vortex(geom, model, spec.degree, spec.init, options_for(cfg, seed), cfg.model->epsilon);
    if (!res.record.converged) {
      j["probe"] = {{"status", "no_solution"}, {"notes", res.record.notes}};
      write_json(cfg, "index.json", j);
      return kExitNegative;
    }
    const LinearizedOp op = assemble_D(res.state, model);
    const double norm = operator_norm(op, seed);
    const double lo = s.theta_low_rel * norm;
    const int expected = s.expected_dim >= 0 ? s.expected_dim : static_cast<int>(std::max(0LL, idx));
    const IndexReport rep = moduli_dimension_probe(op, lo, s.gap * lo, expected, seed);
    j["probe"] = {{"status", rep.certified ? "certified" : "inconclusive"},
                  {"singular_values", rep.singular_values},
                  {"op_norm", rep.op_norm},
                  {"theta_low", rep.theta_low},
                  {"theta_high", rep.theta_high},
                  {"gap_ratio", rep.gap_ratio},
                  {"inferred_dimension", rep.inferred_dimension}};
    out << "probe: " << (rep.certified ? "certified" : "inconclusive")
        << " dimension=" << rep.inferred_dimension << " gap_ratio=" << rep.gap_ratio << "\n";
  }
  write_json(cfg, "index.json", j);
  return kExitOk;
}

WeightedSphereMeasure read_atoms(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read atoms file " + path);
  WeightedSphereMeasure m;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(cell, &used));
      } catch (const std::logic_error&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (m.points.empty() && lineno == 1) continue;  // header
      throw ConfigError("atoms file line " + std::to_string(lineno) + " is not numeric");
    }
    if (v.size() != 4) throw ConfigError("atoms file line " + std::to_string(lineno) + " needs x,y,z,w");
    m.points.push_back({v[0], v[1], v[2]});
    m.weights.push_back(v[3]);
  }
  return m;
}

int cmd_balance(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.balance) throw ConfigError("balance needs a balance block");
  const auto measure = read_atoms(cfg.balance->atoms);
  validate_measure(measure);
  const BalancePoint bp = balance(measure, cfg.balance->tol);
  const auto mono = flow_monotonicity_check(measure, bp.eta, cfg.balance->flow_steps);
  json j{{"eta", to_json(bp.eta)},
         {"eta_norm", std::sqrt(bp.eta[0] * bp.eta[0] + bp.eta[1] * bp.eta[1] + bp.eta[2] * bp.eta[2])},
         {"residual", bp.residual},
         {"iterations", bp.iterations},
         {"used_homotopy", bp.used_homotopy},
         {"flow_min_increment", mono.min_increment},
         {"flow_monotone", mono.monotone}};
  write_json(cfg, "balance.json", j);
  std::string csv = "step,value\n";
  for (std::size_t i = 0; i < mono.values.size(); ++i) csv += std::to_string(i) + "," + csv_num(mono.values[i]) + "\n";
  atomic_write(out_path(cfg, "balance_flow.csv"), csv);
  out << "eta=(" << bp.eta[0] << ", " << bp.eta[1] << ", " << bp.eta[2] << ") residual=" << bp.residual << "\n";
  return kExitOk;
}

int cmd_flow(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.flow) throw ConfigError("flow needs a flow block");
  const FlowSpec& f = *cfg.flow;
  const auto model = build_model(cfg);
  const auto h = InvariantHamiltonian::parse(f.hamiltonian, model.n());
  FlowState start;
  if (f.separatrix) {
    if (model.n() != 1 || model.r() != 1 || model.w(0, 0) != 1)
      throw ConfigError("flow.separatrix is only defined for W = [[1]]");
    start = separatrix_start(model.tau[0], (*f.separatrix)[0], (*f.separatrix)[1]);
  } else {
    start.x = f.x;
    start.eta = f.eta;
  }
  const std::uint64_t seed = cfg.seed.value_or(0);
  const double defect = invariance_defect(h, model, 64, seed);
  const Trajectory tr = flow_integrate(start, model, h, f.dt, f.steps);
  double max_rise = 0.0;
  for (std::size_t i = 1; i < tr.functional.size(); ++i)
    max_rise = std::max(max_rise, tr.functional[i] - tr.functional[i - 1]);
  const FlowState& end = tr.states.back();
  const bool critical = critical_check(end.x, end.eta, model, h, f.tol);
  json xs = json::array();
  for (const cplx& v : end.x) xs.push_back(json::array({v.real(), v.imag()}));
  json j{{"hamiltonian", h.text()},
         {"invariance_defect", defect},
         {"final_x", xs},
         {"final_eta", end.eta},
         {"final_t", end.t},
         {"final_mu", moment_map(model, end.x)},
         {"functional_max_rise", max_rise},
         {"critical", critical}};
  write_json(cfg, "flow.json", j);
  std::string csv = "t,norm2,L";
  for (int k = 0; k < model.r(); ++k) csv += ",eta" + std::to_string(k);
  csv += "\n";
  for (std::size_t i = 0; i < tr.states.size(); ++i) {
    const auto& s = tr.states[i];
    double n2 = 0.0;
    for (const cplx& v : s.x) n2 += std::norm(v);
    csv += csv_num(s.t) + "," + csv_num(n2) + "," + csv_num(tr.functional[i]);
    for (double e : s.eta) csv += "," + csv_num(e);
    csv += "\n";
  }
  atomic_write(out_path(cfg, "trajectory.csv"), csv);
  out << "critical=" << (critical ? "true" : "false") << " max_rise=" << max_rise << "\n";
  return critical ? kExitOk : kExitNegative;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"solve", "check", "scan-tau", "scan-eps",
                                              "index", "balance", "flow"};
  return names;
}

int run_command(const std::string& name, const RunConfig& cfg, const CommandArgs& args,
                std::ostream& out, std::ostream& err) {
  try {
    if (name == "solve") return cmd_solve(cfg, out);
    if (name == "check") return cmd_check(cfg, args, out);
    if (name == "scan-tau") return cmd_scan_tau(cfg, out);
    if (name == "scan-eps") return cmd_scan_eps(cfg, out);
    if (name == "index") return cmd_index(cfg, out);
    if (name == "balance") return cmd_balance(cfg, out);
    if (name == "flow") return cmd_flow(cfg, out);
    err << "error: unknown command '" << name << "'\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "invalid argument: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ShapeMismatch& e) {
    err << "shape mismatch: " << e.what() << "\n";
    return kExitUsage;
  } catch (const GeometryMismatch& e) {
    err << "geometry mismatch: " << e.what() << "\n";
    return kExitUsage;
  } catch (const SnapshotVersionMismatch& e) {
    err << "snapshot version mismatch: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NonPositiveDimension& e) {
    err << "bad geometry: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NonPositiveConformalFactor& e) {
    err << "bad geometry: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NotProper& e) {
    err << "model not proper: " << e.what() << "\n";
    return kExitUsage;
  } catch (const PointsTooClose& e) {
    err << "bad zero prescription: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    // numerical outcomes: no convergence, blowup, ambiguous zeros and the like
    err << "negative result: " << e.what() << "\n";
    return kExitNegative;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "io error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace svx
