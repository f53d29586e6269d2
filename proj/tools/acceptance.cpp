// Acceptance run: one PASS/FAIL line per criterion, indented detail lines
// below it. Exit status is 0 when the failing criteria are exactly the ones
// listed in kKnownFailures (each has a written analysis in README.md), and 1
// otherwise, including when a known failure starts passing.

#include <algorithm>
#include <cstdarg>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "svx/commands.hpp"
#include "svx/eqflow.hpp"
#include "svx/field_io.hpp"
#include "svx/linearization.hpp"
#include "svx/mobius.hpp"
#include "svx/solver.hpp"
#include "json.hpp"

using namespace svx;
namespace fs = std::filesystem;

namespace {

const std::set<int> kKnownFailures = {4, 6, 10};

std::set<int> failed;
std::string pending;  // detail lines, printed under the next verdict

void verdict(int id, bool pass, const std::string& title) {
  std::printf("%2d %s %s\n%s", id, pass ? "PASS" : "FAIL", title.c_str(), pending.c_str());
  std::fflush(stdout);
  pending.clear();
  if (!pass) failed.insert(id);
}

void detail(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
void detail(const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  pending += std::string("     ") + buf + "\n";
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double norm3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Vec3 v{nd(rng), nd(rng), nd(rng)};
  const double n = norm3(v);
  return {v[0] / n, v[1] / n, v[2] / n};
}

const double kTau = 4 * kPi;

WeightModel vortex_model(double tau = kTau) { return make_weight_model(1, 1, {1}, {tau}); }

SolveResult random_solve(int n, double tau, int degree, std::uint64_t seed) {
  SolveOptions o;
  o.seed = seed;
  return solve_vortex(make_torus(n, n, 1, 1), vortex_model(tau), {degree}, InitSpec{}, o);
}

// ---------------------------------------------------------------------------

void c1_energy_identity() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto g = make_torus(32, 32, 1, 1);
  const auto m = vortex_model();
  std::mt19937_64 rng(101);
  std::normal_distribution<double> nd(0.0, 3.0);
  double worst = 0.0;
  for (int s = 0; s < 100; ++s) {
    const int d[] = {s % 3};
    VortexState st{g, SiteField(g.num_sites(), 1),
                   make_connection_with_flux(g, d, FluxProfile::random_plus_flux, 1000 + s, 2.0), 1.0};
    for (auto& v : st.z.v) v = cplx(nd(rng), nd(rng));
    const auto b = energy_identity(st, m);
    worst = std::max(worst, b.identity_gap / std::max(1.0, std::abs(b.energy)));
  }
  const double secs = seconds_since(t0);
  verdict(1, worst <= 1e-10 && secs < 10, "exact energy decomposition");
  detail("100 random states, 32^2, d in {0,1,2}: max gap/max(1,|E|) = %.3g (<= 1e-10), %.2f s (< 10)",
         worst, secs);
}

SolveResult c2_solution;

void c2_vortex_solve() {
  const auto t0 = std::chrono::steady_clock::now();
  c2_solution = random_solve(64, kTau, 1, 2);
  const double secs = seconds_since(t0);
  const auto b = energy_identity(c2_solution.state, vortex_model());
  const double res2 = b.dbar2 + b.resid2;
  const double rel = std::abs(b.energy - b.pairing) / std::abs(b.pairing);
  verdict(2, c2_solution.record.converged && res2 <= 1e-12 && rel <= 1e-8 && secs < 120,
          "vortex solve, 64^2, tau = 4 pi, d = 1");
  detail("random init: dbar2 + resid2 = %.3g (<= 1e-12), |E - pairing|/pairing = %.3g (<= 1e-8), %.1f s (< 120)",
         res2, rel, secs);
  detail("E = %.10f, lattice pairing = %.10f, continuum 2 pi tau d = %.10f", b.energy, b.pairing,
         2 * kPi * kTau);
}

void c3_compactness() {
  const auto m = vortex_model();
  std::vector<double> delta;
  bool bound_ok = true;
  for (int n : {32, 64, 128}) {
    const SolveResult r = n == 64 ? c2_solution : random_solve(n, kTau, 1, 2);
    if (!r.record.converged) {
      detail("%d^2: solve did not converge (res %.3g)", n, r.record.res_norm);
      bound_ok = false;
      delta.push_back(NAN);
      continue;
    }
    const auto rep = sup_bound_check(r.state, m, 1e-6);
    delta.push_back(rep.overshoot);
    if (n == 64) bound_ok = bound_ok && rep.satisfied;
    detail("%3d^2: max|z|^2 = %.8f, 2 tau = %.8f, overshoot = %.4g", n, rep.max_norm2, rep.bound,
           rep.overshoot);
  }
  const bool mono = delta[0] > delta[1] && delta[1] > delta[2];
  verdict(3, bound_ok && mono, "compactness bound max|z|^2 <= 2 tau (1.05), overshoot monotone in h");
}

void c4_threshold() {
  const fs::path dir = fs::temp_directory_path() / "svx_acceptance_c4";
  fs::remove_all(dir);
  auto cli_solve = [&](double tau, std::uint64_t seed, nlohmann::json* rec) {
    RunConfig cfg;
    cfg.seed = seed;
    cfg.output_dir = (dir / std::to_string(seed)).string();
    cfg.geometry = GeometrySpec{32, 32, 1.0, 1.0, {}};
    cfg.model = ModelSpec{1, 1, {1}, {tau}, 1.0};
    cfg.solve = SolveSpec{{1}, InitSpec{}, SolveOptions{}};
    std::ostringstream out, err;
    const int code = run_command("solve", cfg, {}, out, err);
    std::ifstream in(fs::path(cfg.output_dir) / "record.jsonl");
    std::string line;
    std::getline(in, line);
    *rec = nlohmann::json::parse(line);
    return code;
  };
  bool exits_ok = true, bound_ok = true, derived_ok = true, negative_pairing = true;
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    nlohmann::json r;
    const int code = cli_solve(kPi, seed, &r);
    const double resid = r["dbar2"].get<double>() + r["resid2"].get<double>();
    const double pairing = r["pairing"].get<double>();
    const double lb = r["residual_lower_bound"].get<double>();
    exits_ok = exits_ok && code == kExitNegative;
    bound_ok = bound_ok && resid >= -pairing;
    derived_ok = derived_ok && resid >= lb * (1 - 1e-9);
    negative_pairing = negative_pairing && pairing < 0;
    detail("tau = pi, seed %llu: exit %d, residual energy %.6f, pairing %.6f, derived bound %.6f",
           static_cast<unsigned long long>(seed), code, resid, pairing, lb);
  }
  nlohmann::json above;
  const int code_above = cli_solve(2 * kPi * 1.1, 1, &above);
  fs::remove_all(dir);
  const bool conv_above = code_above == kExitOk && above["converged"].get<bool>();
  detail("tau = 2.2 pi: exit %d, res %.3g", code_above, above["res_norm"].get<double>());
  detail("clauses: exit 2 %s, residual >= -pairing %s, pairing < 0 %s, converges above %s",
         exits_ok ? "yes" : "no", bound_ok ? "yes" : "no", negative_pairing ? "yes" : "no",
         conv_above ? "yes" : "no");
  detail("residual energy >= (2 pi d - tau Vol)^2 / (2 eps^2 Vol) = pi^2/2 on every run: %s",
         derived_ok ? "yes" : "no");
  detail("the pairing equals 2 pi tau d > 0 for tau, d > 0, so 'pairing < 0' cannot hold");
  verdict(4, exits_ok && bound_ok && negative_pairing && conv_above,
          "existence threshold at tau = pi (as stated, including pairing < 0)");
}

void c5_moduli() {
  const int n = 32;
  const double tau = 6 * kPi;  // tau Vol > 4 pi is needed for d = 2
  const auto g = make_torus(n, n, 1, 1);
  const auto m = vortex_model(tau);
  const std::vector<std::vector<std::array<double, 2>>> presc{{{0.3, 0.4}, {0.7, 0.65}},
                                                             {{0.25, 0.7}, {0.75, 0.3}}};
  std::vector<SolveResult> sols;
  bool ok = true;
  for (const auto& pts : presc) {
    InitSpec in;
    in.kind = InitKind::zeros;
    in.points = pts;
    sols.push_back(solve_vortex(g, m, {2}, in, SolveOptions{}));
    const auto& r = sols.back();
    int count = -1;
    double worst = INFINITY;
    if (r.record.converged) {
      count = zero_count(r.state, m);
      const auto z = zero_locations(r.state, m);
      worst = 0.0;
      for (const auto& p : pts) {
        double best = INFINITY;
        for (const auto& q : z) best = std::min(best, torus_distance(g, p, q));
        worst = std::max(worst, best);
      }
    }
    ok = ok && r.record.converged && count == 2 && worst <= 2.0 / n;
    detail("zeros (%.2f,%.2f) (%.2f,%.2f): converged %s, res %.3g, zero_count %d, max distance %.3f h",
           pts[0][0], pts[0][1], pts[1][0], pts[1][1], r.record.converged ? "yes" : "no",
           r.record.res_norm, count, worst * n);
  }
  double diff = 0.0;
  for (std::size_t i = 0; i < sols[0].state.z.v.size(); ++i)
    diff = std::max(diff, std::abs(std::abs(sols[0].state.z.v[i]) - std::abs(sols[1].state.z.v[i])));
  const double rel = std::abs(sols[0].record.pairing - sols[1].record.pairing) / sols[0].record.pairing;
  ok = ok && diff > 1e-3 && rel <= 1e-4;
  detail("max ||z1| - |z2|| = %.3g (gauge-inequivalent), pairing difference %.3g relative (<= 1e-4)", diff, rel);
  verdict(5, ok, "moduli identification, d = 2, 32^2, tau = 6 pi");
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void c6_adiabatic() {
  const auto g = make_torus(32, 32, 1, 1);
  const auto m = make_weight_model(2, 1, {1, 1}, {kTau});
  InitSpec in;
  in.kind = InitKind::zeros;
  in.points = {{0.5, 0.5}};
  const auto head = solve_vortex(g, m, {1}, in, SolveOptions{});
  const auto rs = epsilon_continuation(head.state, m, {1.0, 0.5, 0.25, 0.1}, SolveOptions{});
  std::vector<double> eps, sup;
  bool all_conv = true;
  for (const auto& r : rs) {
    eps.push_back(r.record.control);
    sup.push_back(r.record.sup_mu);
    all_conv = all_conv && r.record.converged;
    double min_abs = INFINITY;
    for (int k = 0; k < g.num_sites(); ++k)
      min_abs = std::min(min_abs, std::hypot(std::abs(r.state.z(k, 0)), std::abs(r.state.z(k, 1))));
    detail("eps %.2f: sup|mu| = %.6f, min|z| = %.3g, converged %s (res %.3g)", r.record.control,
           r.record.sup_mu, min_abs, r.record.converged ? "yes" : "no", r.record.res_norm);
  }
  const double slope = loglog_slope(eps, sup);
  detail("log-log slope %.4f (target 2.0 +- 0.2)", slope);
  detail("a degree-1 bundle on the torus has one holomorphic section up to scale, so z1 = c z0 and the");
  detail("components share their zero; mu = -tau there and sup|mu| = tau for every eps. eps 0.5 and");
  detail("0.25 stall on the forward-difference doubler; at eps 0.1 (core ~ 3h) the shared zero is unresolved");
  verdict(6, all_conv && std::abs(slope - 2.0) <= 0.2, "adiabatic scaling on CP^1, d = 1");
}

void c7_index() {
  // c1b is the pairing of the equivariant first Chern class with B, = d here
  bool ok = true;
  for (long long d = -3; d <= 5; ++d) {
    ok = ok && index_formula(1, 1, 1, d, 0) == 2 * d;
    ok = ok && index_formula(0, 2, 1, d, 0) == 2 + 2 * d;
  }
  for (long long g = 0; g < 4; ++g)
    for (long long n = 0; n < 5; ++n) ok = ok && index_formula(g, n, n, 0, 0) == 0;
  verdict(7, ok, "index arithmetic");
  detail("d in [-3, 5]: (g=1,n=1,dimG=1) -> 2d, (g=0,n=2,dimG=1) -> 2+2d; n = dimG, B = 0, k = 0 -> 0 "
         "for g < 4, n < 5; e.g. d = 1 gives %lld and %lld",
         index_formula(1, 1, 1, 1, 0), index_formula(0, 2, 1, 1, 0));
}

void c8_probe() {
  const auto m = vortex_model();
  auto run_probe = [&](const VortexState& st, int expected, const char* label) {
    const LinearizedOp op = assemble_D(st, m);
    const double norm = operator_norm(op);
    const double lo = 1e-6 * norm;
    const IndexReport rep = moduli_dimension_probe(op, lo, 10 * lo, expected);
    std::string sv;
    for (std::size_t i = 0; i < rep.singular_values.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%s%.3g", i ? ", " : "", rep.singular_values[i]);
      sv += buf;
    }
    detail("%s: %s, dimension %d, gap ratio %.3g, ||D|| = %.4g, sigma = [%s]", label,
           rep.certified ? "certified" : "inconclusive", rep.inferred_dimension, rep.gap_ratio,
           rep.op_norm, sv.c_str());
    return rep;
  };
  const auto r1 = run_probe(c2_solution.state, 2, "d = 1");
  const auto vac = solve_vortex(make_torus(64, 64, 1, 1), m, {0}, InitSpec{}, SolveOptions{});
  const auto r0 = run_probe(vac.state, 0, "d = 0");
  const bool d1_ok = !r1.certified || r1.inferred_dimension == 2;
  const bool ok = d1_ok && vac.record.converged && r0.certified && r0.inferred_dimension == 0;
  verdict(8, ok, std::string("moduli-dimension probe (d = 1 ") + (r1.certified ? "certified" : "inconclusive") + ")");
}

void c9_sw() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(909);
  std::uniform_int_distribution<int> dim(1, 4), wi(-3, 3);
  std::normal_distribution<double> nd(0.0, 2.0);
  double worst = 0.0;
  for (int s = 0; s < 1000; ++s) {
    const int n = dim(rng), r = dim(rng);
    std::vector<int> w(static_cast<std::size_t>(n) * r);
    for (int j = 0; j < r; ++j) {
      bool nonzero = false;
      while (!nonzero) {
        for (int nu = 0; nu < n; ++nu) {
          w[nu * r + j] = wi(rng);
          nonzero = nonzero || w[nu * r + j] != 0;
        }
      }
    }
    std::vector<double> tau(r);
    for (auto& t : tau) t = nd(rng);
    const auto m = make_weight_model(n, r, w, tau);
    std::vector<cplx> z(n);
    for (auto& v : z) v = cplx(nd(rng), nd(rng));
    worst = std::max(worst, sw_identity_check(m, z).discrepancy);
  }
  const double secs = seconds_since(t0);
  verdict(9, worst <= 1e-12 && secs < 1.0, "moment-map identity on random draws");
  detail("1000 draws: max discrepancy %.3g (<= 1e-12), %.3f s (< 1)", worst, secs);
}

void c10_mobius() {
  bool ok = true;
  {
    const auto bp = balance(octahedron_measure(), 1e-10);
    const bool a = norm3(bp.eta) <= 1e-10;
    ok = ok && a;
    detail("(a) octahedron: |eta| = %.3g  %s", norm3(bp.eta), a ? "pass" : "fail");
  }
  {
    double worst_m = 0.0, worst_eta = 0.0;
    bool b = true;
    for (std::uint64_t s = 0; s < 100; ++s) {
      std::mt19937_64 rng(200 + s);
      std::uniform_real_distribution<double> u(0.1, 2.0);
      WeightedSphereMeasure m;
      for (int i = 0; i < 100; ++i) {
        m.points.push_back(random_unit(rng));
        m.weights.push_back(u(rng));
      }
      try {
        const auto bp = balance(m, 1e-10);
        worst_m = std::max(worst_m, norm3(center_of_mass(bp.eta, m)));
        worst_eta = std::max(worst_eta, norm3(bp.eta));
      } catch (const NoConvergence&) {
        b = false;
      }
    }
    b = b && worst_m <= 1e-10 && worst_eta < 1.0;
    ok = ok && b;
    detail("(b) 100 measures x 100 random positive atoms: max |m(eta)| = %.3g, max |eta| = %.4f  %s",
           worst_m, worst_eta, b ? "pass" : "fail");
  }
  {
    WeightedSphereMeasure m{{{0, 0, 1}, {0, 0, -1}}, {2.0, 1.0}};
    double root = 0.0;
    const bool oracle = axial_bisection(m, {0, 0, 1}, 1e-14, &root);
    bool solved = false;
    double res = NAN;
    try {
      const auto bp = balance(m, 1e-10);
      solved = true;
      res = bp.residual;
    } catch (const NoConvergence&) {
    }
    double inf_m = INFINITY;
    for (int i = -999; i <= 999; ++i) {
      const double t = i / 1000.0;
      inf_m = std::min(inf_m, norm3(center_of_mass({0, 0, t}, m)));
    }
    const bool c = oracle && solved && std::abs(res) <= 1e-10;
    ok = ok && c;
    detail("(c) antipodal atoms, weights (2,1): bisection sign change %s, balance %s, "
           "min |m| on the axis %.4f  %s",
           oracle ? "yes" : "no", solved ? "converged" : "NoConvergence", inf_m, c ? "pass" : "fail");
    detail("    m(eta) is (2/3) u + (1/3) v with unit vectors u, v, so |m| >= 1/3 for every eta:");
    detail("    no balance point exists, and no sign change for the oracle to find");
    WeightedSphereMeasure sym{{{0, 0, 1}, {0, 0, -1}, {0.6, 0, 0.8}, {-0.6, 0, 0.8}}, {1.0, 2.0, 1.0, 1.0}};
    double r2 = 0.0;
    const bool o2 = axial_bisection(sym, {0, 0, 1}, 1e-14, &r2);
    const auto bp = balance(sym, 1e-12);
    detail("    axially symmetric 4-atom measure instead: |eta_z - bisection root| = %.3g",
           o2 ? std::abs(bp.eta[2] - r2) : NAN);
  }
  {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const Vec3 d = random_unit(rng);
      const double r = 0.99 * std::cbrt(u(rng));
      const Vec3 eta{r * d[0], r * d[1], r * d[2]};
      const Vec3 x = random_unit(rng);
      const Vec3 y = mobius_map({-eta[0], -eta[1], -eta[2]}, mobius_map(eta, x));
      worst = std::max(worst, norm3({y[0] - x[0], y[1] - x[1], y[2] - x[2]}));
    }
    const bool dd = worst <= 1e-10;
    ok = ok && dd;
    detail("(d) phi_{-eta} o phi_eta = id on 1000 pairs: max error %.3g  %s", worst, dd ? "pass" : "fail");
  }
  {
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    WeightedSphereMeasure m;
    for (int i = 0; i < 50; ++i) {
      m.points.push_back(random_unit(rng));
      m.weights.push_back(u(rng));
    }
    const auto bp = balance(m, 1e-10);
    const Vec3 eta = norm3(bp.eta) > 1e-6 ? bp.eta : Vec3{0.3, -0.2, 0.4};
    const auto mono = flow_monotonicity_check(m, eta, 100);
    const bool e = mono.min_increment >= -1e-10;
    ok = ok && e;
    detail("(e) flow over 100 steps: min increment %.3g  %s", mono.min_increment, e ? "pass" : "fail");
  }
  verdict(10, ok, "Moebius balancing (a)-(e)");
}

void c11_flow() {
  const double tau = 1.0, a = 1.5;
  const auto m = vortex_model(tau);
  const auto h = InvariantHamiltonian::quadratic({a});
  const double rate = std::sqrt(2 * tau);
  const double dt = 1e-3;
  const int steps = static_cast<int>(17.0 / rate / dt);
  const auto traj = flow_integrate(separatrix_start(tau, a, 0.5), m, h, dt, steps);
  double rise = -INFINITY;
  for (std::size_t i = 1; i < traj.functional.size(); ++i)
    rise = std::max(rise, traj.functional[i] - traj.functional[i - 1]);
  const auto& last = traj.states.back();
  const double p = std::norm(last.x[0]);
  const bool crit = critical_check(last.x, last.eta, m, h, 1e-6);
  const bool ok = std::abs(p - 2 * tau) <= 1e-6 && crit && rise <= 1e-9;
  verdict(11, ok, "equivariant gradient flow, quadratic Hamiltonian");
  detail("separatrix start |x|^2 = 0.5, t = %.2f: ||x|^2 - 2 tau| = %.3g, eta - a = %.3g, critical %s, max L rise %.3g",
         last.t, std::abs(p - 2 * tau), last.eta[0] - a, crit ? "yes" : "no", rise);
  FlowState generic{{cplx(0.5, 0.2)}, {0.0}, 0.0};
  std::string fate;
  try {
    const auto g = flow_integrate(generic, m, h, dt, steps);
    double closest = INFINITY;
    for (const auto& s : g.states) closest = std::min(closest, std::abs(std::norm(s.x[0]) - 2 * tau));
    fate = "gets no closer than " + std::to_string(closest);
  } catch (const StepBlowup&) {
    fate = "leaves every bounded set (StepBlowup)";
  }
  detail("the rest point is a saddle (eigenvalues +-sqrt(2 tau)); from x = 0.5+0.2i, eta = 0 the flow %s",
         fate.c_str());
}

void c12_gauge() {
  const auto m = vortex_model();
  const auto g = make_torus(32, 32, 1, 1);
  const int d[] = {1};
  VortexState rnd{g, SiteField(g.num_sites(), 1), make_connection_with_flux(g, d, FluxProfile::random_plus_flux, 12, 1.5), 1.0};
  std::mt19937_64 rng(1212);
  std::normal_distribution<double> nd(0.0, 3.0);
  for (auto& v : rnd.z.v) v = cplx(nd(rng), nd(rng));
  double worst = 0.0;
  for (const VortexState* st : {&rnd, &c2_solution.state}) {
    const auto b0 = energy_identity(*st, m);
    const double r0 = residual_norm(*st, m);
    const double scale = std::max(1.0, std::abs(b0.energy));
    std::uniform_real_distribution<double> u(-kPi, kPi);
    for (int s = 0; s < 50; ++s) {
      GaugeMap gm(st->geom.num_sites(), 1);
      for (auto& x : gm.g) x = u(rng);
      auto [z1, a1] = gauge_transform(st->geom, gm, m.w, st->z, st->a);
      const VortexState moved{st->geom, z1, a1, st->epsilon};
      const auto b1 = energy_identity(moved, m);
      for (double dv : {b1.energy - b0.energy, b1.pairing - b0.pairing, b1.dbar2 - b0.dbar2,
                        b1.resid2 - b0.resid2, b1.identity_gap - b0.identity_gap,
                        residual_norm(moved, m) - r0})
        worst = std::max(worst, std::abs(dv) / scale);
    }
  }
  verdict(12, worst <= 1e-12, "gauge invariance, 50 transforms at a random state and at the solution");
  detail("max change / max(1,|E|) = %.3g (<= 1e-12)", worst);
}

void c13_reproducibility() {
  const fs::path root = fs::temp_directory_path() / "svx_acceptance_c13";
  fs::remove_all(root);
  fs::create_directories(root);
  {
    std::ofstream csv(root / "oct.csv");
    csv << "x,y,z,w\n1,0,0,1\n-1,0,0,1\n0,1,0,1\n0,-1,0,1\n0,0,1,1\n0,0,-1,1\n";
  }
  RunConfig base;
  base.seed = 13;
  base.threads = 3;
  base.geometry = GeometrySpec{24, 24, 1.0, 1.0, {}};
  base.model = ModelSpec{1, 1, {1}, {kTau}, 1.0};
  SolveOptions o;
  o.max_restarts = 0;
  base.solve = SolveSpec{{1}, InitSpec{}, o};
  base.tau_grid = {kPi, 2.2 * kPi, kTau};
  base.eps_schedule = {1.0, 0.5};
  base.index = IndexSpec{};
  base.index->c1b = 2;
  base.balance = BalanceSpec{(root / "oct.csv").string(), 1e-10, 100};
  FlowSpec fl;
  fl.hamiltonian = "0.75*p0";
  fl.separatrix = std::array<double, 2>{1.5, 0.5};
  fl.steps = 2000;
  base.flow = fl;

  bool ok = true;
  int files = 0;
  std::string bad;
  auto run_twice = [&](const std::string& cmd, RunConfig cfg, const CommandArgs& args) {
    std::vector<fs::path> dirs{root / (cmd + "_a"), root / (cmd + "_b")};
    for (const auto& dir : dirs) {
      cfg.output_dir = dir.string();
      std::ostringstream out, err;
      run_command(cmd, cfg, args, out, err);
    }
    for (const auto& e : fs::directory_iterator(dirs[0])) {
      const auto ext = e.path().extension();
      if (ext != ".json" && ext != ".jsonl") continue;
      std::ifstream fa(e.path(), std::ios::binary), fb(dirs[1] / e.path().filename(), std::ios::binary);
      std::stringstream sa, sb;
      sa << fa.rdbuf();
      sb << fb.rdbuf();
      ++files;
      if (sa.str() != sb.str() || sa.str().empty()) {
        ok = false;
        bad += " " + cmd + "/" + e.path().filename().string();
      }
    }
  };
  for (const std::string cmd : {"solve", "scan-tau", "scan-eps", "index", "balance", "flow"}) {
    RunConfig cfg = base;
    if (cmd == "scan-eps") {
      cfg.solve->init.kind = InitKind::zeros;
      cfg.solve->init.points = {{0.5, 0.5}};
    }
    run_twice(cmd, cfg, {});
  }
  run_twice("check", base, CommandArgs{(root / "solve_a" / "state.snap").string()});
  fs::remove_all(root);
  verdict(13, ok && files >= 7, "reproducibility of CLI JSON outputs");
  detail("7 commands run twice: %d JSON files compared, byte-identical %s%s", files, ok ? "yes" : "no",
         bad.c_str());
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::pair<int, std::function<void()>>> all{
      {1, c1_energy_identity}, {2, c2_vortex_solve}, {3, c3_compactness}, {4, c4_threshold},
      {5, c5_moduli},          {6, c6_adiabatic},    {7, c7_index},       {8, c8_probe},
      {9, c9_sw},              {10, c10_mobius},     {11, c11_flow},      {12, c12_gauge},
      {13, c13_reproducibility}};
  for (const auto& [id, fn] : all) {
    try {
      fn();
    } catch (const std::exception& e) {
      verdict(id, false, std::string("threw: ") + e.what());
    }
    std::fputs(pending.c_str(), stdout);
    pending.clear();
  }
  std::printf("\n%zu of %zu criteria pass (%.0f s).", all.size() - failed.size(), all.size(),
              seconds_since(t0));
  if (!failed.empty()) {
    std::printf(" Failing:");
    for (int id : failed) std::printf(" %d", id);
  }
  std::printf("\n");
  if (failed != kKnownFailures) {
    std::printf("failures differ from the analysed set {4, 6, 10}\n");
    return 1;
  }
  std::printf("failures match the analysed set {4, 6, 10}; see README.md\n");
  return 0;
}
