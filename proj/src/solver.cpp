#include "svx/solver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <random>
#include <thread>

#include "svx/field_io.hpp"

namespace svx {

void validate_options(const SolveOptions& o) {
  if (o.max_iters < 0 || o.newton_iters < 1 || o.linear_max_iters < 1 || o.lbfgs_memory < 1)
    throw InvalidArgument("iteration limits must be positive");
  if (!(o.grad_tol > 0) || !(o.newton_tol > 0) || !(o.linear_tol > 0) || !(o.damping_floor > 0) ||
      !(o.basin_tol > 0))
    throw InvalidArgument("tolerances must be positive");
  if (!(o.armijo > 0 && o.armijo < 0.5)) throw InvalidArgument("armijo constant must be in (0, 0.5)");
  if (!(o.backtracking > 0 && o.backtracking < 1))
    throw InvalidArgument("backtracking factor must be in (0, 1)");
  if (o.max_restarts < 0) throw InvalidArgument("max_restarts must be nonnegative");
}

namespace {


Eigen::VectorXd pack_gradient(const EnergyGradient& g, int sites) {
  const int n = g.gz.n;
  const int r = g.ga.r;
  Eigen::VectorXd x(static_cast<Eigen::Index>(2 * n + 2 * r) * sites);
  for (int k = 0; k < sites; ++k) {
    for (int nu = 0; nu < n; ++nu) {
      x[k * n + nu] = g.gz(k, nu).real();
      x[sites * n + k * n + nu] = g.gz(k, nu).imag();
    }
    for (int j = 0; j < r; ++j) {
      x[2 * sites * n + k * r + j] = g.ga.as[k * r + j];
      x[2 * sites * n + sites * r + k * r + j] = g.ga.at[k * r + j];
    }
  }
  return x;
}

double max_modulus(const SiteField& z) {
  double m = 0.0;
  for (const cplx& v : z.v) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

double gradient_norm(const VortexState& state, const WeightModel& model) {
  const Eigen::VectorXd g = pack_gradient(energy_gradient(state, model), state.geom.num_sites());
  return g.norm() / std::sqrt(state.geom.cell_area());
}

VortexState descend_energy(const VortexState& state, const WeightModel& model,
                           const SolveOptions& opts, DescentStats* stats) {
  validate_options(opts);
  validate_state(state, model);
  const int sites = state.geom.num_sites();
  const double c = state.geom.cell_area();
  const double sc = 1.0 / std::sqrt(c);

  VortexState cur = state;
  double e = energy(cur, model);
  Eigen::VectorXd g = pack_gradient(energy_gradient(cur, model), sites);
  double gn = g.norm() * sc;
  if (stats) {
    stats->energies.assign(1, e);
    stats->accepted_steps = 0;
  }

  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> mem;  // (s, y)
  int accepted = 0;
  for (int it = 0; it < opts.max_iters && gn > opts.grad_tol; ++it) {
    if (residual_norm(cur, model) <= opts.basin_tol) break;
    // two-loop recursion
    Eigen::VectorXd q = g;
    std::vector<double> alpha(mem.size());
    for (int i = static_cast<int>(mem.size()) - 1; i >= 0; --i) {
      const double rho = 1.0 / mem[i].second.dot(mem[i].first);
      alpha[i] = rho * mem[i].first.dot(q);
      q -= alpha[i] * mem[i].second;
    }
    double gamma = c;  // L2 metric for the very first step
    if (!mem.empty()) gamma = mem.back().first.dot(mem.back().second) / mem.back().second.squaredNorm();
    q *= gamma;
    for (std::size_t i = 0; i < mem.size(); ++i) {
      const double rho = 1.0 / mem[i].second.dot(mem[i].first);
      const double beta = rho * mem[i].second.dot(q);
      q += (alpha[i] - beta) * mem[i].first;
    }
    Eigen::VectorXd p = -q;
    double slope = g.dot(p);
    bool steepest = mem.empty();
    if (!(slope < 0.0)) {
      mem.clear();
      p = -c * g;
      slope = g.dot(p);
      steepest = true;
    }

    double t = 1.0;
    VortexState trial;
    double et = 0.0;
    bool ok = false;
    while (t >= opts.damping_floor) {
      trial = perturb(cur, p, t);
      et = energy(trial, model);
      if (std::isfinite(et) && et <= e + opts.armijo * t * slope) {
        ok = true;
        break;
      }
      t *= opts.backtracking;
    }
    if (!ok) {
      if (steepest) throw LineSearchStall("no admissible step above the damping floor");
      mem.clear();
      continue;
    }
    Eigen::VectorXd gt = pack_gradient(energy_gradient(trial, model), sites);
    Eigen::VectorXd s = t * p;
    Eigen::VectorXd y = gt - g;
    if (s.dot(y) > 1e-300) {
      mem.emplace_back(std::move(s), std::move(y));
      if (static_cast<int>(mem.size()) > opts.lbfgs_memory) mem.pop_front();
    }
    cur = std::move(trial);
    e = et;
    g = std::move(gt);
    gn = g.norm() * sc;
    ++accepted;
    if (stats) stats->energies.push_back(e);
  }
  if (stats) {
    stats->accepted_steps = accepted;
    stats->grad_norm = gn;
    stats->energy = e;
  }
  return cur;
}

VortexState newton_refine(const VortexState& state, const WeightModel& model,
                          const SolveOptions& opts, NewtonStats* stats) {
  validate_options(opts);
  validate_state(state, model);
  VortexState cur = state;
  double res = residual_norm(cur, model);
  NewtonStats local;
  local.residuals.push_back(res);
  auto finish = [&](bool conv) {
    local.converged = conv;
    if (stats) {
      *stats = local;
      if (!conv) stats->last = cur;
    }
  };
  for (int it = 0; it < opts.newton_iters; ++it) {
    if (res <= opts.newton_tol) {
      finish(true);
      return cur;
    }
    if (max_modulus(cur.z) < 1e-12) {
      finish(false);
      throw SingularSystem("section vanishes identically; the configuration is reducible");
    }
    const LinearizedOp op = assemble_D(cur, model);
    const Eigen::VectorXd w = row_weights(cur);
    const SparseRowMatrix a = w.asDiagonal() * op.m;
    const Eigen::VectorXd rhs = -(w.asDiagonal() * residual_vector(cur, model));

    Eigen::LeastSquaresConjugateGradient<SparseRowMatrix> solver;
    solver.setMaxIterations(opts.linear_max_iters);
    solver.setTolerance(std::clamp(std::min(opts.linear_tol, res), 1e-14, opts.linear_tol));
    solver.compute(a);
    const Eigen::VectorXd step = solver.solve(rhs);
    if (!step.allFinite()) {
      finish(false);
      throw NoConvergence("linear solve produced non-finite values");
    }

    double t = 1.0;
    VortexState trial;
    double rt = 0.0;
    bool ok = false;
    while (t >= opts.damping_floor) {
      trial = perturb(cur, step, t);
      rt = residual_norm(trial, model);
      if (std::isfinite(rt) && rt <= (1.0 - 1e-4 * t) * res) {
        ok = true;
        break;
      }
      t *= opts.backtracking;
    }
    ++local.iterations;
    if (!ok) {
      finish(false);
      throw NoConvergence("Newton line search stalled at residual " + format_double(res));
    }
    cur = std::move(trial);
    res = rt;
    local.residuals.push_back(res);
    const std::size_t m = local.residuals.size();
    if (m > 3 && res > opts.newton_tol && res > 0.99 * local.residuals[m - 4]) {
      finish(false);
      throw NoConvergence("Newton stalled at residual " + format_double(res));
    }
  }
  if (res <= opts.newton_tol) {
    finish(true);
    return cur;
  }
  finish(false);
  throw NoConvergence("Newton did not reach tolerance; residual " + format_double(res));
}

namespace {

// Jacobi theta_1(u | i Ls/Lt) by its rapidly converging series.
cplx theta1(cplx u, double q_log) {
  cplx sum = 0.0;
  for (int m = 0; m < 40; ++m) {
    const double e = (m + 0.5) * (m + 0.5) * q_log;
    if (e < -700.0) break;
    const double amp = std::exp(e);
    sum += (m % 2 == 0 ? 1.0 : -1.0) * amp * std::sin(static_cast<double>(2 * m + 1) * u);
  }
  return 2.0 * sum;
}

// Phase of one factor with a unit zero at (sk, tk); quasi-periodic with the
// seam twist of degree one.
double factor_phase(const TorusGeometry& g, double s, double t, double sk, double tk) {
  const double q_log = -kPi * g.ls / g.lt;
  const cplx u = cplx(0.0, kPi / g.lt) * cplx(s - sk, t - tk);
  const double ck = kPi - 2.0 * kPi * tk / g.lt;
  return std::arg(theta1(u, q_log)) + kPi * t / g.lt - ck * s / g.ls;
}

std::vector<std::array<double, 2>> component_points(const TorusGeometry& g,
                                                    const std::vector<std::array<double, 2>>& pts,
                                                    int count, int component) {
  std::vector<std::array<double, 2>> out;
  if (count == 0) return out;
  std::vector<std::array<double, 2>> base = pts;
  if (base.empty()) base.push_back({0.5 * g.ls, 0.5 * g.lt});
  const double ds = component * 0.23 * g.ls;
  const double dt = component * 0.17 * g.lt;
  for (int m = 0; m < count; ++m) {
    auto p = base[m % base.size()];
    if (component > 0 && !(count % 2 == 1 && m == count - 1)) {
      const double sign = m % 2 == 0 ? 1.0 : -1.0;
      p[0] += sign * ds;
      p[1] += sign * dt;
    }
    p[0] = std::fmod(std::fmod(p[0], g.ls) + g.ls, g.ls);
    p[1] = std::fmod(std::fmod(p[1], g.lt) + g.lt, g.lt);
    out.push_back(p);
  }
  return out;
}

}  // namespace

SiteField prescribe_zeros(const TorusGeometry& geom, const WeightModel& model,
                          const std::vector<std::array<double, 2>>& points, double epsilon) {
  const double min_sep = 2.0 * std::max(geom.hs, geom.ht);
  for (std::size_t a = 0; a < points.size(); ++a)
    for (std::size_t b = a + 1; b < points.size(); ++b)
      if (torus_distance(geom, points[a], points[b]) < min_sep)
        throw PointsTooClose("prescribed zeros closer than two lattice spacings");
  if (model.r() != 1 && !points.empty())
    throw InvalidArgument("zero prescription needs a rank-one model");

  const int d = static_cast<int>(points.size());
  const int n = model.n();
  const int sites = geom.num_sites();
  double tau_max = 0.0;
  for (double t : model.tau) tau_max = std::max(tau_max, std::abs(t));
  const double core = epsilon * std::sqrt(2.0 / std::max(tau_max, 1e-12));

  SiteField z(sites, n);
  std::vector<double> prof2(sites, 0.0);  // sum_nu W |profile|^2 per site
  bool nonneg = true;
  for (int nu = 0; nu < n; ++nu) {
    const int m = model.w(nu, 0) * d;
    nonneg = nonneg && model.w(nu, 0) >= 0;
    const auto pts = nu == 0 && m == d ? points : component_points(geom, points, std::abs(m), nu);
    for (int k = 0; k < sites; ++k) {
      const auto pos = geom.position(k);
      double phase = 0.0;
      double mod = 1.0;
      for (const auto& p : pts) {
        phase += factor_phase(geom, pos[0], pos[1], p[0], p[1]);
        mod *= std::tanh(torus_distance(geom, pos, p) / core);
      }
      if (m < 0) phase = -phase;
      z(k, nu) = std::polar(mod, phase + 0.7 * nu);
      prof2[k] += model.w(nu, 0) * mod * mod;
    }
  }

  double amp = std::sqrt(2.0 * tau_max / n);
  if (model.r() == 1 && nonneg) {
    CompensatedSum num;
    for (int k = 0; k < sites; ++k) num += geom.lambda[k] * geom.lambda[k] * prof2[k] * geom.cell_area();
    const double target = 2.0 * (model.tau[0] * geom.volume - 2.0 * kPi * d * epsilon * epsilon);
    amp = target > 0.0 && num.value() > 0.0 ? std::sqrt(target / num.value())
                                            : 0.1 * std::sqrt(2.0 * tau_max);
  }
  for (auto& v : z.v) v *= amp;
  return z;
}

LinkField connection_for_zeros(const TorusGeometry& geom, const WeightModel& model, int degree,
                               const std::vector<std::array<double, 2>>& points) {
  if (model.r() != 1) throw InvalidArgument("zero prescription needs a rank-one model");
  LinkField a = make_connection_with_flux(geom, std::vector<int>{degree}, FluxProfile::uniform);
  if (points.empty() || degree == 0) return a;
  const int w0 = model.w(0, 0);
  const int m = std::abs(w0) * static_cast<int>(points.size());
  const auto pts = w0 == 1 ? points : component_points(geom, points, m, 0);
  // zero sum (s0, t0) relative to the domain center <-> flat part
  // (a_s, a_t) = 2 pi / (Ls Lt) (t0, -s0) for the section of component 0
  double s0 = 0.0, t0 = 0.0;
  for (const auto& p : pts) {
    s0 += p[0] - 0.5 * geom.ls;
    t0 += p[1] - 0.5 * geom.lt;
  }
  const double c = 2.0 * kPi / (geom.ls * geom.lt) / (w0 * (degree > 0 ? 1.0 : -1.0));
  for (auto& x : a.as) x += c * t0;
  for (auto& x : a.at) x -= c * s0;
  return a;
}

std::vector<std::array<double, 2>> random_points(const TorusGeometry& geom, int count,
                                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> us(0.0, geom.ls), ut(0.0, geom.lt);
  double sep = std::max(3.0 * std::max(geom.hs, geom.ht),
                        0.3 * std::min(geom.ls, geom.lt) / std::sqrt(std::max(count, 1)));
  std::vector<std::array<double, 2>> pts;
  int tries = 0;
  while (static_cast<int>(pts.size()) < count) {
    const std::array<double, 2> p{us(rng), ut(rng)};
    bool ok = true;
    for (const auto& q : pts) ok = ok && torus_distance(geom, p, q) >= sep;
    if (ok) pts.push_back(p);
    if (++tries % 1000 == 0) sep *= 0.8;
  }
  return pts;
}

namespace {

// Generators whose weights share a sign: +1 or -1; 0 otherwise.
int column_sign(const WeightModel& m, int j) {
  bool pos = true, neg = true;
  for (int nu = 0; nu < m.n(); ++nu) {
    pos = pos && m.w(nu, j) >= 0;
    neg = neg && m.w(nu, j) <= 0;
  }
  return pos ? 1 : (neg ? -1 : 0);
}

}  // namespace

bool above_threshold(const TorusGeometry& geom, const WeightModel& model,
                     const std::vector<int>& degree, double epsilon) {
  for (int j = 0; j < model.r(); ++j) {
    const int sg = column_sign(model, j);
    if (sg == 0) continue;
    const double margin = sg * (model.tau[j] * geom.volume - 2.0 * kPi * degree[j] * epsilon * epsilon);
    if (!(margin > 0.0)) return false;
  }
  return true;
}

double residual_lower_bound(const TorusGeometry& geom, const WeightModel& model,
                            const std::vector<int>& degree, double epsilon) {
  // Cauchy-Schwarz on sum (lambda^-2 F + eps^-2 mu) lambda^2 c, whose value is
  // fixed by the flux up to the sign-definite |z|^2 term.
  double bound = 0.0;
  for (int j = 0; j < model.r(); ++j) {
    const int sg = column_sign(model, j);
    if (sg == 0) continue;
    const double gap = sg * (2.0 * kPi * degree[j] * epsilon * epsilon - model.tau[j] * geom.volume);
    if (gap > 0.0) bound += 0.5 * gap * gap / (epsilon * epsilon * geom.volume);
  }
  return bound;
}

ScanRecord make_record(const VortexState& state, const WeightModel& model, double control,
                       const SolveOptions& opts) {
  ScanRecord rec;
  rec.control = control;
  const EnergyBreakdown b = energy_identity(state, model);
  rec.energy = b.energy;
  rec.dbar2 = b.dbar2;
  rec.resid2 = b.resid2;
  rec.pairing = b.pairing;
  rec.res_norm = std::sqrt(std::max(0.0, b.dbar2 + b.resid2));
  rec.converged = rec.res_norm <= opts.newton_tol;
  rec.above_threshold = above_threshold(state.geom, model, state.a.degree, state.epsilon);
  rec.residual_lower_bound = residual_lower_bound(state.geom, model, state.a.degree, state.epsilon);
  const std::vector<double> mu = moment_field(model, state.z);
  for (int k = 0; k < state.geom.num_sites(); ++k) {
    double s = 0.0;
    for (int j = 0; j < model.r(); ++j) s += mu[k * model.r() + j] * mu[k * model.r() + j];
    rec.sup_mu = std::max(rec.sup_mu, std::sqrt(s));
  }
  if (!rec.above_threshold) rec.notes.push_back("BelowThreshold");
  if (rec.pairing <= 0.0) rec.notes.push_back("NonPositivePairing");
  return rec;
}

SolveResult refine_state(const VortexState& state, const WeightModel& model,
                         const SolveOptions& opts, double control) {
  VortexState cur = state;
  std::vector<std::string> notes;
  int iters = 0;
  try {
    DescentStats ds;
    cur = descend_energy(cur, model, opts, &ds);
    iters += ds.accepted_steps;
  } catch (const LineSearchStall& e) {
    notes.push_back(std::string("LineSearchStall: ") + e.what());
  }
  NewtonStats ns;
  try {
    cur = newton_refine(cur, model, opts, &ns);
  } catch (const SingularSystem& e) {
    notes.push_back(std::string("SingularSystem: ") + e.what());
  } catch (const NoConvergence& e) {
    notes.push_back(std::string("NoConvergence: ") + e.what());
    if (ns.last.z.n > 0 && residual_norm(ns.last, model) < residual_norm(cur, model)) cur = ns.last;
  }
  iters += ns.iterations;
  SolveResult out{cur, make_record(cur, model, control, opts)};
  out.record.iterations = iters;
  out.record.notes.insert(out.record.notes.end(), notes.begin(), notes.end());
  return out;
}

SolveResult solve_vortex(const TorusGeometry& geom, const WeightModel& model,
                         const std::vector<int>& degree, const InitSpec& init,
                         const SolveOptions& opts, double epsilon) {
  validate_options(opts);
  if (static_cast<int>(degree.size()) != model.r())
    throw ShapeMismatch("degree vector does not match the model rank");
  if (!model.proper) throw NotProper("moment map is not proper for this weight matrix");

  const bool above = above_threshold(geom, model, degree, epsilon);
  const int attempts = init.kind == InitKind::random && above ? opts.max_restarts + 1 : 1;
  SolveResult best;
  bool have = false;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    VortexState st;
    if (init.kind == InitKind::file) {
      st = read_snapshot(init.path);
      if (!st.geom.same_shape(geom)) throw GeometryMismatch("snapshot geometry differs from config");
      if (st.a.degree != degree) throw ShapeMismatch("snapshot degree differs from config");
    } else {
      st.geom = geom;
      st.a = make_connection_with_flux(geom, degree, FluxProfile::uniform);
      st.epsilon = epsilon;
      std::vector<std::array<double, 2>> pts = init.points;
      if (init.kind == InitKind::random) {
        const int count = model.r() == 1 ? std::abs(degree[0]) : 0;
        pts = random_points(geom, count, derive_seed(opts.seed, attempt));
      }
      if (model.r() == 1) {
        if (init.kind == InitKind::zeros && static_cast<int>(pts.size()) != std::abs(degree[0]))
          throw InvalidArgument("number of prescribed zeros must equal the degree");
        st.z = prescribe_zeros(geom, model, pts, epsilon);
        st.a = connection_for_zeros(geom, model, degree[0], pts);
        if (degree[0] < 0)
          for (auto& v : st.z.v) v = std::conj(v);
      } else {
        st.z = SiteField(geom.num_sites(), model.n());
        std::mt19937_64 rng(derive_seed(opts.seed, attempt));
        std::normal_distribution<double> nd;
        for (auto& v : st.z.v) v = cplx(nd(rng), nd(rng));
      }
    }
    st.epsilon = epsilon;
    SolveResult res = refine_state(st, model, opts, model.tau[0]);
    res.record.restarts = attempt;
    if (!have || res.record.res_norm < best.record.res_norm) {
      best = std::move(res);
      have = true;
    }
    if (best.record.converged) break;
  }
  if (!above) best.record.notes.push_back("RestartsSkippedBelowThreshold");
  return best;
}

std::vector<SolveResult> epsilon_continuation(const VortexState& state, const WeightModel& model,
                                              const std::vector<double>& eps_schedule,
                                              const SolveOptions& opts) {
  if (eps_schedule.empty()) throw InvalidArgument("epsilon schedule is empty");
  for (std::size_t i = 0; i < eps_schedule.size(); ++i) {
    if (!(eps_schedule[i] > 0.0)) throw InvalidArgument("epsilon values must be positive");
    if (i > 0 && !(eps_schedule[i] < eps_schedule[i - 1]))
      throw InvalidArgument("epsilon schedule must be strictly decreasing");
  }
  std::vector<SolveResult> out;
  VortexState cur = state;
  for (double eps : eps_schedule) {
    cur.epsilon = eps;
    SolveResult r = refine_state(cur, model, opts, eps);
    cur = r.state;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ScanRecord> tau_scan(const TorusGeometry& geom, const WeightModel& model_template,
                                 const std::vector<int>& degree,
                                 const std::vector<double>& tau_grid, const SolveOptions& opts,
                                 int threads, double epsilon) {
  std::vector<ScanRecord> out(tau_grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < tau_grid.size(); i = next++) {
      WeightModel m = model_template;
      if (m.r() == 1) m.tau = {tau_grid[i]};
      else
        for (double& t : m.tau) t *= tau_grid[i];
      SolveOptions o = opts;
      o.seed = derive_seed(opts.seed, i);
      ScanRecord rec;
      try {
        rec = solve_vortex(geom, m, degree, InitSpec{}, o, epsilon).record;
      } catch (const Error& e) {
        rec.converged = false;
        rec.notes.push_back(e.what());
      }
      rec.control = tau_grid[i];
      out[i] = std::move(rec);
    }
  };
  const int nt = std::max(1, std::min<int>(threads, static_cast<int>(tau_grid.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return out;
}

}  // namespace svx
