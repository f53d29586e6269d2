#include "svx/vortex.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace svx {

void validate_state(const VortexState& state, const WeightModel& model) {
  if (!(state.epsilon > 0.0) || !std::isfinite(state.epsilon))
    throw InvalidArgument("epsilon must be positive");
  check_shapes(state.geom, state.a, model.w, state.z);
  for (const cplx& v : state.z.v)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw InvalidArgument("section has non-finite entries");
}

std::vector<double> moment_field(const WeightModel& model, const SiteField& z) {
  const int sites = z.num_sites();
  const int n = model.n();
  const int r = model.r();
  if (z.n != n) throw ShapeMismatch("section does not match the weight model");
  std::vector<double> mu(static_cast<std::size_t>(sites) * r);
  for (int k = 0; k < sites; ++k)
    for (int j = 0; j < r; ++j) {
      double s = 0.0;
      for (int nu = 0; nu < n; ++nu) s += model.w(nu, j) * std::norm(z(k, nu));
      mu[k * r + j] = 0.5 * s - model.tau[j];
    }
  return mu;
}

Residual residual(const VortexState& state, const WeightModel& model) {
  validate_state(state, model);
  const auto& g = state.geom;
  Residual out;
  out.dbar = covariant_dbar(g, state.a, model.w, state.z);
  const std::vector<double> f = site_curvature(g, state.a);
  const std::vector<double> mu = moment_field(model, state.z);
  const int r = model.r();
  const double ie2 = 1.0 / (state.epsilon * state.epsilon);
  out.curv.resize(f.size());
  for (int k = 0; k < g.num_sites(); ++k) {
    const double il2 = 1.0 / (g.lambda[k] * g.lambda[k]);
    for (int j = 0; j < r; ++j) out.curv[k * r + j] = il2 * f[k * r + j] + ie2 * mu[k * r + j];
  }
  return out;
}

EnergyBreakdown energy_identity(const VortexState& state, const WeightModel& model) {
  validate_state(state, model);
  const auto& g = state.geom;
  const CovariantDifferences d = covariant_differences(g, state.a, model.w, state.z);
  const std::vector<double> f = site_curvature(g, state.a);
  const std::vector<double> mu = moment_field(model, state.z);
  const int n = model.n();
  const int r = model.r();
  const double c = g.cell_area();
  const double e2 = state.epsilon * state.epsilon;
  const double ie2 = 1.0 / e2;
  const cplx I(0.0, 1.0);

  CompensatedSum se, sd, sr, sp;
  for (int k = 0; k < g.num_sites(); ++k) {
    const double l2 = g.lambda[k] * g.lambda[k];
    double grad = 0.0, dbar = 0.0, om = 0.0;
    for (int nu = 0; nu < n; ++nu) {
      const cplx ds = d.ds(k, nu);
      const cplx dt = d.dt(k, nu);
      grad += std::norm(ds) + std::norm(dt);
      dbar += std::norm(ds + I * dt);
      om += std::imag(std::conj(ds) * dt);
    }
    double ff = 0.0, mm = 0.0, rr = 0.0, fm = 0.0;
    for (int j = 0; j < r; ++j) {
      const double fj = f[k * r + j];
      const double mj = mu[k * r + j];
      ff += fj * fj;
      mm += mj * mj;
      const double q = fj / l2 + ie2 * mj;
      rr += q * q;
      fm += fj * mj;
    }
    se += 0.5 * (grad + e2 * ff / l2 + ie2 * l2 * mm) * c;
    sd += 0.5 * dbar * c;
    sr += 0.5 * e2 * l2 * rr * c;
    sp += (om - fm) * c;
  }
  EnergyBreakdown b;
  b.energy = se.value();
  b.dbar2 = sd.value();
  b.resid2 = sr.value();
  b.pairing = sp.value();
  b.identity_gap = std::abs(b.energy - b.dbar2 - b.resid2 - b.pairing);
  return b;
}

double energy(const VortexState& state, const WeightModel& model) {
  return energy_identity(state, model).energy;
}

double topological_pairing(const VortexState& state, const WeightModel& model) {
  return energy_identity(state, model).pairing;
}

double residual_norm(const VortexState& state, const WeightModel& model) {
  const EnergyBreakdown b = energy_identity(state, model);
  return std::sqrt(std::max(0.0, b.dbar2 + b.resid2));
}

double continuum_pairing(const WeightModel& model, const std::vector<int>& degree) {
  if (static_cast<int>(degree.size()) != model.r())
    throw ShapeMismatch("degree vector does not match the model rank");
  double s = 0.0;
  for (int j = 0; j < model.r(); ++j) s += model.tau[j] * degree[j];
  return 2.0 * kPi * s;
}

EnergyGradient energy_gradient(const VortexState& state, const WeightModel& model) {
  validate_state(state, model);
  const auto& g = state.geom;
  const int sites = g.num_sites();
  const int n = model.n();
  const int r = model.r();
  const double c = g.cell_area();
  const double e2 = state.epsilon * state.epsilon;
  const double ie2 = 1.0 / e2;
  const std::vector<double> f = site_curvature(g, state.a);
  const std::vector<double> mu = moment_field(model, state.z);

  EnergyGradient out{SiteField(sites, n), LinkField(sites, r)};
  out.ga.degree = state.a.degree;
  const SiteField& z = state.z;

  for (int k = 0; k < sites; ++k) {
    const int e = g.east(k);
    const int nn = g.north(k);
    const double l2 = g.lambda[k] * g.lambda[k];
    for (int nu = 0; nu < n; ++nu) {
      const cplx us = std::polar(1.0, -link_phase(g, state.a, model.w, k, 0, nu));
      const cplx ut = std::polar(1.0, -link_phase(g, state.a, model.w, k, 1, nu));
      const cplx tz_s = us * z(e, nu);
      const cplx tz_t = ut * z(nn, nu);
      const cplx ds = (tz_s - z(k, nu)) / g.hs;
      const cplx dt = (tz_t - z(k, nu)) / g.ht;
      out.gz(e, nu) += c * std::conj(us) * ds / g.hs;
      out.gz(k, nu) -= c * ds / g.hs;
      out.gz(nn, nu) += c * std::conj(ut) * dt / g.ht;
      out.gz(k, nu) -= c * dt / g.ht;
      double wm = 0.0;
      for (int j = 0; j < r; ++j) wm += model.w(nu, j) * mu[k * r + j];
      out.gz(k, nu) += c * ie2 * l2 * wm * z(k, nu);
      const double ims = std::imag(std::conj(ds) * tz_s);
      const double imt = std::imag(std::conj(dt) * tz_t);
      for (int j = 0; j < r; ++j) {
        out.ga.as[k * r + j] += c * model.w(nu, j) * ims;
        out.ga.at[k * r + j] += c * model.w(nu, j) * imt;
      }
    }
  }

  // curvature term: each site averages its four surrounding plaquettes
  std::vector<double> gp(static_cast<std::size_t>(sites) * r, 0.0);
  for (int k = 0; k < sites; ++k) {
    const int w = g.west(k);
    const int s = g.south(k);
    const int sw = g.west(s);
    const double il2 = 1.0 / (g.lambda[k] * g.lambda[k]);
    for (int j = 0; j < r; ++j) {
      const double q = 0.25 * c * e2 * il2 * f[k * r + j];
      gp[k * r + j] += q;
      gp[w * r + j] += q;
      gp[s * r + j] += q;
      gp[sw * r + j] += q;
    }
  }
  for (int k = 0; k < sites; ++k) {
    const int s = g.south(k);
    const int w = g.west(k);
    for (int j = 0; j < r; ++j) {
      out.ga.as[k * r + j] += (gp[k * r + j] - gp[s * r + j]) / g.ht;
      out.ga.at[k * r + j] += (gp[w * r + j] - gp[k * r + j]) / g.hs;
    }
  }
  return out;
}

SupBoundReport sup_bound_check(const VortexState& state, const WeightModel& model,
                               double residual_tol, double slack) {
  const double bound = sup_norm_bound(model);
  const double res = residual_norm(state, model);
  if (!(res <= residual_tol))
    throw NotASolution("residual norm " + format_double(res) + " exceeds tolerance " +
                       format_double(residual_tol));
  SupBoundReport rep;
  rep.bound = bound;
  for (int k = 0; k < state.z.num_sites(); ++k) {
    double s = 0.0;
    for (int nu = 0; nu < state.z.n; ++nu) s += std::norm(state.z(k, nu));
    rep.max_norm2 = std::max(rep.max_norm2, s);
  }
  rep.overshoot = rep.max_norm2 / bound - 1.0;
  rep.satisfied = rep.max_norm2 <= bound * (1.0 + slack);
  return rep;
}

double default_zero_threshold(const WeightModel& model) {
  double t2 = 0.0;
  for (double t : model.tau) t2 += t * t;
  return 0.1 * std::sqrt(2.0 * std::sqrt(t2));
}

std::vector<int> plaquette_winding(const VortexState& state, const WeightModel& model,
                                   int component) {
  validate_state(state, model);
  if (component < 0 || component >= model.n())
    throw InvalidArgument("component index out of range");
  const auto& g = state.geom;
  const auto& a = state.a;
  const int nu = component;
  const int r = a.r;
  const std::vector<double> f = curvature(g, a);
  const double c = g.cell_area();
  auto edge = [&](int x, int y, int dir) {
    const cplx u = std::polar(1.0, -link_phase(g, a, model.w, x, dir, nu));
    return std::arg(std::conj(state.z(x, nu)) * u * state.z(y, nu));
  };
  std::vector<int> out(g.num_sites());
  for (int k = 0; k < g.num_sites(); ++k) {
    const int e = g.east(k);
    const int n = g.north(k);
    const int ne = g.north(e);
    double s = edge(k, e, 0) + edge(e, ne, 1) - edge(n, ne, 0) - edge(k, n, 1);
    double wphi = 0.0;
    for (int j = 0; j < r; ++j) wphi += model.w(nu, j) * f[k * r + j] * c;
    out[k] = static_cast<int>(std::lround((s + wphi) / (2.0 * kPi)));
  }
  // A site where z vanishes exactly has no phase; its four plaquettes are
  // replaced by the winding of the surrounding ring, booked on plaquette k.
  for (int k = 0; k < g.num_sites(); ++k) {
    if (state.z(k, nu) != cplx(0.0)) continue;
    const int w = g.west(k), s = g.south(k), e = g.east(k), n = g.north(k);
    const int sw = g.west(s), se = g.east(s), nw = g.north(w), ne = g.north(e);
    bool clean = true;
    for (int x : {sw, s, se, e, ne, n, nw, w}) clean = clean && state.z(x, nu) != cplx(0.0);
    if (!clean) throw AmbiguousZero("adjacent sites vanish exactly; refine the grid");
    double ring = edge(sw, s, 0) + edge(s, se, 0) + edge(se, e, 1) + edge(e, ne, 1) -
                  edge(n, ne, 0) - edge(nw, n, 0) - edge(w, nw, 1) - edge(sw, w, 1);
    for (int p : {k, w, s, sw})
      for (int j = 0; j < r; ++j) ring += model.w(nu, j) * f[p * r + j] * c;
    out[w] = out[s] = out[sw] = 0;
    out[k] = static_cast<int>(std::lround(ring / (2.0 * kPi)));
  }
  return out;
}

namespace {

std::vector<std::pair<int, int>> counted_cells(const VortexState& state, const WeightModel& model,
                                               int component, double theta) {
  if (theta <= 0.0) theta = default_zero_threshold(model);
  const auto& g = state.geom;
  const std::vector<int> wind = plaquette_winding(state, model, component);
  std::vector<std::pair<int, int>> cells;
  for (int k = 0; k < g.num_sites(); ++k) {
    const int e = g.east(k);
    const int n = g.north(k);
    const int ne = g.north(e);
    const double m = std::min({std::abs(state.z(k, component)), std::abs(state.z(e, component)),
                               std::abs(state.z(n, component)), std::abs(state.z(ne, component))});
    if (wind[k] == 0) continue;
    if (std::abs(wind[k]) > 1)
      throw AmbiguousZero("plaquette " + std::to_string(k) + " winds " +
                          std::to_string(wind[k]) + " times; refine the grid");
    if (m >= theta)
      throw AmbiguousZero("plaquette " + std::to_string(k) +
                          " winds although |z| stays above the zero threshold");
    cells.emplace_back(k, wind[k]);
  }
  return cells;
}

}  // namespace

int zero_count(const VortexState& state, const WeightModel& model, int component, double theta) {
  int total = 0;
  for (const auto& [k, w] : counted_cells(state, model, component, theta)) total += w;
  return total;
}

std::vector<std::array<double, 2>> zero_locations(const VortexState& state,
                                                  const WeightModel& model, int component,
                                                  double theta) {
  const auto& g = state.geom;
  std::vector<std::array<double, 2>> out;
  for (const auto& [k, w] : counted_cells(state, model, component, theta)) {
    const auto p = g.position(k);
    for (int m = 0; m < std::abs(w); ++m) out.push_back({p[0] + 0.5 * g.hs, p[1] + 0.5 * g.ht});
  }
  return out;
}

double torus_distance(const TorusGeometry& geom, std::array<double, 2> p,
                      std::array<double, 2> q) {
  double ds = std::fmod(std::abs(p[0] - q[0]), geom.ls);
  double dt = std::fmod(std::abs(p[1] - q[1]), geom.lt);
  ds = std::min(ds, geom.ls - ds);
  dt = std::min(dt, geom.lt - dt);
  return std::hypot(ds, dt);
}

}  // namespace svx
