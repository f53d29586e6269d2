#include "svx/lattice.hpp"

#include <cmath>
#include <random>
#include <string>

namespace svx {

TorusGeometry make_torus(int ns, int nt, double ls, double lt, const LambdaSpec& lambda) {
  if (ns < 4 || nt < 4)
    throw NonPositiveDimension("torus needs at least 4 sites per direction, got " +
                               std::to_string(ns) + "x" + std::to_string(nt));
  if (!(ls > 0.0) || !(lt > 0.0) || !std::isfinite(ls) || !std::isfinite(lt))
    throw NonPositiveDimension("torus side lengths must be positive and finite");

  TorusGeometry g;
  g.ns = ns;
  g.nt = nt;
  g.ls = ls;
  g.lt = lt;
  g.hs = ls / ns;
  g.ht = lt / nt;
  const int sites = ns * nt;
  if (lambda.table.empty()) {
    if (!(lambda.constant > 0.0) || !std::isfinite(lambda.constant))
      throw NonPositiveConformalFactor("conformal factor must be positive");
    g.lambda.assign(sites, lambda.constant);
  } else {
    if (static_cast<int>(lambda.table.size()) != sites)
      throw ShapeMismatch("conformal factor table has " + std::to_string(lambda.table.size()) +
                          " entries, expected " + std::to_string(sites));
    for (double l : lambda.table)
      if (!(l > 0.0) || !std::isfinite(l))
        throw NonPositiveConformalFactor("conformal factor must be positive at every site");
    g.lambda = lambda.table;
  }

  if (lambda.table.empty() && lambda.constant == 1.0) {
    g.volume = ls * lt;
  } else {
    CompensatedSum vol;
    for (double l : g.lambda) vol += l * l * g.hs * g.ht;
    g.volume = vol.value();
  }
  return g;
}

LinkField make_connection_with_flux(const TorusGeometry& geom, std::span<const int> degree,
                                    FluxProfile profile, std::uint64_t seed,
                                    double random_amplitude) {
  const int r = static_cast<int>(degree.size());
  const int sites = geom.num_sites();
  LinkField a(sites, r);
  a.degree.assign(degree.begin(), degree.end());
  if (profile == FluxProfile::seam) return a;

  // Landau gauge: a_t = f s inside the fundamental domain; the seam twist
  // closes the last column so every plaquette carries f hs ht.
  for (int j = 0; j < r; ++j) {
    const double f = 2.0 * kPi * degree[j] / (geom.ls * geom.lt);
    for (int k = 0; k < sites; ++k) a.at[k * r + j] = f * geom.i_of(k) * geom.hs;
  }
  if (profile == FluxProfile::random_plus_flux) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-random_amplitude, random_amplitude);
    for (auto& x : a.as) x += u(rng);
    for (auto& x : a.at) x += u(rng);
  }
  return a;
}

namespace {

// Holonomy of plaquette k for generator j, including the seam contribution.
double plaquette_holonomy(const TorusGeometry& geom, const LinkField& a, int k, int j) {
  const int r = a.r;
  const int e = geom.east(k);
  const int n = geom.north(k);
  double h = a.as[k * r + j] * geom.hs + a.at[e * r + j] * geom.ht - a.as[n * r + j] * geom.hs -
             a.at[k * r + j] * geom.ht;
  if (geom.i_of(k) == geom.ns - 1) h += 2.0 * kPi * a.degree[j] / geom.nt;
  return h;
}

void check_link_shape(const TorusGeometry& geom, const LinkField& a) {
  if (a.r <= 0 || a.num_sites() != geom.num_sites() ||
      a.at.size() != a.as.size() || static_cast<int>(a.degree.size()) != a.r)
    throw GeometryMismatch("link field does not match the torus geometry");
}

}  // namespace

std::vector<double> curvature(const TorusGeometry& geom, const LinkField& a) {
  check_link_shape(geom, a);
  const int sites = geom.num_sites();
  const double inv_area = 1.0 / geom.cell_area();
  std::vector<double> f(static_cast<std::size_t>(sites) * a.r);
  for (int k = 0; k < sites; ++k)
    for (int j = 0; j < a.r; ++j) f[k * a.r + j] = plaquette_holonomy(geom, a, k, j) * inv_area;
  return f;
}

std::vector<double> site_curvature(const TorusGeometry& geom, const LinkField& a) {
  const std::vector<double> f = curvature(geom, a);
  const int sites = geom.num_sites();
  const int r = a.r;
  std::vector<double> out(f.size());
  for (int k = 0; k < sites; ++k) {
    const int w = geom.west(k);
    const int s = geom.south(k);
    const int sw = geom.west(s);
    for (int j = 0; j < r; ++j)
      out[k * r + j] = 0.25 * (f[k * r + j] + f[w * r + j] + f[s * r + j] + f[sw * r + j]);
  }
  return out;
}

std::vector<double> total_flux(const TorusGeometry& geom, const LinkField& a) {
  check_link_shape(geom, a);
  std::vector<double> out(a.r);
  for (int j = 0; j < a.r; ++j) {
    CompensatedSum s;
    for (int k = 0; k < geom.num_sites(); ++k) s += plaquette_holonomy(geom, a, k, j);
    out[j] = s.value();
  }
  return out;
}

double link_phase(const TorusGeometry& geom, const LinkField& a, const WeightMatrix& w, int k,
                  int dir, int nu) {
  const int r = a.r;
  double phi = 0.0;
  if (dir == 0) {
    for (int j = 0; j < r; ++j) phi += w(nu, j) * a.as[k * r + j];
    phi *= geom.hs;
    if (geom.i_of(k) == geom.ns - 1) {
      double twist = 0.0;
      for (int j = 0; j < r; ++j) twist += w(nu, j) * static_cast<double>(a.degree[j]);
      phi -= 2.0 * kPi * twist * geom.j_of(k) / geom.nt;
    }
  } else {
    for (int j = 0; j < r; ++j) phi += w(nu, j) * a.at[k * r + j];
    phi *= geom.ht;
  }
  return phi;
}

void check_shapes(const TorusGeometry& geom, const LinkField& a, const WeightMatrix& w,
                  const SiteField& z) {
  check_link_shape(geom, a);
  if (w.r != a.r)
    throw ShapeMismatch("weight matrix has " + std::to_string(w.r) +
                        " columns but the connection has rank " + std::to_string(a.r));
  if (w.n != z.n)
    throw ShapeMismatch("weight matrix has " + std::to_string(w.n) +
                        " rows but the section has " + std::to_string(z.n) + " components");
  if (z.num_sites() != geom.num_sites())
    throw ShapeMismatch("section does not match the torus geometry");
}

CovariantDifferences covariant_differences(const TorusGeometry& geom, const LinkField& a,
                                           const WeightMatrix& w, const SiteField& z) {
  check_shapes(geom, a, w, z);
  const int sites = geom.num_sites();
  const int n = z.n;
  CovariantDifferences d{SiteField(sites, n), SiteField(sites, n)};
  const double ihs = 1.0 / geom.hs;
  const double iht = 1.0 / geom.ht;
  for (int k = 0; k < sites; ++k) {
    const int e = geom.east(k);
    const int nn = geom.north(k);
    for (int nu = 0; nu < n; ++nu) {
      const cplx us = std::polar(1.0, -link_phase(geom, a, w, k, 0, nu));
      const cplx ut = std::polar(1.0, -link_phase(geom, a, w, k, 1, nu));
      d.ds(k, nu) = (us * z(e, nu) - z(k, nu)) * ihs;
      d.dt(k, nu) = (ut * z(nn, nu) - z(k, nu)) * iht;
    }
  }
  return d;
}

SiteField covariant_dbar(const TorusGeometry& geom, const LinkField& a, const WeightMatrix& w,
                         const SiteField& z) {
  CovariantDifferences d = covariant_differences(geom, a, w, z);
  const cplx i(0.0, 1.0);
  for (std::size_t m = 0; m < d.ds.v.size(); ++m) d.ds.v[m] = 0.5 * (d.ds.v[m] + i * d.dt.v[m]);
  return std::move(d.ds);
}

LinkField lattice_differential(const TorusGeometry& geom, const GaugeMap& g) {
  const int sites = geom.num_sites();
  if (static_cast<int>(g.g.size()) != sites * g.r || g.r <= 0)
    throw ShapeMismatch("gauge map does not match the torus geometry");
  LinkField d(sites, g.r);
  for (int k = 0; k < sites; ++k) {
    const int e = geom.east(k);
    const int n = geom.north(k);
    for (int j = 0; j < g.r; ++j) {
      d.as[k * g.r + j] = (g.g[e * g.r + j] - g.g[k * g.r + j]) / geom.hs;
      d.at[k * g.r + j] = (g.g[n * g.r + j] - g.g[k * g.r + j]) / geom.ht;
    }
  }
  return d;
}

std::pair<SiteField, LinkField> gauge_transform(const TorusGeometry& geom, const GaugeMap& g,
                                                const WeightMatrix& w, const SiteField& z,
                                                const LinkField& a) {
  check_shapes(geom, a, w, z);
  if (g.r != a.r) throw ShapeMismatch("gauge map rank differs from the connection rank");
  const LinkField dg = lattice_differential(geom, g);
  LinkField out_a = a;
  for (std::size_t m = 0; m < out_a.as.size(); ++m) {
    out_a.as[m] += dg.as[m];
    out_a.at[m] += dg.at[m];
  }
  SiteField out_z = z;
  const int sites = geom.num_sites();
  for (int k = 0; k < sites; ++k)
    for (int nu = 0; nu < z.n; ++nu) {
      double phase = 0.0;
      for (int j = 0; j < g.r; ++j) phase += w(nu, j) * g.g[k * g.r + j];
      out_z(k, nu) *= std::polar(1.0, phase);
    }
  return {std::move(out_z), std::move(out_a)};
}

}  // namespace svx
