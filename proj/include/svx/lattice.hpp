#pragma once

// Discrete flat torus, abelian link fields carrying exact integer flux, and
// covariant differencing of C^N-valued sections.
//
// Conventions (used throughout the library):
//  * Sites are (i, j) with 0 <= i < Ns (s-direction), 0 <= j < Nt; the flat
//    index is k = j * Ns + i. Plaquette k has lower-left corner at site k.
//  * A link field stores real values a_s(k), a_t(k) per generator on the
//    forward links k -> k+s, k -> k+t. The link angle is theta = a * h.
//  * Parallel transport along a link multiplies component nu by
//    exp(-i (W theta)_nu); the continuum covariant derivative is
//    d_A z = dz - i (W a) z.
//  * Flux is carried by a seam twist: crossing i = Ns-1 -> 0 at row j the
//    section is continued as exp(+i (W chi_j)) z(0, j) with
//    chi_j = 2 pi d j / Nt. The plaquettes of the seam column receive the
//    extra holonomy 2 pi d / Nt each, so the total flux is 2 pi d.
//  * Gauge maps are periodic site functions g; they act by
//    z -> exp(+i W g) z, a -> a + dg.

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "svx/common.hpp"

namespace svx {

struct TorusGeometry {
  int ns = 0;
  int nt = 0;
  double ls = 0.0;
  double lt = 0.0;
  double hs = 0.0;
  double ht = 0.0;
  std::vector<double> lambda;  // conformal factor per site
  double volume = 0.0;         // sum of lambda^2 hs ht

  int num_sites() const { return ns * nt; }
  double cell_area() const { return hs * ht; }
  int site(int i, int j) const {
    i %= ns;
    if (i < 0) i += ns;
    j %= nt;
    if (j < 0) j += nt;
    return j * ns + i;
  }
  int i_of(int k) const { return k % ns; }
  int j_of(int k) const { return k / ns; }
  int east(int k) const { return i_of(k) == ns - 1 ? k - (ns - 1) : k + 1; }
  int west(int k) const { return i_of(k) == 0 ? k + (ns - 1) : k - 1; }
  int north(int k) const { return j_of(k) == nt - 1 ? k - (nt - 1) * ns : k + ns; }
  int south(int k) const { return j_of(k) == 0 ? k + (nt - 1) * ns : k - ns; }
  std::array<double, 2> position(int k) const { return {i_of(k) * hs, j_of(k) * ht}; }

  bool same_shape(const TorusGeometry& o) const {
    return ns == o.ns && nt == o.nt && ls == o.ls && lt == o.lt && lambda == o.lambda;
  }
};

/// Conformal factor: either a constant or one positive value per site.
struct LambdaSpec {
  double constant = 1.0;
  std::vector<double> table;
};

TorusGeometry make_torus(int ns, int nt, double ls, double lt, const LambdaSpec& lambda = {});

/// Integer weight matrix (N rows, r columns) of a torus action on C^N.
struct WeightMatrix {
  int n = 0;
  int r = 0;
  std::vector<int> w;  // row-major n x r

  int operator()(int nu, int j) const { return w[static_cast<std::size_t>(nu) * r + j]; }
};

struct SiteField {
  int n = 0;
  std::vector<cplx> v;  // site-major: v[k * n + nu]

  SiteField() = default;
  SiteField(int sites, int comps) : n(comps), v(static_cast<std::size_t>(sites) * comps) {}
  cplx& operator()(int k, int nu) { return v[static_cast<std::size_t>(k) * n + nu]; }
  const cplx& operator()(int k, int nu) const { return v[static_cast<std::size_t>(k) * n + nu]; }
  int num_sites() const { return n == 0 ? 0 : static_cast<int>(v.size()) / n; }
};

struct LinkField {
  int r = 0;
  std::vector<double> as;  // as[k * r + j]
  std::vector<double> at;
  std::vector<int> degree;

  LinkField() = default;
  LinkField(int sites, int rank)
      : r(rank),
        as(static_cast<std::size_t>(sites) * rank, 0.0),
        at(static_cast<std::size_t>(sites) * rank, 0.0),
        degree(rank, 0) {}
  int num_sites() const { return r == 0 ? 0 : static_cast<int>(as.size()) / r; }
};

struct GaugeMap {
  int r = 0;
  std::vector<double> g;  // g[k * r + j]

  GaugeMap() = default;
  GaugeMap(int sites, int rank) : r(rank), g(static_cast<std::size_t>(sites) * rank, 0.0) {}
};

enum class FluxProfile { uniform, seam, random_plus_flux };

/// Connection of the given degree. `uniform` has constant coordinate curvature
/// 2 pi d / (Ls Lt); `seam` keeps all links zero so the flux sits on the seam
/// column; `random_plus_flux` adds seeded periodic noise of the given
/// amplitude to the uniform profile.
LinkField make_connection_with_flux(const TorusGeometry& geom, std::span<const int> degree,
                                    FluxProfile profile, std::uint64_t seed = 0,
                                    double random_amplitude = 1.0);

/// Plaquette curvature densities f[p * r + j] (holonomy / cell area).
std::vector<double> curvature(const TorusGeometry& geom, const LinkField& a);

/// Plaquette curvature averaged onto sites (mean of the four plaquettes
/// sharing the site).
std::vector<double> site_curvature(const TorusGeometry& geom, const LinkField& a);

/// Sum of curvature times cell area, per generator.
std::vector<double> total_flux(const TorusGeometry& geom, const LinkField& a);

/// Phase phi of the transporter exp(-i phi) on the forward link of site k in
/// direction dir (0 = s, 1 = t) acting on component nu, seam twist included.
double link_phase(const TorusGeometry& geom, const LinkField& a, const WeightMatrix& w, int k,
                  int dir, int nu);

struct CovariantDifferences {
  SiteField ds;
  SiteField dt;
};

/// Forward covariant differences D_s z, D_t z at every site.
CovariantDifferences covariant_differences(const TorusGeometry& geom, const LinkField& a,
                                           const WeightMatrix& w, const SiteField& z);

/// 1/2 (D_s z + i D_t z) at every site.
SiteField covariant_dbar(const TorusGeometry& geom, const LinkField& a, const WeightMatrix& w,
                         const SiteField& z);

/// Lattice differential dg as a degree-zero link field.
LinkField lattice_differential(const TorusGeometry& geom, const GaugeMap& g);

std::pair<SiteField, LinkField> gauge_transform(const TorusGeometry& geom, const GaugeMap& g,
                                                const WeightMatrix& w, const SiteField& z,
                                                const LinkField& a);

/// Throws unless z, a and w fit geom and each other.
void check_shapes(const TorusGeometry& geom, const LinkField& a, const WeightMatrix& w,
                  const SiteField& z);

}  // namespace svx
