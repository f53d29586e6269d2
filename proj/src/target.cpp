#include "svx/target.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace svx {

namespace {

void check_point(const WeightModel& model, std::size_t size) {
  if (static_cast<int>(size) != model.n())
    throw ShapeMismatch("point has " + std::to_string(size) + " coordinates, model acts on C^" +
                        std::to_string(model.n()));
}

bool certifies(const WeightMatrix& w, const std::vector<long long>& xi) {
  for (int nu = 0; nu < w.n; ++nu) {
    long long s = 0;
    for (int j = 0; j < w.r; ++j) s += static_cast<long long>(w(nu, j)) * xi[j];
    if (s <= 0) return false;
  }
  return true;
}

// Phase-one simplex for W xi >= 1 with xi = p - q, p, q >= 0. Bland's rule
// keeps it finite; the system is tiny so a dense tableau is fine.
bool simplex_feasible(const WeightMatrix& w, std::vector<double>* cert) {
  const int m = w.n;
  const int r = w.r;
  // columns: p (r), q (r), surplus (m), artificial (m), rhs
  const int cols = 2 * r + 2 * m;
  std::vector<std::vector<double>> t(m + 1, std::vector<double>(cols + 1, 0.0));
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < r; ++j) {
      t[i][j] = w(i, j);
      t[i][r + j] = -w(i, j);
    }
    t[i][2 * r + i] = -1.0;
    t[i][2 * r + m + i] = 1.0;
    t[i][cols] = 1.0;
    basis[i] = 2 * r + m + i;
  }
  // objective row: minimize sum of artificials, expressed in nonbasics
  for (int c = 0; c <= cols; ++c) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += t[i][c];
    t[m][c] = (c >= 2 * r + m && c < cols) ? 0.0 : s;
  }
  const double eps = 1e-12;
  for (int iter = 0; iter < 10000; ++iter) {
    int enter = -1;
    for (int c = 0; c < cols; ++c)
      if (t[m][c] > eps) {
        enter = c;
        break;
      }
    if (enter < 0) break;
    int leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      if (t[i][enter] > eps) {
        const double ratio = t[i][cols] / t[i][enter];
        if (ratio < best - eps || (std::abs(ratio - best) <= eps && basis[i] < basis[leave])) {
          best = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) break;  // unbounded direction cannot occur in phase one
    const double piv = t[leave][enter];
    for (double& x : t[leave]) x /= piv;
    for (int i = 0; i <= m; ++i) {
      if (i == leave) continue;
      const double f = t[i][enter];
      if (f == 0.0) continue;
      for (int c = 0; c <= cols; ++c) t[i][c] -= f * t[leave][c];
    }
    basis[leave] = enter;
  }
  if (t[m][cols] > 1e-9) return false;
  std::vector<double> xi(r, 0.0);
  for (int i = 0; i < m; ++i) {
    if (basis[i] < r) xi[basis[i]] += t[i][cols];
    else if (basis[i] < 2 * r) xi[basis[i] - r] -= t[i][cols];
  }
  for (int nu = 0; nu < m; ++nu) {
    double s = 0.0;
    for (int j = 0; j < r; ++j) s += w(nu, j) * xi[j];
    if (s <= 0.5) return false;
  }
  if (cert) *cert = xi;
  return true;
}

}  // namespace

bool properness_check(const WeightMatrix& w, std::vector<double>* certificate) {
  if (w.n <= 0 || w.r <= 0) return false;
  std::vector<std::vector<long long>> candidates;
  if (w.r == 1) {
    candidates = {{1}, {-1}};
  } else if (w.r == 2) {
    // The feasible cone, when nonempty, is either a half-plane (contains a
    // row) or is cut out by two boundary rays perpendicular to rows; the sum
    // of those rays lies inside.
    std::vector<std::vector<long long>> rays;
    for (int nu = 0; nu < w.n; ++nu) {
      candidates.push_back({w(nu, 0), w(nu, 1)});
      rays.push_back({-w(nu, 1), w(nu, 0)});
      rays.push_back({w(nu, 1), -w(nu, 0)});
    }
    for (std::size_t a = 0; a < rays.size(); ++a)
      for (std::size_t b = a + 1; b < rays.size(); ++b)
        candidates.push_back({rays[a][0] + rays[b][0], rays[a][1] + rays[b][1]});
  } else {
    return simplex_feasible(w, certificate);
  }
  for (const auto& c : candidates) {
    if (certifies(w, c)) {
      if (certificate) certificate->assign(c.begin(), c.end());
      return true;
    }
  }
  return false;
}

WeightModel make_weight_model(int n, int r, std::vector<int> w, std::vector<double> tau) {
  if (n <= 0 || r <= 0) throw InvalidArgument("weight model needs N >= 1 and r >= 1");
  if (static_cast<int>(w.size()) != n * r)
    throw ShapeMismatch("weight matrix has " + std::to_string(w.size()) + " entries, expected " +
                        std::to_string(n * r));
  if (static_cast<int>(tau.size()) != r)
    throw ShapeMismatch("tau has " + std::to_string(tau.size()) + " entries, expected " +
                        std::to_string(r));
  for (double t : tau)
    if (!std::isfinite(t)) throw InvalidArgument("tau must be finite");
  WeightModel m;
  m.w = WeightMatrix{n, r, std::move(w)};
  m.tau = std::move(tau);
  for (int j = 0; j < r; ++j) {
    bool any = false;
    for (int nu = 0; nu < n; ++nu) any = any || m.w(nu, j) != 0;
    if (!any) throw InvalidArgument("generator " + std::to_string(j) + " acts trivially");
  }
  m.proper = properness_check(m.w, &m.certificate);
  return m;
}

std::vector<double> moment_map(const WeightModel& model, std::span<const cplx> z) {
  check_point(model, z.size());
  std::vector<double> mu(model.r());
  for (int j = 0; j < model.r(); ++j) {
    double s = 0.0;
    for (int nu = 0; nu < model.n(); ++nu) s += model.w(nu, j) * std::norm(z[nu]);
    mu[j] = 0.5 * s - model.tau[j];
  }
  return mu;
}

std::vector<cplx> infinitesimal_action(const WeightModel& model, std::span<const double> xi,
                                       std::span<const cplx> z) {
  check_point(model, z.size());
  if (static_cast<int>(xi.size()) != model.r())
    throw ShapeMismatch("Lie algebra element has the wrong rank");
  std::vector<cplx> out(model.n());
  for (int nu = 0; nu < model.n(); ++nu) {
    double wx = 0.0;
    for (int j = 0; j < model.r(); ++j) wx += model.w(nu, j) * xi[j];
    out[nu] = cplx(0.0, -wx) * z[nu];
  }
  return out;
}

double omega(std::span<const cplx> v, std::span<const cplx> w) {
  if (v.size() != w.size()) throw ShapeMismatch("omega arguments differ in length");
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += std::imag(std::conj(v[i]) * w[i]);
  return s;
}

SwIdentity sw_identity_check(const WeightModel& model, std::span<const cplx> z) {
  check_point(model, z.size());
  const int n = model.n();
  const int r = model.r();
  std::vector<long double> mu(r);
  for (int j = 0; j < r; ++j) {
    long double s = 0.0L;
    for (int nu = 0; nu < n; ++nu)
      s += static_cast<long double>(model.w(nu, j)) * std::norm(std::complex<long double>(z[nu]));
    mu[j] = 0.5L * s - model.tau[j];
  }
  // lhs: <z, rho(mu) J z> = sum_nu (W mu)_nu |z_nu|^2
  long double lhs = 0.0L;
  for (int nu = 0; nu < n; ++nu) {
    long double wm = 0.0L;
    for (int j = 0; j < r; ++j) wm += model.w(nu, j) * mu[j];
    lhs += wm * std::norm(std::complex<long double>(z[nu]));
  }
  // rhs: 2 <mu, mu - mu(0)>
  long double rhs = 0.0L;
  for (int j = 0; j < r; ++j) rhs += 2.0L * mu[j] * (mu[j] + model.tau[j]);
  SwIdentity out;
  out.lhs = static_cast<double>(lhs);
  out.rhs = static_cast<double>(rhs);
  out.discrepancy = static_cast<double>(std::fabs(lhs - rhs));
  return out;
}

double sup_norm_bound(const WeightModel& model) {
  if (!model.proper) throw NotProper("moment map is not proper for this weight matrix");
  const auto& xi = model.certificate;
  double tx = 0.0;
  double tn = 0.0;
  double xn = 0.0;
  for (int j = 0; j < model.r(); ++j) {
    tx += model.tau[j] * xi[j];
    tn += model.tau[j] * model.tau[j];
    xn += xi[j] * xi[j];
  }
  double min_wx = std::numeric_limits<double>::infinity();
  for (int nu = 0; nu < model.n(); ++nu) {
    double s = 0.0;
    for (int j = 0; j < model.r(); ++j) s += model.w(nu, j) * xi[j];
    min_wx = std::min(min_wx, s);
  }
  return (tx + std::sqrt(tn) * std::sqrt(xn)) / min_wx;
}

}  // namespace svx
