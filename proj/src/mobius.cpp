#include "svx/mobius.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

namespace svx {

namespace {

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
Vec3 scaled(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
Vec3 neg(const Vec3& a) { return {-a[0], -a[1], -a[2]}; }

void check_eta(const Vec3& eta) {
  if (!(norm(eta) < 1.0)) throw EtaOutOfBall("|eta| must be below 1");
}

// Checked once per process on a fixed sample; see the header comment.
bool inverse_identity_holds() {
  static const bool ok = [] {
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ur(0.0, 0.95);
    for (int i = 0; i < 200; ++i) {
      Vec3 x{nd(rng), nd(rng), nd(rng)};
      x = scaled(x, 1.0 / norm(x));
      Vec3 e{nd(rng), nd(rng), nd(rng)};
      e = scaled(e, ur(rng) / norm(e));
      const Vec3 y = mobius_map(neg(e), mobius_map(e, x));
      if (norm({y[0] - x[0], y[1] - x[1], y[2] - x[2]}) > 1e-10) return false;
    }
    return true;
  }();
  return ok;
}

}  // namespace

void validate_measure(const WeightedSphereMeasure& m) {
  if (m.points.size() != m.weights.size())
    throw InvalidArgument("measure has different numbers of points and weights");
  if (m.points.empty()) throw InvalidArgument("measure is empty");
  double total = 0.0;
  for (std::size_t i = 0; i < m.points.size(); ++i) {
    if (std::abs(norm(m.points[i]) - 1.0) > 1e-12)
      throw InvalidArgument("measure point " + std::to_string(i) + " is not on the unit sphere");
    if (!(m.weights[i] > 0.0) || !std::isfinite(m.weights[i]))
      throw InvalidArgument("measure weights must be positive");
    total += m.weights[i];
  }
  if (!(total > 0.0)) throw InvalidArgument("measure has zero total weight");
}

WeightedSphereMeasure octahedron_measure() {
  WeightedSphereMeasure m;
  m.points = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  m.weights.assign(6, 1.0);
  return m;
}

Vec3 mobius_map(const Vec3& eta, const Vec3& x) {
  check_eta(eta);
  const double xe = dot(x, eta);
  const double den = 1.0 - xe;
  if (den < 1e-14) throw DenominatorBlowup("1 - <x, eta> vanishes");
  const double s = std::sqrt(1.0 - dot(eta, eta));
  const double beta = xe / (1.0 + s) - 1.0;
  Vec3 out;
  for (int i = 0; i < 3; ++i) out[i] = (s * x[i] + beta * eta[i]) / den;
  return out;
}

std::array<Vec3, 3> mobius_jacobian(const Vec3& eta, const Vec3& x) {
  check_eta(eta);
  const double p = dot(x, eta);
  const double den = 1.0 - p;
  if (den < 1e-14) throw DenominatorBlowup("1 - <x, eta> vanishes");
  const double s = std::sqrt(1.0 - dot(eta, eta));
  const double beta = p / (1.0 + s) - 1.0;
  const Vec3 phi = mobius_map(eta, x);
  std::array<Vec3, 3> jac{};
  for (int k = 0; k < 3; ++k) {
    const double ds = -eta[k] / s;
    const double dbeta = x[k] / (1.0 + s) + p * eta[k] / (s * (1.0 + s) * (1.0 + s));
    for (int i = 0; i < 3; ++i) {
      const double dn = x[i] * ds + dbeta * eta[i] + (i == k ? beta : 0.0);
      jac[i][k] = dn / den + phi[i] * x[k] / den;
    }
  }
  return jac;
}

Vec3 mobius_inverse(const Vec3& eta, const Vec3& x) {
  if (inverse_identity_holds()) return mobius_map(neg(eta), x);
  // Newton on phi_eta(y) = x restricted to the sphere
  Vec3 y = x;
  for (int it = 0; it < 50; ++it) {
    const Vec3 f = mobius_map(eta, y);
    Eigen::Vector3d r(f[0] - x[0], f[1] - x[1], f[2] - x[2]);
    if (r.norm() < 1e-15) break;
    // derivative in y: finite differences are enough for a fallback path
    Eigen::Matrix3d jm;
    for (int k = 0; k < 3; ++k) {
      Vec3 yp = y;
      yp[k] += 1e-7;
      const Vec3 fp = mobius_map(eta, yp);
      for (int i = 0; i < 3; ++i) jm(i, k) = (fp[i] - f[i]) / 1e-7;
    }
    const Eigen::Vector3d step = jm.completeOrthogonalDecomposition().solve(r);
    for (int i = 0; i < 3; ++i) y[i] -= step[i];
    y = scaled(y, 1.0 / norm(y));
  }
  return y;
}

ExtendedComplex stereographic(const Vec3& x) {
  const double den = 1.0 - x[2];
  if (std::abs(den) < 1e-300) return {std::complex<double>(0.0, 0.0), true};
  return {std::complex<double>(x[0] / den, x[1] / den), false};
}

Vec3 center_of_mass(const Vec3& eta, const WeightedSphereMeasure& m) {
  validate_measure(m);
  CompensatedSum c[3];
  CompensatedSum total;
  for (std::size_t i = 0; i < m.points.size(); ++i) {
    const Vec3 y = mobius_inverse(eta, m.points[i]);
    for (int k = 0; k < 3; ++k) c[k] += m.weights[i] * y[k];
    total += m.weights[i];
  }
  return {c[0].value() / total.value(), c[1].value() / total.value(), c[2].value() / total.value()};
}

namespace {

// d m / d eta = - sum w (d phi_zeta / d zeta)|_{zeta = -eta} / sum w
Eigen::Matrix3d com_jacobian(const Vec3& eta, const WeightedSphereMeasure& m) {
  Eigen::Matrix3d j = Eigen::Matrix3d::Zero();
  double total = 0.0;
  for (std::size_t i = 0; i < m.points.size(); ++i) {
    const auto jac = mobius_jacobian(neg(eta), m.points[i]);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) j(a, b) -= m.weights[i] * jac[a][b];
    total += m.weights[i];
  }
  return j / total;
}

struct NewtonResult {
  Vec3 eta;
  double residual;
  int iterations;
};

NewtonResult newton_balance(const WeightedSphereMeasure& m, Vec3 eta, double tol, int max_iters,
                            double cap) {
  Vec3 c = center_of_mass(eta, m);
  double res = norm(c);
  int it = 0;
  for (; it < max_iters && res > tol; ++it) {
    const Eigen::Matrix3d jm = com_jacobian(eta, m);
    Eigen::Vector3d step = jm.colPivHouseholderQr().solve(-Eigen::Vector3d(c[0], c[1], c[2]));
    if (!step.allFinite()) break;
    double t = 1.0;
    bool ok = false;
    while (t > 1e-12) {
      Vec3 trial{eta[0] + t * step[0], eta[1] + t * step[1], eta[2] + t * step[2]};
      const double nt = norm(trial);
      if (nt > cap) trial = scaled(trial, cap / nt);
      const Vec3 ct = center_of_mass(trial, m);
      const double rt = norm(ct);
      if (rt < (1.0 - 1e-4 * t) * res) {
        eta = trial;
        c = ct;
        res = rt;
        ok = true;
        break;
      }
      t *= 0.5;
    }
    if (!ok) break;
  }
  return {eta, res, it};
}

// Minimizer of the Busemann potential sum w log(|x - y|^2 / (1 - |y|^2)) in
// the Poincare ball, mapped to the eta parametrization.
Vec3 barycenter_start(const WeightedSphereMeasure& m) {
  Eigen::Vector3d y = Eigen::Vector3d::Zero();
  double total = 0.0;
  for (double w : m.weights) total += w;
  auto potential = [&](const Eigen::Vector3d& p) {
    double v = 0.0;
    for (std::size_t i = 0; i < m.points.size(); ++i) {
      const Eigen::Vector3d x(m.points[i][0], m.points[i][1], m.points[i][2]);
      v += m.weights[i] * std::log((x - p).squaredNorm() / (1.0 - p.squaredNorm()));
    }
    return v / total;
  };
  for (int it = 0; it < 500; ++it) {
    Eigen::Vector3d g = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < m.points.size(); ++i) {
      const Eigen::Vector3d x(m.points[i][0], m.points[i][1], m.points[i][2]);
      g += m.weights[i] * (-2.0 * (x - y) / (x - y).squaredNorm() + 2.0 * y / (1.0 - y.squaredNorm()));
    }
    g /= total;
    if (g.norm() < 1e-12) break;
    // hyperbolic metric scaling keeps steps inside the ball
    const double conf = 0.25 * (1.0 - y.squaredNorm()) * (1.0 - y.squaredNorm());
    double t = 1.0;
    const double f0 = potential(y);
    while (t > 1e-14) {
      const Eigen::Vector3d trial = y - t * conf * g;
      if (trial.norm() < 1.0 && potential(trial) < f0 - 1e-4 * t * conf * g.squaredNorm()) {
        y = trial;
        break;
      }
      t *= 0.5;
    }
    if (t <= 1e-14) break;
  }
  const double y2 = y.squaredNorm();
  const Eigen::Vector3d e = -2.0 * y / (1.0 + y2);
  return {e[0], e[1], e[2]};
}

}  // namespace

BalancePoint balance(const WeightedSphereMeasure& m, double tol, const BalanceOptions& opts) {
  validate_measure(m);
  if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
  check_eta(opts.start);
  const double cap = opts.radius_cap;

  BalancePoint best;
  NewtonResult r = newton_balance(m, opts.start, tol, opts.max_iters, cap);
  best = {r.eta, r.residual, r.iterations, false};
  if (best.residual <= tol) return best;

  // homotopy from the (balanced) octahedron with equal total mass
  {
    double total = 0.0;
    for (double w : m.weights) total += w;
    const WeightedSphereMeasure oct = octahedron_measure();
    Vec3 eta{0.0, 0.0, 0.0};
    int iters = 0;
    bool ok = true;
    for (int step = 1; step <= opts.homotopy_steps && ok; ++step) {
      const double t = static_cast<double>(step) / opts.homotopy_steps;
      WeightedSphereMeasure mix = m;
      if (step < opts.homotopy_steps) {
        for (double& w : mix.weights) w *= t;
        for (int i = 0; i < 6; ++i) {
          mix.points.push_back(oct.points[i]);
          mix.weights.push_back((1.0 - t) * total / 6.0);
        }
      }
      const double stol = step == opts.homotopy_steps ? tol : std::max(tol, 1e-8);
      const NewtonResult hr = newton_balance(mix, eta, stol, opts.max_iters, cap);
      iters += hr.iterations;
      eta = hr.eta;
      ok = hr.residual <= stol;
      if (step == opts.homotopy_steps && hr.residual < best.residual)
        best = {hr.eta, hr.residual, best.iterations + iters, true};
    }
    if (best.residual <= tol) return best;
  }

  const Vec3 start = barycenter_start(m);
  if (norm(start) < cap) {
    r = newton_balance(m, start, tol, opts.max_iters, cap);
    if (r.residual < best.residual) best = {r.eta, r.residual, best.iterations + r.iterations, true};
  }
  if (best.residual <= tol) return best;
  throw NoConvergence("balance stopped at |m(eta)| = " + std::to_string(best.residual) +
                      " with |eta| = " + format_double(norm(best.eta)));
}

FlowMonotonicity flow_monotonicity_check(const WeightedSphereMeasure& m, const Vec3& eta,
                                         int steps) {
  validate_measure(m);
  check_eta(eta);
  if (steps < 1) throw InvalidArgument("steps must be positive");
  FlowMonotonicity rep;
  const double r = norm(eta);
  const double big_t = r > 0.0 ? std::atanh(r) / r : 1.0;
  for (int k = 0; k <= steps; ++k) {
    const double t = big_t * k / steps;
    const double lam = r > 0.0 ? std::tanh(r * t) / r : t;
    const Vec3 c = center_of_mass(scaled(eta, lam), m);
    rep.values.push_back(dot(eta, c));
  }
  rep.min_increment = steps > 0 ? rep.values[1] - rep.values[0] : 0.0;
  rep.strictly_increasing = true;
  for (int k = 1; k <= steps; ++k) {
    const double inc = rep.values[k] - rep.values[k - 1];
    rep.min_increment = std::min(rep.min_increment, inc);
    rep.strictly_increasing = rep.strictly_increasing && inc > 0.0;
  }
  rep.monotone = rep.min_increment >= -1e-10;
  return rep;
}

bool axial_bisection(const WeightedSphereMeasure& m, const Vec3& axis, double tol, double* root) {
  const double an = norm(axis);
  if (!(an > 0.0)) throw InvalidArgument("axis must be nonzero");
  const Vec3 e = scaled(axis, 1.0 / an);
  auto f = [&](double t) { return dot(e, center_of_mass(scaled(e, t), m)); };
  double lo = -(1.0 - 1e-9);
  double hi = 1.0 - 1e-9;
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) {
    *root = lo;
    return true;
  }
  if (fhi == 0.0) {
    *root = hi;
    return true;
  }
  if ((flo > 0.0) == (fhi > 0.0)) return false;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) {
      lo = hi = mid;
      break;
    }
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  *root = 0.5 * (lo + hi);
  return true;
}

}  // namespace svx
