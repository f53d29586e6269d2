#include "svx/linearization.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace svx {

namespace {

using Triplet = Eigen::Triplet<double>;

struct Builder {
  std::vector<Triplet> t;
  void add(int row, int col, double v) {
    if (v != 0.0) t.emplace_back(row, col, v);
  }
  // complex coefficient c acting on the complex unknown at (re_col, im_col)
  void cplx_on_cplx(int row_re, int row_im, int col_re, int col_im, cplx c) {
    add(row_re, col_re, c.real());
    add(row_re, col_im, -c.imag());
    add(row_im, col_re, c.imag());
    add(row_im, col_im, c.real());
  }
  void cplx_on_real(int row_re, int row_im, int col, cplx c) {
    add(row_re, col, c.real());
    add(row_im, col, c.imag());
  }
};

}  // namespace

LinearizedOp assemble_D(const VortexState& state, const WeightModel& model) {
  validate_state(state, model);
  const auto& g = state.geom;
  const auto& z = state.z;
  LinearizedOp op;
  op.sites = g.num_sites();
  op.n = model.n();
  op.r = model.r();
  const int n = op.n;
  const int r = op.r;
  const double ie2 = 1.0 / (state.epsilon * state.epsilon);
  const cplx I(0.0, 1.0);

  Builder b;
  b.t.reserve(static_cast<std::size_t>(op.sites) * (n * (12 + 4 * r) + r * (2 * n + 4 + 8)));
  for (int k = 0; k < op.sites; ++k) {
    const int e = g.east(k);
    const int nn = g.north(k);
    const int w = g.west(k);
    const int s = g.south(k);
    const double l2 = g.lambda[k] * g.lambda[k];
    for (int nu = 0; nu < n; ++nu) {
      const cplx us = std::polar(1.0, -link_phase(g, state.a, model.w, k, 0, nu));
      const cplx ut = std::polar(1.0, -link_phase(g, state.a, model.w, k, 1, nu));
      const int rr = op.res1_re(k, nu);
      const int ri = op.res1_im(k, nu);
      b.cplx_on_cplx(rr, ri, op.xi_re(e, nu), op.xi_im(e, nu), 0.5 * us / g.hs);
      b.cplx_on_cplx(rr, ri, op.xi_re(nn, nu), op.xi_im(nn, nu), 0.5 * I * ut / g.ht);
      b.cplx_on_cplx(rr, ri, op.xi_re(k, nu), op.xi_im(k, nu), -0.5 / g.hs - 0.5 * I / g.ht);
      for (int j = 0; j < r; ++j) {
        const double wj = model.w(nu, j);
        if (wj == 0.0) continue;
        b.cplx_on_real(rr, ri, op.alpha_s(k, j), -0.5 * I * wj * us * z(e, nu));
        b.cplx_on_real(rr, ri, op.alpha_t(k, j), 0.5 * wj * ut * z(nn, nu));
      }
    }
    for (int j = 0; j < r; ++j) {
      const int sr = op.slice(k, j);
      for (int nu = 0; nu < n; ++nu) {
        const double wj = model.w(nu, j);
        b.add(sr, op.xi_re(k, nu), l2 * wj * z(k, nu).imag());
        b.add(sr, op.xi_im(k, nu), -l2 * wj * z(k, nu).real());
      }
      b.add(sr, op.alpha_s(k, j), 1.0 / g.hs);
      b.add(sr, op.alpha_s(w, j), -1.0 / g.hs);
      b.add(sr, op.alpha_t(k, j), 1.0 / g.ht);
      b.add(sr, op.alpha_t(s, j), -1.0 / g.ht);

      const int qr = op.res2(k, j);
      for (int nu = 0; nu < n; ++nu) {
        const double wj = model.w(nu, j);
        b.add(qr, op.xi_re(k, nu), ie2 * wj * z(k, nu).real());
        b.add(qr, op.xi_im(k, nu), ie2 * wj * z(k, nu).imag());
      }
      // site curvature averages the plaquettes k, w, s, sw
      const double q = 0.25 / l2;
      for (int p : {k, w, s, g.west(s)}) {
        b.add(qr, op.alpha_s(p, j), q / g.ht);
        b.add(qr, op.alpha_t(g.east(p), j), q / g.hs);
        b.add(qr, op.alpha_s(g.north(p), j), -q / g.ht);
        b.add(qr, op.alpha_t(p, j), -q / g.hs);
      }
    }
  }
  op.m.resize(op.size(), op.size());
  op.m.setFromTriplets(b.t.begin(), b.t.end());
  op.m.prune(0.0);
  op.m.makeCompressed();
  return op;
}

Eigen::VectorXd residual_vector(const VortexState& state, const WeightModel& model) {
  const Residual res = residual(state, model);
  const int sites = state.geom.num_sites();
  const int n = model.n();
  const int r = model.r();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * n + 2 * r) * sites);
  for (int k = 0; k < sites; ++k) {
    for (int nu = 0; nu < n; ++nu) {
      v[k * n + nu] = res.dbar(k, nu).real();
      v[sites * n + k * n + nu] = res.dbar(k, nu).imag();
    }
    for (int j = 0; j < r; ++j) v[2 * sites * n + sites * r + k * r + j] = res.curv[k * r + j];
  }
  return v;
}

Eigen::VectorXd row_weights(const VortexState& state) {
  const auto& g = state.geom;
  const int sites = g.num_sites();
  const int n = state.z.n;
  const int r = state.a.r;
  const double c = g.cell_area();
  const double e2 = state.epsilon * state.epsilon;
  Eigen::VectorXd w(static_cast<Eigen::Index>(2 * n + 2 * r) * sites);
  const double w1 = std::sqrt(2.0 * c);
  for (int m = 0; m < 2 * sites * n; ++m) w[m] = w1;
  for (int k = 0; k < sites; ++k) {
    const double w2 = std::sqrt(0.5 * e2 * g.lambda[k] * g.lambda[k] * c);
    for (int j = 0; j < r; ++j) {
      w[2 * sites * n + k * r + j] = std::sqrt(c);
      w[2 * sites * n + sites * r + k * r + j] = w2;
    }
  }
  return w;
}

VortexState perturb(const VortexState& state, const Eigen::VectorXd& v, double t) {
  VortexState out = state;
  const int sites = state.geom.num_sites();
  const int n = state.z.n;
  const int r = state.a.r;
  for (int k = 0; k < sites; ++k) {
    for (int nu = 0; nu < n; ++nu)
      out.z(k, nu) += t * cplx(v[k * n + nu], v[sites * n + k * n + nu]);
    for (int j = 0; j < r; ++j) {
      out.a.as[k * r + j] += t * v[2 * sites * n + k * r + j];
      out.a.at[k * r + j] += t * v[2 * sites * n + sites * r + k * r + j];
    }
  }
  return out;
}

Eigen::VectorXd gauge_direction(const VortexState& state, const WeightModel& model,
                                const GaugeMap& g) {
  const auto& geom = state.geom;
  const int sites = geom.num_sites();
  const int n = model.n();
  const int r = model.r();
  const LinkField dg = lattice_differential(geom, g);
  Eigen::VectorXd v(static_cast<Eigen::Index>(2 * n + 2 * r) * sites);
  for (int k = 0; k < sites; ++k) {
    for (int nu = 0; nu < n; ++nu) {
      double wg = 0.0;
      for (int j = 0; j < r; ++j) wg += model.w(nu, j) * g.g[k * r + j];
      const cplx xi = cplx(0.0, wg) * state.z(k, nu);
      v[k * n + nu] = xi.real();
      v[sites * n + k * n + nu] = xi.imag();
    }
    for (int j = 0; j < r; ++j) {
      v[2 * sites * n + k * r + j] = dg.as[k * r + j];
      v[2 * sites * n + sites * r + k * r + j] = dg.at[k * r + j];
    }
  }
  return v;
}

double operator_norm(const LinearizedOp& op, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::VectorXd x(op.m.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = nd(rng);
  x.normalize();
  double est = 0.0;
  for (int it = 0; it < 500; ++it) {
    Eigen::VectorXd y = op.m.transpose() * (op.m * x);
    const double nrm = y.norm();
    if (nrm == 0.0) return 0.0;
    const double next = std::sqrt(nrm);
    x = y / nrm;
    if (it > 10 && std::abs(next - est) <= 1e-10 * next) {
      est = next;
      break;
    }
    est = next;
  }
  return est;
}

IndexReport moduli_dimension_probe(const LinearizedOp& op, double theta_low, double theta_high,
                                   int expected_dim, std::uint64_t seed) {
  if (!(theta_low < theta_high)) throw InvalidArgument("theta_low must be below theta_high");
  if (expected_dim < 0) throw InvalidArgument("expected dimension must be nonnegative");
  IndexReport rep;
  rep.theta_low = theta_low;
  rep.theta_high = theta_high;
  rep.op_norm = operator_norm(op, seed);

  const Eigen::Index dim = op.m.cols();
  const int want = std::min<Eigen::Index>(expected_dim + 2, dim);
  const int block = std::min<Eigen::Index>(want + 8, dim);

  Eigen::SparseMatrix<double> ata = Eigen::SparseMatrix<double>(op.m.transpose()) * op.m;
  const double shift = std::max(1e-300, 1e-6 * theta_low * theta_low);
  Eigen::SparseMatrix<double> shifted = ata;
  for (Eigen::Index i = 0; i < dim; ++i) shifted.coeffRef(i, i) += shift;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(shifted);
  if (ldlt.info() != Eigen::Success) throw SpectralFailure("factorization of D^T D failed");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd x(dim, block);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (int c = 0; c < block; ++c) x(i, c) = nd(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
  x = qr.householderQ() * Eigen::MatrixXd::Identity(dim, block);

  Eigen::VectorXd evals;
  Eigen::MatrixXd ritz;
  bool converged = false;
  for (int it = 0; it < 200 && !converged; ++it) {
    Eigen::MatrixXd y = ldlt.solve(x);
    Eigen::HouseholderQR<Eigen::MatrixXd> q2(y);
    x = q2.householderQ() * Eigen::MatrixXd::Identity(dim, block);
    const Eigen::MatrixXd ax = ata * x;
    const Eigen::MatrixXd h = x.transpose() * ax;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    evals = es.eigenvalues();
    ritz = x * es.eigenvectors();
    const Eigen::MatrixXd aritz = ax * es.eigenvectors();
    converged = true;
    for (int c = 0; c < want; ++c) {
      const double lam = std::max(0.0, evals[c]);
      const double resn = (aritz.col(c) - evals[c] * ritz.col(c)).norm();
      // resolved to the singular-value scale, or provably above theta_high
      const bool resolved =
          resn <= 1e-8 * std::max(lam, theta_low * theta_low) + 1e-14 * rep.op_norm * rep.op_norm;
      const bool clear = evals[c] - resn > 4.0 * theta_high * theta_high;
      if (!resolved && !clear) converged = false;
    }
    x = ritz;
  }
  if (!converged) throw SpectralFailure("subspace iteration did not converge");

  // |D v| on the Ritz vectors resolves small values far better than sqrt(v^T D^T D v)
  for (int c = 0; c < want; ++c) rep.singular_values.push_back((op.m * ritz.col(c)).norm());
  std::sort(rep.singular_values.begin(), rep.singular_values.end());
  const double floor = std::numeric_limits<double>::epsilon() * rep.op_norm;
  int below = 0;
  while (below < want && rep.singular_values[below] < theta_low) ++below;
  rep.inferred_dimension = below;
  if (below < want) {
    const double next = rep.singular_values[below];
    rep.gap_ratio = below > 0 ? next / std::max(rep.singular_values[below - 1], floor)
                              : next / theta_low;
    rep.certified = next > theta_high;
  } else {
    rep.gap_ratio = 0.0;
    rep.certified = false;
  }
  return rep;
}

long long index_formula(long long g, long long n, long long dim_g, long long c1b, long long k) {
  if (g < 0 || dim_g < 0 || n < dim_g || k < 0)
    throw InvalidArgument("index formula needs g >= 0, n >= dimG >= 0, k >= 0");
  return (2 - 2 * g) * (n - dim_g) + 2 * c1b + k * (2 + dim_g);
}

long long equivariant_c1(const WeightMatrix& w, const std::vector<int>& degree) {
  if (static_cast<int>(degree.size()) != w.r) throw ShapeMismatch("degree does not match rank");
  long long s = 0;
  for (int nu = 0; nu < w.n; ++nu)
    for (int j = 0; j < w.r; ++j) s += static_cast<long long>(w(nu, j)) * degree[j];
  return s;
}

std::string export_coo(const LinearizedOp& op) {
  std::ostringstream os;
  os.precision(17);
  os << op.m.rows() << ' ' << op.m.cols() << ' ' << op.m.nonZeros() << '\n';
  for (int row = 0; row < op.m.outerSize(); ++row)
    for (SparseRowMatrix::InnerIterator it(op.m, row); it; ++it)
      os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
  return os.str();
}

}  // namespace svx
