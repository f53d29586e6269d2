#include "svx/eqflow.hpp"

#include <cctype>
#include <cmath>
#include <random>
#include <sstream>

namespace svx {

struct InvariantHamiltonian::Node {
  enum Kind { constant, variable, add, sub, mul, pow, neg } kind = constant;
  double value = 0.0;
  int index = 0;
  int exponent = 0;
  std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const InvariantHamiltonian::Node>;
using Node = InvariantHamiltonian::Node;

class Parser {
 public:
  Parser(const std::string& s, int n) : s_(s), n_(n) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw InvalidArgument("Hamiltonian expression: " + msg + " at offset " + std::to_string(pos_));
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  static NodePtr make(Node::Kind k, NodePtr a, NodePtr b = nullptr) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }
  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (eat('+')) lhs = make(Node::add, lhs, term());
      else if (eat('-')) lhs = make(Node::sub, lhs, term());
      else return lhs;
    }
  }
  NodePtr term() {
    NodePtr lhs = factor();
    while (eat('*')) lhs = make(Node::mul, lhs, factor());
    return lhs;
  }
  NodePtr factor() {
    NodePtr base = unary();
    if (eat('^')) {
      skip();
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (start == pos_) fail("exponent must be a nonnegative integer");
      auto n = std::make_shared<Node>();
      n->kind = Node::pow;
      n->a = base;
      n->exponent = std::stoi(s_.substr(start, pos_ - start));
      return n;
    }
    return base;
  }
  NodePtr unary() {
    if (eat('-')) return make(Node::neg, unary());
    return atom();
  }
  NodePtr atom() {
    skip();
    if (eat('(')) {
      NodePtr e = expr();
      if (!eat(')')) fail("missing ')'");
      return e;
    }
    if (pos_ < s_.size() && s_[pos_] == 'p') {
      ++pos_;
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (start == pos_) fail("variable needs an index");
      const int idx = std::stoi(s_.substr(start, pos_ - start));
      if (idx >= n_) fail("variable p" + std::to_string(idx) + " out of range");
      auto n = std::make_shared<Node>();
      n->kind = Node::variable;
      n->index = idx;
      return n;
    }
    std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.' || s_[pos_] == 'e' ||
            s_[pos_] == 'E' ||
            ((s_[pos_] == '+' || s_[pos_] == '-') && pos_ > start &&
             (s_[pos_ - 1] == 'e' || s_[pos_ - 1] == 'E'))))
      ++pos_;
    if (start == pos_) fail("expected a number, variable or '('");
    auto n = std::make_shared<Node>();
    n->kind = Node::constant;
    try {
      std::size_t used = 0;
      n->value = std::stod(s_.substr(start, pos_ - start), &used);
      if (used != pos_ - start) fail("malformed number");
    } catch (const std::logic_error&) {
      fail("malformed number");
    }
    return n;
  }

  const std::string& s_;
  int n_;
  std::size_t pos_ = 0;
};

// value and gradient with respect to p
struct Dual {
  double v = 0.0;
  std::vector<double> d;
};

Dual eval(const Node& node, const std::vector<double>& p) {
  const std::size_t n = p.size();
  switch (node.kind) {
    case Node::constant:
      return {node.value, std::vector<double>(n, 0.0)};
    case Node::variable: {
      Dual r{p[node.index], std::vector<double>(n, 0.0)};
      r.d[node.index] = 1.0;
      return r;
    }
    case Node::neg: {
      Dual r = eval(*node.a, p);
      r.v = -r.v;
      for (double& x : r.d) x = -x;
      return r;
    }
    case Node::add:
    case Node::sub: {
      Dual l = eval(*node.a, p);
      const Dual r = eval(*node.b, p);
      const double sg = node.kind == Node::add ? 1.0 : -1.0;
      l.v += sg * r.v;
      for (std::size_t i = 0; i < n; ++i) l.d[i] += sg * r.d[i];
      return l;
    }
    case Node::mul: {
      const Dual l = eval(*node.a, p);
      const Dual r = eval(*node.b, p);
      Dual o{l.v * r.v, std::vector<double>(n)};
      for (std::size_t i = 0; i < n; ++i) o.d[i] = l.d[i] * r.v + l.v * r.d[i];
      return o;
    }
    case Node::pow: {
      const Dual b = eval(*node.a, p);
      const int e = node.exponent;
      Dual o{std::pow(b.v, e), std::vector<double>(n)};
      const double dv = e == 0 ? 0.0 : e * std::pow(b.v, e - 1);
      for (std::size_t i = 0; i < n; ++i) o.d[i] = dv * b.d[i];
      return o;
    }
  }
  return {};
}

std::vector<double> moduli(const std::vector<cplx>& x) {
  std::vector<double> p(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) p[i] = std::norm(x[i]);
  return p;
}

}  // namespace

InvariantHamiltonian InvariantHamiltonian::parse(const std::string& text, int n) {
  if (n <= 0) throw InvalidArgument("Hamiltonian needs n >= 1");
  InvariantHamiltonian h;
  h.root_ = Parser(text, n).parse();
  h.n_ = n;
  h.text_ = text;
  return h;
}

InvariantHamiltonian InvariantHamiltonian::quadratic(const std::vector<double>& a) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < a.size(); ++i) os << (i ? " + " : "") << 0.5 * a[i] << "*p" << i;
  return parse(os.str(), static_cast<int>(a.size()));
}

double InvariantHamiltonian::value(const std::vector<cplx>& x) const {
  if (static_cast<int>(x.size()) != n_) throw ShapeMismatch("Hamiltonian evaluated at wrong dimension");
  return eval(*root_, moduli(x)).v;
}

std::vector<cplx> InvariantHamiltonian::gradient(const std::vector<cplx>& x) const {
  if (static_cast<int>(x.size()) != n_) throw ShapeMismatch("Hamiltonian evaluated at wrong dimension");
  const Dual r = eval(*root_, moduli(x));
  std::vector<cplx> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = 2.0 * r.d[i] * x[i];
  return g;
}

double invariance_defect(const InvariantHamiltonian& h, const WeightModel& model, int samples,
                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    std::vector<cplx> x(model.n());
    for (auto& v : x) v = cplx(nd(rng), nd(rng));
    std::vector<double> th(model.r());
    for (auto& t : th) t = 3.0 * nd(rng);
    std::vector<cplx> gx(x);
    for (int nu = 0; nu < model.n(); ++nu) {
      double ph = 0.0;
      for (int j = 0; j < model.r(); ++j) ph += model.w(nu, j) * th[j];
      gx[nu] *= std::polar(1.0, -ph);
    }
    worst = std::max(worst, std::abs(h.value(gx) - h.value(x)));
  }
  return worst;
}

double flow_functional(const FlowState& s, const WeightModel& model,
                       const InvariantHamiltonian& h) {
  const auto mu = moment_map(model, s.x);
  double l = 0.0;
  for (int j = 0; j < model.r(); ++j) l += mu[j] * s.eta[j];
  return l - h.value(s.x);
}

namespace {

struct Deriv {
  std::vector<cplx> dx;
  std::vector<double> deta;
};

Deriv rhs(const FlowState& s, const WeightModel& model, const InvariantHamiltonian& h) {
  Deriv d;
  d.dx = h.gradient(s.x);
  for (int nu = 0; nu < model.n(); ++nu) {
    double we = 0.0;
    for (int j = 0; j < model.r(); ++j) we += model.w(nu, j) * s.eta[j];
    d.dx[nu] -= we * s.x[nu];
  }
  const auto mu = moment_map(model, s.x);
  d.deta.resize(model.r());
  for (int j = 0; j < model.r(); ++j) d.deta[j] = -mu[j];
  return d;
}

FlowState axpy(const FlowState& s, const Deriv& d, double h) {
  FlowState o = s;
  for (std::size_t i = 0; i < o.x.size(); ++i) o.x[i] += h * d.dx[i];
  for (std::size_t j = 0; j < o.eta.size(); ++j) o.eta[j] += h * d.deta[j];
  return o;
}

FlowState rk4(const FlowState& s, const WeightModel& m, const InvariantHamiltonian& h, double dt) {
  const Deriv k1 = rhs(s, m, h);
  const Deriv k2 = rhs(axpy(s, k1, 0.5 * dt), m, h);
  const Deriv k3 = rhs(axpy(s, k2, 0.5 * dt), m, h);
  const Deriv k4 = rhs(axpy(s, k3, dt), m, h);
  FlowState o = s;
  for (std::size_t i = 0; i < o.x.size(); ++i)
    o.x[i] += dt / 6.0 * (k1.dx[i] + 2.0 * k2.dx[i] + 2.0 * k3.dx[i] + k4.dx[i]);
  for (std::size_t j = 0; j < o.eta.size(); ++j)
    o.eta[j] += dt / 6.0 * (k1.deta[j] + 2.0 * k2.deta[j] + 2.0 * k3.deta[j] + k4.deta[j]);
  o.t = s.t + dt;
  return o;
}

bool finite_state(const FlowState& s) {
  for (const cplx& v : s.x)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  for (double e : s.eta)
    if (!std::isfinite(e)) return false;
  return true;
}

double size_of(const FlowState& s) {
  double a = 0.0;
  for (const cplx& v : s.x) a += std::norm(v);
  for (double e : s.eta) a += e * e;
  return std::sqrt(a);
}

FlowState step_with_halving(const FlowState& s, const WeightModel& m,
                            const InvariantHamiltonian& h, double dt, int depth) {
  FlowState o = rk4(s, m, h, dt);
  if (finite_state(o)) return o;
  if (depth >= 10) throw StepBlowup("integration produced non-finite values");
  return step_with_halving(step_with_halving(s, m, h, 0.5 * dt, depth + 1), m, h, 0.5 * dt, depth + 1);
}

}  // namespace

Trajectory flow_integrate(const FlowState& start, const WeightModel& model,
                          const InvariantHamiltonian& h, double dt, int steps) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (steps < 0) throw InvalidArgument("steps must be nonnegative");
  if (static_cast<int>(start.x.size()) != model.n() || static_cast<int>(start.eta.size()) != model.r())
    throw ShapeMismatch("flow state does not match the model");
  if (h.n() != model.n()) throw ShapeMismatch("Hamiltonian does not match the model");
  Trajectory tr;
  tr.states.reserve(steps + 1);
  tr.states.push_back(start);
  tr.functional.push_back(flow_functional(start, model, h));
  FlowState cur = start;
  for (int k = 0; k < steps; ++k) {
    cur = step_with_halving(cur, model, h, dt, 0);
    if (size_of(cur) > 1e8) throw StepBlowup("trajectory left the ball of radius 1e8 at t = " + std::to_string(cur.t));
    tr.states.push_back(cur);
    tr.functional.push_back(flow_functional(cur, model, h));
  }
  return tr;
}

bool critical_check(const std::vector<cplx>& x, const std::vector<double>& eta,
                    const WeightModel& model, const InvariantHamiltonian& h, double tol) {
  FlowState s{x, eta, 0.0};
  if (static_cast<int>(eta.size()) != model.r()) throw ShapeMismatch("eta has the wrong rank");
  const Deriv d = rhs(s, model, h);
  double gx = 0.0, gm = 0.0;
  for (const cplx& v : d.dx) gx += std::norm(v);
  for (double v : d.deta) gm += v * v;
  return std::sqrt(gx) <= tol && std::sqrt(gm) <= tol;
}

FlowState separatrix_start(double tau, double a, double p0) {
  if (!(tau > 0.0) || !(p0 > 0.0)) throw InvalidArgument("separatrix needs tau > 0 and p0 > 0");
  // (u, v) = (log p, a - eta): u' = 2v, v' = e^u / 2 - tau conserves
  // v^2 - e^u/2 + tau u; the stable branch has sign(v) = -sign(u - u*).
  const double us = std::log(2.0 * tau);
  const double u = std::log(p0);
  const double v2 = 0.5 * (p0 - 2.0 * tau * u - 2.0 * tau + 2.0 * tau * us);
  const double v = (u > us ? -1.0 : 1.0) * std::sqrt(std::max(0.0, v2));
  FlowState s;
  s.x = {cplx(std::sqrt(p0), 0.0)};
  s.eta = {a - v};
  return s;
}

Eigen::VectorXd to_real(const std::vector<cplx>& x) {
  Eigen::VectorXd v(2 * x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    v[2 * i] = x[i].real();
    v[2 * i + 1] = x[i].imag();
  }
  return v;
}

Eigen::MatrixXd group_matrix(const WeightModel& model, const std::vector<double>& theta) {
  if (static_cast<int>(theta.size()) != model.r()) throw ShapeMismatch("theta has the wrong rank");
  const int n = model.n();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int nu = 0; nu < n; ++nu) {
    double ph = 0.0;
    for (int j = 0; j < model.r(); ++j) ph += model.w(nu, j) * theta[j];
    const double c = std::cos(ph), s = std::sin(-ph);
    g(2 * nu, 2 * nu) = c;
    g(2 * nu, 2 * nu + 1) = -s;
    g(2 * nu + 1, 2 * nu) = s;
    g(2 * nu + 1, 2 * nu + 1) = c;
  }
  return g;
}

Eigen::MatrixXd quotient_basis(const std::vector<cplx>& x, const WeightModel& model) {
  const int n = model.n();
  const int r = model.r();
  if (static_cast<int>(x.size()) != n) throw ShapeMismatch("point has the wrong dimension");
  // rows: d mu_j (real gradient W_{nu j} x_nu) and the orbit directions -i W_{nu j} x_nu
  Eigen::MatrixXd c(2 * r, 2 * n);
  for (int j = 0; j < r; ++j)
    for (int nu = 0; nu < n; ++nu) {
      const cplx gradmu = static_cast<double>(model.w(nu, j)) * x[nu];
      const cplx orbit = cplx(0.0, -model.w(nu, j)) * x[nu];
      c(j, 2 * nu) = gradmu.real();
      c(j, 2 * nu + 1) = gradmu.imag();
      c(r + j, 2 * nu) = orbit.real();
      c(r + j, 2 * nu + 1) = orbit.imag();
    }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(c, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double scale = sv.size() > 0 ? std::max(1.0, sv[0]) : 1.0;
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > 1e-12 * scale) ++rank;
  return svd.matrixV().rightCols(2 * n - rank);
}

bool nondeg_check(const Eigen::MatrixXd& dfx, const std::vector<cplx>& x,
                  const Eigen::MatrixXd& g0_action, const WeightModel& model, double tol) {
  const int dim = 2 * model.n();
  if (dfx.rows() != dim || dfx.cols() != dim || g0_action.rows() != dim || g0_action.cols() != dim)
    throw ShapeMismatch("dfx and g0_action must be 2n x 2n real matrices");
  if (static_cast<int>(x.size()) != model.n()) throw ShapeMismatch("point has the wrong dimension");
  const Eigen::VectorXd yr = g0_action * to_real(x);
  std::vector<cplx> y(model.n());
  for (int nu = 0; nu < model.n(); ++nu) y[nu] = cplx(yr[2 * nu], yr[2 * nu + 1]);
  const Eigen::MatrixXd p = quotient_basis(x, model);
  const Eigen::MatrixXd q = quotient_basis(y, model);
  if (p.cols() != q.cols()) return false;
  if (p.cols() == 0) return true;
  const Eigen::MatrixXd m = q.transpose() * (dfx - g0_action) * p;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues().minCoeff() > tol;
}

}  // namespace svx
