#include "svx/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace svx {

namespace {

using json = nlohmann::json;

void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  std::set<std::string> ok(keys.begin(), keys.end());
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!ok.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <class T>
T get(const json& obj, const char* key, const std::string& where, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

template <class T>
T require(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError("missing " + where + "." + key);
  return get<T>(obj, key, where, T{});
}

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty()) return p;
  std::filesystem::path path(p);
  if (path.is_absolute()) return p;
  return (std::filesystem::path(base) / path).lexically_normal().string();
}

GeometrySpec parse_geometry(const json& j) {
  allow_keys(j, "geometry", {"ns", "nt", "ls", "lt", "lambda"});
  GeometrySpec g;
  g.ns = get<int>(j, "ns", "geometry", g.ns);
  g.nt = get<int>(j, "nt", "geometry", g.nt);
  g.ls = get<double>(j, "ls", "geometry", g.ls);
  g.lt = get<double>(j, "lt", "geometry", g.lt);
  if (j.contains("lambda")) {
    const json& l = j.at("lambda");
    if (l.is_number()) g.lambda.constant = l.get<double>();
    else if (l.is_array()) g.lambda.table = get<std::vector<double>>(j, "lambda", "geometry", {});
    else throw ConfigError("geometry.lambda must be a number or an array");
  }
  return g;
}

ModelSpec parse_model(const json& j) {
  allow_keys(j, "model", {"weights", "tau", "epsilon"});
  ModelSpec m;
  const auto rows = require<std::vector<std::vector<int>>>(j, "weights", "model");
  if (rows.empty() || rows[0].empty()) throw ConfigError("model.weights must be a nonempty matrix");
  m.n = static_cast<int>(rows.size());
  m.r = static_cast<int>(rows[0].size());
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != m.r) throw ConfigError("model.weights rows differ in length");
    m.weights.insert(m.weights.end(), row.begin(), row.end());
  }
  if (!j.contains("tau")) throw ConfigError("missing model.tau");
  if (j.at("tau").is_number()) m.tau = {j.at("tau").get<double>()};
  else m.tau = get<std::vector<double>>(j, "tau", "model", {});
  m.epsilon = get<double>(j, "epsilon", "model", 1.0);
  if (!(m.epsilon > 0.0)) throw ConfigError("model.epsilon must be positive");
  return m;
}

SolveOptions parse_options(const json& j) {
  allow_keys(j, "solve.options",
             {"max_iters", "grad_tol", "basin_tol", "newton_iters", "newton_tol", "armijo", "backtracking",
              "damping_floor", "linear_tol", "linear_max_iters", "lbfgs_memory", "max_restarts"});
  SolveOptions o;
  const std::string w = "solve.options";
  o.max_iters = get<int>(j, "max_iters", w, o.max_iters);
  o.grad_tol = get<double>(j, "grad_tol", w, o.grad_tol);
  o.basin_tol = get<double>(j, "basin_tol", w, o.basin_tol);
  o.newton_iters = get<int>(j, "newton_iters", w, o.newton_iters);
  o.newton_tol = get<double>(j, "newton_tol", w, o.newton_tol);
  o.armijo = get<double>(j, "armijo", w, o.armijo);
  o.backtracking = get<double>(j, "backtracking", w, o.backtracking);
  o.damping_floor = get<double>(j, "damping_floor", w, o.damping_floor);
  o.linear_tol = get<double>(j, "linear_tol", w, o.linear_tol);
  o.linear_max_iters = get<int>(j, "linear_max_iters", w, o.linear_max_iters);
  o.lbfgs_memory = get<int>(j, "lbfgs_memory", w, o.lbfgs_memory);
  o.max_restarts = get<int>(j, "max_restarts", w, o.max_restarts);
  return o;
}

SolveSpec parse_solve(const json& j, const std::string& base) {
  allow_keys(j, "solve", {"degree", "init", "options"});
  SolveSpec s;
  if (!j.contains("degree")) throw ConfigError("missing solve.degree");
  if (j.at("degree").is_number_integer()) s.degree = {j.at("degree").get<int>()};
  else s.degree = get<std::vector<int>>(j, "degree", "solve", {});
  if (j.contains("init")) {
    const json& in = j.at("init");
    allow_keys(in, "solve.init", {"kind", "points", "path"});
    const auto kind = get<std::string>(in, "kind", "solve.init", "random");
    if (kind == "random") {
      s.init.kind = InitKind::random;
    } else if (kind == "zeros") {
      s.init.kind = InitKind::zeros;
      s.init.points = require<std::vector<std::array<double, 2>>>(in, "points", "solve.init");
    } else if (kind == "file") {
      s.init.kind = InitKind::file;
      s.init.path = resolve(base, require<std::string>(in, "path", "solve.init"));
    } else {
      throw ConfigError("solve.init.kind must be random, zeros or file");
    }
  }
  if (j.contains("options")) s.options = parse_options(j.at("options"));
  return s;
}

IndexSpec parse_index(const json& j) {
  allow_keys(j, "index", {"g", "n", "dim_g", "c1b", "k", "probe", "expected_dim", "theta_low_rel", "gap"});
  IndexSpec s;
  s.g = require<long long>(j, "g", "index");
  s.n = require<long long>(j, "n", "index");
  s.dim_g = require<long long>(j, "dim_g", "index");
  s.c1b = require<long long>(j, "c1b", "index");
  s.k = get<long long>(j, "k", "index", 0);
  s.probe = get<bool>(j, "probe", "index", false);
  s.expected_dim = get<int>(j, "expected_dim", "index", -1);
  s.theta_low_rel = get<double>(j, "theta_low_rel", "index", s.theta_low_rel);
  s.gap = get<double>(j, "gap", "index", s.gap);
  return s;
}

FlowSpec parse_flow(const json& j) {
  allow_keys(j, "flow", {"hamiltonian", "x", "eta", "separatrix", "dt", "steps", "tol"});
  FlowSpec f;
  f.hamiltonian = require<std::string>(j, "hamiltonian", "flow");
  f.dt = get<double>(j, "dt", "flow", f.dt);
  f.steps = get<int>(j, "steps", "flow", f.steps);
  f.tol = get<double>(j, "tol", "flow", f.tol);
  if (j.contains("separatrix")) {
    const json& s = j.at("separatrix");
    allow_keys(s, "flow.separatrix", {"a", "p0"});
    f.separatrix = std::array<double, 2>{require<double>(s, "a", "flow.separatrix"),
                                         require<double>(s, "p0", "flow.separatrix")};
    if (j.contains("x") || j.contains("eta"))
      throw ConfigError("flow.separatrix replaces flow.x and flow.eta; give one or the other");
  } else {
    for (const auto& p : require<std::vector<std::array<double, 2>>>(j, "x", "flow"))
      f.x.emplace_back(p[0], p[1]);
    f.eta = require<std::vector<double>>(j, "eta", "flow");
  }
  return f;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  allow_keys(j, "config",
             {"schema_version", "seed", "output_dir", "threads", "geometry", "model", "solve", "scan",
              "eps", "index", "balance", "flow", "check"});
  RunConfig c;
  c.schema_version = require<int>(j, "schema_version", "config");
  if (c.schema_version != kConfigSchemaVersion)
    throw ConfigError("unsupported schema_version " + std::to_string(c.schema_version));
  if (j.contains("seed")) c.seed = get<std::uint64_t>(j, "seed", "config", 0);
  c.output_dir = resolve(base_dir, get<std::string>(j, "output_dir", "config", c.output_dir));
  c.threads = get<int>(j, "threads", "config", 1);
  if (j.contains("geometry")) c.geometry = parse_geometry(j.at("geometry"));
  if (j.contains("model")) c.model = parse_model(j.at("model"));
  if (j.contains("solve")) c.solve = parse_solve(j.at("solve"), base_dir);
  if (j.contains("scan")) {
    allow_keys(j.at("scan"), "scan", {"tau"});
    c.tau_grid = require<std::vector<double>>(j.at("scan"), "tau", "scan");
  }
  if (j.contains("eps")) {
    allow_keys(j.at("eps"), "eps", {"schedule"});
    c.eps_schedule = require<std::vector<double>>(j.at("eps"), "schedule", "eps");
  }
  if (j.contains("index")) c.index = parse_index(j.at("index"));
  if (j.contains("balance")) {
    const json& b = j.at("balance");
    allow_keys(b, "balance", {"atoms", "tol", "flow_steps"});
    BalanceSpec s;
    s.atoms = resolve(base_dir, require<std::string>(b, "atoms", "balance"));
    s.tol = get<double>(b, "tol", "balance", s.tol);
    s.flow_steps = get<int>(b, "flow_steps", "balance", s.flow_steps);
    c.balance = s;
  }
  if (j.contains("flow")) c.flow = parse_flow(j.at("flow"));
  if (j.contains("check")) {
    const json& k = j.at("check");
    allow_keys(k, "check", {"snapshot", "residual_tol", "gauge_samples"});
    CheckSpec s;
    s.snapshot = resolve(base_dir, get<std::string>(k, "snapshot", "check", ""));
    s.residual_tol = get<double>(k, "residual_tol", "check", s.residual_tol);
    s.gauge_samples = get<int>(k, "gauge_samples", "check", s.gauge_samples);
    c.check = s;
  }
  if (c.threads < 1) throw ConfigError("threads must be at least 1");
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const auto parent = std::filesystem::path(path).parent_path();
  return parse_config(ss.str(), parent.empty() ? "." : parent.string());
}

void apply_env_overrides(RunConfig& cfg) {
  auto parse_u64 = [](const char* name, const char* v) {
    try {
      std::size_t used = 0;
      const std::string s(v);
      if (s.empty() || s[0] == '-') throw std::invalid_argument(s);
      const auto x = std::stoull(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return static_cast<std::uint64_t>(x);
    } catch (const std::logic_error&) {
      throw ConfigError(std::string(name) + " must be a nonnegative integer");
    }
  };
  if (const char* v = std::getenv("SVX_SEED")) cfg.seed = parse_u64("SVX_SEED", v);
  if (const char* v = std::getenv("SVX_THREADS")) {
    const auto t = parse_u64("SVX_THREADS", v);
    if (t < 1 || t > 4096) throw ConfigError("SVX_THREADS out of range");
    cfg.threads = static_cast<int>(t);
  }
  if (const char* v = std::getenv("SVX_OUT")) cfg.output_dir = v;
}

TorusGeometry build_geometry(const RunConfig& cfg) {
  if (!cfg.geometry) throw ConfigError("this command needs a geometry block");
  const auto& g = *cfg.geometry;
  return make_torus(g.ns, g.nt, g.ls, g.lt, g.lambda);
}

WeightModel build_model(const RunConfig& cfg) {
  if (!cfg.model) throw ConfigError("this command needs a model block");
  const auto& m = *cfg.model;
  return make_weight_model(m.n, m.r, m.weights, m.tau);
}

}  // namespace svx
