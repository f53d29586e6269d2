#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "svx/commands.hpp"
#include "svx/field_io.hpp"

using namespace svx;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("svx_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

const char* kSolve = R"({
  "schema_version": 1,
  "seed": 11,
  "geometry": {"ns": 24, "nt": 24},
  "model": {"weights": [[1]], "tau": 12.566370614359172},
  "solve": {"degree": 1, "init": {"kind": "zeros", "points": [[0.53, 0.47]]}}
})";

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(const std::string& cmd, const std::string& text, const fs::path& dir,
        const CommandArgs& args = {}) {
  RunConfig cfg = parse_config(text, dir.string());
  cfg.output_dir = (dir / "out").string();
  std::ostringstream o, e;
  Run r;
  r.code = run_command(cmd, cfg, args, o, e);
  r.out = o.str();
  r.err = e.str();
  return r;
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(SVX_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST(Config, ParsesBlocks) {
  const auto c = parse_config(R"({
    "schema_version": 1, "seed": 3, "threads": 2,
    "geometry": {"ns": 8, "nt": 12, "ls": 1.0, "lt": 1.5, "lambda": 1.0},
    "model": {"weights": [[1], [2]], "tau": [5.0], "epsilon": 0.5},
    "solve": {"degree": [2], "init": {"kind": "random"}, "options": {"newton_tol": 1e-9}},
    "scan": {"tau": [1, 2, 3]},
    "eps": {"schedule": [1, 0.5]}
  })");
  EXPECT_EQ(*c.seed, 3u);
  EXPECT_EQ(c.threads, 2);
  EXPECT_EQ(c.geometry->nt, 12);
  EXPECT_EQ(c.model->weights, (std::vector<int>{1, 2}));
  EXPECT_EQ(c.model->n, 2);
  EXPECT_EQ(c.model->epsilon, 0.5);
  EXPECT_EQ(c.solve->degree, std::vector<int>{2});
  EXPECT_EQ(c.solve->options.newton_tol, 1e-9);
  EXPECT_EQ(c.tau_grid.size(), 3u);
  EXPECT_EQ(c.eps_schedule.size(), 2u);
  const auto g = build_geometry(c);
  EXPECT_EQ(g.num_sites(), 96);
  EXPECT_EQ(build_model(c).w.n, 2);
}

TEST(Config, RejectsUnknownKeysAndVersions) {
  EXPECT_THROW(parse_config(R"({"schema_version": 1, "sed": 3})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"schema_version": 1, "geometry": {"ns": 8, "nx": 8}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"schema_version": 1, "solve": {"degree": 1, "options": {"newton_tl": 1}}})"),
               ConfigError);
  EXPECT_THROW(parse_config(R"({"schema_version": 2})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"seed": 1})"), ConfigError);
  EXPECT_THROW(parse_config("{not json"), ConfigError);
}

TEST(Config, RelativePathsFollowConfigDir) {
  const auto c = parse_config(R"({"schema_version": 1, "balance": {"atoms": "m.csv"}})", "/data/run");
  EXPECT_EQ(fs::path(c.balance->atoms), fs::path("/data/run/m.csv"));
}

TEST(Config, EnvironmentOverrides) {
  auto c = parse_config(R"({"schema_version": 1, "seed": 1, "threads": 1, "output_dir": "a"})", "/x");
  ::setenv("SVX_SEED", "42", 1);
  ::setenv("SVX_THREADS", "4", 1);
  ::setenv("SVX_OUT", "/tmp/elsewhere", 1);
  apply_env_overrides(c);
  ::unsetenv("SVX_SEED");
  ::unsetenv("SVX_THREADS");
  ::unsetenv("SVX_OUT");
  EXPECT_EQ(*c.seed, 42u);
  EXPECT_EQ(c.threads, 4);
  EXPECT_EQ(c.output_dir, "/tmp/elsewhere");
  ::setenv("SVX_SEED", "minus", 1);
  EXPECT_THROW(apply_env_overrides(c), ConfigError);
  ::unsetenv("SVX_SEED");
}

TEST(Solve, ConvergedRunWritesArtifacts) {
  TempDir t;
  const auto r = run("solve", kSolve, t.path);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto e = json::parse(slurp(t.path / "out" / "energy.json"));
  EXPECT_TRUE(e["converged"].get<bool>());
  EXPECT_LE(e["identity_gap"].get<double>(), 1e-10 * std::max(1.0, e["energy"].get<double>()));
  EXPECT_TRUE(fs::exists(t.path / "out" / "state.snap"));
  EXPECT_TRUE(fs::exists(t.path / "out" / "section.csv"));
  const auto rec = json::parse(slurp(t.path / "out" / "record.jsonl"));
  EXPECT_LE(rec["res_norm"].get<double>(), 1e-8);
}

TEST(Solve, BelowThresholdIsHonestNegative) {
  TempDir t;
  auto doc = json::parse(kSolve);
  doc["model"]["tau"] = 3.141592653589793;
  doc["solve"]["init"] = {{"kind", "random"}};
  doc["solve"]["options"] = {{"max_iters", 300}};
  const auto r = run("solve", doc.dump(), t.path);
  EXPECT_EQ(r.code, kExitNegative);
  const auto e = json::parse(slurp(t.path / "out" / "energy.json"));
  EXPECT_FALSE(e["converged"].get<bool>());
  bool found = false;
  for (const auto& n : e["notes"]) found = found || n.get<std::string>() == "BelowThreshold";
  EXPECT_TRUE(found);
}

TEST(Solve, MissingSeedIsUsageError) {
  TempDir t;
  auto doc = json::parse(kSolve);
  doc.erase("seed");
  const auto r = run("solve", doc.dump(), t.path);
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_FALSE(fs::exists(t.path / "out" / "energy.json"));
}

TEST(Binary, UnknownKeyWritesNothing) {
  TempDir t;
  auto doc = json::parse(kSolve);
  doc["output_dir"] = "out";
  doc["geometry"]["nss"] = 16;
  spit(t.path / "c.json", doc.dump());
  EXPECT_EQ(run_binary("solve --config " + (t.path / "c.json").string()), kExitUsage);
  EXPECT_FALSE(fs::exists(t.path / "out"));
}

TEST(Binary, UsageErrors) {
  EXPECT_EQ(run_binary("solve"), kExitUsage);
  EXPECT_EQ(run_binary("bogus --config /nonexistent.json"), kExitUsage);
  EXPECT_EQ(run_binary("solve --config /nonexistent.json"), kExitUsage);
}

TEST(Binary, FlagsOverrideConfig) {
  TempDir t;
  spit(t.path / "c.json", R"({"schema_version": 1, "output_dir": "from_config",
    "index": {"g": 1, "n": 1, "dim_g": 1, "c1b": 2}})");
  const fs::path flag_out = t.path / "from_flag";
  EXPECT_EQ(run_binary("index --config " + (t.path / "c.json").string() + " --out " + flag_out.string()),
            kExitOk);
  EXPECT_TRUE(fs::exists(flag_out / "index.json"));
  EXPECT_FALSE(fs::exists(t.path / "from_config"));
}

TEST(Check, ConvergedCorruptedAndWrongModel) {
  TempDir t;
  ASSERT_EQ(run("solve", kSolve, t.path).code, kExitOk);
  const std::string snap = (t.path / "out" / "state.snap").string();
  CommandArgs args{snap};

  auto ok = run("check", kSolve, t.path, args);
  EXPECT_EQ(ok.code, kExitOk) << ok.err;
  EXPECT_EQ(ok.out, "PASS\n");
  auto verdict = json::parse(slurp(t.path / "out" / "check.json"));
  EXPECT_TRUE(verdict["pass"].get<bool>());

  VortexState st = read_snapshot(snap);
  for (std::size_t i = 0; i < st.a.as.size(); i += 7) st.a.as[i] += 0.3;
  const std::string bad = (t.path / "bad.snap").string();
  write_snapshot(bad, st);
  auto corrupted = run("check", kSolve, t.path, CommandArgs{bad});
  EXPECT_EQ(corrupted.code, kExitNegative);
  verdict = json::parse(slurp(t.path / "out" / "check.json"));
  EXPECT_TRUE(verdict["checks"]["energy_identity"]["pass"].get<bool>());
  EXPECT_FALSE(verdict["checks"]["residual"]["pass"].get<bool>());

  auto doc = json::parse(kSolve);
  doc["model"]["weights"] = {{1}, {1}};
  EXPECT_EQ(run("check", doc.dump(), t.path, args).code, kExitUsage);

  std::string bytes = slurp(snap);
  bytes[8] = 9;  // format version
  spit(bad, bytes);
  EXPECT_EQ(run("check", kSolve, t.path, CommandArgs{bad}).code, kExitUsage);
}

TEST(ScanTau, OneLinePerGridValue) {
  TempDir t;
  auto doc = json::parse(kSolve);
  doc["solve"]["init"] = {{"kind", "random"}};
  doc["solve"]["options"] = {{"max_restarts", 0}, {"max_iters", 300}};
  doc["scan"] = {{"tau", {3.141592653589793, 6.9115, 12.566370614359172}}};
  doc["threads"] = 3;
  const auto r = run("scan-tau", doc.dump(), t.path);
  EXPECT_EQ(r.code, kExitOk);
  std::istringstream in(slurp(t.path / "out" / "scan_tau.jsonl"));
  std::vector<json> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(json::parse(l));
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_FALSE(lines[0]["converged"].get<bool>());
  EXPECT_TRUE(lines[2]["converged"].get<bool>());
  EXPECT_TRUE(fs::exists(t.path / "out" / "scan_tau.csv"));
}

TEST(Index, PrintsFormulaValue) {
  TempDir t;
  const auto r = run("index", R"({"schema_version": 1, "index": {"g": 1, "n": 1, "dim_g": 1, "c1b": 2}})", t.path);
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out, "4\n");
}

TEST(Balance, OctahedronBalancesAtOrigin) {
  TempDir t;
  spit(t.path / "oct.csv", "x,y,z,w\n1,0,0,1\n-1,0,0,1\n0,1,0,1\n0,-1,0,1\n0,0,1,1\n0,0,-1,1\n");
  const auto r = run("balance", R"({"schema_version": 1, "balance": {"atoms": "oct.csv"}})", t.path);
  EXPECT_EQ(r.code, kExitOk) << r.err;
  const auto j = json::parse(slurp(t.path / "out" / "balance.json"));
  EXPECT_LE(j["eta_norm"].get<double>(), 1e-10);
  EXPECT_TRUE(j["flow_monotone"].get<bool>());
}

TEST(Balance, BadAtomsFileIsUsageError) {
  TempDir t;
  spit(t.path / "bad.csv", "1,0,0\n");
  const auto r = run("balance", R"({"schema_version": 1, "balance": {"atoms": "bad.csv"}})", t.path);
  EXPECT_EQ(r.code, kExitUsage);
}

TEST(Flow, SeparatrixStartIsCritical) {
  TempDir t;
  const auto r = run("flow", R"({"schema_version": 1,
    "model": {"weights": [[1]], "tau": 1.0},
    "flow": {"hamiltonian": "0.75*p0", "separatrix": {"a": 1.5, "p0": 0.5}, "dt": 1e-3, "steps": 12000}})", t.path);
  EXPECT_EQ(r.code, kExitOk) << r.err;
  const auto j = json::parse(slurp(t.path / "out" / "flow.json"));
  EXPECT_TRUE(j["critical"].get<bool>());
  EXPECT_LE(j["functional_max_rise"].get<double>(), 1e-9);
}

TEST(Reproducibility, RepeatedRunsAreByteIdentical) {
  TempDir a, b;
  ASSERT_EQ(run("solve", kSolve, a.path).code, kExitOk);
  ASSERT_EQ(run("solve", kSolve, b.path).code, kExitOk);
  for (const char* f : {"energy.json", "record.jsonl", "state.snap", "section.csv"})
    EXPECT_EQ(slurp(a.path / "out" / f), slurp(b.path / "out" / f)) << f;
}
