#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "svx/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"svx: abelian vortex solver and checks"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  long long seed = -1;
  int threads = 0;
  std::string snapshot;
  app.add_option("--config", config_path, "JSON run config")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (overrides config and SVX_OUT)");
  app.add_option("--seed", seed, "PRNG seed (overrides config and SVX_SEED)")->check(CLI::NonNegativeNumber);
  app.add_option("--threads", threads, "worker cap (overrides config and SVX_THREADS)")->check(CLI::PositiveNumber);

  // options given after the subcommand name are accepted as well
  app.fallthrough();
  const std::map<std::string, std::string> about{
      {"solve", "solve the vortex equations for one degree"},
      {"check", "verify a saved state against the model"},
      {"scan-tau", "one solve per tau in tau_grid"},
      {"scan-eps", "epsilon continuation along eps_schedule"},
      {"index", "index formula, optionally with the spectral probe"},
      {"balance", "Moebius balance point of a weighted sphere measure"},
      {"flow", "integrate the equivariant gradient flow"}};
  for (const auto& name : svx::command_names()) {
    auto* sub = app.add_subcommand(name, about.count(name) ? about.at(name) : "");
    if (name == "check") sub->add_option("--snapshot", snapshot, "state snapshot to verify");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : svx::kExitUsage;
  }

  svx::RunConfig cfg;
  try {
    cfg = svx::load_config(config_path);
    svx::apply_env_overrides(cfg);
  } catch (const svx::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return svx::kExitUsage;
  }
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
  if (threads > 0) cfg.threads = threads;

  svx::CommandArgs args;
  args.snapshot = snapshot;
  const std::string name = app.get_subcommands().front()->get_name();
  return svx::run_command(name, cfg, args, std::cout, std::cerr);
}
