#include "nehari/commands.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <cstdlib>
#include <iostream>
#include <string>

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  bool has_seed = false;
  std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool* seed_flag) {
  cmd->add_option("--config", opts.config_path, "run configuration file")->required();
  cmd->add_option("--out", opts.out_dir, "output directory override");
  cmd->add_option("--seed", opts.seed, "root RNG seed override")
      ->each([seed_flag](const std::string&) { *seed_flag = true; });
}

nehari::cli::RunConfig load(const CommonOpts& opts) {
  nehari::cli::RunConfig cfg = nehari::cli::parse_config_file(opts.config_path);
  if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
  if (opts.has_seed) cfg.geo.seed = opts.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* threads = std::getenv("NEHARI_THREADS")) {
    const int n = std::atoi(threads);
    if (n > 0) Eigen::setNbThreads(n);
  }

  CLI::App app{"critical-point solver for Dirac-geodesic energies on the circle"};
  app.require_subcommand(1);

  CommonOpts spectrum_opts, solve_opts, sweep_opts, oracle_opts;
  std::string verify_path;

  CLI::App* spectrum = app.add_subcommand("spectrum", "eigenvalues of the twisted operator");
  add_common(spectrum, spectrum_opts, &spectrum_opts.has_seed);
  CLI::App* solve = app.add_subcommand("solve", "solve one winding class");
  add_common(solve, solve_opts, &solve_opts.has_seed);
  CLI::App* verify = app.add_subcommand("verify", "re-check a solution file");
  verify->add_option("solution", verify_path, "solution file to verify")->required();
  CLI::App* sweep = app.add_subcommand("sweep", "solve along a parameter axis");
  add_common(sweep, sweep_opts, &sweep_opts.has_seed);
  CLI::App* oracle = app.add_subcommand("oracle", "brute-force oracle verdict table");
  add_common(oracle, oracle_opts, &oracle_opts.has_seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (spectrum->parsed()) return nehari::cli::cmd_spectrum(load(spectrum_opts), std::cout);
    if (solve->parsed()) return nehari::cli::cmd_solve(load(solve_opts), std::cout);
    if (verify->parsed()) return nehari::cli::cmd_verify(verify_path, std::cout);
    if (sweep->parsed()) return nehari::cli::cmd_sweep(load(sweep_opts), std::cout);
    if (oracle->parsed()) return nehari::cli::cmd_oracle(load(oracle_opts), std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return nehari::cli::kExitBadInput;
  }
  return nehari::cli::kExitBadInput;
}
