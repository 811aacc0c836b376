// Command-line front end: run experiments, sweep stability regions, print the
// centralized oracle and execute the cross-module property suite.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dagt/harness.hpp"

namespace {

struct SharedOpts {
  std::string config_path;
  std::string out_dir = "out";
  std::string variant;
  double alpha = -1, beta = -1, gamma = -1, epsilon = -1;
  int k_max = -1;
  long long seed = -1;
};

void add_shared(CLI::App* cmd, SharedOpts& o, bool with_out) {
  cmd->add_option("--config", o.config_path, "run configuration file")
      ->required();
  if (with_out) cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--variant", o.variant,
                  "run only this variant (DAGT, DAGT-HB, DAGT-NES)");
  cmd->add_option("--alpha", o.alpha, "step size override");
  cmd->add_option("--beta", o.beta, "heavy-ball momentum override");
  cmd->add_option("--gamma", o.gamma, "lookahead momentum override");
  cmd->add_option("--epsilon", o.epsilon, "gradient-norm stop override");
  cmd->add_option("--kmax", o.k_max, "iteration cap override");
  cmd->add_option("--seed", o.seed, "seed override");
}

dagt::ExperimentConfig load_with_overrides(const SharedOpts& o) {
  dagt::ExperimentConfig cfg = dagt::ExperimentConfig::load(o.config_path);
  if (o.alpha > 0) cfg.alpha = o.alpha;
  if (o.beta >= 0) cfg.beta = o.beta;
  if (o.gamma >= 0) cfg.gamma = o.gamma;
  if (o.epsilon > 0) cfg.epsilon = o.epsilon;
  if (o.k_max > 0) cfg.k_max = o.k_max;
  if (o.seed >= 0) cfg.seed = static_cast<unsigned>(o.seed);

  std::vector<dagt::Variant> variants;
  if (!o.variant.empty()) {
    variants.push_back(dagt::variant_from_string(o.variant));
  } else {
    for (const auto& s : cfg.solvers) variants.push_back(s.variant);
  }
  cfg.solvers.clear();
  for (dagt::Variant v : variants) {
    dagt::SolverConfig sc;
    sc.variant = v;
    sc.alpha = cfg.alpha;
    sc.beta = v == dagt::Variant::DagtHb ? cfg.beta : 0.0;
    sc.gamma = v == dagt::Variant::DagtNes ? cfg.gamma : 0.0;
    sc.epsilon = cfg.epsilon;
    sc.k_max = cfg.k_max;
    cfg.solvers.push_back(sc);
  }
  return cfg;
}

std::pair<int, int> parse_grid(const std::string& grid) {
  const auto x = grid.find('x');
  if (x == std::string::npos)
    throw dagt::ConfigError("grid must look like AxB, e.g. 50x50");
  try {
    return {std::stoi(grid.substr(0, x)), std::stoi(grid.substr(x + 1))};
  } catch (const std::exception&) {
    throw dagt::ConfigError("grid must look like AxB, e.g. 50x50");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributed aggregative optimization simulator"};
  app.require_subcommand(1);

  SharedOpts run_opts, sweep_opts, oracle_opts, check_opts;
  std::string sweep_kind = "HB";
  std::string sweep_grid = "50x50";
  double sweep_alpha_max = 0, sweep_momentum_max = 0;

  CLI::App* run_cmd =
      app.add_subcommand("run", "run the configured variants, write trace CSVs");
  add_shared(run_cmd, run_opts, true);

  CLI::App* sweep_cmd = app.add_subcommand(
      "sweep", "evaluate region membership over an (alpha, momentum) grid");
  add_shared(sweep_cmd, sweep_opts, true);
  sweep_cmd->add_option("--kind", sweep_kind, "HB or NES");
  sweep_cmd->add_option("--grid", sweep_grid, "grid size AxB");
  sweep_cmd->add_option("--alpha-max", sweep_alpha_max,
                        "largest alpha (default: twice the conservative bound)");
  sweep_cmd->add_option("--momentum-max", sweep_momentum_max,
                        "largest momentum (default: twice the conservative bound)");

  CLI::App* oracle_cmd =
      app.add_subcommand("oracle", "print the centralized ground-truth solution");
  add_shared(oracle_cmd, oracle_opts, false);

  CLI::App* check_cmd =
      app.add_subcommand("check", "run the cross-module property suite");
  add_shared(check_cmd, check_opts, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return dagt::kExitConfig;
  }

  try {
    if (run_cmd->parsed()) {
      return dagt::cmd_run(load_with_overrides(run_opts), run_opts.out_dir,
                           std::cout);
    }
    if (sweep_cmd->parsed()) {
      dagt::RegionKind kind;
      if (sweep_kind == "HB" || sweep_kind == "hb")
        kind = dagt::RegionKind::HB;
      else if (sweep_kind == "NES" || sweep_kind == "nes")
        kind = dagt::RegionKind::NES;
      else
        throw dagt::ConfigError("sweep kind must be HB or NES");
      const auto [ga, gm] = parse_grid(sweep_grid);
      return dagt::cmd_sweep(load_with_overrides(sweep_opts), kind,
                             sweep_alpha_max, sweep_momentum_max, ga, gm,
                             sweep_opts.out_dir, std::cout);
    }
    if (oracle_cmd->parsed()) {
      return dagt::cmd_oracle(load_with_overrides(oracle_opts), std::cout);
    }
    if (check_cmd->parsed()) {
      return dagt::cmd_check(load_with_overrides(check_opts), std::cout);
    }
  } catch (const dagt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return dagt::kExitConfig;
  } catch (const dagt::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return dagt::kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
