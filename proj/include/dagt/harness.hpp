#pragma once

#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dagt/analysis.hpp"
#include "dagt/engine.hpp"
#include "dagt/graph.hpp"
#include "dagt/oracle.hpp"
#include "dagt/problem.hpp"

namespace dagt {

/// Configuration problems get their own type so the CLI can map them to a
/// dedicated exit code.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitDivergence = 3,
  kExitPropertyFailure = 4,
};

/// Key-value run configuration. Paths are resolved against the directory of
/// the file they were read from.
struct ExperimentConfig {
  std::string instance_path;
  std::string graph_kind = "ring";  // ring | path | complete | random | file
  std::string graph_path;
  int graph_n = 0;  // 0: match the instance
  unsigned seed = 1;
  std::vector<SolverConfig> solvers;
  double alpha = 0.005;
  double beta = 0.28;
  double gamma = 0.25;
  double epsilon = 1e-6;
  int k_max = 10000;
  bool oracle = true;
  std::optional<SmoothnessConstants> constants_override;

  static ExperimentConfig parse(std::istream& in, const std::string& base_dir);
  static ExperimentConfig load(const std::string& path);
  void validate() const;
};

/// Instance + graph + mixing + oracle, ready to execute.
struct Experiment {
  ProblemSpec spec;
  InstanceConfig instance;
  CommGraph graph;
  MixingMatrix mixing;
  SmoothnessConstants constants;
  std::optional<OracleSolution> oracle;
};
Experiment prepare(const ExperimentConfig& cfg);

/// Runs every configured variant, writes one trace CSV per variant plus
/// final-state CSVs, the mixing matrix, the oracle solution and summary.csv
/// into out_dir. A diverging variant is recorded without aborting the others.
int cmd_run(const ExperimentConfig& cfg, const std::string& out_dir,
            std::ostream& log);

/// Membership sweep over an (alpha, momentum) grid: region.csv with one row
/// per grid point and conservative_box.csv with the conservative bound curve.
int cmd_sweep(const ExperimentConfig& cfg, RegionKind kind, double alpha_max,
              double momentum_max, int grid_alpha, int grid_momentum,
              const std::string& out_dir, std::ostream& log);

/// Prints the centralized solution and the closed-form/descent agreement.
int cmd_oracle(const ExperimentConfig& cfg, std::ostream& out);

/// Cross-module property suite; one pass/fail line per property, nonzero
/// exit when any fails.
int cmd_check(const ExperimentConfig& cfg, std::ostream& out);

/// Random monic quartic built from explicitly placed roots, all of whose
/// moduli avoid [1 - 1e-6, 1 + 1e-6]; `stable` records the placement truth.
struct QuarticSample {
  Quartic q;
  bool stable = false;
};
QuarticSample sample_quartic(std::mt19937_64& rng);

/// Companion matrix of a monic quartic (root oracle for the Jury test).
Eigen::Matrix4d companion_matrix(const Quartic& q);

}  // namespace dagt
