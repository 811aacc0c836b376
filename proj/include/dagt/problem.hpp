#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "dagt/types.hpp"

namespace dagt {

/// Local objective bundle of one agent: cost f_i(x_i, u), its two partial
/// gradients, the aggregation rule phi_i and its Jacobian. All callables are
/// pure functions of their arguments.
struct AgentOracle {
  std::function<double(const Vec& xi, const Vec& u)> value;
  std::function<Vec(const Vec& xi, const Vec& u)> grad_x;   // in R^{n_i}
  std::function<Vec(const Vec& xi, const Vec& u)> grad_u;   // in R^d
  std::function<Vec(const Vec& xi)> phi;                    // in R^d
  std::function<Mat(const Vec& xi)> phi_jac;                // n_i x d
};

/// Optimal placement family: anchors r_i in R^2, per-agent weights
/// (a single scalar in the canonical instance).
struct PlacementInstance {
  std::vector<Eigen::Vector2d> anchors;
  Vec weights;

  bool uniform_weight() const;
  double weight() const;  // first weight; throws when non-uniform
};

/// Aggregative optimization problem: min sum_i f_i(x_i, u(x)) with
/// u(x) = (1/N) sum_i phi_i(x_i).
struct ProblemSpec {
  std::vector<int> agent_dims;
  int agg_dim = 0;
  std::vector<AgentOracle> agents;
  /// Set when the spec was built from the placement family; enables the
  /// closed-form Hessian constants and the closed-form optimum.
  std::optional<PlacementInstance> placement;

  int n_agents() const { return static_cast<int>(agent_dims.size()); }
  int total_dim() const;
  int offset(int i) const;
  Eigen::Ref<const Vec> agent_block(const Vec& x, int i) const;
  void check_dims(const Vec& x) const;
};

/// Constants consumed by the convergence analysis (Assumptions 2-4).
struct SmoothnessConstants {
  double m = 0, L1 = 0, L2 = 0, L3 = 0;
  void validate() const;
};

/// Builds the placement problem f_i = w_i ||x_i - r_i||^2 + ||x_i - u||^2
/// with identity aggregation. Throws on non-2D anchors or w <= 0.
ProblemSpec placement_instance(const std::vector<Eigen::Vector2d>& anchors,
                               double weight);
ProblemSpec placement_instance(const PlacementInstance& inst);

/// The five-agent instance used throughout the docs and tests.
PlacementInstance canonical_instance();
Vec canonical_x0();
Vec canonical_x_minus1();

/// u(x) = (1/N) sum_i phi_i(x_i).
Vec aggregate(const ProblemSpec& spec, const Vec& x);

/// f(x) = sum_i f_i(x_i, u(x)).
double global_cost(const ProblemSpec& spec, const Vec& x);

/// True gradient of the aggregative cost: block i is
/// grad_x f_i(x_i, u) + phi_jac_i(x_i) * (1/N) sum_j grad_u f_j(x_j, u),
/// evaluated at u = u(x). Telemetry only; agents never see it.
Vec global_grad(const ProblemSpec& spec, const Vec& x);

/// Constants for the placement family from the closed-form Hessian
/// blkdiag(2 w_i I) + 2 (I - mean projector): m and L1 are its extreme
/// eigenvalues, L2 = 2, L3 = 1. Throws for specs without a placement tag;
/// user-supplied constants should be sampled with validate_constants instead.
SmoothnessConstants derive_constants(const ProblemSpec& spec);

/// Worst sampled violation of each constant's defining inequality
/// (negative margins mean the inequality held). Used to vet user-supplied
/// constants before any stability verdict is trusted.
struct ConstantsCheck {
  double strong_convexity = 0;  // max of m||dx||^2 - <dx, dg>
  double smoothness = 0;        // max of ||dg|| - L1 ||dx||
  double grad_u_lipschitz = 0;  // max of ||d grad_u|| - L2 (||dx|| + ||du||)
  double phi_lipschitz = 0;     // max of ||d phi|| - L3 ||dx||
  double lemma1_contraction = 0;
  bool ok(double tol = 1e-9) const;
};
ConstantsCheck validate_constants(const ProblemSpec& spec,
                                  const SmoothnessConstants& c, int n_pairs,
                                  unsigned seed);

/// Central-difference comparison of grad_x, grad_u and phi_jac against the
/// declared oracles, per block. The probes are nudged onto representable
/// points, so constant Jacobians (identity phi in particular) check exactly.
struct FiniteDiffReport {
  double grad_x = 0, grad_u = 0, phi_jac = 0;
  double worst() const;
};
FiniteDiffReport finite_diff_report(const ProblemSpec& spec, const Vec& x,
                                    double h);

/// Worst relative error over all blocks of finite_diff_report.
double finite_diff_check(const ProblemSpec& spec, const Vec& x, double h);

/// Key-value instance file: "weight w" (or one value per agent),
/// "anchor x y" per agent, optional "x0 x y" and "xprev x y" per agent.
struct InstanceConfig {
  PlacementInstance instance;
  std::optional<Vec> x0;
  std::optional<Vec> x_prev;
};
InstanceConfig parse_instance(std::istream& in);
InstanceConfig load_instance(const std::string& path);
void write_instance(const InstanceConfig& cfg, std::ostream& out);

}  // namespace dagt
