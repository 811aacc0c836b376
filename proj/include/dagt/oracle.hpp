#pragma once

#include <iosfwd>

#include "dagt/engine.hpp"
#include "dagt/problem.hpp"
#include "dagt/types.hpp"

namespace dagt {

/// Centralized ground truth, independent of the distributed engine.
struct OracleSolution {
  enum class Method { ClosedForm, CentralizedDescent };
  Vec x_star;
  Vec u_star;
  double f_star = 0;
  Method method = Method::ClosedForm;
  double residual = 0;  // ||grad f(x_star)||
  int iterations = 0;
  bool converged = true;

  OracleRef ref() const { return OracleRef{x_star, f_star}; }
};

/// Uniform-weight placement optimum: the aggregate at the optimum is the
/// anchor mean r_bar and x_i* = (w r_i + r_bar) / (1 + w). Throws for
/// non-placement specs or non-uniform weights (use solve_centralized there).
OracleSolution solve_placement_closed_form(const ProblemSpec& spec);

/// Plain gradient descent on the true gradient until ||grad f|| <= tol.
/// step must lie in (0, 1/L1]. Hitting iter_cap flags the solution partial.
OracleSolution solve_centralized(const ProblemSpec& spec, const Vec& x_init,
                                 double step, double tol, int iter_cap);

/// Convenience: closed form when available, otherwise centralized descent
/// from the anchor stack / zero vector.
OracleSolution solve_oracle(const ProblemSpec& spec);

/// Builds the consensus fixed state (x*, u = u*, s = mean grad_u, y = x*,
/// x_prev = x*), applies one step of the given variant and returns the
/// largest coordinate displacement across x, u, s.
double verify_fixed_point(const ProblemSpec& spec, const MixingMatrix& A,
                          const OracleSolution& sol, Variant variant,
                          double alpha, double momentum);

/// Consensus network state at the optimum; also used by the fixed-point
/// tests to probe perturbed starts.
NetworkState fixed_state(const ProblemSpec& spec, const OracleSolution& sol);

/// Key-value text: method, residual, f_star, one x_star line per agent,
/// u_star. Full precision.
void write_solution(const OracleSolution& sol, const ProblemSpec& spec,
                    std::ostream& out);

}  // namespace dagt
