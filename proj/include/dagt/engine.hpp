#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dagt/graph.hpp"
#include "dagt/problem.hpp"
#include "dagt/types.hpp"

namespace dagt {

enum class Variant { Dagt, DagtHb, DagtNes };
std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);

struct SolverConfig {
  Variant variant = Variant::Dagt;
  double alpha = 0.005;
  double beta = 0.0;    // heavy-ball momentum
  double gamma = 0.0;   // lookahead momentum
  double epsilon = 1e-6;
  int k_max = 10000;
  void validate() const;
  double momentum() const;
};

struct AgentState {
  Vec x;       // current state
  Vec x_prev;  // previous state (momentum memory)
  Vec y;       // lookahead state; equals x outside the lookahead variant
  Vec u;       // aggregate tracker
  Vec s;       // gradient-sum tracker
};

struct NetworkState {
  std::vector<AgentState> agents;
  int iteration = 0;

  Vec stacked_x() const;
  Vec stacked_u() const;
  Vec stacked_s() const;
  Vec mean_u() const;
  Vec mean_s() const;
  bool finite() const;
};

struct TraceRow {
  int k = 0;
  double state_err = 0;    // ||x_k - x*||; valid only when has_oracle
  double state_diff = 0;   // ||x_k - x_{k-1}||
  double u_track_err = 0;  // ||u_k - K u_k||
  double s_track_err = 0;  // ||s_k - K s_k||
  double cost_gap = 0;     // f(x_k) - f(x*); valid only when has_oracle
  double grad_norm = 0;    // ||grad f(x_k)||
};

struct Trace {
  std::vector<TraceRow> rows;
  bool has_oracle = false;
  bool diverged = false;
  int diverged_at = -1;
  bool reached_epsilon = false;
};

/// u_i = phi_i(x_i0), s_i = grad_u f_i(x_i0, u_i0), x_prev = x_minus1 or x0,
/// y = x0. Valid as the starting state of every variant.
NetworkState init_network(const ProblemSpec& spec, const Vec& x0,
                          const std::optional<Vec>& x_minus1 = {});

/// One synchronous round of the momentum-augmented tracking iteration:
/// every agent computes its state update from the frozen round-k snapshot,
/// then a u-exchange sub-round, then an s-exchange sub-round. Neighbor sums
/// read pre-update values only. Throws DivergenceError on non-finite output.
NetworkState dagt_hb_step(const NetworkState& net, const ProblemSpec& spec,
                          const MixingMatrix& A, double alpha, double beta);

/// Lookahead variant: the gradient is evaluated at y, and the trackers are
/// driven by increments of phi(y) and grad_u f(y, u).
NetworkState dagt_nes_step(const NetworkState& net, const ProblemSpec& spec,
                           const MixingMatrix& A, double alpha, double gamma);

/// Baseline: the beta = 0 specialization of dagt_hb_step.
NetworkState dagt_step(const NetworkState& net, const ProblemSpec& spec,
                       const MixingMatrix& A, double alpha);

NetworkState step_variant(const NetworkState& net, const ProblemSpec& spec,
                          const MixingMatrix& A, const SolverConfig& cfg);

/// (||u - K u||, ||s - K s||) of the stacked trackers.
std::pair<double, double> tracking_residuals(const NetworkState& net);

/// Iterates the configured variant until ||grad f(x_k)|| < epsilon or
/// k = k_max, recording one trace row per iterate (x_0 included). Oracle
/// columns are filled only when x_star/f_star are supplied. Divergence stops
/// the run and leaves a partial trace flagged diverged.
struct OracleRef {
  Vec x_star;
  double f_star = 0;
};
Trace run(const ProblemSpec& spec, const MixingMatrix& A,
          const SolverConfig& cfg, const Vec& x0,
          const std::optional<Vec>& x_minus1 = {},
          const OracleRef* oracle = nullptr);

/// CSV with header k,state_err,state_diff,u_track_err,s_track_err,cost_gap,
/// grad_norm; oracle-dependent cells are left empty when absent.
void write_trace_csv(const Trace& t, std::ostream& out);

}  // namespace dagt
