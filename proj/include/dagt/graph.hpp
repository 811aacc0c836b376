#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "dagt/types.hpp"

namespace dagt {

/// Undirected communication graph over agents 0..n_agents-1.
///
/// Edges are stored as normalized (lo, hi) pairs. Self-loops are rejected on
/// construction; self-weights belong to the mixing matrix, not the graph.
struct CommGraph {
  int n_agents = 0;
  std::vector<std::pair<int, int>> edges;

  CommGraph() = default;
  CommGraph(int n, std::vector<std::pair<int, int>> edge_list);

  bool has_edge(int i, int j) const;
  std::vector<int> degrees() const;
  bool connected() const;
  /// Connected components as sorted agent lists (sorted by smallest member).
  std::vector<std::vector<int>> components() const;

  static CommGraph ring(int n);
  static CommGraph path(int n);
  static CommGraph complete(int n);
  /// Random connected graph: Erdos-Renyi retried until connected.
  /// Deterministic for a fixed seed.
  static CommGraph random_connected(int n, unsigned seed);
};

/// Doubly stochastic mixing matrix together with its contraction factor
/// rho = ||A - K_N|| and a per-agent neighbor list (j, a_ij), self included.
/// The neighbor lists are the only view the engine reads during mixing, so
/// an agent can never consume a non-neighbor value.
struct MixingMatrix {
  Mat entries;
  double contraction = 1.0;
  std::vector<std::vector<std::pair<int, double>>> neighbors;

  int size() const { return static_cast<int>(entries.rows()); }
  /// Weighted neighbor sum sum_j a_ij * values[j], fixed ascending-j order.
  Vec mix_row(int i, const std::vector<Vec>& values) const;
};

/// Metropolis weights: a_ij = 1/(1+max(d_i,d_j)) on edges, diagonal takes the
/// remaining mass. Produces a symmetric doubly stochastic matrix on any
/// connected graph. Throws std::invalid_argument (listing the components) if
/// the graph is disconnected.
MixingMatrix metropolis_weights(const CommGraph& g);

/// Per-check validation outcome for a candidate mixing matrix.
struct MixingValidation {
  bool row_sums = false;
  bool col_sums = false;
  bool nonnegative = false;
  bool pattern = false;     // positive off-diagonals only where edges exist
  bool symmetric = false;
  bool graph_connected = false;
  double worst_row_error = 0.0;
  double worst_col_error = 0.0;

  bool ok() const {
    return row_sums && col_sums && nonnegative && pattern && symmetric &&
           graph_connected;
  }
  std::string summary() const;
};

MixingValidation validate_mixing(const Mat& A, const CommGraph& g);

/// Largest singular value of A - (1/N) * ones. For symmetric doubly
/// stochastic A this is the second largest eigenvalue modulus. Throws if A is
/// not doubly stochastic within 1e-12.
double contraction_factor(const Mat& A);

/// Stochasticity tolerance shared by validation and construction.
inline constexpr double kStochasticTol = 1e-12;

/// Edge-list text format: first non-comment line "N", then one "i j" pair per
/// line, 1-indexed. Lines starting with '#' are skipped.
CommGraph parse_edge_list(std::istream& in);
CommGraph load_graph(const std::string& path);
void write_edge_list(const CommGraph& g, std::ostream& out);

/// Row-major CSV at full precision.
void write_matrix_csv(const Mat& A, std::ostream& out);

}  // namespace dagt
