#include "dagt/graph.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace dagt {

std::string full_precision(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CommGraph::CommGraph(int n, std::vector<std::pair<int, int>> edge_list)
    : n_agents(n), edges(std::move(edge_list)) {
  if (n < 1) throw std::invalid_argument("graph needs at least one agent");
  for (auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n)
      throw std::invalid_argument("edge endpoint out of range: (" +
                                  std::to_string(a + 1) + "," +
                                  std::to_string(b + 1) + ")");
    if (a == b)
      throw std::invalid_argument("self-loop rejected at agent " +
                                  std::to_string(a + 1) +
                                  "; self-weights live in the mixing matrix");
    if (a > b) std::swap(a, b);
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
    throw std::invalid_argument("duplicate edge in edge list");
}

bool CommGraph::has_edge(int i, int j) const {
  if (i > j) std::swap(i, j);
  return std::binary_search(edges.begin(), edges.end(), std::make_pair(i, j));
}

std::vector<int> CommGraph::degrees() const {
  std::vector<int> d(n_agents, 0);
  for (auto [a, b] : edges) {
    ++d[a];
    ++d[b];
  }
  return d;
}

std::vector<std::vector<int>> CommGraph::components() const {
  std::vector<std::vector<int>> adj(n_agents);
  for (auto [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<int> label(n_agents, -1);
  int n_comp = 0;
  for (int start = 0; start < n_agents; ++start) {
    if (label[start] >= 0) continue;
    std::vector<int> stack{start};
    label[start] = n_comp;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int w : adj[v])
        if (label[w] < 0) {
          label[w] = n_comp;
          stack.push_back(w);
        }
    }
    ++n_comp;
  }
  std::vector<std::vector<int>> comps(n_comp);
  for (int v = 0; v < n_agents; ++v) comps[label[v]].push_back(v);
  return comps;
}

bool CommGraph::connected() const { return components().size() == 1; }

CommGraph CommGraph::ring(int n) {
  if (n < 3) throw std::invalid_argument("ring needs at least 3 agents");
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return CommGraph(n, std::move(e));
}

CommGraph CommGraph::path(int n) {
  if (n < 2) throw std::invalid_argument("path needs at least 2 agents");
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return CommGraph(n, std::move(e));
}

CommGraph CommGraph::complete(int n) {
  if (n < 2) throw std::invalid_argument("complete graph needs >= 2 agents");
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return CommGraph(n, std::move(e));
}

CommGraph CommGraph::random_connected(int n, unsigned seed) {
  if (n < 2) throw std::invalid_argument("random graph needs >= 2 agents");
  std::mt19937_64 rng(seed);
  const double p = std::min(1.0, 2.0 * std::log(std::max(2, n)) / n);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (unif(rng) < p) e.emplace_back(i, j);
    CommGraph g(n, std::move(e));
    if (g.connected()) return g;
  }
  throw std::runtime_error("failed to sample a connected graph");
}

Vec MixingMatrix::mix_row(int i, const std::vector<Vec>& values) const {
  const auto& row = neighbors[static_cast<size_t>(i)];
  Vec acc = Vec::Zero(values[0].size());
  for (const auto& [j, w] : row) acc += w * values[static_cast<size_t>(j)];
  return acc;
}

static std::string describe_components(const CommGraph& g) {
  std::ostringstream os;
  auto comps = g.components();
  os << comps.size() << " components:";
  for (const auto& c : comps) {
    os << " {";
    for (size_t k = 0; k < c.size(); ++k) os << (k ? "," : "") << c[k] + 1;
    os << "}";
  }
  return os.str();
}

MixingMatrix metropolis_weights(const CommGraph& g) {
  if (!g.connected())
    throw std::invalid_argument("metropolis_weights requires a connected graph; got " +
                                describe_components(g));
  const int n = g.n_agents;
  const auto deg = g.degrees();
  Mat A = Mat::Zero(n, n);
  for (auto [i, j] : g.edges) {
    const double w = 1.0 / (1.0 + std::max(deg[i], deg[j]));
    A(i, j) = w;
    A(j, i) = w;
  }
  for (int i = 0; i < n; ++i) A(i, i) = 1.0 - (A.row(i).sum() - A(i, i));

  MixingMatrix m;
  m.entries = A;
  m.contraction = contraction_factor(A);
  m.neighbors.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (A(i, j) > 0.0) m.neighbors[static_cast<size_t>(i)].emplace_back(j, A(i, j));
  return m;
}

MixingValidation validate_mixing(const Mat& A, const CommGraph& g) {
  if (A.rows() != A.cols() || A.rows() != g.n_agents)
    throw std::invalid_argument("mixing matrix size does not match graph");
  MixingValidation v;
  const int n = g.n_agents;
  v.worst_row_error = (A.rowwise().sum().array() - 1.0).abs().maxCoeff();
  v.worst_col_error = (A.colwise().sum().array() - 1.0).abs().maxCoeff();
  v.row_sums = v.worst_row_error <= kStochasticTol;
  v.col_sums = v.worst_col_error <= kStochasticTol;
  v.nonnegative = (A.array() >= 0.0).all();
  v.symmetric = (A - A.transpose()).cwiseAbs().maxCoeff() <= kStochasticTol;
  v.pattern = true;
  for (int i = 0; i < n && v.pattern; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && A(i, j) > 0.0 && !g.has_edge(i, j)) {
        v.pattern = false;
        break;
      }
  v.graph_connected = g.connected();
  return v;
}

std::string MixingValidation::summary() const {
  std::ostringstream os;
  auto line = [&](const char* name, bool pass) {
    os << name << ": " << (pass ? "pass" : "FAIL") << "\n";
  };
  line("row sums", row_sums);
  line("column sums", col_sums);
  line("nonnegativity", nonnegative);
  line("sparsity pattern", pattern);
  line("symmetry", symmetric);
  line("graph connectivity", graph_connected);
  return os.str();
}

double contraction_factor(const Mat& A) {
  if (A.rows() != A.cols())
    throw std::invalid_argument("contraction_factor requires a square matrix");
  const auto n = A.rows();
  if ((A.rowwise().sum().array() - 1.0).abs().maxCoeff() > kStochasticTol ||
      (A.colwise().sum().array() - 1.0).abs().maxCoeff() > kStochasticTol ||
      !(A.array() >= 0.0).all())
    throw std::invalid_argument("contraction_factor requires a doubly stochastic matrix");
  const Mat D = A - Mat::Constant(n, n, 1.0 / static_cast<double>(n));
  Eigen::JacobiSVD<Mat> svd(D);
  return svd.singularValues()(0);
}

CommGraph parse_edge_list(std::istream& in) {
  std::string line;
  int n = -1;
  std::vector<std::pair<int, int>> edges;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    if (n < 0) {
      if (!(ls >> n) || n < 1)
        throw std::invalid_argument("edge list: bad agent count on line " +
                                    std::to_string(line_no));
      continue;
    }
    int i, j;
    if (!(ls >> i >> j))
      throw std::invalid_argument("edge list: expected 'i j' on line " +
                                  std::to_string(line_no));
    edges.emplace_back(i - 1, j - 1);  // file is 1-indexed
  }
  if (n < 0) throw std::invalid_argument("edge list: missing agent count");
  return CommGraph(n, std::move(edges));
}

CommGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open graph file: " + path);
  return parse_edge_list(in);
}

void write_edge_list(const CommGraph& g, std::ostream& out) {
  out << g.n_agents << "\n";
  for (auto [a, b] : g.edges) out << a + 1 << " " << b + 1 << "\n";
}

void write_matrix_csv(const Mat& A, std::ostream& out) {
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      out << (j ? "," : "") << full_precision(A(i, j));
    out << "\n";
  }
}

}  // namespace dagt
