#include "dagt/problem.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace dagt {

bool PlacementInstance::uniform_weight() const {
  return weights.size() > 0 &&
         (weights.array() == weights(0)).all();
}

double PlacementInstance::weight() const {
  if (!uniform_weight())
    throw std::logic_error("placement instance has non-uniform weights");
  return weights(0);
}

int ProblemSpec::total_dim() const {
  return std::accumulate(agent_dims.begin(), agent_dims.end(), 0);
}

int ProblemSpec::offset(int i) const {
  return std::accumulate(agent_dims.begin(), agent_dims.begin() + i, 0);
}

Eigen::Ref<const Vec> ProblemSpec::agent_block(const Vec& x, int i) const {
  return x.segment(offset(i), agent_dims[static_cast<size_t>(i)]);
}

void ProblemSpec::check_dims(const Vec& x) const {
  if (x.size() != total_dim())
    throw std::invalid_argument("state dimension " + std::to_string(x.size()) +
                                " does not match problem dimension " +
                                std::to_string(total_dim()));
}

void SmoothnessConstants::validate() const {
  if (!(m > 0 && L1 > 0 && L2 > 0 && L3 > 0))
    throw std::invalid_argument("smoothness constants must be positive");
  if (m > L1)
    throw std::invalid_argument("strong convexity modulus m exceeds L1");
}

ProblemSpec placement_instance(const PlacementInstance& inst) {
  const int n = static_cast<int>(inst.anchors.size());
  if (n < 1) throw std::invalid_argument("placement instance needs anchors");
  if (inst.weights.size() != n)
    throw std::invalid_argument("weight count does not match anchor count");
  if (!(inst.weights.array() > 0.0).all())
    throw std::invalid_argument("placement weights must be positive");

  ProblemSpec spec;
  spec.agent_dims.assign(static_cast<size_t>(n), 2);
  spec.agg_dim = 2;
  spec.placement = inst;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d r = inst.anchors[static_cast<size_t>(i)];
    const double w = inst.weights(i);
    AgentOracle a;
    a.value = [r, w](const Vec& xi, const Vec& u) {
      return w * (xi - r).squaredNorm() + (xi - u).squaredNorm();
    };
    a.grad_x = [r, w](const Vec& xi, const Vec& u) -> Vec {
      return 2.0 * w * (xi - r) + 2.0 * (xi - u);
    };
    a.grad_u = [](const Vec& xi, const Vec& u) -> Vec { return 2.0 * (u - xi); };
    a.phi = [](const Vec& xi) -> Vec { return xi; };
    a.phi_jac = [](const Vec& xi) -> Mat {
      return Mat::Identity(xi.size(), xi.size());
    };
    spec.agents.push_back(std::move(a));
  }
  return spec;
}

ProblemSpec placement_instance(const std::vector<Eigen::Vector2d>& anchors,
                               double weight) {
  if (!(weight > 0)) throw std::invalid_argument("placement weight must be > 0");
  PlacementInstance inst;
  inst.anchors = anchors;
  inst.weights = Vec::Constant(static_cast<Eigen::Index>(anchors.size()), weight);
  return placement_instance(inst);
}

PlacementInstance canonical_instance() {
  PlacementInstance inst;
  inst.anchors = {{10, 4}, {1, 3}, {2, 7}, {8, 10}, {3, 9}};
  inst.weights = Vec::Constant(5, 20.0);
  return inst;
}

static Vec stack2(std::initializer_list<Eigen::Vector2d> pts) {
  Vec v(2 * static_cast<Eigen::Index>(pts.size()));
  Eigen::Index k = 0;
  for (const auto& p : pts) {
    v.segment<2>(k) = p;
    k += 2;
  }
  return v;
}

Vec canonical_x0() { return stack2({{2, 9}, {8, 6}, {7, 3}, {4, 7}, {8, 3}}); }

Vec canonical_x_minus1() {
  return stack2({{0, 11}, {9, 8}, {9, 1}, {1, 4}, {3, 1}});
}

Vec aggregate(const ProblemSpec& spec, const Vec& x) {
  spec.check_dims(x);
  Vec u = Vec::Zero(spec.agg_dim);
  for (int i = 0; i < spec.n_agents(); ++i)
    u += spec.agents[static_cast<size_t>(i)].phi(spec.agent_block(x, i));
  return u / spec.n_agents();
}

double global_cost(const ProblemSpec& spec, const Vec& x) {
  const Vec u = aggregate(spec, x);
  double f = 0;
  for (int i = 0; i < spec.n_agents(); ++i)
    f += spec.agents[static_cast<size_t>(i)].value(spec.agent_block(x, i), u);
  return f;
}

Vec global_grad(const ProblemSpec& spec, const Vec& x) {
  const Vec u = aggregate(spec, x);
  Vec mean_gu = Vec::Zero(spec.agg_dim);
  for (int i = 0; i < spec.n_agents(); ++i)
    mean_gu += spec.agents[static_cast<size_t>(i)].grad_u(spec.agent_block(x, i), u);
  mean_gu /= spec.n_agents();

  Vec g(spec.total_dim());
  for (int i = 0; i < spec.n_agents(); ++i) {
    const auto& a = spec.agents[static_cast<size_t>(i)];
    const auto xi = spec.agent_block(x, i);
    g.segment(spec.offset(i), spec.agent_dims[static_cast<size_t>(i)]) =
        a.grad_x(xi, u) + a.phi_jac(xi) * mean_gu;
  }
  return g;
}

SmoothnessConstants derive_constants(const ProblemSpec& spec) {
  if (!spec.placement)
    throw std::invalid_argument(
        "derive_constants needs the placement family; supply constants "
        "explicitly for other problems and vet them with validate_constants");
  const auto& inst = *spec.placement;
  const int n = spec.total_dim();
  const int N = spec.n_agents();
  const int d = spec.agg_dim;

  // Hessian of f: blkdiag(2 w_i I_d) + 2 (I - K), K the agent-mean projector.
  Mat H = Mat::Zero(n, n);
  for (int i = 0; i < N; ++i)
    H.block(d * i, d * i, d, d) = 2.0 * inst.weights(i) * Mat::Identity(d, d);
  Mat K = Mat::Zero(n, n);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      K.block(d * i, d * j, d, d) = Mat::Identity(d, d) / N;
  H += 2.0 * (Mat::Identity(n, n) - K);

  Eigen::SelfAdjointEigenSolver<Mat> es(H);
  SmoothnessConstants c;
  c.m = es.eigenvalues().minCoeff();
  c.L1 = es.eigenvalues().maxCoeff();
  c.L2 = 2.0;  // grad_u f is 2(u - x) blockwise
  c.L3 = 1.0;  // identity aggregation
  c.validate();
  return c;
}

bool ConstantsCheck::ok(double tol) const {
  return strong_convexity <= tol && smoothness <= tol &&
         grad_u_lipschitz <= tol && phi_lipschitz <= tol &&
         lemma1_contraction <= tol;
}

ConstantsCheck validate_constants(const ProblemSpec& spec,
                                  const SmoothnessConstants& c, int n_pairs,
                                  unsigned seed) {
  c.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-10.0, 10.0);
  const int n = spec.total_dim();
  const int N = spec.n_agents();
  const double alpha = 1.0 / c.L1;
  ConstantsCheck out;
  auto sample = [&](int sz) {
    Vec v(sz);
    for (int k = 0; k < sz; ++k) v(k) = unif(rng);
    return v;
  };
  for (int p = 0; p < n_pairs; ++p) {
    const Vec x = sample(n), y = sample(n);
    const Vec gx = global_grad(spec, x), gy = global_grad(spec, y);
    const Vec dx = x - y, dg = gx - gy;
    out.strong_convexity =
        std::max(out.strong_convexity, c.m * dx.squaredNorm() - dx.dot(dg));
    out.smoothness = std::max(out.smoothness, dg.norm() - c.L1 * dx.norm());
    out.lemma1_contraction =
        std::max(out.lemma1_contraction,
                 (dx - alpha * dg).norm() - (1.0 - c.m * alpha) * dx.norm());

    // grad_u and phi Lipschitz bounds, sampled per agent with free u inputs
    const Vec u1 = sample(spec.agg_dim), u2 = sample(spec.agg_dim);
    for (int i = 0; i < N; ++i) {
      const auto& a = spec.agents[static_cast<size_t>(i)];
      const Vec xi = spec.agent_block(x, i), yi = spec.agent_block(y, i);
      const double dgu = (a.grad_u(xi, u1) - a.grad_u(yi, u2)).norm();
      out.grad_u_lipschitz =
          std::max(out.grad_u_lipschitz,
                   dgu - c.L2 * ((xi - yi).norm() + (u1 - u2).norm()));
      out.phi_lipschitz =
          std::max(out.phi_lipschitz,
                   (a.phi(xi) - a.phi(yi)).norm() - c.L3 * (xi - yi).norm());
    }
  }
  return out;
}

double FiniteDiffReport::worst() const {
  return std::max({grad_x, grad_u, phi_jac});
}

FiniteDiffReport finite_diff_report(const ProblemSpec& spec, const Vec& x,
                                    double h) {
  if (!(h > 0) || h > 1e-3)
    throw std::invalid_argument("finite difference step must be in (0, 1e-3]");
  spec.check_dims(x);
  const Vec u = aggregate(spec, x);
  FiniteDiffReport rep;
  auto rel = [](const Vec& num, const Vec& ana) {
    return (num - ana).norm() / std::max(1.0, ana.norm());
  };
  for (int i = 0; i < spec.n_agents(); ++i) {
    const auto& a = spec.agents[static_cast<size_t>(i)];
    const Vec xi = spec.agent_block(x, i);
    const int ni = spec.agent_dims[static_cast<size_t>(i)];
    const int d = spec.agg_dim;

    Vec gx_num(ni);
    for (int k = 0; k < ni; ++k) {
      Vec xp = xi, xm = xi;
      xp(k) += h;
      xm(k) -= h;
      gx_num(k) = (a.value(xp, u) - a.value(xm, u)) / (xp(k) - xm(k));
    }
    rep.grad_x = std::max(rep.grad_x, rel(gx_num, a.grad_x(xi, u)));

    Vec gu_num(d);
    for (int k = 0; k < d; ++k) {
      Vec up = u, um = u;
      up(k) += h;
      um(k) -= h;
      gu_num(k) = (a.value(xi, up) - a.value(xi, um)) / (up(k) - um(k));
    }
    rep.grad_u = std::max(rep.grad_u, rel(gu_num, a.grad_u(xi, u)));

    Mat jac_num(ni, d);
    for (int k = 0; k < ni; ++k) {
      Vec xp = xi, xm = xi;
      xp(k) += h;
      xm(k) -= h;
      jac_num.row(k) = (a.phi(xp) - a.phi(xm)).transpose() / (xp(k) - xm(k));
    }
    const Mat jac = a.phi_jac(xi);
    rep.phi_jac = std::max(rep.phi_jac,
                           (jac_num - jac).norm() / std::max(1.0, jac.norm()));
  }
  return rep;
}

double finite_diff_check(const ProblemSpec& spec, const Vec& x, double h) {
  return finite_diff_report(spec, x, h).worst();
}

InstanceConfig parse_instance(std::istream& in) {
  std::vector<Eigen::Vector2d> anchors;
  std::vector<double> weights;
  std::vector<Eigen::Vector2d> x0, xprev;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    auto read2 = [&](std::vector<Eigen::Vector2d>& dst) {
      double a, b;
      if (!(ls >> a >> b))
        throw std::invalid_argument("instance file: expected two numbers on line " +
                                    std::to_string(line_no));
      dst.emplace_back(a, b);
    };
    if (key == "anchor") {
      read2(anchors);
    } else if (key == "x0") {
      read2(x0);
    } else if (key == "xprev") {
      read2(xprev);
    } else if (key == "weight") {
      double w;
      while (ls >> w) weights.push_back(w);
      if (weights.empty())
        throw std::invalid_argument("instance file: weight needs a value (line " +
                                    std::to_string(line_no) + ")");
    } else {
      throw std::invalid_argument("instance file: unknown key '" + key +
                                  "' on line " + std::to_string(line_no));
    }
  }
  if (anchors.empty())
    throw std::invalid_argument("instance file: no anchors given");
  if (weights.empty())
    throw std::invalid_argument("instance file: no weight given");

  InstanceConfig cfg;
  cfg.instance.anchors = anchors;
  const auto N = static_cast<Eigen::Index>(anchors.size());
  if (weights.size() == 1)
    cfg.instance.weights = Vec::Constant(N, weights[0]);
  else if (static_cast<Eigen::Index>(weights.size()) == N)
    cfg.instance.weights = Eigen::Map<const Vec>(weights.data(), N);
  else
    throw std::invalid_argument("instance file: weight count must be 1 or match anchors");

  auto stack = [&](const std::vector<Eigen::Vector2d>& pts, const char* what) {
    if (static_cast<Eigen::Index>(pts.size()) != N)
      throw std::invalid_argument(std::string("instance file: ") + what +
                                  " count must match anchors");
    Vec v(2 * N);
    for (Eigen::Index i = 0; i < N; ++i) v.segment<2>(2 * i) = pts[static_cast<size_t>(i)];
    return v;
  };
  if (!x0.empty()) cfg.x0 = stack(x0, "x0");
  if (!xprev.empty()) cfg.x_prev = stack(xprev, "xprev");
  return cfg;
}

InstanceConfig load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open instance file: " + path);
  return parse_instance(in);
}

void write_instance(const InstanceConfig& cfg, std::ostream& out) {
  const auto& inst = cfg.instance;
  if (inst.uniform_weight()) {
    out << "weight " << full_precision(inst.weights(0)) << "\n";
  } else {
    out << "weight";
    for (Eigen::Index i = 0; i < inst.weights.size(); ++i)
      out << " " << full_precision(inst.weights(i));
    out << "\n";
  }
  for (const auto& r : inst.anchors)
    out << "anchor " << full_precision(r.x()) << " " << full_precision(r.y()) << "\n";
  auto dump = [&](const char* key, const Vec& v) {
    for (Eigen::Index i = 0; i + 1 < v.size(); i += 2)
      out << key << " " << full_precision(v(i)) << " " << full_precision(v(i + 1)) << "\n";
  };
  if (cfg.x0) dump("x0", *cfg.x0);
  if (cfg.x_prev) dump("xprev", *cfg.x_prev);
}

}  // namespace dagt
