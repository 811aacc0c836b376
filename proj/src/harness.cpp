#include "dagt/harness.hpp"

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

namespace fs = std::filesystem;

namespace dagt {

namespace {

std::string resolve(const std::string& base_dir, const std::string& path) {
  fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return path;
  return (fs::path(base_dir) / p).string();
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(std::istream& in,
                                         const std::string& base_dir) {
  ExperimentConfig cfg;
  std::vector<Variant> variants;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    auto bad = [&](const std::string& why) {
      return ConfigError("config line " + std::to_string(line_no) + ": " + why);
    };
    try {
      if (key == "instance") {
        std::string p;
        ls >> p;
        cfg.instance_path = resolve(base_dir, p);
      } else if (key == "graph") {
        std::string kind;
        ls >> kind;
        if (kind == "ring" || kind == "path" || kind == "complete" ||
            kind == "random") {
          cfg.graph_kind = kind;
          ls >> cfg.graph_n;  // optional; 0 means match the instance
        } else {
          cfg.graph_kind = "file";
          cfg.graph_path = resolve(base_dir, kind == "file"
                                                 ? (ls >> kind, kind)
                                                 : kind);
        }
      } else if (key == "variant") {
        std::string name;
        ls >> name;
        variants.push_back(variant_from_string(name));
      } else if (key == "alpha") {
        ls >> cfg.alpha;
      } else if (key == "beta") {
        ls >> cfg.beta;
      } else if (key == "gamma") {
        ls >> cfg.gamma;
      } else if (key == "epsilon") {
        ls >> cfg.epsilon;
      } else if (key == "kmax") {
        ls >> cfg.k_max;
      } else if (key == "seed") {
        ls >> cfg.seed;
      } else if (key == "oracle") {
        std::string v;
        ls >> v;
        if (v == "on") cfg.oracle = true;
        else if (v == "off") cfg.oracle = false;
        else throw bad("oracle expects on|off");
      } else if (key == "constants") {
        SmoothnessConstants c;
        if (!(ls >> c.m >> c.L1 >> c.L2 >> c.L3))
          throw bad("constants expects four values: m L1 L2 L3");
        cfg.constants_override = c;
      } else {
        throw bad("unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " +
                        e.what());
    }
    if (ls.fail() && key != "graph")
      throw bad("could not parse value for '" + key + "'");
  }
  for (Variant v : variants) {
    SolverConfig sc;
    sc.variant = v;
    sc.alpha = cfg.alpha;
    sc.beta = v == Variant::DagtHb ? cfg.beta : 0.0;
    sc.gamma = v == Variant::DagtNes ? cfg.gamma : 0.0;
    sc.epsilon = cfg.epsilon;
    sc.k_max = cfg.k_max;
    cfg.solvers.push_back(sc);
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse(in, fs::path(path).parent_path().string());
}

void ExperimentConfig::validate() const {
  if (instance_path.empty()) throw ConfigError("config needs an instance file");
  if (!fs::exists(instance_path))
    throw ConfigError("instance file does not exist: " + instance_path);
  if (graph_kind == "file" && !fs::exists(graph_path))
    throw ConfigError("graph file does not exist: " + graph_path);
  if (solvers.empty())
    throw ConfigError("config needs at least one variant to run");
  for (const auto& s : solvers) {
    try {
      s.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("solver config: ") + e.what());
    }
  }
}

Experiment prepare(const ExperimentConfig& cfg) {
  Experiment ex;
  try {
    ex.instance = load_instance(cfg.instance_path);
    ex.spec = placement_instance(ex.instance.instance);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const int n = cfg.graph_n > 0 ? cfg.graph_n : ex.spec.n_agents();
  try {
    if (cfg.graph_kind == "file") ex.graph = load_graph(cfg.graph_path);
    else if (cfg.graph_kind == "ring") ex.graph = CommGraph::ring(n);
    else if (cfg.graph_kind == "path") ex.graph = CommGraph::path(n);
    else if (cfg.graph_kind == "complete") ex.graph = CommGraph::complete(n);
    else if (cfg.graph_kind == "random")
      ex.graph = CommGraph::random_connected(n, cfg.seed);
    else throw ConfigError("unknown graph kind: " + cfg.graph_kind);
    if (ex.graph.n_agents != ex.spec.n_agents())
      throw ConfigError("graph size " + std::to_string(ex.graph.n_agents) +
                        " does not match instance size " +
                        std::to_string(ex.spec.n_agents()));
    ex.mixing = metropolis_weights(ex.graph);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  ex.constants = cfg.constants_override ? *cfg.constants_override
                                        : derive_constants(ex.spec);
  if (cfg.oracle) ex.oracle = solve_oracle(ex.spec);
  return ex;
}

namespace {

std::string variant_file(Variant v) {
  std::string s = to_string(v);
  for (auto& c : s) c = static_cast<char>(std::tolower(c));
  return s;
}

void write_final_csvs(const NetworkState& net, const ProblemSpec& spec,
                      const fs::path& dir, const std::string& stem) {
  {
    std::ofstream out(dir / (stem + "_final_x.csv"));
    out << "agent,dim,value\n";
    for (int i = 0; i < spec.n_agents(); ++i) {
      const auto& xi = net.agents[static_cast<size_t>(i)].x;
      for (Eigen::Index k = 0; k < xi.size(); ++k)
        out << i + 1 << "," << k << "," << full_precision(xi(k)) << "\n";
    }
  }
  {
    std::ofstream out(dir / (stem + "_final_u.csv"));
    out << "agent,dim,value\n";
    for (int i = 0; i < spec.n_agents(); ++i) {
      const auto& ui = net.agents[static_cast<size_t>(i)].u;
      for (Eigen::Index k = 0; k < ui.size(); ++k)
        out << i + 1 << "," << k << "," << full_precision(ui(k)) << "\n";
    }
  }
}

/// Re-runs the recorded trajectory's final state. run() does not expose the
/// final NetworkState, so cmd_run keeps its own copy of the loop for the
/// final-position files.
NetworkState replay_final(const ProblemSpec& spec, const MixingMatrix& A,
                          const SolverConfig& cfg, const Vec& x0,
                          const std::optional<Vec>& xm1, int steps) {
  NetworkState net = init_network(spec, x0, xm1);
  for (int k = 0; k < steps; ++k) net = step_variant(net, spec, A, cfg);
  return net;
}

}  // namespace

int cmd_run(const ExperimentConfig& cfg, const std::string& out_dir,
            std::ostream& log) {
  cfg.validate();
  Experiment ex = prepare(cfg);
  if (!ex.instance.x0)
    throw ConfigError("instance file must provide x0 initial points for run");
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);

  {
    std::ofstream out(dir / "mixing.csv");
    write_matrix_csv(ex.mixing.entries, out);
  }
  OracleRef oref;
  if (ex.oracle) {
    oref = ex.oracle->ref();
    std::ofstream out(dir / "oracle.txt");
    write_solution(*ex.oracle, ex.spec, out);
  }

  std::ofstream summary(dir / "summary.csv");
  summary << "variant,diverged,iterations,reached_epsilon,final_grad_norm,"
             "final_state_err,iters_to_1e6,rho_emp,r_squared\n";

  bool any_diverged = false;
  for (const auto& solver : cfg.solvers) {
    const std::string stem = variant_file(solver.variant);
    const Trace trace = run(ex.spec, ex.mixing, solver, *ex.instance.x0,
                            ex.instance.x_prev,
                            ex.oracle ? &oref : nullptr);
    {
      std::ofstream out(dir / (stem + ".csv"));
      write_trace_csv(trace, out);
    }
    const auto& last = trace.rows.back();
    if (!trace.diverged) {
      const NetworkState final_net =
          replay_final(ex.spec, ex.mixing, solver, *ex.instance.x0,
                       ex.instance.x_prev, last.k);
      write_final_csvs(final_net, ex.spec, dir, stem);

      log << to_string(solver.variant) << ": " << last.k
          << " iterations, grad_norm=" << full_precision(last.grad_norm);
      if (ex.oracle)
        log << ", state_err=" << full_precision(last.state_err);
      log << "\n";
      for (int i = 0; i < ex.spec.n_agents(); ++i) {
        const auto& a = final_net.agents[static_cast<size_t>(i)];
        log << "  agent " << i + 1 << " x=(";
        for (Eigen::Index k = 0; k < a.x.size(); ++k)
          log << (k ? "," : "") << full_precision(a.x(k));
        log << ") u=(";
        for (Eigen::Index k = 0; k < a.u.size(); ++k)
          log << (k ? "," : "") << full_precision(a.u(k));
        log << ")\n";
      }
    } else {
      any_diverged = true;
      log << to_string(solver.variant) << ": DIVERGED at iteration "
          << trace.diverged_at << "\n";
    }

    int iters_to_1e6 = -1;
    if (ex.oracle && !trace.diverged)
      for (const auto& r : trace.rows)
        if (r.state_err <= 1e-6) {
          iters_to_1e6 = r.k;
          break;
        }
    std::string rate_s, r2_s;
    if (ex.oracle && !trace.diverged) {
      try {
        const RateFit fit = estimate_rate(trace, 25);
        rate_s = full_precision(fit.rho_emp);
        r2_s = full_precision(fit.r_squared);
      } catch (const std::invalid_argument&) {
        // short trace; leave the rate columns empty
      }
    }
    summary << to_string(solver.variant) << "," << (trace.diverged ? 1 : 0)
            << "," << last.k << "," << (trace.reached_epsilon ? 1 : 0) << ","
            << full_precision(last.grad_norm) << ","
            << (ex.oracle ? full_precision(last.state_err) : std::string())
            << "," << (iters_to_1e6 >= 0 ? std::to_string(iters_to_1e6)
                                         : std::string())
            << "," << rate_s << "," << r2_s << "\n";
  }
  return any_diverged ? kExitDivergence : kExitOk;
}

int cmd_sweep(const ExperimentConfig& cfg, RegionKind kind, double alpha_max,
              double momentum_max, int grid_alpha, int grid_momentum,
              const std::string& out_dir, std::ostream& log) {
  cfg.validate();
  if (grid_alpha < 2 || grid_momentum < 2)
    throw ConfigError("sweep grid must be at least 2x2");
  Experiment ex = prepare(cfg);
  const double rho = ex.mixing.contraction;
  const auto& c = ex.constants;

  const ConservativeBounds box = conservative_bounds(kind, c, rho);
  if (alpha_max <= 0) alpha_max = 2.0 * box.alpha_bar;
  if (momentum_max <= 0) momentum_max = 2.0 * box.momentum_bar;
  if (!(alpha_max > 0) || !(momentum_max > 0))
    throw ConfigError("sweep ranges must be positive");

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  int members = 0;
  {
    std::ofstream out(dir / "region.csv");
    out << "alpha,momentum,member,spectral_radius,jury_flags\n";
    for (int i = 1; i <= grid_alpha; ++i) {
      const double a = alpha_max * i / grid_alpha;
      for (int j = 1; j <= grid_momentum; ++j) {
        const double mom = momentum_max * j / grid_momentum;
        const StabilityReport rep = region_member(kind, a, mom, c, rho);
        std::string flags;
        for (bool cond : rep.conditions) flags += cond ? '1' : '0';
        out << full_precision(a) << "," << full_precision(mom) << ","
            << (rep.member ? 1 : 0) << "," << full_precision(rep.spec_radius)
            << "," << flags << "\n";
        members += rep.member ? 1 : 0;
      }
    }
  }
  {
    std::ofstream out(dir / "conservative_box.csv");
    out << "alpha,momentum_bound\n";
    for (int i = 1; i <= grid_alpha; ++i) {
      const double a = box.alpha_bar * i / (grid_alpha + 1);
      out << full_precision(a) << ","
          << full_precision(box.momentum_bound_at(a)) << "\n";
    }
  }
  log << "sweep " << (kind == RegionKind::HB ? "HB" : "NES") << ": "
      << members << "/" << grid_alpha * grid_momentum << " members; "
      << "conservative alpha_bar=" << full_precision(box.alpha_bar)
      << " momentum_bar=" << full_precision(box.momentum_bar)
      << (box.empty ? " (empty)" : "") << "\n";
  return kExitOk;
}

int cmd_oracle(const ExperimentConfig& cfg, std::ostream& out) {
  if (cfg.instance_path.empty() || !fs::exists(cfg.instance_path))
    throw ConfigError("oracle needs an existing instance file");
  Experiment ex;
  try {
    ex.instance = load_instance(cfg.instance_path);
    ex.spec = placement_instance(ex.instance.instance);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto c = derive_constants(ex.spec);
  const Vec start = ex.instance.x0 ? *ex.instance.x0
                                   : Vec::Zero(ex.spec.total_dim());
  const OracleSolution descent =
      solve_centralized(ex.spec, start, 1.0 / c.L1, 1e-11, 100000);

  if (ex.spec.placement->uniform_weight()) {
    const OracleSolution closed = solve_placement_closed_form(ex.spec);
    write_solution(closed, ex.spec, out);
    const double agree =
        (closed.x_star - descent.x_star).cwiseAbs().maxCoeff();
    out << "descent_iterations " << descent.iterations << "\n";
    out << "closed_form_descent_agreement " << full_precision(agree) << "\n";
  } else {
    write_solution(descent, ex.spec, out);
  }
  return kExitOk;
}

QuarticSample sample_quartic(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> modulus(0.0, 1.8);
  std::uniform_real_distribution<double> real_root(-1.8, 1.8);
  std::uniform_real_distribution<double> angle(0.02, M_PI - 0.02);
  std::uniform_int_distribution<int> n_pairs_dist(0, 2);

  const int n_pairs = n_pairs_dist(rng);
  std::vector<double> coeffs{1.0};  // leading first
  auto mul = [&](const std::vector<double>& f) {
    std::vector<double> out(coeffs.size() + f.size() - 1, 0.0);
    for (size_t i = 0; i < coeffs.size(); ++i)
      for (size_t j = 0; j < f.size(); ++j) out[i + j] += coeffs[i] * f[j];
    coeffs = out;
  };
  bool stable = true;
  for (int p = 0; p < n_pairs; ++p) {
    double r;
    do {
      r = modulus(rng);
    } while (std::abs(r - 1.0) <= 1e-6);
    const double th = angle(rng);
    mul({1.0, -2.0 * r * std::cos(th), r * r});
    stable = stable && r < 1.0;
  }
  for (int k = 0; k < 4 - 2 * n_pairs; ++k) {
    double r;
    do {
      r = real_root(rng);
    } while (std::abs(std::abs(r) - 1.0) <= 1e-6);
    mul({1.0, -r});
    stable = stable && std::abs(r) < 1.0;
  }
  QuarticSample s;
  s.q.a3 = coeffs[1];
  s.q.a2 = coeffs[2];
  s.q.a1 = coeffs[3];
  s.q.a0 = coeffs[4];
  s.stable = stable;
  return s;
}

Eigen::Matrix4d companion_matrix(const Quartic& q) {
  Eigen::Matrix4d C = Eigen::Matrix4d::Zero();
  C(0, 3) = -q.a0;
  C(1, 3) = -q.a1;
  C(2, 3) = -q.a2;
  C(3, 3) = -q.a3;
  C(1, 0) = C(2, 1) = C(3, 2) = 1.0;
  return C;
}

namespace {

struct PropertyLog {
  std::ostream& out;
  bool all_pass = true;
  void report(const std::string& name, bool pass, double measured,
              double tol) {
    all_pass = all_pass && pass;
    out << (pass ? "PASS " : "FAIL ") << name
        << " measured=" << full_precision(measured)
        << " tol=" << full_precision(tol) << "\n";
  }
};

}  // namespace

int cmd_check(const ExperimentConfig& cfg, std::ostream& out) {
  cfg.validate();
  Experiment ex = prepare(cfg);
  if (!ex.instance.x0)
    throw ConfigError("instance file must provide x0 for check");
  const Vec x0 = *ex.instance.x0;
  const auto& xm1 = ex.instance.x_prev;
  const auto& c = ex.constants;
  const double rho = ex.mixing.contraction;
  const OracleSolution sol =
      ex.oracle ? *ex.oracle : solve_oracle(ex.spec);
  const OracleRef oref = sol.ref();
  PropertyLog p{out};

  // gradient oracles vs central differences
  {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unif(-10.0, 10.0);
    double worst = 0;
    for (int t = 0; t < 100; ++t) {
      Vec x(ex.spec.total_dim());
      for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = unif(rng);
      worst = std::max(worst, finite_diff_check(ex.spec, x, 1e-6));
    }
    p.report("finite_diff_gradients", worst <= 1e-5, worst, 1e-5);
  }

  // constants vetting: defining inequalities sampled on random pairs
  {
    const ConstantsCheck cc = validate_constants(ex.spec, c, 1000, cfg.seed);
    const double worst =
        std::max({cc.strong_convexity, cc.smoothness, cc.grad_u_lipschitz,
                  cc.phi_lipschitz, cc.lemma1_contraction});
    p.report("constants_vetting", cc.ok(), worst, 1e-9);
  }

  const SolverConfig hb{Variant::DagtHb, cfg.alpha, cfg.beta, 0.0, 1e-300, 2000};
  const SolverConfig nes{Variant::DagtNes, cfg.alpha, 0.0, cfg.gamma, 1e-300,
                         2000};
  const SolverConfig dagt{Variant::Dagt, cfg.alpha, 0.0, 0.0, 1e-300, 2000};

  // exact mean-tracking identities along 2000-step runs
  for (const auto& sc : {dagt, hb, nes}) {
    NetworkState net = init_network(ex.spec, x0, xm1);
    double worst_u = 0, worst_s = 0;
    for (int k = 0; k < sc.k_max; ++k) {
      net = step_variant(net, ex.spec, ex.mixing, sc);
      Vec phi_mean = Vec::Zero(ex.spec.agg_dim);
      Vec gu_mean = Vec::Zero(ex.spec.agg_dim);
      for (int i = 0; i < ex.spec.n_agents(); ++i) {
        const auto& a = net.agents[static_cast<size_t>(i)];
        const Vec& base = sc.variant == Variant::DagtNes ? a.y : a.x;
        phi_mean += ex.spec.agents[static_cast<size_t>(i)].phi(base);
        gu_mean += ex.spec.agents[static_cast<size_t>(i)].grad_u(base, a.u);
      }
      phi_mean /= ex.spec.n_agents();
      gu_mean /= ex.spec.n_agents();
      worst_u = std::max(worst_u, (net.mean_u() - phi_mean).norm());
      worst_s = std::max(worst_s, (net.mean_s() - gu_mean).norm());
    }
    const std::string v = to_string(sc.variant);
    p.report("tracking_identity_u_" + v, worst_u <= 1e-9, worst_u, 1e-9);
    p.report("tracking_identity_s_" + v, worst_s <= 1e-9, worst_s, 1e-9);
  }

  // componentwise Lyapunov domination along the recorded trajectories
  {
    const Trace th = run(ex.spec, ex.mixing, hb, x0, xm1, &oref);
    const auto P = build_matrix(MatrixKind::P, cfg.alpha, cfg.beta, c, rho);
    const double viol = check_lyapunov(th, P);
    p.report("lyapunov_dominates_hb", viol <= 1e-9, viol, 1e-9);

    const Trace tn = run(ex.spec, ex.mixing, nes, x0, xm1, &oref);
    const auto Q = build_matrix(MatrixKind::Q, cfg.alpha, cfg.gamma, c, rho);
    const double violn = check_lyapunov(tn, Q);
    p.report("lyapunov_dominates_nes", violn <= 1e-9, violn, 1e-9);

    // cost gap against the smoothness bound, pointwise on both traces
    double worst = -1e300;
    for (const Trace* t : {&th, &tn})
      for (const auto& r : t->rows)
        worst = std::max(worst, r.cost_gap - 0.5 * c.L1 * r.state_err *
                                                 r.state_err);
    p.report("cost_gap_smoothness_bound", worst <= 1e-9, worst, 1e-9);
  }

  // one step away from the consensus fixed state
  for (const auto& sc : {dagt, hb, nes}) {
    const double disp = verify_fixed_point(ex.spec, ex.mixing, sol, sc.variant,
                                           sc.alpha, sc.momentum());
    p.report("fixed_point_" + to_string(sc.variant), disp <= 1e-10, disp,
             1e-10);
  }

  // momentum-zero reductions match the baseline exactly
  {
    SolverConfig hb0 = hb;
    hb0.beta = 0.0;
    SolverConfig nes0 = nes;
    nes0.gamma = 0.0;
    NetworkState a = init_network(ex.spec, x0, xm1);
    NetworkState b = a, d = a;
    bool equal = true;
    for (int k = 0; k < 100 && equal; ++k) {
      a = step_variant(a, ex.spec, ex.mixing, dagt);
      b = step_variant(b, ex.spec, ex.mixing, hb0);
      d = step_variant(d, ex.spec, ex.mixing, nes0);
      for (size_t i = 0; i < a.agents.size(); ++i)
        equal = equal &&
                (a.agents[i].x.array() == b.agents[i].x.array()).all() &&
                (a.agents[i].u.array() == b.agents[i].u.array()).all() &&
                (a.agents[i].s.array() == b.agents[i].s.array()).all() &&
                (a.agents[i].x.array() == d.agents[i].x.array()).all() &&
                (a.agents[i].u.array() == d.agents[i].u.array()).all() &&
                (a.agents[i].s.array() == d.agents[i].s.array()).all();
    }
    p.report("momentum_zero_reduction", equal, equal ? 0.0 : 1.0, 0.0);
  }

  // Jury verdict against the companion-matrix root oracle
  {
    std::mt19937_64 rng(12345);
    int disagreements = 0;
    for (int t = 0; t < 1000; ++t) {
      const QuarticSample s = sample_quartic(rng);
      const bool jury = jury_stable(s.q).stable;
      const bool companion = spectral_radius(companion_matrix(s.q)) < 1.0;
      if (jury != s.stable || jury != companion) ++disagreements;
    }
    p.report("jury_vs_root_oracle", disagreements == 0, disagreements, 0.0);
  }

  return p.all_pass ? kExitOk : kExitPropertyFailure;
}

}  // namespace dagt
