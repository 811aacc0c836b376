#include "dagt/engine.hpp"

#include <cmath>
#include <ostream>

namespace dagt {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Dagt: return "DAGT";
    case Variant::DagtHb: return "DAGT-HB";
    case Variant::DagtNes: return "DAGT-NES";
  }
  return "?";
}

Variant variant_from_string(const std::string& name) {
  if (name == "DAGT" || name == "dagt") return Variant::Dagt;
  if (name == "DAGT-HB" || name == "dagt-hb") return Variant::DagtHb;
  if (name == "DAGT-NES" || name == "dagt-nes") return Variant::DagtNes;
  throw std::invalid_argument("unknown variant '" + name +
                              "' (expected DAGT, DAGT-HB or DAGT-NES)");
}

void SolverConfig::validate() const {
  if (!(alpha > 0)) throw std::invalid_argument("alpha must be > 0");
  if (beta < 0) throw std::invalid_argument("beta must be >= 0");
  if (gamma < 0) throw std::invalid_argument("gamma must be >= 0");
  if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be > 0");
  if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
}

double SolverConfig::momentum() const {
  return variant == Variant::DagtNes ? gamma : beta;
}

Vec NetworkState::stacked_x() const {
  Eigen::Index n = 0;
  for (const auto& a : agents) n += a.x.size();
  Vec v(n);
  Eigen::Index at = 0;
  for (const auto& a : agents) {
    v.segment(at, a.x.size()) = a.x;
    at += a.x.size();
  }
  return v;
}

Vec NetworkState::stacked_u() const {
  const Eigen::Index d = agents[0].u.size();
  Vec v(d * static_cast<Eigen::Index>(agents.size()));
  for (size_t i = 0; i < agents.size(); ++i)
    v.segment(d * static_cast<Eigen::Index>(i), d) = agents[i].u;
  return v;
}

Vec NetworkState::stacked_s() const {
  const Eigen::Index d = agents[0].s.size();
  Vec v(d * static_cast<Eigen::Index>(agents.size()));
  for (size_t i = 0; i < agents.size(); ++i)
    v.segment(d * static_cast<Eigen::Index>(i), d) = agents[i].s;
  return v;
}

Vec NetworkState::mean_u() const {
  Vec m = Vec::Zero(agents[0].u.size());
  for (const auto& a : agents) m += a.u;
  return m / static_cast<double>(agents.size());
}

Vec NetworkState::mean_s() const {
  Vec m = Vec::Zero(agents[0].s.size());
  for (const auto& a : agents) m += a.s;
  return m / static_cast<double>(agents.size());
}

bool NetworkState::finite() const {
  for (const auto& a : agents)
    if (!a.x.allFinite() || !a.u.allFinite() || !a.s.allFinite() ||
        !a.y.allFinite())
      return false;
  return true;
}

NetworkState init_network(const ProblemSpec& spec, const Vec& x0,
                          const std::optional<Vec>& x_minus1) {
  spec.check_dims(x0);
  if (x_minus1) spec.check_dims(*x_minus1);
  NetworkState net;
  net.agents.resize(static_cast<size_t>(spec.n_agents()));
  for (int i = 0; i < spec.n_agents(); ++i) {
    auto& a = net.agents[static_cast<size_t>(i)];
    const auto& oracle = spec.agents[static_cast<size_t>(i)];
    a.x = spec.agent_block(x0, i);
    a.x_prev = x_minus1 ? Vec(spec.agent_block(*x_minus1, i)) : a.x;
    a.y = a.x;
    a.u = oracle.phi(a.x);
    a.s = oracle.grad_u(a.x, a.u);
  }
  return net;
}

namespace {

std::vector<Vec> collect_u(const NetworkState& net) {
  std::vector<Vec> v;
  v.reserve(net.agents.size());
  for (const auto& a : net.agents) v.push_back(a.u);
  return v;
}

std::vector<Vec> collect_s(const NetworkState& net) {
  std::vector<Vec> v;
  v.reserve(net.agents.size());
  for (const auto& a : net.agents) v.push_back(a.s);
  return v;
}

void require_finite(const NetworkState& net, int k) {
  if (!net.finite())
    throw DivergenceError(k, "iteration " + std::to_string(k) +
                                 " produced a non-finite coordinate");
}

}  // namespace

NetworkState dagt_hb_step(const NetworkState& net, const ProblemSpec& spec,
                          const MixingMatrix& A, double alpha, double beta) {
  if (beta < 0) throw std::invalid_argument("beta must be >= 0");
  NetworkState next = net;

  // x-update from the frozen snapshot
  for (size_t i = 0; i < net.agents.size(); ++i) {
    const auto& a = net.agents[i];
    const auto& oracle = spec.agents[i];
    const Vec g = oracle.grad_x(a.x, a.u) + oracle.phi_jac(a.x) * a.s;
    next.agents[i].x = a.x - alpha * g + beta * (a.x - a.x_prev);
    next.agents[i].x_prev = a.x;
    next.agents[i].y = next.agents[i].x;
  }
  // u-exchange on pre-update values
  const auto u_snapshot = collect_u(net);
  for (size_t i = 0; i < net.agents.size(); ++i) {
    const auto& oracle = spec.agents[i];
    next.agents[i].u = A.mix_row(static_cast<int>(i), u_snapshot) +
                       oracle.phi(next.agents[i].x) - oracle.phi(net.agents[i].x);
  }
  // s-exchange on pre-update values
  const auto s_snapshot = collect_s(net);
  for (size_t i = 0; i < net.agents.size(); ++i) {
    const auto& oracle = spec.agents[i];
    next.agents[i].s = A.mix_row(static_cast<int>(i), s_snapshot) +
                       oracle.grad_u(next.agents[i].x, next.agents[i].u) -
                       oracle.grad_u(net.agents[i].x, net.agents[i].u);
  }
  next.iteration = net.iteration + 1;
  require_finite(next, next.iteration);
  return next;
}

NetworkState dagt_nes_step(const NetworkState& net, const ProblemSpec& spec,
                           const MixingMatrix& A, double alpha, double gamma) {
  if (gamma < 0) throw std::invalid_argument("gamma must be >= 0");
  NetworkState next = net;

  for (size_t i = 0; i < net.agents.size(); ++i) {
    const auto& a = net.agents[i];
    const auto& oracle = spec.agents[i];
    const Vec g = oracle.grad_x(a.y, a.u) + oracle.phi_jac(a.y) * a.s;
    next.agents[i].x = a.y - alpha * g;
    next.agents[i].y = next.agents[i].x + gamma * (next.agents[i].x - a.x);
    next.agents[i].x_prev = a.x;
  }
  const auto u_snapshot = collect_u(net);
  for (size_t i = 0; i < net.agents.size(); ++i) {
    const auto& oracle = spec.agents[i];
    next.agents[i].u = A.mix_row(static_cast<int>(i), u_snapshot) +
                       oracle.phi(next.agents[i].y) - oracle.phi(net.agents[i].y);
  }
  const auto s_snapshot = collect_s(net);
  for (size_t i = 0; i < net.agents.size(); ++i) {
    const auto& oracle = spec.agents[i];
    next.agents[i].s = A.mix_row(static_cast<int>(i), s_snapshot) +
                       oracle.grad_u(next.agents[i].y, next.agents[i].u) -
                       oracle.grad_u(net.agents[i].y, net.agents[i].u);
  }
  next.iteration = net.iteration + 1;
  require_finite(next, next.iteration);
  return next;
}

NetworkState dagt_step(const NetworkState& net, const ProblemSpec& spec,
                       const MixingMatrix& A, double alpha) {
  return dagt_hb_step(net, spec, A, alpha, 0.0);
}

NetworkState step_variant(const NetworkState& net, const ProblemSpec& spec,
                          const MixingMatrix& A, const SolverConfig& cfg) {
  switch (cfg.variant) {
    case Variant::Dagt: return dagt_step(net, spec, A, cfg.alpha);
    case Variant::DagtHb: return dagt_hb_step(net, spec, A, cfg.alpha, cfg.beta);
    case Variant::DagtNes: return dagt_nes_step(net, spec, A, cfg.alpha, cfg.gamma);
  }
  throw std::logic_error("unreachable variant");
}

std::pair<double, double> tracking_residuals(const NetworkState& net) {
  const Vec ubar = net.mean_u();
  const Vec sbar = net.mean_s();
  double u2 = 0, s2 = 0;
  for (const auto& a : net.agents) {
    u2 += (a.u - ubar).squaredNorm();
    s2 += (a.s - sbar).squaredNorm();
  }
  return {std::sqrt(u2), std::sqrt(s2)};
}

namespace {

TraceRow make_row(const NetworkState& net, const ProblemSpec& spec,
                  const OracleRef* oracle) {
  TraceRow r;
  r.k = net.iteration;
  const Vec x = net.stacked_x();
  double diff2 = 0;
  for (const auto& a : net.agents) diff2 += (a.x - a.x_prev).squaredNorm();
  r.state_diff = std::sqrt(diff2);
  std::tie(r.u_track_err, r.s_track_err) = tracking_residuals(net);
  r.grad_norm = global_grad(spec, x).norm();
  if (oracle) {
    r.state_err = (x - oracle->x_star).norm();
    r.cost_gap = global_cost(spec, x) - oracle->f_star;
  }
  return r;
}

}  // namespace

Trace run(const ProblemSpec& spec, const MixingMatrix& A,
          const SolverConfig& cfg, const Vec& x0,
          const std::optional<Vec>& x_minus1, const OracleRef* oracle) {
  cfg.validate();
  if (A.size() != spec.n_agents())
    throw std::invalid_argument("mixing matrix size does not match problem");
  Trace trace;
  trace.has_oracle = oracle != nullptr;
  NetworkState net = init_network(spec, x0, x_minus1);
  trace.rows.push_back(make_row(net, spec, oracle));
  while (net.iteration < cfg.k_max &&
         trace.rows.back().grad_norm >= cfg.epsilon) {
    try {
      net = step_variant(net, spec, A, cfg);
    } catch (const DivergenceError& e) {
      trace.diverged = true;
      trace.diverged_at = e.iteration;
      return trace;
    }
    trace.rows.push_back(make_row(net, spec, oracle));
  }
  trace.reached_epsilon = trace.rows.back().grad_norm < cfg.epsilon;
  return trace;
}

void write_trace_csv(const Trace& t, std::ostream& out) {
  out << "k,state_err,state_diff,u_track_err,s_track_err,cost_gap,grad_norm\n";
  for (const auto& r : t.rows) {
    out << r.k << ",";
    out << (t.has_oracle ? full_precision(r.state_err) : std::string()) << ",";
    out << full_precision(r.state_diff) << "," << full_precision(r.u_track_err)
        << "," << full_precision(r.s_track_err) << ",";
    out << (t.has_oracle ? full_precision(r.cost_gap) : std::string()) << ",";
    out << full_precision(r.grad_norm) << "\n";
  }
}

}  // namespace dagt
