#include "dagt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dagt {

ConvergenceMatrix build_matrix(MatrixKind kind, double alpha, double momentum,
                               const SmoothnessConstants& c, double rho) {
  if (!(alpha > 0)) throw std::invalid_argument("alpha must be > 0");
  if (momentum < 0) throw std::invalid_argument("momentum must be >= 0");
  if (!(rho >= 0 && rho < 1))
    throw std::invalid_argument("rho must lie in [0, 1)");
  c.validate();
  const double m = c.m, L1 = c.L1, L2 = c.L2, L3 = c.L3;
  const double a = alpha;

  ConvergenceMatrix M;
  M.kind = kind;
  M.alpha = alpha;
  M.momentum = momentum;
  M.rho = rho;
  M.constants = c;
  auto& E = M.entries;

  switch (kind) {
    case MatrixKind::P: {
      const double b = momentum;
      E << 1 - m * a, b, a * L1, a * L3,
          a * L1 * (1 + L3), b, a * L1, a * L3,
          a * L1 * L3 * (1 + L3), b * L3, rho + a * L1 * L3, a * L3 * L3,
          a * L1 * L3 * (1 + L3) * (1 + L3), b * L2 * (1 + L3),
          a * L1 * L3 * (1 + L3) + 2 * L2, rho + a * L2 * L3 * (1 + L3);
      break;
    }
    case MatrixKind::Q: {
      const double g = momentum;
      const double e = 1 + a * L1 + a * L1 * L3;
      E << 1 - m * a, (1 - m * a) * g, a * L1, a * L3,
          a * L1 * (1 + L3), g * e, a * L1, a * L3,
          a * L1 * L3 * (1 + L3) * (g + 1), g * L3 * ((1 + g) * e + 1),
          rho + a * L1 * L3 * (g + 1), a * L3 * L3 * (g + 1),
          a * L1 * L2 * (1 + L3) * (1 + L3) * (g + 1),
          g * L2 * (L3 + 1) * ((1 + g) * e + 1),
          a * L1 * L2 * (1 + L3) * (g + 1) + 2 * L2,
          rho + a * L2 * L3 * (1 + L3) * (1 + g);
      break;
    }
    case MatrixKind::R: {
      const double g = momentum;
      if (a > 1.0 / L1 || g > std::min(1.0 / L2, 1.0 / L3))
        throw std::invalid_argument(
            "R needs alpha <= 1/L1 and momentum <= min(1/L2, 1/L3)");
      E << 1 - m * a, (1 - m * a) * g, a * L1, a * L3,
          a * L1 * (1 + L3), g * (2 + L3), a * L1, a * L3,
          a * L1 * L3 * (2 + L3), g * (L3 * L3 + 4 * L3 + 2),
          rho + a * L1 * (L3 + 1), a * L3 * (L3 + 1),
          a * L1 * (1 + L2) * (1 + L3) * (1 + L3),
          g * (L3 + 1) * (L2 * L3 + 2 * L2 + L3 + 1),
          a * L1 * (L2 + 1) * (1 + L3) + 2 * L2,
          rho + a * L2 * (1 + L3) * (1 + L3);
      break;
    }
  }
  if (!E.allFinite() || (E.array() < 0).any())
    throw std::invalid_argument("convergence matrix has invalid entries");
  return M;
}

Quartic char_quartic(const Eigen::Matrix4d& M) {
  const Eigen::Matrix4d M2 = M * M;
  const Eigen::Matrix4d M3 = M2 * M;
  const double s1 = M.trace();
  const double s2 = M2.trace();
  const double s3 = M3.trace();
  const double s4 = (M3 * M).trace();
  const double e1 = s1;
  const double e2 = (e1 * s1 - s2) / 2.0;
  const double e3 = (e2 * s1 - e1 * s2 + s3) / 3.0;
  const double e4 = (e3 * s1 - e2 * s2 + e1 * s3 - s4) / 4.0;
  Quartic q;
  q.a3 = -e1;
  q.a2 = e2;
  q.a1 = -e3;
  q.a0 = e4;
  return q;
}

Quartic closed_form_quartic(MatrixKind kind, double alpha, double momentum,
                            const SmoothnessConstants& c, double rho) {
  c.validate();
  const double m = c.m, L1 = c.L1, L2 = c.L2, L3 = c.L3;
  const double a = alpha;
  Quartic q;
  if (kind == MatrixKind::P) {
    const double b = momentum;
    const double d1 = 1 - m * a - a * L1 * (1 + L3);
    const double d2 = L3 * (1 + L3) * (L2 - L3);
    const double d3 = -2 * a * L2 + rho * (1 + L3);
    q.a0 = b * d1 * rho * (rho + 2 * a * d2);
    q.a1 = b * (-d1 * rho + (d1 + rho) * (-rho + 2 * a * d2)) +
           (m * a - 1) * rho * (rho + a * d2) -
           a * L3 * d1 * (a * L1 * (rho + a * L3 * d2) + a * L3 * d3);
    q.a2 = b * (d1 + 2 * rho + a * d2) + (1 - m * a) * (2 * rho + a * d2) +
           rho * (rho + a * d2) + a * L3 * d1 * (L1 + L3 * (1 + L3)) +
           L3 * (a * L1 * (rho + a * d2) + a * L3 * d3);
    q.a3 = -b + (m - 2) * a - 1 - a * L3 * (L2 * (1 + L3) + L1);
  } else if (kind == MatrixKind::Q) {
    const double g = momentum;
    const double e1 = a * (m + L1 * (1 + L3));
    const double e2 = a * L2 * (rho * (1 + L3) - 2 * L3);
    const double e3 = g * (1 + a * L1 + a * L1 * L3);
    const double e4 = a * L2 * L3 * (1 + L3);
    q.a0 = (e1 - 1) * (a * L3 * (rho * a * L1 - e2) + rho * rho * e3) +
           rho * rho * a * g * e1 * L1 * (1 + L3);
    q.a1 = (e1 - 1) *
               (L3 * e2 * (1 + g) - e4 * g + rho * (2 * e3 + rho - a * L3 * L3)) +
           g * L3 * (e2 + a * L3 * (e1 + rho * e1 - 1 - 2 * rho)) -
           rho * rho * e3 - a * L1 * (1 + L3) * rho * (2 * g * e1 + rho);
    q.a2 = (1 + g) * L3 * e2 + (e1 - 1) * ((1 + g) * e4 + 2 * rho + e3) +
           a * L1 *
               ((1 + L3) * (2 * rho + g * e1) + L3 * g +
                L3 * (1 + g) * (e1 - 1 - rho)) -
           g * e4 + rho * (2 * e3 + rho);
    q.a3 = e1 - e2 - 1 - 2 * rho - (1 + g) * e4 - a * L1 * (L3 * (2 + g) + 1);
  } else {
    throw std::invalid_argument("no closed-form characteristic polynomial for R");
  }
  return q;
}

JuryReport jury_stable(const Quartic& q) {
  JuryReport r;
  r.h_at_1 = q.eval(1.0);
  r.h_at_minus1 = q.eval(-1.0);  // n = 4 even, so (-1)^n H(-1) = H(-1)
  r.a0_margin = 1.0 - std::abs(q.a0);
  r.b0 = q.a0 * q.a0 - 1.0;
  r.b1 = q.a0 * q.a1 - q.a3;
  r.b2 = q.a0 * q.a2 - q.a2;
  r.b3 = q.a0 * q.a3 - q.a1;
  r.c0 = r.b0 * r.b0 - r.b3 * r.b3;
  r.c1 = r.b0 * r.b1 - r.b2 * r.b3;
  r.c2 = r.b0 * r.b2 - r.b1 * r.b3;
  r.b_margin = std::abs(r.b0) - std::abs(r.b3);
  r.c_margin = std::abs(r.c0) - std::abs(r.c2);
  bool all_strict = true;
  for (double m : r.margins()) {
    if (std::abs(m) <= kJuryMarginalBand) r.marginal = true;
    if (!(m > kJuryMarginalBand)) all_strict = false;
  }
  r.stable = all_strict;
  return r;
}

double spectral_radius(const Mat& M) {
  if (M.rows() != M.cols())
    throw std::invalid_argument("spectral_radius requires a square matrix");
  if (!M.allFinite())
    throw std::invalid_argument("spectral_radius requires finite entries");
  Eigen::EigenSolver<Mat> es(M, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

StabilityReport region_member(RegionKind kind, double alpha, double momentum,
                              const SmoothnessConstants& c, double rho) {
  StabilityReport rep;
  rep.kind = kind;
  rep.alpha = alpha;
  rep.momentum = momentum;
  const MatrixKind mk = kind == RegionKind::HB ? MatrixKind::P : MatrixKind::Q;

  if (!(alpha > 0) || momentum < 0) {
    // The matrix is not constructible; only the positivity verdict remains.
    rep.conditions.fill(false);
    rep.member = false;
    return rep;
  }

  const auto M = build_matrix(mk, alpha, momentum, c, rho);
  rep.numeric = char_quartic(M);
  rep.closed_form = closed_form_quartic(mk, alpha, momentum, c, rho);
  double disc = 0;
  for (int i = 0; i < 4; ++i)
    disc = std::max(disc, std::abs(rep.numeric.coeffs()[static_cast<size_t>(i)] -
                                   rep.closed_form.coeffs()[static_cast<size_t>(i)]));
  rep.coeff_discrepancy = disc;
  rep.closed_form_matches = disc <= 1e-8;
  rep.jury = jury_stable(rep.numeric);
  rep.spec_radius = spectral_radius(M.entries);

  const auto mg = rep.jury.margins();
  for (size_t i = 0; i < 5; ++i)
    rep.conditions[i] = mg[i] > kJuryMarginalBand;
  rep.conditions[5] = alpha > 0 && momentum > 0;
  rep.member = rep.jury.stable && rep.conditions[5];
  return rep;
}

std::string StabilityReport::to_text() const {
  std::ostringstream os;
  os << "kind " << (kind == RegionKind::HB ? "HB" : "NES") << "\n";
  os << "alpha " << full_precision(alpha) << "\n";
  os << "momentum " << full_precision(momentum) << "\n";
  os << "quartic_numeric " << full_precision(numeric.a0) << " "
     << full_precision(numeric.a1) << " " << full_precision(numeric.a2) << " "
     << full_precision(numeric.a3) << "\n";
  os << "quartic_closed_form " << full_precision(closed_form.a0) << " "
     << full_precision(closed_form.a1) << " " << full_precision(closed_form.a2)
     << " " << full_precision(closed_form.a3) << "\n";
  os << "coeff_discrepancy " << full_precision(coeff_discrepancy) << "\n";
  os << "closed_form_matches " << (closed_form_matches ? "yes" : "no") << "\n";
  const char* names[6] = {"H(1)>0",  "H(-1)>0", "|a0|<1",
                          "|b0|>|b3|", "|c0|>|c2|", "alpha,momentum>0"};
  for (int i = 0; i < 6; ++i)
    os << "condition_" << i + 1 << " " << names[i] << " "
       << (conditions[static_cast<size_t>(i)] ? "pass" : "fail") << "\n";
  os << "marginal " << (jury.marginal ? "yes" : "no") << "\n";
  os << "spectral_radius " << full_precision(spec_radius) << "\n";
  os << "member " << (member ? "yes" : "no") << "\n";
  return os.str();
}

namespace {

struct BoundTerms {
  // coefficients of the four row inequalities of M z < z, solved for the
  // momentum: momentum < (num_const[i] - alpha * num_alpha[i]) / den[i]
  std::array<double, 4> num_const{}, num_alpha{}, den{};
};

BoundTerms momentum_terms(RegionKind kind, const SmoothnessConstants& c,
                          double rho, const Eigen::Vector4d& z) {
  const double m = c.m, L1 = c.L1, L2 = c.L2, L3 = c.L3;
  const double z1 = z(0), z2 = z(1), z3 = z(2), z4 = z(3);
  BoundTerms t;
  if (kind == RegionKind::HB) {
    // rows of P z < z, momentum = beta
    t.num_const = {0, z2, (1 - rho) * z3, (1 - rho) * z4 - 2 * L2 * z3};
    t.num_alpha = {-(m * z1 - L1 * z3 - L3 * z4),
                   L1 * (1 + L3) * z1 + L1 * z3 + L3 * z4,
                   L1 * L3 * (1 + L3) * z1 + L1 * L3 * z3 + L3 * L3 * z4,
                   L1 * L2 * (1 + L3) * (1 + L3) * z1 +
                       (L1 * L2 * (1 + L3)) * z3 + L2 * L3 * (1 + L3) * z4};
    t.den = {z2, z2, L3 * z2, L2 * (1 + L3) * z2};
  } else {
    // rows of R t < t, momentum = gamma; the row-1 denominator carries the
    // (1 - m alpha) factor, handled by the caller
    t.num_const = {0, z2, (1 - rho) * z3, (1 - rho) * z4 - 2 * L2 * z3};
    t.num_alpha = {-(m * z1 - L1 * z3 - L3 * z4),
                   L1 * (1 + L3) * z1 + L1 * z3 + L3 * z4,
                   L1 * L3 * (2 + L3) * z1 + L1 * (L3 + 1) * z3 +
                       L3 * (L3 + 1) * z4,
                   L1 * (L2 + 1) * (1 + L3) * ((1 + L3) * z1 + z3) +
                       L2 * (1 + L3) * (1 + L3) * z4};
    t.den = {z2, (2 + L3) * z2, (L3 * L3 + 4 * L3 + 2) * z2,
             (L3 + 1) * (L2 * L3 + 2 * L2 + L3 + 1) * z2};
  }
  return t;
}

}  // namespace

double ConservativeBounds::momentum_bound_at(double alpha) const {
  if (!(alpha > 0) || alpha >= alpha_bar) return 0.0;
  const auto t = momentum_terms(kind, constants, rho, z);
  double bound = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    double den = t.den[static_cast<size_t>(i)];
    // alpha_bar <= 1/L1 <= 1/m keeps this factor positive
    if (i == 0 && kind == RegionKind::NES) den *= (1 - constants.m * alpha);
    const double num = t.num_const[static_cast<size_t>(i)] -
                       alpha * t.num_alpha[static_cast<size_t>(i)];
    bound = std::min(bound, num / den);
  }
  if (kind == RegionKind::NES)
    bound = std::min({bound, 1.0 / constants.L2, 1.0 / constants.L3});
  return std::max(bound, 0.0);
}

ConservativeBounds conservative_bounds(RegionKind kind,
                                       const SmoothnessConstants& c,
                                       double rho, double z2, double z3) {
  c.validate();
  if (!(rho >= 0 && rho < 1))
    throw std::invalid_argument("rho must lie in [0, 1)");
  if (!(z2 > 0) || !(z3 > 0))
    throw std::invalid_argument("free vector entries must be positive");

  ConservativeBounds b;
  b.kind = kind;
  b.constants = c;
  b.rho = rho;
  // z1 and z4 sit 1% above their lower bounds so every inequality is strict.
  const double z4 = 1.01 * 2.0 * c.L2 * z3 / (1 - rho);
  const double z1 = 1.01 * (c.L1 * z3 + c.L3 * z4) / c.m;
  b.z << z1, z2, z3, z4;

  const auto t = momentum_terms(kind, c, rho, b.z);
  double alpha_bar = 1.0 / c.L1;
  // rows 2..4 admit a positive momentum only while alpha stays below
  // num_const / num_alpha; row 1 is positive for every alpha > 0
  for (int i = 1; i < 4; ++i)
    alpha_bar = std::min(alpha_bar, t.num_const[static_cast<size_t>(i)] /
                                        t.num_alpha[static_cast<size_t>(i)]);
  if (kind == RegionKind::HB) {
    alpha_bar = std::min(alpha_bar, (1 - rho) / (c.L1 * c.L3));
    alpha_bar = std::min(alpha_bar, (1 - rho) / (c.L2 * c.L3 * (1 + c.L3)));
  } else {
    alpha_bar = std::min(alpha_bar, (1 - rho) / (c.L1 * (c.L3 + 1)));
    alpha_bar = std::min(alpha_bar, (1 - rho) / (c.L2 * c.L3 * (1 + c.L3)));
  }
  b.alpha_bar = alpha_bar;
  if (!(alpha_bar > 0)) {
    b.empty = true;
    return b;
  }
  b.momentum_bar = b.momentum_bound_at(alpha_bar / 2);
  b.empty = !(b.momentum_bar > 0);
  return b;
}

RateFit estimate_rate(const Trace& trace, int burn_in) {
  if (!trace.has_oracle)
    throw std::invalid_argument("rate estimation needs the state-error column");
  if (burn_in < 0) throw std::invalid_argument("burn_in must be >= 0");

  std::vector<std::pair<double, double>> pts;  // (k, log err)
  int positive_rows = 0;
  for (const auto& r : trace.rows) {
    if (r.state_err <= 0.0) break;  // fit on the pre-zero prefix
    ++positive_rows;
    if (r.k >= burn_in) pts.emplace_back(r.k, std::log(r.state_err));
  }
  if (positive_rows < burn_in + 10)
    throw std::invalid_argument("trace too short: need burn_in + 10 rows with "
                                "positive state error");

  const auto n = static_cast<double>(pts.size());
  double sk = 0, sy = 0, skk = 0, sky = 0;
  for (auto [k, y] : pts) {
    sk += k;
    sy += y;
    skk += k * k;
    sky += k * y;
  }
  const double slope = (n * sky - sk * sy) / (n * skk - sk * sk);
  const double intercept = (sy - slope * sk) / n;
  double ss_res = 0, ss_tot = 0;
  const double y_mean = sy / n;
  for (auto [k, y] : pts) {
    const double f = slope * k + intercept;
    ss_res += (y - f) * (y - f);
    ss_tot += (y - y_mean) * (y - y_mean);
  }
  RateFit fit;
  fit.points = static_cast<int>(pts.size());
  fit.rho_emp = std::exp(slope);
  fit.r_squared = ss_tot < 1e-30 ? 1.0 : 1.0 - ss_res / ss_tot;
  // a flat trace fits slope 0 up to rounding; keep it flagged non-convergent
  fit.convergent = fit.rho_emp < 1.0 - 1e-12;
  return fit;
}

double check_lyapunov(const Trace& trace, const ConvergenceMatrix& M) {
  if (!trace.has_oracle)
    throw std::invalid_argument("Lyapunov check needs the state-error column");
  double worst = -std::numeric_limits<double>::infinity();
  for (size_t k = 0; k + 1 < trace.rows.size(); ++k) {
    const auto& a = trace.rows[k];
    const auto& b = trace.rows[k + 1];
    const Eigen::Vector4d vk(a.state_err, a.state_diff, a.u_track_err,
                             a.s_track_err);
    const Eigen::Vector4d vk1(b.state_err, b.state_diff, b.u_track_err,
                              b.s_track_err);
    worst = std::max(worst, (vk1 - M.entries * vk).maxCoeff());
  }
  return worst;
}

}  // namespace dagt
