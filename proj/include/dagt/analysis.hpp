#pragma once

#include <array>
#include <string>

#include "dagt/engine.hpp"
#include "dagt/problem.hpp"
#include "dagt/types.hpp"

namespace dagt {

enum class MatrixKind { P, Q, R };
enum class RegionKind { HB, NES };

/// One of the three 4x4 nonnegative matrices that bound the compressed
/// trajectory vector V_k = (state error, state difference, aggregate
/// tracking error, gradient-sum tracking error).
struct ConvergenceMatrix {
  MatrixKind kind = MatrixKind::P;
  Eigen::Matrix4d entries;
  double alpha = 0, momentum = 0, rho = 0;
  SmoothnessConstants constants;
};

/// P for the heavy-ball recursion, Q for the lookahead recursion, R for the
/// simplified lookahead bound. R additionally requires alpha <= 1/L1 and
/// momentum <= min(1/L2, 1/L3) and throws outside those ranges.
ConvergenceMatrix build_matrix(MatrixKind kind, double alpha, double momentum,
                               const SmoothnessConstants& c, double rho);

/// Monic quartic lambda^4 + a3 l^3 + a2 l^2 + a1 l + a0.
struct Quartic {
  double a0 = 0, a1 = 0, a2 = 0, a3 = 0;
  double eval(double x) const {
    return ((x + a3) * x + a2) * x * x + a1 * x + a0;
  }
  std::array<double, 4> coeffs() const { return {a0, a1, a2, a3}; }
};

/// Characteristic polynomial of a 4x4 matrix via Newton's identities on
/// trace power sums. This is the authoritative route.
Quartic char_quartic(const Eigen::Matrix4d& M);
inline Quartic char_quartic(const ConvergenceMatrix& M) {
  return char_quartic(M.entries);
}

/// The printed closed-form coefficient expressions for the characteristic
/// polynomials of P and Q, evaluated verbatim. Kept solely to cross-check the
/// numeric route; any drift between the two is surfaced, never resolved
/// silently. Throws for kind R (no closed form exists for it).
Quartic closed_form_quartic(MatrixKind kind, double alpha, double momentum,
                            const SmoothnessConstants& c, double rho);

/// Jury tableau for a monic quartic. A root layout strictly inside the unit
/// circle is equivalent to the four strict conditions below; any condition
/// within 1e-12 of equality is flagged marginal and the verdict is unstable.
struct JuryReport {
  double h_at_1 = 0;        // H(1)            > 0
  double h_at_minus1 = 0;   // (-1)^4 H(-1)    > 0
  double a0_margin = 0;     // 1 - |a0|        > 0
  double b_margin = 0;      // |b0| - |b3|     > 0
  double c_margin = 0;      // |c0| - |c2|     > 0
  double b0 = 0, b1 = 0, b2 = 0, b3 = 0;
  double c0 = 0, c1 = 0, c2 = 0;
  bool stable = false;
  bool marginal = false;
  std::array<double, 5> margins() const {
    return {h_at_1, h_at_minus1, a0_margin, b_margin, c_margin};
  }
};
JuryReport jury_stable(const Quartic& q);

inline constexpr double kJuryMarginalBand = 1e-12;

/// Largest eigenvalue modulus.
double spectral_radius(const Mat& M);

/// Verdict for one (alpha, momentum) pair: quartic coefficients from both
/// routes, the Jury tableau on the numeric route, the six region conditions
/// and the spectral radius of the built matrix.
struct StabilityReport {
  RegionKind kind = RegionKind::HB;
  double alpha = 0, momentum = 0;
  Quartic numeric;
  Quartic closed_form;
  double coeff_discrepancy = 0;
  bool closed_form_matches = false;
  JuryReport jury;
  double spec_radius = 0;
  std::array<bool, 6> conditions{};  // the five Jury sets plus positivity
  bool member = false;
  std::string to_text() const;
};

/// Region membership test: numeric characteristic quartic, Jury conditions,
/// positivity of both parameters. Membership implies a spectral radius below
/// one (the report carries it for cross-checking).
StabilityReport region_member(RegionKind kind, double alpha, double momentum,
                              const SmoothnessConstants& c, double rho);

/// Conservative parameter bounds from the positive-vector argument: picks
/// z = (z1, z2, z3, z4) with z2, z3 free (defaults 1) and z1, z4 set 1%
/// above their lower bounds, then intersects the printed step-size bounds
/// into alpha_bar. The momentum bound depends on alpha; momentum_bound_at
/// evaluates it, and momentum_bar reports its value at alpha_bar/2. Any
/// (alpha, momentum) with 0 < alpha < alpha_bar and
/// 0 < momentum < momentum_bound_at(alpha) satisfies M z < z componentwise,
/// hence rho(M) < 1.
struct ConservativeBounds {
  RegionKind kind = RegionKind::HB;
  double alpha_bar = 0;
  double momentum_bar = 0;  // momentum_bound_at(alpha_bar / 2)
  Eigen::Vector4d z;
  bool empty = false;
  SmoothnessConstants constants;
  double rho = 0;

  double momentum_bound_at(double alpha) const;
};
ConservativeBounds conservative_bounds(RegionKind kind,
                                       const SmoothnessConstants& c,
                                       double rho, double z2 = 1.0,
                                       double z3 = 1.0);

/// Least-squares fit of log state error against k past burn_in.
struct RateFit {
  double rho_emp = 1.0;
  double r_squared = 0.0;
  int points = 0;
  bool convergent = false;
};
RateFit estimate_rate(const Trace& trace, int burn_in);

/// Max over iterations and components of V_{k+1} - M V_k along a recorded
/// trace (negative means the bound dominated everywhere).
double check_lyapunov(const Trace& trace, const ConvergenceMatrix& M);

}  // namespace dagt
