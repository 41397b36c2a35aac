#pragma once

// Deterministic reference curves for the ensemble moments.
//
// phi2_exact solves the exact moment equation
//     da/ds = eps^2 a / (2 lambda^2) + eps^2 L^2 / lambda^2,   a(0) = 0,
// with L = e^s and lambda^2 = 1 + eps^2 s.  The other curves are envelopes:
// they integrate the linear differential inequalities for E|sigma~|^2,
// E|phi~|^4 and E|f|^2 with the explicit constants that come out of the
// Young / Cauchy-Schwarz steps, taken with equality.  All linear equations
// are solved through their integrating factor, a power of lambda.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace gffhom {

enum class MomentKind { PHI2_EXACT, SIGMA2_BOUND, PHI4_BOUND, F2_BOUND };

const char* to_string(MomentKind kind);

struct MomentCurve {
  MomentKind kind{};
  double epsilon = 0.0;
  std::vector<double> s_grid;
  std::vector<double> values;

  /// Linear interpolation; s must lie within the grid.
  double at(double s) const;
};

/// 0, h, 2h, ..., s_max (last point clamped to s_max).
std::vector<double> uniform_s_grid(double s_max, double h);

/// Integrating-factor quadrature, adaptive Gauss-Kronrod at relative 1e-10.
MomentCurve phi2_exact(double epsilon, std::span<const double> s_grid);

/// Independent route: classical RK4 on the same ODE with step <= h.
MomentCurve phi2_rk4(double epsilon, std::span<const double> s_grid, double h = 1e-3);

/// db/ds = eps^2 b / lambda^2 + eps^2 (L^2 + 3 a), from Young's inequality
/// 2 |sigma . J phi| / lambda <= |sigma|^2 / (2 lambda^2) + 2 |phi|^2.
MomentCurve sigma2_bound(double epsilon, std::span<const double> s_grid, const MomentCurve& phi2);

/// The L^2 part of sigma2_bound alone, in closed form of the integrating factor:
/// eps^2 lambda(s)^2 int_0^s e^{2u} / lambda(u)^2 du.
MomentCurve sigma2_proof_shape(double epsilon, std::span<const double> s_grid);

/// dm/ds = 5 eps^2 m / lambda^2 + 4 eps^2 a L^2 / lambda^2: the exact Ito
/// drift with the quartic covariation bounded by |phi|^4 tr[grad dphi grad dphi*].
MomentCurve phi4_bound(double epsilon, std::span<const double> s_grid, const MomentCurve& phi2);

/// dc/ds = eps^2 c / (2 lambda^2)
///       + eps^2 (a + 2 sqrt(3) eps^2 s sqrt(m) + 2 b) / (L^2 lambda^2) + 2 eps^2 a / L^2,
/// using |phi (x) a - sigma (x) J|^2 = 2(|phi|^2 + |eps psi phi - sigma|^2),
/// |eps psi phi - sigma|^2 <= 2 eps^2 psi^2 |phi|^2 + 2 |sigma|^2 and
/// E psi^2 |phi|^2 <= sqrt(E psi^4 E|phi|^4) with E psi^4 = 3 s^2.
MomentCurve f2_bound(double epsilon, std::span<const double> s_grid, const MomentCurve& phi2,
                     const MomentCurve& sigma2, const MomentCurve& phi4);

/// Closed form eps^2 sqrt(x) int_1^x y^{-3/2} dy = 2 eps^2 (lambda - 1), x = lambda^2.
double f2_simplified_envelope(double epsilon, double s);

/// Shapes the envelopes are compared against: eps^2 L^2 / lambda^2,
/// eps^2 L^2, eps^4 L^4 / lambda^4 and eps^2 lambda.
double moment_shape(MomentKind kind, double epsilon, double s);

/// sup over grid points with s <= s_max of value / shape.
double envelope_constant(const MomentCurve& curve, double s_max);

struct ReferenceSet {
  MomentCurve phi2, sigma2, phi4, f2;
};
ReferenceSet compute_reference_set(double epsilon, std::span<const double> s_grid);

/// CSV with header s,value,kind,epsilon.
void write_curves_csv(std::ostream& out, const std::vector<const MomentCurve*>& curves);

}  // namespace gffhom
