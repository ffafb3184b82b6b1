#pragma once

/// Ground-state profile of the limit equation: the unique positive radial
/// solution U of
///
///     -Delta U + U = U^p   in R^3,   U(0) = max U,   U -> 0 at infinity,
///
/// computed as a radial ODE by bisection shooting followed by a two-sided
/// matched Newton refinement, together with the integral quantities that feed
/// the reduced-energy constant and the linearized spectrum.

#include <Eigen/Dense>

#include "edgespike/numerics.hpp"

namespace edgespike {

struct GroundStateOptions {
  Real p = 3.0;         ///< nonlinearity exponent, 1 < p < 5
  Real r_max = 30.0;    ///< truncation radius of the stored profile
  Real res_tol = 1e-10; ///< shooting bracket width and nodal residual target
  Real h_grid = 0.01;   ///< node spacing in the uniform region of the grid
  Real h_min = 5e-4;    ///< smallest spacing of the graded region near r = 0
  Real r_core = 1.0;    ///< radius where grading hands over to uniform spacing
  int substeps = 20;    ///< RK4 substeps per stored cell
  int max_bisect = 200;
  int max_newton = 60;
};

/// Tabulated radial ground state on a graded grid (r^{-1/2}-density near the
/// origin, uniform beyond r_core, last node exactly r_max), with nodal values
/// and derivatives, the decay constant, and the radial quadratures
/// (tail-corrected beyond r_max):
///
///   quad_A  = int_0^inf (u'^2 + u^2) r^2 dr
///   quad_B  = int_0^inf u^{p+1} r^2 dr
///   quad_B1 = int_0^inf u^{p+1} r   dr
struct RadialProfile {
  Real p = 0;
  Real r_max = 0;
  Real shoot_u0 = 0;     ///< U(0)
  Real c_decay = 0;      ///< lim_{r->inf} e^r r U(r)
  Real match_defect = 0; ///< two-sided mismatch at the matching radius
  int substeps = 1;      ///< RK4 substeps per cell used to build the table
  Vector r_grid, u, du;
  Real quad_A = 0, quad_B = 0, quad_B1 = 0;
  Real quad_error = 0;   ///< Richardson estimate of the quadrature error
};

/// Solve the radial ground-state problem.  Throws ValidationError for
/// parameters outside 1 < p < 5 or r_max < 20, NoBracket if the shooting
/// bracket cannot be established, NonConvergence if the matched Newton
/// refinement stalls above tolerance.
RadialProfile solve_ground_state(const GroundStateOptions& opt = {});

struct ProfileValue {
  Real u, du;
};

/// Evaluate u and u' at radius rr >= 0: cubic Hermite inside the table,
/// the analytic decaying tail c e^{-r}/r beyond r_max.
ProfileValue evaluate_profile(const RadialProfile& profile, Real rr);

/// Scalar coefficients of the reduced energy expansion.
struct EnergyCoefficients {
  Real p = 0;
  Real nehari_mass = 0;   ///< int_{R^3} U^{p+1} = int (|grad U|^2 + U^2)
  Real energy_full = 0;   ///< I(U) over R^3
  Real c0 = 0;            ///< (1/2 - 1/(p+1)) * quad_B * int_0^pi sin(t) dt
  Real c0_printed_form = 0; ///< (1/2 - 1/(p+1)) * quad_B1 * int_0^pi sin^2(t) dt
  Real nehari_defect = 0; ///< |quad_A / quad_B - 1|
};

/// Throws QuadratureUnconverged if the profile's Richardson quadrature error
/// estimate exceeds 1e-9 relative to quad_B.
EnergyCoefficients compute_energy_coefficients(const RadialProfile& profile);

/// Flow-defect residual: re-integrate every stored cell (skipping the first,
/// which is seeded by the origin series) with `refine` times more RK4
/// substeps and report the largest nodal mismatch in u or u'.
Real max_ode_defect(const RadialProfile& profile, int refine = 4);

/// u'(r)/u(r) + 1/r; tends to -1 exponentially fast as r grows, which is the
/// numerically robust form of the e^{-r}/r decay check.
Real tail_log_derivative(const RadialProfile& profile, Real rr);

} // namespace edgespike
