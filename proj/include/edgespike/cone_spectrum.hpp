#pragma once

/// Spectrum of the linearized operator at the ground state U on the model
/// cone of opening angle alpha: azimuthal Neumann modes cos(pi m phi / alpha)
/// cross a singular Sturm-Liouville problem in the polar angle theta, and
/// each angular eigenvalue lambda feeds a radial generalized eigenproblem
/// whose eigenvalues sigma are those of the energy second variation in the
/// W^{1,2} pairing.  The Morse index / kernel structure as a function of
/// alpha is the non-degeneracy input of the reduction.

#include <vector>

#include "edgespike/radial.hpp"

namespace edgespike {

/// One angular eigenfunction on the spherical lune.
struct AngularMode {
  int m = 0;          ///< azimuthal Neumann index
  Real alpha = 0;     ///< opening angle (radians)
  Real nu = 0;        ///< order pi*m/alpha
  int j = 0;          ///< overtone index
  Real lambda_ang = 0; ///< angular eigenvalue (two-level extrapolated)
  Vector theta_grid;   ///< cell centers on [0, pi] (finer of the two grids)
  Vector theta_values; ///< Theta = sin(theta)^nu * W samples, peak-normalized
};

/// The j_max+1 lowest eigenvalues of
///   -(1/sin t)(sin t Theta')' + (nu^2/sin^2 t) Theta = lambda Theta
/// with nu = pi*m/alpha, via the regularizing substitution
/// Theta = (sin t)^nu W and a cell-centered finite-volume scheme whose
/// pole fluxes vanish with the weight sin^{2nu+1}.  Two grid levels
/// (n_theta, 2*n_theta) are combined by Richardson extrapolation.
/// Throws ValidationError on bad arguments, GridTooCoarse if the two levels
/// disagree beyond tolerance.
std::vector<AngularMode> angular_eigenvalues(Real alpha, int m, int j_max,
                                             int n_theta = 2048);

/// Gegenbauer closed form (nu + j)(nu + j + 1), nu = pi*m/alpha.
Real angular_eigenvalue_closed_form(Real alpha, int m, int j);

/// One radial eigenpair of the linearized operator.
struct RadialEigenpair {
  Real lambda_ang = 0;
  Real sigma = 0;  ///< eigenvalue of I''(U) in the W^{1,2} pairing
  Vector r_grid;   ///< cell centers (finer of the two grids)
  Vector v;        ///< eigenfunction samples, unit W-norm, peak sign positive
  int m = -1, j = -1; ///< provenance indices (set by assemble_cone_spectrum)
};

/// The n_eig smallest sigma of  p U^{p-1} v = (1 - sigma)(-Delta_r + 1 +
/// lambda_ang/r^2) v  on (0, R_max) with a zero Dirichlet condition at R_max,
/// so that sigma = 1-p is attained at v = U for lambda_ang = 0.  Two grid
/// levels (n_r, 2*n_r) are Richardson-combined.  Throws SpuriousMode if an
/// eigenfunction's mass concentrates in the last 10% of the grid.
std::vector<RadialEigenpair>
radial_linearized_spectrum(const RadialProfile& profile, Real lambda_ang,
                           int n_eig, Real R_max = 30.0, int n_r = 3000);

struct ConeModeEntry {
  int m = 0, j = 0;
  Real lambda_ang = 0;
  Real sigma = 0;
};

struct ConeSpectrumReport {
  Real alpha = 0;
  Real p = 0;
  int morse_index = 0;   ///< count of sigma < -kernel_tol
  int kernel_dim = 0;    ///< count of |sigma| <= kernel_tol
  Real spectral_gap = 0; ///< smallest sigma above kernel_tol
  Real kernel_tol = 0;
  std::vector<ConeModeEntry> modes; ///< sorted by (m, j, sigma)
};

struct ConeSpectrumOptions {
  int m_max = 3;
  int j_max = 3;
  int n_eig = 2;
  int n_theta = 2048;
  int n_r = 3000;
  Real r_max = 30.0;
  Real kernel_tol = 1e-4;
};

/// Cross angular modes (m <= m_max, j <= j_max) with radial spectra and
/// aggregate the Morse index, kernel dimension and spectral gap.
ConeSpectrumReport assemble_cone_spectrum(const RadialProfile& profile,
                                          Real alpha,
                                          const ConeSpectrumOptions& opt = {});

/// Coercivity constant delta of the second variation orthogonal to the
/// negative modes and the kernel: the report's spectral gap.  Throws
/// DegenerateCase if alpha lies within kernel_tol of the flat angle pi,
/// where the kernel dimension jumps to 2.
Real coercivity_constant(const ConeSpectrumReport& report);

} // namespace edgespike
