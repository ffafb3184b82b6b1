#include "edgespike/cone_spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "edgespike/errors.hpp"

namespace edgespike {
namespace {

void validate_alpha(Real alpha) {
  if (!(alpha > 0.0) || !(alpha < 2.0 * M_PI))
    throw ValidationError("opening angle must lie strictly between 0 and 2*pi");
}

/// Cell-centered finite-volume matrices of the substituted angular problem
/// on a grid of n cells over [0, pi]: stiffness K with face weights
/// sin(theta)^{2nu+1} (zero at both poles, hence natural conditions) and the
/// diagonal weight matrix M of cell-center weights.
void angular_matrices(Real nu, int n, SymTridiag& k_mat, SymTridiag& m_mat) {
  const Real h = M_PI / n;
  const Real pw = 2.0 * nu + 1.0;
  Vector face(n + 1);
  for (int i = 0; i <= n; ++i)
    face[i] = (i == 0 || i == n) ? 0.0 : std::pow(std::sin(i * h), pw);
  k_mat.diag.resize(n);
  k_mat.off.resize(n - 1);
  m_mat.diag.resize(n);
  m_mat.off = Vector::Zero(n - 1);
  for (int i = 0; i < n; ++i) {
    k_mat.diag[i] = (face[i] + face[i + 1]) / h;
    if (i + 1 < n) k_mat.off[i] = -face[i + 1] / h;
    m_mat.diag[i] = std::pow(std::sin((i + 0.5) * h), pw) * h;
  }
}

Vector angular_eigenvalues_on_grid(Real nu, int n, int k) {
  SymTridiag k_mat, m_mat;
  angular_matrices(nu, n, k_mat, m_mat);
  SymTridiag t1{k_mat.diag + nu * (nu + 1.0) * m_mat.diag, k_mat.off};
  return pencil_smallest_eigenvalues(t1, m_mat, k);
}

/// Radial matrices for a given angular eigenvalue: A = K + V is the
/// W^{1,2}-pairing matrix (finite volume of -(r^2 v')' with Dirichlet half
/// cell at R, plus (r^2 + lambda) h on the diagonal), B the potential
/// p U^{p-1} r^2 h.
void radial_matrices(const RadialProfile& profile, Real lambda_ang, Real R,
                     int n, SymTridiag& a_mat, SymTridiag& b_mat) {
  const Real h = R / n;
  const Real p = profile.p;
  a_mat.diag.resize(n);
  a_mat.off.resize(n - 1);
  b_mat.diag.resize(n);
  b_mat.off = Vector::Zero(n - 1);
  for (int i = 0; i < n; ++i) {
    const Real r_c = (i + 0.5) * h;
    const Real wf_lo = (i * h) * (i * h);
    const Real wf_hi = ((i + 1) * h) * ((i + 1) * h);
    a_mat.diag[i] = (i + 1 < n) ? (wf_lo + wf_hi) / h : wf_lo / h + 2.0 * wf_hi / h;
    if (i + 1 < n) a_mat.off[i] = -wf_hi / h;
    a_mat.diag[i] += (r_c * r_c + lambda_ang) * h;
    const Real u_c = evaluate_profile(profile, r_c).u;
    b_mat.diag[i] = p * std::pow(u_c, p - 1.0) * r_c * r_c * h;
  }
}

Vector radial_sigmas_on_grid(const RadialProfile& profile, Real lambda_ang,
                             Real R, int n, int k, SymTridiag* a_out = nullptr,
                             SymTridiag* b_out = nullptr) {
  SymTridiag a_mat, b_mat;
  radial_matrices(profile, lambda_ang, R, n, a_mat, b_mat);
  SymTridiag t1{a_mat.diag - b_mat.diag, a_mat.off};
  const Vector sig = pencil_smallest_eigenvalues(t1, a_mat, k);
  if (a_out) *a_out = std::move(a_mat);
  if (b_out) *b_out = std::move(b_mat);
  return sig;
}

} // namespace

Real angular_eigenvalue_closed_form(Real alpha, int m, int j) {
  validate_alpha(alpha);
  if (m < 0 || j < 0)
    throw ValidationError("angular mode indices must be nonnegative");
  const Real nu = M_PI * m / alpha;
  return (nu + j) * (nu + j + 1.0);
}

std::vector<AngularMode> angular_eigenvalues(Real alpha, int m, int j_max,
                                             int n_theta) {
  validate_alpha(alpha);
  if (m < 0 || j_max < 0)
    throw ValidationError("angular mode indices must be nonnegative");
  if (n_theta < 64)
    throw ValidationError("angular_eigenvalues: n_theta must be at least 64");
  const Real nu = M_PI * m / alpha;
  const int k = j_max + 1;
  const Vector lam_coarse = angular_eigenvalues_on_grid(nu, n_theta, k);
  const Vector lam_fine = angular_eigenvalues_on_grid(nu, 2 * n_theta, k);
  const Vector lam = (4.0 * lam_fine - lam_coarse) / 3.0;
  for (int j = 0; j < k; ++j) {
    if (std::abs(lam_fine[j] - lam_coarse[j]) >
        1e-3 * std::max(1.0, std::abs(lam[j])))
      throw GridTooCoarse("angular_eigenvalues: grid levels disagree; raise "
                          "n_theta");
  }

  // Eigenfunctions on the fine grid.
  const int n = 2 * n_theta;
  SymTridiag k_mat, m_mat;
  angular_matrices(nu, n, k_mat, m_mat);
  const SymTridiag t1{k_mat.diag + nu * (nu + 1.0) * m_mat.diag, k_mat.off};
  const Real h = M_PI / n;
  Vector centers(n);
  for (int i = 0; i < n; ++i) centers[i] = (i + 0.5) * h;

  std::vector<AngularMode> out;
  std::vector<Vector> previous;
  for (int j = 0; j < k; ++j) {
    AngularMode mode;
    mode.m = m;
    mode.alpha = alpha;
    mode.nu = nu;
    mode.j = j;
    mode.lambda_ang = lam[j];
    mode.theta_grid = centers;
    const Vector w = pencil_eigenvector(t1, m_mat, lam_fine[j], previous);
    previous.push_back(w);
    Vector theta_vals(n);
    for (int i = 0; i < n; ++i)
      theta_vals[i] = std::pow(std::sin(centers[i]), nu) * w[i];
    Eigen::Index peak = 0;
    theta_vals.cwiseAbs().maxCoeff(&peak);
    theta_vals /= theta_vals[peak];
    mode.theta_values = std::move(theta_vals);
    out.push_back(std::move(mode));
  }
  return out;
}

std::vector<RadialEigenpair>
radial_linearized_spectrum(const RadialProfile& profile, Real lambda_ang,
                           int n_eig, Real R_max, int n_r) {
  if (!(lambda_ang >= 0.0))
    throw ValidationError("radial_linearized_spectrum: lambda_ang must be >= 0");
  if (n_eig < 1 || n_r < 100)
    throw ValidationError("radial_linearized_spectrum: need n_eig >= 1 and "
                          "n_r >= 100");
  if (!(R_max >= 15.0))
    throw ValidationError("radial_linearized_spectrum: R_max must be >= 15");
  const Vector sig_coarse =
      radial_sigmas_on_grid(profile, lambda_ang, R_max, n_r, n_eig);
  SymTridiag a_fine, b_fine;
  const Vector sig_fine = radial_sigmas_on_grid(profile, lambda_ang, R_max,
                                                2 * n_r, n_eig, &a_fine, &b_fine);
  const Vector sig = (4.0 * sig_fine - sig_coarse) / 3.0;

  const int n = 2 * n_r;
  const Real h = R_max / n;
  Vector centers(n);
  for (int i = 0; i < n; ++i) centers[i] = (i + 0.5) * h;
  const SymTridiag t1{a_fine.diag - b_fine.diag, a_fine.off};

  std::vector<RadialEigenpair> out;
  std::vector<Vector> previous;
  for (int j = 0; j < n_eig; ++j) {
    RadialEigenpair pair;
    pair.lambda_ang = lambda_ang;
    pair.sigma = sig[j];
    pair.r_grid = centers;
    Vector v = pencil_eigenvector(t1, a_fine, sig_fine[j], previous);
    previous.push_back(v);
    // Guard against box modes of the artificial Dirichlet truncation.
    Real mass_tail = 0.0, mass_total = 0.0;
    for (int i = 0; i < n; ++i) {
      const Real cell = v[i] * v[i] * centers[i] * centers[i] * h;
      mass_total += cell;
      if (centers[i] > 0.9 * R_max) mass_tail += cell;
    }
    if (mass_tail > 0.5 * mass_total)
      throw SpuriousMode("radial_linearized_spectrum: eigenfunction mass "
                         "concentrates at the truncation boundary");
    pair.v = std::move(v);
    out.push_back(std::move(pair));
  }
  return out;
}

ConeSpectrumReport assemble_cone_spectrum(const RadialProfile& profile,
                                          Real alpha,
                                          const ConeSpectrumOptions& opt) {
  validate_alpha(alpha);
  if (opt.m_max < 0 || opt.j_max < 0 || opt.n_eig < 1)
    throw ValidationError("assemble_cone_spectrum: invalid mode counts");
  ConeSpectrumReport report;
  report.alpha = alpha;
  report.p = profile.p;
  report.kernel_tol = opt.kernel_tol;
  Real gap = std::numeric_limits<Real>::infinity();
  for (int m = 0; m <= opt.m_max; ++m) {
    const auto ang = angular_eigenvalues(alpha, m, opt.j_max, opt.n_theta);
    for (const AngularMode& mode : ang) {
      const auto rad = radial_linearized_spectrum(
          profile, std::max(mode.lambda_ang, 0.0), opt.n_eig, opt.r_max, opt.n_r);
      for (const RadialEigenpair& pair : rad) {
        report.modes.push_back({m, mode.j, mode.lambda_ang, pair.sigma});
        if (pair.sigma < -opt.kernel_tol) ++report.morse_index;
        else if (pair.sigma <= opt.kernel_tol) ++report.kernel_dim;
        else gap = std::min(gap, pair.sigma);
      }
    }
  }
  report.spectral_gap = gap;
  return report;
}

Real coercivity_constant(const ConeSpectrumReport& report) {
  if (report.kernel_dim < 1)
    throw ValidationError("coercivity_constant: report carries no kernel mode");
  if (std::abs(report.alpha - M_PI) < report.kernel_tol)
    throw DegenerateCase("coercivity_constant: opening angle within "
                         "kernel_tol of the flat angle pi");
  return report.spectral_gap;
}

} // namespace edgespike
