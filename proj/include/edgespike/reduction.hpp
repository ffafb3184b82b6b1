#pragma once

#include <string>
#include <vector>

#include "edgespike/radial.hpp"
#include "edgespike/wedge.hpp"

namespace edgespike {

/// Discrete scaled energy of the singularly perturbed Neumann functional on
/// a wedge domain.
///
/// For nodal fields u in the trilinear space on the wedge grid,
///
///   J(u) = (1/2) u' Khat u + sum_a mhat_a ( u_a^2 / 2 - |u_a|^{p+1}/(p+1) ),
///
/// with Khat = K / eps and mhat = m / eps^3, where
/// K_ab = int grad(phi_a) . g^{-1} grad(phi_b) sqrt(g) is the exact-metric
/// stiffness (2x2x2 Gauss per cell) and m_a = int phi_a sqrt(g) is the
/// lumped mass.  This equals the energy of the problem
/// -eps^2 Lap u + u = |u|^{p-1} u with natural boundary conditions, divided
/// by eps^3 so a single concentrated spike carries O(1) energy.  Gradient and
/// Hessian are the exact algebraic derivatives of J, so finite-difference
/// consistency holds to rounding regardless of quadrature quality.
///
/// The working inner product is <x, y>_W = x' (Khat + Mhat) y, the discrete
/// counterpart of the eps-scaled H^1 inner product; dual norms of gradients
/// are taken with respect to it.
///
/// Stiffness and mass are assembled once per domain; eps enters only through
/// the scaling factors, so one operator serves a whole eps ladder.
class ReductionOperator {
 public:
  ReductionOperator(const WedgeDomain& dom, double p);

  Eigen::Index size() const { return mass_.size(); }
  double p_exponent() const { return p_; }

  /// Unscaled stiffness action K x.
  Vector stiffness_apply(const Vector& x) const;
  /// Unscaled lumped mass vector m.
  const Vector& lumped_mass() const { return mass_; }
  /// Diagonal of the unscaled stiffness.
  const Vector& stiffness_diagonal() const { return k_diag_; }

  /// Scaled energy J(u).
  double energy(const Vector& u, double eps) const;
  /// Scaled gradient Khat u + mhat (u - |u|^{p-1} u).
  Vector gradient(const Vector& u, double eps) const;
  /// Scaled Hessian action Khat v + mhat (1 - p |u|^{p-1}) v.
  Vector hessian_apply(const Vector& u, const Vector& v, double eps) const;

  /// (Khat + Mhat) x.
  Vector w_apply(const Vector& x, double eps) const;
  double w_inner(const Vector& x, const Vector& y, double eps) const;
  double w_norm(const Vector& x, double eps) const;
  /// Solves (Khat + Mhat) y = b by Jacobi-preconditioned conjugate gradients.
  Vector w_solve(const Vector& b, double eps, double rel_tol = 1e-8, int max_iter = 6000) const;
  /// Dual norm sqrt(g' (Khat + Mhat)^{-1} g) of a gradient vector.
  double dual_norm(const Vector& g, double eps, double rel_tol = 1e-8) const;

 private:
  double p_ = 0.0;
  int n_rho_ = 0, n_t_ = 0, n_s_ = 0;
  Vector coef_;    ///< 27-slot nodal stencil of K, row-major slot order
  Vector mass_;    ///< lumped mass m
  Vector k_diag_;  ///< diagonal of K
};

/// Residual functional of the smooth ansatz: r_a = J'(u_ansatz)[phi_a],
/// assembled by per-cell Gauss quadrature (n_gauss points per direction) of
/// the exact concentration profile and its gradient rather than from nodal
/// values.  Unlike the gradient of the discrete energy at the interpolated
/// ansatz, this functional carries no interpolation or lumping self-defect,
/// so its dual norm tracks the continuum pseudo-criticality measure with a
/// relative (not additive) discretisation error; it is the right observable
/// for eps-scaling studies.  Cells outside the cutoff support are skipped.
Vector ansatz_residual(const WedgeDomain& dom, const RadialProfile& profile,
                       const SpikeAnsatz& ansatz, int n_gauss = 3);

/// One row of a concentration study.
struct ReducedEnergySample {
  double q = 0.0;              ///< spike position along the edge
  double eps = 0.0;            ///< concentration parameter
  double alpha_q = 0.0;        ///< opening angle at q
  double energy_ansatz = 0.0;  ///< J at the pure ansatz
  double energy_reduced = 0.0; ///< J after the orthogonal correction
  double residual_norm = 0.0;  ///< dual norm of J' at the pure ansatz
  double w_norm = 0.0;         ///< W-norm of the correction
};

/// Controls of the auxiliary (orthogonal-correction) Newton solve.
struct AuxiliaryOptions {
  double newton_tol = 1e-9;      ///< absolute dual-norm target for the projected gradient
  int max_newton = 30;
  int max_minres = 6000;
  /// Floor of the adaptive forcing term: each linear solve runs to relative
  /// residual max(minres_rel_tol, min(1e-2, dual/2)), loose far from the root
  /// and tight on the final steps (Eisenstat-Walker style).
  double minres_rel_tol = 1e-10;
  double cg_rel_tol = 1e-8;      ///< tolerance of W-inverse solves
  int max_backtrack = 30;
  /// Probe the inertia of the projected Hessian before solving and throw
  /// IndefiniteProjectedHessian when it exceeds the expected count.  The
  /// probe also runs automatically when the Newton iteration fails.
  bool inertia_probe = false;
  /// Forwarded to build_spike_ansatz by the convenience wrappers.
  SpikeAnsatzOptions ansatz;
};

/// Correction w solving the auxiliary equation: w is W-orthogonal to the
/// position tangent tau of the ansatz and the gradient at ansatz + w has no
/// component in the orthogonal complement,
///
///   P' J'(ansatz + w) = 0,   <w, tau>_W = 0,
///
/// with P x = x - tau <tau, x>_W / <tau, tau>_W.  Newton steps solve
/// P' H P d = -P' g by MINRES (the projected Hessian is symmetric and, near
/// an admissible ansatz, indefinite with exactly the small Morse count, which
/// MINRES handles); iterates are re-projected to keep the constraint at
/// rounding level.
struct AuxiliarySolution {
  ScalarField w;
  ReducedEnergySample sample;
  int newton_iterations = 0;
  /// |<w, tau>_W| / (||w||_W ||tau||_W): constraint defect after the solve.
  double orthogonality = 0.0;
};

AuxiliarySolution solve_auxiliary(const ReductionOperator& op, const WedgeDomain& dom,
                                  const SpikeAnsatz& ansatz, const AuxiliaryOptions& opt = {});

/// Convenience wrapper: builds the ansatz and the operator, then solves.
AuxiliarySolution solve_auxiliary(const WedgeDomain& dom, const RadialProfile& profile, double q,
                                  double eps, const AuxiliaryOptions& opt = {});

/// Pseudo-criticality study: for a descending eps ladder, measures the dual
/// norm of J' at the spike ansatz placed at q, using the exactly-integrated
/// residual functional of the smooth ansatz (see ansatz_residual).  No
/// correction is solved; energy_reduced repeats energy_ansatz and w_norm is
/// zero in the returned rows.  Throws ValidationError unless eps_list is
/// positive and strictly decreasing.
std::vector<ReducedEnergySample> pseudo_criticality_sweep(const WedgeDomain& dom,
                                                          const RadialProfile& profile, double q,
                                                          const std::vector<double>& eps_list,
                                                          const AuxiliaryOptions& opt = {});

/// One edge position of a reduced-energy profile; failures of the auxiliary
/// solve are recorded per point instead of aborting the study.
struct ReducedProfilePoint {
  ReducedEnergySample sample;
  bool solved = false;
  std::string failure;  ///< non-empty when the point failed
};

/// Reduced energy q -> J(ansatz_q + w_q) over the given edge positions at
/// fixed eps.  The operator is assembled once and shared.
std::vector<ReducedProfilePoint> reduced_energy_profile(const WedgeDomain& dom,
                                                        const RadialProfile& profile, double eps,
                                                        const Vector& q_samples,
                                                        const AuxiliaryOptions& opt = {});

/// Controls of the full (unconstrained) Newton solve.
struct FullSolveOptions {
  double newton_tol = 1e-9;
  int max_newton = 60;
  int max_minres = 6000;
  /// Floor of the adaptive forcing term; see AuxiliaryOptions.
  double minres_rel_tol = 1e-8;
  int max_backtrack = 30;
};

/// Outcome of a full Newton solve.
struct SolveReport {
  bool converged = false;
  int iterations = 0;
  double residual_norm = 0.0;  ///< final dual norm of the gradient
  double spike_center = 0.0;   ///< |u|^{p+1}-mass centroid along the edge
  double spike_height = 0.0;   ///< largest nodal value
  double energy = 0.0;         ///< J at the final iterate
  std::string basin;           ///< "spike", "constant" or "other"
  ScalarField u;               ///< final iterate
};

/// Damped Newton iteration on J' = 0 from the given initial field, with
/// MINRES linear solves and residual-norm backtracking.  Throws
/// CollapseToZero when the iterate decays below a tenth of the ground-state
/// height, the signature of the trivial basin.
SolveReport solve_full(const WedgeDomain& dom, const RadialProfile& profile, double eps,
                       const ScalarField& initial, const FullSolveOptions& opt = {});

}  // namespace edgespike
