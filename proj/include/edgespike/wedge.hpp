#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "edgespike/numerics.hpp"
#include "edgespike/radial.hpp"

namespace edgespike {

/// Shape of the opening-angle profile alpha(s) along the edge.
enum class AlphaMode { Cos, Linear };

/// Parameters of a wedge sector with a slowly varying opening angle.
///
/// The solid is the image of the reference box (rho, t, s) in
/// [0,1] x [0,1] x [0,L] under the map
///
///     X(rho, t, s) = (s, rho R cos(t alpha(s)), rho R sin(t alpha(s))),
///
/// so s runs along the straight edge, rho is the scaled distance from the
/// edge, and t sweeps the opening angle alpha(s).  All metric quantities
/// used downstream are exact pullbacks of the Euclidean metric under this
/// map; no small-angle or thin-domain approximation enters the geometry.
struct WedgeConfig {
  double alpha_base = 1.5707963267948966;  ///< mean opening angle (pi/2)
  double alpha_amp = 0.0;                  ///< modulation amplitude
  AlphaMode alpha_mode = AlphaMode::Cos;   ///< cos or linear profile
  double L = 1.0;                          ///< edge length
  double R_sector = 0.5;                   ///< sector radius
  int n_rho = 16;                          ///< cells in the radial direction
  int n_t = 8;                             ///< cells in the angular direction
  int n_s = 16;                            ///< cells along the edge
  /// Curvature pair (kappa_2, kappa_3) of the model curved edge used by the
  /// straightening diagnostic metric_expansion_check.  It does not alter the
  /// wedge map above, which has a straight edge by construction.
  Eigen::Vector2d edge_kappa{0.3, -0.2};
};

/// alpha(s): cos mode gives alpha_base + alpha_amp * cos(pi s / L),
/// linear mode gives alpha_base + alpha_amp * (2 s / L - 1).
double alpha_value(const WedgeConfig& cfg, double s);

/// d alpha / d s for the same profile.
double alpha_derivative(const WedgeConfig& cfg, double s);

/// Tensor grid realisation of a wedge configuration.
///
/// The radial nodes are clustered toward the edge through
/// rho(xi) = (xi + xi^2) / 2 with xi uniform on [0,1], so the spacing near
/// rho = 0 is about half the uniform spacing.  The nodes on the axis rho = 0
/// are kept as separate degrees of freedom for every t index; the degenerate
/// metric couples them through the quadrature instead of an explicit
/// identification.
struct WedgeDomain {
  WedgeConfig config;
  Vector rho_nodes;  ///< n_rho + 1 nodes, rho_0 = 0, rho_{n_rho} = 1
  Vector t_nodes;    ///< n_t + 1 uniform nodes on [0,1]
  Vector s_nodes;    ///< n_s + 1 uniform nodes on [0,L]
};

/// Validates the configuration and builds the tensor grid.
///
/// Throws ValidationError for non-positive dimensions or fewer than 8 cells
/// per direction, and DegenerateAngle when the angle profile passes within
/// 0.05 rad of 0 or of pi anywhere along the edge (the linearised operator
/// changes kernel dimension at alpha = pi, so geometries straddling it are
/// rejected rather than silently mis-handled).  Angles reaching 2 pi are
/// rejected as ValidationError because the chart would self-overlap.
WedgeDomain build_domain(const WedgeConfig& cfg);

/// Opening angle at edge position q; throws OutOfRange if q is outside [0,L].
double angle_at(const WedgeDomain& dom, double q);

/// Derivative of the opening angle at q; throws OutOfRange as angle_at.
double angle_derivative_at(const WedgeDomain& dom, double q);

/// Exact pullback metric of the wedge map at one point, coordinate order
/// (rho, t, s):
///
///   g = [ R^2        0                  0
///         0          rho^2 R^2 a^2      rho^2 R^2 a t a'
///         0          rho^2 R^2 a t a'   1 + rho^2 R^2 t^2 a'^2 ],
///
/// with a = alpha(s), a' = alpha'(s), sqrt(det g) = rho R^2 a.
struct MetricSample {
  Eigen::Matrix3d g;      ///< covariant metric
  Eigen::Matrix3d g_inv;  ///< contravariant metric
  double sqrt_g = 0.0;    ///< volume density rho R^2 alpha(s)
};

/// Evaluates the metric at an interior point.  Requires rho > 0: the metric
/// is degenerate on the edge axis and the inverse does not exist there.
MetricSample metric_at(const WedgeDomain& dom, double rho, double t, double s);

/// Cartesian image of a reference point under the wedge map.
Eigen::Vector3d wedge_point(const WedgeDomain& dom, double rho, double t, double s);

/// Nodal scalar data on the tensor grid of a wedge domain.  Storage is
/// row-major with rho slowest and s fastest:
/// idx(i, j, k) = (i * (n_t + 1) + j) * (n_s + 1) + k.
struct ScalarField {
  int n_rho = 0;
  int n_t = 0;
  int n_s = 0;
  Vector values;

  Eigen::Index idx(int i_rho, int i_t, int i_s) const {
    return (static_cast<Eigen::Index>(i_rho) * (n_t + 1) + i_t) * (n_s + 1) + i_s;
  }
  Eigen::Index size() const { return values.size(); }
};

/// Zero field with the node layout of the domain.
ScalarField make_field(const WedgeDomain& dom);

/// Volume by the midpoint rule on the exact density rho R^2 alpha(s);
/// second-order accurate against the closed form (R^2/2) * integral alpha.
double domain_volume(const WedgeDomain& dom);

/// High-order quadrature of the closed-form volume (R^2/2) * integral alpha.
double domain_volume_exact(const WedgeDomain& dom);

/// Areas of the five boundary faces.
struct SurfaceAreas {
  double face_t0 = 0.0;    ///< flat face t = 0
  double face_t1 = 0.0;    ///< swept face t = 1
  double face_outer = 0.0; ///< cylindrical face rho = 1
  double cap_s0 = 0.0;     ///< sector cap s = 0
  double cap_sL = 0.0;     ///< sector cap s = L
  double total() const { return face_t0 + face_t1 + face_outer + cap_s0 + cap_sL; }
};

/// Midpoint sums of the exact boundary area elements (second order for the
/// curved pieces, exact for the flat ones).
SurfaceAreas surface_areas(const WedgeDomain& dom);

/// High-order quadrature of the same area elements, for convergence
/// reference.  The swept face uses the closed antiderivative in rho.
SurfaceAreas surface_areas_exact(const WedgeDomain& dom);

/// Twice continuously differentiable scalar test function with analytic
/// gradient and Hessian, used by the straightening diagnostic.
struct TestFunctionC2 {
  std::function<double(const Eigen::Vector3d&)> value;
  std::function<Eigen::Vector3d(const Eigen::Vector3d&)> gradient;
  std::function<Eigen::Matrix3d(const Eigen::Vector3d&)> hessian;
};

/// Gaussian bump exp(-|x - center|^2 / width^2) with exact derivatives.
TestFunctionC2 gaussian_bump(const Eigen::Vector3d& center = Eigen::Vector3d(0.2, -0.1, 0.3),
                             double width = 0.8);

/// Outcome of the straightening-expansion diagnostic.
///
/// The edge-straightening map T_eps(y) = (y1, g2(eps y1)/eps + y2,
/// g3(eps y1)/eps + y3) with quadratic profiles g_i(x) = kappa_i x^2 / 2
/// pulls the flat Laplacian back to
///
///   L_exact v = Lap v + a^2 v_22 + b^2 v_33 + 2 a b v_23
///               - 2 a v_12 - 2 b v_13 - eps (kappa_2 v_2 + kappa_3 v_3),
///
/// with a = kappa_2 eps y1, b = kappa_3 eps y1, while its first-order
/// expansion in eps reads
///
///   L_1 v = Lap v - eps [ 2 y1 (kappa_2 v_12 + kappa_3 v_13)
///                         + kappa_2 v_2 + kappa_3 v_3 ].
///
/// The report records |L_exact v - L_1 v| over a fixed sample cloud for a
/// decreasing eps ladder; the defect is quadratic in eps, so the fitted
/// log-log slope is 2.  The determinant of the pulled-back metric equals 1
/// identically; det_defect measures the numerical residue of that identity.
struct MetricExpansionReport {
  double q = 0.0;                   ///< edge position the check is tied to
  double alpha_q = 0.0;             ///< opening angle at q
  Eigen::Vector2d kappa;            ///< curvature pair used
  std::vector<double> eps_values;   ///< decreasing ladder
  std::vector<double> discrepancy;  ///< max |L_exact - L_1| per eps
  double slope = 0.0;               ///< fitted log-log rate (expected 2)
  double det_defect = 0.0;          ///< max |det g - 1| observed
};

/// Runs the straightening diagnostic at edge position q with base step eps,
/// halving eps three times.  Throws OutOfRange for q outside the edge,
/// ValidationError for non-positive eps or an incomplete test function.
MetricExpansionReport metric_expansion_check(const WedgeDomain& dom, double q, double eps,
                                             const TestFunctionC2& fn);

/// Options of build_spike_ansatz.
struct SpikeAnsatzOptions {
  /// Cutoff diameter; 0 selects 1.8 * min(R_sector, q, L - q)
  /// (or 1.8 * min(R_sector, L/2) when clip_at_caps is set).
  double mu = 0.0;
  /// Allow the cutoff ball to be truncated by the end caps s = 0, L.  The
  /// caps carry the same natural boundary condition as the rest of the
  /// boundary, so an even reflection across them is admissible and the
  /// truncated profile remains a consistent concentration ansatz.
  bool clip_at_caps = false;
  /// Enforce the mesh-resolution guards (see build_spike_ansatz).
  bool enforce_resolution = true;
};

/// Concentrated ansatz phi_mu(|x - Q|) U(|x - Q| / eps) placed at the edge
/// point Q = (q, 0, 0), together with its exact derivative in q.
///
/// The distance from a grid point to Q is |x - Q| = sqrt((s - q)^2 +
/// rho^2 R^2), independent of t, so the nodal field is constant in the
/// angular index.
struct SpikeAnsatz {
  double q = 0.0;
  double eps = 0.0;
  double mu = 0.0;
  /// Soft flag: mu / (4 eps) > 5, i.e. the cutoff plateau covers at least
  /// five concentration lengths.  Small-eps asymptotics are unreliable when
  /// this fails, but the ansatz itself is still well defined.
  bool plateau_ok = true;
  ScalarField field;    ///< nodal ansatz values
  ScalarField tangent;  ///< exact d(field)/dq at the nodes
};

/// Builds the spike ansatz.  Throws OutOfRange for q outside [0, L],
/// ValidationError when the cutoff support sticks out of the domain (outer
/// face always; end caps unless clip_at_caps), and SpikeTooCoarse when the
/// grid resolves the concentration scale with fewer than six cells in any
/// direction: eps / h_s >= 6, eps / (R * h_rho_near) >= 6 and
/// n_t / alpha(q) >= 6 are required unless enforce_resolution is cleared.
SpikeAnsatz build_spike_ansatz(const WedgeDomain& dom, const RadialProfile& profile, double q,
                               double eps, const SpikeAnsatzOptions& opt = {});

}  // namespace edgespike
