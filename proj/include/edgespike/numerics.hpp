#pragma once

/// Low-level numerical kernels shared across the library: C^2 cutoffs, cubic
/// Hermite interpolation, a classical RK4 stepper, graded grid construction,
/// Gauss-Legendre rules, symmetric tridiagonal pencil eigensolvers
/// (bisection + inverse iteration), a generalized Lanczos routine, and small
/// fitting helpers.  Everything here is a free function templated on the
/// scalar type; Eigen supplies all dense types.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "edgespike/errors.hpp"

namespace edgespike {

using Real = double;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// C^2 smoothstep and radial cutoff
// ---------------------------------------------------------------------------

/// Quintic smoothstep S with S(0)=0, S(1)=1 and S'=S''=0 at both ends.
/// Returns {S, S', S''} at clamped argument t.
template <class S>
struct SmoothstepValue {
  S s, ds, d2s;
};

template <class S>
SmoothstepValue<S> smoothstep_c2(S t) {
  if (t <= S(0)) return {S(0), S(0), S(0)};
  if (t >= S(1)) return {S(1), S(0), S(0)};
  const S t2 = t * t, t3 = t2 * t;
  return {t3 * (S(10) - S(15) * t + S(6) * t2),
          t2 * (S(30) - S(60) * t + S(30) * t2),
          t * (S(60) - S(180) * t + S(120) * t2)};
}

/// Radial C^2 cutoff: phi = 1 for d <= mu/4, phi = 0 for d >= mu/2, quintic
/// transition in between.  Returns {phi, phi', phi''} with respect to d.
template <class S>
struct CutoffValue {
  S phi, dphi, d2phi;
};

template <class S>
CutoffValue<S> cutoff_c2(S d, S mu) {
  const S a = mu / S(4);
  const S t = (d - a) / a;
  const auto sv = smoothstep_c2(t);
  return {S(1) - sv.s, -sv.ds / a, -sv.d2s / (a * a)};
}

// ---------------------------------------------------------------------------
// Cubic Hermite interpolation
// ---------------------------------------------------------------------------

/// Value and first derivative of the cubic Hermite interpolant on [x0, x1]
/// with endpoint values f0, f1 and endpoint derivatives d0, d1.
template <class S>
struct HermiteValue {
  S f, df;
};

template <class S>
HermiteValue<S> hermite_cubic(S x0, S x1, S f0, S d0, S f1, S d1, S x) {
  const S h = x1 - x0;
  const S t = (x - x0) / h;
  const S t2 = t * t, t3 = t2 * t;
  const S h00 = S(2) * t3 - S(3) * t2 + S(1);
  const S h10 = t3 - S(2) * t2 + t;
  const S h01 = -S(2) * t3 + S(3) * t2;
  const S h11 = t3 - t2;
  const S g00 = (S(6) * t2 - S(6) * t) / h;
  const S g10 = (S(3) * t2 - S(4) * t + S(1)) / h;
  const S g01 = (-S(6) * t2 + S(6) * t) / h;
  const S g11 = (S(3) * t2 - S(2) * t) / h;
  return {h00 * f0 + h10 * h * d0 + h01 * f1 + h11 * h * d1,
          g00 * f0 + g10 * h * d0 + g01 * f1 + g11 * h * d1};
}

// ---------------------------------------------------------------------------
// Classical RK4 step for small fixed-size systems
// ---------------------------------------------------------------------------

/// One classical Runge-Kutta step of size h for y' = f(x, y).
/// F: (S x, const VecN& y) -> VecN.
template <class S, int N, class F>
Eigen::Matrix<S, N, 1> rk4_step(F&& f, S x, const Eigen::Matrix<S, N, 1>& y,
                                S h) {
  using VecN = Eigen::Matrix<S, N, 1>;
  const VecN k1 = f(x, y);
  const VecN k2 = f(x + h / S(2), VecN(y + (h / S(2)) * k1));
  const VecN k3 = f(x + h / S(2), VecN(y + (h / S(2)) * k2));
  const VecN k4 = f(x + h, VecN(y + h * k3));
  return y + (h / S(6)) * (k1 + S(2) * k2 + S(2) * k3 + k4);
}

/// Integrate y' = f(x, y) from x0 to x1 with RK4 using at most `hmax`-sized
/// substeps (the interval is divided evenly).
template <class S, int N, class F>
Eigen::Matrix<S, N, 1> rk4_integrate(F&& f, S x0, S x1,
                                     Eigen::Matrix<S, N, 1> y, S hmax) {
  const S len = x1 - x0;
  if (len == S(0)) return y;
  const int nsub = std::max(1, static_cast<int>(std::ceil(std::abs(len) / hmax)));
  const S h = len / S(nsub);
  for (int i = 0; i < nsub; ++i) y = rk4_step<S, N>(f, x0 + S(i) * h, y, h);
  return y;
}

// ---------------------------------------------------------------------------
// Graded radial grid
// ---------------------------------------------------------------------------

/// Radial grid on [0, R] with node density proportional to r^{-1/2} near the
/// origin (spacing ~ h_uniform * sqrt(r / r_core), capped below by h_min) and
/// uniform spacing ~ h_uniform beyond r_core.  The last node is exactly R.
inline Vector graded_radial_grid(Real R, Real h_uniform, Real h_min,
                                 Real r_core) {
  if (!(R > 0) || !(h_uniform > 0) || !(h_min > 0) || h_min > h_uniform)
    throw ValidationError("graded_radial_grid: invalid spacing parameters");
  r_core = std::min(r_core, R / 2);
  std::vector<Real> nodes{0.0};
  Real r = 0.0;
  while (r < r_core) {
    const Real h = std::clamp(h_uniform * std::sqrt(r / r_core), h_min, h_uniform);
    r = std::min(r + h, r_core);
    nodes.push_back(r);
  }
  const int n_tail = std::max(1, static_cast<int>(std::ceil((R - r_core) / h_uniform)));
  const Real h_tail = (R - r_core) / n_tail;
  for (int i = 1; i <= n_tail; ++i) nodes.push_back(r_core + i * h_tail);
  nodes.back() = R;
  return Eigen::Map<const Vector>(nodes.data(), static_cast<Eigen::Index>(nodes.size()));
}

// ---------------------------------------------------------------------------
// Gauss-Legendre quadrature
// ---------------------------------------------------------------------------

/// n-point Gauss-Legendre nodes and weights on [-1, 1] (Newton iteration on
/// the Legendre recurrence).
inline void gauss_legendre(int n, Vector& x, Vector& w) {
  x.resize(n);
  w.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    Real z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    Real pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      Real p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const Real p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const Real dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

/// Gauss-Legendre rule mapped to [a, b].
inline void gauss_legendre_ab(int n, Real a, Real b, Vector& x, Vector& w) {
  gauss_legendre(n, x, w);
  const Real mid = 0.5 * (a + b), half = 0.5 * (b - a);
  x = (mid + (half * x.array())).matrix();
  w *= half;
}

// ---------------------------------------------------------------------------
// Symmetric tridiagonal pencils: (T1 - lambda T2) x = 0 with T2 SPD
// ---------------------------------------------------------------------------

/// Symmetric tridiagonal matrix; `off` has size n-1 and may be all zeros to
/// represent a diagonal matrix.
struct SymTridiag {
  Vector diag;
  Vector off;

  Eigen::Index size() const { return diag.size(); }

  Vector apply(const Vector& x) const {
    Vector y = diag.cwiseProduct(x);
    const Eigen::Index n = diag.size();
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      y[i] += off[i] * x[i + 1];
      y[i + 1] += off[i] * x[i];
    }
    return y;
  }
};

/// Number of eigenvalues of the pencil (T1, T2) strictly below x, computed as
/// the negative inertia of T1 - x T2 via the LDL^T recurrence (T2 SPD).
inline int pencil_count_below(const SymTridiag& t1, const SymTridiag& t2,
                              Real x) {
  const Eigen::Index n = t1.size();
  int count = 0;
  Real d_prev = 1.0;
  Real scale = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    scale = std::max(scale, std::abs(t1.diag[i]) + std::abs(x) * std::abs(t2.diag[i]));
  const Real tiny = std::max(scale, Real(1)) * 1e-300;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Real a = t1.diag[i] - x * t2.diag[i];
    Real e = 0.0;
    if (i > 0) e = t1.off[i - 1] - x * t2.off[i - 1];
    Real d = a - (i > 0 ? e * e / d_prev : 0.0);
    if (d == 0.0) d = -tiny;
    if (d < 0) ++count;
    d_prev = d;
  }
  return count;
}

/// k smallest eigenvalues of the pencil (T1, T2), T2 SPD, by bisection on the
/// inertia count.  abs_tol is the bisection width target.
inline Vector pencil_smallest_eigenvalues(const SymTridiag& t1,
                                          const SymTridiag& t2, int k,
                                          Real abs_tol = 1e-12) {
  const Eigen::Index n = t1.size();
  if (k > n) throw ValidationError("pencil_smallest_eigenvalues: k > n");
  // Expanding search for a bracket containing the k smallest eigenvalues.
  Real lo = -1.0, hi = 1.0;
  for (int it = 0; it < 2100 && pencil_count_below(t1, t2, lo) > 0; ++it)
    lo = lo * 2 - 1;
  for (int it = 0; it < 2100 && pencil_count_below(t1, t2, hi) < k; ++it)
    hi = hi * 2 + 1;
  Vector out(k);
  for (int j = 1; j <= k; ++j) {
    Real a = lo, b = hi;
    while (b - a > abs_tol + 1e-14 * (std::abs(a) + std::abs(b))) {
      const Real mid = 0.5 * (a + b);
      if (pencil_count_below(t1, t2, mid) >= j)
        b = mid;
      else
        a = mid;
    }
    out[j - 1] = 0.5 * (a + b);
    lo = a; // eigenvalues are ordered; reuse as the next lower bound
  }
  return out;
}

namespace detail {

/// Partial-pivot LU factorization/solve for a general tridiagonal matrix,
/// then one solve.  Bands passed as (sub, diag, super); solves (A) x = b.
inline Vector tridiag_lu_solve(Vector dl, Vector d, Vector du, Vector b) {
  const Eigen::Index n = d.size();
  Vector du2 = Vector::Zero(std::max<Eigen::Index>(n - 2, 0));
  std::vector<int> piv(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    if (std::abs(d[i]) >= std::abs(dl[i])) {
      if (d[i] == 0.0) d[i] = 1e-300;
      const Real m = dl[i] / d[i];
      dl[i] = m; // store multiplier
      d[i + 1] -= m * du[i];
    } else {
      piv[static_cast<std::size_t>(i)] = 1;
      const Real m = d[i] / dl[i];
      d[i] = dl[i];
      dl[i] = m;
      const Real tmp = d[i + 1];
      d[i + 1] = du[i] - m * tmp;
      du[i] = tmp;
      if (i + 2 < n) {
        du2[i] = du[i + 1];
        du[i + 1] = -m * du2[i];
      }
      std::swap(b[i], b[i + 1]);
      // note: row swap applied to b immediately; forward elimination below
      // uses the stored multiplier uniformly.
      b[i + 1] -= dl[i] * b[i];
      continue;
    }
    b[i + 1] -= dl[i] * b[i];
  }
  if (d[n - 1] == 0.0) d[n - 1] = 1e-300;
  // Back substitution.
  Vector x = b;
  x[n - 1] /= d[n - 1];
  if (n > 1) {
    x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    for (Eigen::Index i = n - 3; i >= 0; --i)
      x[i] = (b[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
  }
  return x;
}

} // namespace detail

/// Eigenvector of the pencil (T1, T2) for the eigenvalue estimate `lambda`,
/// by inverse iteration; T2-normalized, sign fixed so the entry of largest
/// magnitude is positive.  `ortho` are previously computed eigenvectors to
/// re-orthogonalize against (in the T2 inner product).
inline Vector pencil_eigenvector(const SymTridiag& t1, const SymTridiag& t2,
                                 Real lambda,
                                 const std::vector<Vector>& ortho = {}) {
  const Eigen::Index n = t1.size();
  Real scale = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    scale = std::max(scale, std::abs(t1.diag[i]) + std::abs(lambda) * std::abs(t2.diag[i]));
  const Real shift = lambda + 1e-13 * std::max(scale, Real(1));
  Vector d = t1.diag - shift * t2.diag;
  Vector e = t1.off - shift * t2.off;
  std::mt19937 rng(987654321u);
  std::normal_distribution<Real> gauss(0.0, 1.0);
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = gauss(rng);
  for (int it = 0; it < 4; ++it) {
    x = detail::tridiag_lu_solve(e, d, e, x);
    for (const Vector& v : ortho) x -= (v.dot(t2.apply(x))) * v;
    const Real nrm = std::sqrt(x.dot(t2.apply(x)));
    if (!(nrm > 0) || !std::isfinite(nrm))
      throw SolverError("pencil_eigenvector: inverse iteration broke down");
    x /= nrm;
  }
  Eigen::Index imax = 0;
  x.cwiseAbs().maxCoeff(&imax);
  if (x[imax] < 0) x = -x;
  return x;
}

// ---------------------------------------------------------------------------
// Generalized Lanczos (lowest eigenvalues of (A, M), M SPD)
// ---------------------------------------------------------------------------

struct LanczosOptions {
  int max_iter = 120;
  unsigned seed = 20260815u;
};

/// Lowest `k` eigenvalues of the pencil A x = theta M x with M SPD, via
/// Lanczos on M^{-1} A with full reorthogonalization in the M inner product.
/// apply_a / apply_m map x -> A x / M x; solve_m applies M^{-1}.
template <class ApplyA, class ApplyM, class SolveM>
Vector lanczos_lowest(ApplyA&& apply_a, ApplyM&& apply_m, SolveM&& solve_m,
                      Eigen::Index n, int k, const LanczosOptions& opt = {}) {
  const int m = static_cast<int>(std::min<Eigen::Index>(opt.max_iter, n));
  std::vector<Vector> basis;
  basis.reserve(static_cast<std::size_t>(m));
  std::mt19937 rng(opt.seed);
  std::normal_distribution<Real> gauss(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss(rng);
  Vector mv = apply_m(v);
  v /= std::sqrt(v.dot(mv));
  std::vector<Real> alpha, beta;
  for (int j = 0; j < m; ++j) {
    basis.push_back(v);
    const Vector av = apply_a(v);
    Vector w = solve_m(av);
    const Real a = av.dot(v);
    alpha.push_back(a);
    w -= a * v;
    if (j > 0) w -= beta.back() * basis[static_cast<std::size_t>(j - 1)];
    // Full reorthogonalization (two passes) in the M inner product.
    for (int pass = 0; pass < 2; ++pass) {
      const Vector mw = apply_m(w);
      for (const Vector& q : basis) w -= (mw.dot(q)) * q;
    }
    const Vector mw = apply_m(w);
    const Real b = std::sqrt(std::max(w.dot(mw), Real(0)));
    if (b < 1e-13 * std::max(std::abs(a), Real(1))) break;
    beta.push_back(b);
    v = w / b;
  }
  const Eigen::Index mm = static_cast<Eigen::Index>(alpha.size());
  SymTridiag t1{Eigen::Map<const Vector>(alpha.data(), mm),
                Vector(mm > 1 ? Eigen::Map<const Vector>(beta.data(), mm - 1).eval()
                              : Vector(0))};
  SymTridiag t2{Vector::Ones(mm), Vector::Zero(std::max<Eigen::Index>(mm - 1, 0))};
  return pencil_smallest_eigenvalues(t1, t2, std::min<int>(k, static_cast<int>(mm)));
}

// ---------------------------------------------------------------------------
// Fitting helpers
// ---------------------------------------------------------------------------

/// Least-squares slope of log(y) against log(x).
inline Real fit_loglog_slope(const Vector& x, const Vector& y) {
  const Eigen::Index n = x.size();
  if (n != y.size() || n < 2)
    throw ValidationError("fit_loglog_slope: need matching sizes >= 2");
  Vector lx(n), ly(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(x[i] > 0) || !(y[i] > 0))
      throw ValidationError("fit_loglog_slope: positive data required");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  const Real mx = lx.mean(), my = ly.mean();
  const Real sxx = (lx.array() - mx).square().sum();
  return ((lx.array() - mx) * (ly.array() - my)).sum() / sxx;
}

/// Least-squares affine fit y ~ a + b x; returns {a, b}.
inline Eigen::Vector2d fit_affine(const Vector& x, const Vector& y) {
  const Eigen::Index n = x.size();
  if (n != y.size() || n < 2) throw ValidationError("fit_affine: bad sizes");
  const Real mx = x.mean(), my = y.mean();
  const Real sxx = (x.array() - mx).square().sum();
  const Real b = ((x.array() - mx) * (y.array() - my)).sum() / sxx;
  return {my - b * mx, b};
}

/// Outcome of a Krylov solve.
struct KrylovResult {
  int iterations = 0;
  Real rel_residual = 0.0;  ///< preconditioned residual norm over its start value
  bool converged = false;
};

/// Preconditioned conjugate gradients for symmetric positive definite A.
///
/// apply_a and apply_minv map Vector -> Vector; apply_minv must be the action
/// of an SPD preconditioner inverse.  x holds the starting guess on entry and
/// the solution on exit.  Convergence is declared when the preconditioned
/// residual norm sqrt(r' M^{-1} r) falls below rel_tol times its initial
/// value.  Throws SolverError when a direction of non-positive curvature is
/// met, which signals an indefinite operator.
template <class ApplyA, class ApplyM>
KrylovResult cg_solve(ApplyA&& apply_a, ApplyM&& apply_minv, const Vector& b, Vector& x,
                      Real rel_tol, int max_iter) {
  KrylovResult out;
  Vector r = b - apply_a(x);
  Vector z = apply_minv(r);
  Real rz = r.dot(z);
  const Real norm0 = std::sqrt(std::max<Real>(rz, 0.0));
  if (norm0 == 0.0) {
    out.converged = true;
    return out;
  }
  Vector p = z;
  for (int it = 1; it <= max_iter; ++it) {
    const Vector ap = apply_a(p);
    const Real pap = p.dot(ap);
    if (!(pap > 0.0)) {
      throw SolverError("cg_solve: non-positive curvature encountered; operator is not SPD");
    }
    const Real alpha = rz / pap;
    x += alpha * p;
    r -= alpha * ap;
    z = apply_minv(r);
    const Real rz_new = r.dot(z);
    out.iterations = it;
    out.rel_residual = std::sqrt(std::max<Real>(rz_new, 0.0)) / norm0;
    if (out.rel_residual <= rel_tol) {
      out.converged = true;
      return out;
    }
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  return out;
}

/// Preconditioned MINRES for symmetric (possibly indefinite) A.
///
/// Classical Lanczos/Givens formulation; apply_minv must be SPD (it may be a
/// projected preconditioner that is only definite on the relevant subspace,
/// in which case b and the Krylov space must live in that subspace).  x holds
/// the starting guess on entry and the solution on exit; convergence is on
/// the preconditioned residual norm estimate relative to its initial value.
template <class ApplyA, class ApplyM>
KrylovResult minres_solve(ApplyA&& apply_a, ApplyM&& apply_minv, const Vector& b, Vector& x,
                          Real rel_tol, int max_iter) {
  KrylovResult out;
  const Eigen::Index n = b.size();
  Vector r1 = b - apply_a(x);
  Vector y = apply_minv(r1);
  Real beta1 = r1.dot(y);
  if (beta1 < 0.0) {
    throw SolverError("minres_solve: preconditioner is not positive definite");
  }
  beta1 = std::sqrt(beta1);
  if (beta1 == 0.0) {
    out.converged = true;
    return out;
  }

  Real oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
  Real cs = -1.0, sn = 0.0;
  Vector r2 = r1;
  Vector w = Vector::Zero(n), w2 = Vector::Zero(n);

  for (int it = 1; it <= max_iter; ++it) {
    const Vector v = y / beta;
    y = apply_a(v);
    if (it >= 2) y -= (beta / oldb) * r1;
    const Real alfa = v.dot(y);
    y -= (alfa / beta) * r2;
    r1 = r2;
    r2 = y;
    y = apply_minv(r2);
    oldb = beta;
    const Real beta2 = r2.dot(y);
    if (beta2 < 0.0) {
      throw SolverError("minres_solve: preconditioner is not positive definite");
    }
    beta = std::sqrt(beta2);

    const Real oldeps = epsln;
    const Real delta = cs * dbar + sn * alfa;
    const Real gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    Real gamma = std::sqrt(gbar * gbar + beta * beta);
    gamma = std::max(gamma, std::numeric_limits<Real>::min());
    cs = gbar / gamma;
    sn = beta / gamma;
    const Real phi = cs * phibar;
    phibar = sn * phibar;

    const Vector w1 = w2;
    w2 = w;
    w = (v - oldeps * w1 - delta * w2) / gamma;
    x += phi * w;

    out.iterations = it;
    out.rel_residual = phibar / beta1;
    if (out.rel_residual <= rel_tol) {
      out.converged = true;
      return out;
    }
  }
  return out;
}

} // namespace edgespike
