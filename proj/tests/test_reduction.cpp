#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "edgespike/errors.hpp"
#include "edgespike/numerics.hpp"
#include "edgespike/radial.hpp"
#include "edgespike/reduction.hpp"
#include "edgespike/wedge.hpp"

using namespace edgespike;

namespace {

const RadialProfile& profile_p3() {
  static const RadialProfile prof = [] {
    GroundStateOptions opt;
    opt.p = 3.0;
    return solve_ground_state(opt);
  }();
  return prof;
}

/// Small but guard-compliant domain for solver-level tests.
WedgeConfig mini_config() {
  WedgeConfig cfg;
  cfg.alpha_base = 0.5 * M_PI;
  cfg.alpha_amp = 0.3;
  cfg.alpha_mode = AlphaMode::Cos;
  cfg.L = 0.52;
  cfg.R_sector = 0.7;
  cfg.n_rho = 32;
  cfg.n_t = 12;
  cfg.n_s = 32;
  return cfg;
}

Vector random_vector(Eigen::Index n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss(rng);
  return v;
}

/// Fourth-order central difference of f along t; exact for quartic
/// polynomials, hence exact up to rounding for the p = 3 energy.
template <class F>
double fd4(F&& f, double h) {
  return (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h);
}

}  // namespace

TEST_CASE("krylov kernels: cg, minres, lanczos, fits") {
  const int n = 60;
  const Vector d = Vector::LinSpaced(n, 1.0, 4.0);
  const auto apply_d = [&](const Vector& x) { return d.cwiseProduct(x).eval(); };
  const auto ident = [](const Vector& x) { return x; };
  const Vector b = random_vector(n, 11);

  Vector x = Vector::Zero(n);
  const KrylovResult cg = cg_solve(apply_d, ident, b, x, 1e-12, 500);
  CHECK(cg.converged);
  CHECK((apply_d(x) - b).norm() / b.norm() < 1e-10);

  // indefinite diagonal: CG must refuse, MINRES must solve
  Vector ind = d;
  for (int i = 0; i < n; i += 2) ind[i] = -ind[i];
  const auto apply_ind = [&](const Vector& x2) { return ind.cwiseProduct(x2).eval(); };
  Vector y = Vector::Zero(n);
  CHECK_THROWS_AS(cg_solve(apply_ind, ident, b, y, 1e-12, 500), SolverError);
  y.setZero();
  const KrylovResult mr = minres_solve(apply_ind, ident, b, y, 1e-12, 500);
  CHECK(mr.converged);
  CHECK((apply_ind(y) - b).norm() / b.norm() < 1e-9);

  const Vector low = lanczos_lowest(apply_d, ident, ident, n, 3, {n, 5u});
  CHECK(low[0] == doctest::Approx(d[0]).epsilon(1e-9));
  CHECK(low[1] == doctest::Approx(d[1]).epsilon(1e-8));

  Vector xs(4), ys(4);
  for (int i = 0; i < 4; ++i) {
    xs[i] = std::pow(2.0, -i);
    ys[i] = 3.0 * xs[i] * xs[i];
  }
  CHECK(fit_loglog_slope(xs, ys) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(fit_loglog_slope(xs, Vector::Zero(4)), ValidationError);
  const Eigen::Vector2d ab = fit_affine(xs, (2.0 + 5.0 * xs.array()).matrix());
  CHECK(ab[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(ab[1] == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("operator assembly: kernel of constants, symmetry, mass = volume") {
  const WedgeConfig cfg = mini_config();
  const WedgeDomain dom = build_domain(cfg);
  const ReductionOperator op(dom, 3.0);

  // the stiffness annihilates constants: the exact-metric weak Laplacian of a
  // constant field vanishes identically, and the assembly must reproduce it
  const Vector ones = Vector::Ones(op.size());
  const double k_scale = op.stiffness_diagonal().maxCoeff();
  CHECK(op.stiffness_apply(ones).cwiseAbs().maxCoeff() < 1e-12 * k_scale);

  // symmetry and positive semi-definiteness on random vectors
  const Vector v1 = random_vector(op.size(), 21);
  const Vector v2 = random_vector(op.size(), 22);
  const Vector kv1 = op.stiffness_apply(v1);
  const Vector kv2 = op.stiffness_apply(v2);
  CHECK(v2.dot(kv1) == doctest::Approx(v1.dot(kv2)).epsilon(1e-12));
  CHECK(v1.dot(kv1) >= 0.0);

  // diagonal extraction agrees with unit-vector probes
  for (const Eigen::Index probe : {Eigen::Index(0), op.size() / 2, op.size() - 1}) {
    Vector e = Vector::Zero(op.size());
    e[probe] = 1.0;
    CHECK(op.stiffness_diagonal()[probe] ==
          doctest::Approx(op.stiffness_apply(e)[probe]).epsilon(1e-13));
  }

  // lumped mass is positive and sums to the domain volume
  CHECK(op.lumped_mass().minCoeff() > 0.0);
  CHECK(op.lumped_mass().sum() == doctest::Approx(domain_volume_exact(dom)).epsilon(1e-9));
}

TEST_CASE("energy, gradient and Hessian are algebraically consistent") {
  const WedgeConfig cfg = mini_config();
  const WedgeDomain dom = build_domain(cfg);
  const ReductionOperator op(dom, 3.0);
  const RadialProfile& prof = profile_p3();
  const double eps = 0.12;
  const SpikeAnsatz ansatz = build_spike_ansatz(dom, prof, 0.26, eps);

  // generic positive state: ansatz plus offset keeps |u|^{p+1} smooth
  const Vector u = ansatz.field.values.array() + 0.5;
  const Vector g = op.gradient(u, eps);

  for (unsigned seed = 100; seed < 105; ++seed) {
    Vector v = random_vector(op.size(), seed);
    v /= v.norm();
    // for p = 3 the energy is quartic along the ray, so the fourth-order
    // stencil is exact and only rounding remains
    const double fd = fd4([&](double t) { return op.energy(u + t * v, eps); }, 0.05);
    const double gv = g.dot(v);
    CHECK(fd == doctest::Approx(gv).epsilon(1e-8));

    Vector w = random_vector(op.size(), seed + 50);
    w /= w.norm();
    const Vector hv = op.hessian_apply(u, v, eps);
    const double fd_h =
        fd4([&](double t) { return op.gradient(u + t * v, eps).dot(w); }, 0.05);
    CHECK(fd_h == doctest::Approx(w.dot(hv)).epsilon(1e-7));
    // symmetry of the Hessian
    const Vector hw = op.hessian_apply(u, w, eps);
    CHECK(v.dot(hw) == doctest::Approx(w.dot(hv)).epsilon(1e-11));
  }
}

TEST_CASE("W inner product: solve/apply round trip and dual norm") {
  const WedgeConfig cfg = mini_config();
  const WedgeDomain dom = build_domain(cfg);
  const ReductionOperator op(dom, 3.0);
  const double eps = 0.12;
  const Vector b = random_vector(op.size(), 31);
  const Vector w = op.w_solve(b, eps, 1e-10);
  CHECK((op.w_apply(w, eps) - b).norm() / b.norm() < 1e-6);
  CHECK(op.w_norm(w, eps) == doctest::Approx(std::sqrt(op.w_inner(w, w, eps))).epsilon(1e-12));
  const double dual = op.dual_norm(b, eps, 1e-10);
  CHECK(dual * dual == doctest::Approx(b.dot(w)).epsilon(1e-6));
  CHECK_THROWS_AS(op.w_solve(b, eps, 1e-15, 2), SolverError);
}

TEST_CASE("exactly-integrated ansatz residual: quadrature convergence, floor gap") {
  WedgeConfig cfg;
  cfg.alpha_base = 0.5 * M_PI;
  cfg.alpha_amp = 0.2;
  cfg.alpha_mode = AlphaMode::Cos;
  cfg.L = 1.2;
  cfg.R_sector = 0.7;
  cfg.n_rho = 64;
  cfg.n_t = 24;
  cfg.n_s = 160;
  const WedgeDomain dom = build_domain(cfg);
  const RadialProfile& prof = profile_p3();
  const double eps = 0.05;
  const SpikeAnsatz ansatz = build_spike_ansatz(dom, prof, 0.6, eps);
  const ReductionOperator op(dom, 3.0);

  const Vector r3 = ansatz_residual(dom, prof, ansatz, 3);
  const Vector r4 = ansatz_residual(dom, prof, ansatz, 4);
  const double d3 = op.dual_norm(r3, eps, 1e-8);
  const double d4 = op.dual_norm(r4, eps, 1e-8);
  CHECK(d3 == doctest::Approx(d4).epsilon(1e-5));

  // the nodal-gradient dual norm carries an additive interpolation/lumping
  // defect; the exactly-integrated functional must sit well below it here
  const double d_nodal = op.dual_norm(op.gradient(ansatz.field.values, eps), eps, 1e-8);
  CHECK(d3 < 0.5 * d_nodal);
  CHECK(d3 > 0.0);

  CHECK_THROWS_AS(ansatz_residual(dom, prof, ansatz, 1), ValidationError);
  CHECK_THROWS_AS(ansatz_residual(dom, prof, ansatz, 13), ValidationError);
}

TEST_CASE("auxiliary solve: orthogonality, energy decrement, inertia probe") {
  const WedgeConfig cfg = mini_config();
  const WedgeDomain dom = build_domain(cfg);
  const RadialProfile& prof = profile_p3();
  const double eps = 0.12, q = 0.26;

  AuxiliaryOptions opt;
  opt.inertia_probe = true;  // also verifies the expected Morse count
  const AuxiliarySolution sol = solve_auxiliary(dom, prof, q, eps, opt);
  CHECK(sol.orthogonality < 1e-12);
  CHECK(sol.sample.q == q);
  CHECK(sol.sample.eps == eps);
  CHECK(sol.sample.alpha_q == doctest::Approx(angle_at(dom, q)));
  CHECK(sol.sample.energy_reduced <= sol.sample.energy_ansatz);
  CHECK(sol.sample.w_norm > 0.0);
  CHECK(sol.sample.residual_norm > 0.0);
  CHECK(sol.newton_iterations >= 1);
  CHECK(sol.w.values.allFinite());
  CHECK(sol.sample.energy_ansatz > 0.0);
  CHECK(sol.sample.energy_ansatz < 2.0 * angle_at(dom, q) * 3.00759096);

  // unreachable tolerance surfaces as a solver failure, not a hang
  AuxiliaryOptions hopeless;
  hopeless.newton_tol = 1e-30;
  hopeless.max_newton = 4;
  CHECK_THROWS_AS(solve_auxiliary(dom, prof, q, eps, hopeless), SolverError);
}

TEST_CASE("pseudo-criticality sweep: validation and row semantics") {
  const WedgeConfig cfg = mini_config();
  const WedgeDomain dom = build_domain(cfg);
  const RadialProfile& prof = profile_p3();

  CHECK_THROWS_AS(pseudo_criticality_sweep(dom, prof, 0.26, {}), ValidationError);
  CHECK_THROWS_AS(pseudo_criticality_sweep(dom, prof, 0.26, {0.1, 0.2}), ValidationError);
  CHECK_THROWS_AS(pseudo_criticality_sweep(dom, prof, 0.26, {0.2, -0.1}), ValidationError);

  const std::vector<ReducedEnergySample> rows =
      pseudo_criticality_sweep(dom, prof, 0.26, {0.15, 0.12});
  REQUIRE(rows.size() == 2);
  for (const ReducedEnergySample& row : rows) {
    CHECK(row.q == 0.26);
    CHECK(row.residual_norm > 0.0);
    CHECK(row.energy_reduced == row.energy_ansatz);
    CHECK(row.w_norm == 0.0);
  }
}

TEST_CASE("reduced energy profile: per-point failure capture") {
  const WedgeConfig cfg = mini_config();
  const WedgeDomain dom = build_domain(cfg);
  const RadialProfile& prof = profile_p3();
  Vector qs(3);
  qs << 0.22, 0.26, cfg.L + 0.1;  // last point is outside the edge
  const std::vector<ReducedProfilePoint> points =
      reduced_energy_profile(dom, prof, 0.12, qs);
  REQUIRE(points.size() == 3);
  CHECK(points[0].solved);
  CHECK(points[1].solved);
  CHECK_FALSE(points[2].solved);
  CHECK_FALSE(points[2].failure.empty());
  CHECK(points[1].sample.alpha_q < points[0].sample.alpha_q);  // alpha decreasing here
}

TEST_CASE("full solve: spike basin, constant basin, collapse detection") {
  const WedgeConfig cfg = mini_config();
  const WedgeDomain dom = build_domain(cfg);
  const RadialProfile& prof = profile_p3();
  const double eps = 0.12, q = 0.26;
  const SpikeAnsatz ansatz = build_spike_ansatz(dom, prof, q, eps);

  const SolveReport rep = solve_full(dom, prof, eps, ansatz.field);
  CHECK(rep.converged);
  CHECK(rep.basin == "spike");
  CHECK(rep.residual_norm <= 1e-9);
  CHECK(std::abs(rep.spike_center - q) < 6.0 * eps);
  CHECK(rep.spike_height > 0.5 * prof.shoot_u0);
  CHECK(rep.spike_height < 1.5 * prof.shoot_u0);
  CHECK(rep.energy > 0.0);

  // u = 1 is exactly critical: gradient vanishes identically
  ScalarField ones = make_field(dom);
  ones.values.setOnes();
  const SolveReport flat = solve_full(dom, prof, eps, ones);
  CHECK(flat.converged);
  CHECK(flat.basin == "constant");

  // tiny data collapses to zero and must be reported as such
  ScalarField small = ansatz.field;
  small.values *= 0.01;
  CHECK_THROWS_AS(solve_full(dom, prof, eps, small), CollapseToZero);
}
