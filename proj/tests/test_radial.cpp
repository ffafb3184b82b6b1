#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "edgespike/errors.hpp"
#include "edgespike/radial.hpp"

using namespace edgespike;

namespace {

/// Independent shooting oracle: fixed-step RK4 march of
///   u'' = -(2/r) u' + u - u^p
/// from an origin series, classifying each shot as "crosses zero" (u0 too
/// large) or "turns upward while positive" (u0 too small), bisected to a
/// width near the rounding floor.  Shares no code with the library solver.
double oracle_shoot_u0(double p, double h = 2e-5, double r_end = 13.0) {
  const auto classify = [&](double u0) {
    const double r0 = 1e-4;
    const double c2 = (u0 - std::pow(u0, p)) / 6.0;
    double r = r0;
    double u = u0 + c2 * r0 * r0;
    double v = 2.0 * c2 * r0;
    const auto fu = [](double vv) { return vv; };
    const auto fv = [&](double rr, double uu, double vv) {
      return -2.0 * vv / rr + uu - std::copysign(std::pow(std::abs(uu), p), uu);
    };
    while (r < r_end) {
      const double k1u = fu(v), k1v = fv(r, u, v);
      const double k2u = fu(v + 0.5 * h * k1v), k2v = fv(r + 0.5 * h, u + 0.5 * h * k1u, v + 0.5 * h * k1v);
      const double k3u = fu(v + 0.5 * h * k2v), k3v = fv(r + 0.5 * h, u + 0.5 * h * k2u, v + 0.5 * h * k2v);
      const double k4u = fu(v + h * k3v), k4v = fv(r + h, u + h * k3u, v + h * k3v);
      u += h * (k1u + 2 * k2u + 2 * k3u + k4u) / 6.0;
      v += h * (k1v + 2 * k2v + 2 * k3v + k4v) / 6.0;
      r += h;
      if (u < 0.0) return +1;                  // crossed: u0 too large
      if (v > 0.0 && u < 1.0) return -1;       // turned up: u0 too small
    }
    return -1;  // still positive and decaying-ish: treat as too small
  };
  double lo = 3.0, hi = 6.0;
  REQUIRE(classify(lo) == -1);
  REQUIRE(classify(hi) == +1);
  for (int it = 0; it < 60 && hi - lo > 1e-11; ++it) {
    const double mid = 0.5 * (lo + hi);
    (classify(mid) > 0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Gauss-Legendre nodes/weights on [a, b] for the oracle quadratures, written
/// out directly (12-point rule) to stay independent of the library helpers.
void gauss12(double a, double b, double* x, double* w) {
  static const double xs[6] = {0.1252334085114689, 0.3678314989981802, 0.5873179542866175,
                               0.7699026741943047, 0.9041172563704749, 0.9815606342467192};
  static const double ws[6] = {0.2491470458134028, 0.2334925365383548, 0.2031674267230659,
                               0.1600783285433462, 0.1069393259953184, 0.0471753363865118};
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i < 6; ++i) {
    x[2 * i] = mid - half * xs[i];
    x[2 * i + 1] = mid + half * xs[i];
    w[2 * i] = w[2 * i + 1] = half * ws[i];
  }
}

/// Windowed decay-constant fit: mean of u(r) r e^r over profile nodes with
/// r in [a, b].
double window_c_fit(const RadialProfile& prof, double a, double b) {
  double sum = 0.0;
  int count = 0;
  for (Eigen::Index i = 0; i < prof.r_grid.size(); ++i) {
    const double r = prof.r_grid[i];
    if (r < a || r > b) continue;
    sum += prof.u[i] * r * std::exp(r);
    ++count;
  }
  REQUIRE(count > 10);
  return sum / count;
}

const RadialProfile& profile_p3() {
  static const RadialProfile prof = [] {
    GroundStateOptions opt;
    opt.p = 3.0;
    return solve_ground_state(opt);
  }();
  return prof;
}

}  // namespace

TEST_CASE("shooting value U(0) matches an independent fine-step bisection oracle") {
  const RadialProfile& prof = profile_p3();
  const double oracle = oracle_shoot_u0(3.0);
  CHECK(prof.shoot_u0 == doctest::Approx(oracle).epsilon(1e-8));
  // frozen anchor for regression detection
  CHECK(prof.shoot_u0 == doctest::Approx(4.33738768).epsilon(1e-8));
}

TEST_CASE("decay constant satisfies the exact source identity") {
  // w = r u solves w'' - w = -r u^p with w ~ c e^{-r}; pairing with sinh(r)
  // and integrating by parts twice gives  c = int_0^inf r u(r)^p sinh(r) dr,
  // an expression dominated by moderate r and therefore immune to the tail
  // noise a direct e^r-weighted fit would amplify.
  const RadialProfile& prof = profile_p3();
  double x[12], w[12];
  double c_identity = 0.0;
  const int cells = 600;
  for (int cell = 0; cell < cells; ++cell) {
    const double a = prof.r_max * cell / cells;
    const double b = prof.r_max * (cell + 1) / cells;
    gauss12(a, b, x, w);
    for (int i = 0; i < 12; ++i) {
      const ProfileValue pv = evaluate_profile(prof, x[i]);
      c_identity += w[i] * x[i] * std::pow(pv.u, prof.p) * std::sinh(x[i]);
    }
  }
  CHECK(prof.c_decay == doctest::Approx(c_identity).epsilon(2e-8));
  CHECK(prof.c_decay == doctest::Approx(2.712808361).epsilon(1e-7));
}

TEST_CASE("radial quadratures match an independent composite Gauss oracle") {
  const RadialProfile& prof = profile_p3();
  double x[12], w[12];
  double a_q = 0.0, b_q = 0.0, b1_q = 0.0;
  const int cells = 600;
  for (int cell = 0; cell < cells; ++cell) {
    const double a = prof.r_max * cell / cells;
    const double b = prof.r_max * (cell + 1) / cells;
    gauss12(a, b, x, w);
    for (int i = 0; i < 12; ++i) {
      const ProfileValue pv = evaluate_profile(prof, x[i]);
      const double r2 = x[i] * x[i];
      a_q += w[i] * (pv.du * pv.du + pv.u * pv.u) * r2;
      b_q += w[i] * std::pow(pv.u, prof.p + 1.0) * r2;
      b1_q += w[i] * std::pow(pv.u, prof.p + 1.0) * x[i];
    }
  }
  // the library values include the analytic tail beyond r_max; the oracle
  // truncates there, which costs O(e^{-2 r_max}) — far below the tolerance
  CHECK(prof.quad_A == doctest::Approx(a_q).epsilon(1e-7));
  CHECK(prof.quad_B == doctest::Approx(b_q).epsilon(1e-7));
  CHECK(prof.quad_B1 == doctest::Approx(b1_q).epsilon(1e-7));
  CHECK(prof.quad_B == doctest::Approx(6.015181911299).epsilon(1e-8));
  CHECK(prof.quad_B1 == doctest::Approx(18.81293189).epsilon(1e-7));
}

TEST_CASE("Nehari identity and energy coefficients") {
  const RadialProfile& prof = profile_p3();
  const EnergyCoefficients coef = compute_energy_coefficients(prof);
  CHECK(coef.nehari_defect < 1e-11);
  CHECK(coef.nehari_mass == doctest::Approx(4.0 * M_PI * prof.quad_B).epsilon(1e-13));
  CHECK(coef.energy_full / coef.nehari_mass == doctest::Approx(0.25).epsilon(1e-8));
  CHECK(coef.c0 == doctest::Approx(3.00759096).epsilon(1e-7));
  CHECK(coef.c0_printed_form == doctest::Approx(7.38782108).epsilon(1e-7));
  CHECK(coef.c0 > 0.0);
  // the two quadrature forms differ by construction; both are reported
  CHECK(std::abs(coef.c0_printed_form - coef.c0) > 0.1);
}

TEST_CASE("profile invariants: positivity, monotonicity, residual floor") {
  const RadialProfile& prof = profile_p3();
  CHECK(prof.du[0] == 0.0);
  for (Eigen::Index i = 0; i < prof.r_grid.size(); ++i) {
    CHECK(prof.u[i] > 0.0);
    if (i > 0) CHECK(prof.du[i] < 0.0);
  }
  CHECK(prof.match_defect < 1e-9 * prof.shoot_u0);
  CHECK(max_ode_defect(prof) < 1e-10);
  CHECK(prof.quad_error < 1e-9 * prof.quad_B);
}

TEST_CASE("decay law: log-derivative limit and window-stable fit") {
  const RadialProfile& prof = profile_p3();
  CHECK(std::abs(tail_log_derivative(prof, 25.0) + 1.0) < 0.01);
  // the approach to -1 is monotone in quality along the tail
  CHECK(std::abs(tail_log_derivative(prof, 25.0) + 1.0) <
        std::abs(tail_log_derivative(prof, 12.0) + 1.0));
  const double c_hi = window_c_fit(prof, 0.6 * prof.r_max, 0.8 * prof.r_max);
  const double c_lo = window_c_fit(prof, 0.7 * prof.r_max, 0.9 * prof.r_max);
  CHECK(std::abs(c_hi - c_lo) / prof.c_decay < 0.01);
  CHECK(prof.c_decay == doctest::Approx(c_hi).epsilon(0.01));
}

TEST_CASE("evaluate_profile: nodes, origin, and tail seam") {
  const RadialProfile& prof = profile_p3();
  const ProfileValue at0 = evaluate_profile(prof, 0.0);
  CHECK(at0.u == prof.shoot_u0);
  CHECK(at0.du == 0.0);
  const Eigen::Index mid = prof.r_grid.size() / 2;
  const ProfileValue atm = evaluate_profile(prof, prof.r_grid[mid]);
  CHECK(atm.u == prof.u[mid]);
  CHECK(atm.du == prof.du[mid]);
  const double r_out = prof.r_max + 5.0;
  const ProfileValue tail = evaluate_profile(prof, r_out);
  CHECK(tail.u == doctest::Approx(prof.c_decay * std::exp(-r_out) / r_out).epsilon(1e-12));
  // continuity across the seam
  const ProfileValue inner = evaluate_profile(prof, prof.r_max - 1e-9);
  const ProfileValue outer = evaluate_profile(prof, prof.r_max + 1e-9);
  CHECK(inner.u == doctest::Approx(outer.u).epsilon(1e-6));
}

TEST_CASE("ground state exists across the subcritical range") {
  for (const double p : {1.5, 2.0, 4.0}) {
    CAPTURE(p);
    GroundStateOptions opt;
    opt.p = p;
    const RadialProfile prof = solve_ground_state(opt);
    CHECK(prof.shoot_u0 > 1.0);
    const EnergyCoefficients coef = compute_energy_coefficients(prof);
    CHECK(coef.nehari_defect < 1e-9);
    CHECK(coef.c0 > 0.0);
    CHECK(std::abs(tail_log_derivative(prof, 25.0) + 1.0) < 0.01);
  }
}

TEST_CASE("parameter validation") {
  GroundStateOptions opt;
  opt.p = 6.0;
  CHECK_THROWS_AS(solve_ground_state(opt), ValidationError);
  opt.p = 1.0;
  CHECK_THROWS_AS(solve_ground_state(opt), ValidationError);
  opt.p = 3.0;
  opt.r_max = 10.0;
  CHECK_THROWS_AS(solve_ground_state(opt), ValidationError);
}
