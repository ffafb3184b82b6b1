#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "edgespike/errors.hpp"
#include "edgespike/numerics.hpp"
#include "edgespike/radial.hpp"
#include "edgespike/wedge.hpp"

using namespace edgespike;

namespace {

WedgeConfig cos_config() {
  WedgeConfig cfg;
  cfg.alpha_base = 0.5 * M_PI;
  cfg.alpha_amp = 0.3;
  cfg.alpha_mode = AlphaMode::Cos;
  cfg.L = 1.2;
  cfg.R_sector = 0.5;
  cfg.n_rho = 16;
  cfg.n_t = 10;
  cfg.n_s = 24;
  return cfg;
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

TEST_CASE("quadrature and cutoff building blocks") {
  Vector x, w;
  gauss_legendre(5, x, w);
  double odd = 0.0, even = 0.0;
  for (int i = 0; i < 5; ++i) {
    odd += w[i] * std::pow(x[i], 9);
    even += w[i] * std::pow(x[i], 8);
  }
  CHECK(std::abs(odd) < 1e-15);
  CHECK(even == doctest::Approx(2.0 / 9.0).epsilon(1e-14));
  gauss_legendre_ab(4, 0.0, 2.0, x, w);
  double poly = 0.0;
  for (int i = 0; i < 4; ++i) poly += w[i] * std::pow(x[i], 7);
  CHECK(poly == doctest::Approx(32.0).epsilon(1e-13));

  const double mu = 0.8;
  CHECK(cutoff_c2(0.0, mu).phi == 1.0);
  CHECK(cutoff_c2(0.25 * mu, mu).phi == 1.0);
  CHECK(cutoff_c2(0.5 * mu, mu).phi == 0.0);
  CHECK(cutoff_c2(0.7 * mu, mu).phi == 0.0);
  double prev = 1.0;
  for (int i = 1; i <= 50; ++i) {
    const double d = 0.25 * mu + 0.25 * mu * i / 50.0;
    const CutoffValue cv = cutoff_c2(d, mu);
    CHECK(cv.phi < prev);
    prev = cv.phi;
    // analytic first and second derivatives agree with finite differences
    const double h = 1e-6 * mu;
    if (i < 50) {
      const double fd1 = (cutoff_c2(d + h, mu).phi - cutoff_c2(d - h, mu).phi) / (2.0 * h);
      const double fd2 = (cutoff_c2(d + h, mu).dphi - cutoff_c2(d - h, mu).dphi) / (2.0 * h);
      CHECK(cv.dphi == doctest::Approx(fd1).epsilon(1e-6));
      CHECK(cv.d2phi == doctest::Approx(fd2).epsilon(1e-5));
    }
  }
  // C^2 junctions: derivative data vanish at both ends of the ramp
  CHECK(cutoff_c2(0.25 * mu + 1e-12, mu).dphi == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(cutoff_c2(0.5 * mu - 1e-12, mu).dphi == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(cutoff_c2(0.25 * mu + 1e-12, mu).d2phi == doctest::Approx(0.0).epsilon(1e-4));
  CHECK(cutoff_c2(0.5 * mu - 1e-12, mu).d2phi == doctest::Approx(0.0).epsilon(1e-4));
}

TEST_CASE("domain construction and validation") {
  WedgeConfig cfg = cos_config();
  const WedgeDomain dom = build_domain(cfg);
  CHECK(dom.rho_nodes[0] == 0.0);
  CHECK(dom.rho_nodes[cfg.n_rho] == doctest::Approx(1.0).epsilon(1e-15));
  for (int i = 1; i <= cfg.n_rho; ++i) CHECK(dom.rho_nodes[i] > dom.rho_nodes[i - 1]);
  // clustering: the first radial cell is finer than uniform spacing
  CHECK(dom.rho_nodes[1] < 1.0 / cfg.n_rho);
  CHECK(dom.s_nodes[cfg.n_s] == doctest::Approx(cfg.L).epsilon(1e-15));

  WedgeConfig bad = cfg;
  bad.n_rho = 4;
  CHECK_THROWS_AS(build_domain(bad), ValidationError);
  bad = cfg;
  bad.L = 0.0;
  CHECK_THROWS_AS(build_domain(bad), ValidationError);
  bad = cfg;
  bad.alpha_base = M_PI;
  bad.alpha_amp = 0.0;
  CHECK_THROWS_AS(build_domain(bad), DegenerateAngle);
  bad = cfg;
  bad.alpha_base = 3.0;
  bad.alpha_amp = 0.3;  // straddles pi
  CHECK_THROWS_AS(build_domain(bad), DegenerateAngle);
  bad = cfg;
  bad.alpha_base = 0.03;
  bad.alpha_amp = 0.0;
  CHECK_THROWS_AS(build_domain(bad), DegenerateAngle);
  bad = cfg;
  bad.alpha_base = 6.2;
  bad.alpha_amp = 0.2;
  CHECK_THROWS_AS(build_domain(bad), ValidationError);
}

TEST_CASE("angle profile and its derivative") {
  WedgeConfig cfg = cos_config();
  const WedgeDomain dom = build_domain(cfg);
  CHECK(alpha_value(cfg, 0.0) == doctest::Approx(cfg.alpha_base + cfg.alpha_amp).epsilon(1e-15));
  CHECK(alpha_value(cfg, cfg.L) == doctest::Approx(cfg.alpha_base - cfg.alpha_amp).epsilon(1e-15));
  CHECK(alpha_value(cfg, 0.5 * cfg.L) == doctest::Approx(cfg.alpha_base).epsilon(1e-14));
  for (const double q : {0.1, 0.37, 0.9}) {
    CHECK(angle_at(dom, q) == alpha_value(cfg, q));
    const double h = 1e-6;
    const double fd = (alpha_value(cfg, q + h) - alpha_value(cfg, q - h)) / (2.0 * h);
    CHECK(angle_derivative_at(dom, q) == doctest::Approx(fd).epsilon(1e-8));
  }
  CHECK_THROWS_AS(angle_at(dom, -0.01), OutOfRange);
  CHECK_THROWS_AS(angle_at(dom, cfg.L + 0.01), OutOfRange);

  WedgeConfig lin = cfg;
  lin.alpha_mode = AlphaMode::Linear;
  CHECK(alpha_value(lin, 0.0) == doctest::Approx(cfg.alpha_base - cfg.alpha_amp));
  CHECK(alpha_value(lin, cfg.L) == doctest::Approx(cfg.alpha_base + cfg.alpha_amp));
}

TEST_CASE("metric identities at random interior points") {
  const WedgeConfig cfg = cos_config();
  const WedgeDomain dom = build_domain(cfg);
  std::mt19937 rng(1234);
  std::uniform_real_distribution<double> unif(0.05, 0.95);
  for (int trial = 0; trial < 30; ++trial) {
    const double rho = unif(rng);
    const double t = unif(rng);
    const double s = unif(rng) * cfg.L;
    const MetricSample ms = metric_at(dom, rho, t, s);
    const double a = alpha_value(cfg, s);
    const double da = (alpha_value(cfg, s + 1e-7) - alpha_value(cfg, s - 1e-7)) / 2e-7;
    const double R = cfg.R_sector;
    CHECK(ms.g(0, 0) == doctest::Approx(R * R).epsilon(1e-14));
    CHECK(ms.g(1, 1) == doctest::Approx(rho * rho * R * R * a * a).epsilon(1e-13));
    CHECK(ms.g(1, 2) == doctest::Approx(rho * rho * R * R * a * t * da).epsilon(1e-6));
    CHECK(ms.g(2, 2) ==
          doctest::Approx(1.0 + rho * rho * R * R * t * t * da * da).epsilon(1e-6));
    CHECK(ms.g(0, 1) == 0.0);
    CHECK(ms.g(0, 2) == 0.0);
    CHECK(ms.sqrt_g == doctest::Approx(rho * R * R * a).epsilon(1e-14));
    CHECK(ms.sqrt_g * ms.sqrt_g == doctest::Approx(ms.g.determinant()).epsilon(1e-11));
    const Eigen::Matrix3d eye = ms.g * ms.g_inv;
    CHECK((eye - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK_THROWS_AS(metric_at(dom, 0.0, 0.5, 0.5), ValidationError);
}

TEST_CASE("distance from an edge point is independent of the angular coordinate") {
  const WedgeConfig cfg = cos_config();
  const WedgeDomain dom = build_domain(cfg);
  const double q = 0.45;
  const Eigen::Vector3d Q(q, 0.0, 0.0);
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double rho = unif(rng);
    const double s = unif(rng) * cfg.L;
    const double expect = std::sqrt((s - q) * (s - q) + rho * rho * cfg.R_sector * cfg.R_sector);
    for (const double t : {0.0, 0.33, 1.0}) {
      const Eigen::Vector3d x = wedge_point(dom, rho, t, s);
      CHECK((x - Q).norm() == doctest::Approx(expect).epsilon(1e-13));
    }
  }
}

TEST_CASE("volume: closed form, exactness for constant angle, second-order midpoint") {
  WedgeConfig cyl = cos_config();
  cyl.alpha_amp = 0.0;
  const WedgeDomain dcyl = build_domain(cyl);
  const double vol_analytic = 0.5 * cyl.R_sector * cyl.R_sector * cyl.alpha_base * cyl.L;
  CHECK(domain_volume_exact(dcyl) == doctest::Approx(vol_analytic).epsilon(1e-13));
  CHECK(domain_volume(dcyl) == doctest::Approx(vol_analytic).epsilon(1e-13));

  // cos and linear profiles have mean alpha_base, so the exact volume is the
  // same closed form
  const WedgeConfig cfg = cos_config();
  const WedgeDomain dom = build_domain(cfg);
  const double vol_cos = 0.5 * cfg.R_sector * cfg.R_sector * cfg.alpha_base * cfg.L;
  CHECK(domain_volume_exact(dom) == doctest::Approx(vol_cos).epsilon(1e-12));

  // the midpoint rule integrates both supported angle profiles without
  // discretization error: the cos mode by phase symmetry over the full
  // period, the linear mode by polynomial degree — only rounding remains
  WedgeConfig fine = cfg;
  fine.n_s *= 2;
  CHECK(std::abs(domain_volume(dom) - vol_cos) < 1e-12 * vol_cos);
  CHECK(std::abs(domain_volume(build_domain(fine)) - vol_cos) < 1e-12 * vol_cos);
  WedgeConfig lin = cfg;
  lin.alpha_mode = AlphaMode::Linear;
  CHECK(std::abs(domain_volume(build_domain(lin)) - vol_cos) < 1e-12 * vol_cos);
}

TEST_CASE("surface areas: constant-angle closed forms and convergence") {
  WedgeConfig cyl = cos_config();
  cyl.alpha_amp = 0.0;
  const WedgeDomain dcyl = build_domain(cyl);
  const SurfaceAreas mid = surface_areas(dcyl);
  const SurfaceAreas ex = surface_areas_exact(dcyl);
  const double R = cyl.R_sector, L = cyl.L, a = cyl.alpha_base;
  CHECK(mid.face_t0 == doctest::Approx(R * L).epsilon(1e-13));
  CHECK(mid.face_t1 == doctest::Approx(R * L).epsilon(1e-13));
  CHECK(mid.face_outer == doctest::Approx(R * a * L).epsilon(1e-13));
  CHECK(mid.cap_s0 == doctest::Approx(0.5 * R * R * a).epsilon(1e-13));
  CHECK(mid.cap_sL == doctest::Approx(0.5 * R * R * a).epsilon(1e-13));
  CHECK(ex.total() == doctest::Approx(mid.total()).epsilon(1e-13));

  // modulated angle: midpoint converges to the high-order value at order 2
  const WedgeConfig cfg = cos_config();
  WedgeConfig fine = cfg;
  fine.n_s *= 2;
  fine.n_rho *= 2;
  fine.n_t *= 2;
  const SurfaceAreas ex_ref = surface_areas_exact(build_domain(fine));
  const double e1 = std::abs(surface_areas(build_domain(cfg)).face_t1 - ex_ref.face_t1);
  const double e2 = std::abs(surface_areas(build_domain(fine)).face_t1 - ex_ref.face_t1);
  CHECK(e1 > 0.0);
  CHECK(e1 / e2 > 3.0);
  // caps are exact in every discretization
  CHECK(surface_areas(build_domain(cfg)).cap_s0 ==
        doctest::Approx(0.5 * cfg.R_sector * cfg.R_sector * alpha_value(cfg, 0.0)).epsilon(1e-13));
}

TEST_CASE("edge-straightening expansion: quadratic defect, unit determinant") {
  const WedgeConfig cfg = cos_config();
  const WedgeDomain dom = build_domain(cfg);
  const MetricExpansionReport rep = metric_expansion_check(dom, 0.5, 0.2, gaussian_bump());
  CHECK(rep.slope == doctest::Approx(2.0).epsilon(0.1));
  CHECK(rep.det_defect < 1e-12);
  REQUIRE(rep.eps_values.size() == rep.discrepancy.size());
  for (std::size_t i = 1; i < rep.discrepancy.size(); ++i) {
    CHECK(rep.eps_values[i] < rep.eps_values[i - 1]);
    CHECK(rep.discrepancy[i] < rep.discrepancy[i - 1]);
  }
  CHECK_THROWS_AS(metric_expansion_check(dom, -1.0, 0.2, gaussian_bump()), OutOfRange);
  CHECK_THROWS_AS(metric_expansion_check(dom, 0.5, 0.0, gaussian_bump()), ValidationError);
}

TEST_CASE("spike ansatz: symmetry, support, peak and exact position derivative") {
  WedgeConfig cfg = cos_config();
  cfg.n_rho = 32;
  cfg.n_t = 12;
  cfg.n_s = 96;  // 8 cells per concentration length at eps = 0.1
  const WedgeDomain dom = build_domain(cfg);
  const RadialProfile& prof = profile_p3();
  const double q = 0.6, eps = 0.1;
  const SpikeAnsatz ansatz = build_spike_ansatz(dom, prof, q, eps);
  CHECK(ansatz.mu == doctest::Approx(1.8 * std::min({cfg.R_sector, q, cfg.L - q})));
  CHECK_FALSE(ansatz.plateau_ok);  // mu / (4 eps) = 2.25 < 5

  // independence of the angular index
  for (int i = 0; i <= cfg.n_rho; ++i) {
    for (int k = 0; k <= cfg.n_s; ++k) {
      const double v0 = ansatz.field.values[ansatz.field.idx(i, 0, k)];
      for (int j = 1; j <= cfg.n_t; ++j) {
        CHECK(ansatz.field.values[ansatz.field.idx(i, j, k)] == v0);
      }
    }
  }

  // peak value at the spike centre (q lies on the grid) and compact support
  int k_q = -1;
  for (int k = 0; k <= cfg.n_s; ++k) {
    if (std::abs(dom.s_nodes[k] - q) < 1e-12) k_q = k;
  }
  REQUIRE(k_q >= 0);
  CHECK(ansatz.field.values[ansatz.field.idx(0, 0, k_q)] ==
        doctest::Approx(prof.shoot_u0).epsilon(1e-14));
  double max_val = 0.0;
  for (int i = 0; i <= cfg.n_rho; ++i) {
    for (int k = 0; k <= cfg.n_s; ++k) {
      const double d = std::hypot(dom.s_nodes[k] - q, dom.rho_nodes[i] * cfg.R_sector);
      const double v = ansatz.field.values[ansatz.field.idx(i, 0, k)];
      max_val = std::max(max_val, v);
      if (d >= 0.5 * ansatz.mu) CHECK(v == 0.0);
      if (d <= 0.25 * ansatz.mu) CHECK(v > 0.0);
    }
  }
  CHECK(max_val == doctest::Approx(prof.shoot_u0).epsilon(1e-14));

  // exact tangent against a central difference in q
  const double dq = 1e-5;
  const SpikeAnsatz plus = build_spike_ansatz(dom, prof, q + dq, eps);
  const SpikeAnsatz minus = build_spike_ansatz(dom, prof, q - dq, eps);
  const double tan_scale = ansatz.tangent.values.cwiseAbs().maxCoeff();
  CHECK(tan_scale > 0.0);
  double max_err = 0.0;
  for (Eigen::Index n = 0; n < ansatz.field.size(); ++n) {
    const double fd = (plus.field.values[n] - minus.field.values[n]) / (2.0 * dq);
    max_err = std::max(max_err, std::abs(fd - ansatz.tangent.values[n]));
  }
  CHECK(max_err / tan_scale < 1e-5);
}

TEST_CASE("spike ansatz: guards and cap clipping") {
  WedgeConfig cfg = cos_config();
  cfg.n_rho = 32;
  cfg.n_t = 12;
  cfg.n_s = 160;  // fine enough along the edge for the eps = 0.05 calls
  const WedgeDomain dom = build_domain(cfg);
  const RadialProfile& prof = profile_p3();

  CHECK_THROWS_AS(build_spike_ansatz(dom, prof, -0.1, 0.1), OutOfRange);
  SpikeAnsatzOptions wide;
  wide.mu = 1.2;  // support radius 0.6 > R_sector
  CHECK_THROWS_AS(build_spike_ansatz(dom, prof, 0.6, 0.1, wide), ValidationError);
  SpikeAnsatzOptions off_center;
  off_center.mu = 0.5;  // support radius 0.25 > q
  CHECK_THROWS_AS(build_spike_ansatz(dom, prof, 0.1, 0.02, off_center), ValidationError);

  // caps: without clipping the support must not touch s = 0
  CHECK_THROWS_AS(build_spike_ansatz(dom, prof, 0.0, 0.05), ValidationError);
  SpikeAnsatzOptions clip;
  clip.clip_at_caps = true;
  const SpikeAnsatz at_cap = build_spike_ansatz(dom, prof, 0.0, 0.05, clip);
  CHECK(at_cap.field.values[at_cap.field.idx(0, 0, 0)] ==
        doctest::Approx(prof.shoot_u0).epsilon(1e-14));

  // resolution guards
  WedgeConfig coarse = cfg;
  coarse.n_s = 8;
  const WedgeDomain dcoarse = build_domain(coarse);
  CHECK_THROWS_AS(build_spike_ansatz(dcoarse, prof, 0.6, 0.05), SpikeTooCoarse);
  SpikeAnsatzOptions relax;
  relax.enforce_resolution = false;
  CHECK_NOTHROW(build_spike_ansatz(dcoarse, prof, 0.6, 0.05, relax));

  // plateau flag flips when eps shrinks
  SpikeAnsatzOptions loose;
  loose.enforce_resolution = false;
  const SpikeAnsatz sharp = build_spike_ansatz(dom, prof, 0.6, 0.04, loose);
  CHECK(sharp.plateau_ok);
}
