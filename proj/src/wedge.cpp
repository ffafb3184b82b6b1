#include "edgespike/wedge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <utility>

#include "edgespike/errors.hpp"

namespace edgespike {

namespace {

constexpr double kPi = 3.14159265358979323846;

void validate_config(const WedgeConfig& cfg) {
  if (!(cfg.L > 0.0) || !(cfg.R_sector > 0.0)) {
    throw ValidationError("wedge: L and R_sector must be positive");
  }
  if (cfg.n_rho < 8 || cfg.n_t < 8 || cfg.n_s < 8) {
    throw ValidationError("wedge: at least 8 cells are required per direction");
  }
  // Scan the angle profile on a grid much finer than any admissible mesh.
  double a_min = std::numeric_limits<double>::infinity();
  double a_max = -a_min;
  double pi_gap = std::numeric_limits<double>::infinity();
  const int n_scan = 4096;
  for (int i = 0; i <= n_scan; ++i) {
    const double a = alpha_value(cfg, cfg.L * i / n_scan);
    a_min = std::min(a_min, a);
    a_max = std::max(a_max, a);
    pi_gap = std::min(pi_gap, std::abs(a - kPi));
  }
  if (a_min < 0.05) {
    std::ostringstream msg;
    msg << "wedge: opening angle reaches " << a_min << ", within 0.05 rad of closing";
    throw DegenerateAngle(msg.str());
  }
  if (pi_gap < 0.05) {
    std::ostringstream msg;
    msg << "wedge: opening angle passes within " << pi_gap
        << " rad of pi, where the linearised kernel degenerates";
    throw DegenerateAngle(msg.str());
  }
  if (a_max > 2.0 * kPi - 1e-9) {
    std::ostringstream msg;
    msg << "wedge: opening angle reaches " << a_max << " >= 2 pi; the chart would self-overlap";
    throw ValidationError(msg.str());
  }
}

/// Bundled angle data at one edge position.
struct AngleSample {
  double a;   ///< alpha(s)
  double da;  ///< alpha'(s)
};

AngleSample angle_sample(const WedgeConfig& cfg, double s) {
  return {alpha_value(cfg, s), alpha_derivative(cfg, s)};
}

void require_on_edge(const WedgeDomain& dom, double q) {
  const double slack = 1e-12 * std::max(1.0, dom.config.L);
  if (!(q >= -slack) || !(q <= dom.config.L + slack)) {
    std::ostringstream msg;
    msg << "edge position " << q << " lies outside [0, " << dom.config.L << "]";
    throw OutOfRange(msg.str());
  }
}

}  // namespace

double alpha_value(const WedgeConfig& cfg, double s) {
  switch (cfg.alpha_mode) {
    case AlphaMode::Cos:
      return cfg.alpha_base + cfg.alpha_amp * std::cos(kPi * s / cfg.L);
    case AlphaMode::Linear:
      return cfg.alpha_base + cfg.alpha_amp * (2.0 * s / cfg.L - 1.0);
  }
  throw ValidationError("wedge: unknown alpha_mode");
}

double alpha_derivative(const WedgeConfig& cfg, double s) {
  switch (cfg.alpha_mode) {
    case AlphaMode::Cos:
      return -cfg.alpha_amp * (kPi / cfg.L) * std::sin(kPi * s / cfg.L);
    case AlphaMode::Linear:
      return 2.0 * cfg.alpha_amp / cfg.L;
  }
  throw ValidationError("wedge: unknown alpha_mode");
}

WedgeDomain build_domain(const WedgeConfig& cfg) {
  validate_config(cfg);
  WedgeDomain dom;
  dom.config = cfg;
  dom.rho_nodes.resize(cfg.n_rho + 1);
  for (int i = 0; i <= cfg.n_rho; ++i) {
    const double xi = static_cast<double>(i) / cfg.n_rho;
    dom.rho_nodes[i] = 0.5 * (xi + xi * xi);
  }
  dom.rho_nodes[cfg.n_rho] = 1.0;
  dom.t_nodes = Vector::LinSpaced(cfg.n_t + 1, 0.0, 1.0);
  dom.s_nodes = Vector::LinSpaced(cfg.n_s + 1, 0.0, cfg.L);
  return dom;
}

double angle_at(const WedgeDomain& dom, double q) {
  require_on_edge(dom, q);
  return alpha_value(dom.config, q);
}

double angle_derivative_at(const WedgeDomain& dom, double q) {
  require_on_edge(dom, q);
  return alpha_derivative(dom.config, q);
}

MetricSample metric_at(const WedgeDomain& dom, double rho, double t, double s) {
  if (!(rho > 0.0)) {
    throw ValidationError("wedge: the metric is degenerate at rho = 0; evaluate at rho > 0");
  }
  const double R = dom.config.R_sector;
  const auto [a, da] = angle_sample(dom.config, s);
  const double r2 = rho * rho * R * R;

  MetricSample m;
  m.g.setZero();
  m.g(0, 0) = R * R;
  m.g(1, 1) = r2 * a * a;
  m.g(1, 2) = m.g(2, 1) = r2 * a * t * da;
  m.g(2, 2) = 1.0 + r2 * t * t * da * da;
  m.sqrt_g = rho * R * R * a;

  m.g_inv.setZero();
  m.g_inv(0, 0) = 1.0 / (R * R);
  m.g_inv(1, 1) = (1.0 + r2 * t * t * da * da) / (r2 * a * a);
  m.g_inv(1, 2) = m.g_inv(2, 1) = -t * da / a;
  m.g_inv(2, 2) = 1.0;
  return m;
}

Eigen::Vector3d wedge_point(const WedgeDomain& dom, double rho, double t, double s) {
  const double R = dom.config.R_sector;
  const double a = alpha_value(dom.config, s);
  return {s, rho * R * std::cos(t * a), rho * R * std::sin(t * a)};
}

ScalarField make_field(const WedgeDomain& dom) {
  ScalarField f;
  f.n_rho = dom.config.n_rho;
  f.n_t = dom.config.n_t;
  f.n_s = dom.config.n_s;
  f.values = Vector::Zero(static_cast<Eigen::Index>(f.n_rho + 1) * (f.n_t + 1) * (f.n_s + 1));
  return f;
}

double domain_volume(const WedgeDomain& dom) {
  const WedgeConfig& cfg = dom.config;
  double vol = 0.0;
  for (int k = 0; k < cfg.n_s; ++k) {
    const double sm = 0.5 * (dom.s_nodes[k] + dom.s_nodes[k + 1]);
    const double ds = dom.s_nodes[k + 1] - dom.s_nodes[k];
    const double a = alpha_value(cfg, sm);
    for (int i = 0; i < cfg.n_rho; ++i) {
      const double rm = 0.5 * (dom.rho_nodes[i] + dom.rho_nodes[i + 1]);
      const double dr = dom.rho_nodes[i + 1] - dom.rho_nodes[i];
      // sqrt_g = rho R^2 alpha is t-independent: the t sum collapses.
      vol += rm * cfg.R_sector * cfg.R_sector * a * dr * ds;
    }
  }
  return vol;
}

double domain_volume_exact(const WedgeDomain& dom) {
  const WedgeConfig& cfg = dom.config;
  Vector gx, gw;
  gauss_legendre(20, gx, gw);
  double integral = 0.0;
  for (int k = 0; k < 20; ++k) {
    const double s = 0.5 * cfg.L * (1.0 + gx[k]);
    integral += 0.5 * cfg.L * gw[k] * alpha_value(cfg, s);
  }
  return 0.5 * cfg.R_sector * cfg.R_sector * integral;
}

SurfaceAreas surface_areas(const WedgeDomain& dom) {
  const WedgeConfig& cfg = dom.config;
  const double R = cfg.R_sector;
  SurfaceAreas out;

  // Flat face t = 0: element R drho ds.
  out.face_t0 = R * cfg.L;

  // Swept face t = 1: element R sqrt(1 + rho^2 R^2 alpha'(s)^2) drho ds.
  for (int k = 0; k < cfg.n_s; ++k) {
    const double sm = 0.5 * (dom.s_nodes[k] + dom.s_nodes[k + 1]);
    const double ds = dom.s_nodes[k + 1] - dom.s_nodes[k];
    const double da = alpha_derivative(cfg, sm);
    const double a = alpha_value(cfg, sm);
    for (int i = 0; i < cfg.n_rho; ++i) {
      const double rm = 0.5 * (dom.rho_nodes[i] + dom.rho_nodes[i + 1]);
      const double dr = dom.rho_nodes[i + 1] - dom.rho_nodes[i];
      out.face_t1 += R * std::sqrt(1.0 + rm * rm * R * R * da * da) * dr * ds;
    }
    // Cylindrical face rho = 1: element R alpha(s) dt ds; the t sum collapses.
    out.face_outer += R * a * ds;
  }

  // Sector caps: element rho R^2 alpha dt drho; midpoint sums in rho telescope
  // to the exact value alpha R^2 / 2 because the element is linear in rho.
  double rho_half = 0.0;
  for (int i = 0; i < cfg.n_rho; ++i) {
    const double rm = 0.5 * (dom.rho_nodes[i] + dom.rho_nodes[i + 1]);
    rho_half += rm * (dom.rho_nodes[i + 1] - dom.rho_nodes[i]);
  }
  out.cap_s0 = alpha_value(cfg, 0.0) * R * R * rho_half;
  out.cap_sL = alpha_value(cfg, cfg.L) * R * R * rho_half;
  return out;
}

SurfaceAreas surface_areas_exact(const WedgeDomain& dom) {
  const WedgeConfig& cfg = dom.config;
  const double R = cfg.R_sector;
  SurfaceAreas out;
  out.face_t0 = R * cfg.L;
  out.cap_s0 = 0.5 * alpha_value(cfg, 0.0) * R * R;
  out.cap_sL = 0.5 * alpha_value(cfg, cfg.L) * R * R;

  Vector gx, gw;
  gauss_legendre(24, gx, gw);
  for (int k = 0; k < 24; ++k) {
    const double s = 0.5 * cfg.L * (1.0 + gx[k]);
    const double w = 0.5 * cfg.L * gw[k];
    out.face_outer += w * R * alpha_value(cfg, s);
    // integral over rho of R sqrt(1 + c^2 rho^2) with c = R alpha'(s):
    // [rho sqrt(1 + c^2 rho^2) / 2 + asinh(c rho) / (2 c)] from 0 to 1.
    const double c = R * alpha_derivative(cfg, s);
    double rho_int;
    if (std::abs(c) < 1e-12) {
      rho_int = 1.0;
    } else {
      rho_int = 0.5 * std::sqrt(1.0 + c * c) + 0.5 * std::asinh(c) / c;
    }
    out.face_t1 += w * R * rho_int;
  }
  return out;
}

TestFunctionC2 gaussian_bump(const Eigen::Vector3d& center, double width) {
  const double w2 = width * width;
  TestFunctionC2 fn;
  fn.value = [center, w2](const Eigen::Vector3d& x) {
    return std::exp(-(x - center).squaredNorm() / w2);
  };
  fn.gradient = [center, w2](const Eigen::Vector3d& x) -> Eigen::Vector3d {
    const Eigen::Vector3d q = x - center;
    return (-2.0 / w2) * std::exp(-q.squaredNorm() / w2) * q;
  };
  fn.hessian = [center, w2](const Eigen::Vector3d& x) -> Eigen::Matrix3d {
    const Eigen::Vector3d q = x - center;
    const double f = std::exp(-q.squaredNorm() / w2);
    return f * ((4.0 / (w2 * w2)) * q * q.transpose() -
                (2.0 / w2) * Eigen::Matrix3d::Identity());
  };
  return fn;
}

MetricExpansionReport metric_expansion_check(const WedgeDomain& dom, double q, double eps,
                                             const TestFunctionC2& fn) {
  require_on_edge(dom, q);
  if (!(eps > 0.0)) {
    throw ValidationError("metric_expansion_check: eps must be positive");
  }
  if (!fn.value || !fn.gradient || !fn.hessian) {
    throw ValidationError("metric_expansion_check: test function must provide value, gradient and hessian");
  }

  MetricExpansionReport rep;
  rep.q = q;
  rep.alpha_q = alpha_value(dom.config, q);
  rep.kappa = dom.config.edge_kappa;
  const double k2 = rep.kappa[0];
  const double k3 = rep.kappa[1];

  // Fixed sample cloud, reproducible across runs.
  std::mt19937 gen(912u);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<Eigen::Vector3d> cloud(48);
  for (auto& y : cloud) y = Eigen::Vector3d(unif(gen), unif(gen), unif(gen));

  for (int level = 0; level < 4; ++level) {
    const double e = eps / (1 << level);
    double max_disc = 0.0;
    for (const auto& y : cloud) {
      const Eigen::Vector3d grad = fn.gradient(y);
      const Eigen::Matrix3d h = fn.hessian(y);
      const double lap = h.trace();
      const double a = k2 * e * y[0];
      const double b = k3 * e * y[0];
      const double exact = lap + a * a * h(1, 1) + b * b * h(2, 2) + 2.0 * a * b * h(1, 2) -
                           2.0 * a * h(0, 1) - 2.0 * b * h(0, 2) -
                           e * (k2 * grad[1] + k3 * grad[2]);
      const double first = lap - e * (2.0 * y[0] * (k2 * h(0, 1) + k3 * h(0, 2)) +
                                      k2 * grad[1] + k3 * grad[2]);
      max_disc = std::max(max_disc, std::abs(exact - first));

      Eigen::Matrix3d g;
      g << 1.0 + a * a + b * b, a, b,
           a, 1.0, 0.0,
           b, 0.0, 1.0;
      rep.det_defect = std::max(rep.det_defect, std::abs(g.determinant() - 1.0));
    }
    rep.eps_values.push_back(e);
    rep.discrepancy.push_back(max_disc);
  }
  rep.slope = fit_loglog_slope(
      Eigen::Map<const Vector>(rep.eps_values.data(), static_cast<Eigen::Index>(rep.eps_values.size())),
      Eigen::Map<const Vector>(rep.discrepancy.data(), static_cast<Eigen::Index>(rep.discrepancy.size())));
  return rep;
}

SpikeAnsatz build_spike_ansatz(const WedgeDomain& dom, const RadialProfile& profile, double q,
                               double eps, const SpikeAnsatzOptions& opt) {
  require_on_edge(dom, q);
  if (!(eps > 0.0)) {
    throw ValidationError("spike ansatz: eps must be positive");
  }
  const WedgeConfig& cfg = dom.config;
  const double R = cfg.R_sector;

  double mu = opt.mu;
  if (mu == 0.0) {
    mu = opt.clip_at_caps ? 1.8 * std::min(R, 0.5 * cfg.L)
                          : 1.8 * std::min({R, q, cfg.L - q});
  }
  if (!(mu > 0.0)) {
    throw ValidationError("spike ansatz: cutoff diameter must be positive");
  }
  // The nodal field must vanish on the faces where the cutoff is relied on:
  // the support of phi_mu(|x - Q|) is the ball of radius mu / 2 around Q.
  const double slack = 1e-12 * std::max(1.0, mu);
  if (0.5 * mu > R + slack) {
    throw ValidationError("spike ansatz: cutoff support exceeds the sector radius");
  }
  if (!opt.clip_at_caps && (0.5 * mu > q + slack || 0.5 * mu > cfg.L - q + slack)) {
    throw ValidationError(
        "spike ansatz: cutoff support crosses an end cap; shrink mu or set clip_at_caps");
  }

  if (opt.enforce_resolution) {
    const double h_s = cfg.L / cfg.n_s;
    const double h_rho_near = R * (dom.rho_nodes[1] - dom.rho_nodes[0]);
    const double alpha_q = alpha_value(cfg, q);
    std::ostringstream msg;
    if (eps / h_s < 6.0) {
      msg << "spike ansatz: eps / h_s = " << eps / h_s << " < 6; refine n_s";
      throw SpikeTooCoarse(msg.str());
    }
    if (eps / h_rho_near < 6.0) {
      msg << "spike ansatz: eps / (R h_rho) = " << eps / h_rho_near << " < 6; refine n_rho";
      throw SpikeTooCoarse(msg.str());
    }
    if (cfg.n_t / alpha_q < 6.0) {
      msg << "spike ansatz: n_t / alpha(q) = " << cfg.n_t / alpha_q << " < 6; refine n_t";
      throw SpikeTooCoarse(msg.str());
    }
  }

  SpikeAnsatz ans;
  ans.q = q;
  ans.eps = eps;
  ans.mu = mu;
  ans.plateau_ok = mu / (4.0 * eps) > 5.0;
  ans.field = make_field(dom);
  ans.tangent = make_field(dom);

  // |x - Q| depends on (rho, s) only; fill one (rho, s) slab and copy in t.
  for (int i = 0; i <= cfg.n_rho; ++i) {
    const double rr = dom.rho_nodes[i] * R;
    for (int k = 0; k <= cfg.n_s; ++k) {
      const double ds = dom.s_nodes[k] - q;
      const double d = std::hypot(ds, rr);
      double val = 0.0;
      double tan = 0.0;
      const CutoffValue cut = cutoff_c2(d, mu);
      if (cut.phi > 0.0) {
        const ProfileValue u = evaluate_profile(profile, d / eps);
        val = cut.phi * u.u;
        if (d > 1e-14) {
          // d|x - Q|/dq = -(s - q)/|x - Q|; chain rule through cutoff and core.
          tan = (cut.dphi * u.u + cut.phi * u.du / eps) * (-ds / d);
        }
      }
      for (int j = 0; j <= cfg.n_t; ++j) {
        ans.field.values[ans.field.idx(i, j, k)] = val;
        ans.tangent.values[ans.tangent.idx(i, j, k)] = tan;
      }
    }
  }
  return ans;
}

}  // namespace edgespike
