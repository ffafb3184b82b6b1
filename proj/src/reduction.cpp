#include "edgespike/reduction.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "edgespike/errors.hpp"

namespace edgespike {

namespace {

constexpr double kPi = 3.14159265358979323846;

/// Index offsets of the 27-point nodal stencil, slot = (di+1)*9+(dj+1)*3+(dk+1).
struct StencilOffsets {
  std::array<int, 27> di{}, dj{}, dk{};
  constexpr StencilOffsets() {
    for (int s = 0; s < 27; ++s) {
      di[s] = s / 9 - 1;
      dj[s] = (s / 3) % 3 - 1;
      dk[s] = s % 3 - 1;
    }
  }
};
constexpr StencilOffsets kSten{};

void require_eps(double eps) {
  if (!(eps > 0.0)) throw ValidationError("reduction: eps must be positive");
}

/// Working data of the tangent-orthogonal subspace.
struct ProjectedSystem {
  const ReductionOperator& op;
  double eps;
  Vector tau;        ///< position tangent of the ansatz
  Vector tau_w;      ///< (Khat + Mhat) tau
  double tau_norm2;  ///< <tau, tau>_W

  /// P x: W-orthogonal projection onto the complement of tau.
  Vector project(const Vector& x) const { return x - tau * (tau_w.dot(x) / tau_norm2); }
  /// P' y: the adjoint, acting on gradient-type vectors.
  Vector project_t(const Vector& y) const { return y - tau_w * (tau.dot(y) / tau_norm2); }
};

/// Counts the negative directions of the projected Hessian pencil
/// (P' H P, W) on the tangent-orthogonal subspace by a Lanczos probe.
int projected_negative_count(const ProjectedSystem& ps, const Vector& u,
                             const AuxiliaryOptions& opt, int n_eig) {
  auto apply_a = [&](const Vector& x) {
    return ps.project_t(ps.op.hessian_apply(u, ps.project(x), ps.eps));
  };
  auto apply_m = [&](const Vector& x) { return ps.op.w_apply(x, ps.eps); };
  auto solve_m = [&](const Vector& r) {
    return ps.project(ps.op.w_solve(r, ps.eps, opt.cg_rel_tol, opt.max_minres));
  };
  const Vector theta = lanczos_lowest(apply_a, apply_m, solve_m, ps.op.size(), n_eig);
  int neg = 0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    if (theta[i] < -1e-6) ++neg;
  }
  return neg;
}

/// Failure diagnosis of the auxiliary Newton iteration: distinguishes an
/// unexpectedly indefinite projected Hessian (wrong basin or inadmissible
/// ansatz) from plain non-convergence.
[[noreturn]] void auxiliary_failure(const ProjectedSystem& ps, const Vector& u, double alpha_q,
                                    const AuxiliaryOptions& opt, const char* stage) {
  const int expected = alpha_q < kPi ? 1 : 2;
  const int neg = projected_negative_count(ps, u, opt, expected + 2);
  if (neg > expected) {
    std::ostringstream msg;
    msg << "auxiliary solve: projected Hessian has " << neg
        << " negative directions where at most " << expected << " are admissible";
    throw IndefiniteProjectedHessian(msg.str());
  }
  std::ostringstream msg;
  msg << "auxiliary solve: " << stage;
  throw NonConvergence(msg.str());
}

}  // namespace

ReductionOperator::ReductionOperator(const WedgeDomain& dom, double p) : p_(p) {
  if (!(p > 1.0) || !(p < 5.0)) {
    throw ValidationError("reduction: the exponent p must lie in (1, 5)");
  }
  n_rho_ = dom.config.n_rho;
  n_t_ = dom.config.n_t;
  n_s_ = dom.config.n_s;
  const Eigen::Index stride_j = n_s_ + 1;
  const Eigen::Index stride_i = static_cast<Eigen::Index>(n_t_ + 1) * stride_j;
  const Eigen::Index n_nodes = static_cast<Eigen::Index>(n_rho_ + 1) * stride_i;
  coef_ = Vector::Zero(n_nodes * 27);
  mass_ = Vector::Zero(n_nodes);

  // Gauss-2 abscissae as fractions of a cell; the hat shape values there.
  const double gf[2] = {0.5 * (1.0 - 1.0 / std::sqrt(3.0)), 0.5 * (1.0 + 1.0 / std::sqrt(3.0))};

  using Matrix8 = Eigen::Matrix<double, 8, 8>;
  using Vector8 = Eigen::Matrix<double, 8, 1>;
  using Matrix38 = Eigen::Matrix<double, 3, 8>;

  for (int ci = 0; ci < n_rho_; ++ci) {
    const double r0 = dom.rho_nodes[ci];
    const double dr = dom.rho_nodes[ci + 1] - r0;
    for (int cj = 0; cj < n_t_; ++cj) {
      const double t0 = dom.t_nodes[cj];
      const double dt = dom.t_nodes[cj + 1] - t0;
      for (int ck = 0; ck < n_s_; ++ck) {
        const double s0 = dom.s_nodes[ck];
        const double dsl = dom.s_nodes[ck + 1] - s0;
        const double w_cell = 0.125 * dr * dt * dsl;

        Matrix8 k_loc = Matrix8::Zero();
        Vector8 m_loc = Vector8::Zero();
        for (int ga = 0; ga < 2; ++ga) {
          const double vr[2] = {1.0 - gf[ga], gf[ga]};
          const double dvr[2] = {-1.0 / dr, 1.0 / dr};
          for (int gb = 0; gb < 2; ++gb) {
            const double vt[2] = {1.0 - gf[gb], gf[gb]};
            const double dvt[2] = {-1.0 / dt, 1.0 / dt};
            for (int gc = 0; gc < 2; ++gc) {
              const double vs[2] = {1.0 - gf[gc], gf[gc]};
              const double dvs[2] = {-1.0 / dsl, 1.0 / dsl};
              const MetricSample ms =
                  metric_at(dom, r0 + gf[ga] * dr, t0 + gf[gb] * dt, s0 + gf[gc] * dsl);
              Matrix38 b_mat;
              for (int l = 0; l < 8; ++l) {
                const int ar = l >> 2, at = (l >> 1) & 1, as = l & 1;
                b_mat(0, l) = dvr[ar] * vt[at] * vs[as];
                b_mat(1, l) = vr[ar] * dvt[at] * vs[as];
                b_mat(2, l) = vr[ar] * vt[at] * dvs[as];
                m_loc[l] += w_cell * ms.sqrt_g * vr[ar] * vt[at] * vs[as];
              }
              const Eigen::Matrix3d g_eff = ms.g_inv * (ms.sqrt_g * w_cell);
              k_loc.noalias() += b_mat.transpose() * (g_eff * b_mat);
            }
          }
        }

        for (int a = 0; a < 8; ++a) {
          const int ar = a >> 2, at = (a >> 1) & 1, as = a & 1;
          const Eigen::Index na =
              static_cast<Eigen::Index>(ci + ar) * stride_i + (cj + at) * stride_j + (ck + as);
          mass_[na] += m_loc[a];
          double* row = coef_.data() + na * 27;
          for (int b = 0; b < 8; ++b) {
            const int br = b >> 2, bt = (b >> 1) & 1, bs = b & 1;
            row[(br - ar + 1) * 9 + (bt - at + 1) * 3 + (bs - as + 1)] += k_loc(a, b);
          }
        }
      }
    }
  }

  k_diag_.resize(n_nodes);
  for (Eigen::Index n = 0; n < n_nodes; ++n) k_diag_[n] = coef_[n * 27 + 13];
}

Vector ReductionOperator::stiffness_apply(const Vector& x) const {
  if (x.size() != size()) throw ValidationError("stiffness_apply: field size mismatch");
  Vector y(size());
  const Eigen::Index sj = n_s_ + 1;
  const Eigen::Index si = static_cast<Eigen::Index>(n_t_ + 1) * sj;
  Eigen::Index off[27];
  for (int s = 0; s < 27; ++s) off[s] = kSten.di[s] * si + kSten.dj[s] * sj + kSten.dk[s];

  Eigen::Index n = 0;
  for (int i = 0; i <= n_rho_; ++i) {
    const bool ii = i > 0 && i < n_rho_;
    for (int j = 0; j <= n_t_; ++j) {
      const bool jj = ii && j > 0 && j < n_t_;
      for (int k = 0; k <= n_s_; ++k, ++n) {
        const double* c = coef_.data() + n * 27;
        double acc = 0.0;
        if (jj && k > 0 && k < n_s_) {
          for (int s = 0; s < 27; ++s) acc += c[s] * x[n + off[s]];
        } else {
          for (int s = 0; s < 27; ++s) {
            const int ni = i + kSten.di[s];
            const int nj = j + kSten.dj[s];
            const int nk = k + kSten.dk[s];
            if (ni < 0 || ni > n_rho_ || nj < 0 || nj > n_t_ || nk < 0 || nk > n_s_) continue;
            acc += c[s] * x[n + off[s]];
          }
        }
        y[n] = acc;
      }
    }
  }
  return y;
}

double ReductionOperator::energy(const Vector& u, double eps) const {
  require_eps(eps);
  if (u.size() != size()) throw ValidationError("energy: field size mismatch");
  const double eps3 = eps * eps * eps;
  const double quad = 0.5 * u.dot(stiffness_apply(u)) / eps;
  const double np1 = p_ + 1.0;
  const double nl =
      (mass_.array() * (0.5 * u.array().square() - u.array().abs().pow(np1) / np1)).sum();
  return quad + nl / eps3;
}

Vector ReductionOperator::gradient(const Vector& u, double eps) const {
  require_eps(eps);
  if (u.size() != size()) throw ValidationError("gradient: field size mismatch");
  const double eps3 = eps * eps * eps;
  Vector g = stiffness_apply(u) / eps;
  g.array() +=
      (mass_.array() / eps3) * (u.array() - u.array().abs().pow(p_ - 1.0) * u.array());
  return g;
}

Vector ReductionOperator::hessian_apply(const Vector& u, const Vector& v, double eps) const {
  require_eps(eps);
  if (u.size() != size() || v.size() != size()) {
    throw ValidationError("hessian_apply: field size mismatch");
  }
  const double eps3 = eps * eps * eps;
  Vector h = stiffness_apply(v) / eps;
  h.array() +=
      (mass_.array() / eps3) * (1.0 - p_ * u.array().abs().pow(p_ - 1.0)) * v.array();
  return h;
}

Vector ReductionOperator::w_apply(const Vector& x, double eps) const {
  require_eps(eps);
  if (x.size() != size()) throw ValidationError("w_apply: field size mismatch");
  const double eps3 = eps * eps * eps;
  Vector y = stiffness_apply(x) / eps;
  y.array() += (mass_.array() / eps3) * x.array();
  return y;
}

double ReductionOperator::w_inner(const Vector& x, const Vector& y, double eps) const {
  return x.dot(w_apply(y, eps));
}

double ReductionOperator::w_norm(const Vector& x, double eps) const {
  return std::sqrt(std::max(0.0, w_inner(x, x, eps)));
}

Vector ReductionOperator::w_solve(const Vector& b, double eps, double rel_tol,
                                  int max_iter) const {
  require_eps(eps);
  if (b.size() != size()) throw ValidationError("w_solve: field size mismatch");
  const double eps3 = eps * eps * eps;
  const Vector dinv = (k_diag_ / eps + mass_ / eps3).cwiseInverse();
  Vector x = Vector::Zero(b.size());
  const KrylovResult res =
      cg_solve([&](const Vector& v) { return w_apply(v, eps); },
               [&](const Vector& r) { return dinv.cwiseProduct(r).eval(); }, b, x, rel_tol,
               max_iter);
  if (!res.converged) {
    throw NonConvergence("w_solve: conjugate gradients did not reach tolerance");
  }
  return x;
}

double ReductionOperator::dual_norm(const Vector& g, double eps, double rel_tol) const {
  const Vector y = w_solve(g, eps, rel_tol);
  return std::sqrt(std::max(0.0, g.dot(y)));
}

Vector ansatz_residual(const WedgeDomain& dom, const RadialProfile& profile,
                       const SpikeAnsatz& ansatz, int n_gauss) {
  const double eps = ansatz.eps;
  require_eps(eps);
  if (n_gauss < 2 || n_gauss > 12) {
    throw ValidationError("ansatz_residual: n_gauss must lie in [2, 12]");
  }
  const int n_rho = dom.config.n_rho, n_t = dom.config.n_t, n_s = dom.config.n_s;
  if (ansatz.field.n_rho != n_rho || ansatz.field.n_t != n_t || ansatz.field.n_s != n_s) {
    throw ValidationError("ansatz_residual: ansatz does not match the domain grid");
  }
  const double R = dom.config.R_sector;
  const double q = ansatz.q;
  const double support = 0.5 * ansatz.mu;  ///< cutoff support radius around the spike
  const double inv_eps = 1.0 / eps;
  const double inv_eps3 = inv_eps * inv_eps * inv_eps;
  const double p = profile.p;

  Vector gx, gw;
  gauss_legendre_ab(n_gauss, 0.0, 1.0, gx, gw);

  const Eigen::Index stride_j = n_s + 1;
  const Eigen::Index stride_i = static_cast<Eigen::Index>(n_t + 1) * stride_j;
  Vector r = Vector::Zero(ansatz.field.size());

  for (int ci = 0; ci < n_rho; ++ci) {
    const double r0 = dom.rho_nodes[ci];
    const double dr = dom.rho_nodes[ci + 1] - r0;
    for (int ck = 0; ck < n_s; ++ck) {
      const double s0 = dom.s_nodes[ck];
      const double dsl = dom.s_nodes[ck + 1] - s0;
      // Distance to the spike is t-independent; the closest point of the
      // (rho, s) cell rectangle decides whether the cutoff support touches it.
      const double ds_min = std::max({0.0, s0 - q, q - (s0 + dsl)});
      if (std::sqrt(ds_min * ds_min + r0 * r0 * R * R) >= support) continue;

      for (int cj = 0; cj < n_t; ++cj) {
        const double t0 = dom.t_nodes[cj];
        const double dt = dom.t_nodes[cj + 1] - t0;

        double r_loc[8] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
        for (int ga = 0; ga < n_gauss; ++ga) {
          const double rho = r0 + gx[ga] * dr;
          const double vr[2] = {1.0 - gx[ga], gx[ga]};
          const double dvr[2] = {-1.0 / dr, 1.0 / dr};
          for (int gc = 0; gc < n_gauss; ++gc) {
            const double s = s0 + gx[gc] * dsl;
            const double vs[2] = {1.0 - gx[gc], gx[gc]};
            const double dvs[2] = {-1.0 / dsl, 1.0 / dsl};

            const double dist = std::sqrt((s - q) * (s - q) + rho * rho * R * R);
            if (dist >= support) continue;
            const auto cut = cutoff_c2(dist, ansatz.mu);
            const ProfileValue pv = evaluate_profile(profile, dist * inv_eps);
            const double u_val = cut.phi * pv.u;
            const double du_dd = cut.dphi * pv.u + cut.phi * pv.du * inv_eps;
            double grad_rho = 0.0, grad_s = 0.0;
            if (dist > 1e-14) {
              grad_rho = du_dd * rho * R * R / dist;
              grad_s = du_dd * (s - q) / dist;
            }
            const double force = u_val - std::pow(std::abs(u_val), p - 1.0) * u_val;

            for (int gb = 0; gb < n_gauss; ++gb) {
              const double t = t0 + gx[gb] * dt;
              const double vt[2] = {1.0 - gx[gb], gx[gb]};
              const double dvt[2] = {-1.0 / dt, 1.0 / dt};
              const MetricSample ms = metric_at(dom, rho, t, s);
              const double w_pt = gw[ga] * gw[gb] * gw[gc] * dr * dt * dsl * ms.sqrt_g;

              // g^{-1} grad(u) at this point; the ansatz has no t-component.
              const Eigen::Vector3d flux =
                  ms.g_inv * Eigen::Vector3d(grad_rho, 0.0, grad_s) * (w_pt * inv_eps);
              const double f_w = force * w_pt * inv_eps3;
              for (int l = 0; l < 8; ++l) {
                const int ar = l >> 2, at = (l >> 1) & 1, as = l & 1;
                r_loc[l] += flux[0] * dvr[ar] * vt[at] * vs[as] +
                            flux[1] * vr[ar] * dvt[at] * vs[as] +
                            flux[2] * vr[ar] * vt[at] * dvs[as] +
                            f_w * vr[ar] * vt[at] * vs[as];
              }
            }
          }
        }

        for (int a = 0; a < 8; ++a) {
          const int ar = a >> 2, at = (a >> 1) & 1, as = a & 1;
          r[static_cast<Eigen::Index>(ci + ar) * stride_i + (cj + at) * stride_j + (ck + as)] +=
              r_loc[a];
        }
      }
    }
  }
  return r;
}

AuxiliarySolution solve_auxiliary(const ReductionOperator& op, const WedgeDomain& dom,
                                  const SpikeAnsatz& ansatz, const AuxiliaryOptions& opt) {
  const double eps = ansatz.eps;
  require_eps(eps);
  if (ansatz.field.values.size() != op.size()) {
    throw ValidationError("solve_auxiliary: ansatz does not match the operator grid");
  }
  const Vector& u0 = ansatz.field.values;

  ProjectedSystem ps{op, eps, ansatz.tangent.values, Vector(), 0.0};
  ps.tau_w = op.w_apply(ps.tau, eps);
  ps.tau_norm2 = ps.tau.dot(ps.tau_w);
  if (!(ps.tau_norm2 > 0.0)) {
    throw ValidationError("solve_auxiliary: the ansatz position tangent vanishes");
  }

  const double eps3 = eps * eps * eps;
  const Vector dinv = (op.stiffness_diagonal() / eps + op.lumped_mass() / eps3).cwiseInverse();
  auto cheap_merit = [&](const Vector& gp) {
    return std::sqrt(std::max(0.0, gp.dot(dinv.cwiseProduct(gp))));
  };

  AuxiliarySolution out;
  out.sample.q = ansatz.q;
  out.sample.eps = eps;
  out.sample.alpha_q = angle_at(dom, ansatz.q);
  out.sample.energy_ansatz = op.energy(u0, eps);

  Vector w = Vector::Zero(op.size());
  Vector u = u0;
  Vector g = op.gradient(u, eps);
  out.sample.residual_norm = op.dual_norm(g, eps, opt.cg_rel_tol);

  if (opt.inertia_probe) {
    const int expected = out.sample.alpha_q < kPi ? 1 : 2;
    const int neg = projected_negative_count(ps, u, opt, expected + 2);
    if (neg > expected) {
      std::ostringstream msg;
      msg << "auxiliary solve: projected Hessian has " << neg
          << " negative directions where at most " << expected << " are admissible";
      throw IndefiniteProjectedHessian(msg.str());
    }
  }

  auto apply_h_proj = [&](const Vector& x) {
    return ps.project_t(op.hessian_apply(u, ps.project(x), eps));
  };
  auto precond = [&](const Vector& r) {
    return ps.project(dinv.cwiseProduct(ps.project_t(r)).eval());
  };

  Vector gp = ps.project_t(g);
  double merit = cheap_merit(gp);
  bool converged = false;
  double dual0 = 0.0;
  for (int iter = 0; iter <= opt.max_newton; ++iter) {
    // The dual norm only steers the iteration, so a loose W-inverse suffices.
    const double dual = op.dual_norm(gp, eps, std::max(opt.cg_rel_tol, 1e-4));
    if (iter == 0) dual0 = dual;
    if (dual <= opt.newton_tol) {
      converged = true;
      break;
    }
    if (iter == opt.max_newton) break;

    // Eisenstat-Walker style forcing: loose solves far from the root.
    const double eta =
        std::max(opt.minres_rel_tol, std::min(1e-2, 0.1 * dual / std::max(dual0, 1e-300)));
    Vector d = Vector::Zero(op.size());
    const KrylovResult lin =
        minres_solve(apply_h_proj, precond, (-gp).eval(), d, eta, opt.max_minres);
    if (!lin.converged && lin.rel_residual > 1e-2) {
      auxiliary_failure(ps, u, out.sample.alpha_q, opt, "projected linear solve stalled");
    }
    d = ps.project(d);

    double step = 1.0;
    bool accepted = false;
    for (int bt = 0; bt <= opt.max_backtrack; ++bt) {
      Vector w_try = ps.project(w + step * d);
      Vector u_try = u0 + w_try;
      Vector g_try = op.gradient(u_try, eps);
      Vector gp_try = ps.project_t(g_try);
      const double merit_try = cheap_merit(gp_try);
      if (merit_try < merit) {
        w = std::move(w_try);
        u = std::move(u_try);
        g = std::move(g_try);
        gp = std::move(gp_try);
        merit = merit_try;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      auxiliary_failure(ps, u, out.sample.alpha_q, opt, "residual line search stalled");
    }
    out.newton_iterations = iter + 1;
  }
  if (!converged) {
    auxiliary_failure(ps, u, out.sample.alpha_q, opt, "Newton iteration did not reach tolerance");
  }

  out.w = ansatz.field;
  out.w.values = w;
  out.sample.energy_reduced = op.energy(u, eps);
  out.sample.w_norm = op.w_norm(w, eps);
  const double tau_norm = std::sqrt(ps.tau_norm2);
  out.orthogonality =
      out.sample.w_norm > 0.0 ? std::abs(ps.tau_w.dot(w)) / (out.sample.w_norm * tau_norm) : 0.0;
  return out;
}

AuxiliarySolution solve_auxiliary(const WedgeDomain& dom, const RadialProfile& profile, double q,
                                  double eps, const AuxiliaryOptions& opt) {
  const SpikeAnsatz ansatz = build_spike_ansatz(dom, profile, q, eps, opt.ansatz);
  const ReductionOperator op(dom, profile.p);
  return solve_auxiliary(op, dom, ansatz, opt);
}

std::vector<ReducedEnergySample> pseudo_criticality_sweep(const WedgeDomain& dom,
                                                          const RadialProfile& profile, double q,
                                                          const std::vector<double>& eps_list,
                                                          const AuxiliaryOptions& opt) {
  if (eps_list.empty()) throw ValidationError("pseudo_criticality_sweep: eps list is empty");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0)) {
      throw ValidationError("pseudo_criticality_sweep: eps values must be positive");
    }
    if (i > 0 && !(eps_list[i] < eps_list[i - 1])) {
      throw ValidationError("pseudo_criticality_sweep: eps list must be strictly decreasing");
    }
  }
  const ReductionOperator op(dom, profile.p);
  std::vector<ReducedEnergySample> rows;
  rows.reserve(eps_list.size());
  for (const double eps : eps_list) {
    const SpikeAnsatz ansatz = build_spike_ansatz(dom, profile, q, eps, opt.ansatz);
    ReducedEnergySample row;
    row.q = q;
    row.eps = eps;
    row.alpha_q = angle_at(dom, q);
    row.energy_ansatz = op.energy(ansatz.field.values, eps);
    row.energy_reduced = row.energy_ansatz;
    row.residual_norm = op.dual_norm(ansatz_residual(dom, profile, ansatz), eps, opt.cg_rel_tol);
    row.w_norm = 0.0;
    rows.push_back(row);
  }
  return rows;
}

std::vector<ReducedProfilePoint> reduced_energy_profile(const WedgeDomain& dom,
                                                        const RadialProfile& profile, double eps,
                                                        const Vector& q_samples,
                                                        const AuxiliaryOptions& opt) {
  require_eps(eps);
  if (q_samples.size() == 0) {
    throw ValidationError("reduced_energy_profile: no edge positions given");
  }
  const ReductionOperator op(dom, profile.p);
  std::vector<ReducedProfilePoint> points;
  points.reserve(static_cast<std::size_t>(q_samples.size()));
  for (Eigen::Index i = 0; i < q_samples.size(); ++i) {
    const double q = q_samples[i];
    ReducedProfilePoint pt;
    pt.sample.q = q;
    pt.sample.eps = eps;
    try {
      pt.sample.alpha_q = angle_at(dom, q);
      const SpikeAnsatz ansatz = build_spike_ansatz(dom, profile, q, eps, opt.ansatz);
      const AuxiliarySolution aux = solve_auxiliary(op, dom, ansatz, opt);
      pt.sample = aux.sample;
      pt.solved = true;
    } catch (const Error& err) {
      pt.solved = false;
      pt.failure = err.what();
    }
    points.push_back(std::move(pt));
  }
  return points;
}

SolveReport solve_full(const WedgeDomain& dom, const RadialProfile& profile, double eps,
                       const ScalarField& initial, const FullSolveOptions& opt) {
  require_eps(eps);
  const ReductionOperator op(dom, profile.p);
  if (initial.values.size() != op.size()) {
    throw ValidationError("solve_full: initial field does not match the domain grid");
  }
  const double eps3 = eps * eps * eps;
  const double collapse_floor = 0.1 * profile.shoot_u0;
  const double tiny = 1e-300;

  SolveReport rep;
  rep.u = initial;
  Vector u = initial.values;
  Vector g = op.gradient(u, eps);

  double dual0 = 0.0;
  for (int iter = 0; iter <= opt.max_newton; ++iter) {
    if (u.cwiseAbs().maxCoeff() < collapse_floor) {
      throw CollapseToZero("solve_full: the iterate collapsed toward the trivial solution");
    }
    rep.iterations = iter;
    rep.residual_norm = op.dual_norm(g, eps, 1e-4);
    if (iter == 0) dual0 = rep.residual_norm;
    if (rep.residual_norm <= opt.newton_tol) {
      rep.converged = true;
      break;
    }
    if (iter == opt.max_newton) break;

    // Absolute-value Jacobi preconditioner of the (indefinite) Hessian.
    Vector habs = (op.stiffness_diagonal() / eps).array() +
                  (op.lumped_mass().array() / eps3) *
                      (1.0 - op.p_exponent() * u.array().abs().pow(op.p_exponent() - 1.0));
    const Vector dinv = habs.cwiseAbs().cwiseMax(tiny).cwiseInverse();
    auto cheap_merit = [&](const Vector& grad) {
      return std::sqrt(std::max(0.0, grad.dot(dinv.cwiseProduct(grad))));
    };

    const double eta = std::max(
        opt.minres_rel_tol,
        std::min(1e-2, 0.1 * rep.residual_norm / std::max(dual0, 1e-300)));
    Vector d = Vector::Zero(op.size());
    const KrylovResult lin = minres_solve(
        [&](const Vector& v) { return op.hessian_apply(u, v, eps); },
        [&](const Vector& r) { return dinv.cwiseProduct(r).eval(); }, (-g).eval(), d,
        eta, opt.max_minres);
    if (!lin.converged && lin.rel_residual > 1e-2) {
      throw NonConvergence("solve_full: linear solver stalled");
    }

    const double merit = cheap_merit(g);
    double step = 1.0;
    bool accepted = false;
    for (int bt = 0; bt <= opt.max_backtrack; ++bt) {
      Vector u_try = u + step * d;
      Vector g_try = op.gradient(u_try, eps);
      if (cheap_merit(g_try) < merit) {
        u = std::move(u_try);
        g = std::move(g_try);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      throw NonConvergence("solve_full: residual line search stalled");
    }
  }

  rep.u.values = u;
  rep.energy = op.energy(u, eps);
  const double top = u.maxCoeff();
  const double bottom = u.minCoeff();
  rep.spike_height = top;

  // |u|^{p+1} mass centroid along the edge.
  const double np1 = op.p_exponent() + 1.0;
  double mom = 0.0, tot = 0.0;
  Eigen::Index n = 0;
  for (int i = 0; i <= dom.config.n_rho; ++i) {
    for (int j = 0; j <= dom.config.n_t; ++j) {
      for (int k = 0; k <= dom.config.n_s; ++k, ++n) {
        const double wgt = op.lumped_mass()[n] * std::pow(std::abs(u[n]), np1);
        mom += wgt * dom.s_nodes[k];
        tot += wgt;
      }
    }
  }
  rep.spike_center = tot > 0.0 ? mom / tot : 0.0;

  if (top - bottom < 0.05 * std::max(std::abs(top), std::abs(bottom))) {
    rep.basin = "constant";
  } else if (top > 0.5 * profile.shoot_u0) {
    rep.basin = "spike";
  } else {
    rep.basin = "other";
  }
  return rep;
}

}  // namespace edgespike
