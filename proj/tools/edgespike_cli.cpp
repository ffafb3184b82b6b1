/// Command-line front end: reproducible experiments over the library's four
/// numeric layers (radial ground state, cone spectrum, wedge geometry,
/// reduction), emitting CSV/JSON tables and binary field files.
///
/// Exit codes: 0 success, 1 validation problem, 2 solver failure,
/// 3 degenerate-basin outcome (collapse to zero or a non-spike basin).

#include <cstdio>
#include <cstdlib>
#include <cxxabi.h>
#include <filesystem>
#include <string>
#include <typeinfo>
#include <vector>

#include <CLI11.hpp>

#include "edgespike/errors.hpp"
#include "edgespike/io.hpp"
#include "edgespike/radial.hpp"
#include "edgespike/reduction.hpp"
#include "edgespike/wedge.hpp"

namespace {

using namespace edgespike;

/// Unqualified dynamic type name of an error, for the machine-readable report.
std::string error_type(const std::exception& e) {
  int status = 0;
  char* dem = abi::__cxa_demangle(typeid(e).name(), nullptr, nullptr, &status);
  std::string name = (status == 0 && dem) ? dem : typeid(e).name();
  std::free(dem);
  const auto pos = name.rfind("::");
  if (pos != std::string::npos) name = name.substr(pos + 2);
  return name;
}

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  double p = 0.0;
  double alpha = 0.0;
  double eps = 0.0;
  bool has_p = false, has_alpha = false, has_eps = false;
};

RunConfig make_config(const CommonArgs& args) {
  RunConfig cfg = args.config_path.empty() ? RunConfig{} : load_config(args.config_path);
  if (args.has_p) cfg.p = args.p;
  if (args.has_alpha) {
    cfg.alpha = args.alpha;
    cfg.alpha_list.clear();
  }
  if (args.has_eps) cfg.eps = args.eps;
  return cfg;
}

std::string out_path(const CommonArgs& args, const std::string& name) {
  std::filesystem::create_directories(args.out_dir);
  return (std::filesystem::path(args.out_dir) / name).string();
}

AuxiliaryOptions auxiliary_options(const RunConfig& cfg) {
  AuxiliaryOptions opt;
  opt.newton_tol = cfg.newton_tol;
  opt.ansatz.mu = cfg.mu;
  opt.ansatz.clip_at_caps = cfg.clip_at_caps;
  return opt;
}

int run_ground_state(const CommonArgs& args) {
  const RunConfig cfg = make_config(args);
  const RadialProfile profile = solve_ground_state(ground_state_options(cfg));
  write_profile_csv(out_path(args, "ground_state.csv"), profile, cfg);
  write_profile_sidecar(out_path(args, "ground_state.json"), profile, cfg);
  return 0;
}

int run_c0(const CommonArgs& args) {
  const RunConfig cfg = make_config(args);
  const RadialProfile profile = solve_ground_state(ground_state_options(cfg));
  const EnergyCoefficients coef = compute_energy_coefficients(profile);
  write_energy_coefficients_json(out_path(args, "c0.json"), coef, cfg);
  return 0;
}

int run_cone_spectrum(const CommonArgs& args) {
  const RunConfig cfg = make_config(args);
  const RadialProfile profile = solve_ground_state(ground_state_options(cfg));
  ConeSpectrumOptions opt;
  opt.m_max = cfg.m_max;
  opt.j_max = cfg.j_max;
  const std::vector<double> angles =
      cfg.alpha_list.empty() ? std::vector<double>{cfg.alpha} : cfg.alpha_list;
  std::vector<ConeSpectrumReport> reports;
  reports.reserve(angles.size());
  for (const double alpha : angles) {
    reports.push_back(assemble_cone_spectrum(profile, alpha, opt));
  }
  write_cone_csv(out_path(args, "cone_spectrum.csv"), reports, cfg);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    write_cone_json(out_path(args, "cone_spectrum_" + std::to_string(i) + ".json"), reports[i],
                    cfg);
  }
  return 0;
}

int run_reduce(const CommonArgs& args) {
  const RunConfig cfg = make_config(args);
  const RadialProfile profile = solve_ground_state(ground_state_options(cfg));
  const EnergyCoefficients coef = compute_energy_coefficients(profile);
  const WedgeDomain dom = build_domain(wedge_config(cfg));

  double q_min = cfg.q_min, q_max = cfg.q_max;
  if (q_min == 0.0 && q_max == 0.0) {
    q_min = 0.3 * cfg.L;
    q_max = 0.7 * cfg.L;
  }
  if (!(q_min < q_max) || cfg.q_count < 2) {
    throw ValidationError("reduce: need q_min < q_max and q_count >= 2");
  }
  const Vector q_samples = Vector::LinSpaced(cfg.q_count, q_min, q_max);

  const std::vector<ReducedProfilePoint> points =
      reduced_energy_profile(dom, profile, cfg.eps, q_samples, auxiliary_options(cfg));
  std::vector<ReducedEnergySample> rows;
  for (const ReducedProfilePoint& pt : points) {
    if (pt.solved) rows.push_back(pt.sample);
  }
  write_samples_csv(out_path(args, "reduce.csv"), rows, cfg);
  const ProfileFit fit = fit_reduced_profile(points, coef.c0);
  write_profile_fit_json(out_path(args, "reduce.json"), fit, cfg);
  return 0;
}

int run_sweep(const CommonArgs& args) {
  const RunConfig cfg = make_config(args);
  const RadialProfile profile = solve_ground_state(ground_state_options(cfg));
  const WedgeDomain dom = build_domain(wedge_config(cfg));
  const std::vector<ReducedEnergySample> rows =
      pseudo_criticality_sweep(dom, profile, cfg.q, cfg.eps_list, auxiliary_options(cfg));
  write_samples_csv(out_path(args, "sweep.csv"), rows, cfg);
  return 0;
}

int run_solve(const CommonArgs& args) {
  const RunConfig cfg = make_config(args);
  const RadialProfile profile = solve_ground_state(ground_state_options(cfg));
  const WedgeConfig wcfg = wedge_config(cfg);
  const WedgeDomain dom = build_domain(wcfg);
  SpikeAnsatzOptions aopt;
  aopt.mu = cfg.mu;
  aopt.clip_at_caps = cfg.clip_at_caps;
  const SpikeAnsatz ansatz = build_spike_ansatz(dom, profile, cfg.q, cfg.eps, aopt);
  FullSolveOptions sopt;
  sopt.newton_tol = cfg.newton_tol;
  const SolveReport report = solve_full(dom, profile, cfg.eps, ansatz.field, sopt);
  write_solve_json(out_path(args, "solve.json"), report, cfg);
  write_field_binary(out_path(args, "solve_field.bin"), report.u, wcfg);
  write_field_csv(out_path(args, "solve_field.csv"), dom, report.u, cfg);
  return report.basin == "spike" ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edgespike: spike concentration along domain edges in the singularly "
               "perturbed Neumann problem  -eps^2 Laplace(u) + u = u^p"};
  app.require_subcommand(1);

  CommonArgs args;
  struct SubSpec {
    CLI::App* sub = nullptr;
    CLI::Option* po = nullptr;
    CLI::Option* ao = nullptr;
    CLI::Option* eo = nullptr;
    int (*fn)(const CommonArgs&) = nullptr;
  };
  std::vector<SubSpec> specs;

  const auto add_sub = [&](const char* name, const char* help, bool with_alpha, bool with_eps,
                           int (*fn)(const CommonArgs&)) {
    SubSpec spec;
    spec.sub = app.add_subcommand(name, help);
    spec.sub->add_option("--config", args.config_path, "key=value config file");
    spec.sub->add_option("--out", args.out_dir, "output directory (created if missing)");
    spec.po = spec.sub->add_option("--p", args.p, "override the nonlinearity exponent");
    if (with_alpha) {
      spec.ao = spec.sub->add_option("--alpha", args.alpha, "override the opening angle");
    }
    if (with_eps) {
      spec.eo = spec.sub->add_option("--eps", args.eps, "override the concentration parameter");
    }
    spec.fn = fn;
    specs.push_back(spec);
  };

  add_sub("ground-state", "radial ground-state profile of the limit equation", false, false,
          run_ground_state);
  add_sub("c0", "reduced-energy constant from radial quadratures", false, false, run_c0);
  add_sub("cone-spectrum", "linearized spectrum on the model cone", true, false,
          run_cone_spectrum);
  add_sub("reduce", "reduced energy along the edge at fixed eps", false, true, run_reduce);
  add_sub("sweep", "pseudo-criticality residual over an eps ladder", false, true, run_sweep);
  add_sub("solve", "full Newton solve from the spike ansatz", false, true, run_solve);

  CLI11_PARSE(app, argc, argv);

  const SubSpec* active = nullptr;
  for (const SubSpec& spec : specs) {
    if (spec.sub->parsed()) {
      active = &spec;
      break;
    }
  }
  if (active == nullptr) {
    std::fputs(error_json("ValidationError", "no subcommand given").c_str(), stdout);
    return 1;
  }
  args.has_p = active->po != nullptr && active->po->count() > 0;
  args.has_alpha = active->ao != nullptr && active->ao->count() > 0;
  args.has_eps = active->eo != nullptr && active->eo->count() > 0;

  try {
    return active->fn(args);
  } catch (const CollapseToZero& e) {
    std::fputs(error_json(error_type(e), e.what()).c_str(), stdout);
    return 3;
  } catch (const ValidationError& e) {
    std::fputs(error_json(error_type(e), e.what()).c_str(), stdout);
    return 1;
  } catch (const IoError& e) {
    std::fputs(error_json(error_type(e), e.what()).c_str(), stdout);
    return 1;
  } catch (const SolverError& e) {
    std::fputs(error_json(error_type(e), e.what()).c_str(), stdout);
    return 2;
  } catch (const std::exception& e) {
    std::fputs(error_json(error_type(e), e.what()).c_str(), stdout);
    return 2;
  }
}
