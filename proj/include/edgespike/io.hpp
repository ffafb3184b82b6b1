#pragma once

/// Serialization of the laboratory's artifacts:
///  - plain-text key=value run configs (unknown keys rejected),
///  - UTF-8 CSV tables whose leading `# key=value` comment lines embed the
///    full resolved config,
///  - JSON reports, pretty-printed with sorted keys, also embedding the
///    resolved config,
///  - a raw little-endian binary format for 3D nodal fields (8-double header,
///    documented byte-exactly in FORMATS.md).
///
/// Every writer is deterministic: the same inputs produce identical bytes.

#include <map>
#include <string>
#include <vector>

#include "edgespike/cone_spectrum.hpp"
#include "edgespike/radial.hpp"
#include "edgespike/reduction.hpp"
#include "edgespike/wedge.hpp"

namespace edgespike {

/// Full parameter set of a run.  Every key has a default, so a config file
/// only states what differs from it.
struct RunConfig {
  // ground-state profile
  double p = 3.0;
  double r_max = 30.0;
  double res_tol = 1e-10;
  // wedge geometry
  double alpha_base = 1.5707963267948966;
  double alpha_amp = 0.0;
  std::string alpha_mode = "cos";  ///< "cos" | "linear"
  double L = 1.0;
  double R_sector = 0.5;
  int n_rho = 16;
  int n_t = 8;
  int n_s = 16;
  // spike ansatz and reduction
  double eps = 0.1;
  double q = 0.5;   ///< edge position of the ansatz (solve, sweep)
  double mu = 0.0;  ///< cutoff plateau scale; 0 selects the automatic choice
  bool clip_at_caps = false;
  double newton_tol = 1e-9;
  double q_min = 0.0;  ///< reduce: first edge position (0 = derived)
  double q_max = 0.0;  ///< reduce: last edge position (0 = derived)
  int q_count = 9;     ///< reduce: number of edge positions
  std::vector<double> eps_list = {0.2, 0.1, 0.05};  ///< sweep ladder
  // cone spectrum
  double alpha = 1.5707963267948966;  ///< single opening angle
  std::vector<double> alpha_list;     ///< optional angle sweep (cone-spectrum)
  int m_max = 3;
  int j_max = 3;
};

/// Parse `key = value` lines; blank lines and lines starting with '#' are
/// ignored, later assignments override earlier ones.  Unknown keys and
/// malformed values throw ValidationError.
RunConfig parse_config_text(const std::string& text);

/// Read and parse a config file.  Throws IoError when the file cannot be
/// read, ValidationError on content problems.
RunConfig load_config(const std::string& path);

/// Every setting as sorted key -> printed-value pairs: the provenance block
/// embedded into all output files.
std::map<std::string, std::string> resolved_config(const RunConfig& cfg);

/// Translate the wedge-related settings (ValidationError on a bad mode name).
WedgeConfig wedge_config(const RunConfig& cfg);

/// Translate the ground-state settings.
GroundStateOptions ground_state_options(const RunConfig& cfg);

/// Shortest decimal form of x that parses back to the same double.
std::string format_double(double x);

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// A parsed CSV file: leading '#' comment lines (stripped of the marker),
/// the header row, and numeric data rows.
struct CsvTable {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Strict reader for the tables this library writes.  Throws IoError on
/// missing files, ragged rows, or non-numeric cells.
CsvTable read_csv(const std::string& path);

/// Ground-state profile table `r,u,du`, one row per node.
void write_profile_csv(const std::string& path, const RadialProfile& profile,
                       const RunConfig& cfg);

/// Ground-state JSON sidecar {p, shoot_u0, c_decay, R_max, res_tol, ...}.
void write_profile_sidecar(const std::string& path, const RadialProfile& profile,
                           const RunConfig& cfg);

/// Energy-coefficient report: both quadrature forms of the reduced-energy
/// constant side by side (c0 and c0_printed_form disagree by construction;
/// see FORMATS.md).
void write_energy_coefficients_json(const std::string& path, const EnergyCoefficients& coef,
                                    const RunConfig& cfg);

/// Cone spectrum table `alpha,m,j,lambda_ang,sigma`, one row per mode, one
/// block per report, sorted as the reports are given.
void write_cone_csv(const std::string& path, const std::vector<ConeSpectrumReport>& reports,
                    const RunConfig& cfg);

/// Cone spectrum JSON report for a single opening angle.
void write_cone_json(const std::string& path, const ConeSpectrumReport& report,
                     const RunConfig& cfg);

/// Reduction table `Q,eps,alpha_Q,energy_ansatz,energy_reduced,residual_norm,w_norm`.
void write_samples_csv(const std::string& path, const std::vector<ReducedEnergySample>& rows,
                       const RunConfig& cfg);

/// Least-squares line of energy_reduced against alpha_Q.
struct ProfileFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double c0 = 0.0;          ///< reference constant from the radial quadratures
  double slope_over_c0 = 0.0;
  int points_used = 0;
  int points_failed = 0;
};

ProfileFit fit_reduced_profile(const std::vector<ReducedProfilePoint>& points, double c0);

/// Reduce-command JSON report: the regression of the reduced energy against
/// the local opening angle.
void write_profile_fit_json(const std::string& path, const ProfileFit& fit,
                            const RunConfig& cfg);

/// Full-solve JSON report.
void write_solve_json(const std::string& path, const SolveReport& report, const RunConfig& cfg);

/// Machine-readable error report {error: {type, message}}; returned by the
/// CLI on its failure paths.
std::string error_json(const std::string& type, const std::string& message);

// ---------------------------------------------------------------------------
// Binary field format
// ---------------------------------------------------------------------------

/// 8-double header of the field format, in file order.
struct FieldHeader {
  double version = 1.0;
  double n_rho = 0;
  double n_t = 0;
  double n_s = 0;
  double L = 0;
  double R_sector = 0;
  double alpha_base = 0;
  double alpha_amp = 0;
};

/// Write header + nodal values (row-major: rho slowest, s fastest) as raw
/// little-endian doubles.
void write_field_binary(const std::string& path, const ScalarField& field,
                        const WedgeConfig& cfg);

/// Read a field written by write_field_binary.  Throws IoError on a size or
/// version mismatch.
std::pair<FieldHeader, ScalarField> read_field_binary(const std::string& path);

/// Nodal table `rho,t,s,value` over the full grid.
void write_field_csv(const std::string& path, const WedgeDomain& dom, const ScalarField& field,
                     const RunConfig& cfg);

}  // namespace edgespike
