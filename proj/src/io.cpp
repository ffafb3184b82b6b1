#include "edgespike/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "edgespike/errors.hpp"

namespace edgespike {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v.empty()) throw ValidationError("config: empty value for key '" + key + "'");
  errno = 0;
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size() || errno == ERANGE) {
    throw ValidationError("config: key '" + key + "' has a malformed number '" + v + "'");
  }
  return x;
}

int parse_int(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v.empty()) throw ValidationError("config: empty value for key '" + key + "'");
  errno = 0;
  char* end = nullptr;
  const long x = std::strtol(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size() || errno == ERANGE || x < -1000000000L || x > 1000000000L) {
    throw ValidationError("config: key '" + key + "' has a malformed integer '" + v + "'");
  }
  return static_cast<int>(x);
}

bool parse_bool(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ValidationError("config: key '" + key + "' expects true/false, got '" + v + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  if (out.empty()) throw ValidationError("config: empty list for key '" + key + "'");
  return out;
}

std::string join_list(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    out += format_double(xs[i]);
  }
  return out;
}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;
  static const std::map<std::string, Setter> setters = {
      {"p", [](RunConfig& c, const std::string& k, const std::string& v) { c.p = parse_double(k, v); }},
      {"r_max", [](RunConfig& c, const std::string& k, const std::string& v) { c.r_max = parse_double(k, v); }},
      {"res_tol", [](RunConfig& c, const std::string& k, const std::string& v) { c.res_tol = parse_double(k, v); }},
      {"alpha_base", [](RunConfig& c, const std::string& k, const std::string& v) { c.alpha_base = parse_double(k, v); }},
      {"alpha_amp", [](RunConfig& c, const std::string& k, const std::string& v) { c.alpha_amp = parse_double(k, v); }},
      {"alpha_mode",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         const std::string m = trim(v);
         if (m != "cos" && m != "linear") {
           throw ValidationError("config: key '" + k + "' expects cos or linear, got '" + m + "'");
         }
         c.alpha_mode = m;
       }},
      {"L", [](RunConfig& c, const std::string& k, const std::string& v) { c.L = parse_double(k, v); }},
      {"R_sector", [](RunConfig& c, const std::string& k, const std::string& v) { c.R_sector = parse_double(k, v); }},
      {"n_rho", [](RunConfig& c, const std::string& k, const std::string& v) { c.n_rho = parse_int(k, v); }},
      {"n_t", [](RunConfig& c, const std::string& k, const std::string& v) { c.n_t = parse_int(k, v); }},
      {"n_s", [](RunConfig& c, const std::string& k, const std::string& v) { c.n_s = parse_int(k, v); }},
      {"eps", [](RunConfig& c, const std::string& k, const std::string& v) { c.eps = parse_double(k, v); }},
      {"q", [](RunConfig& c, const std::string& k, const std::string& v) { c.q = parse_double(k, v); }},
      {"mu", [](RunConfig& c, const std::string& k, const std::string& v) { c.mu = parse_double(k, v); }},
      {"clip_at_caps", [](RunConfig& c, const std::string& k, const std::string& v) { c.clip_at_caps = parse_bool(k, v); }},
      {"newton_tol", [](RunConfig& c, const std::string& k, const std::string& v) { c.newton_tol = parse_double(k, v); }},
      {"q_min", [](RunConfig& c, const std::string& k, const std::string& v) { c.q_min = parse_double(k, v); }},
      {"q_max", [](RunConfig& c, const std::string& k, const std::string& v) { c.q_max = parse_double(k, v); }},
      {"q_count", [](RunConfig& c, const std::string& k, const std::string& v) { c.q_count = parse_int(k, v); }},
      {"eps_list", [](RunConfig& c, const std::string& k, const std::string& v) { c.eps_list = parse_list(k, v); }},
      {"alpha", [](RunConfig& c, const std::string& k, const std::string& v) { c.alpha = parse_double(k, v); }},
      {"alpha_list", [](RunConfig& c, const std::string& k, const std::string& v) { c.alpha_list = parse_list(k, v); }},
      {"m_max", [](RunConfig& c, const std::string& k, const std::string& v) { c.m_max = parse_int(k, v); }},
      {"j_max", [](RunConfig& c, const std::string& k, const std::string& v) { c.j_max = parse_int(k, v); }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw ValidationError("config: unknown key '" + key + "'");
  it->second(cfg, key, value);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("write to '" + path + "' failed");
}

std::string config_comment_block(const RunConfig& cfg) {
  std::string out;
  for (const auto& [key, value] : resolved_config(cfg)) {
    out += "# " + key + "=" + value + "\n";
  }
  return out;
}

json config_json(const RunConfig& cfg) {
  json j = json::object();
  for (const auto& [key, value] : resolved_config(cfg)) j[key] = value;
  return j;
}

void write_json_file(const std::string& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config: line " + std::to_string(line_no) +
                            " is not a key=value assignment: '" + t + "'");
    }
    apply_key(cfg, trim(t.substr(0, eq)), t.substr(eq + 1));
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::map<std::string, std::string> resolved_config(const RunConfig& cfg) {
  std::map<std::string, std::string> m;
  m["p"] = format_double(cfg.p);
  m["r_max"] = format_double(cfg.r_max);
  m["res_tol"] = format_double(cfg.res_tol);
  m["alpha_base"] = format_double(cfg.alpha_base);
  m["alpha_amp"] = format_double(cfg.alpha_amp);
  m["alpha_mode"] = cfg.alpha_mode;
  m["L"] = format_double(cfg.L);
  m["R_sector"] = format_double(cfg.R_sector);
  m["n_rho"] = std::to_string(cfg.n_rho);
  m["n_t"] = std::to_string(cfg.n_t);
  m["n_s"] = std::to_string(cfg.n_s);
  m["eps"] = format_double(cfg.eps);
  m["q"] = format_double(cfg.q);
  m["mu"] = format_double(cfg.mu);
  m["clip_at_caps"] = cfg.clip_at_caps ? "true" : "false";
  m["newton_tol"] = format_double(cfg.newton_tol);
  m["q_min"] = format_double(cfg.q_min);
  m["q_max"] = format_double(cfg.q_max);
  m["q_count"] = std::to_string(cfg.q_count);
  m["eps_list"] = join_list(cfg.eps_list);
  m["alpha"] = format_double(cfg.alpha);
  m["alpha_list"] = cfg.alpha_list.empty() ? "" : join_list(cfg.alpha_list);
  m["m_max"] = std::to_string(cfg.m_max);
  m["j_max"] = std::to_string(cfg.j_max);
  return m;
}

WedgeConfig wedge_config(const RunConfig& cfg) {
  WedgeConfig w;
  w.alpha_base = cfg.alpha_base;
  w.alpha_amp = cfg.alpha_amp;
  if (cfg.alpha_mode == "cos") {
    w.alpha_mode = AlphaMode::Cos;
  } else if (cfg.alpha_mode == "linear") {
    w.alpha_mode = AlphaMode::Linear;
  } else {
    throw ValidationError("config: alpha_mode must be cos or linear, got '" + cfg.alpha_mode +
                          "'");
  }
  w.L = cfg.L;
  w.R_sector = cfg.R_sector;
  w.n_rho = cfg.n_rho;
  w.n_t = cfg.n_t;
  w.n_s = cfg.n_s;
  return w;
}

GroundStateOptions ground_state_options(const RunConfig& cfg) {
  GroundStateOptions opt;
  opt.p = cfg.p;
  opt.r_max = cfg.r_max;
  opt.res_tol = cfg.res_tol;
  return opt;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open CSV file '" + path + "'");
  CsvTable table;
  std::string line;
  bool have_header = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (!have_header) table.comments.push_back(trim(line.substr(1)));
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!have_header) {
      table.header = cells;
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw IoError("CSV '" + path + "': line " + std::to_string(line_no) + " has " +
                    std::to_string(cells.size()) + " cells, header has " +
                    std::to_string(table.header.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const std::string& c : cells) {
      char* end = nullptr;
      const double x = std::strtod(c.c_str(), &end);
      if (end != c.c_str() + c.size() || c.empty()) {
        throw IoError("CSV '" + path + "': non-numeric cell '" + c + "' on line " +
                      std::to_string(line_no));
      }
      row.push_back(x);
    }
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw IoError("CSV '" + path + "': missing header row");
  return table;
}

void write_profile_csv(const std::string& path, const RadialProfile& profile,
                       const RunConfig& cfg) {
  std::string out = config_comment_block(cfg);
  out += "r,u,du\n";
  for (Eigen::Index i = 0; i < profile.r_grid.size(); ++i) {
    out += format_double(profile.r_grid[i]) + "," + format_double(profile.u[i]) + "," +
           format_double(profile.du[i]) + "\n";
  }
  write_text_file(path, out);
}

void write_profile_sidecar(const std::string& path, const RadialProfile& profile,
                           const RunConfig& cfg) {
  json j;
  j["p"] = profile.p;
  j["shoot_u0"] = profile.shoot_u0;
  j["c_decay"] = profile.c_decay;
  j["R_max"] = profile.r_max;
  j["res_tol"] = cfg.res_tol;
  j["match_defect"] = profile.match_defect;
  j["config"] = config_json(cfg);
  write_json_file(path, j);
}

void write_energy_coefficients_json(const std::string& path, const EnergyCoefficients& coef,
                                    const RunConfig& cfg) {
  json j;
  j["p"] = coef.p;
  j["c0"] = coef.c0;
  j["c0_printed_form"] = coef.c0_printed_form;
  j["nehari_mass"] = coef.nehari_mass;
  j["energy_full"] = coef.energy_full;
  j["nehari_defect"] = coef.nehari_defect;
  j["config"] = config_json(cfg);
  write_json_file(path, j);
}

void write_cone_csv(const std::string& path, const std::vector<ConeSpectrumReport>& reports,
                    const RunConfig& cfg) {
  std::string out = config_comment_block(cfg);
  out += "alpha,m,j,lambda_ang,sigma\n";
  for (const ConeSpectrumReport& rep : reports) {
    for (const ConeModeEntry& mode : rep.modes) {
      out += format_double(rep.alpha) + "," + std::to_string(mode.m) + "," +
             std::to_string(mode.j) + "," + format_double(mode.lambda_ang) + "," +
             format_double(mode.sigma) + "\n";
    }
  }
  write_text_file(path, out);
}

void write_cone_json(const std::string& path, const ConeSpectrumReport& report,
                     const RunConfig& cfg) {
  json j;
  j["alpha"] = report.alpha;
  j["p"] = report.p;
  j["morse_index"] = report.morse_index;
  j["kernel_dim"] = report.kernel_dim;
  j["spectral_gap"] = report.spectral_gap;
  j["kernel_tol"] = report.kernel_tol;
  json modes = json::array();
  for (const ConeModeEntry& mode : report.modes) {
    modes.push_back(json{{"m", mode.m},
                         {"j", mode.j},
                         {"lambda_ang", mode.lambda_ang},
                         {"sigma", mode.sigma}});
  }
  j["modes"] = modes;
  j["config"] = config_json(cfg);
  write_json_file(path, j);
}

void write_samples_csv(const std::string& path, const std::vector<ReducedEnergySample>& rows,
                       const RunConfig& cfg) {
  std::string out = config_comment_block(cfg);
  out += "Q,eps,alpha_Q,energy_ansatz,energy_reduced,residual_norm,w_norm\n";
  for (const ReducedEnergySample& r : rows) {
    out += format_double(r.q) + "," + format_double(r.eps) + "," + format_double(r.alpha_q) +
           "," + format_double(r.energy_ansatz) + "," + format_double(r.energy_reduced) + "," +
           format_double(r.residual_norm) + "," + format_double(r.w_norm) + "\n";
  }
  write_text_file(path, out);
}

ProfileFit fit_reduced_profile(const std::vector<ReducedProfilePoint>& points, double c0) {
  std::vector<double> xs, ys;
  int failed = 0;
  for (const ReducedProfilePoint& pt : points) {
    if (pt.solved) {
      xs.push_back(pt.sample.alpha_q);
      ys.push_back(pt.sample.energy_reduced);
    } else {
      ++failed;
    }
  }
  if (xs.size() < 2) {
    throw SolverError("fit_reduced_profile: fewer than two edge positions solved");
  }
  Eigen::Map<const Vector> x(xs.data(), static_cast<Eigen::Index>(xs.size()));
  Eigen::Map<const Vector> y(ys.data(), static_cast<Eigen::Index>(ys.size()));
  const Eigen::Vector2d ab = fit_affine(x, y);

  ProfileFit fit;
  fit.intercept = ab[0];
  fit.slope = ab[1];
  const double ss_tot = (y.array() - y.mean()).square().sum();
  const double ss_res = (y.array() - (fit.intercept + fit.slope * x.array())).square().sum();
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.c0 = c0;
  fit.slope_over_c0 = c0 != 0.0 ? fit.slope / c0 : 0.0;
  fit.points_used = static_cast<int>(xs.size());
  fit.points_failed = failed;
  return fit;
}

void write_profile_fit_json(const std::string& path, const ProfileFit& fit,
                            const RunConfig& cfg) {
  json j;
  j["slope"] = fit.slope;
  j["intercept"] = fit.intercept;
  j["r_squared"] = fit.r_squared;
  j["c0"] = fit.c0;
  j["slope_over_c0"] = fit.slope_over_c0;
  j["points_used"] = fit.points_used;
  j["points_failed"] = fit.points_failed;
  j["config"] = config_json(cfg);
  write_json_file(path, j);
}

void write_solve_json(const std::string& path, const SolveReport& report, const RunConfig& cfg) {
  json j;
  j["converged"] = report.converged;
  j["iterations"] = report.iterations;
  j["residual_norm"] = report.residual_norm;
  j["spike_center"] = report.spike_center;
  j["spike_height"] = report.spike_height;
  j["energy"] = report.energy;
  j["basin"] = report.basin;
  j["config"] = config_json(cfg);
  write_json_file(path, j);
}

std::string error_json(const std::string& type, const std::string& message) {
  json j;
  j["error"] = json{{"type", type}, {"message", message}};
  return j.dump(2) + "\n";
}

void write_field_binary(const std::string& path, const ScalarField& field,
                        const WedgeConfig& cfg) {
  if (field.n_rho != cfg.n_rho || field.n_t != cfg.n_t || field.n_s != cfg.n_s) {
    throw ValidationError("write_field_binary: field does not match the config grid");
  }
  const double header[8] = {1.0,
                            static_cast<double>(cfg.n_rho),
                            static_cast<double>(cfg.n_t),
                            static_cast<double>(cfg.n_s),
                            cfg.L,
                            cfg.R_sector,
                            cfg.alpha_base,
                            cfg.alpha_amp};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  out.write(reinterpret_cast<const char*>(field.values.data()),
            static_cast<std::streamsize>(sizeof(double)) * field.values.size());
  if (!out) throw IoError("write to '" + path + "' failed");
}

std::pair<FieldHeader, ScalarField> read_field_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open field file '" + path + "'");
  double header[8];
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (!in) throw IoError("field file '" + path + "': truncated header");
  FieldHeader h;
  h.version = header[0];
  h.n_rho = header[1];
  h.n_t = header[2];
  h.n_s = header[3];
  h.L = header[4];
  h.R_sector = header[5];
  h.alpha_base = header[6];
  h.alpha_amp = header[7];
  if (h.version != 1.0) {
    throw IoError("field file '" + path + "': unsupported version " + format_double(h.version));
  }
  const auto dim = [&](double v, const char* name) {
    const int n = static_cast<int>(v);
    if (!(v == static_cast<double>(n)) || n < 1 || n > 100000000) {
      throw IoError(std::string("field file '") + path + "': bad " + name);
    }
    return n;
  };
  ScalarField field;
  field.n_rho = dim(h.n_rho, "n_rho");
  field.n_t = dim(h.n_t, "n_t");
  field.n_s = dim(h.n_s, "n_s");
  const long long n_nodes = static_cast<long long>(field.n_rho + 1) *
                            (field.n_t + 1) * (field.n_s + 1);
  if (n_nodes > (1ll << 33)) {
    throw IoError("field file '" + path + "': grid dimensions exceed the supported size");
  }
  field.values.resize(static_cast<Eigen::Index>(n_nodes));
  in.read(reinterpret_cast<char*>(field.values.data()),
          static_cast<std::streamsize>(sizeof(double)) * field.values.size());
  if (!in || in.gcount() != static_cast<std::streamsize>(sizeof(double)) * field.values.size()) {
    throw IoError("field file '" + path + "': truncated payload");
  }
  char extra;
  if (in.read(&extra, 1)) throw IoError("field file '" + path + "': trailing bytes");
  return {h, std::move(field)};
}

void write_field_csv(const std::string& path, const WedgeDomain& dom, const ScalarField& field,
                     const RunConfig& cfg) {
  if (field.n_rho != dom.config.n_rho || field.n_t != dom.config.n_t ||
      field.n_s != dom.config.n_s) {
    throw ValidationError("write_field_csv: field does not match the domain grid");
  }
  std::string out = config_comment_block(cfg);
  out += "rho,t,s,value\n";
  Eigen::Index n = 0;
  for (int i = 0; i <= field.n_rho; ++i) {
    for (int j = 0; j <= field.n_t; ++j) {
      for (int k = 0; k <= field.n_s; ++k, ++n) {
        out += format_double(dom.rho_nodes[i]) + "," + format_double(dom.t_nodes[j]) + "," +
               format_double(dom.s_nodes[k]) + "," + format_double(field.values[n]) + "\n";
      }
    }
  }
  write_text_file(path, out);
}

}  // namespace edgespike
