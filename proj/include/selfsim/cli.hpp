#pragma once

/// @file cli.hpp
/// @brief `selfsim` command line: config parsing, subcommand dispatch, report
/// emission and the exit-code contract
///   0 success, 1 non-convergence or partial result, 2 config/validation,
///   3 I/O, 4 internal.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "selfsim/errors.hpp"
#include "selfsim/field.hpp"
#include "selfsim/field_io.hpp"
#include "selfsim/gas.hpp"
#include "selfsim/hodge.hpp"
#include "selfsim/potential.hpp"
#include "selfsim/quasipotential.hpp"
#include "selfsim/regime.hpp"
#include "selfsim/verify.hpp"
#include "selfsim/vorticity.hpp"

namespace selfsim::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kNonConvergence = 1, kConfig = 2, kIo = 3, kInternal = 4 };

inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config:
    case ErrorKind::Domain:
    case ErrorKind::Range:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::NonSolenoidalInput:
      return kConfig;
    case ErrorKind::Io:
    case ErrorKind::Format:
      return kIo;
    case ErrorKind::Internal:
      return kInternal;
    default:
      return kNonConvergence;
  }
}

// ---------------------------------------------------------------------------
// Config access

namespace detail {

/// Known keys per config section.
inline const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"", {"gas", "grid", "boundary", "solver", "output", "quasi", "transport", "seed", "strict"}},
      {"gas", {"a", "gamma", "rho_floor", "variant"}},
      {"grid", {"x0", "x1", "y0", "y1", "nx", "ny"}},
      {"boundary", {"kind", "K", "path", "terms", "value"}},
      {"solver",
       {"relax_theta", "tol_fixed_point", "max_iters", "lin_tol", "lin_max_iters", "eps0", "ratio", "eps_min",
        "zero_pass", "c2_floor", "cap_M"}},
      {"output", {"dir", "phi_path", "report_path", "csv"}},
      {"quasi",
       {"delta_targets", "outer_tol", "outer_max_iters", "newton", "zeta_b", "sonic_margin", "curl_tol"}},
      {"quasi.zeta_b", {"kind", "K", "path", "terms", "value"}},
      {"transport", {"psi", "omega_b", "step", "max_len"}},
      {"transport.psi", {"kind", "K", "path", "terms", "value"}},
      {"transport.omega_b", {"kind", "K", "path", "terms", "value"}},
  };
  return s;
}

inline void collect_unknown(const json& j, const std::string& section, std::vector<std::string>& out) {
  if (!j.is_object()) return;
  const auto& s = schema();
  const auto it = s.find(section);
  if (it == s.end()) return;
  for (const auto& [key, val] : j.items()) {
    const std::string path = section.empty() ? key : section + "." + key;
    if (!it->second.count(key)) {
      out.push_back(path);
    } else if (val.is_object()) {
      collect_unknown(val, path, out);
    }
  }
}

}  // namespace detail

/// Parsed JSON document plus the directory relative input paths resolve against.
class Config {
 public:
  Config() : doc_(json::object()) {}
  Config(json doc, fs::path base) : doc_(std::move(doc)), base_(std::move(base)) {
    if (!doc_.is_object()) fail(ErrorKind::Config, "config root must be a JSON object");
  }

  static Config load(const fs::path& path) {
    const std::string text = read_text(path);
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      fail(ErrorKind::Config, path.string() + ": " + e.what());
    }
    return Config(std::move(doc), path.parent_path());
  }

  const json& doc() const noexcept { return doc_; }

  std::vector<std::string> unknown_keys() const {
    std::vector<std::string> out;
    detail::collect_unknown(doc_, "", out);
    return out;
  }

  const json* find(const std::string& dotted) const {
    const json* cur = &doc_;
    std::size_t start = 0;
    while (true) {
      const std::size_t dot = dotted.find('.', start);
      const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (!cur->is_object() || !cur->contains(key)) return nullptr;
      cur = &(*cur)[key];
      if (dot == std::string::npos) return cur;
      start = dot + 1;
    }
  }

  double number(const std::string& key, double fallback) const {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number()) fail(ErrorKind::Config, key + ": expected a number");
    return v->get<double>();
  }

  long integer(const std::string& key, long fallback) const {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) fail(ErrorKind::Config, key + ": expected an integer");
    return v->get<long>();
  }

  bool boolean(const std::string& key, bool fallback) const {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) fail(ErrorKind::Config, key + ": expected true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) const {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) fail(ErrorKind::Config, key + ": expected a string");
    return v->get<std::string>();
  }

  fs::path input_path(const std::string& p) const {
    const fs::path q(p);
    return q.is_absolute() || base_.empty() ? q : base_ / q;
  }

 private:
  json doc_;
  fs::path base_;
};

inline GasLaw gas_from(const Config& c) {
  return GasLaw(c.number("gas.a", 1.0), c.number("gas.gamma", 1.4), c.number("gas.rho_floor", 1.0),
                parse_law_variant(c.string("gas.variant", "standard")));
}

inline Grid2D grid_from(const Config& c) {
  const long nx = c.integer("grid.nx", 65), ny = c.integer("grid.ny", 65);
  if (nx < 3 || ny < 3 || nx > 4097 || ny > 4097) fail(ErrorKind::Config, "grid.nx and grid.ny must lie in [3, 4097]");
  return Grid2D(c.number("grid.x0", -0.5), c.number("grid.x1", 0.5), c.number("grid.y0", -0.5),
                c.number("grid.y1", 0.5), static_cast<int>(nx), static_cast<int>(ny));
}

/// Sum of terms; each term is {"type": "monomial", "coef", "px", "py"} for
/// coef x^px y^py, or {"type": "sinsin" | "coscos", "coef", "kx", "ky"} for
/// coef sin(kx pi x) sin(ky pi y) (resp. cos).
inline ScalarField expression_table(const Grid2D& g, const json& terms, const std::string& where) {
  if (!terms.is_array()) fail(ErrorKind::Config, where + ".terms: expected an array");
  ScalarField f(g);
  for (std::size_t n = 0; n < terms.size(); ++n) {
    const json& t = terms[n];
    const std::string at = where + ".terms[" + std::to_string(n) + "]";
    if (!t.is_object()) fail(ErrorKind::Config, at + ": expected an object");
    auto num = [&](const char* k, double d) {
      if (!t.contains(k)) return d;
      if (!t[k].is_number()) fail(ErrorKind::Config, at + "." + k + ": expected a number");
      return t[k].get<double>();
    };
    const std::string type = t.value("type", std::string("monomial"));
    const double coef = num("coef", 1.0);
    if (type == "monomial") {
      const double px = num("px", 0.0), py = num("py", 0.0);
      if (px < 0 || py < 0 || px != std::floor(px) || py != std::floor(py)) {
        fail(ErrorKind::Config, at + ": monomial powers must be non-negative integers");
      }
      f += sample(g, [=](double x, double y) { return coef * std::pow(x, px) * std::pow(y, py); });
    } else if (type == "sinsin" || type == "coscos") {
      const double kx = num("kx", 1.0), ky = num("ky", 1.0);
      const bool s = type == "sinsin";
      f += sample(g, [=](double x, double y) {
        const double ax = std::numbers::pi * kx * x, ay = std::numbers::pi * ky * y;
        return coef * (s ? std::sin(ax) * std::sin(ay) : std::cos(ax) * std::cos(ay));
      });
    } else {
      fail(ErrorKind::Config, at + ".type: unknown term type '" + type + "'");
    }
  }
  return f;
}

/// Nodal profile from {"kind": "quiescent" | "file" | "expression-table" | "zero" | "constant", ...}.
inline ScalarField profile_from(const Config& c, const std::string& section, const Grid2D& g) {
  const std::string kind = c.string(section + ".kind", "quiescent");
  if (kind == "quiescent") return quiescent_profile(g, c.number(section + ".K", -1.0));
  if (kind == "zero") return ScalarField(g);
  if (kind == "constant") return ScalarField(g, c.number(section + ".value", 0.0));
  if (kind == "file") {
    const std::string p = c.string(section + ".path", "");
    if (p.empty()) fail(ErrorKind::Config, section + ".path is required for kind 'file'");
    ScalarField f = read_scalar_field(c.input_path(p));
    if (!(f.grid() == g)) fail(ErrorKind::DimensionMismatch, section + ".path: field grid differs from the config grid");
    return f;
  }
  if (kind == "expression-table") {
    const json* t = c.find(section + ".terms");
    if (!t) fail(ErrorKind::Config, section + ".terms is required for kind 'expression-table'");
    return expression_table(g, *t, section);
  }
  fail(ErrorKind::Config, section + ".kind: unknown profile kind '" + kind + "'");
}

inline PicardParams picard_from(const Config& c) {
  PicardParams p;
  p.relax_theta = c.number("solver.relax_theta", p.relax_theta);
  p.tol_fixed_point = c.number("solver.tol_fixed_point", p.tol_fixed_point);
  p.max_iters = static_cast<int>(c.integer("solver.max_iters", p.max_iters));
  p.lin_tol = c.number("solver.lin_tol", p.lin_tol);
  p.lin_max_iters = c.integer("solver.lin_max_iters", p.lin_max_iters);
  p.validate();
  return p;
}

inline EpsilonSchedule schedule_from(const Config& c) {
  EpsilonSchedule s;
  s.eps0 = c.number("solver.eps0", s.eps0);
  s.ratio = c.number("solver.ratio", s.ratio);
  s.eps_min = c.number("solver.eps_min", s.eps_min);
  s.zero_pass = c.boolean("solver.zero_pass", s.zero_pass);
  s.validate();
  return s;
}

inline PotentialProblem problem_from(const Config& c) {
  const Grid2D g = grid_from(c);
  PotentialProblem p(gas_from(c), profile_from(c, "boundary", g));
  p.c2_floor = c.number("solver.c2_floor", p.c2_floor);
  p.cap_M = c.number("solver.cap_M", p.cap_M);
  p.validate();
  return p;
}

inline int thread_count() {
  const char* env = std::getenv("SELFSIM_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1 || n > 1024) fail(ErrorKind::Config, "SELFSIM_THREADS must be an integer in [1, 1024]");
  return static_cast<int>(n);
}

// ---------------------------------------------------------------------------
// Outputs

/// Collects output files and publishes them together: every file is written to
/// a temporary sibling first, and renames start only after all writes succeed.
class OutputBatch {
 public:
  explicit OutputBatch(fs::path dir) : dir_(std::move(dir)) {}

  fs::path path(const std::string& name) const {
    const fs::path p(name);
    return p.is_absolute() ? p : dir_ / p;
  }

  fs::path add(const std::string& name, std::string text) {
    const fs::path p = path(name);
    files_.emplace_back(p, std::move(text));
    return p;
  }

  void add_field(const std::string& name, const ScalarField& f, bool csv) {
    add(name, to_f2d(f));
    if (csv) add(fs::path(name).replace_extension(".csv").string(), to_csv(f));
  }
  void add_field(const std::string& name, const VectorField& f, bool csv) {
    add(name, to_f2d(f));
    if (csv) add(fs::path(name).replace_extension(".csv").string(), to_csv(f));
  }

  void commit() {
    std::error_code ec;
    for (const auto& [p, text] : files_) {
      if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
      if (ec) fail(ErrorKind::Io, "cannot create directory '" + p.parent_path().string() + "': " + ec.message());
    }
    const std::string suffix = ".tmp." + std::to_string(::getpid());
    std::vector<fs::path> temps;
    auto cleanup = [&] {
      std::error_code ignore;
      for (const auto& t : temps) fs::remove(t, ignore);
    };
    for (const auto& [p, text] : files_) {
      fs::path tmp = p;
      tmp += suffix;
      temps.push_back(tmp);
      std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
      os.write(text.data(), static_cast<std::streamsize>(text.size()));
      os.close();
      if (!os) {
        cleanup();
        fail(ErrorKind::Io, "cannot write '" + tmp.string() + "'");
      }
    }
    for (std::size_t n = 0; n < files_.size(); ++n) {
      fs::rename(temps[n], files_[n].first, ec);
      if (ec) {
        cleanup();
        fail(ErrorKind::Io, "cannot rename onto '" + files_[n].first.string() + "': " + ec.message());
      }
    }
  }

  static std::string to_csv(const ScalarField& f) {
    std::string s = "x,y,value\n";
    const Grid2D& g = f.grid();
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i)
        s += format_double(g.x(i)) + "," + format_double(g.y(j)) + "," + format_double(f(i, j)) + "\n";
    return s;
  }
  static std::string to_csv(const VectorField& f) {
    std::string s = "x,y,u,v\n";
    const Grid2D& g = f.grid();
    for (int j = 0; j < g.ny(); ++j)
      for (int i = 0; i < g.nx(); ++i)
        s += format_double(g.x(i)) + "," + format_double(g.y(j)) + "," + format_double(f.u(i, j)) + "," +
             format_double(f.v(i, j)) + "\n";
    return s;
  }

 private:
  fs::path dir_;
  std::vector<std::pair<fs::path, std::string>> files_;
};

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(NodeIndex n) { return json::array({n.i, n.j}); }

inline json to_json(const AuditReport& a) {
  return {{"verdict", std::string(to_string(a.verdict))}, {"m_interior", finite_or_null(a.m_interior)},
          {"m_frame", finite_or_null(a.m_frame)},          {"max_L2", finite_or_null(a.max_L2)},
          {"argmax", to_json(a.argmax)}};
}

inline json to_json(const StageReport& s) {
  json hist = json::array();
  for (double v : s.fixed_point_history) hist.push_back(finite_or_null(v));
  json lin = json::array();
  for (double v : s.linear_residual_history) lin.push_back(finite_or_null(v));
  json j = {{"eps", s.eps},
            {"status", std::string(to_string(s.status))},
            {"iterations", s.iterations},
            {"theta", s.theta},
            {"theta_halved", s.theta_halved},
            {"residual", finite_or_null(s.residual)},
            {"clamped", s.clamped},
            {"fixed_point_history", hist},
            {"linear_residual_history", lin}};
  if (!s.error.empty()) j["error"] = s.error;
  return j;
}

inline json to_json(const SolveReport& r) {
  json stages = json::array();
  for (const auto& s : r.stages) stages.push_back(to_json(s));
  json j = {{"status", std::string(to_string(r.status))},
            {"final_eps", r.final_eps},
            {"zero_pass_attempted", r.zero_pass_attempted},
            {"zero_pass_converged", r.zero_pass_converged},
            {"residual_Q", finite_or_null(r.residual_Q)},
            {"c2_min", finite_or_null(r.c2_min)},
            {"c2_max", finite_or_null(r.c2_max)},
            {"max_L2", finite_or_null(r.max_L2)},
            {"max_L2_at", to_json(r.max_L2_at)},
            {"clamped", r.clamped},
            {"audit", to_json(r.audit)},
            {"stages", stages}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

inline json to_json(const RegimeReport& r) {
  return {{"max_L2", finite_or_null(r.max_L2)}, {"max_L2_at", to_json(r.max_L2_at)},
          {"subsonic", r.subsonic},              {"sonic", r.sonic},
          {"supersonic", r.supersonic},          {"excluded", r.excluded},
          {"audit", to_json(r.audit)}};
}

inline json to_json(const QuasiStageReport& s) {
  json hist = json::array();
  for (double v : s.change_history) hist.push_back(finite_or_null(v));
  json j = {{"delta", s.delta},
            {"status", std::string(to_string(s.status))},
            {"outer_iterations", s.outer_iterations},
            {"inner_iterations", s.inner_iterations},
            {"change_history", hist},
            {"curl_defect", finite_or_null(s.curl_defect)},
            {"uncovered", s.uncovered},
            {"clamped", s.clamped},
            {"max_L2", finite_or_null(s.max_L2)},
            {"psi_shift", finite_or_null(s.psi_shift)},
            {"r1", finite_or_null(s.r1)},
            {"r2", finite_or_null(s.r2)}};
  if (!s.error.empty()) j["error"] = s.error;
  return j;
}

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Report skeleton; the timestamp lives only under "metadata".
inline json report_header(const std::string& command, const Config& c) {
  return {{"command", command},
          {"config", c.doc()},
          {"metadata", {{"tool", "selfsim"}, {"version", kVersion}, {"timestamp", utc_timestamp()}}}};
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Subcommands

struct Common {
  std::string config_path;
  std::string out_dir;
  bool strict = false;
};

struct Session {
  Config config;
  bool strict = false;
  fs::path out_dir;
  bool csv = false;
  int threads = 1;
};

inline Session open_session(const Common& o, bool config_required) {
  Session s;
  s.threads = thread_count();
  if (!o.config_path.empty()) {
    s.config = Config::load(o.config_path);
  } else if (config_required) {
    fail(ErrorKind::Config, "--config is required");
  }
  s.strict = o.strict || s.config.boolean("strict", false);
  const auto unknown = s.config.unknown_keys();
  for (const auto& k : unknown) {
    if (s.strict) fail(ErrorKind::Config, "unknown config key '" + k + "'");
    std::cerr << "selfsim: warning: unknown config key '" << k << "' ignored\n";
  }
  s.out_dir = o.out_dir.empty() ? fs::path(s.config.string("output.dir", ".")) : fs::path(o.out_dir);
  s.csv = s.config.boolean("output.csv", false);
  return s;
}

inline int status_code(SolveStatus st) { return st == SolveStatus::Converged ? kOk : kNonConvergence; }

inline int cmd_solve_potential(const Common& o) {
  Session s = open_session(o, true);
  const PotentialProblem problem = problem_from(s.config);
  const PicardParams params = picard_from(s.config);
  const EpsilonSchedule schedule = schedule_from(s.config);

  const ContinuationResult r = epsilon_continuation(problem, schedule, params);
  const VectorField G = gradient(r.phi);
  const C2Field c2 = c2_of_phi(problem.law, r.phi, G, problem.c2_floor);
  const RegimeReport rr = classify(G, c2.c2, kDefaultSonicTolerance, &c2.clamped);

  OutputBatch out(s.out_dir);
  const std::string phi_name = s.config.string("output.phi_path", "phi.f2d");
  const std::string report_name = s.config.string("output.report_path", "report.json");
  out.add_field(phi_name, r.phi, s.csv);
  out.add_field("c2.f2d", c2.c2, s.csv);
  out.add_field("L2.f2d", rr.L2, s.csv);
  json rep = report_header("solve-potential", s.config);
  rep["solve"] = to_json(r.report);
  rep["outputs"] = {{"phi", out.path(phi_name).string()}, {"c2", out.path("c2.f2d").string()},
                    {"L2", out.path("L2.f2d").string()}};
  const fs::path report_path = out.add(report_name, dump(rep));
  out.commit();

  std::cout << "solve-potential: " << to_string(r.report.status) << " final_eps=" << r.report.final_eps
            << " max_L2=" << r.report.max_L2 << " audit=" << to_string(r.report.audit.verdict)
            << " report=" << report_path.string() << "\n";
  return status_code(r.report.status);
}

inline QuasiConfig quasi_from(const Config& c, const Grid2D& g, bool strict) {
  QuasiConfig q;
  if (const json* d = c.find("quasi.delta_targets")) {
    if (!d->is_array()) fail(ErrorKind::Config, "quasi.delta_targets: expected an array of numbers");
    q.delta_targets.clear();
    for (const auto& v : *d) {
      if (!v.is_number()) fail(ErrorKind::Config, "quasi.delta_targets: expected an array of numbers");
      q.delta_targets.push_back(v.get<double>());
    }
  }
  q.outer_tol = c.number("quasi.outer_tol", q.outer_tol);
  q.outer_max_iters = static_cast<int>(c.integer("quasi.outer_max_iters", q.outer_max_iters));
  q.newton = c.boolean("quasi.newton", q.newton);
  q.sonic_margin = c.number("quasi.sonic_margin", q.sonic_margin);
  q.curl_tol = c.number("quasi.curl_tol", q.curl_tol);
  q.strict = strict;
  if (c.find("quasi.zeta_b")) q.zeta_b = profile_from(c, "quasi.zeta_b", g);
  q.transport.strict = strict;
  q.validate();
  return q;
}

inline int cmd_solve_quasi(const Common& o) {
  Session s = open_session(o, true);
  const PotentialProblem problem = problem_from(s.config);
  const PicardParams params = picard_from(s.config);
  const EpsilonSchedule schedule = schedule_from(s.config);
  QuasiConfig qc = quasi_from(s.config, problem.grid, s.strict);
  qc.transport.threads = s.threads;

  const QuasiResult r = solve_quasi(qc, problem, schedule, params);
  OutputBatch out(s.out_dir);
  json rep = report_header("solve-quasi", s.config);
  rep["base"] = to_json(r.report.base);
  rep["status"] = std::string(to_string(r.report.status));
  rep["eps"] = r.report.eps;
  json stages = json::array();
  for (const auto& st : r.report.stages) stages.push_back(to_json(st));
  rep["stages"] = stages;
  if (!r.report.error.empty()) rep["error"] = r.report.error;
  if (!r.states.empty()) {
    const QuasiState& q = r.states.back();
    out.add_field("psi.f2d", q.psi, s.csv);
    out.add_field("zeta.f2d", q.zeta, s.csv);
    out.add_field("omega_tilde.f2d", q.omega_tilde, s.csv);
    out.add_field("c2.f2d", q.c2, s.csv);
    out.add_field("N1.f2d", q.N1, s.csv);
    out.add_field("F1.f2d", q.F1, s.csv);
    rep["outputs_delta"] = q.delta;
  }
  const std::string report_name = s.config.string("output.report_path", "report.json");
  const fs::path report_path = out.add(report_name, dump(rep));
  out.commit();

  std::cout << "solve-quasi: " << to_string(r.report.status) << " stages=" << r.states.size() << "/"
            << qc.delta_targets.size();
  if (!r.report.stages.empty()) std::cout << " max_L2=" << r.report.stages.back().max_L2;
  std::cout << " report=" << report_path.string() << "\n";
  return status_code(r.report.status);
}

inline int cmd_classify(const Common& o, const std::string& phi_path, const std::string& velocity_path,
                        const std::string& c2_path, double tol_sonic) {
  Session s = open_session(o, false);
  VectorField U;
  ScalarField c2;
  NodeMask clamped;
  if (!phi_path.empty()) {
    if (!velocity_path.empty() || !c2_path.empty()) fail(ErrorKind::Config, "--phi excludes --velocity/--c2");
    const ScalarField phi = read_scalar_field(phi_path);
    const GasLaw law = gas_from(s.config);
    U = gradient(phi);
    const C2Field c = c2_of_phi(law, phi, U, s.config.number("solver.c2_floor", 1e-8));
    c2 = c.c2;
    clamped = c.clamped;
  } else {
    if (velocity_path.empty() || c2_path.empty()) fail(ErrorKind::Config, "classify needs --phi or both --velocity and --c2");
    U = read_vector_field(velocity_path);
    c2 = read_scalar_field(c2_path);
    require_same_grid(U.grid(), c2.grid(), "classify inputs");
  }
  const RegimeReport rr = classify(U, c2, tol_sonic, clamped.empty() ? nullptr : &clamped);
  OutputBatch out(s.out_dir);
  out.add_field("L2.f2d", rr.L2, s.csv);
  out.add_field("discriminant.f2d", rr.discriminant, s.csv);
  json rep = report_header("classify", s.config);
  rep["regime"] = to_json(rr);
  const fs::path report_path = out.add(s.config.string("output.report_path", "report.json"), dump(rep));
  out.commit();
  std::cout << "classify: subsonic=" << rr.subsonic << " sonic=" << rr.sonic << " supersonic=" << rr.supersonic
            << " max_L2=" << rr.max_L2 << " audit=" << to_string(rr.audit.verdict)
            << " report=" << report_path.string() << "\n";
  return kOk;
}

inline int cmd_decompose(const Common& o, const std::string& velocity_path, double div_tol) {
  Session s = open_session(o, false);
  if (velocity_path.empty()) fail(ErrorKind::Config, "decompose needs --velocity");
  const VectorField U = read_vector_field(velocity_path);
  LinearOptions lin;
  lin.lin_tol = s.config.number("solver.lin_tol", lin.lin_tol);
  const Decomposition d = decompose(U, lin);
  const StreamFunction sf = stream_function(d.W, div_tol, lin);
  const BernoulliPair gh = bernoulli_GH(U, d.psi, d.W);
  OutputBatch out(s.out_dir);
  out.add_field("psi.f2d", d.psi, s.csv);
  out.add_field("W.f2d", d.W, s.csv);
  out.add_field("zeta.f2d", sf.zeta, s.csv);
  json rep = report_header("decompose", s.config);
  rep["decomposition"] = {{"residual", d.residual},
                          {"div_W_norm", d.div_W_norm},
                          {"compatibility", d.compatibility},
                          {"rel_residual", d.rel_residual},
                          {"stream_mismatch", sf.mismatch},
                          {"integrability_residual", integrability_residual(gh.G, gh.H)}};
  const fs::path report_path = out.add(s.config.string("output.report_path", "report.json"), dump(rep));
  out.commit();
  std::cout << "decompose: div_W=" << d.div_W_norm << " compatibility=" << d.compatibility
            << " report=" << report_path.string() << "\n";
  return kOk;
}

/// Frame values from an inflow file: a .csv file of "i,j,value" rows, or a JSON
/// object mapping bottom/right/top/left/default to constants (or "csv" to such a file).
inline ScalarField inflow_values(const std::string& spec_path, const Grid2D& g) {
  auto from_csv = [&](const fs::path& p) {
    ScalarField f(g);
    std::istringstream in(read_text(p));
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#' || line.rfind("i,", 0) == 0) continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ls(line);
      int i = 0, j = 0;
      double v = 0.0;
      if (!(ls >> i >> j >> v)) fail(ErrorKind::Format, p.string() + ":" + std::to_string(lineno) + ": expected i,j,value");
      if (i < 0 || j < 0 || i >= g.nx() || j >= g.ny() || !g.on_boundary(i, j)) {
        fail(ErrorKind::Format, p.string() + ":" + std::to_string(lineno) + ": node is not on the frame");
      }
      f(i, j) = v;
    }
    return f;
  };
  const fs::path path(spec_path);
  if (path.extension() == ".csv") return from_csv(path);
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Config, path.string() + ": " + e.what());
  }
  if (!doc.is_object()) fail(ErrorKind::Config, path.string() + ": expected a JSON object");
  if (doc.contains("csv")) {
    const fs::path p(doc["csv"].get<std::string>());
    return from_csv(p.is_absolute() ? p : path.parent_path() / p);
  }
  ScalarField f(g);
  auto side = [&](const char* k, double fallback) {
    if (!doc.contains(k)) return fallback;
    if (!doc[k].is_number()) fail(ErrorKind::Config, path.string() + ": '" + k + "' must be a number");
    return doc[k].get<double>();
  };
  for (const auto& [k, v] : doc.items()) {
    if (k != "bottom" && k != "right" && k != "top" && k != "left" && k != "default") {
      fail(ErrorKind::Config, path.string() + ": unknown side '" + k + "'");
    }
  }
  const double dflt = side("default", 0.0);
  const double bottom = side("bottom", dflt), right = side("right", dflt), top = side("top", dflt),
               left = side("left", dflt);
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      if (!g.on_boundary(i, j)) continue;
      // Corners take the later side in bottom, right, top, left order.
      double v = dflt;
      if (j == 0) v = bottom;
      if (i == g.nx() - 1) v = right;
      if (j == g.ny() - 1) v = top;
      if (i == 0) v = left;
      f(i, j) = v;
    }
  return f;
}

inline int cmd_transport(const Common& o, const std::string& psi_path, const std::string& inflow_path) {
  Session s = open_session(o, false);
  ScalarField psi;
  if (!psi_path.empty()) {
    psi = read_scalar_field(psi_path);
  } else if (s.config.find("transport.psi")) {
    psi = profile_from(s.config, "transport.psi", grid_from(s.config));
  } else {
    fail(ErrorKind::Config, "transport needs --psi or transport.psi");
  }
  const Grid2D& g = psi.grid();
  InflowSet inflow = inflow_boundary(psi);
  if (!inflow_path.empty()) {
    assign_inflow_values(inflow, inflow_values(inflow_path, g));
  } else if (s.config.find("transport.omega_b")) {
    assign_inflow_values(inflow, profile_from(s.config, "transport.omega_b", g));
  } else {
    fail(ErrorKind::Config, "transport needs --inflow or transport.omega_b");
  }
  TransportParams tp;
  tp.step = s.config.number("transport.step", 0.0);
  tp.max_len = s.config.number("transport.max_len", 0.0);
  tp.threads = s.threads;
  tp.strict = s.strict;
  const TransportResult r = transport_omega(psi, inflow, tp);
  const ScalarField res = transport_residual(r.omega, gradient(psi));

  OutputBatch out(s.out_dir);
  out.add_field("omega.f2d", r.omega, s.csv);
  out.add_field("transport_residual.f2d", res, s.csv);
  json rep = report_header("transport", s.config);
  rep["transport"] = {{"inflow_nodes", inflow.nodes.size()},
                      {"uncovered", r.uncovered},
                      {"max_trace_length", r.max_trace_length},
                      {"residual_max", max_abs_interior(res)}};
  const fs::path report_path = out.add(s.config.string("output.report_path", "report.json"), dump(rep));
  out.commit();
  std::cout << "transport: inflow=" << inflow.nodes.size() << " uncovered=" << r.uncovered
            << " residual=" << max_abs_interior(res) << " report=" << report_path.string() << "\n";
  return kOk;
}

inline int cmd_verify(const Common& o) {
  Session s = open_session(o, false);
  const auto seed = static_cast<std::uint64_t>(s.config.integer("seed", 0));
  int passed = 0, failed = 0;
  for (const auto& suite : verify::run_all(seed)) {
    for (const auto& c : suite.checks) {
      if (!c.passed) std::cout << "  FAIL " << suite.name << ": " << c.name << " (" << c.detail << ")\n";
    }
    std::cout << suite.name << ": " << suite.passed() << "/" << suite.checks.size() << " passed\n";
    passed += suite.passed();
    failed += suite.failed();
  }
  std::cout << "verify: " << passed << " passed, " << failed << " failed\n";
  return failed == 0 ? kOk : kInternal;
}

// ---------------------------------------------------------------------------
// Entry point

inline int run(int argc, char** argv) {
  CLI::App app{"Self-similar compressible flow solvers"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config_path, "JSON config file");
    sub->add_option("-o,--out-dir", common.out_dir, "Output directory (overrides output.dir)");
    sub->add_flag("--strict", common.strict, "Treat warnings as errors");
  };

  std::string phi_path, velocity_path, c2_path, psi_path, inflow_path;
  double tol_sonic = kDefaultSonicTolerance;
  double div_tol = 1e-8;

  auto* classify_cmd = app.add_subcommand("classify", "Pseudo-Mach regime map and ellipticity audit");
  add_common(classify_cmd);
  classify_cmd->add_option("--phi", phi_path, "Potential (F2D); U = grad phi, c^2 from the gas law");
  classify_cmd->add_option("--velocity", velocity_path, "Pseudo-velocity U (F2D vector)");
  classify_cmd->add_option("--c2", c2_path, "Sound speed squared (F2D)");
  classify_cmd->add_option("--tol-sonic", tol_sonic, "Sonic band half-width");

  auto* decompose_cmd = app.add_subcommand("decompose", "Hodge splitting U = grad psi + W");
  add_common(decompose_cmd);
  decompose_cmd->add_option("--velocity", velocity_path, "Pseudo-velocity U (F2D vector)");
  decompose_cmd->add_option("--div-tol", div_tol, "Divergence tolerance for the stream function");

  auto* transport_cmd = app.add_subcommand("transport", "Vorticity transport along grad psi");
  add_common(transport_cmd);
  transport_cmd->add_option("--psi", psi_path, "Drift potential (F2D)");
  transport_cmd->add_option("--inflow", inflow_path, "Inflow file: JSON sides map or i,j,value CSV");

  auto* potential_cmd = app.add_subcommand("solve-potential", "Potential flow by epsilon continuation");
  add_common(potential_cmd);
  auto* quasi_cmd = app.add_subcommand("solve-quasi", "Quasi-potential delta continuation");
  add_common(quasi_cmd);
  auto* verify_cmd = app.add_subcommand("verify", "Run the built-in invariant suites");
  add_common(verify_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*classify_cmd) return cmd_classify(common, phi_path, velocity_path, c2_path, tol_sonic);
    if (*decompose_cmd) return cmd_decompose(common, velocity_path, div_tol);
    if (*transport_cmd) return cmd_transport(common, psi_path, inflow_path);
    if (*potential_cmd) return cmd_solve_potential(common);
    if (*quasi_cmd) return cmd_solve_quasi(common);
    if (*verify_cmd) return cmd_verify(common);
  } catch (const Error& e) {
    std::cerr << "selfsim: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const json::exception& e) {
    std::cerr << "selfsim: ConfigError: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "selfsim: InternalError: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}

}  // namespace selfsim::cli
