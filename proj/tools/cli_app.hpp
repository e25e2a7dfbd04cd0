#pragma once

#include <chrono>
#include <cmath>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "uzawa/uzawa.hpp"

namespace uzawa::cli {

using nlohmann::json;
namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kConfigError = 1, kBreakdown = 2, kIoError = 3 };

struct MatrixMarketPaths {
  fs::path A, B, D, f, g;
  bool constant_pressure_nullspace = false;
};

struct ProblemConfig {
  enum class Kind { oseen, synthetic, matrix_market };
  Kind kind = Kind::oseen;
  OseenSpec oseen;
  std::vector<std::size_t> grids;  ///< oseen only; overrides oseen.grid_n when non-empty
  SyntheticSpec synthetic;
  MatrixMarketPaths files;
};

struct RunConfig {
  std::string label;
  SolverConfig solver;
};

struct PicardConfig {
  double outer_tol = 1e-6;
  std::size_t max_picard = 50;
};

struct DiagnoseConfig {
  std::optional<PreconditionerSpec> schur_precond, a_precond;
  std::optional<double> omega, delta, theta;
  std::optional<std::size_t> dense_cap;
};

struct ExperimentConfig {
  std::string description;
  ProblemConfig problem;
  std::vector<RunConfig> runs;
  fs::path output_dir = "uzawa_out";
  std::set<std::string> formats{"csv"};
  PicardConfig picard;
  DiagnoseConfig diagnose;
};

inline std::string format_double(double v, int precision = 6) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

// ---------------------------------------------------------------------------
// JSON -> config

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for '") + key + "'");
  }
}

inline double positive_or(const json& j, const char* key, double fallback) {
  const double v = get_or<double>(j, key, fallback);
  if (!(v > 0.0)) throw ConfigError(std::string("'") + key + "' must be positive");
  return v;
}

inline std::size_t count_or(const json& j, const char* key, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ConfigError(std::string("'") + key + "' must be a nonnegative integer");
  return v.get<std::size_t>();
}

}  // namespace detail

inline PreconditionerSpec parse_preconditioner(const json& j) {
  using K = PreconditionerSpec::Kind;
  const std::map<std::string, K> kinds{{"jacobi", K::jacobi},
                                       {"ilu_droptol", K::ilu_droptol},
                                       {"ic_droptol", K::ic_droptol},
                                       {"exact_factor", K::exact_factor},
                                       {"scaled_identity", K::scaled_identity}};
  const json obj = j.is_string() ? json{{"kind", j}} : j;
  detail::check_keys(obj, {"kind", "droptol", "scale"}, "preconditioner");
  const auto name = detail::get_or<std::string>(obj, "kind", "");
  const auto it = kinds.find(name);
  if (it == kinds.end()) throw ConfigError("unknown preconditioner kind '" + name + "'");
  PreconditionerSpec p;
  p.kind = it->second;
  p.droptol = detail::get_or<double>(obj, "droptol", p.droptol);
  p.scale = detail::get_or<double>(obj, "scale", p.scale);
  if (p.kind == K::scaled_identity) p.droptol = 0.0;
  p.validate();
  return p;
}

inline json preconditioner_json(const PreconditionerSpec& p) {
  json j{{"kind", to_string(p.kind)}};
  if (p.kind == PreconditionerSpec::Kind::ilu_droptol || p.kind == PreconditionerSpec::Kind::ic_droptol)
    j["droptol"] = p.droptol;
  if (p.kind == PreconditionerSpec::Kind::scaled_identity) j["scale"] = p.scale;
  return j;
}

inline TauStrategy parse_tau(const json& j) {
  const json obj = j.is_string() ? json{{"kind", j}} : j;
  detail::check_keys(obj, {"kind", "value"}, "tau");
  TauStrategy t;
  t.kind = tau_kind_from_string(detail::get_or<std::string>(obj, "kind", ""));
  if (t.kind == TauStrategy::Kind::fixed) {
    if (!obj.contains("value")) throw ConfigError("fixed tau needs a 'value'");
    t.value = detail::positive_or(obj, "value", 1.0);
  }
  return t;
}

inline SolverConfig parse_solver(const json& j) {
  detail::check_keys(j,
                     {"algorithm", "omega", "delta", "theta", "tau", "schur_precond", "a_precond", "tol",
                      "max_iter", "gmres_restart", "dense_cap", "record_timing"},
                     "solver");
  if (!j.contains("algorithm")) throw ConfigError("solver: 'algorithm' is required");
  SolverConfig c = default_config(algorithm_from_string(j.at("algorithm").get<std::string>()));
  c.omega = detail::positive_or(j, "omega", c.omega);
  c.delta = detail::positive_or(j, "delta", c.delta);
  if (j.contains("theta")) c.theta = detail::positive_or(j, "theta", 1.0);
  if (j.contains("tau")) c.tau_strategy = parse_tau(j.at("tau"));
  if (j.contains("schur_precond")) c.schur_precond = parse_preconditioner(j.at("schur_precond"));
  if (j.contains("a_precond")) c.a_precond = parse_preconditioner(j.at("a_precond"));
  c.tol = detail::positive_or(j, "tol", c.tol);
  c.max_iter = detail::count_or(j, "max_iter", c.max_iter);
  c.gmres_restart = detail::count_or(j, "gmres_restart", c.gmres_restart);
  c.dense_cap = detail::count_or(j, "dense_cap", c.dense_cap);
  c.record_timing = detail::get_or<bool>(j, "record_timing", c.record_timing);
  c.validate();
  return c;
}

inline json solver_json(const SolverConfig& c) {
  json j{{"algorithm", to_string(c.algorithm)},
         {"omega", c.omega},
         {"delta", c.delta},
         {"tau", {{"kind", to_string(c.tau_strategy.kind)}}},
         {"schur_precond", preconditioner_json(c.schur_precond)},
         {"a_precond", preconditioner_json(c.a_precond)},
         {"tol", c.tol},
         {"max_iter", c.max_iter},
         {"gmres_restart", c.gmres_restart},
         {"dense_cap", c.dense_cap},
         {"record_timing", c.record_timing}};
  if (c.tau_strategy.kind == TauStrategy::Kind::fixed) j["tau"]["value"] = c.tau_strategy.value;
  if (c.theta) j["theta"] = *c.theta;
  return j;
}

inline WindSpec parse_wind(const json& j) {
  const json obj = j.is_string() ? json{{"kind", j}} : j;
  detail::check_keys(obj, {"kind", "c"}, "wind");
  const auto kind = detail::get_or<std::string>(obj, "kind", "");
  if (kind == "zero") return WindSpec::zero();
  if (kind == "cavity") return WindSpec::cavity();
  if (kind == "constant") {
    const auto c = detail::get_or<std::vector<double>>(obj, "c", {});
    if (c.size() != 2) throw ConfigError("constant wind needs 'c': [c1, c2]");
    return WindSpec::constant(c[0], c[1]);
  }
  throw ConfigError("unknown wind kind '" + kind + "' (zero, cavity, constant)");
}

inline ProblemConfig parse_problem(const json& j, const fs::path& base_dir) {
  if (!j.is_object() || !j.contains("type")) throw ConfigError("problem: 'type' is required");
  ProblemConfig p;
  const auto type = j.at("type").get<std::string>();
  if (type == "oseen") {
    detail::check_keys(j,
                       {"type", "grid_n", "grids", "nu", "wind", "d_mode", "eps", "pressure_fix",
                        "lid_velocity"},
                       "problem");
    p.kind = ProblemConfig::Kind::oseen;
    OseenSpec& s = p.oseen;
    s.grid_n = detail::count_or(j, "grid_n", s.grid_n);
    if (j.contains("grids")) {
      for (const auto& g : j.at("grids")) {
        if (!g.is_number_integer() || g.get<long long>() < 0) throw ConfigError("grids: bad entry");
        p.grids.push_back(g.get<std::size_t>());
      }
      if (p.grids.empty()) throw ConfigError("grids: empty list");
    }
    s.nu = detail::positive_or(j, "nu", s.nu);
    if (j.contains("wind")) s.wind = parse_wind(j.at("wind"));
    const auto d_mode = detail::get_or<std::string>(j, "d_mode", "none");
    if (d_mode == "none")
      s.d_mode = OseenSpec::DMode::none;
    else if (d_mode == "pressure_stabilization")
      s.d_mode = OseenSpec::DMode::pressure_stabilization;
    else
      throw ConfigError("unknown d_mode '" + d_mode + "'");
    s.eps = detail::get_or<double>(j, "eps", s.eps);
    const auto fix = detail::get_or<std::string>(j, "pressure_fix", "pin_first_dof");
    if (fix == "pin_first_dof")
      s.pressure_fix = OseenSpec::PressureFix::pin_first_dof;
    else if (fix == "project_constants")
      s.pressure_fix = OseenSpec::PressureFix::project_constants;
    else
      throw ConfigError("unknown pressure_fix '" + fix + "'");
    s.lid_velocity = detail::get_or<double>(j, "lid_velocity", s.lid_velocity);
    for (std::size_t n : p.grids.empty() ? std::vector<std::size_t>{s.grid_n} : p.grids) {
      OseenSpec t = s;
      t.grid_n = n;
      t.validate();
    }
  } else if (type == "synthetic") {
    detail::check_keys(j,
                       {"type", "n", "m", "target_alpha", "skew_strength", "d_rank", "seed",
                        "spectrum_condition"},
                       "problem");
    p.kind = ProblemConfig::Kind::synthetic;
    SyntheticSpec& s = p.synthetic;
    s.n = detail::count_or(j, "n", s.n);
    s.m = detail::count_or(j, "m", s.m);
    s.target_alpha = detail::get_or<double>(j, "target_alpha", s.target_alpha);
    s.skew_strength = detail::get_or<double>(j, "skew_strength", s.skew_strength);
    s.d_rank = detail::count_or(j, "d_rank", s.d_rank);
    s.seed = detail::count_or(j, "seed", s.seed);
    s.spectrum_condition = detail::get_or<double>(j, "spectrum_condition", s.spectrum_condition);
    s.validate();
  } else if (type == "matrix_market") {
    detail::check_keys(j, {"type", "A", "B", "D", "f", "g", "constant_pressure_nullspace"}, "problem");
    p.kind = ProblemConfig::Kind::matrix_market;
    auto path = [&](const char* key, bool required) -> fs::path {
      if (!j.contains(key)) {
        if (required) throw ConfigError(std::string("matrix_market problem needs '") + key + "'");
        return {};
      }
      fs::path q = j.at(key).get<std::string>();
      return q.is_relative() ? base_dir / q : q;
    };
    p.files = {path("A", true), path("B", true), path("D", false), path("f", true), path("g", false),
               detail::get_or<bool>(j, "constant_pressure_nullspace", false)};
  } else {
    throw ConfigError("unknown problem type '" + type + "' (oseen, synthetic, matrix_market)");
  }
  return p;
}

inline ExperimentConfig parse_config(const json& j, const fs::path& base_dir = ".") {
  try {
    detail::check_keys(j, {"description", "problem", "runs", "output_dir", "formats", "picard", "diagnose"},
                       "config");
    ExperimentConfig c;
    c.description = detail::get_or<std::string>(j, "description", "");
    if (!j.contains("problem")) throw ConfigError("config: 'problem' is required");
    c.problem = parse_problem(j.at("problem"), base_dir);
    std::set<std::string> labels;
    for (const auto& r : j.value("runs", json::array())) {
      detail::check_keys(r, {"label", "solver"}, "run");
      RunConfig rc;
      rc.label = detail::get_or<std::string>(r, "label", "");
      if (rc.label.empty()) throw ConfigError("run: 'label' is required");
      if (!labels.insert(rc.label).second) throw ConfigError("duplicate run label '" + rc.label + "'");
      if (!r.contains("solver")) throw ConfigError("run '" + rc.label + "': 'solver' is required");
      try {
        rc.solver = parse_solver(r.at("solver"));
      } catch (const ConfigError& e) {
        throw ConfigError("run '" + rc.label + "': " + e.what());
      }
      c.runs.push_back(std::move(rc));
    }
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("formats")) {
      c.formats.clear();
      for (const auto& f : j.at("formats")) c.formats.insert(f.get<std::string>());
    }
    for (const auto& f : c.formats)
      if (f != "jsonl" && f != "csv") throw ConfigError("unknown format '" + f + "' (jsonl, csv)");
    if (j.contains("picard")) {
      const json& pj = j.at("picard");
      detail::check_keys(pj, {"outer_tol", "max_picard"}, "picard");
      c.picard.outer_tol = detail::positive_or(pj, "outer_tol", c.picard.outer_tol);
      c.picard.max_picard = detail::count_or(pj, "max_picard", c.picard.max_picard);
      if (c.picard.max_picard == 0) throw ConfigError("picard: max_picard must be at least 1");
    }
    if (j.contains("diagnose")) {
      const json& dj = j.at("diagnose");
      detail::check_keys(dj, {"schur_precond", "a_precond", "omega", "delta", "theta", "dense_cap"},
                         "diagnose");
      DiagnoseConfig& d = c.diagnose;
      if (dj.contains("schur_precond")) d.schur_precond = parse_preconditioner(dj.at("schur_precond"));
      if (dj.contains("a_precond")) d.a_precond = parse_preconditioner(dj.at("a_precond"));
      if (dj.contains("omega")) d.omega = detail::positive_or(dj, "omega", 1.0);
      if (dj.contains("delta")) d.delta = detail::positive_or(dj, "delta", 1.0);
      if (dj.contains("theta")) d.theta = detail::positive_or(dj, "theta", 1.0);
      if (dj.contains("dense_cap")) d.dense_cap = detail::count_or(dj, "dense_cap", kDefaultDenseCap);
    }
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Presets

namespace detail {

inline json run_json(const std::string& label, const SolverConfig& c) {
  return {{"label", label}, {"solver", solver_json(c)}};
}

inline SolverConfig adaptive(PreconditionerSpec a0, std::size_t max_iter) {
  SolverConfig c = default_config(Algorithm::inexact_uzawa_3_1);
  c.omega = 0.3;
  c.delta = 0.3;
  c.a_precond = a0;
  c.max_iter = max_iter;
  return c;
}

inline SolverConfig bpv(PreconditionerSpec a0, std::size_t max_iter) {
  SolverConfig c = default_config(Algorithm::bpv_1_2);
  c.delta = 0.1;
  c.tau_strategy = TauStrategy::fixed(0.01);
  c.a_precond = a0;
  c.max_iter = max_iter;
  return c;
}

/// Drop tolerances that are powers of ten print as 1e-k.
inline std::string droptol_text(double t) {
  for (int k = 0; k <= 12; ++k)
    if (t == std::pow(10.0, -k)) return "1e-" + std::to_string(k);
  return format_double(t);
}

inline std::string precond_tag(const PreconditionerSpec& p) {
  switch (p.kind) {
    case PreconditionerSpec::Kind::ilu_droptol: return "Ilu(" + droptol_text(p.droptol) + ")";
    case PreconditionerSpec::Kind::ic_droptol: return "Cholinc(" + droptol_text(p.droptol) + ")";
    default: return p.label();
  }
}

inline json table_preset(const std::string& name, double nu) {
  const std::size_t max_iter = 10000;
  const std::vector<PreconditionerSpec> a0s{PreconditionerSpec::ilu(1e-4), PreconditionerSpec::ic(1e-4),
                                            PreconditionerSpec::jacobi(), PreconditionerSpec::exact()};
  json runs = json::array();
  for (const auto& p : a0s) runs.push_back(run_json("AdaptiveUzawa+" + precond_tag(p), adaptive(p, max_iter)));
  for (const auto& p : a0s) runs.push_back(run_json("BPV+" + precond_tag(p), bpv(p, max_iter)));
  SolverConfig g = default_config(Algorithm::gmres);
  g.max_iter = max_iter;
  runs.push_back(run_json("Gmres", g));
  std::ostringstream d;
  d << name << ": lid-driven cavity, nu = " << nu
    << ", MAC finite differences on uniform N x N grids (N = 16, 32), pressure determined up to constants"
       " (mean-free), Schur preconditioner = identity, stopping tolerance 1e-6 relative to ||(f, g)||,"
       " at most 10000 inner iterations; ns runs Picard with outer tolerance 1e-6 on the relative"
       " velocity update";
  return {{"description", d.str()},
          {"problem",
           {{"type", "oseen"},
            {"grids", {16, 32}},
            {"nu", nu},
            {"wind", "cavity"},
            {"pressure_fix", "project_constants"}}},
          {"runs", runs},
          {"output_dir", name},
          {"formats", {"csv"}},
          {"picard", {{"outer_tol", 1e-6}, {"max_picard", 50}}}};
}

}  // namespace detail

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"figure1", "table1", "table2", "table3", "figure2"};
  return names;
}

/// The preset's config document; every parameter is spelled out.
inline json preset_json(const std::string& name) {
  if (name == "table1") return detail::table_preset(name, 0.01);
  if (name == "table2") return detail::table_preset(name, 0.1);
  if (name == "table3") return detail::table_preset(name, 1.0);
  if (name == "figure1") {
    json runs = json::array();
    for (const auto& p : {PreconditionerSpec::jacobi(), PreconditionerSpec::ilu(1e-1), PreconditionerSpec::ic(1e-1),
                          PreconditionerSpec::exact()})
      runs.push_back(detail::run_json(detail::precond_tag(p), detail::adaptive(p, 20000)));
    return {{"description",
             "figure1: residual curves of the adaptive inexact Uzawa iteration (omega = 0.3, delta = 0.3) on"
             " the cavity-wind Oseen problem, 32 x 32 MAC grid, nu = 1, mean-free pressure, Schur"
             " preconditioner = identity, tolerance 1e-6 relative"},
            {"problem",
             {{"type", "oseen"},
              {"grid_n", 32},
              {"nu", 1.0},
              {"wind", "cavity"},
              {"pressure_fix", "project_constants"}}},
            {"runs", runs},
            {"output_dir", "figure1"},
            {"formats", {"csv"}}};
  }
  if (name == "figure2") {
    const auto p = PreconditionerSpec::ic(1e-1);
    return {{"description",
             "figure2: steady Navier-Stokes lid-driven cavity by Picard iteration, 32 x 32 MAC grid,"
             " nu = 0.01, inner adaptive inexact Uzawa (omega = 0.3, delta = 0.3, A_0 = Cholinc(1e-1),"
             " Schur preconditioner = identity, tolerance 1e-6), outer tolerance 1e-6; fields for"
             " streamline plots"},
            {"problem",
             {{"type", "oseen"},
              {"grid_n", 32},
              {"nu", 0.01},
              {"wind", "cavity"},
              {"pressure_fix", "project_constants"}}},
            {"runs", json::array({detail::run_json("AdaptiveUzawa+" + detail::precond_tag(p),
                                                   detail::adaptive(p, 20000))})},
            {"output_dir", "figure2"},
            {"formats", {"csv"}},
            {"picard", {{"outer_tol", 1e-6}, {"max_picard", 100}}}};
  }
  throw ConfigError("unknown preset '" + name + "' (figure1, table1, table2, table3, figure2)");
}

// ---------------------------------------------------------------------------
// Problem assembly

struct NamedSystem {
  std::string tag;  ///< "" or "n16" etc.
  SaddleSystem system;
  std::optional<OseenSpec> oseen;
};

inline std::vector<OseenSpec> oseen_specs(const ProblemConfig& p) {
  std::vector<OseenSpec> out;
  for (std::size_t n : p.grids.empty() ? std::vector<std::size_t>{p.oseen.grid_n} : p.grids) {
    OseenSpec s = p.oseen;
    s.grid_n = n;
    out.push_back(s);
  }
  return out;
}

inline SaddleSystem load_matrix_market(const MatrixMarketPaths& f) {
  SaddleSystem s;
  s.A = io::read_matrix_market(f.A);
  s.B = io::read_matrix_market(f.B);
  s.D = f.D.empty() ? CsrMatrix::zero(s.B.cols(), s.B.cols()) : io::read_matrix_market(f.D);
  s.f = io::read_vector(f.f);
  s.g = f.g.empty() ? Vector(s.B.cols(), 0.0) : io::read_vector(f.g);
  s.constant_pressure_nullspace = f.constant_pressure_nullspace;
  validate(s);
  return s;
}

inline std::vector<NamedSystem> build_systems(const ProblemConfig& p) {
  std::vector<NamedSystem> out;
  switch (p.kind) {
    case ProblemConfig::Kind::oseen:
      for (const auto& s : oseen_specs(p))
        out.push_back({"n" + std::to_string(s.grid_n), generate_oseen(s), s});
      break;
    case ProblemConfig::Kind::synthetic: out.push_back({"", generate_synthetic(p.synthetic).system, {}}); break;
    case ProblemConfig::Kind::matrix_market: out.push_back({"", load_matrix_market(p.files), {}}); break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output helpers

inline std::string slug(const std::string& label) {
  std::string s;
  for (char c : label) s += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.') ? c : '_';
  while (!s.empty() && s.back() == '_') s.pop_back();
  return s.empty() ? "run" : s;
}

inline std::string file_stem(const std::string& label, const std::string& tag) {
  return tag.empty() ? slug(label) : slug(label) + "_" + tag;
}

inline void ensure_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  const fs::path probe = dir / ".write_probe";
  {
    std::ofstream p(probe);
    if (!p) throw IoError("output directory " + dir.string() + " is not writable");
  }
  fs::remove(probe, ec);
}

inline std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

inline void write_text(const fs::path& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::string full_double(double v) {
  std::ostringstream s;
  s << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return s.str();
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

// ---------------------------------------------------------------------------
// Commands

struct Options {
  std::optional<fs::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> format;
  bool no_timing = false;
};

inline void apply_options(ExperimentConfig& c, const Options& o) {
  if (o.out) c.output_dir = *o.out;
  if (o.seed) c.problem.synthetic.seed = *o.seed;
  if (o.format) {
    if (*o.format != "jsonl" && *o.format != "csv") throw ConfigError("--format must be jsonl or csv");
    c.formats = {*o.format};
  }
  if (o.no_timing)
    for (auto& r : c.runs) r.solver.record_timing = false;
}

struct RunSummary {
  std::string label;
  std::string tag;
  std::size_t iterations = 0;
  std::size_t records = 0;
  double final_residual = 0.0;
  double final_relative_residual = 0.0;
  double wall_seconds = 0.0;
  std::string status;
  std::string message;
};

/// Writes A.mtx, B.mtx, D.mtx, f.vec, g.vec (vectors in the binary format) for
/// every assembled system; multiple grids go to subdirectories named n<N>.
inline int cmd_generate(const ExperimentConfig& c, std::ostream& log) {
  ensure_output_dir(c.output_dir);
  const auto systems = build_systems(c.problem);
  for (const auto& s : systems) {
    const fs::path dir = systems.size() > 1 ? c.output_dir / s.tag : c.output_dir;
    ensure_output_dir(dir);
    io::write_matrix_market(dir / "A.mtx", s.system.A);
    io::write_matrix_market(dir / "B.mtx", s.system.B);
    io::write_matrix_market(dir / "D.mtx", s.system.D);
    io::write_vector_binary(dir / "f.vec", s.system.f);
    io::write_vector_binary(dir / "g.vec", s.system.g);
    log << "wrote " << dir.string() << " (n = " << s.system.n() << ", m = " << s.system.m() << ")\n";
  }
  return kOk;
}

inline void write_traces(const ExperimentConfig& c, const std::string& stem, const IterationTrace& t) {
  if (c.formats.count("jsonl")) {
    auto out = open_output(c.output_dir / (stem + ".jsonl"));
    write_trace_jsonl(out, t);
    if (!out) throw IoError("write failed: " + stem + ".jsonl");
  }
  if (c.formats.count("csv")) {
    auto out = open_output(c.output_dir / (stem + ".csv"));
    write_trace_csv(out, t);
    if (!out) throw IoError("write failed: " + stem + ".csv");
  }
}

inline void print_summary(std::ostream& os, const std::vector<RunSummary>& rows) {
  std::size_t w = 5;
  for (const auto& r : rows) w = std::max(w, r.label.size());
  std::string last_tag = "\x01";
  for (const auto& r : rows) {
    if (r.tag != last_tag) {
      if (!r.tag.empty()) os << "\n[" << r.tag << "]\n";
      os << std::left << std::setw(static_cast<int>(w)) << "label" << "  " << std::right << std::setw(7)
         << "iters" << "  " << std::setw(14) << "final residual" << "  " << std::setw(12) << "wall seconds"
         << "  status\n";
      last_tag = r.tag;
    }
    os << std::left << std::setw(static_cast<int>(w)) << r.label << "  " << std::right << std::setw(7)
       << r.iterations << "  " << std::setw(14) << format_double(r.final_relative_residual, 4) << "  "
       << std::setw(12) << format_double(r.wall_seconds, 4) << "  " << r.status;
    if (!r.message.empty()) os << " (" << r.message << ")";
    os << "\n";
  }
}

inline void write_summary_csv(const fs::path& path, const std::vector<RunSummary>& rows) {
  auto out = open_output(path);
  out << "label,grid,iters,final_residual,final_relative_residual,wall_seconds,status,message\n";
  for (const auto& r : rows)
    out << csv_field(r.label) << "," << r.tag << "," << r.iterations << "," << full_double(r.final_residual)
        << "," << full_double(r.final_relative_residual) << "," << full_double(r.wall_seconds) << ","
        << r.status << "," << csv_field(r.message) << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

/// One trace file per (run, grid) and a summary table. Failing runs are
/// recorded and the rest continue; any breakdown makes the exit code 2.
inline int cmd_solve(const ExperimentConfig& c, std::ostream& os, std::vector<RunSummary>* summary_out = nullptr) {
  if (c.runs.empty()) throw ConfigError("no runs configured");
  ensure_output_dir(c.output_dir);
  const auto systems = build_systems(c.problem);
  std::vector<RunSummary> rows;
  bool breakdown = false;
  for (const auto& s : systems)
    for (const auto& run : c.runs) {
      RunSummary row;
      row.label = run.label;
      row.tag = s.tag;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const SolveResult r = solve(s.system, run.solver);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_traces(c, file_stem(run.label, s.tag), r.trace);
        row.iterations = r.trace.iterations();
        row.records = r.trace.records.size();
        row.final_residual = r.trace.final_residual();
        row.final_relative_residual = r.trace.final_relative_residual();
        row.wall_seconds = run.solver.record_timing ? wall : 0.0;
        row.status = to_string(r.trace.status);
        row.message = r.trace.message;
        breakdown = breakdown || r.trace.status == SolveStatus::breakdown;
      } catch (const IoError&) {
        throw;
      } catch (const std::exception& e) {
        row.status = "error";
        row.message = e.what();
        breakdown = breakdown || dynamic_cast<const BreakdownError*>(&e) != nullptr;
      }
      rows.push_back(row);
    }
  print_summary(os, rows);
  write_summary_csv(c.output_dir / "summary.csv", rows);
  if (summary_out) *summary_out = rows;
  return breakdown ? kBreakdown : kOk;
}

namespace detail {

inline json optional_json(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? json(*v) : json(nullptr);
}

}  // namespace detail

inline json report_json(const SpectralReport& r) {
  using detail::optional_json;
  return {{"alpha", optional_json(r.alpha)},
          {"kappa0", optional_json(r.kappa0)},
          {"kappa1", optional_json(r.kappa1)},
          {"kappa2", optional_json(r.kappa2)},
          {"kappa3", optional_json(r.kappa3)},
          {"beta1", optional_json(r.beta1)},
          {"beta2", optional_json(r.beta2)},
          {"beta3", optional_json(r.beta3)},
          {"c0", optional_json(r.c0)},
          {"theta_max", optional_json(r.theta_max)},
          {"theta_max_ss", optional_json(r.theta_max_ss)},
          {"omega", optional_json(r.omega)},
          {"delta", optional_json(r.delta)},
          {"omega_max", optional_json(r.omega_max)},
          {"delta_max", optional_json(r.delta_max)},
          {"delta_bound_beta3", optional_json(r.delta_bound_beta3)},
          {"delta_bound_error", optional_json(r.delta_bound_error)},
          {"omega_bar", optional_json(r.omega_bar)},
          {"Delta", optional_json(r.Delta)},
          {"rho_bar", optional_json(r.rho_bar)},
          {"notes", r.notes}};
}

/// One line per convergence window: the exact-solve window for theta (with
/// H, then with the symmetrized inverse) and the inexact window for omega.
inline std::vector<std::string> verdict_lines(const SpectralReport& r, std::optional<double> theta) {
  std::vector<std::string> out;
  auto theta_line = [&](const char* name, const std::optional<double>& tmax) {
    std::string s = std::string("verdict ") + name + ": ";
    if (!tmax) return s + "undetermined (spectral constants unavailable)";
    s += "theta_max=" + format_double(*tmax);
    if (theta) s += ", theta=" + format_double(*theta) + (*theta <= *tmax ? " inside" : " outside") + " window";
    return s;
  };
  out.push_back(theta_line("exact window (H)", r.theta_max));
  out.push_back(theta_line("exact window (Ss)", r.theta_max_ss));
  std::string s = "verdict inexact window: ";
  if (!r.omega_max) {
    s += "undetermined";
    if (r.delta && !(*r.delta > 0.0 && *r.delta < 0.5))
      s += " (delta=" + format_double(*r.delta) + " not in (0, 1/2))";
    else if (!r.kappa0 || !r.beta3 || !r.alpha)
      s += " (alpha, kappa0 or beta3 unavailable)";
  } else {
    s += "omega_max=" + format_double(*r.omega_max);
    if (r.omega)
      s += ", omega=" + format_double(*r.omega) + (*r.omega < *r.omega_max ? " inside" : " outside") + " window";
    if (r.delta && r.delta_bound_beta3 && r.delta_bound_error)
      s += "; delta=" + format_double(*r.delta) + (*r.delta < 0.5 ? " < 1/2" : " >= 1/2") +
           ", 1/(4(1+beta3))=" + format_double(*r.delta_bound_beta3) +
           ", 1/(4 alpha^2 kappa0^2)=" + format_double(*r.delta_bound_error);
  }
  out.push_back(s);
  return out;
}

inline ReportInputs report_inputs(const ExperimentConfig& c) {
  ReportInputs in;
  if (!c.runs.empty()) {
    const SolverConfig& s = c.runs.front().solver;
    in.schur_precond = s.schur_precond;
    in.a_precond = s.a_precond;
    in.omega = s.omega;
    in.delta = s.delta;
    in.cap = s.dense_cap;
  }
  const DiagnoseConfig& d = c.diagnose;
  if (d.schur_precond) in.schur_precond = *d.schur_precond;
  if (d.a_precond) in.a_precond = *d.a_precond;
  if (d.omega) in.omega = d.omega;
  if (d.delta) in.delta = d.delta;
  if (d.dense_cap) in.cap = *d.dense_cap;
  return in;
}

/// Pretty JSON report (one object, or an array with a "grid" key per entry
/// when several grids are configured) followed by verdict lines.
inline int cmd_diagnose(const ExperimentConfig& c, std::ostream& os) {
  ensure_output_dir(c.output_dir);
  const ReportInputs in = report_inputs(c);
  std::optional<double> theta = c.diagnose.theta;
  if (!theta && !c.runs.empty()) theta = c.runs.front().solver.theta;
  const auto systems = build_systems(c.problem);
  json all = json::array();
  std::vector<std::string> verdicts;
  for (const auto& s : systems) {
    const SpectralReport r = spectral_report(s.system, in);
    json j = report_json(r);
    if (!s.tag.empty()) j["grid"] = s.tag;
    j["n"] = s.system.n();
    j["m"] = s.system.m();
    all.push_back(j);
    for (const auto& v : verdict_lines(r, theta)) verdicts.push_back(s.tag.empty() ? v : "[" + s.tag + "] " + v);
  }
  const json doc = all.size() == 1 ? all.front() : all;
  os << doc.dump(2) << "\n";
  for (const auto& v : verdicts) os << v << "\n";
  write_text(c.output_dir / "report.json", doc.dump(2) + "\n");
  return kOk;
}

struct PicardSummary {
  std::string label;
  std::string tag;
  std::size_t picard_iterations = 0;
  double mean_inner = 0.0;
  std::size_t total_inner = 0;
  bool converged = false;
  double wall_seconds = 0.0;
  std::string status;
  std::string message;
};

/// Picard runs for every (run, grid): per-step CSV, field CSVs and a summary.
inline int cmd_ns(const ExperimentConfig& c, std::ostream& os, std::vector<PicardSummary>* summary_out = nullptr) {
  if (c.runs.empty()) throw ConfigError("no runs configured");
  if (c.problem.kind != ProblemConfig::Kind::oseen) throw ConfigError("ns needs an oseen problem");
  ensure_output_dir(c.output_dir);
  std::vector<PicardSummary> rows;
  bool breakdown = false;
  for (const auto& spec : oseen_specs(c.problem))
    for (const auto& run : c.runs) {
      PicardSummary row;
      row.label = run.label;
      row.tag = "n" + std::to_string(spec.grid_n);
      const std::string stem = file_stem(run.label, row.tag);
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const PicardResult r =
            picard_navier_stokes(spec, run.solver, c.picard.outer_tol, c.picard.max_picard);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        row.picard_iterations = r.picard_iterations();
        row.mean_inner = r.mean_inner_iterations();
        for (const auto& st : r.steps) row.total_inner += st.inner_iterations;
        row.converged = r.converged;
        row.wall_seconds = run.solver.record_timing ? wall : 0.0;
        row.status = r.converged ? "converged" : "max_picard";
        auto steps = open_output(c.output_dir / ("picard_" + stem + ".csv"));
        steps << "step,inner_iterations,inner_status,inner_relative_residual,update_ratio,wall_seconds\n";
        for (std::size_t k = 0; k < r.steps.size(); ++k) {
          const auto& st = r.steps[k];
          steps << k + 1 << "," << st.inner_iterations << "," << to_string(st.inner_status) << ","
                << full_double(st.inner_relative_residual) << "," << full_double(st.update_ratio) << ","
                << full_double(run.solver.record_timing ? st.wall_seconds : 0.0) << "\n";
        }
        if (!steps) throw IoError("write failed: picard_" + stem + ".csv");
        export_fields(c.output_dir / ("fields_" + stem), spec, r.velocity, r.pressure);
      } catch (const IoError&) {
        throw;
      } catch (const std::exception& e) {
        row.status = "error";
        row.message = e.what();
        breakdown = breakdown || dynamic_cast<const BreakdownError*>(&e) != nullptr;
      }
      rows.push_back(row);
    }

  std::size_t w = 5;
  for (const auto& r : rows) w = std::max(w, r.label.size());
  std::string last_tag;
  for (const auto& r : rows) {
    if (r.tag != last_tag) {
      os << "\n[" << r.tag << "]\n"
         << std::left << std::setw(static_cast<int>(w)) << "label" << "  " << std::right << std::setw(6)
         << "picard" << "  " << std::setw(10) << "mean inner" << "  " << std::setw(12) << "wall seconds"
         << "  status\n";
      last_tag = r.tag;
    }
    os << std::left << std::setw(static_cast<int>(w)) << r.label << "  " << std::right << std::setw(6)
       << r.picard_iterations << "  " << std::setw(10) << format_double(r.mean_inner, 4) << "  " << std::setw(12)
       << format_double(r.wall_seconds, 4) << "  " << r.status;
    if (!r.message.empty()) os << " (" << r.message << ")";
    os << "\n";
  }
  auto out = open_output(c.output_dir / "picard_summary.csv");
  out << "label,grid,picard_iterations,mean_inner_iterations,total_inner_iterations,converged,wall_seconds,"
         "status,message\n";
  for (const auto& r : rows)
    out << csv_field(r.label) << "," << r.tag << "," << r.picard_iterations << "," << full_double(r.mean_inner)
        << "," << r.total_inner << "," << (r.converged ? "true" : "false") << "," << full_double(r.wall_seconds)
        << "," << r.status << "," << csv_field(r.message) << "\n";
  if (!out) throw IoError("write failed: picard_summary.csv");
  if (summary_out) *summary_out = rows;
  return breakdown ? kBreakdown : kOk;
}

// ---------------------------------------------------------------------------
// Entry point

inline json load_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

/// Loads the config (preset or file), applies command-line overrides and
/// records the resolved document as config.json in the output directory.
inline ExperimentConfig resolve_config(const std::optional<fs::path>& config_path,
                                       const std::optional<std::string>& preset, const Options& opt) {
  if (config_path && preset) throw ConfigError("--config and --preset are mutually exclusive");
  if (!config_path && !preset) throw ConfigError("one of --config or --preset is required");
  const json doc = preset ? preset_json(*preset) : load_config_file(*config_path);
  const fs::path base = config_path ? config_path->parent_path() : fs::path(".");
  ExperimentConfig c = parse_config(doc, base.empty() ? fs::path(".") : base);
  apply_options(c, opt);
  return c;
}

inline int run(int argc, const char* const* argv, std::ostream& os = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Adaptive Uzawa saddle-point solver harness"};
  app.require_subcommand(1);
  std::optional<std::string> config_path, preset, out_dir, format;
  std::optional<std::uint64_t> seed;
  bool no_timing = false;
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] :
       std::vector<std::pair<const char*, const char*>>{{"generate", "write the assembled system to files"},
                                                       {"solve", "run every configured solver"},
                                                       {"diagnose", "spectral report and window verdicts"},
                                                       {"ns", "Picard Navier-Stokes runs with field export"}}) {
    CLI::App* s = app.add_subcommand(name, help);
    s->add_option("--config", config_path, "JSON config file");
    s->add_option("--preset", preset, "figure1, table1, table2, table3 or figure2");
    s->add_option("--out", out_dir, "output directory");
    s->add_option("--seed", seed, "seed for synthetic problems");
    s->add_option("--format", format, "trace format: jsonl or csv");
    s->add_flag("--no-timing", no_timing, "write zero wall times so outputs are reproducible");
    subs.push_back(s);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, os, err);
    return code == 0 ? kOk : kConfigError;
  }
  try {
    Options opt;
    if (out_dir) opt.out = fs::path(*out_dir);
    opt.seed = seed;
    opt.format = format;
    opt.no_timing = no_timing;
    const std::optional<fs::path> cfg_path = config_path ? std::optional<fs::path>(*config_path) : std::nullopt;
    const ExperimentConfig c = resolve_config(cfg_path, preset, opt);
    ensure_output_dir(c.output_dir);
    json resolved = preset ? preset_json(*preset) : load_config_file(*cfg_path);
    resolved["output_dir"] = c.output_dir.string();
    write_text(c.output_dir / "config.json", resolved.dump(2) + "\n");
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (!c.description.empty()) os << c.description << "\n";
    if (cmd == "generate") return cmd_generate(c, os);
    if (cmd == "solve") return cmd_solve(c, os);
    if (cmd == "diagnose") return cmd_diagnose(c, os);
    return cmd_ns(c, os);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const BreakdownError& e) {
    err << "breakdown: " << e.what() << "\n";
    return kBreakdown;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
}

}  // namespace uzawa::cli
