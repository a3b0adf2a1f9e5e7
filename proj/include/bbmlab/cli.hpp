#pragma once

// Experiment runner behind the command-line tool: executes a parsed config,
// assembles the CSV table and the JSON report as strings (so callers and
// tests can compare bytes without touching the filesystem), and carries the
// process exit code the run earned.
//
// Exit codes: 0 verdict matches the expectation, 2 tolerance or expectation
// failed, 3 divergence where convergence was expected, 1 engine error
// (thrown as bbmlab::error; the binary turns it into exit 1).

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bbmlab/config.hpp"
#include "bbmlab/limits.hpp"

namespace bbmlab {

inline constexpr const char* engine_version = "1.0.0";

struct RunArtifacts {
  ExperimentConfig config;
  std::string csv;                  // full contents of <name>.csv
  nlohmann::ordered_json report;    // full contents of <name>.report.json
  int exit_code = 0;
  std::string message;              // one-line verdict for the terminal
};

namespace detail {

inline const char* growth_name(GrowthClass g) {
  switch (g) {
    case GrowthClass::convergent: return "convergent";
    case GrowthClass::divergent: return "divergent";
    case GrowthClass::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

struct mode_result {
  std::vector<SweepRow> rows;
  std::optional<LimitFit> fit;
  std::optional<double> target;
  std::optional<double> deviation;
  std::string verdict = "pass";
  int exit_code = 0;
  std::string message;
};

inline std::string percent(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3g%%", 100 * x);
  return buf;
}

// Relative-gap pass/fail shared by the sweep and mollifier modes.
inline void judge_against_target(mode_result& r, double tolerance, const char* what) {
  if (!r.fit.has_value()) {
    r.verdict = "inconclusive";
    r.exit_code = 0;
    r.message = std::string(what) + ": no limit fit available, nothing to judge";
    return;
  }
  if (!r.target.has_value()) {
    r.verdict = "no_target";
    r.exit_code = 0;
    r.message = std::string(what) + ": limit " + format_g(r.fit->limit) +
                " (no classical target available for this field)";
    return;
  }
  double gap = std::fabs(r.fit->limit - *r.target) / std::max(std::fabs(*r.target), 1e-300);
  r.deviation = gap;
  bool ok = gap <= tolerance;
  r.verdict = ok ? "pass" : "tolerance_exceeded";
  r.exit_code = ok ? 0 : 2;
  r.message = std::string(what) + ": limit " + format_g(r.fit->limit) + " vs target " +
              format_g(*r.target) + " (deviation " + percent(gap) +
              (ok ? " within " : " exceeds ") + percent(tolerance) + ")";
}

template <int N>
mode_result run_sweep(const ExperimentConfig& cfg) {
  mode_result r;
  auto d = parse_domain<N>(cfg.domain_expr);
  auto f = parse_field<N>(cfg.field_expr);
  MeshSchedule sched = cfg.pitches.empty() ? default_mesh_schedule(cfg.s_grid, cfg.pitch)
                                           : MeshSchedule{cfg.pitches, 4};
  SweepResult sweep = bbm_sweep(f, d, cfg.p, cfg.s_grid, sched);
  r.rows = sweep.rows;
  r.target = sweep.target;
  try {
    r.fit = extrapolate_limit(sweep);
  } catch (const error& e) {
    if (e.code() != errc::insufficient_data) throw;
  }
  judge_against_target(r, cfg.tolerance, "sweep");
  return r;
}

template <int N>
mode_result run_probe(const ExperimentConfig& cfg) {
  mode_result r;
  auto d = parse_domain<N>(cfg.domain_expr);
  auto f = parse_field<N>(cfg.field_expr);
  KernelParams k{cfg.s, cfg.p, N};
  std::vector<double> values;
  for (double h : cfg.pitches) {
    auto mesh = build_mesh(d, h);
    auto est = gagliardo_seminorm(f, d, k, mesh);
    values.push_back(est.value);
    r.rows.push_back({cfg.s, est.value, (1 - cfg.s) * est.value, est.error_estimate, h});
  }
  GrowthClass g = classify_growth(values);
  r.verdict = growth_name(g);
  bool expect_convergent = cfg.expect == Expectation::convergent;
  if ((expect_convergent && g == GrowthClass::convergent) ||
      (!expect_convergent && g == GrowthClass::divergent)) {
    r.exit_code = 0;
    r.message = std::string("probe: ") + r.verdict + ", as expected";
  } else if (expect_convergent && g == GrowthClass::divergent) {
    r.exit_code = 3;
    r.message = "probe: divergent growth where convergence was expected";
  } else {
    r.exit_code = 2;
    r.message = std::string("probe: ") + r.verdict + " where " + to_string(cfg.expect) +
                " was expected";
  }
  return r;
}

// Table rows reuse the sweep CSV shape: the s column carries p and the
// pitch column carries the dimension.
inline mode_result run_kappa_table(const ExperimentConfig& cfg) {
  mode_result r;
  for (int dim = 1; dim <= 3; ++dim)
    for (double p : cfg.p_grid) {
      double k = kappa(dim, p);
      r.rows.push_back({p, k, k, 0.0, static_cast<double>(dim)});
    }
  r.verdict = "pass";
  r.message = "kappa table: " + std::to_string(r.rows.size()) + " entries across dimensions 1-3";
  return r;
}

template <int N>
mode_result run_mollifier(const ExperimentConfig& cfg) {
  mode_result r;
  auto d = parse_domain<N>(cfg.domain_expr);
  auto f = parse_field<N>(cfg.field_expr);
  auto coarse = build_mesh(d, cfg.pitch);
  auto fine = build_mesh(d, cfg.pitch / 2);
  for (double eps : cfg.eps_list) {
    MollifierParams m{eps, cfg.p, cfg.R, N};
    auto c = mollified_functional(f, d, m, cfg.p, coarse);
    auto fe = mollified_functional(f, d, m, cfg.p, fine);
    double v = richardson(c.value, fe.value);
    r.rows.push_back(
        {1 - eps, v, v, std::fabs(c.value - fe.value) + fe.error_estimate, cfg.pitch / 2});
  }
  auto lc = local_seminorm_w1p(f, d, cfg.p, coarse);
  auto lf = local_seminorm_w1p(f, d, cfg.p, fine);
  SweepResult sr{r.rows, kappa(N, cfg.p) * richardson(lc.value, lf.value), N, cfg.p};
  r.target = sr.target;
  try {
    r.fit = extrapolate_limit(sr);
  } catch (const error& e) {
    if (e.code() != errc::insufficient_data) throw;
    // too few small-eps rows for a fit: judge the finest row directly
    LimitFit direct;
    direct.limit = r.rows.back().seminorm;
    r.fit = direct;
  }
  judge_against_target(r, cfg.tolerance, "mollifier");
  return r;
}

template <int N>
mode_result run_cross_term(const ExperimentConfig& cfg) {
  mode_result r;
  auto d1 = parse_domain<N>(cfg.domain_expr);
  auto d2 = parse_domain<N>(cfg.domain2_expr);
  auto f = parse_field<N>(cfg.field_expr);
  auto m1 = build_mesh(d1, cfg.pitch);
  auto m2 = build_mesh(d2, cfg.pitch);
  for (double s : cfg.s_grid) {
    KernelParams k{s, cfg.p, N};
    auto est = cross_term(f, d1, d2, k, m1, m2);
    r.rows.push_back({s, est.value, (1 - s) * est.value, est.error_estimate, cfg.pitch});
  }
  double first = r.rows.front().scaled, last = r.rows.back().scaled;
  bool decays = last < 0.5 * first;
  r.verdict = decays ? "decay" : "no_decay";
  r.exit_code = decays ? 0 : 2;
  r.message = "cross term: scaled value " + format_g(first) + " -> " + format_g(last) +
              (decays ? " (vanishing, as expected)" : " (no decay)");
  return r;
}

template <int N>
mode_result run_typed(const ExperimentConfig& cfg) {
  switch (cfg.mode) {
    case Mode::sweep: return run_sweep<N>(cfg);
    case Mode::probe: return run_probe<N>(cfg);
    case Mode::kappa_table: return run_kappa_table(cfg);
    case Mode::mollifier: return run_mollifier<N>(cfg);
    case Mode::cross_term: return run_cross_term<N>(cfg);
  }
  fail(errc::invalid_parameter, "run_experiment: unknown mode");
}

inline std::string rows_to_csv(const std::vector<SweepRow>& rows) {
  std::string out = "s,seminorm,scaled,error,pitch\r\n";
  for (const auto& r : rows) {
    out += format_g(r.s) + "," + format_g(r.seminorm) + "," + format_g(r.scaled) + "," +
           format_g(r.error) + "," + format_g(r.pitch) + "\r\n";
  }
  return out;
}

}  // namespace detail

inline RunArtifacts run_experiment(const ExperimentConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  detail::mode_result r;
  switch (cfg.dim) {
    case 1: r = detail::run_typed<1>(cfg); break;
    case 2: r = detail::run_typed<2>(cfg); break;
    case 3: r = detail::run_typed<3>(cfg); break;
    default: fail(errc::invalid_parameter, "run_experiment: dim must be 1, 2, or 3");
  }
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  RunArtifacts art;
  art.config = cfg;
  art.csv = detail::rows_to_csv(r.rows);
  art.exit_code = r.exit_code;
  art.message = cfg.name + " [" + r.verdict + "] " + r.message;

  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["name"] = cfg.name;
  j["engine_version"] = engine_version;
  j["mode"] = to_string(cfg.mode);
  j["config"] = serialize(cfg);
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json o;
    o["s"] = row.s;
    o["seminorm"] = row.seminorm;
    o["scaled"] = row.scaled;
    o["error"] = row.error;
    o["pitch"] = row.pitch;
    rows.push_back(std::move(o));
  }
  j["rows"] = std::move(rows);
  if (r.fit) {
    nlohmann::ordered_json fo;
    fo["limit"] = r.fit->limit;
    fo["slope"] = r.fit->slope;
    fo["curvature"] = r.fit->curvature;
    fo["residual"] = r.fit->residual;
    fo["model"] = r.fit->model == FitModel::quadratic ? "quadratic" : "linear";
    j["fit"] = std::move(fo);
  } else {
    j["fit"] = nullptr;
  }
  j["target"] = r.target ? nlohmann::ordered_json(*r.target) : nullptr;
  j["deviation"] = r.deviation ? nlohmann::ordered_json(*r.deviation) : nullptr;
  j["tolerance"] = cfg.tolerance;
  j["verdict"] = r.verdict;
  j["exit_code"] = r.exit_code;
  // wall-clock time lives in this one key only; determinism comparisons
  // erase it and require everything else to match byte for byte
  j["wall_seconds"] = wall;
  art.report = std::move(j);
  return art;
}

// Writes <name>.csv and <name>.report.json under the config's output
// directory (or the override), creating the directory if needed.
inline void write_artifacts(const RunArtifacts& art, const std::string& out_override = "") {
  namespace fs = std::filesystem;
  fs::path dir = out_override.empty() ? art.config.output_dir : out_override;
  std::error_code ec;
  fs::create_directories(dir, ec);
  auto put = [&](const fs::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    require(out.good(), errc::construction_failed, "cannot open " + p.string() + " for writing");
    out << body;
    require(out.good(), errc::construction_failed, "short write to " + p.string());
  };
  put(dir / (art.config.name + ".csv"), art.csv);
  put(dir / (art.config.name + ".report.json"), art.report.dump(2) + "\n");
}

// ----------------------------------------------------------------- presets
//
// Each preset is a config file embedded verbatim, so `presets run` exercises
// the same parse path as `run --config`.

inline const std::vector<std::pair<std::string, std::string>>& presets() {
  static const std::vector<std::pair<std::string, std::string>> table = {
      {"affine_1d",
       "# unit slope on the unit interval: the scaled sweep must land on the\n"
       "# classical limit 1 within 2 percent\n"
       "name = affine_1d\n"
       "dim = 1\n"
       "mode = sweep\n"
       "domain = box 0 1\n"
       "field = affine 1 0\n"
       "p = 2\n"
       "pitch = 0.0625\n"
       "tolerance = 0.02\n"},
      {"affine_1d_coarse_strict",
       "# same experiment on a deliberately coarse mesh with a tolerance far\n"
       "# below the extrapolation error: exits 2 by design\n"
       "name = affine_1d_coarse_strict\n"
       "dim = 1\n"
       "mode = sweep\n"
       "domain = box 0 1\n"
       "field = affine 1 0\n"
       "p = 2\n"
       "pitch = 0.25\n"
       "tolerance = 0.000001\n"},
      {"bump_2d",
       "name = bump_2d\n"
       "dim = 2\n"
       "mode = sweep\n"
       "domain = box -1 -1 1 1\n"
       "field = bump 0 0 0.8 1\n"
       "p = 2\n"
       "pitch = 0.125\n"
       "tolerance = 0.05\n"},
      {"ball_perimeter_p1",
       "# characteristic function of a disk at p = 1: the sweep limit is the\n"
       "# BV route, perimeter 2*pi*r times the 2-D limit constant 4\n"
       "name = ball_perimeter_p1\n"
       "dim = 2\n"
       "mode = sweep\n"
       "domain = box -1 -1 1 1\n"
       "field = indicator ball 0 0 0.5\n"
       "p = 1\n"
       "pitch = 0.0625\n"
       "tolerance = 0.05\n"},
      {"cusp_divergence",
       "# supercritical order on the cusp field: seminorms must blow up\n"
       "name = cusp_divergence\n"
       "dim = 2\n"
       "mode = probe\n"
       "domain = cusp\n"
       "field = cuspfield\n"
       "s = 0.9\n"
       "p = 2\n"
       "pitches = 0.125 0.0625 0.03125 0.015625\n"
       "expect = divergent\n"},
      {"cusp_convergence",
       "# subcritical order on the same field: seminorms settle\n"
       "name = cusp_convergence\n"
       "dim = 2\n"
       "mode = probe\n"
       "domain = cusp\n"
       "field = cuspfield\n"
       "s = 0.6\n"
       "p = 2\n"
       "pitches = 0.0625 0.03125 0.015625 0.0078125\n"
       "expect = convergent\n"},
      {"cross_decay",
       "# disjoint supports: the scaled cross term must vanish as s -> 1\n"
       "name = cross_decay\n"
       "dim = 1\n"
       "mode = cross_term\n"
       "domain = box 0 0.4\n"
       "domain2 = box 0.6 1\n"
       "field = bump 0.2 0.15 1\n"
       "p = 2\n"
       "s_grid = 0.9 0.99\n"
       "pitch = 0.03125\n"},
      {"mollifier_1d",
       "# concentrating-kernel functionals against kappa times the local\n"
       "# seminorm; eps plays the role of 1 - s\n"
       "name = mollifier_1d\n"
       "dim = 1\n"
       "mode = mollifier\n"
       "domain = box 0 1\n"
       "field = affine 1 0\n"
       "p = 1\n"
       "eps_list = 0.5 0.2 0.1 0.05\n"
       "R = 2\n"
       "pitch = 0.0625\n"
       "tolerance = 0.1\n"},
      {"ball_bump_2d",
       "# smooth field on a curved domain: no straight edges anywhere\n"
       "name = ball_bump_2d\n"
       "dim = 2\n"
       "mode = sweep\n"
       "domain = ball 0 0 0.9\n"
       "field = bump 0 0 0.7 1\n"
       "p = 2\n"
       "pitch = 0.125\n"
       "tolerance = 0.05\n"},
      {"kappa_demo",
       "name = kappa_demo\n"
       "mode = kappa_table\n"
       "p_grid = 1 1.5 2 3\n"},
  };
  return table;
}

inline const std::string* find_preset(const std::string& name) {
  for (const auto& [n, text] : presets())
    if (n == name) return &text;
  return nullptr;
}

}  // namespace bbmlab
