#include "tpg/cli.hpp"

#include <yaml-cpp/yaml.h>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "tpg/io.hpp"
#include "tpg/stability.hpp"

namespace fs = std::filesystem;

namespace tpg {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFiniteFlux:
    case ErrorCode::NonFiniteRhs:
    case ErrorCode::LinearSolveDiverged:
    case ErrorCode::NonFiniteState:
    case ErrorCode::PositivityBreached:
      return kExitSolver;
    default:
      return kExitConfig;
  }
}

namespace {

void report_error(std::ostream& err, const Error& e) {
  err << "error code=" << to_string(e.code());
  if (!e.detail().empty()) err << ' ' << e.detail();
  err << '\n';
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Config, "path=" + dir + " reason=\"" + ec.message() + "\"");
}

void write_manifest(const std::string& path, const RunConfig& cfg, const RunOutcome* r, const Error* failure) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "config" << YAML::Value;
  emit_config(out, cfg);
  out << YAML::Key << "result" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "status" << YAML::Value << (failure ? "failed" : "ok");
  if (failure) {
    out << YAML::Key << "error" << YAML::Value << std::string(to_string(failure->code()));
    out << YAML::Key << "detail" << YAML::Value << failure->detail();
  }
  if (r) {
    const RunResult& res = r->result;
    out << YAML::Key << "t_final" << YAML::Value << (res.series.size() ? res.series.times.back() : 0.0);
    out << YAML::Key << "steps" << YAML::Value << res.steps;
    out << YAML::Key << "linear_iterations" << YAML::Value << res.linear_iterations;
    out << YAML::Key << "regime" << YAML::Value << r->regime;
    if (!r->regime_note.empty()) out << YAML::Key << "regime_note" << YAML::Value << r->regime_note;
    out << YAML::Key << "regime_window" << YAML::Value << r->window;
    if (std::isfinite(r->ubar)) out << YAML::Key << "ubar" << YAML::Value << r->ubar;
    out << YAML::Key << "hypotheses" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "pass" << YAML::Value << r->hypotheses.passes();
    out << YAML::Key << "violations" << YAML::Value << YAML::BeginSeq;
    for (const Violation& v : r->hypotheses.violations)
      out << (v.hypothesis + " " + v.rule + ": " + v.message);
    out << YAML::EndSeq << YAML::EndMap;
    out << YAML::Key << "invariants" << YAML::Value << YAML::BeginMap;
    if (r->bounds_available) {
      out << YAML::Key << "C1" << YAML::Value << r->mass_bounds.C1;
      out << YAML::Key << "C2" << YAML::Value << r->mass_bounds.C2;
      out << YAML::Key << "margin_u" << YAML::Value << r->bounds.margin_u;
      out << YAML::Key << "margin_v" << YAML::Value << r->bounds.margin_v;
    }
    out << YAML::Key << "C3" << YAML::Value << r->mass_bounds.C3;
    out << YAML::Key << "drift_w" << YAML::Value << r->bounds.drift_w;
    out << YAML::Key << "pass" << YAML::Value << r->enforced_failures.empty();
    out << YAML::Key << "failures" << YAML::Value << YAML::Flow << r->enforced_failures;
    out << YAML::EndMap;
  }
  out << YAML::EndMap << YAML::EndMap;
  std::ofstream os(path);
  os << out.c_str() << '\n';
  if (!os) throw Error(ErrorCode::Config, "path=" + path + " reason=\"cannot write manifest\"");
}

}  // namespace

RunOutcome execute_run(const RunConfig& cfg, const std::string& dir) {
  make_dir(dir);
  const ModelSpec model = cfg.build_model();
  RunOutcome r;
  r.hypotheses = hypothesis_check(model, cfg.box, cfg.hypothesis_samples);
  const State s0 = cfg.initial_state(model);
  try {
    r.ubar = trivial_steady_state(model, integrate(s0.w) / s0.grid().area()).ubar;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoRootInBracket) throw;
  }

  const std::string snap_dir = dir + "/snapshots";
  make_dir(snap_dir);
  RunOptions options;
  options.output_interval = cfg.output_interval;
  double next_snapshot = cfg.snapshot_interval;
  int snapshot_index = 0;
  if (cfg.snapshot_interval > 0.0) {
    options.on_output = [&](const State& s) {
      if (s.t + 1e-9 * cfg.snapshot_interval < next_snapshot && s.t > 0.0) return;
      char name[32];
      for (int c = 0; c < 3; ++c) {
        std::snprintf(name, sizeof name, "/%c_%05d.tpgsnap", "uvw"[c], snapshot_index);
        write_snapshot(snap_dir + name, s.component(c), c, s.t);
      }
      ++snapshot_index;
      if (s.t > 0.0) next_snapshot += cfg.snapshot_interval;
    };
  }

  try {
    Stepper stepper(model, cfg.grid, cfg.stepper);
    r.result = stepper.run(s0, options);
  } catch (const Error& e) {
    write_manifest(dir + "/manifest.yaml", cfg, nullptr, &e);
    throw;
  }

  DiagnosticsSeries& d = r.result.series;
  d.ubar = r.ubar;
  r.window = cfg.regime_window > 0.0 ? cfg.regime_window : cfg.stepper.t_end / 10.0;
  try {
    d.regime = classify_regime(d, r.window);
    r.regime = std::string(to_string(d.regime));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::WindowTooShort) throw;
    d.regime = Regime::unresolved;
    r.regime = "unresolved";
    r.regime_note = e.what();
  }

  r.bounds_available = !r.hypotheses.violates("H3");
  if (r.bounds_available) {
    r.mass_bounds = theorem1_bounds(model, r.hypotheses.bounds, s0, model.gamma);
  } else {
    r.mass_bounds.C3 = integrate(s0.w);
    r.mass_bounds.C1 = r.mass_bounds.C2 = std::numeric_limits<double>::infinity();
  }
  r.bounds = verify_bounds(d, r.mass_bounds);
  for (const std::string& f : r.bounds.failures)
    if (f == "w" || r.hypotheses.passes()) r.enforced_failures.push_back(f);

  {
    std::ofstream csv(dir + "/diagnostics.csv");
    write_csv(csv, d);
  }
  const State& fin = r.result.final_state;
  for (int c = 0; c < 3; ++c) {
    const std::string label(1, "uvw"[c]);
    write_snapshot(snap_dir + "/final_" + label + ".tpgsnap", fin.component(c), c, fin.t);
    if (cfg.heatmaps) write_heatmap(dir + "/heatmap_" + label + ".ppm", fin.component(c), label);
  }
  write_manifest(dir + "/manifest.yaml", cfg, &r, nullptr);
  return r;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, std::ostream& out, std::ostream& err) {
  try {
    RunConfig cfg = load_config(config_path);
    apply_env_overrides(cfg);
    const RunOutcome r = execute_run(cfg, out_dir);
    out << "regime=" << r.regime << " steps=" << r.result.steps << " t=" << fmt(r.result.final_state.t) << '\n';
    if (!r.enforced_failures.empty()) {
      err << "error code=InvariantViolation components=";
      for (std::size_t k = 0; k < r.enforced_failures.size(); ++k)
        err << (k ? "," : "") << r.enforced_failures[k];
      err << " margin_u=" << fmt(r.bounds.margin_u) << " margin_v=" << fmt(r.bounds.margin_v)
          << " drift_w=" << fmt(r.bounds.drift_w) << '\n';
      return kExitInvariant;
    }
    return kExitOk;
  } catch (const Error& e) {
    report_error(err, e);
    return exit_code_for(e.code());
  }
}

int cmd_stability(const std::string& config_path, const std::string& out_dir, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig cfg = load_config(config_path);
    const ModelSpec model = cfg.build_model();
    const double wbar = cfg.init_constant[2].value_or(std::numeric_limits<double>::quiet_NaN());
    const StabilityReport report = analyze_stability(model, cfg.initial_state(model), cfg.box, wbar);
    write_report(out, report);
    if (!out_dir.empty()) {
      make_dir(out_dir);
      std::ofstream os(out_dir + "/stability.txt");
      write_report(os, report);
    }
    return kExitOk;
  } catch (const Error& e) {
    report_error(err, e);
    return kExitConfig;
  }
}

SweepAxis parse_axis(std::string_view spec) {
  const std::size_t eq = spec.find('=');
  auto bad = [&](const char* why) {
    throw Error(ErrorCode::Config, "key=axis value=" + std::string(spec) + " reason=\"" + why + "\"");
  };
  if (eq == std::string_view::npos || eq == 0) bad("expected NAME=START:STOP:COUNT or NAME=a,b,c");
  SweepAxis axis;
  axis.name = std::string(spec.substr(0, eq));
  const std::string rest(spec.substr(eq + 1));
  auto split = [](const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string p;
    while (std::getline(ss, p, sep)) parts.push_back(p);
    if (!s.empty() && s.back() == sep) parts.emplace_back();
    return parts;
  };
  if (rest.find(':') != std::string::npos) {
    const auto parts = split(rest, ':');
    if (parts.size() != 3) bad("expected START:STOP:COUNT");
    const double a = parse_number(parts[0], "axis");
    const double b = parse_number(parts[1], "axis");
    const double n = parse_number(parts[2], "axis");
    if (!(n >= 1.0) || n != std::floor(n)) bad("empty range");
    const int count = static_cast<int>(n);
    for (int k = 0; k < count; ++k) axis.values.push_back(count == 1 ? a : a + (b - a) * k / (count - 1));
  } else {
    for (const std::string& p : split(rest, ','))
      if (!p.empty()) axis.values.push_back(parse_number(p, "axis"));
  }
  if (axis.values.empty()) bad("empty range");
  return axis;
}

int cmd_sweep(const std::string& config_path, const std::vector<std::string>& axes_spec, const std::string& out_dir,
              int threads, std::ostream& out, std::ostream& err) {
  RunConfig base;
  std::vector<SweepAxis> axes;
  try {
    base = load_config(config_path);
    apply_env_overrides(base);
    if (axes_spec.empty() || axes_spec.size() > 2)
      throw Error(ErrorCode::Config, "key=axis reason=\"a sweep takes one or two axes\"");
    for (const std::string& a : axes_spec) axes.push_back(parse_axis(a));
    for (const SweepAxis& a : axes) {
      RunConfig probe = base;
      set_axis_value(probe, a.name, a.values.front());
    }
    make_dir(out_dir);
  } catch (const Error& e) {
    report_error(err, e);
    return kExitConfig;
  }

  std::vector<std::vector<double>> points;
  for (double x : axes[0].values) {
    if (axes.size() == 1) {
      points.push_back({x});
    } else {
      for (double y : axes[1].values) points.push_back({x, y});
    }
  }

  struct PointResult {
    std::string verdict = "n/a";
    std::string regime = "n/a";
    std::array<double, 3> amp{std::nan(""), std::nan(""), std::nan("")};
    std::string status = "ok";
  };
  std::vector<PointResult> results(points.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto worker = [&] {
    for (std::size_t k = next++; k < points.size(); k = next++) {
      PointResult& pr = results[k];
      char name[32];
      std::snprintf(name, sizeof name, "/point_%04zu", k);
      try {
        RunConfig cfg = base;
        for (std::size_t a = 0; a < axes.size(); ++a) set_axis_value(cfg, axes[a].name, points[k][a]);
        const ModelSpec model = cfg.build_model();
        try {
          const State s0 = cfg.initial_state(model);
          const double wbar = cfg.init_constant[2].value_or(integrate(s0.w) / s0.grid().area());
          const SteadyState ss = trivial_steady_state(model, wbar);
          pr.verdict = std::string(to_string(proposition1_verdict(model, ss)));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::NoRootInBracket) throw;
        }
        const RunOutcome r = execute_run(cfg, out_dir + name);
        pr.regime = r.regime;
        for (int c = 0; c < 3; ++c) pr.amp[static_cast<std::size_t>(c)] = r.result.series.amp[static_cast<std::size_t>(c)].back();
        if (!r.enforced_failures.empty()) pr.status = "InvariantViolation";
      } catch (const Error& e) {
        pr.status = std::string(to_string(e.code()));
        std::lock_guard lock(log_mutex);
        err << "point=" << k << ' ';
        report_error(err, e);
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min<std::size_t>(threads, points.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ofstream csv(out_dir + "/sweep.csv");
  csv << "point";
  for (const SweepAxis& a : axes) csv << ',' << a.name;
  csv << ",verdict,regime,amp_u,amp_v,amp_w,status\n";
  std::size_t failed = 0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const PointResult& pr = results[k];
    csv << k;
    for (double x : points[k]) csv << ',' << fmt(x);
    csv << ',' << pr.verdict << ',' << pr.regime;
    for (double a : pr.amp) csv << ',' << fmt(a);
    csv << ',' << pr.status << '\n';
    if (pr.status != "ok") ++failed;
  }
  out << "points=" << points.size() << " failed=" << failed << " table=" << out_dir << "/sweep.csv\n";
  return failed == points.size() ? kExitSolver : kExitOk;
}

int cmd_presets(std::ostream& out) {
  for (std::string_view name : kPresetNames) {
    const PresetInfo& info = preset_info(name);
    out << name << ": " << info.summary << '\n';
    out << "  required:";
    for (auto p : info.required) out << ' ' << p;
    out << '\n';
    if (!info.optional.empty()) {
      out << "  optional:";
      for (auto p : info.optional) out << ' ' << p;
      out << '\n';
    }
  }
  return kExitOk;
}

}  // namespace tpg
