#include "tpg/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "tpg/error.hpp"

namespace tpg {

std::string_view to_string(Scheme s) { return s == Scheme::imex_euler ? "imex-euler" : "imex-midpoint"; }

Scheme scheme_from_string(std::string_view name) {
  if (name == "imex-euler") return Scheme::imex_euler;
  if (name == "imex-midpoint") return Scheme::imex_midpoint;
  throw Error(ErrorCode::Config, "key=stepper.scheme value=" + std::string(name));
}

void StepperConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::Config, "reason=\"" + what + "\""); };
  if (!(dt_min > 0.0) || !(dt_max > 0.0)) bad("dt_min and dt_max must be positive");
  if (!(dt_min <= dt_init && dt_init <= dt_max)) bad("need dt_min <= dt_init <= dt_max");
  if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) bad("cfl_safety must lie in (0, 1]");
  if (!(t_end > 0.0)) bad("t_end must be positive");
  if (!(linear_tol > 0.0)) bad("linear_tol must be positive");
}

Stepper::Stepper(const ModelSpec& model, const GridSpec& grid, StepperConfig cfg)
    : model_(model),
      grid_(grid),
      cfg_(cfg),
      eval_(model, grid, cfg.taxis),
      solver_(grid),
      n0_{Field(grid), Field(grid), Field(grid)},
      n1_{Field(grid), Field(grid), Field(grid)},
      stage_{Field(grid), Field(grid), Field(grid), 0.0} {
  cfg_.validate();
}

void Stepper::implicit_diffusion(Field& x, double alpha) {
  const SolveStats st = solver_.solve(alpha, cfg_.linear_tol, x);
  linear_iterations_ += st.iterations;
}

void Stepper::check_state(const State& s) const {
  for (int c = 0; c < 3; ++c) {
    const Field& f = s.component(c);
    const std::size_t k = f.first_non_finite();
    if (k != f.size()) {
      std::ostringstream os;
      os << "component=" << model_.labels[static_cast<std::size_t>(c)] << " cell=" << k << " time=" << s.t;
      throw Error(ErrorCode::NonFiniteState, os.str());
    }
  }
  if (!std::isfinite(cfg_.positivity_tol)) return;
  for (int c = 0; c < 3; ++c) {
    const double lo = s.component(c).min();
    if (lo < -cfg_.positivity_tol) {
      std::ostringstream os;
      os << "component=" << model_.labels[static_cast<std::size_t>(c)] << " min=" << lo << " time=" << s.t;
      throw Error(ErrorCode::PositivityBreached, os.str());
    }
  }
}

// Expects n0_ to hold the explicit terms at s.
void Stepper::advance(State& s, double dt) {
  const std::array<double, 3> diff = {model_.D_u, model_.D_v, model_.D_w};
  if (cfg_.scheme == Scheme::imex_euler) {
    for (int c = 0; c < 3; ++c) {
      Field& x = s.component(c);
      const Field& n = n0_.component(c);
      for (std::size_t k = 0; k < x.size(); ++k) x[k] += dt * n[k];
      implicit_diffusion(x, dt * diff[static_cast<std::size_t>(c)]);
    }
  } else {
    // Implicit-explicit midpoint: half step with backward Euler diffusion,
    // then a full step with all terms evaluated at the midpoint state.
    for (int c = 0; c < 3; ++c) {
      Field& x = stage_.component(c);
      const Field& y = s.component(c);
      const Field& n = n0_.component(c);
      for (std::size_t k = 0; k < x.size(); ++k) x[k] = y[k] + 0.5 * dt * n[k];
      implicit_diffusion(x, 0.5 * dt * diff[static_cast<std::size_t>(c)]);
    }
    stage_.t = s.t + 0.5 * dt;
    eval_.evaluate(stage_, n1_);
    for (int c = 0; c < 3; ++c) {
      Field& x = s.component(c);
      const Field& n = n1_.component(c);
      for (std::size_t k = 0; k < x.size(); ++k) x[k] += dt * n[k];
    }
  }
  s.t += dt;
  check_state(s);
}

void Stepper::step(State& s, double dt) {
  if (!(dt >= cfg_.dt_min && dt <= cfg_.dt_max)) {
    std::ostringstream os;
    os << "reason=\"dt outside [dt_min, dt_max]\" dt=" << dt;
    throw Error(ErrorCode::Config, os.str());
  }
  eval_.explicit_terms(s, n0_);
  advance(s, dt);
}

double Stepper::suggest_dt(const State& s) {
  eval_.explicit_terms(s, n0_);
  const double h = std::min(grid_.hx(), grid_.hy());
  double limit = std::numeric_limits<double>::infinity();
  if (eval_.max_drift() > 0.0) limit = h / eval_.max_drift();
  const double rate = eval_.estimate_reaction_rate(s);
  if (rate > 0.0) limit = std::min(limit, 1.0 / rate);
  return std::clamp(cfg_.cfl_safety * limit, cfg_.dt_min, cfg_.dt_max);
}

RunResult Stepper::run(State s, const RunOptions& options) {
  RunResult result;
  check_state(s);
  const double interval = options.output_interval > 0.0 ? options.output_interval : cfg_.t_end;
  auto emit = [&](const State& st) {
    result.series.record(st);
    if (options.on_output) options.on_output(st);
  };
  emit(s);
  long next_output = 1;
  bool first = true;
  const double eps = 1e-12 * std::max(1.0, cfg_.t_end);
  while (s.t < cfg_.t_end - eps) {
    double dt = suggest_dt(s);  // also leaves the explicit terms at s in n0_
    if (first) {
      dt = std::min(dt, cfg_.dt_init);
      first = false;
    }
    const double t_out = std::min(cfg_.t_end, next_output * interval);
    bool hit = false;
    if (s.t + dt >= t_out - eps) {
      dt = t_out - s.t;
      hit = true;
    }
    advance(s, dt);
    ++result.steps;
    if (hit) {
      s.t = t_out;
      emit(s);
      ++next_output;
    }
  }
  result.linear_iterations = linear_iterations_;
  result.final_state = std::move(s);
  return result;
}

State step(const State& s, const ModelSpec& m, const StepperConfig& cfg, double dt) {
  Stepper stepper(m, s.grid(), cfg);
  State out = s;
  stepper.step(out, dt);
  return out;
}

RunResult run(const State& s0, const ModelSpec& m, const StepperConfig& cfg, const RunOptions& options) {
  Stepper stepper(m, s0.grid(), cfg);
  return stepper.run(s0, options);
}

State make_state(const GridSpec& grid, const std::array<double, 3>& constants,
                 const std::vector<Perturbation>& perturbations) {
  State s{Field(grid, constants[0]), Field(grid, constants[1]), Field(grid, constants[2]), 0.0};
  for (const Perturbation& p : perturbations) {
    std::mt19937_64 rng(p.seed);
    for (int c = 0; c < 3; ++c) {
      if (!p.components[static_cast<std::size_t>(c)]) continue;
      Field& f = s.component(c);
      for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
          const double x = grid.x(i), y = grid.y(j);
          double d = 0.0;
          switch (p.kind) {
            case PerturbationKind::exp_corner: d = std::exp(-x - y); break;
            case PerturbationKind::fourier_mode:
              d = std::cos(p.m * std::numbers::pi * x / grid.length_x) *
                  std::cos(p.n * std::numbers::pi * y / grid.length_y);
              break;
            case PerturbationKind::uniform_random: d = static_cast<double>(rng() >> 11) * 0x1.0p-53; break;
          }
          f(i, j) += p.amplitude * d;
        }
      }
    }
  }
  return s;
}

}  // namespace tpg
