#pragma once

#include <functional>
#include <string_view>

#include "tpg/diagnostics.hpp"
#include "tpg/linear_solver.hpp"
#include "tpg/model.hpp"

namespace tpg {

enum class Scheme { imex_euler, imex_midpoint };

std::string_view to_string(Scheme s);
Scheme scheme_from_string(std::string_view name);  // throws Error{Config}

struct StepperConfig {
  double dt_init = 1e-2;
  double dt_min = 1e-6;
  double dt_max = 5e-2;
  double cfl_safety = 0.5;
  double t_end = 1.0;
  double linear_tol = 1e-10;
  Scheme scheme = Scheme::imex_euler;
  TaxisScheme taxis = TaxisScheme::upwind;
  // A run fails with PositivityBreached once a field drops below
  // -positivity_tol. Infinity disables the monitor.
  double positivity_tol = 1e-8;

  // Throws Error{Config} when the invariants between the fields fail.
  void validate() const;
};

struct RunOptions {
  double output_interval = 0.1;
  // Called at t = 0 and at every output time (including t_end).
  std::function<void(const State&)> on_output;
};

struct RunResult {
  DiagnosticsSeries series;
  State final_state;
  long steps = 0;
  long linear_iterations = 0;
};

// IMEX integrator: diffusion implicit (conjugate gradients), reaction and
// taxis explicit.
class Stepper {
 public:
  Stepper(const ModelSpec& model, const GridSpec& grid, StepperConfig cfg);

  // Advances s by dt in place. dt must lie in [dt_min, dt_max].
  void step(State& s, double dt);
  // Largest stable step from the current drift and reaction rates, clamped to
  // [dt_min, dt_max].
  double suggest_dt(const State& s);
  RunResult run(State s, const RunOptions& options = {});

  long linear_iterations() const { return linear_iterations_; }

 private:
  const ModelSpec& model_;
  GridSpec grid_;
  StepperConfig cfg_;
  RhsEvaluator eval_;
  DiffusionSolver solver_;
  Derivative n0_, n1_;
  State stage_;
  long linear_iterations_ = 0;

  void advance(State& s, double dt);
  void implicit_diffusion(Field& x, double alpha);
  void check_state(const State& s) const;
};

State step(const State& s, const ModelSpec& m, const StepperConfig& cfg, double dt);
RunResult run(const State& s0, const ModelSpec& m, const StepperConfig& cfg, const RunOptions& options = {});

// Initial-data perturbations.
enum class PerturbationKind { exp_corner, fourier_mode, uniform_random };

struct Perturbation {
  PerturbationKind kind = PerturbationKind::exp_corner;
  double amplitude = 0.0;
  std::array<bool, 3> components{true, true, true};
  int m = 1, n = 1;            // fourier_mode: cos(m pi x / Lx) cos(n pi y / Ly)
  unsigned long long seed = 0; // uniform_random: amplitude * U[0, 1)
};

State make_state(const GridSpec& grid, const std::array<double, 3>& constants,
                 const std::vector<Perturbation>& perturbations = {});

}  // namespace tpg
