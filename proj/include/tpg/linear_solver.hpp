#pragma once

#include "tpg/grid.hpp"

namespace tpg {

struct SolveStats {
  int iterations = 0;
  double residual = 0.0;  // final ||b - A x|| / ||b||
};

// Solves (I - alpha * lap) x = b with unpreconditioned conjugate gradients.
// The operator is symmetric positive definite for alpha >= 0 under Neumann
// closure. Starting from x = b keeps every residual mean-free, so the solve
// preserves sum(x) == sum(b) up to rounding independently of the tolerance.
class DiffusionSolver {
 public:
  explicit DiffusionSolver(const GridSpec& grid, int max_iterations = 0);

  // On entry x holds b; on exit the solution. Throws Error{LinearSolveDiverged}.
  SolveStats solve(double alpha, double rel_tol, Field& x);

 private:
  GridSpec grid_;
  int max_iterations_;
  Field b_, r_, p_, q_, lap_;

  void apply(double alpha, const Field& in, Field& out);
};

}  // namespace tpg
