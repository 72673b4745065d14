#include "tpg/linear_solver.hpp"

#include <cmath>
#include <sstream>

#include "tpg/error.hpp"

namespace tpg {

namespace {

// Row-ordered reduction, see integrate().
double dot(const GridSpec& g, const Field& a, const Field& b) {
  double total = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    double row = 0.0;
    const std::size_t base = g.index(0, j);
    for (int i = 0; i < g.nx; ++i) row += a[base + i] * b[base + i];
    total += row;
  }
  return total;
}

}  // namespace

DiffusionSolver::DiffusionSolver(const GridSpec& grid, int max_iterations)
    : grid_(grid),
      max_iterations_(max_iterations > 0 ? max_iterations : static_cast<int>(4 * (grid.nx + grid.ny) + 100)),
      b_(grid),
      r_(grid),
      p_(grid),
      q_(grid),
      lap_(grid) {}

void DiffusionSolver::apply(double alpha, const Field& in, Field& out) {
  laplacian(in, lap_);
  for (std::size_t k = 0; k < in.size(); ++k) out[k] = in[k] - alpha * lap_[k];
}

SolveStats DiffusionSolver::solve(double alpha, double rel_tol, Field& x) {
  SolveStats stats;
  if (alpha == 0.0) return stats;
  const std::size_t n = x.size();
  for (std::size_t k = 0; k < n; ++k) b_[k] = x[k];
  const double bnorm = std::sqrt(dot(grid_, b_, b_));
  if (bnorm == 0.0) return stats;

  apply(alpha, x, q_);
  for (std::size_t k = 0; k < n; ++k) {
    r_[k] = b_[k] - q_[k];
    p_[k] = r_[k];
  }
  double rr = dot(grid_, r_, r_);
  const double target = rel_tol * bnorm;
  while (std::sqrt(rr) > target) {
    if (stats.iterations >= max_iterations_ || !std::isfinite(rr)) {
      std::ostringstream os;
      os << "iterations=" << stats.iterations << " residual=" << std::sqrt(rr) / bnorm << " alpha=" << alpha;
      throw Error(ErrorCode::LinearSolveDiverged, os.str());
    }
    apply(alpha, p_, q_);
    const double step = rr / dot(grid_, p_, q_);
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += step * p_[k];
      r_[k] -= step * q_[k];
    }
    const double rr_new = dot(grid_, r_, r_);
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t k = 0; k < n; ++k) p_[k] = r_[k] + beta * p_[k];
    ++stats.iterations;
  }
  stats.residual = std::sqrt(rr) / bnorm;
  return stats;
}

}  // namespace tpg
