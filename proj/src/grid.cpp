#include "tpg/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tpg/error.hpp"

namespace tpg {

GridSpec GridSpec::make(double length_x, double length_y, int nx, int ny) {
  if (!(length_x > 0.0) || !(length_y > 0.0) || !std::isfinite(length_x) || !std::isfinite(length_y)) {
    throw Error(ErrorCode::InvalidGrid, "reason=\"lengths must be positive\"");
  }
  if (nx < 4 || ny < 4) {
    throw Error(ErrorCode::InvalidGrid, "reason=\"nx and ny must be at least 4\"");
  }
  return GridSpec{length_x, length_y, nx, ny};
}

Field::Field(const GridSpec& grid, double fill) : grid_(grid), values_(grid.size(), fill) {}

double Field::min() const { return *std::min_element(values_.begin(), values_.end()); }
double Field::max() const { return *std::max_element(values_.begin(), values_.end()); }

std::size_t Field::first_non_finite() const {
  for (std::size_t k = 0; k < values_.size(); ++k)
    if (!std::isfinite(values_[k])) return k;
  return values_.size();
}

bool Field::all_finite() const { return first_non_finite() == values_.size(); }

void laplacian(const Field& f, Field& out) {
  const GridSpec& g = f.grid();
  if (out.grid() != g) out = Field(g);
  const double cx = 1.0 / (g.hx() * g.hx());
  const double cy = 1.0 / (g.hy() * g.hy());
  const int nx = g.nx;
  const int ny = g.ny;
  for (int j = 0; j < ny; ++j) {
    const int jm = j > 0 ? j - 1 : 0;
    const int jp = j < ny - 1 ? j + 1 : ny - 1;
    const double* row = &f.values()[g.index(0, j)];
    const double* below = &f.values()[g.index(0, jm)];
    const double* above = &f.values()[g.index(0, jp)];
    double* o = &out.values()[g.index(0, j)];
    for (int i = 0; i < nx; ++i) {
      const double left = i > 0 ? row[i - 1] : row[i];
      const double right = i < nx - 1 ? row[i + 1] : row[i];
      o[i] = cx * ((right - row[i]) - (row[i] - left)) + cy * ((above[i] - row[i]) - (row[i] - below[i]));
    }
  }
}

Field laplacian(const Field& f) {
  Field out(f.grid());
  laplacian(f, out);
  return out;
}

double FaceVelocity::max_abs() const {
  double m = 0.0;
  for (double a : x) m = std::max(m, std::abs(a));
  for (double a : y) m = std::max(m, std::abs(a));
  return m;
}

void taxis_velocity(const Field& signal, const Rule& chi, FaceVelocity& out, std::vector<double>& scratch) {
  const GridSpec& g = signal.grid();
  const int nx = g.nx;
  const int ny = g.ny;
  const std::size_t nfx = static_cast<std::size_t>(nx - 1) * ny;
  const std::size_t nfy = static_cast<std::size_t>(nx) * (ny - 1);
  out.x.resize(nfx);
  out.y.resize(nfy);
  scratch.resize(std::max(nfx, nfy));
  const auto s = signal.values();

  // x-faces: face averages first, then chi in one batch.
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx - 1; ++i)
      scratch[static_cast<std::size_t>(j) * (nx - 1) + i] = 0.5 * (s[g.index(i, j)] + s[g.index(i + 1, j)]);
  chi.evaluate(std::span<const double>(scratch.data(), nfx), {}, {}, out.x);
  const double ihx = 1.0 / g.hx();
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx - 1; ++i) {
      const std::size_t k = static_cast<std::size_t>(j) * (nx - 1) + i;
      if (!std::isfinite(out.x[k])) {
        throw Error(ErrorCode::NonFiniteFlux, "face=x cell=" + std::to_string(g.index(i, j)) +
                                                  " signal=" + std::to_string(scratch[k]));
      }
      out.x[k] *= (s[g.index(i + 1, j)] - s[g.index(i, j)]) * ihx;
    }
  }

  for (int j = 0; j < ny - 1; ++j)
    for (int i = 0; i < nx; ++i)
      scratch[static_cast<std::size_t>(j) * nx + i] = 0.5 * (s[g.index(i, j)] + s[g.index(i, j + 1)]);
  chi.evaluate(std::span<const double>(scratch.data(), nfy), {}, {}, out.y);
  const double ihy = 1.0 / g.hy();
  for (int j = 0; j < ny - 1; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t k = static_cast<std::size_t>(j) * nx + i;
      if (!std::isfinite(out.y[k])) {
        throw Error(ErrorCode::NonFiniteFlux, "face=y cell=" + std::to_string(g.index(i, j)) +
                                                  " signal=" + std::to_string(scratch[k]));
      }
      out.y[k] *= (s[g.index(i, j + 1)] - s[g.index(i, j)]) * ihy;
    }
  }
}

FaceVelocity taxis_velocity(const Field& signal, const Rule& chi) {
  FaceVelocity out;
  std::vector<double> scratch;
  taxis_velocity(signal, chi, out, scratch);
  return out;
}

void flux_divergence(const Field& carrier, const FaceVelocity& velocity, TaxisScheme scheme, Field& out) {
  const GridSpec& g = carrier.grid();
  if (out.grid() != g) out = Field(g);
  const int nx = g.nx;
  const int ny = g.ny;
  const auto c = carrier.values();
  auto o = out.values();
  std::fill(o.begin(), o.end(), 0.0);
  auto face_carrier = [scheme](double vel, double lo, double hi) {
    if (scheme == TaxisScheme::central) return 0.5 * (lo + hi);
    return vel > 0.0 ? lo : hi;
  };
  const double ihx = 1.0 / g.hx();
  const double ihy = 1.0 / g.hy();
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx - 1; ++i) {
      const std::size_t a = g.index(i, j);
      const double vel = velocity.x[static_cast<std::size_t>(j) * (nx - 1) + i];
      const double flux = face_carrier(vel, c[a], c[a + 1]) * vel * ihx;
      o[a] += flux;
      o[a + 1] -= flux;
    }
  }
  for (int j = 0; j < ny - 1; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t a = g.index(i, j);
      const std::size_t b = g.index(i, j + 1);
      const double vel = velocity.y[static_cast<std::size_t>(j) * nx + i];
      const double flux = face_carrier(vel, c[a], c[b]) * vel * ihy;
      o[a] += flux;
      o[b] -= flux;
    }
  }
}

Field taxis_divergence(const Field& carrier, const Field& signal, const Rule& chi, TaxisScheme scheme) {
  const FaceVelocity vel = taxis_velocity(signal, chi);
  Field out(carrier.grid());
  flux_divergence(carrier, vel, scheme, out);
  return out;
}

double integrate(const GridSpec& grid, std::span<const double> values) {
  double total = 0.0;
  for (int j = 0; j < grid.ny; ++j) {
    double row = 0.0;
    const std::size_t base = grid.index(0, j);
    for (int i = 0; i < grid.nx; ++i) row += values[base + i];
    total += row;
  }
  return total * grid.cell_area();
}

double integrate(const Field& f) { return integrate(f.grid(), f.values()); }

double rms_amplitude(const Field& f) {
  const GridSpec& g = f.grid();
  double total = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    double row = 0.0;
    const std::size_t base = g.index(0, j);
    for (int i = 0; i < g.nx; ++i) row += f[base + i] * f[base + i];
    total += row;
  }
  return std::sqrt(total * g.cell_area() / g.area());
}

}  // namespace tpg
