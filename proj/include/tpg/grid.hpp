#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tpg/rule.hpp"

namespace tpg {

// Uniform cell-centred rectangle [0, length_x] x [0, length_y].
struct GridSpec {
  double length_x = 0.0;
  double length_y = 0.0;
  int nx = 0;
  int ny = 0;

  // Throws Error{InvalidGrid} unless lengths > 0 and nx, ny >= 4.
  static GridSpec make(double length_x, double length_y, int nx, int ny);

  double hx() const { return length_x / nx; }
  double hy() const { return length_y / ny; }
  double cell_area() const { return hx() * hy(); }
  double area() const { return length_x * length_y; }
  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  double x(int i) const { return (i + 0.5) * hx(); }
  double y(int j) const { return (j + 0.5) * hy(); }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

// One value per cell, row-major in j (y index), i fastest.
class Field {
 public:
  Field() = default;
  explicit Field(const GridSpec& grid, double fill = 0.0);

  template <class F>
  static Field from_function(const GridSpec& grid, F&& f) {
    Field out(grid);
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) out(i, j) = f(grid.x(i), grid.y(j));
    return out;
  }

  const GridSpec& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }
  double& operator()(int i, int j) { return values_[grid_.index(i, j)]; }
  double operator()(int i, int j) const { return values_[grid_.index(i, j)]; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  double min() const;
  double max() const;
  bool all_finite() const;
  // Index of the first non-finite value, or size() if none.
  std::size_t first_non_finite() const;

 private:
  GridSpec grid_{};
  std::vector<double> values_;
};

enum class TaxisScheme { upwind, central };

// Five-point Laplacian with mirrored ghost cells (zero normal derivative).
Field laplacian(const Field& f);
void laplacian(const Field& f, Field& out);

// Face drift velocities chi(face-averaged signal) * (difference of signal) / spacing.
// x-faces are the (nx - 1) * ny interior faces between (i, j) and (i + 1, j),
// y-faces the nx * (ny - 1) faces between (i, j) and (i, j + 1).
// Boundary faces carry zero flux and are not stored.
struct FaceVelocity {
  std::vector<double> x;
  std::vector<double> y;

  double max_abs() const;
};

// Throws Error{NonFiniteFlux} if chi is not finite at some face.
FaceVelocity taxis_velocity(const Field& signal, const Rule& chi);
void taxis_velocity(const Field& signal, const Rule& chi, FaceVelocity& out, std::vector<double>& scratch);

// div(carrier * velocity) in conservative flux form.
void flux_divergence(const Field& carrier, const FaceVelocity& velocity, TaxisScheme scheme, Field& out);

// div(carrier * chi(signal) * grad(signal)).
Field taxis_divergence(const Field& carrier, const Field& signal, const Rule& chi,
                       TaxisScheme scheme = TaxisScheme::upwind);

// Midpoint quadrature. Summation runs row by row and then over rows, so the
// result does not depend on how rows are scheduled.
double integrate(const Field& f);
double integrate(const GridSpec& grid, std::span<const double> values);
double rms_amplitude(const Field& f);

}  // namespace tpg
