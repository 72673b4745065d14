#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "tpg/error.hpp"
#include "tpg/grid.hpp"

using namespace tpg;

namespace {

constexpr double kPi = std::numbers::pi;

double max_error(const Field& a, const Field& b) {
  double e = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) e = std::max(e, std::abs(a[k] - b[k]));
  return e;
}

// Observed orders of the error on 16, 32, 64, 128 cells per side.
std::vector<double> ratios(const std::function<double(int)>& error_at) {
  std::vector<double> errs, out;
  for (int n : {16, 32, 64, 128}) errs.push_back(error_at(n));
  for (std::size_t k = 1; k < errs.size(); ++k) out.push_back(errs[k - 1] / errs[k]);
  return out;
}

}  // namespace

TEST(Grid, MakeValidates) {
  EXPECT_NO_THROW(GridSpec::make(1.0, 2.0, 4, 4));
  for (auto bad : {std::array<double, 4>{0.0, 1.0, 8, 8}, {1.0, -1.0, 8, 8}, {1.0, 1.0, 3, 8}, {1.0, 1.0, 8, 2}}) {
    try {
      GridSpec::make(bad[0], bad[1], static_cast<int>(bad[2]), static_cast<int>(bad[3]));
      ADD_FAILURE() << "accepted invalid grid";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidGrid);
    }
  }
}

TEST(Grid, GeometryAndQuadrature) {
  const GridSpec g = GridSpec::make(2.0, 3.0, 8, 6);
  EXPECT_DOUBLE_EQ(g.hx(), 0.25);
  EXPECT_DOUBLE_EQ(g.hy(), 0.5);
  EXPECT_DOUBLE_EQ(g.x(0), 0.125);
  EXPECT_EQ(g.index(3, 2), 2u * 8u + 3u);
  const Field c(g, 1.5);
  EXPECT_NEAR(integrate(c), 9.0, 1e-14);
  EXPECT_NEAR(rms_amplitude(c), 1.5, 1e-15);
  const Field f = Field::from_function(g, [](double x, double y) { return x * y; });
  // Midpoint rule is exact for bilinear integrands.
  EXPECT_NEAR(integrate(f), 0.5 * 4.0 * 0.5 * 9.0, 1e-13);
}

TEST(Grid, LaplacianSecondOrderNeumann) {
  const auto r = ratios([](int n) {
    const GridSpec g = GridSpec::make(kPi, 2.0, n, n);
    const double kx = 1.0, ky = 2.0 * kPi / 2.0;
    const Field f = Field::from_function(g, [&](double x, double y) { return std::cos(kx * x) * std::cos(ky * y); });
    const Field exact = Field::from_function(
        g, [&](double x, double y) { return -(kx * kx + ky * ky) * std::cos(kx * x) * std::cos(ky * y); });
    return max_error(laplacian(f), exact);
  });
  for (double q : r) EXPECT_NEAR(q, 4.0, 0.6) << "ratio " << q;
}

TEST(Grid, LaplacianConservesMass) {
  const GridSpec g = GridSpec::make(kPi, kPi, 40, 40);
  const Field f = Field::from_function(g, [](double x, double y) { return std::exp(-x - y) + x * x * y; });
  EXPECT_NEAR(integrate(laplacian(f)), 0.0, 1e-11);
}

namespace {

// div(c chi(s) grad s) for c = 2 + cos 2x cos y, s = cos x cos y, chi(s) = 1/(2+s),
// by central differences of the analytic flux.
double taxis_oracle(double x, double y) {
  auto flux = [](double x, double y, int axis) {
    const double c = 2.0 + std::cos(2 * x) * std::cos(y);
    const double s = std::cos(x) * std::cos(y);
    const double ds = axis == 0 ? -std::sin(x) * std::cos(y) : -std::cos(x) * std::sin(y);
    return c / (2.0 + s) * ds;
  };
  const double d = 1e-5;
  return (flux(x + d, y, 0) - flux(x - d, y, 0)) / (2 * d) + (flux(x, y + d, 1) - flux(x, y - d, 1)) / (2 * d);
}

double taxis_error(int n, TaxisScheme scheme) {
  const GridSpec g = GridSpec::make(kPi, kPi, n, n);
  const Field c = Field::from_function(g, [](double x, double y) { return 2.0 + std::cos(2 * x) * std::cos(y); });
  const Field s = Field::from_function(g, [](double x, double y) { return std::cos(x) * std::cos(y); });
  const Field exact = Field::from_function(g, taxis_oracle);
  return max_error(taxis_divergence(c, s, Rule::parse("1 / (2 + u)"), scheme), exact);
}

}  // namespace

TEST(Grid, TaxisCentralSecondOrder) {
  for (double q : ratios([](int n) { return taxis_error(n, TaxisScheme::central); }))
    EXPECT_NEAR(q, 4.0, 0.6) << "ratio " << q;
}

TEST(Grid, TaxisUpwindFirstOrder) {
  for (double q : ratios([](int n) { return taxis_error(n, TaxisScheme::upwind); })) {
    EXPECT_GT(q, 1.7) << "ratio " << q;
    EXPECT_LT(q, 2.6) << "ratio " << q;
  }
}

TEST(Grid, TaxisReductions) {
  const GridSpec g = GridSpec::make(kPi, kPi, 16, 16);
  const Field c = Field::from_function(g, [](double x, double y) { return 1.0 + x * y; });
  const Field s = Field::from_function(g, [](double x, double y) { return std::cos(x) + y; });
  const Field zero_chi = taxis_divergence(c, s, Rule::constant(0.0));
  const Field flat = taxis_divergence(c, Field(g, 3.0), Rule::parse("1 / (1 + u)"));
  for (std::size_t k = 0; k < g.size(); ++k) {
    EXPECT_EQ(zero_chi[k], 0.0);
    EXPECT_EQ(flat[k], 0.0);
  }
  // With chi == 1 and carrier == 1 the taxis term is the Laplacian of the signal.
  const Field lap = laplacian(s);
  const Field t = taxis_divergence(Field(g, 1.0), s, Rule::constant(1.0));
  EXPECT_LT(max_error(lap, t), 1e-12);
}

TEST(Grid, TaxisConservesMass) {
  const GridSpec g = GridSpec::make(kPi, kPi, 32, 32);
  const Field c = Field::from_function(g, [](double x, double y) { return 1.0 + std::exp(-x - y); });
  const Field s = Field::from_function(g, [](double x, double y) { return std::sin(3 * x) * y; });
  for (auto scheme : {TaxisScheme::upwind, TaxisScheme::central})
    EXPECT_NEAR(integrate(taxis_divergence(c, s, Rule::parse("2 / (1 + u * u)"), scheme)), 0.0, 1e-11);
}

TEST(Grid, SingularChiRaisesNonFiniteFlux) {
  const GridSpec g = GridSpec::make(1.0, 1.0, 8, 8);
  Field s(g, 1.0);
  s(3, 3) = 0.0;
  s(4, 3) = 0.0;
  try {
    taxis_divergence(Field(g, 1.0), s, Rule::parse("inv_guard(u, 1e-6)"));
    FAIL() << "expected NonFiniteFlux";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteFlux);
  }
}
