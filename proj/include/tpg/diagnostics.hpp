#pragma once

#include <array>
#include <iosfwd>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "tpg/model.hpp"

namespace tpg {

enum class Regime { trivial, constant_nontrivial, heterogeneous_stationary, periodic, unresolved };

std::string_view to_string(Regime r);

// Time series of run diagnostics. Component index 0, 1, 2 = u, v, w.
struct DiagnosticsSeries {
  std::vector<double> times;
  std::array<std::vector<double>, 3> amp;
  std::array<std::vector<double>, 3> mass;
  std::array<std::vector<double>, 3> min;
  std::vector<double> heterogeneity;  // spatial std / mean of u
  Regime regime = Regime::unresolved;
  // u of the trivial steady state, when known; used by the trivial test.
  double ubar = std::numeric_limits<double>::quiet_NaN();

  std::size_t size() const { return times.size(); }
  void record(const State& s);
};

// std / |mean| of u over the cells.
double spatial_heterogeneity(const Field& u);

struct RegimeThresholds {
  double slope_tol = 1e-3;         // windowed slope of amp_u, relative to its mean, per unit time
  double trivial_v_amp = 1e-4;
  double trivial_u_tol = 1e-3;
  double stationary_rel_std = 1e-4;
  double heterogeneity = 0.02;
  double autocorr_peak = 0.8;
  int min_lag = 4;                 // output intervals
};

// Last time at which the least-squares slope of amp_u over the trailing
// window exceeds slope_tol (relative); the first sample time if never.
double transient_end(const DiagnosticsSeries& d, double window, const RegimeThresholds& th = {});

// Last sample time at which some amplitude is farther than
// rel_tol * |final| + abs_tol from its final value; the first time if never.
double stabilization_time(const DiagnosticsSeries& d, double rel_tol = 1e-2, double abs_tol = 1e-4);

// Throws Error{WindowTooShort} unless the series covers at least two windows
// after its transient. A series that oscillates through the end is tested for
// periodicity over its last two windows before that check.
Regime classify_regime(const DiagnosticsSeries& d, double window, const RegimeThresholds& th = {});

// Highest normalised autocorrelation peak (after the first zero crossing) of
// the mean-removed samples, at lags >= min_lag. Returns 0 for flat data.
double autocorrelation_peak(const std::vector<double>& x, int min_lag);

struct MassBounds {
  double C1 = 0.0, C2 = 0.0, C3 = 0.0;
};

struct BoundsReport {
  bool pass = true;
  double margin_u = 0.0;      // min over samples of C1 - mass_u
  double margin_v = 0.0;      // min over samples of C2 - mass_v
  double drift_w = 0.0;       // max over samples of |mass_w - C3| / C3
  std::vector<std::string> failures;  // component names that failed
};

BoundsReport verify_bounds(const DiagnosticsSeries& d, const MassBounds& bounds, double drift_tol = 1e-8);

// Least-squares slope of log(amp) on samples with t0 <= t <= t1.
// Throws Error{NonPositiveAmplitude}.
double measured_growth_rate(const DiagnosticsSeries& d, double t0, double t1, int component);

inline constexpr std::string_view kCsvHeader =
    "time,amp_u,amp_v,amp_w,mass_u,mass_v,mass_w,min_u,min_v,min_w,heterogeneity";

void write_csv(std::ostream& os, const DiagnosticsSeries& d);
DiagnosticsSeries read_csv(std::istream& is);

}  // namespace tpg
