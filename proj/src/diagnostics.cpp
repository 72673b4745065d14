#include "tpg/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "tpg/error.hpp"

namespace tpg {

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::trivial: return "trivial";
    case Regime::constant_nontrivial: return "constant-nontrivial";
    case Regime::heterogeneous_stationary: return "heterogeneous-stationary";
    case Regime::periodic: return "periodic";
    case Regime::unresolved: return "unresolved";
  }
  return "unresolved";
}

double spatial_heterogeneity(const Field& u) {
  const double mean = integrate(u) / u.grid().area();
  if (mean == 0.0) return 0.0;
  const GridSpec& g = u.grid();
  double total = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    double row = 0.0;
    const std::size_t base = g.index(0, j);
    for (int i = 0; i < g.nx; ++i) {
      const double d = u[base + i] - mean;
      row += d * d;
    }
    total += row;
  }
  return std::sqrt(total / static_cast<double>(g.size())) / std::abs(mean);
}

void DiagnosticsSeries::record(const State& s) {
  times.push_back(s.t);
  for (int c = 0; c < 3; ++c) {
    const Field& f = s.component(c);
    amp[static_cast<std::size_t>(c)].push_back(rms_amplitude(f));
    mass[static_cast<std::size_t>(c)].push_back(integrate(f));
    min[static_cast<std::size_t>(c)].push_back(f.min());
  }
  heterogeneity.push_back(spatial_heterogeneity(s.u));
}

namespace {

struct Stats {
  double mean = 0.0;
  double std = 0.0;
};

Stats stats(const std::vector<double>& x, std::size_t lo, std::size_t hi) {
  Stats s;
  const double n = static_cast<double>(hi - lo);
  for (std::size_t k = lo; k < hi; ++k) s.mean += x[k];
  s.mean /= n;
  for (std::size_t k = lo; k < hi; ++k) s.std += (x[k] - s.mean) * (x[k] - s.mean);
  s.std = std::sqrt(s.std / n);
  return s;
}

double ls_slope(const std::vector<double>& t, const std::vector<double>& y, std::size_t lo, std::size_t hi) {
  const double n = static_cast<double>(hi - lo);
  double tm = 0.0, ym = 0.0;
  for (std::size_t k = lo; k < hi; ++k) {
    tm += t[k];
    ym += y[k];
  }
  tm /= n;
  ym /= n;
  double num = 0.0, den = 0.0;
  for (std::size_t k = lo; k < hi; ++k) {
    num += (t[k] - tm) * (y[k] - ym);
    den += (t[k] - tm) * (t[k] - tm);
  }
  return den > 0.0 ? num / den : 0.0;
}

// First index with times[k] >= t.
std::size_t lower_index(const std::vector<double>& times, double t) {
  return static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), t) - times.begin());
}

}  // namespace

double autocorrelation_peak(const std::vector<double>& x, int min_lag) {
  const std::size_t n = x.size();
  if (n < 4) return 0.0;
  double mean = 0.0;
  for (double a : x) mean += a;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double a : x) var += (a - mean) * (a - mean);
  var /= static_cast<double>(n);
  if (!(var > 0.0)) return 0.0;
  const std::size_t max_lag = n / 2;
  bool crossed = false;
  double best = 0.0;
  for (std::size_t lag = 1; lag <= max_lag; ++lag) {
    double c = 0.0;
    for (std::size_t k = 0; k + lag < n; ++k) c += (x[k] - mean) * (x[k + lag] - mean);
    c /= static_cast<double>(n - lag) * var;
    if (c <= 0.0) crossed = true;
    if (crossed && lag >= static_cast<std::size_t>(min_lag)) best = std::max(best, c);
  }
  return best;
}

double transient_end(const DiagnosticsSeries& d, double window, const RegimeThresholds& th) {
  const auto& t = d.times;
  const auto& a = d.amp[0];
  if (t.empty()) return 0.0;
  double last = t.front();
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] - t.front() < window) continue;
    const std::size_t lo = lower_index(t, t[k] - window);
    if (k + 1 - lo < 3) continue;
    const double slope = ls_slope(t, a, lo, k + 1);
    const double mean = stats(a, lo, k + 1).mean;
    const double scale = std::max(std::abs(mean), 1e-300);
    if (std::abs(slope) / scale > th.slope_tol) last = t[k];
  }
  return last;
}

double stabilization_time(const DiagnosticsSeries& d, double rel_tol, double abs_tol) {
  if (d.times.empty()) return 0.0;
  double last = d.times.front();
  for (int c = 0; c < 3; ++c) {
    const auto& a = d.amp[c];
    const double band = rel_tol * std::abs(a.back()) + abs_tol;
    for (std::size_t k = 0; k < a.size(); ++k)
      if (std::abs(a[k] - a.back()) > band) last = std::max(last, d.times[k]);
  }
  return last;
}

Regime classify_regime(const DiagnosticsSeries& d, double window, const RegimeThresholds& th) {
  const auto& t = d.times;
  auto too_short = [&](double span) {
    std::ostringstream os;
    os << "span=" << span << " window=" << window;
    throw Error(ErrorCode::WindowTooShort, os.str());
  };
  if (t.size() < 8 || t.back() - t.front() < 2.0 * window) too_short(t.empty() ? 0.0 : t.back() - t.front());

  const std::size_t n = t.size();
  const double v_final = d.amp[1].back();
  const double u_final = d.amp[0].back();
  if (v_final <= th.trivial_v_amp && (std::isnan(d.ubar) || std::abs(u_final - d.ubar) <= th.trivial_u_tol)) {
    return Regime::trivial;
  }

  const std::size_t tail = lower_index(t, t.back() - 2.0 * window);
  for (int c = 0; c < 3; ++c) {
    const auto& a = d.amp[static_cast<std::size_t>(c)];
    const Stats s = stats(a, tail, n);
    if (!(s.std > th.stationary_rel_std * std::abs(s.mean))) continue;
    const std::vector<double> seg(a.begin() + static_cast<std::ptrdiff_t>(tail), a.end());
    if (autocorrelation_peak(seg, th.min_lag) >= th.autocorr_peak) return Regime::periodic;
  }

  const double te = transient_end(d, window, th);
  if (t.back() - te < 2.0 * window) too_short(t.back() - te);

  const std::size_t last_window = lower_index(t, t.back() - window);
  bool stationary = true;
  for (int c = 0; c < 3; ++c) {
    const Stats s = stats(d.amp[static_cast<std::size_t>(c)], last_window, n);
    if (s.std > th.stationary_rel_std * std::abs(s.mean)) stationary = false;
  }
  if (!stationary) return Regime::unresolved;
  return d.heterogeneity.back() > th.heterogeneity ? Regime::heterogeneous_stationary
                                                   : Regime::constant_nontrivial;
}

BoundsReport verify_bounds(const DiagnosticsSeries& d, const MassBounds& bounds, double drift_tol) {
  BoundsReport r;
  r.margin_u = std::numeric_limits<double>::infinity();
  r.margin_v = std::numeric_limits<double>::infinity();
  bool bad_u = false, bad_v = false, bad_w = false;
  const double slack = 1e-12;
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double mu = d.mass[0][k], mv = d.mass[1][k], mw = d.mass[2][k];
    r.margin_u = std::min(r.margin_u, bounds.C1 - mu);
    r.margin_v = std::min(r.margin_v, bounds.C2 - mv);
    const double drift = bounds.C3 != 0.0 ? std::abs(mw - bounds.C3) / std::abs(bounds.C3) : std::abs(mw);
    r.drift_w = std::max(r.drift_w, drift);
    if (!(mu <= bounds.C1 * (1.0 + slack))) bad_u = true;
    if (!(mv <= bounds.C2 * (1.0 + slack))) bad_v = true;
    if (!(drift <= drift_tol)) bad_w = true;
  }
  if (bad_u) r.failures.emplace_back("u");
  if (bad_v) r.failures.emplace_back("v");
  if (bad_w) r.failures.emplace_back("w");
  r.pass = r.failures.empty();
  return r;
}

double measured_growth_rate(const DiagnosticsSeries& d, double t0, double t1, int component) {
  const auto& a = d.amp.at(static_cast<std::size_t>(component));
  std::vector<double> ts, ys;
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (d.times[k] < t0 || d.times[k] > t1) continue;
    if (!(a[k] > 0.0)) {
      std::ostringstream os;
      os << "component=" << component << " time=" << d.times[k] << " amplitude=" << a[k];
      throw Error(ErrorCode::NonPositiveAmplitude, os.str());
    }
    ts.push_back(d.times[k]);
    ys.push_back(std::log(a[k]));
  }
  if (ts.size() < 2) throw Error(ErrorCode::NonPositiveAmplitude, "reason=\"fewer than two samples in window\"");
  return ls_slope(ts, ys, 0, ts.size());
}

void write_csv(std::ostream& os, const DiagnosticsSeries& d) {
  os << kCsvHeader << '\n';
  char buf[32];
  auto put = [&](double x, char sep) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    os << buf << sep;
  };
  for (std::size_t k = 0; k < d.size(); ++k) {
    put(d.times[k], ',');
    for (const auto* series : {&d.amp, &d.mass, &d.min})
      for (int c = 0; c < 3; ++c) put((*series)[static_cast<std::size_t>(c)][k], ',');
    put(d.heterogeneity[k], '\n');
  }
}

DiagnosticsSeries read_csv(std::istream& is) {
  DiagnosticsSeries d;
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) {
    throw Error(ErrorCode::Config, "reason=\"diagnostics CSV header mismatch\"");
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != 11) throw Error(ErrorCode::Config, "reason=\"diagnostics CSV row has wrong width\"");
    d.times.push_back(row[0]);
    for (int c = 0; c < 3; ++c) {
      d.amp[static_cast<std::size_t>(c)].push_back(row[1 + static_cast<std::size_t>(c)]);
      d.mass[static_cast<std::size_t>(c)].push_back(row[4 + static_cast<std::size_t>(c)]);
      d.min[static_cast<std::size_t>(c)].push_back(row[7 + static_cast<std::size_t>(c)]);
    }
    d.heterogeneity.push_back(row[10]);
  }
  return d;
}

}  // namespace tpg
