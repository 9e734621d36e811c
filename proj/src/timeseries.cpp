#include "smartstat/timeseries.hpp"

#include <algorithm>

namespace smartstat {

bool TimeSeries::covers(double t0, double t1, double max_gap) const {
  if (t.empty()) return false;
  constexpr double kSlack = 1e-6;
  if (t.front() > t0 + kSlack || t.back() < t1 - kSlack) return false;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t[i] < t0 || t[i - 1] > t1) continue;
    if (t[i] - t[i - 1] > max_gap + kSlack) return false;
  }
  return true;
}

double TimeSeries::value_at(double time) const {
  if (t.empty()) return 0.0;
  if (time <= t.front()) return v.front();
  if (time >= t.back()) return v.back();
  const auto it = std::upper_bound(t.begin(), t.end(), time);
  const auto hi = static_cast<std::size_t>(it - t.begin());
  const auto lo = hi - 1;
  const double span = t[hi] - t[lo];
  if (span <= 0.0) return v[hi];
  const double w = (time - t[lo]) / span;
  return v[lo] + w * (v[hi] - v[lo]);
}

TimeSeries TimeSeries::constant(double t0, double t1, double value) {
  TimeSeries s;
  // Hourly samples so the series also passes gap checks.
  constexpr double kStep = 3600.0;
  for (double t = t0; t < t1; t += kStep) s.push_back(t, value);
  s.push_back(t1, value);
  return s;
}

}  // namespace smartstat
