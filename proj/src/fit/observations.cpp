#include "smartstat/fit/observations.hpp"

#include "smartstat/error.hpp"
#include "smartstat/thermal/simulate.hpp"

#include <algorithm>
#include <cmath>

namespace smartstat::fit {

void validate_series(const ObservationSeries &series) {
  if (series.empty()) throw Error(ErrorCode::CoverageError, "no observations");
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto &r = series[i];
    if (!std::isfinite(r.timestamp)) {
      throw Error(ErrorCode::InvalidParameter, "non-finite timestamp");
    }
    if (i > 0 && !(r.timestamp > series[i - 1].timestamp)) {
      throw Error(ErrorCode::InvalidParameter, "observations are not strictly time-ordered");
    }
    if (r.sensed_temps.empty()) {
      throw Error(ErrorCode::InvalidParameter, "record without sensed temperature");
    }
    for (const auto &[zone, t] : r.sensed_temps) {
      if (!thermal::in_envelope(t)) {
        throw Error(ErrorCode::InvalidParameter, "temperature of '" + zone +
                                                     "' outside the sanity envelope");
      }
    }
    if (!thermal::in_envelope(r.outdoor_temp)) {
      throw Error(ErrorCode::InvalidParameter, "outdoor temperature outside the envelope");
    }
  }
}

double grid_step(const ObservationSeries &series) {
  if (series.size() < 2) {
    throw Error(ErrorCode::GridError, "need at least two records for a grid");
  }
  const double dt = series[1].timestamp - series[0].timestamp;
  if (!(dt > 0.0)) throw Error(ErrorCode::GridError, "non-increasing timestamps");
  for (std::size_t i = 2; i < series.size(); ++i) {
    const double d = series[i].timestamp - series[i - 1].timestamp;
    if (std::abs(d - dt) > 1e-6 * std::max(1.0, dt)) {
      throw Error(ErrorCode::GridError, "observations are not on a uniform grid");
    }
  }
  return dt;
}

bool has_compressor_flags(const ObservationSeries &series) {
  return !series.empty() &&
         std::all_of(series.begin(), series.end(),
                     [](const ObservationRecord &r) { return r.compressor_on.has_value(); });
}

ObservationSeries slice(const ObservationSeries &series, double from, double to) {
  ObservationSeries out;
  for (const auto &r : series) {
    if (r.timestamp >= from && r.timestamp < to) out.push_back(r);
  }
  return out;
}

}  // namespace smartstat::fit
