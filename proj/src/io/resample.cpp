#include "smartstat/io/resample.hpp"

#include "smartstat/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace smartstat::io {
namespace {

template <typename TimeAt>
std::vector<double> grid_for(std::size_t n, TimeAt time_at, double grid_dt, double max_gap) {
  if (!(grid_dt > 0.0) || !std::isfinite(grid_dt)) {
    throw Error(ErrorCode::InvalidParameter, "grid_dt must be positive");
  }
  if (n < 2) throw Error(ErrorCode::TooFewPoints, "resampling needs at least two points");
  for (std::size_t i = 1; i < n; ++i) {
    const double gap = time_at(i) - time_at(i - 1);
    if (!(gap > 0.0)) throw Error(ErrorCode::InvalidParameter, "samples are not time-ordered");
    if (gap > max_gap) {
      throw Error(ErrorCode::GapTooLarge, "gap of " + std::to_string(gap / 3600.0) + " h");
    }
  }
  const double t0 = time_at(0);
  const double span = time_at(n - 1) - t0;
  // Tolerate rounding so an exactly aligned last sample stays on the grid.
  const auto steps = static_cast<std::size_t>(std::floor(span / grid_dt + 1e-9));
  std::vector<double> grid(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) grid[k] = t0 + static_cast<double>(k) * grid_dt;
  return grid;
}

}  // namespace

TimeSeries resample(const TimeSeries &series, double grid_dt, double max_gap) {
  const auto grid = grid_for(series.size(), [&](std::size_t i) { return series.t[i]; },
                             grid_dt, max_gap);
  TimeSeries out;
  out.t.reserve(grid.size());
  out.v.reserve(grid.size());
  std::size_t j = 0;
  for (double t : grid) {
    while (j + 2 < series.size() && series.t[j + 1] <= t) ++j;
    const double t0 = series.t[j], t1 = series.t[j + 1];
    const double w = std::clamp((t - t0) / (t1 - t0), 0.0, 1.0);
    out.push_back(t, w == 0.0 ? series.v[j] : w == 1.0 ? series.v[j + 1]
                                                       : series.v[j] + w * (series.v[j + 1] - series.v[j]));
  }
  return out;
}

fit::ObservationSeries resample(const fit::ObservationSeries &series, double grid_dt,
                                double max_gap) {
  const auto grid = grid_for(series.size(), [&](std::size_t i) { return series[i].timestamp; },
                             grid_dt, max_gap);
  std::vector<std::string> zones;
  for (const auto &[zone, t] : series.front().sensed_temps) {
    const bool everywhere = std::all_of(series.begin(), series.end(), [&](const auto &r) {
      return r.sensed_temps.count(zone) > 0;
    });
    if (everywhere) zones.push_back(zone);
  }
  if (zones.empty()) throw Error(ErrorCode::UnknownZone, "no zone is sensed in every record");

  auto lerp = [](double a, double b, double w) {
    return w == 0.0 ? a : w == 1.0 ? b : a + w * (b - a);
  };
  fit::ObservationSeries out;
  out.reserve(grid.size());
  std::size_t j = 0;
  for (double t : grid) {
    while (j + 2 < series.size() && series[j + 1].timestamp <= t) ++j;
    const auto &a = series[j];
    const auto &b = series[j + 1];
    const double w = std::clamp((t - a.timestamp) / (b.timestamp - a.timestamp), 0.0, 1.0);
    const auto &hold = w == 1.0 ? b : a;
    fit::ObservationRecord r;
    r.timestamp = t;
    for (const auto &zone : zones) {
      r.sensed_temps[zone] = lerp(a.sensed_temps.at(zone), b.sensed_temps.at(zone), w);
    }
    r.outdoor_temp = lerp(a.outdoor_temp, b.outdoor_temp, w);
    r.set_temp = hold.set_temp;
    r.door_open = hold.door_open;
    r.compressor_on = hold.compressor_on;
    if (a.electrical_power && b.electrical_power) {
      r.electrical_power = lerp(*a.electrical_power, *b.electrical_power, w);
    } else {
      r.electrical_power = hold.electrical_power;
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace smartstat::io
