#pragma once

#include "smartstat/fit/observations.hpp"
#include "smartstat/timeseries.hpp"

namespace smartstat::io {

inline constexpr double kDefaultMaxGap = 3.0 * 3600.0;

/// Linear interpolation onto t0, t0 + grid_dt, ... up to the last sample.
/// Throws TooFewPoints below two samples and GapTooLarge when consecutive
/// samples are more than max_gap apart.
TimeSeries resample(const TimeSeries &series, double grid_dt, double max_gap = kDefaultMaxGap);

/// Same grid for observation records: temperatures and power are linear,
/// set temperature, door and compressor flags hold the previous sample.
/// Zones missing from any record are dropped.
fit::ObservationSeries resample(const fit::ObservationSeries &series, double grid_dt,
                                double max_gap = kDefaultMaxGap);

}  // namespace smartstat::io
