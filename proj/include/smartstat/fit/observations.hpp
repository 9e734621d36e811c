#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace smartstat::fit {

/// One sensed sample. Temperatures are keyed by zone id; single-sensor rooms
/// use the "room" zone.
struct ObservationRecord {
  double timestamp = 0.0;
  std::map<std::string, double> sensed_temps;
  double outdoor_temp = 0.0;
  std::optional<double> set_temp;  // absent: AC idle
  bool door_open = false;
  std::optional<bool> compressor_on;
  std::optional<double> electrical_power;

  friend bool operator==(const ObservationRecord &, const ObservationRecord &) = default;
};

using ObservationSeries = std::vector<ObservationRecord>;

/// Throws CoverageError on empty input, InvalidParameter on unordered or
/// out-of-envelope records.
void validate_series(const ObservationSeries &series);

/// Uniform sample spacing of the series; throws GridError when irregular.
double grid_step(const ObservationSeries &series);

/// True when every record carries a compressor flag.
bool has_compressor_flags(const ObservationSeries &series);

/// Records with timestamps in [from, to).
ObservationSeries slice(const ObservationSeries &series, double from, double to);

}  // namespace smartstat::fit
