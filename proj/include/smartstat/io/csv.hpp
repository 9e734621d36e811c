#pragma once

// Observation CSV. Columns: timestamp (RFC 3339), room_temp_c,
// outdoor_temp_c, then optionally set_temp_c (empty = AC idle), door_open
// (0/1), compressor_on (0/1 or empty), power_w, and <zone>_temp_c for extra
// sensed zones.

#include "smartstat/fit/observations.hpp"

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace smartstat::io {

/// Seconds since epoch. Accepts YYYY-MM-DDTHH:MM[:SS[.fff]] followed by Z,
/// an +HH:MM offset, or nothing (read as UTC). Throws FormatError.
double parse_rfc3339(std::string_view text);

/// UTC with a Z suffix; fractional seconds only when present.
std::string format_rfc3339(double t);

struct RowReject {
  std::size_t line = 0;  // 1-based, header is line 1
  std::string reason;
};

struct ParseResult {
  fit::ObservationSeries series;
  std::vector<RowReject> rejects;
};

/// Rows failing validation land in `rejects`; the rest come back sorted by
/// time, later duplicates of a timestamp rejected. room_temp_c is stored
/// under `room_zone`. Throws FormatError when a required column is missing
/// and EmptyInput without a header or data rows.
ParseResult parse_observations(std::istream &in, std::string_view room_zone = "room");

/// Inverse of parse_observations for the zones present in the first record.
void write_observations(std::ostream &out, const fit::ObservationSeries &series,
                        std::string_view room_zone = "room");

}  // namespace smartstat::io
