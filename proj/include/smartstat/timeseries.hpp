#pragma once

#include <cstddef>
#include <vector>

namespace smartstat {

/// Time-ordered (t, value) samples; t in seconds since epoch.
struct TimeSeries {
  std::vector<double> t;
  std::vector<double> v;

  [[nodiscard]] std::size_t size() const { return t.size(); }
  [[nodiscard]] bool empty() const { return t.empty(); }
  [[nodiscard]] double front_time() const { return t.front(); }
  [[nodiscard]] double back_time() const { return t.back(); }

  void push_back(double time, double value) {
    t.push_back(time);
    v.push_back(value);
  }

  /// True when [t0, t1] lies inside the sampled span and no gap between
  /// consecutive samples inside it exceeds max_gap.
  [[nodiscard]] bool covers(double t0, double t1, double max_gap) const;

  /// Linear interpolation; clamps outside the sampled span.
  [[nodiscard]] double value_at(double time) const;

  /// Constant series spanning [t0, t1], sampled hourly.
  static TimeSeries constant(double t0, double t1, double value);
};

}  // namespace smartstat
