#pragma once

// Synthetic fleet for capacity-loss detection: single-zone benchmark rooms
// with jittered constants, daily AC sessions, random door openings, and a
// linear cooling-capacity decay injected into some units.

#include "smartstat/fit/greybox.hpp"
#include "smartstat/greina/health.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace smartstat::campaign {

struct UnitSetup {
  int id = 0;
  fit::FitResult model;  // generating parameters, Q_gain included
  thermal::ACUnit ac;
  double weather_mean = 36.0;
  std::uint64_t seed = 0;
  double decay = 0.0;        // capacity lost per day once the fault starts
  int fault_day = 30;
  double capacity_floor = 0.3;
  double set_temp = 24.0;
  double session_start = 0.0;  // hour of day; the fleet cools around the clock
  double session_end = 24.0;
  double sensor_sigma = 0.1;
  bool doors = true;

  [[nodiscard]] double capacity(int day) const;  // fraction of rated cooling
};

/// Benchmark unit with no fault and no jitter.
UnitSetup benchmark_unit(std::uint64_t seed = 0);

/// Observation records for days [0, days) from kEpoch, with compressor
/// flags. `capacity_override` pins the capacity fraction for every day.
fit::ObservationSeries simulate_unit(const UnitSetup &unit, int days,
                                     std::optional<double> capacity_override = std::nullopt);

struct FleetOptions {
  int units = 10;
  int faulty = 7;
  int days = 120;
  int fault_day = 30;
  double decay_min = 0.01;
  double decay_max = 0.02;
  double capacity_floor = 0.3;
  std::uint64_t seed = 7;
  double lead_days = 7.0;
  double saturation_duty = 0.95;
  int truncated_history = 3;  // local days before the fault in the transfer run
  bool transfer = true;
  greina::MonitorConfig monitor;
};

struct UnitOutcome {
  UnitSetup setup;
  bool faulty = false;
  std::vector<greina::HealthFeatures> days;
  std::vector<std::optional<double>> z;
  std::optional<int> alarm_day;
  int saturation_day = 0;  // first day with duty >= saturation_duty, or the campaign length
  std::optional<int> lead;
  std::optional<int> lead_prior;  // truncated history, fleet prior
  std::optional<int> lead_cold;   // truncated history, no prior
};

struct FleetReport {
  std::vector<UnitOutcome> units;
  int faulty = 0;
  int detected = 0;      // faulty units alarmed with enough lead
  int false_alarms = 0;  // healthy units that alarmed
  double detection_rate = 0.0;
  bool transfer_ok = true;  // prior lead >= cold lead on every faulty unit
  int scored_days = 0;
  int scored_within_3 = 0;  // healthy-unit days with |z| <= 3
  double seconds = 0.0;
};

std::vector<UnitSetup> fleet_units(const FleetOptions &options);

FleetReport run_fleet(const FleetOptions &options);

}  // namespace smartstat::campaign
