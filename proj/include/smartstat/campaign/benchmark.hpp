#pragma once

// Desk-scale benchmark rooms, weather, and synthetic observation helpers
// shared by the campaigns, the CLI fixtures, and the tests.

#include "smartstat/fit/greybox.hpp"
#include "smartstat/thermal/simulate.hpp"
#include "smartstat/timeseries.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace smartstat::campaign {

/// Midnight UTC used as the start of every synthetic campaign.
inline constexpr double kEpoch = 1699920000.0;
inline constexpr double kHour = 3600.0;
inline constexpr double kDay = 86400.0;

/// Three-region room: C_hir=2e5, C_mir=4e5, C_lir=2e5, C_wall=8e5 J/°C;
/// R_hir-mir=R_mir-lir=0.02, R_zone-wall=0.05, R_wall-ambient=0.02 °C/W.
fit::ParamMap three_region_params();
/// Single-zone analog: the three regions lumped into one room node.
fit::ParamMap single_zone_params();

/// 3500 W thermal, 1200 W electrical, 50 W fan, 180 s lockouts.
thermal::ACUnit benchmark_ac();

fit::ModelTemplate benchmark_template(thermal::Preset preset);
thermal::RCNetwork benchmark_network(thermal::Preset preset);

/// Hourly outdoor temperature: per-day mean drawn from
/// N(mean, day_sigma^2), sinusoidal swing peaking at 15:00 local.
struct WeatherSpec {
  double mean = 33.0;
  double amplitude = 5.0;
  double day_sigma = 0.0;
  double hour_sigma = 0.0;
  std::uint64_t seed = 0;
};
TimeSeries synthetic_weather(double t0, double hours, const WeatherSpec &spec);

/// Turns a simulated trace into sensed records with additive Gaussian noise.
struct ObserveOptions {
  std::vector<std::string> zones;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  bool with_flags = true;
  bool with_power = false;
  double electrical_power = 1200.0;
  double fan_power = 50.0;
  std::vector<std::uint8_t> door_open;  // per sample, optional
};
fit::ObservationSeries observe(const thermal::SimulationTrace &trace,
                               const ObserveOptions &options);

/// Daily AC session [start_hour, end_hour) at a fixed set temperature over
/// `days` days starting at t0 (midnight).
thermal::SetpointSchedule daily_sessions(double t0, int days, double start_hour,
                                         double end_hour, double set_temp);

/// Random short door openings during open hours; doors add a conductive path
/// from the ambient into `zone` while open.
struct DoorModel {
  double opens_per_day = 6.0;
  double mean_open_minutes = 4.0;
  double open_hour = 9.0;
  double close_hour = 21.0;
  double resistance = 0.01;  // °C/W
  std::string zone = "hir";
  std::uint64_t seed = 0;
};
std::vector<std::uint8_t> door_schedule(double t0, std::size_t samples, double dt,
                                        const DoorModel &model);
thermal::DisturbanceFn door_disturbance(const thermal::RCNetwork &network, double t0,
                                        double dt, std::vector<std::uint8_t> schedule,
                                        const DoorModel &model);

}  // namespace smartstat::campaign
