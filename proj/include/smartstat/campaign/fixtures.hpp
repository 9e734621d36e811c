#pragma once

// Synthetic traces shared by the tests and the acceptance campaigns.

#include "smartstat/campaign/benchmark.hpp"
#include "smartstat/fit/greybox.hpp"
#include "smartstat/thermal/simulate.hpp"

#include <cstdint>

namespace smartstat::fixtures {

struct RecoveryTrace {
  thermal::SimulationTrace trace;
  fit::ObservationSeries observations;
};

/// Three-region benchmark room under daily 08:00-20:00 sessions at 24 °C,
/// observed in hir, mir and lir with Gaussian sensor noise. No process noise.
inline RecoveryTrace recovery_trace(std::uint64_t seed, double sigma, double hours = 48.0,
                                    const fit::ParamMap &params = campaign::three_region_params(),
                                    double t0 = campaign::kEpoch) {
  using namespace smartstat::thermal;
  const auto tmpl = campaign::benchmark_template(Preset::three_region);
  const auto model = fit::assemble_model(tmpl, params);
  campaign::WeatherSpec weather;
  weather.day_sigma = 1.5;
  weather.hour_sigma = 0.3;
  weather.seed = seed;
  SimulationOptions opt;
  opt.horizon = hours * campaign::kHour;
  const auto days = static_cast<int>(std::ceil(hours / 24.0));
  RecoveryTrace out;
  out.trace = simulate(model.network, PlantState{uniform_state(model.network, t0, 30.0), {}},
                       campaign::synthetic_weather(t0, hours, weather),
                       campaign::daily_sessions(t0, days, 8.0, 20.0, 24.0), model.ac,
                       tmpl.hysteresis, opt);
  campaign::ObserveOptions obs;
  obs.zones = {"hir", "mir", "lir"};
  obs.noise_sigma = sigma;
  obs.seed = seed + 1000;
  out.observations = campaign::observe(out.trace, obs);
  return out;
}

}  // namespace smartstat::fixtures

#include "smartstat/cet/control.hpp"

namespace smartstat::fixtures {

/// Hot afternoon on the benchmark room: session from 09:00 for 8 h, three
/// 160-minute slots over candidates 16..30 (exhaustive regime).
struct HotDay {
  cet::PlanningModel model;
  TimeSeries forecast;
  cet::CETConfig cfg;
  thermal::PlantState init;
};

inline HotDay hot_day(std::uint64_t weather_seed = 0) {
  using namespace smartstat::thermal;
  const auto tmpl = campaign::benchmark_template(Preset::three_region);
  HotDay h{cet::planning_model(fit::assemble_model(tmpl, campaign::three_region_params()),
                               tmpl.hysteresis),
           {}, {}, {}};
  const double t0 = campaign::kEpoch + 9.0 * campaign::kHour;
  campaign::WeatherSpec weather;
  weather.mean = 35.0;
  weather.amplitude = 4.0;
  weather.hour_sigma = 0.3;
  weather.seed = weather_seed;
  h.forecast = campaign::synthetic_weather(campaign::kEpoch, 48.0, weather);
  h.cfg.slot = 160.0 * 60.0;
  h.cfg.horizon = 8.0 * campaign::kHour;
  h.cfg.preferred_temp = 24.0;
  h.cfg.band = 1.0;
  h.init = PlantState{uniform_state(h.model.network, t0, 31.0), {}};
  return h;
}

}  // namespace smartstat::fixtures

namespace smartstat::fixtures {

/// Single-zone benchmark afternoon: idle_hours of passive drift, then a
/// session at 24 °C. Block process noise plus Gaussian sensor noise.
struct DecodeTrace {
  thermal::SimulationTrace trace;
  fit::ObservationSeries observations;
  fit::FitResult params;
};

inline DecodeTrace decode_trace(std::uint64_t seed, double sigma, double idle_hours = 2.0,
                                double session_hours = 3.0, bool ac_present = true) {
  using namespace smartstat::thermal;
  auto tmpl = campaign::benchmark_template(Preset::single_zone);
  DecodeTrace d;
  d.params.preset = Preset::single_zone;
  d.params.params = campaign::single_zone_params();
  auto model = fit::assemble_model(tmpl, d.params.params);
  if (!ac_present) model.ac.rated_cooling_power = 1e-9;
  const double t0 = campaign::kEpoch + 12.0 * campaign::kHour;
  campaign::WeatherSpec weather;
  weather.mean = 34.0;
  weather.hour_sigma = 0.3;
  weather.seed = seed;
  SimulationOptions opt;
  opt.horizon = (idle_hours + session_hours) * campaign::kHour;
  opt.noise = NoiseModel{};
  opt.noise.seed = seed;
  SetpointSchedule schedule{{{t0, std::nullopt}, {t0 + idle_hours * campaign::kHour, 24.0}}};
  const double start = 28.0 + static_cast<double>(seed % 5);
  d.trace = simulate(model.network, PlantState{uniform_state(model.network, t0, start), {}},
                     campaign::synthetic_weather(t0, idle_hours + session_hours + 1.0, weather),
                     schedule, model.ac, tmpl.hysteresis, opt);
  campaign::ObserveOptions obs;
  obs.zones = {"room"};
  obs.noise_sigma = sigma;
  obs.seed = seed + 77;
  obs.with_flags = false;
  d.observations = campaign::observe(d.trace, obs);
  return d;
}

}  // namespace smartstat::fixtures
