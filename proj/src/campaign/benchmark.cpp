#include "smartstat/campaign/benchmark.hpp"

#include "smartstat/error.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <random>

namespace smartstat::campaign {

using thermal::edge_key;
using thermal::kAmbient;
using thermal::kHir;
using thermal::kLir;
using thermal::kMir;
using thermal::kRoom;
using thermal::kWall;

fit::ParamMap three_region_params() {
  return {
      {fit::capacitance_param(kHir), 2e5},
      {fit::capacitance_param(kMir), 4e5},
      {fit::capacitance_param(kLir), 2e5},
      {fit::capacitance_param(kWall), 8e5},
      {fit::resistance_param(kHir, kMir), 0.02},
      {fit::resistance_param(kMir, kLir), 0.02},
      {fit::resistance_param(kHir, kWall), 0.05},
      {fit::resistance_param(kMir, kWall), 0.05},
      {fit::resistance_param(kLir, kWall), 0.05},
      {fit::resistance_param(kWall, kAmbient), 0.02},
  };
}

fit::ParamMap single_zone_params() {
  return {
      {fit::capacitance_param(kRoom), 8e5},
      {fit::capacitance_param(kWall), 8e5},
      {fit::resistance_param(kRoom, kWall), 0.05 / 3.0},
      {fit::resistance_param(kWall, kAmbient), 0.02},
  };
}

thermal::ACUnit benchmark_ac() { return thermal::ACUnit{}; }

fit::ModelTemplate benchmark_template(thermal::Preset preset) {
  auto tmpl = fit::ModelTemplate::for_preset(preset);
  tmpl.ac = benchmark_ac();
  return tmpl;
}

thermal::RCNetwork benchmark_network(thermal::Preset preset) {
  const auto tmpl = benchmark_template(preset);
  const auto params =
      preset == thermal::Preset::single_zone ? single_zone_params() : three_region_params();
  return fit::assemble_model(tmpl, params).network;
}

TimeSeries synthetic_weather(double t0, double hours, const WeatherSpec &spec) {
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  TimeSeries s;
  const int n = static_cast<int>(std::ceil(hours)) + 1;
  double day_mean = spec.mean;
  long long day = -1;
  for (int h = 0; h <= n; ++h) {
    const double t = t0 + h * kHour;
    const auto d = static_cast<long long>(std::floor((t - kEpoch) / kDay));
    if (d != day) {
      day = d;
      day_mean = spec.mean + spec.day_sigma * normal(rng);
    }
    const double hour_of_day = std::fmod(t - kEpoch, kDay) / kHour;
    const double swing =
        spec.amplitude * std::cos(2.0 * std::numbers::pi * (hour_of_day - 15.0) / 24.0);
    const double jitter = spec.hour_sigma > 0.0 ? spec.hour_sigma * normal(rng) : 0.0;
    s.push_back(t, day_mean + swing + jitter);
  }
  return s;
}

fit::ObservationSeries observe(const thermal::SimulationTrace &trace,
                               const ObserveOptions &options) {
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  fit::ObservationSeries out;
  out.reserve(trace.size());
  std::vector<Eigen::Index> cols;
  for (const auto &z : options.zones) cols.push_back(trace.zone_column(z));
  for (std::size_t k = 0; k < trace.size(); ++k) {
    fit::ObservationRecord r;
    r.timestamp = trace.time[k];
    for (std::size_t i = 0; i < cols.size(); ++i) {
      double t = trace.temperatures(static_cast<Eigen::Index>(k), cols[i]);
      if (options.noise_sigma > 0.0) t += options.noise_sigma * normal(rng);
      r.sensed_temps[options.zones[i]] = t;
    }
    r.outdoor_temp = trace.outdoor[k];
    r.set_temp = trace.set_temp[k];
    r.door_open = k < options.door_open.size() && options.door_open[k] != 0;
    if (options.with_flags) r.compressor_on = trace.compressor_on[k] != 0;
    if (options.with_power) {
      r.electrical_power = (trace.compressor_on[k] ? options.electrical_power : 0.0) +
                           (trace.set_temp[k] ? options.fan_power : 0.0);
    }
    out.push_back(std::move(r));
  }
  return out;
}

thermal::SetpointSchedule daily_sessions(double t0, int days, double start_hour,
                                         double end_hour, double set_temp) {
  thermal::SetpointSchedule s;
  s.slots.push_back({t0, std::nullopt});
  for (int d = 0; d < days; ++d) {
    const double base = t0 + d * kDay;
    s.slots.push_back({base + start_hour * kHour, set_temp});
    s.slots.push_back({base + end_hour * kHour, std::nullopt});
  }
  return s;
}

std::vector<std::uint8_t> door_schedule(double t0, std::size_t samples, double dt,
                                        const DoorModel &model) {
  std::vector<std::uint8_t> open(samples, 0);
  std::mt19937_64 rng(model.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::exponential_distribution<double> duration(1.0 / model.mean_open_minutes);
  const double open_span = (model.close_hour - model.open_hour) * kHour;
  const double per_sample = model.opens_per_day * dt / open_span;
  std::size_t k = 0;
  while (k < samples) {
    const double t = t0 + static_cast<double>(k) * dt;
    const double hour = std::fmod(t - kEpoch, kDay) / kHour;
    if (hour >= model.open_hour && hour < model.close_hour && unit(rng) < per_sample) {
      const auto len = static_cast<std::size_t>(std::max(1.0, std::round(duration(rng) * 60.0 / dt)));
      for (std::size_t j = k; j < std::min(samples, k + len); ++j) open[j] = 1;
      k += len;
    } else {
      ++k;
    }
  }
  return open;
}

thermal::DisturbanceFn door_disturbance(const thermal::RCNetwork &network, double t0,
                                        double dt, std::vector<std::uint8_t> schedule,
                                        const DoorModel &model) {
  const auto zone = network.zone_index(model.zone);
  auto shared = std::make_shared<std::vector<std::uint8_t>>(std::move(schedule));
  const double conductance = 1.0 / model.resistance;
  return [=](double t, const Eigen::VectorXd &temps, double outdoor, Eigen::VectorXd &heat) {
    const auto k = static_cast<long long>(std::llround((t - t0) / dt));
    if (k >= 0 && static_cast<std::size_t>(k) < shared->size() &&
        (*shared)[static_cast<std::size_t>(k)] != 0) {
      heat(zone) += conductance * (outdoor - temps(zone));
    }
  };
}

}  // namespace smartstat::campaign
