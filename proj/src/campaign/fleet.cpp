#include "smartstat/campaign/fleet.hpp"

#include "smartstat/campaign/benchmark.hpp"
#include "smartstat/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

namespace smartstat::campaign {

namespace {

constexpr double kGain = 900.0;  // W of occupants and appliances

std::optional<int> lead_of(const std::optional<int> &alarm_day, int saturation_day) {
  if (!alarm_day) return std::nullopt;
  return saturation_day - *alarm_day;
}

int day_index(double date) { return static_cast<int>(std::llround((date - kEpoch) / kDay)); }

/// Replays a unit's features through a fresh monitor from `first_day` on.
std::optional<int> replay_alarm(const std::vector<greina::HealthFeatures> &days, int first_day,
                                const greina::MonitorConfig &cfg,
                                const greina::FleetPrior *prior) {
  auto m = greina::make_monitor(cfg);
  for (std::size_t d = static_cast<std::size_t>(first_day); d < days.size(); ++d) {
    if (m.observe(days[d], cfg, prior).alert) return day_index(days[d].date);
  }
  return std::nullopt;
}

}  // namespace

double UnitSetup::capacity(int day) const {
  if (decay <= 0.0 || day < fault_day) return 1.0;
  return std::max(capacity_floor, 1.0 - decay * (day - fault_day + 1));
}

UnitSetup benchmark_unit(std::uint64_t seed) {
  UnitSetup u;
  u.seed = seed;
  u.ac = benchmark_ac();
  u.model.preset = thermal::Preset::single_zone;
  u.model.params = single_zone_params();
  u.model.params[fit::kGainParam] = kGain;
  u.model.params[fit::kCoolingParam] = u.ac.rated_cooling_power;
  u.model.created_at = kEpoch;
  return u;
}

fit::ObservationSeries simulate_unit(const UnitSetup &unit, int days,
                                     std::optional<double> capacity_override) {
  if (days < 1) throw Error(ErrorCode::InvalidParameter, "need at least one day");
  auto tmpl = fit::ModelTemplate::for_preset(unit.model.preset);
  tmpl.ac = unit.ac;
  const auto room = fit::assemble_model(tmpl, unit.model.params);
  const auto &net = room.network;
  const double dt = 60.0;

  WeatherSpec ws;
  ws.mean = unit.weather_mean;
  ws.amplitude = 4.0;
  ws.day_sigma = 1.5;
  ws.hour_sigma = 0.3;
  ws.seed = unit.seed * 31 + 5;
  const auto weather = synthetic_weather(kEpoch, days * 24.0 + 1.0, ws);
  const auto schedule =
      daily_sessions(kEpoch, days, unit.session_start, unit.session_end, unit.set_temp);

  const auto samples = static_cast<std::size_t>(days) * static_cast<std::size_t>(kDay / dt);
  std::vector<std::uint8_t> doors(samples, 0);
  DoorModel dm;
  dm.zone = std::string(thermal::kRoom);
  dm.opens_per_day = 4.0;
  dm.seed = unit.seed * 17 + 3;
  if (unit.doors) doors = door_schedule(kEpoch, samples, dt, dm);
  const auto disturbance = door_disturbance(net, kEpoch, dt, doors, dm);

  thermal::PlantState state{thermal::uniform_state(net, kEpoch, 28.0), {}};
  fit::ObservationSeries out;
  out.reserve(samples);
  for (int d = 0; d < days; ++d) {
    thermal::ACUnit ac = room.ac;
    ac.rated_cooling_power *= capacity_override.value_or(unit.capacity(d));
    thermal::SimulationOptions so;
    so.horizon = kDay;
    so.dt = dt;
    so.noise.sigma_W = 50.0;
    so.noise.block_s = 900.0;
    so.noise.seed = unit.seed * 7919 + static_cast<std::uint64_t>(d);
    so.noise.mean_W = room.internal_gain;
    if (unit.doors) so.disturbance = disturbance;
    thermal::HysteresisConfig hyst = tmpl.hysteresis;
    const auto trace = thermal::simulate(net, state, weather, schedule, ac, hyst, so);
    state = trace.final_state;

    ObserveOptions oo;
    oo.zones = {std::string(thermal::kRoom)};
    oo.noise_sigma = unit.sensor_sigma;
    oo.seed = unit.seed * 104729 + static_cast<std::uint64_t>(d);
    const auto first = static_cast<std::size_t>(d) * trace.size();
    oo.door_open.assign(doors.begin() + static_cast<long>(first),
                        doors.begin() + static_cast<long>(first + trace.size()));
    auto day = observe(trace, oo);
    out.insert(out.end(), day.begin(), day.end());
  }
  return out;
}

std::vector<UnitSetup> fleet_units(const FleetOptions &options) {
  if (options.units < 1 || options.faulty < 0 || options.faulty > options.units) {
    throw Error(ErrorCode::InvalidParameter, "invalid fleet composition");
  }
  if (options.days < 1 || options.fault_day < 0) {
    throw Error(ErrorCode::InvalidParameter, "invalid campaign length");
  }
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> jitter(0.9, 1.1);
  std::uniform_real_distribution<double> decay(options.decay_min, options.decay_max);
  std::uniform_real_distribution<double> climate(-1.0, 1.0);
  std::vector<UnitSetup> units;
  for (int i = 0; i < options.units; ++i) {
    auto u = benchmark_unit(options.seed * 1000 + static_cast<std::uint64_t>(i));
    u.id = i;
    for (auto &[name, value] : u.model.params) {
      if (name != fit::kCoolingParam) value *= jitter(rng);
    }
    u.weather_mean += climate(rng);
    u.fault_day = options.fault_day;
    u.capacity_floor = options.capacity_floor;
    const double rate = decay(rng);
    if (i < options.faulty) u.decay = rate;
    units.push_back(std::move(u));
  }
  return units;
}

FleetReport run_fleet(const FleetOptions &options) {
  const auto started = std::chrono::steady_clock::now();
  FleetReport rep;
  const auto &cfg = options.monitor;

  std::vector<greina::Baseline> snapshot;  // local baselines just before the transfer run
  std::vector<bool> healthy_at_snapshot;
  const int transfer_start = std::max(0, options.fault_day - options.truncated_history);

  for (const auto &setup : fleet_units(options)) {
    UnitOutcome u;
    u.setup = setup;
    u.faulty = setup.decay > 0.0;
    const auto obs = simulate_unit(setup, options.days);
    auto monitor = greina::make_monitor(cfg);
    greina::Baseline snap;
    bool healthy_snap = true;
    u.saturation_day = options.days;
    for (int d = 0; d < options.days; ++d) {
      if (d == transfer_start) {
        snap = monitor.local;
        healthy_snap = monitor.detector.state == greina::DetectorState::healthy;
      }
      const auto day = fit::slice(obs, kEpoch + d * kDay, kEpoch + (d + 1) * kDay);
      auto f = greina::daily_features(day, setup.model, setup.ac);
      const auto step = monitor.observe(f, cfg);
      if (step.alert && !u.alarm_day) u.alarm_day = d;
      if (f.valid && f.duty_cycle >= options.saturation_duty && u.saturation_day == options.days) {
        u.saturation_day = d;
      }
      u.z.push_back(step.z);
      u.days.push_back(f);
    }
    u.lead = lead_of(u.alarm_day, u.saturation_day);
    if (u.faulty) {
      ++rep.faulty;
      if (u.lead && *u.lead >= options.lead_days) ++rep.detected;
    } else {
      if (u.alarm_day) ++rep.false_alarms;
      for (const auto &z : u.z) {
        if (!z) continue;
        ++rep.scored_days;
        if (std::abs(*z) <= 3.0) ++rep.scored_within_3;
      }
    }
    snapshot.push_back(snap);
    healthy_at_snapshot.push_back(healthy_snap);
    rep.units.push_back(std::move(u));
  }

  if (options.transfer) {
    for (std::size_t i = 0; i < rep.units.size(); ++i) {
      auto &u = rep.units[i];
      if (!u.faulty) continue;
      std::vector<greina::Baseline> others;
      for (std::size_t j = 0; j < rep.units.size(); ++j) {
        if (j != i && healthy_at_snapshot[j] && snapshot[j].n_days > 0.0) {
          others.push_back(snapshot[j]);
        }
      }
      if (others.empty()) continue;
      const auto prior = greina::pool_prior(others, cfg.n0);
      u.lead_prior = lead_of(replay_alarm(u.days, transfer_start, cfg, &prior), u.saturation_day);
      u.lead_cold = lead_of(replay_alarm(u.days, transfer_start, cfg, nullptr), u.saturation_day);
      if (u.lead_cold && (!u.lead_prior || *u.lead_prior < *u.lead_cold)) rep.transfer_ok = false;
    }
  }

  rep.detection_rate = rep.faulty > 0 ? static_cast<double>(rep.detected) / rep.faulty : 1.0;
  rep.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return rep;
}

}  // namespace smartstat::campaign
