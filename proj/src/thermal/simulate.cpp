#include "smartstat/thermal/simulate.hpp"

#include "smartstat/error.hpp"

#include <algorithm>
#include <cmath>

namespace smartstat::thermal {

namespace {

constexpr double kDtSlack = 1e-9;

void check_envelope(const ThermalState &state) {
  for (Eigen::Index i = 0; i < state.temperatures.size(); ++i) {
    if (!in_envelope(state.temperatures(i))) {
      throw Error(ErrorCode::StateOutOfRange,
                  "zone temperature " + std::to_string(state.temperatures(i)) +
                      " left the sanity envelope at t=" + std::to_string(state.time));
    }
  }
}

void check_boundary_sources(const RCNetwork &network) {
  for (const auto &b : network.boundaries()) {
    if (b.source != "outdoor") {
      throw Error(ErrorCode::MissingDrive, "no drive for boundary source '" + b.source + "'");
    }
  }
}

void check_inputs(const RCNetwork &network, const ThermalState &init,
                  const TimeSeries &outdoor, const SimulationOptions &options) {
  if (init.temperatures.size() != network.zone_count()) {
    throw Error(ErrorCode::InvalidParameter, "initial state does not cover every zone");
  }
  if (!(options.dt > 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "dt must be positive");
  }
  if (options.dt > stable_dt(network) * (1.0 + kDtSlack)) {
    throw Error(ErrorCode::UnstableStep,
                "dt " + std::to_string(options.dt) + " exceeds stable bound " +
                    std::to_string(stable_dt(network)));
  }
  if (options.horizon < 0.0) {
    throw Error(ErrorCode::InvalidParameter, "horizon must be non-negative");
  }
  if (outdoor.empty()) {
    throw Error(ErrorCode::MissingDrive, "no outdoor series");
  }
  if (!outdoor.covers(init.time, init.time + options.horizon, options.max_gap)) {
    throw Error(ErrorCode::CoverageError,
                "outdoor series does not cover the simulation horizon");
  }
}

SimulationTrace make_trace(const RCNetwork &network, std::size_t steps, double dt) {
  SimulationTrace trace;
  trace.dt = dt;
  trace.zone_ids = network.zone_ids();
  trace.time.reserve(steps);
  trace.temperatures.resize(static_cast<Eigen::Index>(steps), network.zone_count());
  trace.compressor_on.reserve(steps);
  trace.set_temp.reserve(steps);
  trace.outdoor.reserve(steps);
  return trace;
}

std::size_t step_count(const SimulationOptions &options) {
  return static_cast<std::size_t>(std::llround(options.horizon / options.dt));
}

}  // namespace

void ACUnit::validate() const {
  if (!(rated_cooling_power > 0.0) || rated_electrical_power < 0.0 || fan_power < 0.0 ||
      min_on < 0.0 || min_off < 0.0) {
    throw Error(ErrorCode::InvalidParameter, "invalid AC unit parameters");
  }
}

void HysteresisConfig::validate() const {
  if (delta_high < 0.0 || delta_low < 0.0 || !(delta_high + delta_low > 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "hysteresis band must have positive width");
  }
}

std::optional<double> SetpointSchedule::active_at(double t) const {
  std::optional<double> current;
  for (const auto &slot : slots) {
    if (slot.start > t) break;
    current = slot.set_temp;
  }
  return current;
}

SetpointSchedule SetpointSchedule::constant(std::optional<double> set_temp, double start) {
  return SetpointSchedule{{SetpointSlot{start, set_temp}}};
}

Eigen::Index SimulationTrace::zone_column(std::string_view zone) const {
  for (std::size_t i = 0; i < zone_ids.size(); ++i) {
    if (zone_ids[i] == zone) return static_cast<Eigen::Index>(i);
  }
  throw Error(ErrorCode::UnknownZone, "trace has no zone '" + std::string(zone) + "'");
}

ThermalState step(const RCNetwork &network, const ThermalState &state,
                  const Eigen::VectorXd &boundary_temps, bool compressor_on,
                  const ACUnit &ac, const Eigen::VectorXd &noise_W, double dt) {
  if (dt > stable_dt(network) * (1.0 + kDtSlack)) {
    throw Error(ErrorCode::UnstableStep, "dt exceeds stable bound");
  }
  if (state.temperatures.size() != network.zone_count() ||
      boundary_temps.size() != network.boundary_count()) {
    throw Error(ErrorCode::InvalidParameter, "state or boundary size mismatch");
  }
  Eigen::VectorXd heat = noise_W.size() == 0
                             ? Eigen::VectorXd::Zero(network.zone_count())
                             : noise_W;
  if (compressor_on) heat -= ac.rated_cooling_power * network.ac_fraction();
  ThermalState next{state.time + dt,
                    euler_update(network, state.temperatures, boundary_temps, heat, dt)};
  check_envelope(next);
  return next;
}

CompressorState thermostat_transition(const CompressorState &prev, double sensed_T,
                                      double set_T, const HysteresisConfig &cfg,
                                      const ACUnit &ac, double now) {
  CompressorState next = prev;
  if (prev.on && std::isfinite(prev.updated_at) && now > prev.updated_at) {
    next.cumulative_on += now - prev.updated_at;
  }
  next.updated_at = now;
  const double held = now - prev.since;
  if (!prev.on && sensed_T >= set_T + cfg.delta_high && held >= ac.min_off) {
    next.on = true;
    next.since = now;
  } else if (prev.on && sensed_T <= set_T - cfg.delta_low && held >= ac.min_on) {
    next.on = false;
    next.since = now;
  }
  return next;
}

Plant::Plant(const RCNetwork &network, const ACUnit &ac, const HysteresisConfig &cfg,
             PlantState init, double dt)
    : network_(&network),
      ac_(&ac),
      cfg_(&cfg),
      state_(std::move(init)),
      dt_(dt),
      sensing_index_(network.zone_index(cfg.sensing_zone)),
      boundary_(network.boundary_count()) {
  check_boundary_sources(network);
}

bool Plant::advance(std::optional<double> set_temp, double outdoor,
                    const Eigen::VectorXd &heat_W) {
  const double now = state_.thermal.time;
  auto &comp = state_.compressor;
  if (set_temp) {
    comp = thermostat_transition(comp, sensed(), *set_temp, *cfg_, *ac_, now);
  } else {
    // AC switched off by the user: compressor stops at once.
    if (comp.on && std::isfinite(comp.updated_at) && now > comp.updated_at) {
      comp.cumulative_on += now - comp.updated_at;
    }
    if (comp.on) comp.since = now;
    comp.on = false;
    comp.updated_at = now;
  }
  integrate(comp.on, outdoor, heat_W);
  return comp.on;
}

void Plant::advance_forced(bool on, double outdoor, const Eigen::VectorXd &heat_W) {
  auto &comp = state_.compressor;
  const double now = state_.thermal.time;
  if (comp.on && std::isfinite(comp.updated_at) && now > comp.updated_at) {
    comp.cumulative_on += now - comp.updated_at;
  }
  if (comp.on != on) comp.since = now;
  comp.on = on;
  comp.updated_at = now;
  integrate(on, outdoor, heat_W);
}

void Plant::integrate(bool on, double outdoor, const Eigen::VectorXd &heat_W) {
  boundary_.setConstant(outdoor);
  state_.thermal = step(*network_, state_.thermal, boundary_, on, *ac_, heat_W, dt_);
}

BlockNoise::BlockNoise(const NoiseModel &model, Eigen::Index zones, double t0)
    : model_(model), t0_(t0), current_(Eigen::VectorXd::Zero(zones)), rng_(model.seed) {
  if (model_.mean_W.size() != 0 && model_.mean_W.size() != zones) {
    throw Error(ErrorCode::InvalidParameter, "noise mean does not match zone count");
  }
}

const Eigen::VectorXd &BlockNoise::at(double t) {
  const auto block = static_cast<long long>(std::floor((t - t0_) / model_.block_s + 1e-9));
  while (block_ < block) {
    ++block_;
    for (Eigen::Index i = 0; i < current_.size(); ++i) {
      current_(i) = model_.sigma_W > 0.0 ? model_.sigma_W * normal_(rng_) : 0.0;
      if (model_.mean_W.size() != 0) current_(i) += model_.mean_W(i);
    }
  }
  return current_;
}

SimulationTrace simulate(const RCNetwork &network, const PlantState &init,
                         const TimeSeries &outdoor, const SetpointSchedule &schedule,
                         const ACUnit &ac, const HysteresisConfig &cfg,
                         const SimulationOptions &options) {
  ac.validate();
  cfg.validate();
  check_inputs(network, init.thermal, outdoor, options);
  check_envelope(init.thermal);

  const auto steps = step_count(options);
  auto trace = make_trace(network, steps, options.dt);
  Plant plant(network, ac, cfg, init, options.dt);
  BlockNoise noise(options.noise, network.zone_count(), init.thermal.time);
  Eigen::VectorXd heat(network.zone_count());

  for (std::size_t k = 0; k < steps; ++k) {
    const double t = plant.state().thermal.time;
    const double t_out = outdoor.value_at(t);
    const auto set = schedule.active_at(t);
    heat = noise.at(t);
    if (options.disturbance) {
      options.disturbance(t, plant.state().thermal.temperatures, t_out, heat);
    }
    trace.time.push_back(t);
    trace.temperatures.row(static_cast<Eigen::Index>(k)) =
        plant.state().thermal.temperatures.transpose();
    trace.compressor_on.push_back(plant.advance(set, t_out, heat) ? 1 : 0);
    trace.set_temp.push_back(set);
    trace.outdoor.push_back(t_out);
  }
  trace.final_state = plant.state();
  return trace;
}

SimulationTrace simulate_open_loop(const RCNetwork &network, const ThermalState &init,
                                   const TimeSeries &outdoor,
                                   std::span<const std::uint8_t> flags,
                                   const ACUnit &ac, const SimulationOptions &options) {
  ac.validate();
  check_inputs(network, init, outdoor, options);
  check_envelope(init);

  const auto steps = step_count(options);
  auto trace = make_trace(network, steps, options.dt);
  HysteresisConfig cfg;
  cfg.sensing_zone = network.zones().front().id;
  Plant plant(network, ac, cfg, PlantState{init, {}}, options.dt);
  BlockNoise noise(options.noise, network.zone_count(), init.time);
  Eigen::VectorXd heat(network.zone_count());

  for (std::size_t k = 0; k < steps; ++k) {
    const double t = plant.state().thermal.time;
    const double t_out = outdoor.value_at(t);
    const bool on = flags.empty() ? false : flags[std::min(k, flags.size() - 1)] != 0;
    heat = noise.at(t);
    if (options.disturbance) {
      options.disturbance(t, plant.state().thermal.temperatures, t_out, heat);
    }
    trace.time.push_back(t);
    trace.temperatures.row(static_cast<Eigen::Index>(k)) =
        plant.state().thermal.temperatures.transpose();
    plant.advance_forced(on, t_out, heat);
    trace.compressor_on.push_back(on ? 1 : 0);
    trace.set_temp.push_back(std::nullopt);
    trace.outdoor.push_back(t_out);
  }
  trace.final_state = plant.state();
  return trace;
}

ThermalState uniform_state(const RCNetwork &network, double time, double temp) {
  return ThermalState{time, Eigen::VectorXd::Constant(network.zone_count(), temp)};
}

}  // namespace smartstat::thermal
