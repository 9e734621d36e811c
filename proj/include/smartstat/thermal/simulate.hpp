#pragma once

#include "smartstat/thermal/network.hpp"
#include "smartstat/timeseries.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace smartstat::thermal {

// Sanity envelope for any simulated or observed temperature.
inline constexpr double kMinTemp = -40.0;
inline constexpr double kMaxTemp = 60.0;

inline bool in_envelope(double t) {
  return std::isfinite(t) && t >= kMinTemp && t <= kMaxTemp;
}

/// Zone temperatures in network zone order.
struct ThermalState {
  double time = 0.0;
  Eigen::VectorXd temperatures;
};

struct ACUnit {
  double rated_cooling_power = 3500.0;    // W thermal
  double rated_electrical_power = 1200.0; // W
  double fan_power = 50.0;                // W
  double min_on = 180.0;                  // s
  double min_off = 180.0;                 // s

  void validate() const;
};

struct HysteresisConfig {
  double delta_high = 0.5;
  double delta_low = 0.5;
  std::string sensing_zone = std::string(kHir);

  void validate() const;
};

struct CompressorState {
  bool on = false;
  double since = -std::numeric_limits<double>::infinity();
  double cumulative_on = 0.0;
  double updated_at = -std::numeric_limits<double>::infinity();
};

struct PlantState {
  ThermalState thermal;
  CompressorState compressor;
};

struct SetpointSlot {
  double start = 0.0;
  std::optional<double> set_temp;  // nullopt = AC idle

  friend bool operator==(const SetpointSlot &, const SetpointSlot &) = default;
};

/// Piecewise-constant set temperature; each slot holds until the next one
/// starts, the last holds forever, and times before the first slot are idle.
struct SetpointSchedule {
  std::vector<SetpointSlot> slots;

  [[nodiscard]] std::optional<double> active_at(double t) const;
  static SetpointSchedule constant(std::optional<double> set_temp,
                                   double start = std::numeric_limits<double>::lowest());

  friend bool operator==(const SetpointSchedule &, const SetpointSchedule &) = default;
};

/// Zone-wise piecewise-constant heat disturbance, redrawn every block_s from
/// N(0, sigma_W^2), plus an optional deterministic per-zone mean.
struct NoiseModel {
  double sigma_W = 50.0;
  double block_s = 900.0;
  std::uint64_t seed = 0;
  Eigen::VectorXd mean_W;

  static NoiseModel none() {
    NoiseModel m;
    m.sigma_W = 0.0;
    return m;
  }
};

/// Extra heat hook (e.g. open doors). Adds watts into heat_W per zone.
using DisturbanceFn = std::function<void(double t, const Eigen::VectorXd &temps,
                                         double outdoor, Eigen::VectorXd &heat_W)>;

struct SimulationOptions {
  double horizon = 0.0;
  double dt = 60.0;
  NoiseModel noise = NoiseModel::none();
  DisturbanceFn disturbance;
  double max_gap = 3.0 * 3600.0;
};

/// Sample k describes the interval [time[k], time[k] + dt): temperatures at
/// its start and the compressor flag applied over it.
struct SimulationTrace {
  double dt = 60.0;
  std::vector<std::string> zone_ids;
  std::vector<double> time;
  Eigen::MatrixXd temperatures;  // samples x zones
  std::vector<std::uint8_t> compressor_on;
  std::vector<std::optional<double>> set_temp;
  std::vector<double> outdoor;
  PlantState final_state;

  [[nodiscard]] std::size_t size() const { return time.size(); }
  [[nodiscard]] Eigen::Index zone_column(std::string_view zone) const;
  [[nodiscard]] Eigen::VectorXd zone(std::string_view zone) const {
    return temperatures.col(zone_column(zone));
  }
};

/// Forward-Euler increment. heat_W already contains AC and noise terms.
template <typename TempDerived, typename BoundDerived, typename HeatDerived>
Eigen::VectorXd euler_update(const RCNetwork &network,
                             const Eigen::MatrixBase<TempDerived> &temps,
                             const Eigen::MatrixBase<BoundDerived> &boundary,
                             const Eigen::MatrixBase<HeatDerived> &heat_W,
                             double dt) {
  const Eigen::VectorXd flux = network.zone_coupling() * temps +
                               network.boundary_coupling() * boundary + heat_W;
  return temps + dt * (flux.array() / network.capacitance().array()).matrix();
}

/// One checked Euler step of the network.
ThermalState step(const RCNetwork &network, const ThermalState &state,
                  const Eigen::VectorXd &boundary_temps, bool compressor_on,
                  const ACUnit &ac, const Eigen::VectorXd &noise_W, double dt);

/// Hysteresis thermostat with anti-short-cycle lockouts.
CompressorState thermostat_transition(const CompressorState &prev, double sensed_T,
                                      double set_T, const HysteresisConfig &cfg,
                                      const ACUnit &ac, double now);

/// Incremental closed-loop plant: thermostat decision then one Euler step.
class Plant {
 public:
  Plant(const RCNetwork &network, const ACUnit &ac, const HysteresisConfig &cfg,
        PlantState init, double dt);

  /// Decides the compressor for [now, now+dt) and integrates; returns the flag.
  bool advance(std::optional<double> set_temp, double outdoor,
               const Eigen::VectorXd &heat_W);
  /// Same, with the compressor forced.
  void advance_forced(bool on, double outdoor, const Eigen::VectorXd &heat_W);

  [[nodiscard]] const PlantState &state() const { return state_; }
  [[nodiscard]] double sensed() const {
    return state_.thermal.temperatures(sensing_index_);
  }

 private:
  void integrate(bool on, double outdoor, const Eigen::VectorXd &heat_W);

  const RCNetwork *network_;
  const ACUnit *ac_;
  const HysteresisConfig *cfg_;
  PlantState state_;
  double dt_;
  Eigen::Index sensing_index_;
  Eigen::VectorXd boundary_;
};

/// Piecewise-constant block noise generator shared by the simulators.
class BlockNoise {
 public:
  BlockNoise(const NoiseModel &model, Eigen::Index zones, double t0);
  const Eigen::VectorXd &at(double t);

 private:
  NoiseModel model_;
  double t0_;
  long long block_ = -1;
  Eigen::VectorXd current_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Closed-loop simulation under a set-temperature schedule.
SimulationTrace simulate(const RCNetwork &network, const PlantState &init,
                         const TimeSeries &outdoor, const SetpointSchedule &schedule,
                         const ACUnit &ac, const HysteresisConfig &cfg,
                         const SimulationOptions &options);

/// Open-loop simulation with the compressor flag given per sample; flags
/// shorter than the horizon hold their last value.
SimulationTrace simulate_open_loop(const RCNetwork &network, const ThermalState &init,
                                   const TimeSeries &outdoor,
                                   std::span<const std::uint8_t> flags,
                                   const ACUnit &ac, const SimulationOptions &options);

/// Uniform initial state at one temperature.
ThermalState uniform_state(const RCNetwork &network, double time, double temp);

}  // namespace smartstat::thermal
