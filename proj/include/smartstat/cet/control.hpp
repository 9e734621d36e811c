#pragma once

// Comfort-energy trade-off planning: one knob alpha scalarizes predicted
// energy against band-exceedance discomfort over a slotted horizon.

#include "smartstat/fit/greybox.hpp"
#include "smartstat/thermal/simulate.hpp"
#include "smartstat/timeseries.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace smartstat::cet {

struct CETConfig {
  double alpha = 0.5;
  double preferred_temp = 24.0;
  double band = 1.0;
  std::vector<double> candidates = default_candidates();
  double slot = 1800.0;
  double horizon = 8.0 * 3600.0;
  std::string comfort_zone = "mir";

  void validate() const;
  [[nodiscard]] std::size_t slot_count() const;
  static std::vector<double> default_candidates();  // 16..30 step 1

  friend bool operator==(const CETConfig &, const CETConfig &) = default;
};

/// Everything the planner needs to simulate one room.
struct PlanningModel {
  thermal::RCNetwork network;
  thermal::ACUnit ac;
  thermal::HysteresisConfig hysteresis;
  Eigen::VectorXd internal_gain;  // W per zone, empty = none
  double dt = 60.0;
};

PlanningModel planning_model(const fit::RoomModel &room, const thermal::HysteresisConfig &cfg);

/// Builds the model from a fit; throws StaleModel when unfitted or expired at `now`.
PlanningModel planning_model(const fit::ModelTemplate &tmpl, const fit::FitResult &fit,
                             double now);

/// Degree-hours of |T - preferred| beyond band in the comfort zone.
double discomfort_of(const thermal::SimulationTrace &trace, double preferred_temp, double band,
                     std::string_view comfort_zone);

/// kWh: compressor at rated electrical power plus the fan during sessions.
double energy_of(const thermal::SimulationTrace &trace, const thermal::ACUnit &ac);

struct Normalizers {
  double e_max = 1e-6;
  double d_max = 1e-6;
};
inline constexpr double kNormalizerFloor = 1e-6;

Normalizers normalizers(const PlanningModel &model, const TimeSeries &forecast,
                        const CETConfig &cfg, const thermal::PlantState &init);

enum class SearchMethod { exhaustive, beam };
std::string_view to_string(SearchMethod m);

struct PlanDiagnostics {
  double predicted_energy = 0.0;
  double predicted_discomfort = 0.0;
  double objective = 0.0;
  Normalizers norm;
  SearchMethod method = SearchMethod::exhaustive;
  std::size_t nodes_expanded = 0;
};

struct Plan {
  thermal::SetpointSchedule schedule;
  PlanDiagnostics diagnostics;
};

inline constexpr std::size_t kExhaustiveLimit = 4096;
inline constexpr std::size_t kBeamWidth = 32;

/// J = alpha * E / E_max + (1 - alpha) * D / D_max.
double scalarize(double energy, double discomfort, double alpha, const Normalizers &norm);

/// Deterministic closed-loop prediction of a schedule over the horizon.
thermal::SimulationTrace predict(const PlanningModel &model, const TimeSeries &forecast,
                                 const CETConfig &cfg, const thermal::PlantState &init,
                                 const thermal::SetpointSchedule &schedule);

struct PlanOptions {
  std::optional<SearchMethod> force;  // default: exhaustive when small enough
  std::size_t beam_width = kBeamWidth;
  std::optional<Normalizers> normalizers;  // default: computed for this instance
};

Plan plan(const PlanningModel &model, const TimeSeries &forecast, const CETConfig &cfg,
          const thermal::PlantState &init, const PlanOptions &options = {});

/// Schedule with one slot per set temperature, starting at t0.
thermal::SetpointSchedule slot_schedule(double t0, double slot, const std::vector<double> &sets);

struct LoopReport {
  double energy = 0.0;      // kWh
  double discomfort = 0.0;  // degree-hours
  std::vector<Plan> plans;
};

struct LoopResult {
  thermal::SimulationTrace trace;
  thermal::SetpointSchedule applied;
  LoopReport report;
};

/// Receding horizon: plan with `model` every replan_every seconds, apply the
/// head of each plan on `truth` with process noise, report realized values.
/// Plans never look past the end of the run and all reuse the normalizers
/// of the first plan.
LoopResult run_closed_loop(const PlanningModel &model, const PlanningModel &truth,
                           const TimeSeries &forecast, const CETConfig &cfg,
                           const thermal::PlantState &init, double duration,
                           double replan_every, const thermal::NoiseModel &noise);

/// Same plant and noise as run_closed_loop under a fixed set temperature.
LoopResult run_fixed_setpoint(const PlanningModel &truth, const TimeSeries &forecast,
                              const CETConfig &cfg, const thermal::PlantState &init,
                              double duration, double set_temp,
                              const thermal::NoiseModel &noise);

}  // namespace smartstat::cet
