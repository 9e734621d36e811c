#pragma once

#include "smartstat/fit/observations.hpp"
#include "smartstat/thermal/network.hpp"
#include "smartstat/thermal/simulate.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace smartstat::fit {

using ParamMap = std::map<std::string, double>;

// Parameter naming: C_<zone>, R_<a>-<b>, Q_cool (effective cooling W),
// Q_gain (internal heat W split evenly over occupied zones), T0_<zone>
// (initial temperature of an unsensed zone), G_door (W/°C between the
// sensing zone and outdoors while the door is open).
inline constexpr const char *kCoolingParam = "Q_cool";
inline constexpr const char *kGainParam = "Q_gain";
inline constexpr const char *kDoorParam = "G_door";
std::string capacitance_param(std::string_view zone);
std::string resistance_param(std::string_view a, std::string_view b);
std::string initial_temp_param(std::string_view zone);

enum class Transform { linear, log };

struct ParamBound {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
  double initial = 0.0;
  Transform transform = Transform::log;
};

struct ParamSpec {
  std::vector<ParamBound> params;

  void validate() const;
  [[nodiscard]] const ParamBound *find(std::string_view name) const;
};

/// Structure shared by every candidate parameter vector: the preset, fixed
/// parameters, and the thermostat used to emulate the compressor when the
/// observations carry no flags.
struct ModelTemplate {
  thermal::Preset preset = thermal::Preset::three_region;
  std::map<std::string, double> ac_fractions;
  ParamMap fixed;
  thermal::ACUnit ac;
  thermal::HysteresisConfig hysteresis;

  static ModelTemplate for_preset(thermal::Preset preset);
};

/// A concrete model: network plus the heat terms not stored in it.
struct RoomModel {
  thermal::RCNetwork network;
  thermal::ACUnit ac;             // rated_cooling_power = effective Q_cool
  Eigen::VectorXd internal_gain;  // W per zone
};

/// Merges template.fixed with params (params win) and builds the model.
RoomModel assemble_model(const ModelTemplate &tmpl, const ParamMap &params);

struct SpecOptions {
  bool fit_cooling = false;
  bool fit_gain = false;
  bool fit_door = false;  // only added when some record has the door open
};

/// Default bounds: R in [1e-4, 1], C in [1e3, 1e7], Q_cool in [500, 1e4],
/// Q_gain in [0, 5000], G_door in [0, 500], and data-driven T0 ranges for
/// unsensed zones.
ParamSpec default_param_spec(const ModelTemplate &tmpl,
                             const ObservationSeries &observations,
                             const SpecOptions &options = {});

struct FitResult {
  thermal::Preset preset = thermal::Preset::three_region;
  ParamMap params;
  double rmse = 0.0;
  double window_start = 0.0;
  double window_end = 0.0;
  int iterations = 0;
  bool converged = false;
  double created_at = 0.0;

  [[nodiscard]] bool fitted() const { return !params.empty(); }
  friend bool operator==(const FitResult &, const FitResult &) = default;
};

inline constexpr double kModelMaxAge = 14.0 * 86400.0;

/// A fitted model expires kModelMaxAge after its creation.
bool is_fresh(const FitResult &fit, double now, double max_age = kModelMaxAge);

struct FitOptions {
  int multi_start = 8;
  int max_iter = 100;
  double tol = 1e-8;
  std::uint64_t seed = 1;
  double min_span = 6.0 * 3600.0;
  double min_drift = 2.0;  // °C of passive drift that counts as excitation
};

/// Throws IllConditioned when the window is shorter than min_span or shows
/// neither a compressor cycle nor min_drift of temperature change.
void check_excitation(const ObservationSeries &observations, const FitOptions &options);

/// Mean squared simulation error (°C²) over sensed zones of door-closed
/// records, simulating from the first observed state.
double objective(const ParamMap &params, const ModelTemplate &tmpl,
                 const ObservationSeries &observations);

/// Simulated zone temperatures on the observation grid (records x zones).
Eigen::MatrixXd simulate_observed(const ParamMap &params, const ModelTemplate &tmpl,
                                  const ObservationSeries &observations);

struct Replay {
  std::vector<std::string> zones;
  Eigen::MatrixXd temperatures;              // records x zones
  std::vector<std::uint8_t> compressor_on;  // emulated, per record
};

/// Closed-loop replay of the recorded weather and set temperatures under the
/// template thermostat; recorded compressor flags are ignored.
Replay replay_thermostat(const ParamMap &params, const ModelTemplate &tmpl,
                         const ObservationSeries &observations);

/// Best-of-multi-start Levenberg-Marquardt on the transformed parameters.
/// Starts: the spec's initial guess, then Latin-hypercube blocks of eight.
FitResult fit_params(const ModelTemplate &tmpl, const ObservationSeries &observations,
                     const ParamSpec &spec, const FitOptions &options = {});

struct RefitOutcome {
  FitResult active;
  bool accepted = false;
  bool flagged = false;  // window unusable; previous kept
  double incumbent_rmse = 0.0;
  double candidate_rmse = 0.0;
  std::string reason;
};

/// Warm-started fit on a sliding window; publishes the candidate only when
/// its window rmse does not exceed the incumbent's on the same window.
RefitOutcome refit(const FitResult &previous, const ModelTemplate &tmpl,
                   const ObservationSeries &window, const ParamSpec &spec,
                   const FitOptions &options = {});

struct Residual {
  double timestamp = 0.0;
  std::string zone;
  double value = 0.0;  // observed - simulated
};

std::vector<Residual> residual_series(const ParamMap &params, const ModelTemplate &tmpl,
                                      const ObservationSeries &observations);

}  // namespace smartstat::fit
