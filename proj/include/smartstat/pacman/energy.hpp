#pragma once

// Meter-free AC energy: compressor cycles decoded from room temperature,
// and per-set-temperature prediction from the tuned model.

#include "smartstat/fit/greybox.hpp"
#include "smartstat/thermal/simulate.hpp"
#include "smartstat/timeseries.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace smartstat::pacman {

struct CycleSegmentation {
  double dt = 60.0;
  std::vector<std::uint8_t> flags;    // decoded compressor state per sample
  std::vector<std::uint8_t> session;  // set temperature active per sample

  [[nodiscard]] int cycles() const;  // OFF->ON edges
  [[nodiscard]] double on_seconds() const;
  [[nodiscard]] double session_seconds() const;
};

struct DecodeConfig {
  double switch_penalty = 4.0;
  std::optional<double> residual_sigma;  // default: estimated from idle records
  int min_run = 3;
  bool idle_forces_off = true;  // no set temperature means compressor off

  void validate() const;
};

/// Per-sample emission costs: column 0 OFF, column 1 ON.
struct DecodeProblem {
  double dt = 60.0;
  double sigma = 0.1;
  Eigen::MatrixX2d emission;
  std::vector<std::uint8_t> session;
};

/// Scaled squared one-step prediction residuals under OFF and ON dynamics.
/// The unobserved wall is propagated from the observed room and outdoor
/// temperatures. The last sample has no successor and costs nothing.
DecodeProblem emission_costs(const fit::ObservationSeries &observations,
                             const fit::FitResult &params, const DecodeConfig &cfg,
                             const thermal::ACUnit &ac = {});

/// Total cost of a flag sequence: emissions plus switch_penalty per change.
double sequence_cost(const Eigen::MatrixX2d &emission, const std::vector<std::uint8_t> &flags,
                     double switch_penalty);

/// Exact minimum-cost two-state sequence (ties prefer OFF).
std::vector<std::uint8_t> viterbi(const Eigen::MatrixX2d &emission, double switch_penalty);

/// Flips runs shorter than min_run into their neighbours, shortest first.
std::vector<std::uint8_t> merge_short_runs(std::vector<std::uint8_t> flags, int min_run);

CycleSegmentation decode_cycles(const fit::ObservationSeries &observations,
                                const fit::FitResult &params, const DecodeConfig &cfg = {},
                                const thermal::ACUnit &ac = {});

/// Fraction of samples where the two flag sequences agree.
double agreement(const std::vector<std::uint8_t> &a, const std::vector<std::uint8_t> &b);

enum class EnergyMethod { estimated, predicted };
std::string_view to_string(EnergyMethod m);

struct EnergyReport {
  double energy = 0.0;  // kWh
  int cycles = 0;
  double on_hours = 0.0;
  EnergyMethod method = EnergyMethod::estimated;
  std::optional<double> accuracy_pct;

  friend bool operator==(const EnergyReport &, const EnergyReport &) = default;
};

EnergyReport estimate_energy(const CycleSegmentation &seg, const thermal::ACUnit &ac);

/// 100 * (1 - |estimated - actual| / actual), floored at 0; ZeroActual when actual <= 0.
double accuracy(double estimated, double actual);

struct Prediction {
  double set_temp = 0.0;
  double energy = 0.0;  // kWh
  int cycles = 0;
  double on_hours = 0.0;
};

/// One deterministic closed-loop simulation per candidate set temperature.
std::vector<Prediction> predict_energy(const fit::RoomModel &model,
                                       const thermal::HysteresisConfig &cfg,
                                       const TimeSeries &forecast,
                                       const std::vector<double> &candidates, double duration,
                                       const thermal::PlantState &init, double dt = 60.0);

/// Same, from a fit; throws StaleModel when it has expired at `now`.
std::vector<Prediction> predict_energy(const fit::ModelTemplate &tmpl,
                                       const fit::FitResult &fit, double now,
                                       const TimeSeries &forecast,
                                       const std::vector<double> &candidates, double duration,
                                       const thermal::PlantState &init);

/// Energy of one average compressor cycle in a prediction (0 without cycles).
double cycle_energy(const Prediction &p, const thermal::ACUnit &ac);

}  // namespace smartstat::pacman
