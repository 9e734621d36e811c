#pragma once

// Observation-window analyses shared by the API handlers and the CLI:
// energy estimation and day-by-day health scoring of one unit.

#include "smartstat/fit/greybox.hpp"
#include "smartstat/greina/health.hpp"
#include "smartstat/pacman/energy.hpp"

#include <optional>
#include <string>
#include <vector>

namespace smartstat::service {

inline constexpr double kDaySeconds = 86400.0;

/// Records on a uniform grid, resampled to one minute when irregular.
fit::ObservationSeries on_grid(const fit::ObservationSeries &window);

/// Compressor segmentation: decoded from temperature for single-zone
/// models, read from recorded flags otherwise (ModelMismatch without them).
pacman::CycleSegmentation segmentation(const fit::FitResult &model, const thermal::ACUnit &ac,
                                       const fit::ObservationSeries &series);

/// Energy over a window; accuracy_pct is set when every record is metered.
pacman::EnergyReport estimate_window(const fit::FitResult &model, const thermal::ACUnit &ac,
                                     const fit::ObservationSeries &window);

/// Gridded records with compressor flags decoded in when they are missing
/// and the model allows it.
fit::ObservationSeries with_flags(const fit::FitResult &model, const thermal::ACUnit &ac,
                                  fit::ObservationSeries records);

/// Health features of the UTC day starting at `day`; a day that cannot be
/// scored comes back invalid with its date set.
greina::HealthFeatures score_day(const fit::FitResult &model, const thermal::ACUnit &ac,
                                 const fit::ObservationSeries &records, double day);

struct FaultScan {
  std::vector<greina::HealthFeatures> days;
  std::vector<std::optional<double>> z;
  std::vector<greina::Alert> alerts;
  greina::UnitMonitor monitor;
  std::optional<greina::CounterfactualReport> counterfactual;
  std::optional<std::string> counterfactual_error;
};

/// Scores every complete UTC day of `observations` through a fresh monitor
/// and, once alarmed, compares the alarmed window with a healthy twin.
FaultScan scan_faults(const fit::ObservationSeries &observations, const fit::FitResult &model,
                      const thermal::ACUnit &ac, const greina::MonitorConfig &cfg = {});

}  // namespace smartstat::service
