#pragma once

// Capacity-loss monitoring: daily health features, exponentially weighted
// per-unit baselines with a fleet prior, and a one-sided CUSUM on the
// refitted cooling power.

#include "smartstat/fit/greybox.hpp"
#include "smartstat/thermal/simulate.hpp"

#include <deque>
#include <optional>
#include <span>
#include <vector>

namespace smartstat::greina {

struct HealthFeatures {
  double date = 0.0;              // UTC midnight of the day
  double duty_cycle = 0.0;        // ON share of usable session time
  double cooling_rate = 0.0;      // °C/h while ON per °C of outdoor-room gap
  double attainment_gap = 0.0;    // °C, last hour of each session
  double pulldown_minutes = 0.0;  // session start to first band entry
  double qhat = 0.0;              // W, refitted effective cooling power
  bool valid = false;

  friend bool operator==(const HealthFeatures &, const HealthFeatures &) = default;
};

struct FeatureOptions {
  double min_coverage = 2.0 * 3600.0;  // door-closed, AC-active seconds
  int max_iter = 60;
};

/// Features of one day of records; qhat refits Q_cool alone with every
/// other model parameter frozen. Days with too little usable coverage, no
/// compressor flags, or an unidentifiable refit come back with valid=false.
HealthFeatures daily_features(const fit::ObservationSeries &day, const fit::FitResult &model,
                              const thermal::ACUnit &ac, const FeatureOptions &options = {});

struct FeatureStat {
  double mean = 0.0;
  double var = 0.0;

  friend bool operator==(const FeatureStat &, const FeatureStat &) = default;
};

struct Baseline {
  FeatureStat duty_cycle;
  FeatureStat cooling_rate;
  FeatureStat attainment_gap;
  FeatureStat pulldown_minutes;
  FeatureStat qhat;
  double n_days = 0.0;       // effective sample count
  bool from_prior = false;   // blended with a fleet prior

  friend bool operator==(const Baseline &, const Baseline &) = default;
};

inline constexpr double kDefaultDecay = 1.0 / 14.0;
inline constexpr double kVarianceFloor = 1e-6;

/// EW mean/variance update with weight max(decay, 1/n_days), so a young
/// baseline is a plain running mean; the first valid day sets the means.
Baseline update_baseline(const Baseline &b, const HealthFeatures &f,
                         double decay = kDefaultDecay);

/// z = (mean_qhat - qhat) / std_qhat; positive when capacity shrinks.
/// std_qhat is floored at min_relative_std * mean_qhat when that is larger
/// than the absolute variance floor.
double health_index(const HealthFeatures &f, const Baseline &b, double min_relative_std = 0.0);

enum class DetectorState { healthy, alarmed };
std::string_view to_string(DetectorState s);

struct DriftDetector {
  double cusum = 0.0;
  double k = 0.5;
  double h = 5.0;
  DetectorState state = DetectorState::healthy;
  std::optional<double> alarm_date;
  std::optional<double> last_date;

  friend bool operator==(const DriftDetector &, const DriftDetector &) = default;
};

struct Alert {
  double date = 0.0;
  double cusum = 0.0;
  double z = 0.0;

  friend bool operator==(const Alert &, const Alert &) = default;
};

struct DetectorUpdate {
  DriftDetector detector;
  std::optional<Alert> alert;
};

/// cusum <- max(0, cusum + z - k); the first crossing of h alarms and latches.
DetectorUpdate detector_update(const DriftDetector &d, double z, double date);

/// Clears the alarm after maintenance; keeps k, h and the date cursor.
DriftDetector reset(const DriftDetector &d);

struct FleetPrior {
  Baseline pooled;
  int units = 0;
  double n0 = 14.0;

  friend bool operator==(const FleetPrior &, const FleetPrior &) = default;
};

/// Pools healthy-unit baselines: mean of means, and within-unit variance
/// plus the spread of the unit means.
FleetPrior pool_prior(std::span<const Baseline> healthy, double n0 = 14.0);

/// Shrinks the local baseline toward the prior with w = n / (n + n0).
Baseline blend_prior(const FleetPrior &prior, const Baseline &local);

struct MonitorConfig {
  double k = 0.5;
  double h = 5.0;
  double decay = kDefaultDecay;
  double n0 = 14.0;
  int warmup_days = 7;  // valid days before z without a prior
  int guard_days = 7;   // scored days wait this long before joining the baseline
  double min_relative_std = 0.01;  // qhat resolution below which drift is noise
};

/// Day-by-day pipeline state of one unit. Once scoring has started, a day
/// joins the local baseline only after guard_days more valid days and only
/// while the detector is healthy, so a slow drift cannot teach itself in.
struct UnitMonitor {
  Baseline local;
  DriftDetector detector;
  int valid_days = 0;
  std::deque<HealthFeatures> pending;

  struct Step {
    std::optional<double> z;
    std::optional<Alert> alert;
  };
  Step observe(const HealthFeatures &f, const MonitorConfig &cfg,
               const FleetPrior *prior = nullptr);
};

UnitMonitor make_monitor(const MonitorConfig &cfg);

struct CounterfactualReport {
  double excess_energy = 0.0;         // kWh, realized minus healthy twin
  double mean_temp_shortfall = 0.0;   // °C over session samples
  double realized_energy = 0.0;
  double twin_energy = 0.0;
  double window_start = 0.0;
  double window_end = 0.0;
  std::optional<double> capacity_ratio;  // mean faulty qhat / healthy Q_cool
};

/// Compares the alarmed window (records from the alarm date on) against a
/// simulated healthy twin driven by the same weather and set temperatures.
/// Throws NoAlarmWindow when the detector is not alarmed within the records.
CounterfactualReport counterfactual_report(const fit::ObservationSeries &observations,
                                           const fit::FitResult &healthy_model,
                                           const thermal::ACUnit &ac,
                                           std::span<const HealthFeatures> faulty_days,
                                           const DriftDetector &detector);

}  // namespace smartstat::greina
