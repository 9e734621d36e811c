#include "smartstat/service/analysis.hpp"

#include "smartstat/error.hpp"
#include "smartstat/io/resample.hpp"

#include <algorithm>
#include <cmath>

namespace smartstat::service {

fit::ObservationSeries on_grid(const fit::ObservationSeries &window) {
  try {
    fit::grid_step(window);
    return window;
  } catch (const Error &e) {
    if (e.code() != ErrorCode::GridError) throw;
    return io::resample(window, 60.0);
  }
}

pacman::CycleSegmentation segmentation(const fit::FitResult &model, const thermal::ACUnit &ac,
                                       const fit::ObservationSeries &series) {
  if (model.fitted() && model.preset == thermal::Preset::single_zone) {
    return pacman::decode_cycles(series, model, {}, ac);
  }
  if (!fit::has_compressor_flags(series)) {
    throw Error(ErrorCode::ModelMismatch,
                "records carry no compressor flags and the unit has no single-zone model to "
                "decode them");
  }
  pacman::CycleSegmentation seg;
  seg.dt = fit::grid_step(series);
  for (const auto &r : series) {
    seg.flags.push_back(*r.compressor_on ? 1 : 0);
    seg.session.push_back(r.set_temp ? 1 : 0);
  }
  return seg;
}

pacman::EnergyReport estimate_window(const fit::FitResult &model, const thermal::ACUnit &ac,
                                     const fit::ObservationSeries &window) {
  if (window.size() < 2) throw Error(ErrorCode::CoverageError, "need at least two records");
  const auto series = on_grid(window);
  auto report = pacman::estimate_energy(segmentation(model, ac, series), ac);
  const bool metered = std::all_of(series.begin(), series.end(),
                                   [](const auto &r) { return r.electrical_power.has_value(); });
  if (metered) {
    const double dt = fit::grid_step(series);
    double joules = 0.0;
    for (const auto &r : series) joules += *r.electrical_power * dt;
    if (joules > 0.0) report.accuracy_pct = pacman::accuracy(report.energy, joules / 3.6e6);
  }
  return report;
}

fit::ObservationSeries with_flags(const fit::FitResult &model, const thermal::ACUnit &ac,
                                  fit::ObservationSeries records) {
  records = on_grid(records);
  if (!fit::has_compressor_flags(records) && model.preset == thermal::Preset::single_zone) {
    const auto seg = pacman::decode_cycles(records, model, {}, ac);
    for (std::size_t k = 0; k < records.size(); ++k) records[k].compressor_on = seg.flags[k] != 0;
  }
  return records;
}

greina::HealthFeatures score_day(const fit::FitResult &model, const thermal::ACUnit &ac,
                                 const fit::ObservationSeries &records, double day) {
  greina::HealthFeatures f;
  if (records.size() >= 2) {
    try {
      f = greina::daily_features(with_flags(model, ac, records), model, ac);
    } catch (const Error &) {
      f = greina::HealthFeatures{};
    }
  }
  f.date = day;
  return f;
}

FaultScan scan_faults(const fit::ObservationSeries &observations, const fit::FitResult &model,
                      const thermal::ACUnit &ac, const greina::MonitorConfig &cfg) {
  fit::validate_series(observations);
  if (!model.fitted()) throw Error(ErrorCode::StaleModel, "unit has no fitted model");
  FaultScan scan;
  scan.monitor = greina::make_monitor(cfg);
  const double step = observations.size() > 1
                          ? observations[1].timestamp - observations[0].timestamp
                          : 60.0;
  const double last = observations.back().timestamp;
  for (double day = std::floor(observations.front().timestamp / kDaySeconds) * kDaySeconds;
       day + kDaySeconds <= last + step; day += kDaySeconds) {
    const auto f = score_day(model, ac, fit::slice(observations, day, day + kDaySeconds), day);
    const auto s = scan.monitor.observe(f, cfg);
    scan.days.push_back(f);
    scan.z.push_back(s.z);
    if (s.alert) scan.alerts.push_back(*s.alert);
  }

  const auto &d = scan.monitor.detector;
  if (d.state == greina::DetectorState::alarmed) {
    try {
      const auto window = fit::slice(observations, *d.alarm_date, last + 1.0);
      std::vector<greina::HealthFeatures> faulty;
      std::copy_if(scan.days.begin(), scan.days.end(), std::back_inserter(faulty),
                   [&](const auto &f) { return f.date >= *d.alarm_date; });
      scan.counterfactual =
          greina::counterfactual_report(with_flags(model, ac, window), model, ac, faulty, d);
    } catch (const Error &e) {
      scan.counterfactual_error = e.what();
    }
  }
  return scan;
}

}  // namespace smartstat::service
