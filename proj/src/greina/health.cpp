#include "smartstat/greina/health.hpp"

#include "smartstat/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace smartstat::greina {

namespace {

constexpr double kDay = 86400.0;

double day_start(double t) { return std::floor(t / kDay) * kDay; }

std::string sensing_zone(const fit::FitResult &model) {
  return fit::ModelTemplate::for_preset(model.preset).hysteresis.sensing_zone;
}

std::optional<double> sensed(const fit::ObservationRecord &r, const std::string &zone) {
  auto it = r.sensed_temps.find(zone);
  if (it == r.sensed_temps.end()) return std::nullopt;
  return it->second;
}

// Q_cool alone, plus nuisance initial temperatures and the open-door path,
// warm-started at the model's value; the rest of the model is frozen.
std::optional<double> refit_cooling(const fit::ObservationSeries &day,
                                    const fit::FitResult &model, const thermal::ACUnit &ac,
                                    const FeatureOptions &options) {
  auto tmpl = fit::ModelTemplate::for_preset(model.preset);
  tmpl.ac = ac;
  for (const auto &[k, v] : model.params) {
    if (!k.starts_with("T0_") && k != fit::kCoolingParam && k != fit::kDoorParam) {
      tmpl.fixed[k] = v;
    }
  }
  const auto full =
      fit::default_param_spec(tmpl, day, {.fit_cooling = true, .fit_door = true});
  fit::ParamSpec spec;
  for (const auto &p : full.params) {
    if (p.name == fit::kCoolingParam || p.name == fit::kDoorParam ||
        p.name.starts_with("T0_")) {
      spec.params.push_back(p);
    }
  }
  if (auto it = model.params.find(fit::kCoolingParam); it != model.params.end()) {
    for (auto &p : spec.params) {
      if (p.name == fit::kCoolingParam) p.initial = std::clamp(it->second, p.lower, p.upper);
    }
  }
  fit::FitOptions fo;
  fo.multi_start = 1;
  fo.max_iter = options.max_iter;
  try {
    const auto r = fit::fit_params(tmpl, day, spec, fo);
    return r.params.at(fit::kCoolingParam);
  } catch (const Error &e) {
    if (e.code() == ErrorCode::IllConditioned || e.code() == ErrorCode::CoverageError) {
      return std::nullopt;
    }
    throw;
  }
}

void ew_update(FeatureStat &s, double x, double decay, bool first) {
  if (first) {
    s = {x, 0.0};
    return;
  }
  const double d = x - s.mean;
  s.mean += decay * d;
  s.var = (1.0 - decay) * (s.var + decay * d * d);
}

FeatureStat blend(const FeatureStat &prior, const FeatureStat &local, double w) {
  return {w * local.mean + (1.0 - w) * prior.mean, w * local.var + (1.0 - w) * prior.var};
}

template <typename F>
void for_each_stat(Baseline &b, F f) {
  f(b.duty_cycle, &HealthFeatures::duty_cycle);
  f(b.cooling_rate, &HealthFeatures::cooling_rate);
  f(b.attainment_gap, &HealthFeatures::attainment_gap);
  f(b.pulldown_minutes, &HealthFeatures::pulldown_minutes);
  f(b.qhat, &HealthFeatures::qhat);
}

double session_energy(std::span<const std::uint8_t> on, const fit::ObservationSeries &obs,
                      const thermal::ACUnit &ac, double dt) {
  double joules = 0.0;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    if (on[k]) joules += ac.rated_electrical_power * dt;
    if (obs[k].set_temp) joules += ac.fan_power * dt;
  }
  return joules / 3.6e6;
}

}  // namespace

HealthFeatures daily_features(const fit::ObservationSeries &day, const fit::FitResult &model,
                              const thermal::ACUnit &ac, const FeatureOptions &options) {
  HealthFeatures f;
  if (day.empty()) return f;
  f.date = day_start(day.front().timestamp);
  if (day.size() < 2 || !fit::has_compressor_flags(day)) return f;
  const double dt = fit::grid_step(day);
  const auto zone = sensing_zone(model);
  const auto hyst = fit::ModelTemplate::for_preset(model.preset).hysteresis;

  double usable = 0.0;
  double on = 0.0;
  double rate_sum = 0.0;
  double gap_sum = 0.0;
  int rate_n = 0;
  for (std::size_t k = 0; k < day.size(); ++k) {
    const auto &r = day[k];
    if (r.door_open || !r.set_temp) continue;
    usable += dt;
    if (!*r.compressor_on) continue;
    on += dt;
    const auto t = sensed(r, zone);
    if (k + 1 < day.size() && t && !day[k + 1].door_open) {
      if (const auto next = sensed(day[k + 1], zone)) {
        rate_sum += -(*next - *t) / dt * 3600.0;
        gap_sum += r.outdoor_temp - *t;
        ++rate_n;
      }
    }
  }
  if (usable < options.min_coverage) return f;
  f.duty_cycle = on / usable;
  if (rate_n > 0) {
    f.cooling_rate = (rate_sum / rate_n) / std::max(gap_sum / rate_n, 1.0);
  }

  // Sessions are maximal runs of set temperature inside the day.
  double attain_sum = 0.0;
  int attain_n = 0;
  double pull_sum = 0.0;
  int pull_n = 0;
  std::size_t k = 0;
  while (k < day.size()) {
    if (!day[k].set_temp) {
      ++k;
      continue;
    }
    const std::size_t a = k;
    while (k < day.size() && day[k].set_temp) ++k;
    const std::size_t b = k;
    const double end = day[b - 1].timestamp + dt;

    double s = 0.0;
    int n = 0;
    for (std::size_t j = a; j < b; ++j) {
      if (day[j].timestamp < end - 3600.0 || day[j].door_open) continue;
      if (const auto t = sensed(day[j], zone)) {
        s += *t - *day[j].set_temp;
        ++n;
      }
    }
    if (n > 0) {
      attain_sum += s / n;
      ++attain_n;
    }

    // A session already running at midnight has no start in this day.
    if (a > 0) {
      double minutes = (end - day[a].timestamp) / 60.0;
      for (std::size_t j = a; j < b; ++j) {
        const auto t = sensed(day[j], zone);
        if (t && *t <= *day[j].set_temp + hyst.delta_high) {
          minutes = (day[j].timestamp - day[a].timestamp) / 60.0;
          break;
        }
      }
      pull_sum += minutes;
      ++pull_n;
    }
  }
  if (attain_n > 0) f.attainment_gap = attain_sum / attain_n;
  if (pull_n > 0) f.pulldown_minutes = pull_sum / pull_n;

  const auto q = refit_cooling(day, model, ac, options);
  if (!q) return f;
  f.qhat = *q;
  f.valid = true;
  return f;
}

Baseline update_baseline(const Baseline &b, const HealthFeatures &f, double decay) {
  if (!(decay > 0.0 && decay <= 1.0)) {
    throw Error(ErrorCode::InvalidParameter, "decay must be in (0, 1]");
  }
  if (!f.valid) return b;
  Baseline out = b;
  const bool first = b.n_days <= 0.0 && !b.from_prior;
  out.n_days = b.n_days * (1.0 - decay) + 1.0;
  // Early days weigh 1/n so the first day does not dominate the mean.
  const double w = std::max(decay, 1.0 / out.n_days);
  for_each_stat(out, [&](FeatureStat &s, double HealthFeatures::*m) {
    ew_update(s, f.*m, w, first);
  });
  return out;
}

double health_index(const HealthFeatures &f, const Baseline &b, double min_relative_std) {
  if (b.n_days < 1.0 && !b.from_prior) {
    throw Error(ErrorCode::ColdStart, "baseline has fewer than one day and no prior");
  }
  const double floor = std::pow(min_relative_std * b.qhat.mean, 2);
  return (b.qhat.mean - f.qhat) / std::sqrt(std::max({b.qhat.var, kVarianceFloor, floor}));
}

std::string_view to_string(DetectorState s) {
  return s == DetectorState::alarmed ? "alarmed" : "healthy";
}

DetectorUpdate detector_update(const DriftDetector &d, double z, double date) {
  if (d.last_date && date <= *d.last_date) {
    throw Error(ErrorCode::OutOfOrderUpdate, "detector updates must be chronological");
  }
  if (!std::isfinite(z)) throw Error(ErrorCode::InvalidParameter, "score must be finite");
  DetectorUpdate out{d, std::nullopt};
  auto &n = out.detector;
  n.cusum = std::max(0.0, d.cusum + z - d.k);
  n.last_date = date;
  if (n.cusum >= n.h && n.state == DetectorState::healthy) {
    n.state = DetectorState::alarmed;
    n.alarm_date = date;
    out.alert = Alert{date, n.cusum, z};
  }
  return out;
}

DriftDetector reset(const DriftDetector &d) {
  DriftDetector n = d;
  n.cusum = 0.0;
  n.state = DetectorState::healthy;
  n.alarm_date.reset();
  return n;
}

FleetPrior pool_prior(std::span<const Baseline> healthy, double n0) {
  if (healthy.empty()) throw Error(ErrorCode::EmptyInput, "no healthy units to pool");
  if (!(n0 > 0.0)) throw Error(ErrorCode::InvalidParameter, "n0 must be positive");
  FleetPrior p;
  p.units = static_cast<int>(healthy.size());
  p.n0 = n0;
  const double n = static_cast<double>(healthy.size());
  auto pool = [&](FeatureStat Baseline::*field) {
    double mean = 0.0;
    double within = 0.0;
    for (const auto &b : healthy) {
      mean += (b.*field).mean;
      within += (b.*field).var;
    }
    mean /= n;
    double spread = 0.0;
    for (const auto &b : healthy) spread += std::pow((b.*field).mean - mean, 2);
    return FeatureStat{mean, within / n + spread / n};
  };
  p.pooled.duty_cycle = pool(&Baseline::duty_cycle);
  p.pooled.cooling_rate = pool(&Baseline::cooling_rate);
  p.pooled.attainment_gap = pool(&Baseline::attainment_gap);
  p.pooled.pulldown_minutes = pool(&Baseline::pulldown_minutes);
  p.pooled.qhat = pool(&Baseline::qhat);
  double days = 0.0;
  for (const auto &b : healthy) days += b.n_days;
  p.pooled.n_days = days / n;
  return p;
}

Baseline blend_prior(const FleetPrior &prior, const Baseline &local) {
  if (prior.units < 1) throw Error(ErrorCode::EmptyInput, "empty fleet prior");
  if (!(prior.n0 > 0.0)) throw Error(ErrorCode::InvalidParameter, "n0 must be positive");
  const double w = local.n_days / (local.n_days + prior.n0);
  Baseline out;
  out.duty_cycle = blend(prior.pooled.duty_cycle, local.duty_cycle, w);
  out.cooling_rate = blend(prior.pooled.cooling_rate, local.cooling_rate, w);
  out.attainment_gap = blend(prior.pooled.attainment_gap, local.attainment_gap, w);
  out.pulldown_minutes = blend(prior.pooled.pulldown_minutes, local.pulldown_minutes, w);
  out.qhat = blend(prior.pooled.qhat, local.qhat, w);
  out.n_days = local.n_days;
  out.from_prior = true;
  return out;
}

UnitMonitor make_monitor(const MonitorConfig &cfg) {
  UnitMonitor m;
  m.detector.k = cfg.k;
  m.detector.h = cfg.h;
  return m;
}

UnitMonitor::Step UnitMonitor::observe(const HealthFeatures &f, const MonitorConfig &cfg,
                                       const FleetPrior *prior) {
  Step step;
  if (!f.valid) return step;
  if (!prior && valid_days < cfg.warmup_days) {
    local = update_baseline(local, f, cfg.decay);
    ++valid_days;
    return step;
  }
  const Baseline ref = prior ? blend_prior(*prior, local) : local;
  const double z = health_index(f, ref, cfg.min_relative_std);
  auto [next, alert] = detector_update(detector, z, f.date);
  detector = next;
  step.z = z;
  step.alert = alert;
  pending.push_back(f);
  while (static_cast<int>(pending.size()) > cfg.guard_days) {
    if (detector.state == DetectorState::healthy) {
      local = update_baseline(local, pending.front(), cfg.decay);
      ++valid_days;
    }
    pending.pop_front();
  }
  return step;
}

CounterfactualReport counterfactual_report(const fit::ObservationSeries &observations,
                                           const fit::FitResult &healthy_model,
                                           const thermal::ACUnit &ac,
                                           std::span<const HealthFeatures> faulty_days,
                                           const DriftDetector &detector) {
  if (detector.state != DetectorState::alarmed || !detector.alarm_date) {
    throw Error(ErrorCode::NoAlarmWindow, "detector is not alarmed");
  }
  const auto window =
      fit::slice(observations, *detector.alarm_date, std::numeric_limits<double>::infinity());
  if (window.size() < 2) {
    throw Error(ErrorCode::NoAlarmWindow, "no records after the alarm date");
  }
  const double dt = fit::grid_step(window);

  std::vector<std::uint8_t> realized(window.size(), 0);
  for (std::size_t k = 0; k < window.size(); ++k) {
    const auto &r = window[k];
    if (r.compressor_on) {
      realized[k] = *r.compressor_on ? 1 : 0;
    } else if (r.electrical_power) {
      realized[k] = *r.electrical_power > 0.5 * ac.rated_electrical_power ? 1 : 0;
    } else {
      throw Error(ErrorCode::CoverageError, "records carry neither compressor flags nor power");
    }
  }

  auto tmpl = fit::ModelTemplate::for_preset(healthy_model.preset);
  tmpl.ac = ac;
  fit::ParamMap params;
  for (const auto &[k, v] : healthy_model.params) {
    if (!k.starts_with("T0_")) params[k] = v;
  }
  const auto twin = fit::replay_thermostat(params, tmpl, window);
  const auto zone = tmpl.hysteresis.sensing_zone;
  const auto col = static_cast<Eigen::Index>(
      std::find(twin.zones.begin(), twin.zones.end(), zone) - twin.zones.begin());

  CounterfactualReport rep;
  rep.window_start = window.front().timestamp;
  rep.window_end = window.back().timestamp + dt;
  rep.realized_energy = session_energy(realized, window, ac, dt);
  rep.twin_energy = session_energy(twin.compressor_on, window, ac, dt);
  rep.excess_energy = rep.realized_energy - rep.twin_energy;

  double s = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < window.size(); ++k) {
    const auto &r = window[k];
    if (!r.set_temp || r.door_open) continue;
    if (const auto t = sensed(r, zone)) {
      s += *t - twin.temperatures(static_cast<Eigen::Index>(k), col);
      ++n;
    }
  }
  if (n > 0) rep.mean_temp_shortfall = s / n;

  double healthy_q = ac.rated_cooling_power;
  if (auto it = healthy_model.params.find(fit::kCoolingParam); it != healthy_model.params.end()) {
    healthy_q = it->second;
  }
  double q = 0.0;
  int qn = 0;
  for (const auto &f : faulty_days) {
    if (f.valid && f.date + kDay > rep.window_start && f.date < rep.window_end) {
      q += f.qhat;
      ++qn;
    }
  }
  if (qn > 0) rep.capacity_ratio = (q / qn) / healthy_q;
  return rep;
}

}  // namespace smartstat::greina
