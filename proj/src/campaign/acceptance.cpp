#include "smartstat/campaign/acceptance.hpp"

#include "smartstat/campaign/benchmark.hpp"
#include "smartstat/campaign/checks.hpp"
#include "smartstat/campaign/fixtures.hpp"
#include "smartstat/campaign/fleet.hpp"
#include "smartstat/campaign/oracles.hpp"
#include "smartstat/cet/control.hpp"
#include "smartstat/io/json.hpp"
#include "smartstat/io/record_log.hpp"
#include "smartstat/pacman/energy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

namespace smartstat::campaign {
namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename... Args>
std::string fmt(const char *pattern, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

// 1. Single RC node relaxing toward a constant outdoor temperature.
CriterionResult analytic_rc() {
  const double c = 1e5, r = 0.01, rc = c * r, t0 = 20.0, ambient = 35.0;
  const thermal::RCNetwork net({{"room", c}}, {{"ambient", "outdoor"}},
                               {{"room", "ambient", r}}, {{"room", 1.0}});
  thermal::SimulationOptions opt;
  opt.dt = rc / 100.0;
  opt.horizon = rc;
  const auto start = Clock::now();
  const auto trace = thermal::simulate(
      net, thermal::PlantState{thermal::uniform_state(net, 0.0, t0), {}},
      TimeSeries::constant(0.0, rc, ambient), thermal::SetpointSchedule::constant(std::nullopt),
      thermal::ACUnit{}, thermal::HysteresisConfig{0.5, 0.5, "room"}, opt);
  const double secs = since(start);
  const double exact = ambient + (t0 - ambient) * std::exp(-1.0);
  const double got = trace.final_state.thermal.temperatures(0);
  const double rel = std::abs(got - exact) / std::abs(exact - ambient);
  return {1, "", rel <= 0.01 && secs < 1.0,
          fmt("relative error %.4f%% <= 1%% at t=RC, dt=RC/100, %.3f s < 1 s", 100.0 * rel, secs)};
}

// 2. Random days of closed-loop operation never break the thermostat rules.
CriterionResult hysteresis_days() {
  std::mt19937_64 rng(20231114);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t violations = 0;
  int cycles = 0;
  constexpr int kDays = 100;
  for (int day = 0; day < kDays; ++day) {
    const auto preset = day % 2 ? thermal::Preset::single_zone : thermal::Preset::three_region;
    const auto tmpl = benchmark_template(preset);
    const auto model = fit::assemble_model(
        tmpl, preset == thermal::Preset::single_zone ? single_zone_params() : three_region_params());
    WeatherSpec weather;
    weather.mean = 26.0 + 12.0 * u(rng);
    weather.amplitude = 2.0 + 6.0 * u(rng);
    weather.hour_sigma = 0.5;
    weather.seed = static_cast<std::uint64_t>(day);
    const double t0 = kEpoch + day * kDay;
    const double open = 6.0 + 6.0 * u(rng);
    const double close = std::min(24.0, open + 4.0 + 10.0 * u(rng));
    const double set = std::round(20.0 + 8.0 * u(rng));
    thermal::SimulationOptions opt;
    opt.horizon = kDay;
    opt.noise = thermal::NoiseModel{};
    opt.noise.seed = static_cast<std::uint64_t>(day);
    const auto trace = thermal::simulate(
        model.network,
        thermal::PlantState{thermal::uniform_state(model.network, t0, 24.0 + 8.0 * u(rng)), {}},
        synthetic_weather(t0, 25.0, weather), daily_sessions(t0, 1, open, close, set), model.ac,
        tmpl.hysteresis, opt);
    violations += checks::hysteresis_violations(trace, tmpl.hysteresis, model.ac).size();
    for (std::size_t k = 1; k < trace.size(); ++k) {
      cycles += trace.compressor_on[k] && !trace.compressor_on[k - 1];
    }
  }
  return {2, "", violations == 0,
          fmt("%zu violations over %d random days (%d compressor cycles), need 0", violations,
              kDays, cycles)};
}

// 3. Parameter recovery on a noisy 48 h three-region trace.
CriterionResult parameter_recovery() {
  const auto tmpl = benchmark_template(thermal::Preset::three_region);
  const auto truth = three_region_params();
  constexpr int kSeeds = 10;
  double worst_err = 0.0, worst_rmse = 0.0, worst_secs = 0.0;
  int passed = 0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const auto data = fixtures::recovery_trace(static_cast<std::uint64_t>(seed), 0.05);
    const auto start = Clock::now();
    const auto fit = fit::fit_params(tmpl, data.observations,
                                     fit::default_param_spec(tmpl, data.observations));
    const double secs = since(start);
    double err = 0.0;
    for (const auto &[k, v] : truth) {
      if (k.starts_with("R_") || k.starts_with("C_")) {
        err = std::max(err, std::abs(fit.params.at(k) - v) / v);
      }
    }
    worst_err = std::max(worst_err, err);
    worst_rmse = std::max(worst_rmse, fit.rmse);
    worst_secs = std::max(worst_secs, secs);
    passed += err <= 0.15 && fit.rmse <= 0.1 && secs < 60.0;
  }
  return {3, "", passed == kSeeds,
          fmt("%d/%d seeds ok; worst R/C error %.1f%% <= 15%%, worst rmse %.3f <= 0.1, "
              "slowest fit %.1f s < 60 s",
              passed, kSeeds, 100.0 * worst_err, worst_rmse, worst_secs)};
}

// 4. The planner's optimum equals full enumeration on small instances.
CriterionResult plan_optimality() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  constexpr int kInstances = 60;
  int equal = 0;
  for (int i = 0; i < kInstances; ++i) {
    auto h = fixtures::hot_day(static_cast<std::uint64_t>(i));
    const auto slots = 1 + rng() % 3;
    const auto count = 2 + rng() % 4;
    h.cfg.candidates.clear();
    for (double t = 18.0 + static_cast<double>(rng() % 4); h.cfg.candidates.size() < count;
         t += 1.0 + static_cast<double>(rng() % 3)) {
      h.cfg.candidates.push_back(t);
    }
    h.cfg.slot = 60.0 * static_cast<double>(30 + rng() % 60);
    h.cfg.horizon = static_cast<double>(slots) * h.cfg.slot;
    h.cfg.alpha = std::round(u(rng) * 8.0) / 8.0;
    h.cfg.preferred_temp = 22.0 + 4.0 * u(rng);
    h.cfg.band = 1.5 * u(rng);
    h.init.thermal.temperatures.setConstant(24.0 + 8.0 * u(rng));
    const auto p = cet::plan(h.model, h.forecast, h.cfg, h.init);
    const auto brute = oracles::brute_force_plan(h.model, h.forecast, h.cfg, h.init);
    equal += p.diagnostics.objective == brute.j;
  }
  return {4, "", equal == kInstances,
          fmt("%d/%d instances (<= 3 slots x <= 5 candidates) with plan J == brute-force J",
              equal, kInstances)};
}

// 5. The knob trades energy for comfort in prediction and in closed loop.
CriterionResult knob_trade_off() {
  constexpr int kSeeds = 10;
  int monotone = 0, eco_wins = 0, comfort_wins = 0;
  double eco_e = 0.0, base_e = 0.0, comfort_d = 0.0, base_d = 0.0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    auto h = fixtures::hot_day(static_cast<std::uint64_t>(seed));
    bool ok = true;
    double prev_e = std::numeric_limits<double>::infinity(), prev_d = -1.0;
    for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      h.cfg.alpha = alpha;
      const auto p = cet::plan(h.model, h.forecast, h.cfg, h.init);
      ok = ok && p.diagnostics.predicted_energy <= prev_e &&
           p.diagnostics.predicted_discomfort >= prev_d;
      prev_e = p.diagnostics.predicted_energy;
      prev_d = p.diagnostics.predicted_discomfort;
    }
    monotone += ok;

    thermal::NoiseModel noise;
    noise.seed = static_cast<std::uint64_t>(seed);
    const auto base = cet::run_fixed_setpoint(h.model, h.forecast, h.cfg, h.init, h.cfg.horizon,
                                              h.cfg.preferred_temp, noise);
    h.cfg.alpha = 1.0;
    const auto eco = cet::run_closed_loop(h.model, h.model, h.forecast, h.cfg, h.init,
                                          h.cfg.horizon, h.cfg.slot, noise);
    h.cfg.alpha = 0.0;
    const auto comfort = cet::run_closed_loop(h.model, h.model, h.forecast, h.cfg, h.init,
                                              h.cfg.horizon, h.cfg.slot, noise);
    eco_wins += eco.report.energy < base.report.energy;
    comfort_wins += comfort.report.discomfort <= base.report.discomfort;
    eco_e += eco.report.energy;
    base_e += base.report.energy;
    comfort_d += comfort.report.discomfort;
    base_d += base.report.discomfort;
  }
  return {5, "", monotone == kSeeds && eco_wins == kSeeds && comfort_wins == kSeeds,
          fmt("monotone predictions %d/%d; alpha=1 energy < baseline %d/%d (mean %.2f vs %.2f "
              "kWh); alpha=0 discomfort <= baseline %d/%d (mean %.2f vs %.2f degC h)",
              monotone, kSeeds, eco_wins, kSeeds, eco_e / kSeeds, base_e / kSeeds, comfort_wins,
              kSeeds, comfort_d / kSeeds, base_d / kSeeds)};
}

std::vector<std::uint8_t> session_part(const std::vector<std::uint8_t> &flags,
                                       const std::vector<std::uint8_t> &session) {
  std::vector<std::uint8_t> out;
  for (std::size_t k = 0; k < flags.size(); ++k) {
    if (session[k]) out.push_back(flags[k]);
  }
  return out;
}

// 6. Exact decoding, then accuracy on the noisy estimation campaign.
CriterionResult decode_campaign() {
  pacman::DecodeConfig exact;
  exact.min_run = 1;
  exact.residual_sigma = 0.1;
  int checked = 0, equal = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto d = fixtures::decode_trace(seed, 0.1, 0.0, 3.0);
    for (std::size_t start = 0; start + 12 <= d.observations.size(); start += 13) {
      const auto len = static_cast<long>(2 + start % 11);
      const fit::ObservationSeries window(d.observations.begin() + static_cast<long>(start),
                                          d.observations.begin() + static_cast<long>(start) + len);
      const auto seg = pacman::decode_cycles(window, d.params, exact);
      const auto problem = pacman::emission_costs(window, d.params, exact);
      equal += seg.flags == oracles::brute_force_decode(problem.emission, exact.switch_penalty).flags;
      ++checked;
    }
  }

  const auto ac = benchmark_ac();
  constexpr int kSeeds = 20;
  double agree = 0.0, acc = 0.0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const auto d = fixtures::decode_trace(static_cast<std::uint64_t>(seed), 0.1);
    const auto seg = pacman::decode_cycles(d.observations, d.params);
    agree += pacman::agreement(session_part(seg.flags, seg.session),
                               session_part(d.trace.compressor_on, seg.session));
    pacman::CycleSegmentation truth;
    truth.flags = d.trace.compressor_on;
    for (const auto &s : d.trace.set_temp) truth.session.push_back(s ? 1 : 0);
    acc += pacman::accuracy(pacman::estimate_energy(seg, ac).energy,
                            pacman::estimate_energy(truth, ac).energy);
  }
  agree /= kSeeds;
  acc /= kSeeds;
  return {6, "", checked >= 100 && equal == checked && agree >= 0.9 && acc >= 85.0,
          fmt("decode == 2^T brute force on %d/%d windows (T <= 12); sigma=0.1 campaign over %d "
              "seeds: agreement %.1f%% >= 90%%, accuracy %.1f%% >= 85%%",
              equal, checked, kSeeds, 100.0 * agree, acc)};
}

// 7. Predicted energy never rises with the set temperature.
CriterionResult prediction_monotone() {
  constexpr int kSeeds = 10;
  int ok = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (int seed = 0; seed < kSeeds; ++seed) {
    const auto h = fixtures::hot_day(static_cast<std::uint64_t>(seed));
    const fit::RoomModel room{h.model.network, h.model.ac,
                              Eigen::VectorXd::Zero(h.model.network.zone_count())};
    const auto preds =
        pacman::predict_energy(room, h.model.hysteresis, h.forecast,
                               cet::CETConfig::default_candidates(), 8.0 * kHour, h.init);
    bool mono = true;
    for (std::size_t i = 1; i < preds.size(); ++i) {
      const double tol = std::max(pacman::cycle_energy(preds[i - 1], h.model.ac),
                                  pacman::cycle_energy(preds[i], h.model.ac));
      const double rise = preds[i].energy - preds[i - 1].energy;
      worst = std::max(worst, rise - tol);
      mono = mono && rise <= tol;
    }
    ok += mono;
  }
  return {7, "", ok == kSeeds,
          fmt("%d/%d weather seeds non-increasing over 16..30 degC; largest rise beyond one "
              "cycle %.4f kWh <= 0",
              ok, kSeeds, worst)};
}

// 8. Fleet capacity-loss detection.
CriterionResult fleet_detection() {
  const auto rep = run_fleet({});
  int cold_better = 0;
  for (const auto &u : rep.units) {
    if (u.faulty && u.lead_cold && (!u.lead_prior || *u.lead_prior < *u.lead_cold)) ++cold_better;
  }
  const bool ok = rep.detection_rate >= 0.86 && rep.false_alarms == 0 && rep.transfer_ok &&
                  rep.seconds < 300.0;
  return {8, "", ok,
          fmt("%d/%d faulty units alarmed >= 7 days before saturation (%.0f%% >= 86%%), "
              "%d false alarms, prior reduced lead on %d units, %.1f s < 300 s",
              rep.detected, rep.faulty, 100.0 * rep.detection_rate, rep.false_alarms, cold_better,
              rep.seconds)};
}

// 9. Every persisted kind survives a round trip; duplicates and torn
// trailing records are handled.
CriterionResult persistence() {
  std::random_device rd;
  const auto dir = std::filesystem::temp_directory_path() /
                   ("smartstat-acceptance-" + std::to_string(rd()) + std::to_string(rd()));
  std::filesystem::create_directories(dir);
  struct Cleanup {
    std::filesystem::path p;
    ~Cleanup() {
      std::error_code ec;
      std::filesystem::remove_all(p, ec);
    }
  } cleanup{dir};

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<io::LogEntry> batch;
  auto add = [&](const char *kind, const nlohmann::json &payload) {
    batch.push_back({kind, "unit-" + std::to_string(rng() % 3), std::to_string(rng()),
                     kEpoch + 1e5 * u(rng), payload});
  };
  for (int i = 0; i < 20; ++i) {
    fit::ObservationRecord obs;
    obs.timestamp = kEpoch + 60.0 * i;
    obs.sensed_temps = {{"room", 20.0 + 10.0 * u(rng)}};
    obs.outdoor_temp = 30.0 + u(rng);
    if (i % 2) obs.set_temp = 24.0;
    obs.door_open = i % 5 == 0;
    if (i % 3) obs.compressor_on = i % 2 == 0;
    if (i % 4) obs.electrical_power = 1250.0 * u(rng);
    add(io::kind::kObservation, obs);

    fit::FitResult fr;
    fr.preset = i % 2 ? thermal::Preset::single_zone : thermal::Preset::three_region;
    fr.params = {{"C_room", 1e5 * (1.0 + u(rng))}, {"R_room-wall", 0.01 * u(rng)}};
    fr.rmse = u(rng);
    fr.window_start = kEpoch;
    fr.window_end = kEpoch + kDay;
    fr.iterations = i;
    fr.converged = i % 2 == 0;
    fr.created_at = kEpoch + i;
    add(io::kind::kFitResult, fr);

    thermal::SetpointSchedule sched;
    for (int s = 0; s < 3; ++s) {
      sched.slots.push_back({kEpoch + 1800.0 * s,
                             s == 1 ? std::nullopt : std::optional<double>(16.0 + i % 15)});
    }
    add(io::kind::kSchedule, sched);
    add(io::kind::kAlert, greina::Alert{kEpoch + i * kDay, 5.0 + u(rng), 2.0 * u(rng)});
    pacman::EnergyReport er{10.0 * u(rng), i, u(rng),
                            i % 2 ? pacman::EnergyMethod::estimated : pacman::EnergyMethod::predicted,
                            i % 3 ? std::optional<double>(90.0 + u(rng)) : std::nullopt};
    add(io::kind::kEnergyReport, er);
    greina::HealthFeatures hf{kEpoch + i * kDay, u(rng), u(rng), u(rng), 60.0 * u(rng),
                              3500.0 * u(rng), i % 2 == 0};
    add(io::kind::kHealth, hf);
    cet::CETConfig cfg;
    cfg.alpha = std::round(u(rng) * 100.0) / 100.0;
    cfg.band = 0.5 + u(rng);
    add(io::kind::kConfig, cfg);
  }

  const auto path = dir / "records.jsonl";
  io::RecordLog log(path);
  const auto written = log.append(batch);
  const auto loaded = log.load();
  bool round_trip = loaded.entries == batch && loaded.corrupt_lines.empty();
  // Typed decode of each kind must reproduce the typed value.
  for (std::size_t i = 0; round_trip && i < batch.size(); ++i) {
    const auto &e = loaded.entries[i];
    const auto &kind = e.kind;
    nlohmann::json again;
    if (kind == io::kind::kObservation) again = io::decode<fit::ObservationRecord>(e.payload);
    if (kind == io::kind::kFitResult) again = io::decode<fit::FitResult>(e.payload);
    if (kind == io::kind::kSchedule) again = io::decode<thermal::SetpointSchedule>(e.payload);
    if (kind == io::kind::kAlert) again = io::decode<greina::Alert>(e.payload);
    if (kind == io::kind::kEnergyReport) again = io::decode<pacman::EnergyReport>(e.payload);
    if (kind == io::kind::kHealth) again = io::decode<greina::HealthFeatures>(e.payload);
    if (kind == io::kind::kConfig) again = io::decode<cet::CETConfig>(e.payload);
    round_trip = again == batch[i].payload;
  }

  const auto dup_fresh = log.append(batch);
  const auto dup_reopened = io::RecordLog(path).append(batch);

  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 7);
  const auto torn = io::RecordLog(path).load();
  const bool torn_ok = torn.entries.size() == batch.size() - 1 && torn.corrupt_lines.size() == 1 &&
                       std::equal(torn.entries.begin(), torn.entries.end(), batch.begin());
  // Appending after a torn tail keeps the new record intact.
  io::RecordLog after(path);
  io::LogEntry extra{io::kind::kAlert, "unit-9", "extra", kEpoch, greina::Alert{kEpoch, 6.0, 1.0}};
  after.append(extra);
  const auto resumed = after.load();
  const bool resume_ok = !resumed.entries.empty() && resumed.entries.back() == extra &&
                         resumed.corrupt_lines.size() == 1;

  io::SnapshotStore store(dir / "snapshots");
  fit::FitResult newer;
  newer.params = {{"C_room", 2e5}};
  newer.created_at = kEpoch + 10.0;
  fit::FitResult older = newer;
  older.created_at = kEpoch;
  older.params["C_room"] = 1e5;
  store.write("model", newer, newer.created_at);
  store.write("model", older, older.created_at);
  const auto latest = store.latest("model");
  const bool snapshot_ok = latest && io::decode<fit::FitResult>(*latest) == newer;

  const bool ok = written == batch.size() && round_trip && dup_fresh == 0 && dup_reopened == 0 &&
                  torn_ok && resume_ok && snapshot_ok;
  return {9, "", ok,
          fmt("%zu records over 7 kinds round-trip %s; duplicate batch added %zu (+%zu after "
              "reopen); torn tail skipped %s, append after it %s; snapshot keeps newest %s",
              written, round_trip ? "ok" : "FAILED", dup_fresh, dup_reopened,
              torn_ok ? "ok" : "FAILED", resume_ok ? "ok" : "FAILED",
              snapshot_ok ? "ok" : "FAILED")};
}

}  // namespace

const std::vector<Criterion> &acceptance_criteria() {
  static const std::vector<Criterion> all = {
      {1, "analytic RC step response", analytic_rc},
      {2, "hysteresis and lockouts on random days", hysteresis_days},
      {3, "grey-box parameter recovery", parameter_recovery},
      {4, "planner optimality on small instances", plan_optimality},
      {5, "comfort-energy knob trade-off", knob_trade_off},
      {6, "compressor decoding and energy estimation", decode_campaign},
      {7, "predicted energy monotone in set temperature", prediction_monotone},
      {8, "fleet capacity-loss detection", fleet_detection},
      {9, "persistence round trip", persistence},
  };
  return all;
}

namespace {

CriterionResult run_one(const Criterion &c) {
  const auto start = Clock::now();
  CriterionResult r;
  try {
    r = c.run();
  } catch (const std::exception &e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.id = c.id;
  r.name = c.name;
  r.seconds = since(start);
  return r;
}

bool selected(const std::vector<int> &ids, int id) {
  return ids.empty() || std::find(ids.begin(), ids.end(), id) != ids.end();
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const std::vector<int> &ids) {
  std::vector<CriterionResult> out;
  for (const auto &c : acceptance_criteria()) {
    if (selected(ids, c.id)) out.push_back(run_one(c));
  }
  return out;
}

std::string format_result(const CriterionResult &r) {
  std::ostringstream s;
  s << (r.passed ? "PASS" : "FAIL") << " [" << r.id << "] " << r.name << ": " << r.detail
    << fmt(" (%.2f s)", r.seconds);
  return s.str();
}

bool report_acceptance(std::ostream &out, const std::vector<int> &ids) {
  bool all = true;
  for (const auto &c : acceptance_criteria()) {
    if (!selected(ids, c.id)) continue;
    const auto r = run_one(c);
    out << format_result(r) << std::endl;
    all = all && r.passed;
  }
  return all;
}

}  // namespace smartstat::campaign
