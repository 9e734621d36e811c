#include "smartstat/campaign/benchmark.hpp"
#include "smartstat/campaign/fleet.hpp"
#include "smartstat/error.hpp"
#include "smartstat/greina/health.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace smartstat;
using namespace smartstat::greina;
using campaign::kDay;
using campaign::kEpoch;

namespace {

fit::ObservationSeries day_of(const fit::ObservationSeries &obs, int d) {
  return fit::slice(obs, kEpoch + d * kDay, kEpoch + (d + 1) * kDay);
}

HealthFeatures valid_day(double date, double qhat) {
  HealthFeatures f;
  f.date = date;
  f.qhat = qhat;
  f.duty_cycle = 0.4;
  f.valid = true;
  return f;
}

void expect_code(ErrorCode code, const auto &fn) {
  try {
    fn();
    FAIL() << "expected " << to_string(code);
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

}  // namespace

TEST(DailyFeatures, HealthyDayRecoversCapacity) {
  const auto unit = campaign::benchmark_unit(3);
  const auto obs = campaign::simulate_unit(unit, 2);
  const auto f = daily_features(day_of(obs, 1), unit.model, unit.ac);
  ASSERT_TRUE(f.valid);
  EXPECT_NEAR(f.qhat, 3500.0, 350.0);
  EXPECT_GT(f.duty_cycle, 0.0);
  EXPECT_LE(f.duty_cycle, 1.0);
  EXPECT_GE(f.pulldown_minutes, 0.0);
  EXPECT_GT(f.cooling_rate, 0.0);
  EXPECT_NEAR(f.attainment_gap, 0.0, 1.0);
  EXPECT_DOUBLE_EQ(f.date, kEpoch + kDay);
}

TEST(DailyFeatures, ReducedCapacityShowsInQhatAndDuty) {
  const auto unit = campaign::benchmark_unit(5);
  const auto healthy = daily_features(day_of(campaign::simulate_unit(unit, 2), 1), unit.model,
                                      unit.ac);
  const auto faulty = daily_features(day_of(campaign::simulate_unit(unit, 2, 0.6), 1),
                                     unit.model, unit.ac);
  ASSERT_TRUE(healthy.valid && faulty.valid);
  const double ratio = faulty.qhat / healthy.qhat;
  EXPECT_GE(ratio, 0.5);
  EXPECT_LE(ratio, 0.7);
  EXPECT_GT(faulty.duty_cycle, healthy.duty_cycle);
}

TEST(DailyFeatures, CoverageRules) {
  const auto unit = campaign::benchmark_unit(1);
  auto day = day_of(campaign::simulate_unit(unit, 1), 0);
  auto open = day;
  for (auto &r : open) r.door_open = true;
  EXPECT_FALSE(daily_features(open, unit.model, unit.ac).valid);

  auto idle = day;
  for (auto &r : idle) r.set_temp.reset();
  EXPECT_FALSE(daily_features(idle, unit.model, unit.ac).valid);

  // 1.5 h of AC-active records is below the 2 h minimum.
  auto short_session = day;
  for (std::size_t k = 90; k < short_session.size(); ++k) short_session[k].set_temp.reset();
  EXPECT_FALSE(daily_features(short_session, unit.model, unit.ac).valid);

  auto unflagged = day;
  for (auto &r : unflagged) r.compressor_on.reset();
  EXPECT_FALSE(daily_features(unflagged, unit.model, unit.ac).valid);
  EXPECT_FALSE(daily_features({}, unit.model, unit.ac).valid);
}

TEST(DailyFeatures, PulldownAndAttainmentOnDailySessions) {
  auto unit = campaign::benchmark_unit(2);
  unit.session_start = 8.0;
  unit.session_end = 20.0;
  unit.model.params[fit::kGainParam] = 200.0;
  const auto f = daily_features(day_of(campaign::simulate_unit(unit, 2), 1), unit.model, unit.ac);
  ASSERT_TRUE(f.valid);
  EXPECT_GT(f.pulldown_minutes, 5.0);
  EXPECT_LT(f.pulldown_minutes, 12 * 60.0);
  EXPECT_NEAR(f.attainment_gap, 0.0, 1.0);
}

TEST(UpdateBaseline, Definitions) {
  Baseline b;
  for (int d = 0; d < 400; ++d) b = update_baseline(b, valid_day(d, 3000.0));
  EXPECT_NEAR(b.qhat.mean, 3000.0, 1e-9);
  EXPECT_NEAR(b.qhat.var, 0.0, 1e-9);
  EXPECT_NEAR(b.n_days, 14.0, 1e-6);

  HealthFeatures invalid = valid_day(500, 10.0);
  invalid.valid = false;
  EXPECT_EQ(update_baseline(b, invalid), b);

  const auto f = valid_day(501, 2500.0);
  const auto full = update_baseline(b, f, 1.0);
  EXPECT_DOUBLE_EQ(full.qhat.mean, 2500.0);
  EXPECT_DOUBLE_EQ(full.duty_cycle.mean, f.duty_cycle);
  EXPECT_DOUBLE_EQ(full.qhat.var, 0.0);
  EXPECT_DOUBLE_EQ(full.n_days, 1.0);

  expect_code(ErrorCode::InvalidParameter, [&] { (void)update_baseline(b, f, 0.0); });
  expect_code(ErrorCode::InvalidParameter, [&] { (void)update_baseline(b, f, 1.5); });
}

TEST(UpdateBaseline, YoungBaselineIsRunningMean) {
  Baseline b;
  b = update_baseline(b, valid_day(0, 3000.0));
  b = update_baseline(b, valid_day(1, 3100.0));
  EXPECT_NEAR(b.qhat.mean, 3050.0, 5.0);
  EXPECT_GT(b.qhat.var, 0.0);
}

TEST(UpdateBaseline, VarianceNonNegativeOnRandomStreams) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> q(3500.0, 40.0);
  Baseline b;
  for (int d = 0; d < 200; ++d) {
    b = update_baseline(b, valid_day(d, q(rng)));
    EXPECT_GE(b.qhat.var, 0.0);
    EXPECT_GE(b.n_days, 0.0);
  }
  EXPECT_NEAR(std::sqrt(b.qhat.var), 40.0, 25.0);
}

TEST(HealthIndex, Definition) {
  Baseline b;
  b.qhat = {3500.0, 400.0};
  b.n_days = 10.0;
  EXPECT_DOUBLE_EQ(health_index(valid_day(0, 3500.0), b), 0.0);
  EXPECT_DOUBLE_EQ(health_index(valid_day(0, 3480.0), b), 1.0);
  EXPECT_DOUBLE_EQ(health_index(valid_day(0, 3520.0), b), -1.0);

  // The relative floor only matters when the baseline is tighter than it.
  EXPECT_DOUBLE_EQ(health_index(valid_day(0, 3480.0), b, 0.001), 1.0);
  EXPECT_DOUBLE_EQ(health_index(valid_day(0, 3465.0), b, 0.01), 1.0);

  b.qhat.var = 0.0;
  EXPECT_NEAR(health_index(valid_day(0, 3500.0 - 1e-3), b), 1.0, 1e-9);

  Baseline cold;
  expect_code(ErrorCode::ColdStart, [&] { (void)health_index(valid_day(0, 3000.0), cold); });
  FleetPrior prior;
  prior.units = 3;
  prior.pooled.qhat = {3500.0, 100.0};
  prior.pooled.n_days = 14.0;
  EXPECT_DOUBLE_EQ(health_index(valid_day(0, 3490.0), blend_prior(prior, cold)), 1.0);
}

TEST(Detector, ZeroStreamNeverAlarms) {
  DriftDetector d;
  for (int day = 0; day < 120; ++day) {
    auto [next, alert] = detector_update(d, 0.0, day);
    EXPECT_FALSE(alert);
    EXPECT_DOUBLE_EQ(next.cusum, 0.0);
    d = next;
  }
  EXPECT_EQ(d.state, DetectorState::healthy);
}

TEST(Detector, IsolatedOutlierDecays) {
  DriftDetector d;
  auto r = detector_update(d, 4.0, 0);
  EXPECT_DOUBLE_EQ(r.detector.cusum, 3.5);
  EXPECT_FALSE(r.alert);
  d = r.detector;
  for (int day = 1; day < 20; ++day) {
    r = detector_update(d, 0.0, day);
    EXPECT_FALSE(r.alert);
    d = r.detector;
  }
  EXPECT_DOUBLE_EQ(d.cusum, 0.0);
  EXPECT_EQ(d.state, DetectorState::healthy);
}

TEST(Detector, AlarmLatchesAndEmitsOnce) {
  DriftDetector d;
  int alerts = 0;
  for (int day = 0; day < 30; ++day) {
    const double z = day < 10 ? 2.0 : -3.0;
    auto [next, alert] = detector_update(d, z, day);
    if (alert) {
      ++alerts;
      EXPECT_EQ(day, 3);  // 1.5 per day crosses 5 on the fourth day
      EXPECT_DOUBLE_EQ(alert->cusum, 6.0);
    }
    EXPECT_GE(next.cusum, 0.0);
    d = next;
  }
  EXPECT_EQ(alerts, 1);
  EXPECT_EQ(d.state, DetectorState::alarmed);
  EXPECT_EQ(d.alarm_date, 3.0);
  EXPECT_DOUBLE_EQ(d.cusum, 0.0);

  d = reset(d);
  EXPECT_EQ(d.state, DetectorState::healthy);
  EXPECT_FALSE(d.alarm_date);
  auto again = detector_update(d, 10.0, 31);
  EXPECT_TRUE(again.alert);
}

TEST(Detector, RejectsOutOfOrderUpdates) {
  DriftDetector d = detector_update({}, 0.0, 10).detector;
  expect_code(ErrorCode::OutOfOrderUpdate, [&] { (void)detector_update(d, 0.0, 10); });
  expect_code(ErrorCode::OutOfOrderUpdate, [&] { (void)detector_update(d, 0.0, 9); });
}

TEST(Detector, CusumReturnsToZeroAfterExcursion) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> z(-2.0, 6.0);
  for (int trial = 0; trial < 50; ++trial) {
    DriftDetector d;
    int day = 0;
    for (; day < 10; ++day) d = detector_update(d, z(rng), day).detector;
    int steps = 0;
    while (d.cusum > 0.0) {
      d = detector_update(d, 0.0, day++).detector;
      ASSERT_LT(++steps, 1000);
    }
  }
}

TEST(BlendPrior, ShrinkageLimits) {
  FleetPrior prior;
  prior.units = 4;
  prior.n0 = 14.0;
  prior.pooled.qhat = {3400.0, 900.0};
  prior.pooled.duty_cycle = {0.4, 0.01};

  Baseline local;
  local.qhat = {3000.0, 100.0};
  local.duty_cycle = {0.6, 0.02};

  local.n_days = 0.0;
  auto b = blend_prior(prior, local);
  EXPECT_DOUBLE_EQ(b.qhat.mean, 3400.0);
  EXPECT_DOUBLE_EQ(b.qhat.var, 900.0);
  EXPECT_DOUBLE_EQ(b.n_days, 0.0);
  EXPECT_TRUE(b.from_prior);

  local.n_days = 14.0;
  b = blend_prior(prior, local);
  EXPECT_DOUBLE_EQ(b.qhat.mean, 3200.0);
  EXPECT_DOUBLE_EQ(b.duty_cycle.mean, 0.5);
  EXPECT_DOUBLE_EQ(b.qhat.var, 500.0);
  EXPECT_DOUBLE_EQ(b.n_days, 14.0);

  local.n_days = 1e6 * 14.0;
  b = blend_prior(prior, local);
  EXPECT_NEAR(b.qhat.mean / 3000.0, 1.0, 1e-3);

  expect_code(ErrorCode::EmptyInput, [&] { (void)blend_prior(FleetPrior{}, local); });
}

TEST(PoolPrior, MeanOfMeansPlusSpread) {
  Baseline a;
  a.qhat = {3400.0, 100.0};
  a.n_days = 10.0;
  Baseline b;
  b.qhat = {3600.0, 300.0};
  b.n_days = 14.0;
  const std::vector<Baseline> units{a, b};
  const auto p = pool_prior(units, 7.0);
  EXPECT_EQ(p.units, 2);
  EXPECT_DOUBLE_EQ(p.n0, 7.0);
  EXPECT_DOUBLE_EQ(p.pooled.qhat.mean, 3500.0);
  EXPECT_DOUBLE_EQ(p.pooled.qhat.var, 200.0 + 10000.0);
  expect_code(ErrorCode::EmptyInput, [] { (void)pool_prior({}, 14.0); });
}

TEST(Monitor, InjectedDecayAlarmsEarly) {
  auto unit = campaign::benchmark_unit(11);
  unit.decay = 0.015;
  const int days = 90;
  const auto obs = campaign::simulate_unit(unit, days);
  MonitorConfig cfg;
  auto m = make_monitor(cfg);
  std::optional<int> alarm;
  std::optional<int> saturated;
  for (int d = 0; d < days; ++d) {
    const auto f = daily_features(day_of(obs, d), unit.model, unit.ac);
    if (m.observe(f, cfg).alert) alarm = d;
    if (f.valid && f.duty_cycle >= 0.95 && !saturated) saturated = d;
  }
  ASSERT_TRUE(alarm);
  EXPECT_GE(*alarm, unit.fault_day);
  EXPECT_LT(*alarm, 60);
  EXPECT_GE(saturated.value_or(days) - *alarm, 7);
}

TEST(Counterfactual, FaultyCapacityCostsEnergyAndComfort) {
  const auto unit = campaign::benchmark_unit(4);
  const auto obs = campaign::simulate_unit(unit, 4, 0.5);
  DriftDetector alarmed;
  alarmed.state = DetectorState::alarmed;
  alarmed.alarm_date = kEpoch + kDay;
  std::vector<HealthFeatures> days;
  for (int d = 1; d < 4; ++d) days.push_back(daily_features(day_of(obs, d), unit.model, unit.ac));
  const auto rep = counterfactual_report(obs, unit.model, unit.ac, days, alarmed);
  EXPECT_GT(rep.excess_energy, 0.0);
  EXPECT_GT(rep.mean_temp_shortfall, 0.0);
  EXPECT_DOUBLE_EQ(rep.window_start, kEpoch + kDay);
  ASSERT_TRUE(rep.capacity_ratio);
  EXPECT_NEAR(*rep.capacity_ratio, 0.5, 0.1);
}

TEST(Counterfactual, HealthyDataComparesToItself) {
  auto unit = campaign::benchmark_unit(6);
  unit.doors = false;
  const auto obs = campaign::simulate_unit(unit, 3);
  DriftDetector alarmed;
  alarmed.state = DetectorState::alarmed;
  alarmed.alarm_date = kEpoch + kDay;
  const auto rep = counterfactual_report(obs, unit.model, unit.ac, {}, alarmed);
  EXPECT_LE(std::abs(rep.excess_energy), 0.05 * rep.twin_energy);
  EXPECT_LE(std::abs(rep.mean_temp_shortfall), 0.2);
  EXPECT_FALSE(rep.capacity_ratio);
}

TEST(Counterfactual, SevereFaultShortfallIsSingleDigit) {
  auto unit = campaign::benchmark_unit(9);
  unit.weather_mean = 37.0;
  const auto obs = campaign::simulate_unit(unit, 7, 0.3);
  DriftDetector alarmed;
  alarmed.state = DetectorState::alarmed;
  alarmed.alarm_date = kEpoch;
  const auto rep = counterfactual_report(obs, unit.model, unit.ac, {}, alarmed);
  EXPECT_GE(rep.mean_temp_shortfall, 1.0);
  EXPECT_LT(rep.mean_temp_shortfall, 10.0);
  EXPECT_GT(rep.realized_energy, 1.5 * rep.twin_energy);
}

TEST(Counterfactual, NeedsAnAlarm) {
  const auto unit = campaign::benchmark_unit(1);
  const auto obs = campaign::simulate_unit(unit, 1);
  expect_code(ErrorCode::NoAlarmWindow,
              [&] { (void)counterfactual_report(obs, unit.model, unit.ac, {}, {}); });
  DriftDetector late;
  late.state = DetectorState::alarmed;
  late.alarm_date = kEpoch + 5 * kDay;
  expect_code(ErrorCode::NoAlarmWindow,
              [&] { (void)counterfactual_report(obs, unit.model, unit.ac, {}, late); });
}

TEST(FleetCampaign, DetectsFaultsWithoutFalseAlarms) {
  const auto rep = campaign::run_fleet({});
  EXPECT_EQ(rep.faulty, 7);
  EXPECT_GE(rep.detection_rate, 0.86);
  EXPECT_EQ(rep.false_alarms, 0);
  EXPECT_TRUE(rep.transfer_ok);
  EXPECT_LT(rep.seconds, 300.0);
  ASSERT_GT(rep.scored_days, 0);
  EXPECT_GE(static_cast<double>(rep.scored_within_3) / rep.scored_days, 0.99);
  for (const auto &u : rep.units) {
    if (!u.faulty) continue;
    ASSERT_TRUE(u.lead_prior.has_value());
    if (u.lead_cold) EXPECT_GE(*u.lead_prior, *u.lead_cold);
  }
}
