#include "smartstat/campaign/benchmark.hpp"
#include "smartstat/error.hpp"
#include "smartstat/fit/greybox.hpp"
#include "smartstat/campaign/fixtures.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

using namespace smartstat;
using namespace smartstat::fit;

namespace {

const ModelTemplate &three_region() {
  static const auto tmpl = campaign::benchmark_template(thermal::Preset::three_region);
  return tmpl;
}

double worst_rc_error(const ParamMap &got, const ParamMap &truth) {
  double worst = 0.0;
  for (const auto &[k, v] : truth) {
    if (!k.starts_with("R_") && !k.starts_with("C_")) continue;
    worst = std::max(worst, std::abs(got.at(k) - v) / v);
  }
  return worst;
}

/// Stationary room for the first change_day days, then R_wall-ambient
/// halved; continuous state across the change.
ObservationSeries regime_change_series(int days, int change_day, std::uint64_t seed) {
  using namespace smartstat::thermal;
  const auto before = campaign::three_region_params();
  auto after = before;
  after["R_wall-ambient"] *= 0.5;
  campaign::WeatherSpec weather;
  weather.day_sigma = 1.5;
  weather.seed = seed;
  const double t0 = campaign::kEpoch;
  const auto outdoor = campaign::synthetic_weather(t0, days * 24.0, weather);
  const auto schedule = campaign::daily_sessions(t0, days, 8.0, 20.0, 24.0);
  campaign::ObserveOptions obs;
  obs.zones = {"hir", "mir", "lir"};
  obs.noise_sigma = 0.05;
  obs.seed = seed;

  ObservationSeries out;
  PlantState state{uniform_state(campaign::benchmark_network(Preset::three_region), t0, 30.0), {}};
  for (const auto &[params, span] :
       {std::pair{before, change_day}, std::pair{after, days - change_day}}) {
    const auto model = assemble_model(three_region(), params);
    SimulationOptions opt;
    opt.horizon = span * campaign::kDay;
    const auto trace = simulate(model.network, state, outdoor, schedule, model.ac,
                                three_region().hysteresis, opt);
    auto part = campaign::observe(trace, obs);
    out.insert(out.end(), part.begin(), part.end());
    state = trace.final_state;
    ++obs.seed;
  }
  return out;
}

ErrorCode code_of(const std::function<void()> &fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::CorruptRecord;
}

}  // namespace

TEST(Objective, GeneratingParamsAreSelfConsistent) {
  const auto data = fixtures::recovery_trace(3, 0.0, 24.0);
  auto params = campaign::three_region_params();
  params[initial_temp_param("wall")] = 30.0;
  EXPECT_LE(objective(params, three_region(), data.observations), 1e-6);
  for (const auto &r : residual_series(params, three_region(), data.observations)) {
    EXPECT_LE(std::abs(r.value), 1e-6);
  }
}

TEST(Objective, DoubledEnvelopeResistanceIsWorse) {
  const auto data = fixtures::recovery_trace(3, 0.0, 24.0);
  auto params = campaign::three_region_params();
  params[initial_temp_param("wall")] = 30.0;
  const double base = objective(params, three_region(), data.observations);
  params["R_wall-ambient"] *= 2.0;
  EXPECT_GT(objective(params, three_region(), data.observations), base);
}

TEST(Objective, EmptyObservationsAreACoverageError) {
  EXPECT_EQ(code_of([] { (void)objective(campaign::three_region_params(), three_region(), {}); }),
            ErrorCode::CoverageError);
}

TEST(FitParams, RecoversBenchmarkParameters) {
  const auto data = fixtures::recovery_trace(11, 0.05);
  const auto spec = default_param_spec(three_region(), data.observations);
  const auto start = std::chrono::steady_clock::now();
  const auto fit = fit_params(three_region(), data.observations, spec);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_LT(secs, 60.0);
  EXPECT_LE(worst_rc_error(fit.params, campaign::three_region_params()), 0.15);
  EXPECT_LE(fit.rmse, 0.1);
}

TEST(FitParams, NoiselessDataReachesTheTruthObjective) {
  const auto data = fixtures::recovery_trace(5, 0.0);
  const auto spec = default_param_spec(three_region(), data.observations);
  const auto fit = fit_params(three_region(), data.observations, spec);
  auto truth = campaign::three_region_params();
  truth[initial_temp_param("wall")] = 30.0;
  EXPECT_LE(fit.rmse * fit.rmse, objective(truth, three_region(), data.observations) + 1e-12);
  EXPECT_LE(fit.rmse, 0.01);
  EXPECT_NEAR(fit.rmse, std::sqrt(objective(fit.params, three_region(), data.observations)),
              1e-12);
}

TEST(FitParams, ConstantTraceIsIllConditioned) {
  ObservationSeries obs;
  for (int k = 0; k < 24 * 60; ++k) {
    obs.push_back({campaign::kEpoch + 60.0 * k, {{"hir", 25.0}, {"mir", 25.0}, {"lir", 25.0}},
                   25.0, std::nullopt, false, false, std::nullopt});
  }
  EXPECT_EQ(code_of([&] {
              (void)fit_params(three_region(), obs, default_param_spec(three_region(), obs));
            }),
            ErrorCode::IllConditioned);
}

TEST(FitParams, MoreStartsNeverHurtAndBoundsHold) {
  const auto data = fixtures::recovery_trace(8, 0.05, 24.0);
  const auto spec = default_param_spec(three_region(), data.observations);
  FitOptions opt;
  opt.max_iter = 15;
  double prev = std::numeric_limits<double>::infinity();
  for (int k : {1, 2, 8}) {
    opt.multi_start = k;
    const auto fit = fit_params(three_region(), data.observations, spec, opt);
    EXPECT_LE(fit.rmse, prev);
    prev = fit.rmse;
    for (const auto &p : spec.params) {
      EXPECT_GT(fit.params.at(p.name), p.lower) << p.name;
      EXPECT_LT(fit.params.at(p.name), p.upper) << p.name;
    }
  }
}

TEST(FitParams, DoorOpenRecordsAreExcluded) {
  auto data = fixtures::recovery_trace(3, 0.0, 24.0);
  auto params = campaign::three_region_params();
  params[initial_temp_param("wall")] = 30.0;
  const double clean = objective(params, three_region(), data.observations);
  for (std::size_t k = 100; k < 120; ++k) {
    data.observations[k].door_open = true;
    data.observations[k].sensed_temps["hir"] += 5.0;
  }
  EXPECT_NEAR(objective(params, three_region(), data.observations), clean, 1e-9);
}

TEST(Refit, StationaryRoomStaysNearTruth) {
  // Two-day sliding window so thirty daily refits stay within the test budget.
  const int days = 31;
  const auto all = fixtures::recovery_trace(21, 0.05, days * 24.0).observations;
  const auto truth = campaign::three_region_params();
  FitOptions opt;
  opt.multi_start = 1;
  const auto first = slice(all, campaign::kEpoch, campaign::kEpoch + 2 * campaign::kDay);
  FitResult active =
      fit_params(three_region(), first, default_param_spec(three_region(), first), FitOptions{});
  int accepted = 0;
  for (int d = 2; d < days; ++d) {
    const double end = campaign::kEpoch + (d + 1) * campaign::kDay;
    const auto window = slice(all, end - 2 * campaign::kDay, end);
    const auto out = refit(active, three_region(), window,
                           default_param_spec(three_region(), window), opt);
    EXPECT_FALSE(out.flagged);
    if (out.accepted) {
      ++accepted;
      EXPECT_LE(out.candidate_rmse, out.incumbent_rmse);
      EXPECT_LE(worst_rc_error(out.active.params, truth), 0.15) << "day " << d;
    }
    active = out.active;
  }
  EXPECT_GT(accepted, 0);
}

TEST(Refit, TracksAHalvedEnvelopeResistance) {
  const int change = 3;
  const auto all = regime_change_series(change + 4, change, 4);
  const double t_change = campaign::kEpoch + change * campaign::kDay;
  const auto first = slice(all, t_change - 2 * campaign::kDay, t_change);
  FitResult active =
      fit_params(three_region(), first, default_param_spec(three_region(), first));
  FitOptions opt;
  opt.multi_start = 2;
  double r = 0.0;
  for (int d = 1; d <= 3; ++d) {
    const double end = t_change + d * campaign::kDay;
    const auto window = slice(all, end - 2 * campaign::kDay, end);
    active = refit(active, three_region(), window, default_param_spec(three_region(), window),
                   opt)
                 .active;
    r = active.params.at("R_wall-ambient");
  }
  EXPECT_NEAR(r, 0.01, 0.2 * 0.01);
}

TEST(Refit, ShortWindowKeepsPreviousAndFlags) {
  const auto data = fixtures::recovery_trace(2, 0.05);
  FitResult prev;
  prev.params = campaign::three_region_params();
  prev.rmse = 0.05;
  const auto window = slice(data.observations, campaign::kEpoch, campaign::kEpoch + 5 * 3600.0);
  const auto out = refit(prev, three_region(), window,
                         default_param_spec(three_region(), window));
  EXPECT_TRUE(out.flagged);
  EXPECT_FALSE(out.accepted);
  EXPECT_EQ(out.active, prev);
}

TEST(Refit, NeverPublishesAWorseModel) {
  const auto data = fixtures::recovery_trace(9, 0.05);
  FitResult truth;
  truth.params = campaign::three_region_params();
  FitOptions opt;
  opt.multi_start = 1;
  opt.max_iter = 2;
  const auto out = refit(truth, three_region(), data.observations,
                         default_param_spec(three_region(), data.observations), opt);
  if (out.accepted) {
    EXPECT_LE(out.candidate_rmse, out.incumbent_rmse);
  } else {
    EXPECT_EQ(out.active, truth);
  }
}

TEST(ResidualSeries, DegradedCoolingShowsPositiveMeanWhileOn) {
  auto degraded = campaign::three_region_params();
  degraded[kCoolingParam] = 0.8 * campaign::benchmark_ac().rated_cooling_power;
  const auto data = fixtures::recovery_trace(6, 0.0, 24.0, degraded);
  auto params = campaign::three_region_params();
  params[initial_temp_param("wall")] = 30.0;
  double sum = 0.0;
  int n = 0;
  const auto res = residual_series(params, three_region(), data.observations);
  for (std::size_t i = 0; i < res.size(); ++i) {
    const auto k = static_cast<std::size_t>(
        std::llround((res[i].timestamp - campaign::kEpoch) / 60.0));
    if (k > 0 && data.trace.compressor_on[k - 1]) {
      sum += res[i].value;
      ++n;
    }
  }
  ASSERT_GT(n, 0);
  EXPECT_GT(sum / n, 0.0);
}

TEST(ResidualSeries, PassiveNightMatchesNoiseLevel) {
  const double sigma = 0.05;
  const auto data = fixtures::recovery_trace(7, sigma, 24.0);
  auto params = campaign::three_region_params();
  params[initial_temp_param("wall")] = 30.0;
  const auto res = residual_series(params, three_region(), data.observations);
  double sum = 0.0, sq = 0.0;
  int n = 0;
  for (const auto &r : res) {
    if (r.timestamp >= campaign::kEpoch + 8 * 3600.0) break;  // before the session
    sum += r.value;
    sq += r.value * r.value;
    ++n;
  }
  const double mean = sum / n;
  EXPECT_LE(std::abs(mean), 2.0 * sigma);
  EXPECT_NEAR(std::sqrt(sq / n - mean * mean), sigma, 0.2 * sigma);
}

TEST(FitResult, FreshnessWindow) {
  FitResult f;
  f.params = campaign::three_region_params();
  f.created_at = 1000.0;
  EXPECT_TRUE(is_fresh(f, 1000.0 + kModelMaxAge));
  EXPECT_FALSE(is_fresh(f, 1000.0 + kModelMaxAge + 1.0));
  EXPECT_FALSE(is_fresh(FitResult{}, 0.0));
}
