#include "smartstat/campaign/benchmark.hpp"
#include "smartstat/error.hpp"
#include "smartstat/thermal/network.hpp"
#include "smartstat/thermal/simulate.hpp"
#include "smartstat/campaign/checks.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace smartstat;
using namespace smartstat::thermal;

namespace {

RCNetwork single_node(double c, double r) {
  return RCNetwork({{"room", c}}, {{"ambient", "outdoor"}}, {{"room", "ambient", r}},
                   {{"room", 1.0}});
}

std::map<std::string, double> three_region_caps() {
  return {{"hir", 2e5}, {"mir", 4e5}, {"lir", 2e5}, {"wall", 8e5}};
}

std::map<std::string, double> three_region_res() {
  return {{"hir-mir", 0.02},  {"mir-lir", 0.02},  {"hir-wall", 0.05},
          {"mir-wall", 0.05}, {"lir-wall", 0.05}, {"wall-ambient", 0.02}};
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

TEST(BuildRoomModel, ThreeRegionTopology) {
  const auto net = build_room_model(Preset::three_region, three_region_caps(), three_region_res(),
                                    {{"hir", 0.7}, {"mir", 0.25}, {"lir", 0.05}});
  EXPECT_EQ(net.zone_count(), 4);
  EXPECT_EQ(net.edges().size(), 6u);
  EXPECT_TRUE(net.has_edge("hir", "mir"));
  EXPECT_TRUE(net.has_edge("lir", "mir"));
  EXPECT_TRUE(net.has_edge("wall", "ambient"));
  for (const char *z : {"hir", "mir", "lir"}) EXPECT_TRUE(net.has_edge(z, "wall"));
  EXPECT_FALSE(net.has_edge("hir", "lir"));
  EXPECT_DOUBLE_EQ(net.ac_fraction()(net.zone_index("hir")), 0.7);
}

TEST(BuildRoomModel, SingleZoneHasRoomWallAndAmbient) {
  const auto net = build_room_model(Preset::single_zone, {{"room", 8e5}, {"wall", 8e5}},
                                    {{"room-wall", 0.02}, {"wall-ambient", 0.02}},
                                    {{"room", 1.0}});
  EXPECT_EQ(net.zone_count(), 2);
  EXPECT_EQ(net.boundary_count(), 1);
  EXPECT_EQ(net.boundaries().front().id, "ambient");
}

TEST(BuildRoomModel, RejectsBadFractionsAndValues) {
  EXPECT_EQ(code_of([] {
              (void)build_room_model(Preset::three_region, three_region_caps(),
                                     three_region_res(),
                                     {{"hir", 0.5}, {"mir", 0.5}, {"lir", 0.5}});
            }),
            ErrorCode::InvalidTopology);
  auto caps = three_region_caps();
  caps["mir"] = 0.0;
  EXPECT_EQ(code_of([&] {
              (void)build_room_model(Preset::three_region, caps, three_region_res(),
                                     {{"hir", 1.0}});
            }),
            ErrorCode::InvalidParameter);
  auto res = three_region_res();
  res.erase("mir-lir");
  EXPECT_EQ(code_of([&] {
              (void)build_room_model(Preset::three_region, three_region_caps(), res,
                                     {{"hir", 1.0}});
            }),
            ErrorCode::InvalidTopology);
  res = three_region_res();
  res["hir-lir"] = 0.02;
  EXPECT_EQ(code_of([&] {
              (void)build_room_model(Preset::three_region, three_region_caps(), res,
                                     {{"hir", 1.0}});
            }),
            ErrorCode::InvalidTopology);
}

TEST(RCNetwork, RejectsSelfEdgesDuplicatesAndDisconnection) {
  EXPECT_EQ(code_of([] {
              RCNetwork({{"a", 1.0}}, {}, {{"a", "a", 1.0}}, {{"a", 1.0}});
            }),
            ErrorCode::InvalidTopology);
  EXPECT_EQ(code_of([] {
              RCNetwork({{"a", 1.0}, {"b", 1.0}}, {}, {{"a", "b", 1.0}, {"b", "a", 2.0}},
                        {{"a", 1.0}});
            }),
            ErrorCode::InvalidTopology);
  EXPECT_EQ(code_of([] {
              RCNetwork({{"a", 1.0}, {"b", 1.0}}, {{"x", "outdoor"}}, {{"a", "x", 1.0}},
                        {{"a", 1.0}});
            }),
            ErrorCode::InvalidTopology);
  EXPECT_EQ(code_of([] { RCNetwork({{"a", 1.0}}, {}, {}, {{"a", 1.0}, {"b", 0.0}}); }),
            ErrorCode::InvalidTopology);
}

TEST(StableDt, FormulaInstances) {
  EXPECT_DOUBLE_EQ(stable_dt(single_node(1e5, 0.01)), 500.0);
  const RCNetwork two_edges({{"room", 1e5}}, {{"a", "outdoor"}, {"b", "outdoor"}},
                            {{"room", "a", 0.01}, {"room", "b", 0.01}}, {{"room", 1.0}});
  EXPECT_DOUBLE_EQ(stable_dt(two_edges), 250.0);
}

TEST(StableDt, BenchmarkAdmitsDefaultStep) {
  // hir and lir bound it: 0.5 * 2e5 / (1/0.02 + 1/0.05) = 1428.57 s.
  const double bound = stable_dt(campaign::benchmark_network(Preset::three_region));
  EXPECT_NEAR(bound, 0.5 * 2e5 / 70.0, 1e-9);
  EXPECT_GE(bound, 60.0);
}

TEST(Step, EquilibriumIsFixedPoint) {
  const auto net = campaign::benchmark_network(Preset::three_region);
  const auto s0 = uniform_state(net, 0.0, 25.0);
  const auto s1 = step(net, s0, Eigen::VectorXd::Constant(1, 25.0), false, ACUnit{},
                       Eigen::VectorXd::Zero(4), 60.0);
  EXPECT_EQ(s1.temperatures, s0.temperatures);
  EXPECT_DOUBLE_EQ(s1.time, 60.0);
}

TEST(Step, HandEvaluatedCoolingUpdate) {
  const auto net = single_node(1e5, 0.01);
  ACUnit ac;
  ac.rated_cooling_power = 1000.0;
  const auto s1 = step(net, uniform_state(net, 0.0, 30.0), Eigen::VectorXd::Constant(1, 30.0),
                       true, ac, Eigen::VectorXd::Zero(1), 60.0);
  EXPECT_NEAR(s1.temperatures(0), 29.4, 1e-12);
}

TEST(Step, RejectsUnstableStepAndEnvelopeExit) {
  const auto net = single_node(1e5, 0.01);
  EXPECT_EQ(code_of([&] {
              (void)step(net, uniform_state(net, 0.0, 25.0), Eigen::VectorXd::Constant(1, 25.0),
                         false, ACUnit{}, Eigen::VectorXd::Zero(1), 2.0 * stable_dt(net));
            }),
            ErrorCode::UnstableStep);
  EXPECT_EQ(code_of([&] {
              (void)step(net, uniform_state(net, 0.0, 59.9), Eigen::VectorXd::Constant(1, 59.9),
                         false, ACUnit{}, Eigen::VectorXd::Constant(1, 1e6), 60.0);
            }),
            ErrorCode::StateOutOfRange);
}

TEST(Thermostat, TurnsOnAtUpperThreshold) {
  HysteresisConfig cfg;
  const auto next = thermostat_transition(CompressorState{}, 27.6, 27.0, cfg, ACUnit{}, 1000.0);
  EXPECT_TRUE(next.on);
  EXPECT_DOUBLE_EQ(next.since, 1000.0);
}

TEST(Thermostat, TurnsOffAtLowerThreshold) {
  HysteresisConfig cfg;
  CompressorState prev{true, 0.0, 0.0, 0.0};
  const auto next = thermostat_transition(prev, 26.4, 27.0, cfg, ACUnit{}, 1000.0);
  EXPECT_FALSE(next.on);
  EXPECT_DOUBLE_EQ(next.cumulative_on, 1000.0);
}

TEST(Thermostat, HoldsInsideBandAndDuringLockout) {
  HysteresisConfig cfg;
  CompressorState prev{true, 0.0, 0.0, 0.0};
  EXPECT_TRUE(thermostat_transition(prev, 27.0, 27.0, cfg, ACUnit{}, 1000.0).on);
  // Below threshold but min_on (180 s) not yet elapsed.
  EXPECT_TRUE(thermostat_transition(prev, 26.0, 27.0, cfg, ACUnit{}, 120.0).on);
  CompressorState off{false, 0.0, 0.0, 0.0};
  EXPECT_FALSE(thermostat_transition(off, 30.0, 27.0, cfg, ACUnit{}, 60.0).on);
}

TEST(HysteresisConfig, ZeroWidthBandRejected) {
  HysteresisConfig cfg;
  cfg.delta_high = 0.0;
  cfg.delta_low = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Simulate, AnalyticSingleNodeResponse) {
  const double c = 1e5, r = 0.01, rc = c * r;
  const auto net = single_node(c, r);
  SimulationOptions opt;
  opt.dt = rc / 100.0;
  opt.horizon = rc;
  const auto trace = simulate(net, PlantState{uniform_state(net, 0.0, 20.0), {}},
                              TimeSeries::constant(0.0, rc, 35.0),
                              SetpointSchedule::constant(std::nullopt), ACUnit{},
                              HysteresisConfig{0.5, 0.5, "room"}, opt);
  const double exact = 35.0 + (20.0 - 35.0) * std::exp(-1.0);
  const double got = trace.final_state.thermal.temperatures(0);
  EXPECT_LT(std::abs(got - 35.0 - (exact - 35.0)) / std::abs(exact - 35.0), 0.01);
}

TEST(Simulate, HoldsBandAfterPullDownWithoutLockouts) {
  const auto net = campaign::benchmark_network(Preset::three_region);
  ACUnit ac = campaign::benchmark_ac();
  ac.min_on = ac.min_off = 0.0;
  HysteresisConfig cfg;
  SimulationOptions opt;
  opt.horizon = 4 * 3600.0;
  const auto trace = simulate(net, PlantState{uniform_state(net, 0.0, 35.0), {}},
                              TimeSeries::constant(0.0, opt.horizon, 35.0),
                              SetpointSchedule::constant(25.0), ac, cfg, opt);
  const auto hir = trace.zone("hir");
  double eps = 0.0;
  for (Eigen::Index k = 1; k < hir.size(); ++k) eps = std::max(eps, std::abs(hir(k) - hir(k - 1)));
  Eigen::Index first_in = 0;
  while (first_in < hir.size() && hir(first_in) > 25.5) ++first_in;
  ASSERT_LT(first_in, hir.size());
  for (Eigen::Index k = first_in; k < hir.size(); ++k) {
    EXPECT_GE(hir(k), 24.5 - eps);
    EXPECT_LE(hir(k), 25.5 + eps);
  }
}

TEST(Simulate, LockoutsWidenTheExcursionByTheirLength) {
  const auto net = campaign::benchmark_network(Preset::three_region);
  const ACUnit ac = campaign::benchmark_ac();
  HysteresisConfig cfg;
  SimulationOptions opt;
  opt.horizon = 4 * 3600.0;
  const auto trace = simulate(net, PlantState{uniform_state(net, 0.0, 35.0), {}},
                              TimeSeries::constant(0.0, opt.horizon, 35.0),
                              SetpointSchedule::constant(25.0), ac, cfg, opt);
  const auto hir = trace.zone("hir");
  double eps = 0.0;
  for (Eigen::Index k = 1; k < hir.size(); ++k) eps = std::max(eps, std::abs(hir(k) - hir(k - 1)));
  const double lockout_steps = std::ceil(std::max(ac.min_on, ac.min_off) / opt.dt);
  Eigen::Index first_in = 0;
  while (first_in < hir.size() && hir(first_in) > 25.5) ++first_in;
  for (Eigen::Index k = first_in; k < hir.size(); ++k) {
    EXPECT_GE(hir(k), 24.5 - lockout_steps * eps);
    EXPECT_LE(hir(k), 25.5 + lockout_steps * eps);
  }
  EXPECT_TRUE(checks::hysteresis_violations(trace, cfg, ac).empty());
}

TEST(Simulate, SetAboveOutdoorNeverCools) {
  const auto net = campaign::benchmark_network(Preset::three_region);
  SimulationOptions opt;
  opt.horizon = 12 * 3600.0;
  const auto trace = simulate(net, PlantState{uniform_state(net, 0.0, 20.0), {}},
                              TimeSeries::constant(0.0, opt.horizon, 30.0),
                              SetpointSchedule::constant(40.0), ACUnit{}, HysteresisConfig{}, opt);
  for (auto on : trace.compressor_on) EXPECT_EQ(on, 0);
  const auto mir = trace.zone("mir");
  EXPECT_GT(mir(mir.size() - 1), mir(0));
  EXPECT_LE(mir.maxCoeff(), 30.0);
}

TEST(Simulate, IdenticalSeedsAreBitIdentical) {
  const auto net = campaign::benchmark_network(Preset::three_region);
  SimulationOptions opt;
  opt.horizon = 6 * 3600.0;
  opt.noise = NoiseModel{};
  opt.noise.seed = 42;
  const auto outdoor = campaign::synthetic_weather(0.0, 7.0, {});
  const PlantState init{uniform_state(net, 0.0, 30.0), {}};
  const auto a = simulate(net, init, outdoor, SetpointSchedule::constant(24.0), ACUnit{},
                          HysteresisConfig{}, opt);
  const auto b = simulate(net, init, outdoor, SetpointSchedule::constant(24.0), ACUnit{},
                          HysteresisConfig{}, opt);
  EXPECT_EQ(a.temperatures, b.temperatures);
  EXPECT_EQ(a.compressor_on, b.compressor_on);
  opt.noise.seed = 43;
  const auto c = simulate(net, init, outdoor, SetpointSchedule::constant(24.0), ACUnit{},
                          HysteresisConfig{}, opt);
  EXPECT_NE(a.temperatures, c.temperatures);
}

TEST(Simulate, CoverageAndStepGuards) {
  const auto net = campaign::benchmark_network(Preset::three_region);
  SimulationOptions opt;
  opt.horizon = 6 * 3600.0;
  const PlantState init{uniform_state(net, 0.0, 30.0), {}};
  EXPECT_EQ(code_of([&] {
              (void)simulate(net, init, TimeSeries::constant(0.0, 3600.0, 30.0),
                             SetpointSchedule::constant(24.0), ACUnit{}, HysteresisConfig{}, opt);
            }),
            ErrorCode::CoverageError);
  opt.dt = 2.0 * stable_dt(net);
  EXPECT_EQ(code_of([&] {
              (void)simulate(net, init, TimeSeries::constant(0.0, 7 * 3600.0, 30.0),
                             SetpointSchedule::constant(24.0), ACUnit{}, HysteresisConfig{}, opt);
            }),
            ErrorCode::UnstableStep);
}

TEST(ThermalProperties, MaximumPrinciplePassiveNetwork) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> temp(10.0, 45.0);
  std::uniform_real_distribution<double> frac(0.05, 1.0);
  const auto net = campaign::benchmark_network(Preset::three_region);
  for (int trial = 0; trial < 30; ++trial) {
    ThermalState init{0.0, Eigen::VectorXd(4)};
    for (int i = 0; i < 4; ++i) init.temperatures(i) = temp(rng);
    TimeSeries outdoor;
    for (int h = 0; h <= 12; ++h) outdoor.push_back(h * 3600.0, temp(rng));
    const double lo = std::min(init.temperatures.minCoeff(),
                               *std::min_element(outdoor.v.begin(), outdoor.v.end()));
    const double hi = std::max(init.temperatures.maxCoeff(),
                               *std::max_element(outdoor.v.begin(), outdoor.v.end()));
    SimulationOptions opt;
    opt.dt = frac(rng) * stable_dt(net);
    opt.horizon = std::floor(12 * 3600.0 / opt.dt) * opt.dt;
    const auto trace = simulate(net, PlantState{init, {}}, outdoor,
                                SetpointSchedule::constant(std::nullopt), ACUnit{},
                                HysteresisConfig{}, opt);
    EXPECT_GE(trace.temperatures.minCoeff(), lo - 1e-9);
    EXPECT_LE(trace.temperatures.maxCoeff(), hi + 1e-9);
  }
}

TEST(ThermalProperties, MonotoneInCoolingPower) {
  const auto net = campaign::benchmark_network(Preset::three_region);
  SimulationOptions opt;
  opt.horizon = 3 * 3600.0;
  const std::vector<std::uint8_t> on(180, 1);
  ACUnit weak;
  weak.rated_cooling_power = 1000.0;
  ACUnit strong;
  strong.rated_cooling_power = 1500.0;
  const auto outdoor = TimeSeries::constant(0.0, opt.horizon, 35.0);
  const auto a = simulate_open_loop(net, uniform_state(net, 0.0, 35.0), outdoor, on, weak, opt);
  const auto b = simulate_open_loop(net, uniform_state(net, 0.0, 35.0), outdoor, on, strong, opt);
  EXPECT_TRUE((b.temperatures.array() <= a.temperatures.array()).all());
  EXPECT_LT(b.final_state.thermal.temperatures(0), a.final_state.thermal.temperatures(0));
}

TEST(ThermalProperties, CumulativeOnMatchesFlags) {
  const auto net = campaign::benchmark_network(Preset::three_region);
  SimulationOptions opt;
  opt.horizon = 6 * 3600.0;
  const auto trace = simulate(net, PlantState{uniform_state(net, 0.0, 30.0), {}},
                              TimeSeries::constant(0.0, opt.horizon, 35.0),
                              SetpointSchedule::constant(24.0), ACUnit{}, HysteresisConfig{}, opt);
  double on_seconds = 0.0;
  for (auto f : trace.compressor_on) on_seconds += f ? opt.dt : 0.0;
  // The last interval's on-time accrues only at the next thermostat update.
  const double pending = trace.compressor_on.back() ? opt.dt : 0.0;
  EXPECT_NEAR(trace.final_state.compressor.cumulative_on + pending, on_seconds, 1e-6);
}
