#include "smartstat/campaign/benchmark.hpp"
#include "smartstat/error.hpp"
#include "smartstat/pacman/energy.hpp"
#include "smartstat/campaign/fixtures.hpp"
#include "smartstat/campaign/oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace smartstat;
using namespace smartstat::pacman;

namespace {

std::vector<std::uint8_t> session_part(const std::vector<std::uint8_t> &flags,
                                       const std::vector<std::uint8_t> &session) {
  std::vector<std::uint8_t> out;
  for (std::size_t k = 0; k < flags.size(); ++k) {
    if (session[k]) out.push_back(flags[k]);
  }
  return out;
}

double actual_energy(const thermal::SimulationTrace &trace, const thermal::ACUnit &ac) {
  CycleSegmentation truth;
  truth.flags = trace.compressor_on;
  for (const auto &s : trace.set_temp) truth.session.push_back(s ? 1 : 0);
  return estimate_energy(truth, ac).energy;
}

}  // namespace

TEST(EstimateEnergy, Definition) {
  CycleSegmentation seg;
  seg.flags.assign(180, 0);
  seg.session.assign(180, 1);
  for (int k = 0; k < 120; ++k) seg.flags[static_cast<std::size_t>(k)] = 1;
  thermal::ACUnit ac;
  ac.rated_electrical_power = 1500.0;
  const auto r = estimate_energy(seg, ac);
  EXPECT_NEAR(r.energy, 3.15, 1e-12);
  EXPECT_EQ(r.cycles, 1);
  EXPECT_DOUBLE_EQ(r.on_hours, 2.0);
  EXPECT_EQ(r.method, EnergyMethod::estimated);

  CycleSegmentation idle;
  idle.flags.assign(60, 0);
  idle.session.assign(60, 0);
  EXPECT_DOUBLE_EQ(estimate_energy(idle, ac).energy, 0.0);
  EXPECT_EQ(estimate_energy(idle, ac).cycles, 0);

  CycleSegmentation twice = seg;
  twice.flags.assign(360, 0);
  twice.session.assign(360, 0);
  for (int k = 0; k < 240; ++k) twice.flags[static_cast<std::size_t>(k)] = 1;
  const double fan = 50.0 * 10800.0 / 3.6e6;
  EXPECT_NEAR(estimate_energy(twice, ac).energy, 2.0 * (r.energy - fan), 1e-12);
}

TEST(Accuracy, Definition) {
  EXPECT_NEAR(accuracy(0.9, 1.0), 90.0, 1e-12);
  EXPECT_DOUBLE_EQ(accuracy(1.0, 1.0), 100.0);
  EXPECT_DOUBLE_EQ(accuracy(2.5, 1.0), 0.0);
  try {
    (void)accuracy(1.0, 0.0);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroActual);
  }
}

TEST(MergeShortRuns, FlipsShortestRunsFirst) {
  EXPECT_EQ(merge_short_runs({0, 0, 0, 1, 0, 0, 0}, 3), (std::vector<std::uint8_t>{0, 0, 0, 0, 0, 0, 0}));
  EXPECT_EQ(merge_short_runs({1, 1, 1, 1, 0, 0, 1, 1, 1}, 3),
            (std::vector<std::uint8_t>{1, 1, 1, 1, 1, 1, 1, 1, 1}));
  EXPECT_EQ(merge_short_runs({0, 1, 1, 1, 0, 0, 0}, 2), (std::vector<std::uint8_t>{1, 1, 1, 1, 0, 0, 0}));
  EXPECT_EQ(merge_short_runs({1, 0}, 3), (std::vector<std::uint8_t>{0, 0}));  // leftmost on ties
  EXPECT_EQ(merge_short_runs({1, 0, 1}, 1), (std::vector<std::uint8_t>{1, 0, 1}));
}

TEST(Viterbi, MatchesBruteForceOnShortTraces) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int t = 1 + trial % 12;
    Eigen::MatrixX2d e(t, 2);
    for (int k = 0; k < t; ++k) {
      e(k, 0) = 6.0 * unit(rng);
      e(k, 1) = 6.0 * unit(rng);
    }
    const double pen = 4.0 * unit(rng);
    const auto flags = viterbi(e, pen);
    const auto brute = oracles::brute_force_decode(e, pen);
    EXPECT_EQ(flags, brute.flags) << "trial " << trial;
    EXPECT_EQ(sequence_cost(e, flags, pen), brute.cost);
  }
}

TEST(DecodeCycles, MatchesBruteForceOnShortObservationWindows) {
  DecodeConfig cfg;
  cfg.min_run = 1;
  cfg.residual_sigma = 0.1;
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto d = fixtures::decode_trace(seed, 0.1, 0.0, 3.0);
    for (std::size_t start = 0; start + 12 <= d.observations.size(); start += 13) {
      const fit::ObservationSeries window(d.observations.begin() + static_cast<long>(start),
                                          d.observations.begin() + static_cast<long>(start + 1 + start % 12));
      if (window.size() < 2) continue;
      const auto seg = decode_cycles(window, d.params, cfg);
      const auto problem = emission_costs(window, d.params, cfg);
      const auto brute = oracles::brute_force_decode(problem.emission, cfg.switch_penalty);
      EXPECT_EQ(seg.flags, brute.flags);
      ++checked;
    }
  }
  EXPECT_GE(checked, 100);
}

TEST(DecodeCycles, RecoversSessionFlags) {
  const auto d = fixtures::decode_trace(4, 0.1);
  const auto seg = decode_cycles(d.observations, d.params);
  const auto truth_session = session_part(d.trace.compressor_on, seg.session);
  EXPECT_GE(agreement(session_part(seg.flags, seg.session), truth_session), 0.9);
}

TEST(DecodeCycles, PassiveWarmingDecodesOff) {
  const auto d = fixtures::decode_trace(5, 0.1, 1.0, 3.0, false);
  const auto seg = decode_cycles(d.observations, d.params);
  for (auto f : seg.flags) EXPECT_EQ(f, 0);
}

TEST(DecodeCycles, RejectsIrregularGridAndWrongPreset) {
  auto d = fixtures::decode_trace(1, 0.1);
  auto bad = d.params;
  bad.preset = thermal::Preset::three_region;
  try {
    (void)decode_cycles(d.observations, bad);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::ModelMismatch);
  }
  d.observations.erase(d.observations.begin() + 10);
  try {
    (void)decode_cycles(d.observations, d.params);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::GridError);
  }
}

TEST(DecodeCycles, AgreementDegradesGracefullyWithNoise) {
  double prev = 1.0;
  for (double sigma : {0.05, 0.1, 0.2, 0.4}) {
    double sum = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto d = fixtures::decode_trace(seed, sigma);
      const auto seg = decode_cycles(d.observations, d.params);
      sum += agreement(session_part(seg.flags, seg.session),
                       session_part(d.trace.compressor_on, seg.session));
    }
    const double mean = sum / 20.0;
    EXPECT_LE(mean, prev + 1e-12) << "sigma " << sigma;
    prev = mean;
  }
}

TEST(DecodeCycles, EstimationCampaignAccuracy) {
  double agree = 0.0;
  double acc = 0.0;
  const auto ac = campaign::benchmark_ac();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto d = fixtures::decode_trace(seed, 0.1);
    const auto seg = decode_cycles(d.observations, d.params);
    agree += agreement(session_part(seg.flags, seg.session),
                       session_part(d.trace.compressor_on, seg.session));
    acc += accuracy(estimate_energy(seg, ac).energy, actual_energy(d.trace, ac));
  }
  EXPECT_GE(agree / 20.0, 0.9);
  EXPECT_GE(acc / 20.0, 85.0);
}

TEST(PredictEnergy, NonIncreasingInSetTemperature) {
  const auto h = fixtures::hot_day(3);
  const auto ac = h.model.ac;
  fit::RoomModel room{h.model.network, h.model.ac, Eigen::VectorXd::Zero(4)};
  const auto preds = predict_energy(room, h.model.hysteresis, h.forecast,
                                    cet::CETConfig::default_candidates(), 8 * 3600.0, h.init);
  ASSERT_EQ(preds.size(), 15u);
  for (std::size_t i = 1; i < preds.size(); ++i) {
    const double tol = std::max(cycle_energy(preds[i - 1], ac), cycle_energy(preds[i], ac));
    EXPECT_LE(preds[i].energy, preds[i - 1].energy + tol) << preds[i].set_temp;
  }
}

TEST(PredictEnergy, FanFloorAndZeroDuration) {
  const auto h = fixtures::hot_day(3);
  fit::RoomModel room{h.model.network, h.model.ac, Eigen::VectorXd::Zero(4)};
  const double hottest = *std::max_element(h.forecast.v.begin(), h.forecast.v.end());
  const double above = std::ceil(hottest + h.model.hysteresis.delta_high + 1.0);
  const auto preds = predict_energy(room, h.model.hysteresis, h.forecast, {above}, 8 * 3600.0,
                                    h.init);
  EXPECT_NEAR(preds[0].energy, h.model.ac.fan_power * 8 * 3600.0 / 3.6e6, 1e-12);
  EXPECT_EQ(preds[0].cycles, 0);
  for (const auto &p : predict_energy(room, h.model.hysteresis, h.forecast, {24, 26, 28}, 0.0,
                                      h.init)) {
    EXPECT_DOUBLE_EQ(p.energy, 0.0);
  }
}

TEST(PredictEnergy, StaleModelRejected) {
  const auto h = fixtures::hot_day();
  const auto tmpl = campaign::benchmark_template(thermal::Preset::three_region);
  fit::FitResult f;
  f.params = campaign::three_region_params();
  f.created_at = h.init.thermal.time - 20 * 86400.0;
  try {
    (void)predict_energy(tmpl, f, h.init.thermal.time, h.forecast, {24}, 3600.0, h.init);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::StaleModel);
  }
}
