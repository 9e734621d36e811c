#pragma once

// Brute-force reference implementations used to check the optimized paths.

#include "smartstat/cet/control.hpp"
#include "smartstat/pacman/energy.hpp"

#include <limits>
#include <vector>

namespace smartstat::oracles {

struct BruteForcePlan {
  std::vector<double> sets;
  double j = std::numeric_limits<double>::infinity();
  double energy = 0.0;
  double discomfort = 0.0;
};

/// Enumerates every per-slot assignment through full closed-loop simulation.
inline BruteForcePlan brute_force_plan(const cet::PlanningModel &model,
                                       const TimeSeries &forecast, const cet::CETConfig &cfg,
                                       const thermal::PlantState &init) {
  const auto slots = cfg.slot_count();
  const auto evaluate = [&](const std::vector<double> &sets) {
    const auto trace = cet::predict(model, forecast, cfg, init,
                                    cet::slot_schedule(init.thermal.time, cfg.slot, sets));
    return std::pair{cet::energy_of(trace, model.ac),
                     cet::discomfort_of(trace, cfg.preferred_temp, cfg.band, cfg.comfort_zone)};
  };
  cet::Normalizers norm;
  norm.e_max = std::max(cet::kNormalizerFloor,
                        evaluate(std::vector<double>(slots, cfg.candidates.front())).first);
  norm.d_max = std::max(cet::kNormalizerFloor,
                        evaluate(std::vector<double>(slots, cfg.candidates.back())).second);

  BruteForcePlan best;
  std::vector<std::size_t> idx(slots, 0);
  while (true) {
    std::vector<double> sets;
    for (auto i : idx) sets.push_back(cfg.candidates[i]);
    const auto [e, d] = evaluate(sets);
    const double j = cet::scalarize(e, d, cfg.alpha, norm);
    if (j < best.j) best = {sets, j, e, d};
    std::size_t pos = 0;
    while (pos < slots && ++idx[pos] == cfg.candidates.size()) idx[pos++] = 0;
    if (pos == slots) break;
  }
  return best;
}

struct BruteForceDecode {
  std::vector<std::uint8_t> flags;
  double cost = std::numeric_limits<double>::infinity();
};

/// Minimum-cost flag sequence over all 2^T candidates; ties keep the
/// lexicographically smallest sequence read from the end (OFF preferred).
inline BruteForceDecode brute_force_decode(const Eigen::MatrixX2d &emission,
                                           double switch_penalty) {
  const auto t = static_cast<std::size_t>(emission.rows());
  BruteForceDecode best;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << t); ++mask) {
    std::vector<std::uint8_t> flags(t);
    for (std::size_t k = 0; k < t; ++k) flags[k] = (mask >> k) & 1U;
    const double c = pacman::sequence_cost(emission, flags, switch_penalty);
    if (c < best.cost) best = {flags, c};
  }
  return best;
}

}  // namespace smartstat::oracles
