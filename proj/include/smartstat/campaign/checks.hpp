#pragma once

#include "smartstat/thermal/simulate.hpp"

#include <string>
#include <vector>

namespace smartstat::checks {

/// Hysteresis and lockout violations in a closed-loop trace. Transitions
/// caused by a session ending (set temperature withdrawn) are not counted.
inline std::vector<std::string> hysteresis_violations(const thermal::SimulationTrace &trace,
                                                      const thermal::HysteresisConfig &cfg,
                                                      const thermal::ACUnit &ac,
                                                      double prior_since = -1e18,
                                                      bool prior_on = false) {
  std::vector<std::string> out;
  const auto col = trace.zone_column(cfg.sensing_zone);
  bool on = prior_on;
  double since = prior_since;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const bool now_on = trace.compressor_on[k] != 0;
    const double t = trace.time[k];
    if (now_on != on) {
      const double sensed = trace.temperatures(static_cast<Eigen::Index>(k), col);
      const auto set = trace.set_temp[k];
      if (now_on) {
        if (!set || sensed < *set + cfg.delta_high) {
          out.push_back("OFF->ON below threshold at t=" + std::to_string(t));
        }
        if (t - since < ac.min_off) out.push_back("min_off violated at t=" + std::to_string(t));
      } else if (set) {
        if (sensed > *set - cfg.delta_low) {
          out.push_back("ON->OFF above threshold at t=" + std::to_string(t));
        }
        if (t - since < ac.min_on) out.push_back("min_on violated at t=" + std::to_string(t));
      }
      on = now_on;
      since = t;
    }
  }
  return out;
}

}  // namespace smartstat::checks
