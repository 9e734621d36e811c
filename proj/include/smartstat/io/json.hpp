#pragma once

// JSON encodings of the persisted and served domain types. Field names
// follow the struct members; optionals become null.

#include "smartstat/cet/control.hpp"
#include "smartstat/fit/greybox.hpp"
#include "smartstat/greina/health.hpp"
#include "smartstat/pacman/energy.hpp"
#include "smartstat/timeseries.hpp"

#include <json.hpp>

namespace smartstat {
void to_json(nlohmann::json &j, const TimeSeries &s);
void from_json(const nlohmann::json &j, TimeSeries &s);
}  // namespace smartstat

namespace smartstat::thermal {
void to_json(nlohmann::json &j, const ACUnit &ac);
void from_json(const nlohmann::json &j, ACUnit &ac);
void to_json(nlohmann::json &j, const HysteresisConfig &c);
void from_json(const nlohmann::json &j, HysteresisConfig &c);
void to_json(nlohmann::json &j, const SetpointSchedule &s);
void from_json(const nlohmann::json &j, SetpointSchedule &s);
}  // namespace smartstat::thermal

namespace smartstat::fit {
void to_json(nlohmann::json &j, const FitResult &f);
void from_json(const nlohmann::json &j, FitResult &f);
void to_json(nlohmann::json &j, const ObservationRecord &r);
void from_json(const nlohmann::json &j, ObservationRecord &r);
}  // namespace smartstat::fit

namespace smartstat::cet {
void to_json(nlohmann::json &j, const CETConfig &c);
void from_json(const nlohmann::json &j, CETConfig &c);
void to_json(nlohmann::json &j, const PlanDiagnostics &d);
}  // namespace smartstat::cet

namespace smartstat::pacman {
void to_json(nlohmann::json &j, const EnergyReport &r);
void from_json(const nlohmann::json &j, EnergyReport &r);
void to_json(nlohmann::json &j, const Prediction &p);
}  // namespace smartstat::pacman

namespace smartstat::greina {
void to_json(nlohmann::json &j, const HealthFeatures &f);
void from_json(const nlohmann::json &j, HealthFeatures &f);
void to_json(nlohmann::json &j, const Baseline &b);
void from_json(const nlohmann::json &j, Baseline &b);
void to_json(nlohmann::json &j, const DriftDetector &d);
void from_json(const nlohmann::json &j, DriftDetector &d);
void to_json(nlohmann::json &j, const Alert &a);
void from_json(const nlohmann::json &j, Alert &a);
void to_json(nlohmann::json &j, const CounterfactualReport &r);
// Missing monitor fields keep their current values.
void to_json(nlohmann::json &j, const MonitorConfig &c);
void from_json(const nlohmann::json &j, MonitorConfig &c);
}  // namespace smartstat::greina

namespace smartstat::io {

[[noreturn]] void throw_schema_error(const std::string &what);

/// Decodes `j` as T; any missing or mistyped field becomes SchemaError.
template <typename T>
T decode(const nlohmann::json &j) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception &e) {
    throw_schema_error(e.what());
  }
}

}  // namespace smartstat::io
