#include "smartstat/io/json.hpp"

#include "smartstat/error.hpp"

using nlohmann::json;

namespace {

json opt(const std::optional<double> &v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_double(const json &j, const char *key) {
  const auto &v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

}  // namespace

namespace smartstat {

void to_json(json &j, const TimeSeries &s) { j = json{{"t", s.t}, {"v", s.v}}; }

void from_json(const json &j, TimeSeries &s) {
  j.at("t").get_to(s.t);
  j.at("v").get_to(s.v);
  if (s.t.size() != s.v.size()) io::throw_schema_error("t and v differ in length");
}

}  // namespace smartstat

namespace smartstat::thermal {

void to_json(json &j, const ACUnit &ac) {
  j = json{{"rated_cooling_power", ac.rated_cooling_power},
           {"rated_electrical_power", ac.rated_electrical_power},
           {"fan_power", ac.fan_power},
           {"min_on", ac.min_on},
           {"min_off", ac.min_off}};
}

void from_json(const json &j, ACUnit &ac) {
  ac.rated_cooling_power = j.value("rated_cooling_power", ac.rated_cooling_power);
  ac.rated_electrical_power = j.value("rated_electrical_power", ac.rated_electrical_power);
  ac.fan_power = j.value("fan_power", ac.fan_power);
  ac.min_on = j.value("min_on", ac.min_on);
  ac.min_off = j.value("min_off", ac.min_off);
}

void to_json(json &j, const HysteresisConfig &c) {
  j = json{{"delta_high", c.delta_high},
           {"delta_low", c.delta_low},
           {"sensing_zone", c.sensing_zone}};
}

void from_json(const json &j, HysteresisConfig &c) {
  c.delta_high = j.value("delta_high", c.delta_high);
  c.delta_low = j.value("delta_low", c.delta_low);
  c.sensing_zone = j.value("sensing_zone", c.sensing_zone);
}

void to_json(json &j, const SetpointSchedule &s) {
  j = json{{"slots", json::array()}};
  for (const auto &slot : s.slots) {
    j["slots"].push_back({{"start", slot.start}, {"set_temp", opt(slot.set_temp)}});
  }
}

void from_json(const json &j, SetpointSchedule &s) {
  s.slots.clear();
  for (const auto &e : j.at("slots")) {
    s.slots.push_back({e.at("start").get<double>(), opt_double(e, "set_temp")});
  }
}

}  // namespace smartstat::thermal

namespace smartstat::fit {

void to_json(json &j, const FitResult &f) {
  j = json{{"preset", thermal::to_string(f.preset)},
           {"params", f.params},
           {"rmse", f.rmse},
           {"window_start", f.window_start},
           {"window_end", f.window_end},
           {"iterations", f.iterations},
           {"converged", f.converged},
           {"created_at", f.created_at}};
}

void from_json(const json &j, FitResult &f) {
  f.preset = thermal::preset_from_string(j.at("preset").get<std::string>());
  j.at("params").get_to(f.params);
  f.rmse = j.at("rmse").get<double>();
  f.window_start = j.at("window_start").get<double>();
  f.window_end = j.at("window_end").get<double>();
  f.iterations = j.at("iterations").get<int>();
  f.converged = j.at("converged").get<bool>();
  f.created_at = j.at("created_at").get<double>();
}

void to_json(json &j, const ObservationRecord &r) {
  j = json{{"timestamp", r.timestamp},
           {"sensed_temps", r.sensed_temps},
           {"outdoor_temp", r.outdoor_temp},
           {"set_temp", opt(r.set_temp)},
           {"door_open", r.door_open},
           {"compressor_on", r.compressor_on ? json(*r.compressor_on) : json(nullptr)},
           {"electrical_power", opt(r.electrical_power)}};
}

void from_json(const json &j, ObservationRecord &r) {
  r.timestamp = j.at("timestamp").get<double>();
  j.at("sensed_temps").get_to(r.sensed_temps);
  r.outdoor_temp = j.at("outdoor_temp").get<double>();
  r.set_temp = opt_double(j, "set_temp");
  r.door_open = j.at("door_open").get<bool>();
  const auto &c = j.at("compressor_on");
  r.compressor_on = c.is_null() ? std::nullopt : std::optional<bool>(c.get<bool>());
  r.electrical_power = opt_double(j, "electrical_power");
}

}  // namespace smartstat::fit

namespace smartstat::cet {

void to_json(json &j, const CETConfig &c) {
  j = json{{"alpha", c.alpha},
           {"preferred_temp", c.preferred_temp},
           {"band", c.band},
           {"candidates", c.candidates},
           {"slot", c.slot},
           {"horizon", c.horizon},
           {"comfort_zone", c.comfort_zone}};
}

void from_json(const json &j, CETConfig &c) {
  c.alpha = j.value("alpha", c.alpha);
  c.preferred_temp = j.value("preferred_temp", c.preferred_temp);
  c.band = j.value("band", c.band);
  c.candidates = j.value("candidates", c.candidates);
  c.slot = j.value("slot", c.slot);
  c.horizon = j.value("horizon", c.horizon);
  c.comfort_zone = j.value("comfort_zone", c.comfort_zone);
}

void to_json(json &j, const PlanDiagnostics &d) {
  j = json{{"predicted_energy", d.predicted_energy},
           {"predicted_discomfort", d.predicted_discomfort},
           {"objective", d.objective},
           {"e_max", d.norm.e_max},
           {"d_max", d.norm.d_max},
           {"method", to_string(d.method)},
           {"nodes_expanded", d.nodes_expanded}};
}

}  // namespace smartstat::cet

namespace smartstat::pacman {

void to_json(json &j, const EnergyReport &r) {
  j = json{{"energy", r.energy},
           {"cycles", r.cycles},
           {"on_hours", r.on_hours},
           {"method", to_string(r.method)},
           {"accuracy_pct", opt(r.accuracy_pct)}};
}

void from_json(const json &j, EnergyReport &r) {
  r.energy = j.at("energy").get<double>();
  r.cycles = j.at("cycles").get<int>();
  r.on_hours = j.at("on_hours").get<double>();
  const auto method = j.at("method").get<std::string>();
  if (method == to_string(EnergyMethod::estimated)) {
    r.method = EnergyMethod::estimated;
  } else if (method == to_string(EnergyMethod::predicted)) {
    r.method = EnergyMethod::predicted;
  } else {
    io::throw_schema_error("unknown energy method '" + method + "'");
  }
  r.accuracy_pct = opt_double(j, "accuracy_pct");
}

void to_json(json &j, const Prediction &p) {
  j = json{{"set_temp", p.set_temp},
           {"energy", p.energy},
           {"cycles", p.cycles},
           {"on_hours", p.on_hours}};
}

}  // namespace smartstat::pacman

namespace smartstat::greina {

void to_json(json &j, const HealthFeatures &f) {
  j = json{{"date", f.date},
           {"duty_cycle", f.duty_cycle},
           {"cooling_rate", f.cooling_rate},
           {"attainment_gap", f.attainment_gap},
           {"pulldown_minutes", f.pulldown_minutes},
           {"qhat", f.qhat},
           {"valid", f.valid}};
}

void from_json(const json &j, HealthFeatures &f) {
  f.date = j.at("date").get<double>();
  f.duty_cycle = j.at("duty_cycle").get<double>();
  f.cooling_rate = j.at("cooling_rate").get<double>();
  f.attainment_gap = j.at("attainment_gap").get<double>();
  f.pulldown_minutes = j.at("pulldown_minutes").get<double>();
  f.qhat = j.at("qhat").get<double>();
  f.valid = j.at("valid").get<bool>();
}

namespace {

json stat_json(const FeatureStat &s) { return json{{"mean", s.mean}, {"var", s.var}}; }

FeatureStat stat_from(const json &j) {
  return {j.at("mean").get<double>(), j.at("var").get<double>()};
}

}  // namespace

void to_json(json &j, const Baseline &b) {
  j = json{{"duty_cycle", stat_json(b.duty_cycle)},
           {"cooling_rate", stat_json(b.cooling_rate)},
           {"attainment_gap", stat_json(b.attainment_gap)},
           {"pulldown_minutes", stat_json(b.pulldown_minutes)},
           {"qhat", stat_json(b.qhat)},
           {"n_days", b.n_days},
           {"from_prior", b.from_prior}};
}

void from_json(const json &j, Baseline &b) {
  b.duty_cycle = stat_from(j.at("duty_cycle"));
  b.cooling_rate = stat_from(j.at("cooling_rate"));
  b.attainment_gap = stat_from(j.at("attainment_gap"));
  b.pulldown_minutes = stat_from(j.at("pulldown_minutes"));
  b.qhat = stat_from(j.at("qhat"));
  b.n_days = j.at("n_days").get<double>();
  b.from_prior = j.at("from_prior").get<bool>();
}

void to_json(json &j, const DriftDetector &d) {
  j = json{{"cusum", d.cusum},
           {"k", d.k},
           {"h", d.h},
           {"state", to_string(d.state)},
           {"alarm_date", opt(d.alarm_date)},
           {"last_date", opt(d.last_date)}};
}

void from_json(const json &j, DriftDetector &d) {
  d.cusum = j.at("cusum").get<double>();
  d.k = j.at("k").get<double>();
  d.h = j.at("h").get<double>();
  const auto state = j.at("state").get<std::string>();
  if (state == "alarmed") {
    d.state = DetectorState::alarmed;
  } else if (state == "healthy") {
    d.state = DetectorState::healthy;
  } else {
    io::throw_schema_error("unknown detector state '" + state + "'");
  }
  d.alarm_date = opt_double(j, "alarm_date");
  d.last_date = opt_double(j, "last_date");
}

void to_json(json &j, const Alert &a) {
  j = json{{"date", a.date}, {"cusum", a.cusum}, {"z", a.z}};
}

void from_json(const json &j, Alert &a) {
  a.date = j.at("date").get<double>();
  a.cusum = j.at("cusum").get<double>();
  a.z = j.at("z").get<double>();
}

void to_json(json &j, const CounterfactualReport &r) {
  j = json{{"excess_energy_kwh", r.excess_energy},
           {"mean_temp_shortfall_c", r.mean_temp_shortfall},
           {"realized_energy_kwh", r.realized_energy},
           {"twin_energy_kwh", r.twin_energy},
           {"window_start", r.window_start},
           {"window_end", r.window_end},
           {"capacity_ratio", opt(r.capacity_ratio)}};
}

void to_json(json &j, const MonitorConfig &c) {
  j = json{{"k", c.k},
           {"h", c.h},
           {"decay", c.decay},
           {"n0", c.n0},
           {"warmup_days", c.warmup_days},
           {"guard_days", c.guard_days},
           {"min_relative_std", c.min_relative_std}};
}

void from_json(const json &j, MonitorConfig &c) {
  c.k = j.value("k", c.k);
  c.h = j.value("h", c.h);
  c.decay = j.value("decay", c.decay);
  c.n0 = j.value("n0", c.n0);
  c.warmup_days = j.value("warmup_days", c.warmup_days);
  c.guard_days = j.value("guard_days", c.guard_days);
  c.min_relative_std = j.value("min_relative_std", c.min_relative_std);
}

}  // namespace smartstat::greina

namespace smartstat::io {

void throw_schema_error(const std::string &what) { throw Error(ErrorCode::SchemaError, what); }

}  // namespace smartstat::io
