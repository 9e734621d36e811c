#include "smartstat/service/service.hpp"

#include "smartstat/error.hpp"
#include "smartstat/io/csv.hpp"
#include "smartstat/io/json.hpp"
#include "smartstat/io/resample.hpp"
#include "smartstat/pacman/energy.hpp"
#include "smartstat/service/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iostream>
#include <iterator>
#include <mutex>
#include <sstream>

namespace smartstat::service {
namespace {

using nlohmann::json;

constexpr double kStateMaxAge = 3.0 * 3600.0;  // older observations do not seed the plant state
constexpr double kMaxWhatIfHours = 168.0;

struct FieldError {
  std::string field;
  std::string message;
};

Response invalid(std::vector<FieldError> errors) {
  json list = json::array();
  for (const auto &e : errors) list.push_back({{"field", e.field}, {"message", e.message}});
  return {422, {{"error", "ValidationError"}, {"errors", list}}};
}

Response unknown_unit(const std::string &id) {
  return {404, {{"error", "UnknownUnit"}, {"message", "no unit '" + id + "'"}}};
}

std::optional<double> parse_double(const std::string &s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

/// Epoch seconds or RFC 3339.
std::optional<double> parse_time(const std::string &s) {
  if (auto v = parse_double(s)) return v;
  try {
    return io::parse_rfc3339(s);
  } catch (const Error &) {
    return std::nullopt;
  }
}

std::string key_of(double t) { return io::format_rfc3339(t); }

json model_json(const fit::FitResult &m, double now) {
  if (!m.fitted()) return {{"fitted", false}, {"fresh", false}};
  return {{"fitted", true},
          {"fresh", fit::is_fresh(m, now)},
          {"preset", thermal::to_string(m.preset)},
          {"created_at", m.created_at},
          {"expires_at", m.created_at + fit::kModelMaxAge},
          {"rmse", m.rmse}};
}

json plan_json(const ActivePlan &p) {
  return {{"schedule", p.plan.schedule},
          {"diagnostics", p.plan.diagnostics},
          {"cet", p.cet},
          {"planned_at", p.planned_at}};
}

void merge_records(fit::ObservationSeries &into, fit::ObservationSeries fresh) {
  if (fresh.empty()) return;
  const bool tail = into.empty() || fresh.front().timestamp > into.back().timestamp;
  into.insert(into.end(), std::make_move_iterator(fresh.begin()),
              std::make_move_iterator(fresh.end()));
  if (!tail) {
    std::stable_sort(into.begin(), into.end(),
                     [](const auto &a, const auto &b) { return a.timestamp < b.timestamp; });
  }
}

bool has_timestamp(const fit::ObservationSeries &series, double t) {
  const auto it = std::lower_bound(series.begin(), series.end(), t,
                                   [](const auto &r, double v) { return r.timestamp < v; });
  return it != series.end() && it->timestamp == t;
}

}  // namespace

Response error_response(const std::exception &e) {
  const auto *err = dynamic_cast<const Error *>(&e);
  if (!err) return {500, {{"error", "InternalError"}, {"message", e.what()}}};
  int status = 500;
  if (is_input_error(err->code())) {
    status = 422;
  } else if (err->code() == ErrorCode::StaleModel || err->code() == ErrorCode::ModelMismatch) {
    status = 409;
  } else if (err->code() == ErrorCode::ProviderUnavailable) {
    status = 503;
  }
  json body = {{"error", std::string(to_string(err->code()))}, {"message", err->what()}};
  if (status == 422) body["errors"] = json::array({{{"field", nullptr}, {"message", err->what()}}});
  return {status, body};
}

Service::Service(ServiceConfig config, io::Clock clock, io::HttpTransport transport)
    : config_(std::move(config)),
      clock_(std::move(clock)),
      forecast_(config_.provider, clock_, std::move(transport)),
      log_(config_.data_dir / "events.log"),
      snapshots_(config_.data_dir / "snapshots") {
  config_.validate();
  const auto loaded = log_.load();
  if (!loaded.corrupt_lines.empty()) {
    std::cerr << "smartstat: skipped " << loaded.corrupt_lines.size()
              << " corrupt log record(s) in " << log_.path() << "\n";
  }
  for (const auto &uc : config_.units) {
    auto unit = std::make_unique<Unit>();
    unit->state.config = uc;
    restore(*unit, loaded);
    units_.emplace(uc.id, std::move(unit));
  }
}

Service::~Service() = default;

void Service::restore(Unit &unit, const io::LoadResult &log) {
  auto &s = unit.state;
  const auto &id = s.config.id;
  s.tmpl = s.config.model_template();
  s.cet = s.config.cet;
  if (auto snap = snapshots_.latest("model-" + id)) {
    s.model = io::decode<fit::FitResult>(*snap);
  } else if (s.config.model) {
    s.model = *s.config.model;
  }
  if (auto snap = snapshots_.latest("cet-" + id)) s.cet = io::decode<cet::CETConfig>(*snap);
  s.monitor = greina::make_monitor(config_.monitor);

  std::vector<greina::HealthFeatures> days;
  for (const auto &e : log.entries) {
    if (e.unit != id) continue;
    if (e.kind == io::kind::kObservation) {
      s.observations.push_back(io::decode<fit::ObservationRecord>(e.payload));
    } else if (e.kind == io::kind::kHealth) {
      days.push_back(io::decode<greina::HealthFeatures>(e.payload));
    }
  }
  std::stable_sort(s.observations.begin(), s.observations.end(),
                   [](const auto &a, const auto &b) { return a.timestamp < b.timestamp; });
  std::stable_sort(days.begin(), days.end(),
                   [](const auto &a, const auto &b) { return a.date < b.date; });
  for (const auto &f : days) {
    const auto step = s.monitor.observe(f, config_.monitor);
    if (step.alert) s.alerts.push_back(*step.alert);
    s.latest_features = f;
    s.history.push_back(f);
    s.last_scored_day = f.date;
  }
}

Service::Unit *Service::find(const std::string &id) const {
  const auto it = units_.find(id);
  return it == units_.end() ? nullptr : it->second.get();
}

TimeSeries Service::forecast_for(const UnitState &s, double now, double seconds) const {
  const int hours = static_cast<int>(std::ceil(seconds / 3600.0)) + 2;
  try {
    return forecast_.fetch(s.config.lat, s.config.lon, hours, now);
  } catch (const Error &e) {
    if (e.code() == ErrorCode::CoverageError) {
      throw Error(ErrorCode::ProviderUnavailable, std::string("forecast: ") + e.what());
    }
    throw;
  }
}

thermal::PlantState Service::initial_state(const UnitState &s, const thermal::RCNetwork &network,
                                           double now, const TimeSeries &forecast) const {
  const double outdoor = forecast.value_at(now);
  thermal::PlantState init;
  init.thermal.time = now;
  init.thermal.temperatures = Eigen::VectorXd::Constant(network.zone_count(), outdoor);

  const fit::ObservationRecord *last = nullptr;
  for (auto it = s.observations.rbegin(); it != s.observations.rend(); ++it) {
    if (it->timestamp <= now) {
      last = &*it;
      break;
    }
  }
  if (!last || now - last->timestamp > kStateMaxAge) return init;

  double sum = 0.0;
  int n = 0;
  for (const auto &[zone, t] : last->sensed_temps) {
    if (network.find_zone(zone)) {
      sum += t;
      ++n;
    }
  }
  if (n == 0) return init;
  const double room = sum / n;
  const auto room_zones = thermal::preset_room_zones(s.config.preset);
  for (const auto &zone : network.zone_ids()) {
    const auto i = network.zone_index(zone);
    if (const auto it = last->sensed_temps.find(zone); it != last->sensed_temps.end()) {
      init.thermal.temperatures(i) = it->second;
    } else if (std::find(room_zones.begin(), room_zones.end(), zone) != room_zones.end()) {
      init.thermal.temperatures(i) = room;
    } else {
      init.thermal.temperatures(i) = 0.5 * (room + outdoor);  // envelope between room and outside
    }
  }
  init.compressor.on = last->compressor_on.value_or(false);
  return init;
}

void Service::replan_locked(UnitState &s, double now) {
  const auto model = cet::planning_model(s.tmpl, s.model, now);
  const auto forecast = forecast_for(s, now, s.cet.horizon);
  const auto init = initial_state(s, model.network, now, forecast);
  ActivePlan active{cet::plan(model, forecast, s.cet, init), s.cet, now};
  const json doc = plan_json(active);
  log_.append(io::LogEntry{io::kind::kSchedule, s.config.id, key_of(now), now, doc});
  snapshots_.write("schedule-" + s.config.id, doc, now);
  s.plan = std::move(active);
}

void Service::persist_cet_locked(const UnitState &s, double now) {
  log_.append(io::LogEntry{io::kind::kConfig, s.config.id, "", now, json(s.cet)});
  snapshots_.write("cet-" + s.config.id, json(s.cet), now);
}

json Service::score_days_locked(UnitState &s, double now) {
  json alerts = json::array();
  if (!s.model.fitted() || s.observations.empty()) return alerts;
  const double last = s.observations.back().timestamp;
  double day = s.last_scored_day
                   ? *s.last_scored_day + kDaySeconds
                   : std::floor(s.observations.front().timestamp / kDaySeconds) * kDaySeconds;
  std::vector<io::LogEntry> entries;
  for (; day + kDaySeconds <= last; day += kDaySeconds) {
    const auto f =
        score_day(s.model, s.config.ac, fit::slice(s.observations, day, day + kDaySeconds), day);
    const auto step = s.monitor.observe(f, config_.monitor);
    s.latest_features = f;
    s.history.push_back(f);
    s.last_scored_day = day;
    entries.push_back({io::kind::kHealth, s.config.id, key_of(day), now, json(f)});
    if (step.alert) {
      s.alerts.push_back(*step.alert);
      entries.push_back({io::kind::kAlert, s.config.id, key_of(step.alert->date), now,
                         json(*step.alert)});
      alerts.push_back(*step.alert);
    }
  }
  log_.append(entries);
  return alerts;
}

Response Service::units() const {
  const double now = clock_();
  json list = json::array();
  for (const auto &[id, unit] : units_) {
    std::shared_lock lock(unit->mutex);
    list.push_back({{"id", id},
                    {"preset", thermal::to_string(unit->state.config.preset)},
                    {"model", model_json(unit->state.model, now)}});
  }
  return {200, {{"units", list}}};
}

Response Service::state(const std::string &id) const {
  const auto *unit = find(id);
  if (!unit) return unknown_unit(id);
  const double now = clock_();
  std::shared_lock lock(unit->mutex);
  const auto &s = unit->state;
  json body = {{"unit", id},
               {"time", now},
               {"temperatures", nullptr},
               {"outdoor_temp", nullptr},
               {"observed_at", nullptr},
               {"compressor_on", nullptr},
               {"active_set_temp", nullptr},
               {"model", model_json(s.model, now)},
               {"cet", s.cet}};
  if (!s.observations.empty()) {
    const auto &r = s.observations.back();
    body["temperatures"] = r.sensed_temps;
    body["outdoor_temp"] = r.outdoor_temp;
    body["observed_at"] = r.timestamp;
    if (r.compressor_on) body["compressor_on"] = *r.compressor_on;
    if (r.set_temp) body["active_set_temp"] = *r.set_temp;
  }
  if (s.plan) {
    const auto set = s.plan->plan.schedule.active_at(now);
    body["active_set_temp"] = set ? json(*set) : json(nullptr);
  }
  return {200, body};
}

namespace {

/// Applies a CET change, persists it, replans, and reports the outcome.
template <typename Apply>
Response update_cet(std::shared_mutex &mutex, UnitState &s, Apply apply,
                    const std::function<void(UnitState &)> &persist,
                    const std::function<void(UnitState &)> &replan) {
  std::unique_lock lock(mutex);
  cet::CETConfig next = s.cet;
  apply(next);
  try {
    next.validate();
  } catch (const Error &e) {
    return invalid({{"cet", e.what()}});
  }
  s.cet = next;
  persist(s);
  json body = {{"cet", s.cet}, {"replanned", false}, {"schedule", nullptr}};
  try {
    replan(s);
    body.update(plan_json(*s.plan));
    body["replanned"] = true;
  } catch (const Error &e) {
    // The setting is stored either way; the plan follows once a model or
    // forecast is available.
    s.plan.reset();
    body["reason"] = std::string(to_string(e.code()));
    body["message"] = e.what();
  }
  return {200, body};
}

std::optional<json> parse_body(const std::string &body) {
  auto j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  return j;
}

}  // namespace

Response Service::put_knob(const std::string &id, const std::string &body) {
  auto *unit = find(id);
  if (!unit) return unknown_unit(id);
  const auto j = parse_body(body);
  if (!j) return invalid({{"body", "expected a JSON object"}});
  if (!j->contains("alpha") || !(*j)["alpha"].is_number()) {
    return invalid({{"alpha", "required number"}});
  }
  const double alpha = (*j)["alpha"].get<double>();
  if (!(alpha >= 0.0 && alpha <= 1.0)) return invalid({{"alpha", "must lie in [0, 1]"}});
  const double now = clock_();
  try {
    return update_cet(
        unit->mutex, unit->state, [&](cet::CETConfig &c) { c.alpha = alpha; },
        [&](UnitState &s) { persist_cet_locked(s, now); },
        [&](UnitState &s) { replan_locked(s, now); });
  } catch (const std::exception &e) {
    return error_response(e);
  }
}

Response Service::put_preference(const std::string &id, const std::string &body) {
  auto *unit = find(id);
  if (!unit) return unknown_unit(id);
  const auto j = parse_body(body);
  if (!j) return invalid({{"body", "expected a JSON object"}});
  std::vector<FieldError> errors;
  std::optional<double> preferred, band;
  if (j->contains("preferred_temp")) {
    const auto &v = (*j)["preferred_temp"];
    if (!v.is_number() || !thermal::in_envelope(v.get<double>())) {
      errors.push_back({"preferred_temp", "must be a temperature within the sanity envelope"});
    } else {
      preferred = v.get<double>();
    }
  }
  if (j->contains("band")) {
    const auto &v = (*j)["band"];
    if (!v.is_number() || !(v.get<double>() >= 0.0) || !std::isfinite(v.get<double>())) {
      errors.push_back({"band", "must be a non-negative number"});
    } else {
      band = v.get<double>();
    }
  }
  if (!preferred && !band && errors.empty()) {
    errors.push_back({"preferred_temp", "preferred_temp or band required"});
  }
  if (!errors.empty()) return invalid(errors);
  const double now = clock_();
  try {
    return update_cet(
        unit->mutex, unit->state,
        [&](cet::CETConfig &c) {
          if (preferred) c.preferred_temp = *preferred;
          if (band) c.band = *band;
        },
        [&](UnitState &s) { persist_cet_locked(s, now); },
        [&](UnitState &s) { replan_locked(s, now); });
  } catch (const std::exception &e) {
    return error_response(e);
  }
}

Response Service::put_model(const std::string &id, const std::string &body) {
  auto *unit = find(id);
  if (!unit) return unknown_unit(id);
  const auto j = parse_body(body);
  if (!j) return invalid({{"body", "expected a JSON object"}});
  fit::FitResult model;
  try {
    model = io::decode<fit::FitResult>(*j);
  } catch (const Error &e) {
    return invalid({{"body", e.what()}});
  }
  const double now = clock_();
  std::unique_lock lock(unit->mutex);
  auto &s = unit->state;
  if (model.preset != s.config.preset) {
    return invalid({{"preset", "unit uses " + std::string(thermal::to_string(s.config.preset))}});
  }
  if (!model.fitted()) return invalid({{"params", "empty"}});
  try {
    fit::assemble_model(s.tmpl, model.params);
  } catch (const Error &e) {
    return invalid({{"params", e.what()}});
  }
  try {
    if (!snapshots_.write("model-" + id, json(model), model.created_at)) {
      return {409, {{"error", "ModelMismatch"},
                    {"message", "active model is newer than the submitted one"}}};
    }
    log_.append(io::LogEntry{io::kind::kFitResult, id, key_of(model.created_at), now, json(model)});
    s.model = model;
    json out = {{"model", model_json(s.model, now)}, {"replanned", false}};
    try {
      replan_locked(s, now);
      out.update(plan_json(*s.plan));
      out["replanned"] = true;
    } catch (const Error &e) {
      s.plan.reset();
      out["reason"] = std::string(to_string(e.code()));
      out["message"] = e.what();
    }
    return {200, out};
  } catch (const std::exception &e) {
    return error_response(e);
  }
}

Response Service::whatif(const std::string &id, const std::optional<std::string> &duration_h,
                         const std::vector<std::string> &sets) {
  const auto *unit = find(id);
  if (!unit) return unknown_unit(id);
  std::vector<FieldError> errors;
  std::optional<double> hours;
  if (!duration_h) {
    errors.push_back({"duration_h", "required"});
  } else {
    hours = parse_double(*duration_h);
    if (!hours || !(*hours > 0.0) || *hours > kMaxWhatIfHours) {
      errors.push_back({"duration_h", "must be a number in (0, 168]"});
    }
  }
  std::vector<double> candidates;
  if (sets.empty()) errors.push_back({"set", "at least one candidate required"});
  for (const auto &text : sets) {
    const auto v = parse_double(text);
    if (!v || !thermal::in_envelope(*v)) {
      errors.push_back({"set", "'" + text + "' is not a valid set temperature"});
    } else {
      candidates.push_back(*v);
    }
  }
  if (!errors.empty()) return invalid(errors);

  const double now = clock_();
  std::shared_lock lock(unit->mutex);
  const auto &s = unit->state;
  try {
    if (!fit::is_fresh(s.model, now)) {
      throw Error(ErrorCode::StaleModel, "unit has no fitted model younger than 14 days");
    }
    const double duration = *hours * 3600.0;
    const auto forecast = forecast_for(s, now, duration);
    const auto room = fit::assemble_model(s.tmpl, s.model.params);
    const auto init = initial_state(s, room.network, now, forecast);
    const auto predictions =
        pacman::predict_energy(s.tmpl, s.model, now, forecast, candidates, duration, init);
    return {200, {{"unit", id},
                  {"duration_h", *hours},
                  {"start", now},
                  {"predictions", predictions}}};
  } catch (const std::exception &e) {
    return error_response(e);
  }
}

Response Service::post_observations(const std::string &id, const std::string &csv) {
  auto *unit = find(id);
  if (!unit) return unknown_unit(id);
  io::ParseResult parsed;
  try {
    std::istringstream in(csv);
    parsed = io::parse_observations(in, unit->state.tmpl.hysteresis.sensing_zone);
  } catch (const std::exception &e) {
    return error_response(e);
  }
  json rejects = json::array();
  for (const auto &r : parsed.rejects) rejects.push_back({{"line", r.line}, {"reason", r.reason}});

  const double now = clock_();
  std::unique_lock lock(unit->mutex);
  auto &s = unit->state;
  try {
    fit::ObservationSeries fresh;
    std::vector<io::LogEntry> entries;
    for (const auto &r : parsed.series) {
      if (has_timestamp(s.observations, r.timestamp)) continue;
      entries.push_back({io::kind::kObservation, id, key_of(r.timestamp), now, json(r)});
      fresh.push_back(r);
    }
    const auto written = log_.append(entries);
    const std::size_t duplicates = parsed.series.size() - fresh.size();
    json body = {{"accepted", written},
                 {"rejected", parsed.rejects.size()},
                 {"duplicates", duplicates},
                 {"rejects", rejects},
                 {"energy", nullptr},
                 {"alerts", json::array()}};
    if (fresh.empty()) return {200, body};

    const double from = fresh.front().timestamp;
    const double to = fresh.back().timestamp;
    merge_records(s.observations, std::move(fresh));
    try {
      const auto report =
          estimate_window(s.model, s.config.ac, fit::slice(s.observations, from, to + 1.0));
      log_.append(io::LogEntry{io::kind::kEnergyReport, id, key_of(from) + "/" + key_of(to), now,
                               json(report)});
      body["energy"] = report;
      body["energy"]["from"] = from;
      body["energy"]["to"] = to;
    } catch (const Error &e) {
      body["energy_error"] = e.what();
    }
    body["alerts"] = score_days_locked(s, now);
    return {200, body};
  } catch (const std::exception &e) {
    return error_response(e);
  }
}

Response Service::energy(const std::string &id, const std::optional<std::string> &from,
                         const std::optional<std::string> &to) const {
  const auto *unit = find(id);
  if (!unit) return unknown_unit(id);
  std::vector<FieldError> errors;
  std::optional<double> t0, t1;
  if (from && !(t0 = parse_time(*from))) errors.push_back({"from", "expected RFC 3339 or epoch seconds"});
  if (to && !(t1 = parse_time(*to))) errors.push_back({"to", "expected RFC 3339 or epoch seconds"});
  if (t0 && t1 && !(*t1 > *t0)) errors.push_back({"to", "must be after from"});
  if (!errors.empty()) return invalid(errors);

  std::shared_lock lock(unit->mutex);
  const auto &s = unit->state;
  if (s.observations.empty()) return invalid({{"from", "unit has no observations"}});
  const double a = t0.value_or(s.observations.front().timestamp);
  const double b = t1.value_or(s.observations.back().timestamp + 1.0);
  try {
    const auto window = fit::slice(s.observations, a, b);
    json body = estimate_window(s.model, s.config.ac, window);
    body["from"] = a;
    body["to"] = b;
    body["records"] = window.size();
    return {200, body};
  } catch (const std::exception &e) {
    return error_response(e);
  }
}

Response Service::health(const std::string &id) const {
  const auto *unit = find(id);
  if (!unit) return unknown_unit(id);
  std::shared_lock lock(unit->mutex);
  const auto &s = unit->state;
  const auto &d = s.monitor.detector;
  json body = {{"unit", id},
               {"features", s.latest_features ? json(*s.latest_features) : json(nullptr)},
               {"cusum", d.cusum},
               {"state", std::string(greina::to_string(d.state))},
               {"alarm_date", d.alarm_date ? json(*d.alarm_date) : json(nullptr)},
               {"valid_days", s.monitor.valid_days},
               {"alerts", s.alerts},
               {"counterfactual", nullptr}};
  if (d.state == greina::DetectorState::alarmed && s.model.fitted()) {
    try {
      const auto window =
          fit::slice(s.observations, *d.alarm_date, s.observations.back().timestamp + 1.0);
      std::vector<greina::HealthFeatures> days;
      std::copy_if(s.history.begin(), s.history.end(), std::back_inserter(days),
                   [&](const auto &f) { return f.date >= *d.alarm_date; });
      body["counterfactual"] = greina::counterfactual_report(
          with_flags(s.model, s.config.ac, window), s.model, s.config.ac, days, d);
    } catch (const Error &e) {
      body["counterfactual_error"] = e.what();
    }
  }
  return {200, body};
}

Response Service::get_plan(const std::string &id) {
  auto *unit = find(id);
  if (!unit) return unknown_unit(id);
  const double now = clock_();
  auto current = [&](const UnitState &s) {
    return s.plan && s.plan->cet == s.cet && now - s.plan->planned_at < config_.replan_interval;
  };
  try {
    {
      std::shared_lock lock(unit->mutex);
      const auto &s = unit->state;
      if (!fit::is_fresh(s.model, now)) {
        throw Error(ErrorCode::StaleModel, "unit has no fitted model younger than 14 days");
      }
      if (current(s)) return {200, plan_json(*s.plan)};
    }
    std::unique_lock lock(unit->mutex);
    auto &s = unit->state;
    if (!current(s)) replan_locked(s, now);
    return {200, plan_json(*s.plan)};
  } catch (const std::exception &e) {
    return error_response(e);
  }
}

void Service::tick() {
  const double now = clock_();
  for (auto &[id, unit] : units_) {
    std::unique_lock lock(unit->mutex);
    auto &s = unit->state;
    if (!fit::is_fresh(s.model, now)) continue;
    if (s.plan && now - s.plan->planned_at < config_.replan_interval) continue;
    try {
      replan_locked(s, now);
    } catch (const std::exception &e) {
      std::cerr << "smartstat: replan of '" << id << "' failed: " << e.what() << "\n";
    }
  }
}

}  // namespace smartstat::service
