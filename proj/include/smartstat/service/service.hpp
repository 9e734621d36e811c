#pragma once

// Unit registry and the request handlers behind the HTTP API. Handlers are
// transport-free (status + JSON) so tests can drive them directly; routes()
// binds them to an httplib server.

#include "smartstat/cet/control.hpp"
#include "smartstat/fit/greybox.hpp"
#include "smartstat/greina/health.hpp"
#include "smartstat/io/forecast.hpp"
#include "smartstat/io/record_log.hpp"
#include "smartstat/service/config.hpp"

#include <json.hpp>

#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace httplib {
class Server;
}

namespace smartstat::service {

struct Response {
  int status = 200;
  nlohmann::json body;
};

struct ActivePlan {
  cet::Plan plan;
  cet::CETConfig cet;
  double planned_at = 0.0;
};

/// Everything the service holds for one AC unit. Mutations are serialized
/// by the unit's lock; readers share it and never see a half-applied update.
struct UnitState {
  UnitConfig config;
  fit::ModelTemplate tmpl;
  fit::FitResult model;  // empty params: unfitted
  cet::CETConfig cet;
  std::optional<ActivePlan> plan;
  fit::ObservationSeries observations;
  greina::UnitMonitor monitor;
  std::optional<greina::HealthFeatures> latest_features;
  std::vector<greina::HealthFeatures> history;  // every scored day, in date order
  std::optional<double> last_scored_day;
  std::vector<greina::Alert> alerts;
};

class Service {
 public:
  explicit Service(ServiceConfig config, io::Clock clock = io::system_clock(),
                   io::HttpTransport transport = io::default_transport());
  ~Service();

  Service(const Service &) = delete;
  Service &operator=(const Service &) = delete;

  Response units() const;
  Response state(const std::string &id) const;
  Response put_knob(const std::string &id, const std::string &body);
  Response put_preference(const std::string &id, const std::string &body);
  Response put_model(const std::string &id, const std::string &body);
  Response whatif(const std::string &id, const std::optional<std::string> &duration_h,
                  const std::vector<std::string> &sets);
  Response post_observations(const std::string &id, const std::string &csv);
  Response energy(const std::string &id, const std::optional<std::string> &from,
                  const std::optional<std::string> &to) const;
  Response health(const std::string &id) const;
  Response get_plan(const std::string &id);

  /// Replans every unit whose plan is older than the replan interval.
  void tick();

  [[nodiscard]] const ServiceConfig &config() const { return config_; }
  [[nodiscard]] const io::ForecastClient &forecast() const { return forecast_; }

 private:
  struct Unit {
    mutable std::shared_mutex mutex;
    UnitState state;
  };

  Unit *find(const std::string &id) const;
  void restore(Unit &unit, const io::LoadResult &log);
  void replan_locked(UnitState &s, double now);
  void persist_cet_locked(const UnitState &s, double now);
  nlohmann::json score_days_locked(UnitState &s, double now);
  thermal::PlantState initial_state(const UnitState &s, const thermal::RCNetwork &network,
                                    double now, const TimeSeries &forecast) const;
  TimeSeries forecast_for(const UnitState &s, double now, double seconds) const;

  ServiceConfig config_;
  io::Clock clock_;
  mutable io::ForecastClient forecast_;
  io::RecordLog log_;
  io::SnapshotStore snapshots_;
  std::map<std::string, std::unique_ptr<Unit>> units_;
};

/// Maps library errors to HTTP statuses: validation 422, StaleModel 409,
/// provider trouble 503, anything else 500.
Response error_response(const std::exception &e);

/// Binds the /api routes to `server`.
void routes(httplib::Server &server, Service &service);

}  // namespace smartstat::service
