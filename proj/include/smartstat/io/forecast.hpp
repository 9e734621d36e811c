#pragma once

// Outdoor temperature forecasts from a file or an HTTP weather service.
// Both read the same JSON document: a timestamp array and a temperature
// array located by dot paths (e.g. "hourly.time").

#include "smartstat/timeseries.hpp"

#include <cstddef>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>

namespace smartstat::io {

enum class ProviderKind { file, http };

struct FieldMapping {
  std::string timestamp = "hourly.time";
  std::string temperature = "hourly.temperature_2m";
};

struct WeatherProvider {
  ProviderKind kind = ProviderKind::file;
  std::string path;          // file
  std::string url_template;  // http, with {lat} {lon} {hours}
  FieldMapping fields;
  double timeout_s = 10.0;
  double ttl_s = 900.0;

  void validate() const;
};

/// Template with the placeholders substituted.
std::string expand_url(const std::string &url_template, double lat, double lon, int hours);

/// Hourly series from a provider document. Timestamps may be epoch seconds
/// or RFC 3339 strings. Throws SchemaError when a mapped field is absent or
/// malformed.
TimeSeries parse_forecast(const std::string &body, const FieldMapping &fields);

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// GET `url`; throws ProviderUnavailable when the request cannot complete.
using HttpTransport = std::function<HttpResponse(const std::string &url, double timeout_s)>;
HttpTransport default_transport();

/// Seconds since epoch.
using Clock = std::function<double()>;
Clock system_clock();

/// Caches one document per expanded request for ttl_s. Safe to share
/// between threads; a refresh holds the cache exclusively.
class ForecastClient {
 public:
  explicit ForecastClient(WeatherProvider provider, Clock clock = system_clock(),
                          HttpTransport transport = default_transport());

  /// horizon_h hourly points, starting at the last one not after `from`
  /// (the first point when absent). Throws ProviderUnavailable when the
  /// provider fails and no fresh cache exists, CoverageError when too few
  /// points remain.
  TimeSeries fetch(double lat, double lon, int horizon_h,
                   std::optional<double> from = std::nullopt);

  /// Requests that reached the provider (file reads included).
  [[nodiscard]] std::size_t provider_hits() const;

  [[nodiscard]] const WeatherProvider &provider() const { return provider_; }

 private:
  struct Entry {
    double fetched_at = 0.0;
    TimeSeries series;
  };

  TimeSeries load(const std::string &key) const;

  WeatherProvider provider_;
  Clock clock_;
  HttpTransport transport_;
  mutable std::mutex mutex_;
  std::map<std::string, Entry> cache_;
  std::size_t hits_ = 0;
};

/// One uncached fetch.
TimeSeries fetch_forecast(const WeatherProvider &provider, double lat, double lon, int horizon_h,
                          std::optional<double> from = std::nullopt);

}  // namespace smartstat::io
