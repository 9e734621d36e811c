#include "smartstat/io/forecast.hpp"

#include "smartstat/error.hpp"
#include "smartstat/io/csv.hpp"
#include "smartstat/io/json.hpp"
#include "smartstat/io/resample.hpp"

#include <httplib.h>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace smartstat::io {
namespace {

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

void replace_all(std::string &s, std::string_view from, const std::string &to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

const nlohmann::json &at_path(const nlohmann::json &doc, const std::string &path) {
  const nlohmann::json *node = &doc;
  std::size_t start = 0;
  while (start <= path.size()) {
    const auto dot = path.find('.', start);
    const auto key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(key)) {
      throw_schema_error("mapped field '" + path + "' is absent");
    }
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (!node->is_array()) throw_schema_error("mapped field '" + path + "' is not an array");
  return *node;
}

}  // namespace

void WeatherProvider::validate() const {
  if (kind == ProviderKind::file) {
    if (path.empty()) throw Error(ErrorCode::InvalidParameter, "file provider without a path");
    if (!url_template.empty()) {
      throw Error(ErrorCode::InvalidParameter, "file provider must not set a URL");
    }
  } else {
    if (url_template.empty()) throw Error(ErrorCode::InvalidParameter, "http provider without a URL");
    if (!path.empty()) throw Error(ErrorCode::InvalidParameter, "http provider must not set a path");
    if (!(timeout_s > 0.0)) throw Error(ErrorCode::InvalidParameter, "timeout must be positive");
  }
  if (!(ttl_s >= 0.0) || !std::isfinite(ttl_s)) {
    throw Error(ErrorCode::InvalidParameter, "cache TTL must be >= 0");
  }
  if (fields.timestamp.empty() || fields.temperature.empty()) {
    throw Error(ErrorCode::InvalidParameter, "field mapping incomplete");
  }
}

std::string expand_url(const std::string &url_template, double lat, double lon, int hours) {
  std::string url = url_template;
  replace_all(url, "{lat}", shortest(lat));
  replace_all(url, "{lon}", shortest(lon));
  replace_all(url, "{hours}", std::to_string(hours));
  return url;
}

TimeSeries parse_forecast(const std::string &body, const FieldMapping &fields) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error &e) {
    throw_schema_error(std::string("forecast is not JSON: ") + e.what());
  }
  const auto &times = at_path(doc, fields.timestamp);
  const auto &temps = at_path(doc, fields.temperature);
  if (times.size() != temps.size()) throw_schema_error("timestamp and temperature arrays differ");
  if (times.empty()) throw_schema_error("forecast has no points");
  TimeSeries series;
  for (std::size_t i = 0; i < times.size(); ++i) {
    double t = 0.0;
    if (times[i].is_number()) {
      t = times[i].get<double>();
    } else if (times[i].is_string()) {
      try {
        t = parse_rfc3339(times[i].get<std::string>());
      } catch (const Error &e) {
        throw_schema_error(e.what());
      }
    } else {
      throw_schema_error("timestamp " + std::to_string(i) + " is neither number nor string");
    }
    if (!temps[i].is_number()) throw_schema_error("temperature " + std::to_string(i) + " is not a number");
    if (!series.empty() && !(t > series.back_time())) throw_schema_error("timestamps not increasing");
    series.push_back(t, temps[i].get<double>());
  }
  bool hourly = true;
  for (std::size_t i = 1; i < series.size(); ++i) hourly &= series.t[i] - series.t[i - 1] == 3600.0;
  return hourly ? series : resample(series, 3600.0);
}

HttpTransport default_transport() {
  return [](const std::string &url, double timeout_s) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
      throw Error(ErrorCode::ProviderUnavailable, "URL without scheme: " + url);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string origin = url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
    httplib::Client client(origin);
    if (!client.is_valid()) throw Error(ErrorCode::ProviderUnavailable, "unsupported URL: " + url);
    const auto usec = std::chrono::microseconds(static_cast<long long>(timeout_s * 1e6));
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(usec).count(),
                                  static_cast<time_t>(usec.count() % 1000000));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(usec).count(),
                            static_cast<time_t>(usec.count() % 1000000));
    client.set_follow_location(true);
    const auto res = client.Get(path);
    if (!res) {
      throw Error(ErrorCode::ProviderUnavailable, url + ": " + httplib::to_string(res.error()));
    }
    return HttpResponse{res->status, res->body};
  };
}

Clock system_clock() {
  return [] {
    using namespace std::chrono;
    return duration<double>(system_clock::now().time_since_epoch()).count();
  };
}

ForecastClient::ForecastClient(WeatherProvider provider, Clock clock, HttpTransport transport)
    : provider_(std::move(provider)), clock_(std::move(clock)), transport_(std::move(transport)) {
  provider_.validate();
}

TimeSeries ForecastClient::load(const std::string &key) const {
  std::string body;
  if (provider_.kind == ProviderKind::file) {
    std::ifstream in(key, std::ios::binary);
    if (!in) throw Error(ErrorCode::ProviderUnavailable, "cannot read " + key);
    std::ostringstream ss;
    ss << in.rdbuf();
    body = ss.str();
  } else {
    const auto res = transport_(key, provider_.timeout_s);
    if (res.status < 200 || res.status >= 300) {
      throw Error(ErrorCode::ProviderUnavailable, key + ": HTTP " + std::to_string(res.status));
    }
    body = res.body;
  }
  return parse_forecast(body, provider_.fields);
}

TimeSeries ForecastClient::fetch(double lat, double lon, int horizon_h, std::optional<double> from) {
  if (horizon_h < 1) throw Error(ErrorCode::InvalidParameter, "horizon must be at least 1 h");
  const std::string key = provider_.kind == ProviderKind::file
                              ? provider_.path
                              : expand_url(provider_.url_template, lat, lon, horizon_h);
  TimeSeries full;
  {
    std::lock_guard lock(mutex_);
    const double now = clock_();
    auto it = cache_.find(key);
    if (it == cache_.end() || now - it->second.fetched_at >= provider_.ttl_s) {
      ++hits_;
      auto series = load(key);
      it = cache_.insert_or_assign(key, Entry{now, std::move(series)}).first;
    }
    full = it->second.series;
  }
  std::size_t first = 0;
  if (from) {
    while (first + 1 < full.size() && full.t[first + 1] <= *from) ++first;
    if (full.t[first] > *from) throw Error(ErrorCode::CoverageError, "forecast starts after the requested time");
  }
  if (full.size() - first < static_cast<std::size_t>(horizon_h)) {
    throw Error(ErrorCode::CoverageError, "forecast has " + std::to_string(full.size() - first) +
                                              " points, need " + std::to_string(horizon_h));
  }
  TimeSeries out;
  out.t.assign(full.t.begin() + first, full.t.begin() + first + horizon_h);
  out.v.assign(full.v.begin() + first, full.v.begin() + first + horizon_h);
  return out;
}

std::size_t ForecastClient::provider_hits() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

TimeSeries fetch_forecast(const WeatherProvider &provider, double lat, double lon, int horizon_h,
                          std::optional<double> from) {
  WeatherProvider uncached = provider;
  uncached.ttl_s = 0.0;
  return ForecastClient(uncached).fetch(lat, lon, horizon_h, from);
}

}  // namespace smartstat::io
