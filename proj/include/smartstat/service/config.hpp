#pragma once

// Declarative service configuration (one JSON file) with environment
// overrides SMARTSTAT_PROVIDER_URL and SMARTSTAT_LISTEN (host:port).

#include "smartstat/cet/control.hpp"
#include "smartstat/fit/greybox.hpp"
#include "smartstat/greina/health.hpp"
#include "smartstat/io/forecast.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace smartstat::service {

struct UnitConfig {
  std::string id;
  thermal::Preset preset = thermal::Preset::three_region;
  thermal::ACUnit ac;
  thermal::HysteresisConfig hysteresis;
  cet::CETConfig cet;
  double lat = 0.0;
  double lon = 0.0;
  std::optional<fit::FitResult> model;  // initial model, e.g. from `smartstat fit`

  [[nodiscard]] fit::ModelTemplate model_template() const;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir = "smartstat-data";
  io::WeatherProvider provider;
  double replan_interval = 3600.0;  // s
  greina::MonitorConfig monitor;
  std::vector<UnitConfig> units;

  void validate() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string &)>;
EnvLookup process_env();

/// Relative paths (data_dir, provider path, unit model files) resolve
/// against `base`. Throws SchemaError or InvalidParameter.
ServiceConfig parse_config(const nlohmann::json &doc, const std::filesystem::path &base = {},
                           const EnvLookup &env = process_env());

ServiceConfig load_config(const std::filesystem::path &path, const EnvLookup &env = process_env());

}  // namespace smartstat::service
