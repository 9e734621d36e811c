#include "smartstat/service/config.hpp"

#include "smartstat/error.hpp"
#include "smartstat/io/json.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>

namespace smartstat::service {
namespace {

using nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path &base, const std::string &p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

io::WeatherProvider parse_provider(const json &j, const std::filesystem::path &base) {
  io::WeatherProvider p;
  const auto kind = j.value("kind", std::string("file"));
  if (kind == "file") {
    p.kind = io::ProviderKind::file;
  } else if (kind == "http") {
    p.kind = io::ProviderKind::http;
  } else {
    io::throw_schema_error("provider kind must be file or http, got '" + kind + "'");
  }
  if (j.contains("path")) p.path = resolve(base, j.at("path").get<std::string>()).string();
  p.url_template = j.value("url_template", p.url_template);
  if (j.contains("fields")) {
    const auto &f = j.at("fields");
    p.fields.timestamp = f.value("timestamp", p.fields.timestamp);
    p.fields.temperature = f.value("temperature", p.fields.temperature);
  }
  p.timeout_s = j.value("timeout_s", p.timeout_s);
  p.ttl_s = j.value("ttl_s", p.ttl_s);
  return p;
}

void parse_listen(const std::string &text, ServiceConfig &cfg) {
  const auto colon = text.rfind(':');
  std::string port = text;
  if (colon != std::string::npos) {
    if (colon > 0) cfg.host = text.substr(0, colon);
    port = text.substr(colon + 1);
  }
  try {
    std::size_t used = 0;
    cfg.port = std::stoi(port, &used);
    if (used != port.size()) throw std::invalid_argument(port);
  } catch (const std::logic_error &) {
    throw Error(ErrorCode::InvalidParameter, "listen address '" + text + "' has no valid port");
  }
}

void apply_defaults(UnitConfig &unit, const json &defaults) {
  if (defaults.contains("ac")) defaults.at("ac").get_to(unit.ac);
  if (defaults.contains("hysteresis")) defaults.at("hysteresis").get_to(unit.hysteresis);
  if (defaults.contains("cet")) defaults.at("cet").get_to(unit.cet);
}

}  // namespace

fit::ModelTemplate UnitConfig::model_template() const {
  auto tmpl = fit::ModelTemplate::for_preset(preset);
  tmpl.ac = ac;
  const auto zone = tmpl.hysteresis.sensing_zone;
  tmpl.hysteresis = hysteresis;
  if (tmpl.hysteresis.sensing_zone.empty()) tmpl.hysteresis.sensing_zone = zone;
  return tmpl;
}

void ServiceConfig::validate() const {
  if (port < 0 || port > 65535) throw Error(ErrorCode::InvalidParameter, "port out of range");
  if (!(replan_interval > 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "replan interval must be positive");
  }
  provider.validate();
  std::set<std::string> ids;
  for (const auto &u : units) {
    if (u.id.empty()) throw Error(ErrorCode::InvalidParameter, "unit without id");
    if (u.id.find('/') != std::string::npos) {
      throw Error(ErrorCode::InvalidParameter, "unit id '" + u.id + "' contains '/'");
    }
    if (!ids.insert(u.id).second) {
      throw Error(ErrorCode::InvalidParameter, "duplicate unit id '" + u.id + "'");
    }
    u.ac.validate();
    u.hysteresis.validate();
    u.cet.validate();
    const auto zones = thermal::preset_zones(u.preset);
    for (const auto &zone : {u.hysteresis.sensing_zone, u.cet.comfort_zone}) {
      if (std::find(zones.begin(), zones.end(), zone) == zones.end()) {
        throw Error(ErrorCode::UnknownZone,
                    "unit '" + u.id + "': zone '" + zone + "' is not in its preset");
      }
    }
    if (u.model && u.model->fitted() && u.model->preset != u.preset) {
      throw Error(ErrorCode::ModelMismatch, "unit '" + u.id + "': model preset differs");
    }
  }
}

EnvLookup process_env() {
  return [](const std::string &name) -> std::optional<std::string> {
    if (const char *v = std::getenv(name.c_str()); v && *v) return std::string(v);
    return std::nullopt;
  };
}

ServiceConfig parse_config(const json &doc, const std::filesystem::path &base,
                           const EnvLookup &env) {
  ServiceConfig cfg;
  try {
    if (doc.contains("listen")) parse_listen(doc.at("listen").get<std::string>(), cfg);
    if (doc.contains("data_dir")) cfg.data_dir = resolve(base, doc.at("data_dir").get<std::string>());
    else cfg.data_dir = resolve(base, cfg.data_dir.string());
    if (doc.contains("provider")) cfg.provider = parse_provider(doc.at("provider"), base);
    cfg.replan_interval = doc.value("replan_interval_s", cfg.replan_interval);
    if (doc.contains("monitor")) doc.at("monitor").get_to(cfg.monitor);
    const json defaults = doc.value("defaults", json::object());
    for (const auto &u : doc.value("units", json::array())) {
      UnitConfig unit;
      unit.id = u.at("id").get<std::string>();
      unit.preset = thermal::preset_from_string(u.value("preset", std::string("three_region")));
      const auto tmpl = fit::ModelTemplate::for_preset(unit.preset);
      unit.hysteresis.sensing_zone = tmpl.hysteresis.sensing_zone;
      if (unit.preset == thermal::Preset::single_zone) unit.cet.comfort_zone = thermal::kRoom;
      apply_defaults(unit, defaults);
      apply_defaults(unit, u);
      unit.lat = u.value("lat", 0.0);
      unit.lon = u.value("lon", 0.0);
      if (u.contains("model")) {
        unit.model = u.at("model").get<fit::FitResult>();
      } else if (u.contains("model_file")) {
        const auto path = resolve(base, u.at("model_file").get<std::string>());
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::InvalidParameter, "cannot read model file " + path.string());
        unit.model = json::parse(in).get<fit::FitResult>();
      }
      cfg.units.push_back(std::move(unit));
    }
  } catch (const json::exception &e) {
    io::throw_schema_error(std::string("config: ") + e.what());
  }
  if (const auto url = env("SMARTSTAT_PROVIDER_URL")) {
    cfg.provider.kind = io::ProviderKind::http;
    cfg.provider.url_template = *url;
    cfg.provider.path.clear();
  }
  if (const auto listen = env("SMARTSTAT_LISTEN")) parse_listen(*listen, cfg);
  cfg.validate();
  return cfg;
}

ServiceConfig load_config(const std::filesystem::path &path, const EnvLookup &env) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidParameter, "cannot read config " + path.string());
  const auto doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) io::throw_schema_error("config " + path.string() + " is not JSON");
  return parse_config(doc, path.parent_path(), env);
}

}  // namespace smartstat::service
