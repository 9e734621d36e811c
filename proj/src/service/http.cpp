#include "smartstat/service/service.hpp"

#include <httplib.h>

#include <exception>

namespace smartstat::service {
namespace {

constexpr const char *kUnit = R"(/api/units/([^/]+))";

void reply(httplib::Response &res, const Response &r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

std::optional<std::string> param(const httplib::Request &req, const char *name) {
  if (!req.has_param(name)) return std::nullopt;
  return req.get_param_value(name);
}

}  // namespace

void routes(httplib::Server &server, Service &service) {
  const std::string unit = kUnit;
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server.Options(R"(/api/.*)", [](const httplib::Request &, httplib::Response &res) {
    res.set_header("Access-Control-Allow-Methods", "GET, PUT, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  server.Get("/api/units", [&](const httplib::Request &, httplib::Response &res) {
    reply(res, service.units());
  });
  server.Get(unit + "/state", [&](const httplib::Request &req, httplib::Response &res) {
    reply(res, service.state(req.matches[1]));
  });
  server.Put(unit + "/knob", [&](const httplib::Request &req, httplib::Response &res) {
    reply(res, service.put_knob(req.matches[1], req.body));
  });
  server.Put(unit + "/preference", [&](const httplib::Request &req, httplib::Response &res) {
    reply(res, service.put_preference(req.matches[1], req.body));
  });
  server.Put(unit + "/model", [&](const httplib::Request &req, httplib::Response &res) {
    reply(res, service.put_model(req.matches[1], req.body));
  });
  server.Get(unit + "/whatif", [&](const httplib::Request &req, httplib::Response &res) {
    std::vector<std::string> sets;
    for (std::size_t i = 0; i < req.get_param_value_count("set"); ++i) {
      sets.push_back(req.get_param_value("set", i));
    }
    reply(res, service.whatif(req.matches[1], param(req, "duration_h"), sets));
  });
  server.Post(unit + "/observations", [&](const httplib::Request &req, httplib::Response &res) {
    reply(res, service.post_observations(req.matches[1], req.body));
  });
  server.Get(unit + "/energy", [&](const httplib::Request &req, httplib::Response &res) {
    reply(res, service.energy(req.matches[1], param(req, "from"), param(req, "to")));
  });
  server.Get(unit + "/health", [&](const httplib::Request &req, httplib::Response &res) {
    reply(res, service.health(req.matches[1]));
  });
  server.Get(unit + "/plan", [&](const httplib::Request &req, httplib::Response &res) {
    reply(res, service.get_plan(req.matches[1]));
  });

  server.set_exception_handler(
      [](const httplib::Request &, httplib::Response &res, std::exception_ptr ep) {
        try {
          std::rethrow_exception(ep);
        } catch (const std::exception &e) {
          reply(res, error_response(e));
        } catch (...) {
          reply(res, {500, {{"error", "InternalError"}, {"message", "unknown exception"}}});
        }
      });
  server.set_error_handler([](const httplib::Request &, httplib::Response &res) {
    if (res.body.empty()) {
      res.set_content(nlohmann::json{{"error", "NotFound"}, {"status", res.status}}.dump(),
                      "application/json");
    }
  });
}

}  // namespace smartstat::service
