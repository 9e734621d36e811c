#include "cli.hpp"

#include "smartstat/campaign/acceptance.hpp"
#include "smartstat/campaign/benchmark.hpp"
#include "smartstat/cet/control.hpp"
#include "smartstat/error.hpp"
#include "smartstat/fit/greybox.hpp"
#include "smartstat/io/csv.hpp"
#include "smartstat/io/forecast.hpp"
#include "smartstat/io/json.hpp"
#include "smartstat/io/record_log.hpp"
#include "smartstat/pacman/energy.hpp"
#include "smartstat/service/analysis.hpp"
#include "smartstat/service/config.hpp"
#include "smartstat/service/service.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <csignal>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <system_error>
#include <thread>

namespace smartstat::cli {
namespace {

using nlohmann::json;

std::string read_text(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::system_error(errno, std::generic_category(), "cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json(const std::string &path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error &e) {
    throw Error(ErrorCode::SchemaError, path + ": " + e.what());
  }
}

/// Writes to `path`, or to `out` when the path is empty or "-".
void emit(const std::string &path, const std::string &text, std::ostream &out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::system_error(errno, std::generic_category(), "cannot write " + path);
  f << text;
  if (!f.flush()) throw std::system_error(errno, std::generic_category(), "cannot write " + path);
}

double parse_time(const std::string &s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec == std::errc() && p == s.data() + s.size()) return v;
  return io::parse_rfc3339(s);
}

thermal::Preset parse_preset(const std::string &name) {
  const auto p = thermal::preset_from_string(name);
  if (p == thermal::Preset::custom) {
    throw Error(ErrorCode::InvalidParameter, "preset must be single_zone or three_region");
  }
  return p;
}

/// FitResult document, or a bare {name: value} parameter map.
fit::FitResult load_model(const std::string &path, std::optional<thermal::Preset> preset = {}) {
  const auto doc = read_json(path);
  fit::FitResult f;
  if (doc.contains("params")) {
    f = io::decode<fit::FitResult>(doc);
  } else {
    f.params = io::decode<fit::ParamMap>(doc);
    f.preset = preset.value_or(thermal::Preset::three_region);
  }
  if (preset && f.preset != *preset) {
    throw Error(ErrorCode::ModelMismatch, "model preset is " +
                                              std::string(thermal::to_string(f.preset)) +
                                              ", expected " +
                                              std::string(thermal::to_string(*preset)));
  }
  if (!f.fitted()) throw Error(ErrorCode::InvalidParameter, path + ": no parameters");
  return f;
}

TimeSeries load_weather(const std::string &path) {
  return io::parse_forecast(read_text(path), io::FieldMapping{});
}

thermal::ACUnit load_ac(const std::string &path) {
  if (path.empty()) return campaign::benchmark_ac();
  auto ac = campaign::benchmark_ac();
  read_json(path).get_to(ac);
  ac.validate();
  return ac;
}

fit::ObservationSeries load_observations(const std::string &path, std::string_view room_zone,
                                         std::ostream &err) {
  std::istringstream in(read_text(path));
  auto parsed = io::parse_observations(in, room_zone);
  for (const auto &r : parsed.rejects) {
    err << "warning: " << path << ":" << r.line << ": " << r.reason << '\n';
  }
  if (parsed.series.empty()) throw Error(ErrorCode::EmptyInput, path + ": no usable rows");
  return parsed.series;
}

fit::ModelTemplate model_template(thermal::Preset preset, const thermal::ACUnit &ac) {
  auto tmpl = fit::ModelTemplate::for_preset(preset);
  tmpl.ac = ac;
  return tmpl;
}

std::string default_comfort_zone(thermal::Preset preset) {
  return preset == thermal::Preset::single_zone ? std::string(thermal::kRoom)
                                                : std::string(thermal::kMir);
}

/// Uniform start at `init_temp`, or at the outdoor temperature when unset.
thermal::PlantState start_state(const thermal::RCNetwork &network, const TimeSeries &weather,
                                double start, std::optional<double> init_temp) {
  return {thermal::uniform_state(network, start, init_temp.value_or(weather.value_at(start))),
          {}};
}

struct Forecasting {
  std::string model;
  std::string forecast;
  std::string ac;
  std::string start;
  std::optional<double> init_temp;
};

void add_forecasting(CLI::App *cmd, Forecasting &f) {
  cmd->add_option("--model", f.model, "FitResult JSON")->required()->check(CLI::ExistingFile);
  cmd->add_option("--forecast", f.forecast, "Hourly weather JSON (hourly.time, hourly.temperature_2m)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--ac", f.ac, "ACUnit JSON (default: 3500 W / 1200 W / 50 W fan)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--start", f.start, "Start time, RFC 3339 or epoch seconds (default: forecast start)");
  cmd->add_option("--init-temp", f.init_temp, "Initial room temperature (default: outdoor)");
}

double start_time(const Forecasting &f, const TimeSeries &weather) {
  return f.start.empty() ? weather.front_time() : parse_time(f.start);
}

// simulate ----------------------------------------------------------------

struct SimulateArgs {
  std::string preset;
  std::string params;
  std::string weather;
  std::string out;
  std::string ac;
  std::string schedule;
  std::optional<double> set_temp;
  std::optional<double> hours;
  std::string start;
  std::optional<double> init_temp;
  double dt = 60.0;
  double noise_w = 0.0;
  std::uint64_t seed = 0;
};

int simulate(const SimulateArgs &a, std::ostream &out) {
  const auto preset = parse_preset(a.preset);
  const auto ac = load_ac(a.ac);
  const auto tmpl = model_template(preset, ac);
  const auto model = fit::assemble_model(tmpl, load_model(a.params, preset).params);
  const auto weather = load_weather(a.weather);
  const double start = a.start.empty() ? weather.front_time() : parse_time(a.start);

  thermal::SetpointSchedule schedule = thermal::SetpointSchedule::constant(a.set_temp);
  if (!a.schedule.empty()) schedule = io::decode<thermal::SetpointSchedule>(read_json(a.schedule));

  thermal::SimulationOptions opt;
  opt.dt = a.dt;
  opt.horizon = a.hours ? *a.hours * 3600.0 : weather.back_time() - start;
  if (a.noise_w > 0.0) {
    opt.noise = thermal::NoiseModel{};
    opt.noise.sigma_W = a.noise_w;
    opt.noise.seed = a.seed;
  }
  if (model.internal_gain.size() != 0) opt.noise.mean_W = model.internal_gain;
  const auto trace = thermal::simulate(model.network,
                                       start_state(model.network, weather, start, a.init_temp),
                                       weather, schedule, model.ac, tmpl.hysteresis, opt);

  campaign::ObserveOptions obs;
  obs.zones = thermal::preset_room_zones(preset);
  obs.with_power = true;
  obs.electrical_power = ac.rated_electrical_power;
  obs.fan_power = ac.fan_power;
  std::ostringstream csv;
  io::write_observations(csv, campaign::observe(trace, obs), tmpl.hysteresis.sensing_zone);
  emit(a.out, csv.str(), out);
  if (!a.out.empty() && a.out != "-") {
    int cycles = 0;
    for (std::size_t k = 1; k < trace.size(); ++k) {
      cycles += trace.compressor_on[k] && !trace.compressor_on[k - 1];
    }
    out << "wrote " << trace.size() << " samples to " << a.out << "; " << std::fixed
        << std::setprecision(3) << cet::energy_of(trace, ac) << " kWh, " << cycles
        << " compressor cycles\n";
  }
  return kExitOk;
}

// fit ---------------------------------------------------------------------

struct FitArgs {
  std::string observations;
  std::string preset = "single_zone";
  std::string out;
  std::string ac;
  std::optional<double> created_at;
  int starts = 8;
  int max_iter = 100;
  std::uint64_t seed = 1;
  bool fit_cooling = false;
  bool fit_gain = false;
};

int fit_command(const FitArgs &a, std::ostream &out, std::ostream &err) {
  const auto preset = parse_preset(a.preset);
  const auto tmpl = model_template(preset, load_ac(a.ac));
  const auto series =
      service::on_grid(load_observations(a.observations, tmpl.hysteresis.sensing_zone, err));
  fit::FitOptions options;
  options.multi_start = a.starts;
  options.max_iter = a.max_iter;
  options.seed = a.seed;
  fit::SpecOptions spec_options;
  spec_options.fit_cooling = a.fit_cooling;
  spec_options.fit_gain = a.fit_gain;
  spec_options.fit_door = std::any_of(series.begin(), series.end(),
                                      [](const auto &r) { return r.door_open; });
  auto result =
      fit::fit_params(tmpl, series, fit::default_param_spec(tmpl, series, spec_options), options);
  result.created_at = a.created_at.value_or(result.window_end);
  emit(a.out, json(result).dump(2) + "\n", out);
  err << "rmse " << result.rmse << " degC after " << result.iterations << " iterations"
      << (result.converged ? "" : " (not converged)") << '\n';
  return kExitOk;
}

// plan --------------------------------------------------------------------

struct PlanArgs {
  Forecasting f;
  double alpha = 0.5;
  std::string config;
  std::optional<double> preferred;
  std::optional<double> band;
  std::string out;
};

int plan_command(const PlanArgs &a, std::ostream &out) {
  const auto model = load_model(a.f.model);
  const auto tmpl = model_template(model.preset, load_ac(a.f.ac));
  const auto weather = load_weather(a.f.forecast);
  const double start = start_time(a.f, weather);

  cet::CETConfig cfg;
  cfg.comfort_zone = default_comfort_zone(model.preset);
  if (!a.config.empty()) read_json(a.config).get_to(cfg);
  cfg.alpha = a.alpha;
  if (a.preferred) cfg.preferred_temp = *a.preferred;
  if (a.band) cfg.band = *a.band;
  cfg.validate();

  const auto pm = cet::planning_model(tmpl, model, start);
  const auto p = cet::plan(pm, weather, cfg, start_state(pm.network, weather, start, a.f.init_temp));
  const json doc = {{"schedule", p.schedule}, {"diagnostics", p.diagnostics}, {"cet", cfg}};
  emit(a.out, doc.dump(2) + "\n", out);
  return kExitOk;
}

// estimate ----------------------------------------------------------------

struct EstimateArgs {
  std::string model;
  std::string observations;
  std::string ac;
  std::string from;
  std::string to;
  bool json_out = false;
};

int estimate_command(const EstimateArgs &a, std::ostream &out, std::ostream &err) {
  const auto model = load_model(a.model);
  const auto ac = load_ac(a.ac);
  const auto tmpl = model_template(model.preset, ac);
  auto series = load_observations(a.observations, tmpl.hysteresis.sensing_zone, err);
  const double from = a.from.empty() ? series.front().timestamp : parse_time(a.from);
  const double to = a.to.empty() ? series.back().timestamp : parse_time(a.to);
  series = fit::slice(series, from, to + 1.0);
  const auto report = service::estimate_window(model, ac, series);
  if (a.json_out) {
    json doc = report;
    doc["from"] = io::format_rfc3339(from);
    doc["to"] = io::format_rfc3339(to);
    doc["records"] = series.size();
    out << doc.dump(2) << '\n';
    return kExitOk;
  }
  out << std::fixed << std::setprecision(3) << "energy_kwh   " << report.energy << '\n'
      << "cycles       " << report.cycles << '\n'
      << "on_hours     " << report.on_hours << '\n'
      << "method       " << pacman::to_string(report.method) << '\n';
  if (report.accuracy_pct) out << "accuracy_pct " << std::setprecision(1) << *report.accuracy_pct << '\n';
  return kExitOk;
}

// predict -----------------------------------------------------------------

struct PredictArgs {
  Forecasting f;
  std::vector<double> sets;
  double hours = 8.0;
  bool json_out = false;
};

int predict_command(const PredictArgs &a, std::ostream &out) {
  const auto model = load_model(a.f.model);
  const auto tmpl = model_template(model.preset, load_ac(a.f.ac));
  const auto weather = load_weather(a.f.forecast);
  const double start = start_time(a.f, weather);
  const auto sets = a.sets.empty() ? cet::CETConfig::default_candidates() : a.sets;
  const auto room = fit::assemble_model(tmpl, model.params);
  const auto preds = pacman::predict_energy(tmpl, model, start, weather, sets, a.hours * 3600.0,
                                            start_state(room.network, weather, start, a.f.init_temp));
  if (a.json_out) {
    out << json{{"duration_h", a.hours}, {"predictions", preds}}.dump(2) << '\n';
    return kExitOk;
  }
  out << "set_c  energy_kwh  cycles  on_hours\n" << std::fixed;
  for (const auto &p : preds) {
    out << std::setprecision(1) << std::setw(5) << p.set_temp << std::setprecision(3)
        << std::setw(12) << p.energy << std::setw(8) << p.cycles << std::setw(10) << p.on_hours
        << '\n';
  }
  return kExitOk;
}

// faults ------------------------------------------------------------------

struct FaultsArgs {
  std::string model;
  std::string observations;
  std::string log;
  std::string unit;
  std::string ac;
  std::string monitor;
  std::string out;
};

int faults_command(const FaultsArgs &a, std::ostream &out, std::ostream &err) {
  const auto model = load_model(a.model);
  const auto ac = load_ac(a.ac);
  greina::MonitorConfig cfg;
  if (!a.monitor.empty()) read_json(a.monitor).get_to(cfg);

  fit::ObservationSeries series;
  if (!a.observations.empty()) {
    series = load_observations(a.observations,
                               model_template(model.preset, ac).hysteresis.sensing_zone, err);
  } else {
    const auto loaded = io::RecordLog(a.log).load();
    for (auto line : loaded.corrupt_lines) {
      err << "warning: " << a.log << ":" << line << ": corrupt record skipped\n";
    }
    for (const auto &e : loaded.entries) {
      if (e.kind == io::kind::kObservation && (a.unit.empty() || e.unit == a.unit)) {
        series.push_back(io::decode<fit::ObservationRecord>(e.payload));
      }
    }
    std::stable_sort(series.begin(), series.end(),
                     [](const auto &x, const auto &y) { return x.timestamp < y.timestamp; });
    if (series.empty()) throw Error(ErrorCode::EmptyInput, a.log + ": no observation records");
  }

  const auto scan = service::scan_faults(series, model, ac, cfg);
  json days = json::array();
  for (std::size_t i = 0; i < scan.days.size(); ++i) {
    json d = scan.days[i];
    d["z"] = scan.z[i] ? json(*scan.z[i]) : json(nullptr);
    days.push_back(d);
  }
  json doc = {{"days", days},
              {"alerts", scan.alerts},
              {"detector", scan.monitor.detector},
              {"counterfactual",
               scan.counterfactual ? json(*scan.counterfactual) : json(nullptr)}};
  if (scan.counterfactual_error) doc["counterfactual_error"] = *scan.counterfactual_error;
  emit(a.out, doc.dump(2) + "\n", out);
  err << scan.days.size() << " days scored, " << scan.alerts.size() << " alert(s)\n";
  return kExitOk;
}

// campaign ----------------------------------------------------------------

int campaign_command(const std::vector<int> &criteria, std::ostream &out) {
  return campaign::report_acceptance(out, criteria) ? kExitOk : kExitInvalid;
}

// serve -------------------------------------------------------------------

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

struct ServeArgs {
  std::string config;
  std::string listen;
  double tick_s = 60.0;
};

int serve_command(const ServeArgs &a, std::ostream &out, std::ostream &err) {
  auto cfg = service::load_config(a.config);
  if (!a.listen.empty()) {
    const auto colon = a.listen.rfind(':');
    if (colon == std::string::npos) {
      throw Error(ErrorCode::InvalidParameter, "--listen must be host:port");
    }
    cfg.host = a.listen.substr(0, colon);
    cfg.port = std::stoi(a.listen.substr(colon + 1));
  }
  service::Service svc(cfg);
  httplib::Server server;
  service::routes(server, svc);
  if (!server.bind_to_port(cfg.host, cfg.port)) {
    err << "error: cannot listen on " << cfg.host << ":" << cfg.port << '\n';
    return kExitRuntime;
  }
  g_stop = false;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::thread ticker([&] {
    auto next = std::chrono::steady_clock::now();
    while (!g_stop) {
      if (std::chrono::steady_clock::now() >= next) {
        try {
          svc.tick();
        } catch (const std::exception &e) {
          err << "warning: replan failed: " << e.what() << '\n';
        }
        next += std::chrono::milliseconds(static_cast<long>(a.tick_s * 1000.0));
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(200));
    }
    server.stop();
  });
  out << "listening on " << cfg.host << ":" << cfg.port << " with " << cfg.units.size()
      << " unit(s)" << std::endl;
  const bool ok = server.listen_after_bind();
  g_stop = true;
  ticker.join();
  return ok ? kExitOk : kExitRuntime;
}

int exit_code(const Error &e) {
  const auto c = e.code();
  return is_input_error(c) || c == ErrorCode::StaleModel || c == ErrorCode::ModelMismatch
             ? kExitInvalid
             : kExitRuntime;
}

}  // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Smart-thermostat engine: room model fitting, comfort-energy planning, "
               "temperature-only AC energy and capacity-loss detection.",
               "smartstat"};
  app.require_subcommand(1, 1);

  SimulateArgs sim;
  auto *simulate_cmd = app.add_subcommand("simulate", "Closed-loop simulation to an observation CSV");
  simulate_cmd->add_option("--preset", sim.preset, "single_zone or three_region")->required();
  simulate_cmd->add_option("--params", sim.params, "FitResult JSON or {name: value} map")
      ->required()
      ->check(CLI::ExistingFile);
  simulate_cmd->add_option("--weather", sim.weather, "Hourly weather JSON")
      ->required()
      ->check(CLI::ExistingFile);
  simulate_cmd->add_option("--out", sim.out, "Trace CSV path, - for stdout")->required();
  auto *set_opt = simulate_cmd->add_option("--set", sim.set_temp, "Constant set temperature");
  simulate_cmd->add_option("--schedule", sim.schedule, "SetpointSchedule JSON")
      ->check(CLI::ExistingFile)
      ->excludes(set_opt);
  simulate_cmd->add_option("--ac", sim.ac, "ACUnit JSON")->check(CLI::ExistingFile);
  simulate_cmd->add_option("--hours", sim.hours, "Horizon (default: weather span)")
      ->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--start", sim.start, "Start time (default: weather start)");
  simulate_cmd->add_option("--init-temp", sim.init_temp, "Initial temperature (default: outdoor)");
  simulate_cmd->add_option("--dt", sim.dt, "Step in seconds")->capture_default_str()
      ->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--noise", sim.noise_w, "Process noise sigma in W")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  simulate_cmd->add_option("--seed", sim.seed, "Noise seed")->capture_default_str();

  FitArgs fa;
  auto *fit_cmd = app.add_subcommand("fit", "Fit a grey-box model to observations");
  fit_cmd->add_option("--observations", fa.observations, "Observation CSV")
      ->required()
      ->check(CLI::ExistingFile);
  fit_cmd->add_option("--preset", fa.preset, "single_zone or three_region")->capture_default_str();
  fit_cmd->add_option("--out", fa.out, "FitResult JSON path (default: stdout)");
  fit_cmd->add_option("--ac", fa.ac, "ACUnit JSON")->check(CLI::ExistingFile);
  fit_cmd->add_option("--created-at", fa.created_at, "Model timestamp (default: window end)");
  fit_cmd->add_option("--starts", fa.starts, "Multi-start count")->capture_default_str()
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--max-iter", fa.max_iter, "Iterations per start")->capture_default_str()
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--seed", fa.seed, "Start sampling seed")->capture_default_str();
  fit_cmd->add_flag("--fit-cooling", fa.fit_cooling, "Also fit the effective cooling power");
  fit_cmd->add_flag("--fit-gain", fa.fit_gain, "Also fit the internal heat gain");

  PlanArgs pa;
  auto *plan_cmd = app.add_subcommand("plan", "Comfort-energy schedule for a forecast");
  add_forecasting(plan_cmd, pa.f);
  plan_cmd->add_option("--alpha", pa.alpha, "Knob: 0 comfort .. 1 energy")
      ->required()
      ->check(CLI::Range(0.0, 1.0));
  plan_cmd->add_option("--config", pa.config, "CETConfig JSON")->check(CLI::ExistingFile);
  plan_cmd->add_option("--preferred", pa.preferred, "Preferred temperature");
  plan_cmd->add_option("--band", pa.band, "Comfort band half-width")->check(CLI::NonNegativeNumber);
  plan_cmd->add_option("--out", pa.out, "Output JSON path (default: stdout)");

  EstimateArgs ea;
  auto *estimate_cmd = app.add_subcommand("estimate", "AC energy from room temperature");
  estimate_cmd->add_option("--model", ea.model, "FitResult JSON")->required()->check(CLI::ExistingFile);
  estimate_cmd->add_option("--observations", ea.observations, "Observation CSV")
      ->required()
      ->check(CLI::ExistingFile);
  estimate_cmd->add_option("--ac", ea.ac, "ACUnit JSON")->check(CLI::ExistingFile);
  estimate_cmd->add_option("--from", ea.from, "Window start (default: first record)");
  estimate_cmd->add_option("--to", ea.to, "Window end (default: last record)");
  estimate_cmd->add_flag("--json", ea.json_out, "Print an EnergyReport JSON");

  PredictArgs pr;
  auto *predict_cmd = app.add_subcommand("predict", "Energy per candidate set temperature");
  add_forecasting(predict_cmd, pr.f);
  predict_cmd->add_option("--set", pr.sets, "Candidate set temperatures (default: 16..30)")
      ->delimiter(',');
  predict_cmd->add_option("--hours", pr.hours, "Duration")->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  predict_cmd->add_flag("--json", pr.json_out, "Print JSON instead of a table");

  FaultsArgs fl;
  auto *faults_cmd = app.add_subcommand("faults", "Capacity-loss monitoring over recorded days");
  faults_cmd->add_option("--model", fl.model, "Healthy FitResult JSON")
      ->required()
      ->check(CLI::ExistingFile);
  auto *obs_opt = faults_cmd->add_option("--observations", fl.observations, "Observation CSV")
                      ->check(CLI::ExistingFile);
  auto *log_opt =
      faults_cmd->add_option("--log", fl.log, "Record log (JSON lines)")->check(CLI::ExistingFile);
  obs_opt->excludes(log_opt);
  faults_cmd->add_option("--unit", fl.unit, "Unit id within the log")->needs(log_opt);
  faults_cmd->add_option("--ac", fl.ac, "ACUnit JSON")->check(CLI::ExistingFile);
  faults_cmd->add_option("--monitor", fl.monitor, "MonitorConfig JSON")->check(CLI::ExistingFile);
  faults_cmd->add_option("--out", fl.out, "Output JSON path (default: stdout)");
  faults_cmd->callback([&] {
    if (fl.observations.empty() && fl.log.empty()) {
      throw CLI::RequiredError("--observations or --log");
    }
  });

  std::vector<int> criteria;
  auto *campaign_cmd = app.add_subcommand("campaign", "Run the synthetic acceptance campaigns");
  campaign_cmd->add_option("--criteria", criteria, "Criterion numbers (default: all)")
      ->delimiter(',')
      ->check(CLI::Range(1, 9));

  ServeArgs sv;
  auto *serve_cmd = app.add_subcommand("serve", "Start the HTTP API");
  serve_cmd->add_option("--config", sv.config, "Service config JSON")
      ->required()
      ->check(CLI::ExistingFile);
  serve_cmd->add_option("--listen", sv.listen, "host:port (overrides the config)");
  serve_cmd->add_option("--tick", sv.tick_s, "Replan check interval in seconds")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n\n";
    const auto used = app.get_subcommands([](CLI::App *s) { return s->count() > 0; });
    err << (used.empty() ? app.help() : used.front()->help());
    return kExitInvalid;
  }

  try {
    if (*simulate_cmd) return simulate(sim, out);
    if (*fit_cmd) return fit_command(fa, out, err);
    if (*plan_cmd) return plan_command(pa, out);
    if (*estimate_cmd) return estimate_command(ea, out, err);
    if (*predict_cmd) return predict_command(pr, out);
    if (*faults_cmd) return faults_command(fl, out, err);
    if (*campaign_cmd) return campaign_command(criteria, out);
    if (*serve_cmd) return serve_command(sv, out, err);
  } catch (const Error &e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitInvalid;
}

}  // namespace smartstat::cli
