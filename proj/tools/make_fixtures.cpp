// Writes the packaged CLI fixtures from the simulator:
//   hot_day/   three-region model, hot-afternoon forecast, planner config
//   estimate/  single-zone model, temperature-only observations, true kWh
//   constant/  a flat trace that carries no information about the room

#include "smartstat/campaign/benchmark.hpp"
#include "smartstat/campaign/fixtures.hpp"
#include "smartstat/io/csv.hpp"
#include "smartstat/io/json.hpp"
#include "smartstat/pacman/energy.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace smartstat;
using nlohmann::json;

namespace {

void write_json(const fs::path &path, const json &doc) {
  fs::create_directories(path.parent_path());
  std::ofstream(path) << doc.dump(2) << '\n';
}

json forecast_doc(const TimeSeries &s) {
  json times = json::array();
  for (double t : s.t) times.push_back(io::format_rfc3339(t));
  return {{"hourly", {{"time", times}, {"temperature_2m", s.v}}}};
}

void hot_day(const fs::path &dir) {
  auto h = fixtures::hot_day();
  campaign::WeatherSpec weather;
  weather.mean = 36.0;
  weather.amplitude = 4.0;
  weather.hour_sigma = 0.3;
  h.forecast = campaign::synthetic_weather(campaign::kEpoch, 48.0, weather);
  fit::FitResult model;
  model.preset = thermal::Preset::three_region;
  model.params = campaign::three_region_params();
  model.created_at = campaign::kEpoch;
  model.converged = true;
  write_json(dir / "model.json", model);
  write_json(dir / "forecast.json", forecast_doc(h.forecast));
  write_json(dir / "cet.json", h.cfg);
  write_json(dir / "start.json", {{"start", io::format_rfc3339(h.init.thermal.time)},
                                  {"init_temp", h.init.thermal.temperatures(0)}});
}

void estimate(const fs::path &dir) {
  const auto d = fixtures::decode_trace(5, 0.1, 2.0, 6.0);
  const auto ac = campaign::benchmark_ac();
  pacman::CycleSegmentation truth;
  truth.flags = d.trace.compressor_on;
  for (const auto &s : d.trace.set_temp) truth.session.push_back(s ? 1 : 0);
  const double kwh = pacman::estimate_energy(truth, ac).energy;
  auto model = d.params;
  model.created_at = campaign::kEpoch;
  write_json(dir / "model.json", model);
  fs::create_directories(dir);
  std::ofstream csv(dir / "observations.csv");
  io::write_observations(csv, d.observations);
  // The estimate passes when it is within 15 % of the simulated energy.
  write_json(dir / "expected.json", {{"energy_kwh", kwh}, {"tolerance_kwh", 0.15 * kwh}});
}

void constant(const fs::path &dir) {
  fit::ObservationSeries series;
  for (int k = 0; k < 12 * 60; ++k) {
    fit::ObservationRecord r;
    r.timestamp = campaign::kEpoch + 60.0 * k;
    r.sensed_temps = {{"room", 24.0}};
    r.outdoor_temp = 24.0;
    series.push_back(r);
  }
  fs::create_directories(dir);
  std::ofstream csv(dir / "observations.csv");
  io::write_observations(csv, series);
}

}  // namespace

int main(int argc, char **argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <output-dir>\n";
    return 1;
  }
  const fs::path out = argv[1];
  hot_day(out / "hot_day");
  estimate(out / "estimate");
  constant(out / "constant");
  return 0;
}
