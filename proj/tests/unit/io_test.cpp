#include "smartstat/error.hpp"
#include "smartstat/io/csv.hpp"
#include "smartstat/io/forecast.hpp"
#include "smartstat/io/json.hpp"
#include "smartstat/io/record_log.hpp"
#include "smartstat/io/resample.hpp"
#include "support/temp_dir.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <fstream>
#include <random>
#include <sstream>
#include <thread>

using namespace smartstat;
using namespace smartstat::io;
using nlohmann::json;

namespace {

void expect_code(ErrorCode code, const auto &fn) {
  try {
    fn();
    FAIL() << "expected " << to_string(code);
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

ParseResult parse(const std::string &text) {
  std::istringstream in(text);
  return parse_observations(in);
}

constexpr double kT0 = 1699920000.0;  // 2023-11-14T00:00:00Z

std::string forecast_doc(int hours, double t0 = kT0, bool with_temperature = true) {
  json times = json::array(), temps = json::array();
  for (int h = 0; h < hours; ++h) {
    times.push_back(format_rfc3339(t0 + h * 3600.0));
    temps.push_back(30.0 + 0.25 * h);
  }
  json hourly = {{"time", times}};
  if (with_temperature) hourly["temperature_2m"] = temps;
  return json{{"hourly", hourly}}.dump();
}

struct FakeClock {
  double now = kT0;
  Clock fn() {
    return [this] { return now; };
  }
};

}  // namespace

TEST(Rfc3339, ParsesZuluOffsetsAndFractions) {
  EXPECT_DOUBLE_EQ(parse_rfc3339("2023-11-14T00:00:00Z"), kT0);
  EXPECT_DOUBLE_EQ(parse_rfc3339("2023-11-14T02:00:00+02:00"), kT0);
  EXPECT_DOUBLE_EQ(parse_rfc3339("2023-11-13T19:30:00-04:30"), kT0);
  EXPECT_DOUBLE_EQ(parse_rfc3339("2023-11-14T00:01"), kT0 + 60.0);
  EXPECT_DOUBLE_EQ(parse_rfc3339("2023-11-14T00:00:01.5Z"), kT0 + 1.5);
  EXPECT_DOUBLE_EQ(parse_rfc3339("1970-01-01T00:00:00Z"), 0.0);
  expect_code(ErrorCode::FormatError, [] { parse_rfc3339("2023-02-30T00:00:00Z"); });
  expect_code(ErrorCode::FormatError, [] { parse_rfc3339("2023-11-14 junk"); });
  expect_code(ErrorCode::FormatError, [] { parse_rfc3339("2023-11-14T00:00:00Zx"); });
}

TEST(Rfc3339, FormatRoundTrips) {
  EXPECT_EQ(format_rfc3339(kT0), "2023-11-14T00:00:00Z");
  EXPECT_EQ(format_rfc3339(kT0 + 0.25), "2023-11-14T00:00:00.25Z");
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<long long> secs(0, 4102444800LL);
  for (int i = 0; i < 200; ++i) {
    const double t = static_cast<double>(secs(rng));
    EXPECT_DOUBLE_EQ(parse_rfc3339(format_rfc3339(t)), t);
  }
}

TEST(ParseObservations, WellFormedFile) {
  const auto r = parse(
      "timestamp,room_temp_c,outdoor_temp_c,set_temp_c,door_open\n"
      "2023-11-14T00:00:00Z,27.5,33.0,24,0\n"
      "2023-11-14T00:01:00Z,27.4,33.0,24,1\n"
      "2023-11-14T00:02:00Z,27.3,33.1,,0\n");
  EXPECT_EQ(r.series.size(), 3u);
  EXPECT_TRUE(r.rejects.empty());
  EXPECT_DOUBLE_EQ(r.series[0].sensed_temps.at("room"), 27.5);
  EXPECT_EQ(r.series[0].set_temp, 24.0);
  EXPECT_TRUE(r.series[1].door_open);
  EXPECT_FALSE(r.series[2].set_temp.has_value());
  EXPECT_FALSE(r.series[0].compressor_on.has_value());
}

TEST(ParseObservations, OutOfEnvelopeRowRejected) {
  const auto r = parse(
      "timestamp,room_temp_c,outdoor_temp_c\n"
      "2023-11-14T00:00:00Z,27.5,33.0\n"
      "2023-11-14T00:01:00Z,95,33.0\n"
      "2023-11-14T00:02:00Z,27.3,33.1\n");
  EXPECT_EQ(r.series.size(), 2u);
  ASSERT_EQ(r.rejects.size(), 1u);
  EXPECT_EQ(r.rejects[0].line, 3u);
}

TEST(ParseObservations, MissingRequiredColumn) {
  expect_code(ErrorCode::FormatError, [] {
    parse("timestamp,room_temp_c\n2023-11-14T00:00:00Z,27.5\n");
  });
}

TEST(ParseObservations, EmptyInputs) {
  expect_code(ErrorCode::EmptyInput, [] { parse(""); });
  expect_code(ErrorCode::EmptyInput, [] { parse("timestamp,room_temp_c,outdoor_temp_c\n\n"); });
}

TEST(ParseObservations, BadRowsCollectedAndOrderRestored) {
  const auto r = parse(
      "timestamp,room_temp_c,outdoor_temp_c,door_open,compressor_on,power_w\n"
      "2023-11-14T00:02:00Z,27.3,33.1,0,1,1250\n"
      "2023-11-14T00:00:00Z,27.5,33.0,0,0,50\n"
      "not-a-time,27.5,33.0,0,0,50\n"
      "2023-11-14T00:01:00Z,abc,33.0,0,0,50\n"
      "2023-11-14T00:00:00Z,27.9,33.0,0,0,50\n"
      "2023-11-14T00:03:00Z,27.2,33.0,2,0,50\n"
      "2023-11-14T00:04:00Z,27.2,33.0\n");
  ASSERT_EQ(r.series.size(), 2u);
  EXPECT_DOUBLE_EQ(r.series[0].timestamp, kT0);
  EXPECT_DOUBLE_EQ(r.series[0].sensed_temps.at("room"), 27.5);
  EXPECT_EQ(r.series[1].compressor_on, true);
  EXPECT_EQ(r.series[1].electrical_power, 1250.0);
  ASSERT_EQ(r.rejects.size(), 5u);
  std::vector<std::size_t> lines;
  for (const auto &rej : r.rejects) lines.push_back(rej.line);
  EXPECT_EQ(lines, (std::vector<std::size_t>{4, 5, 6, 7, 8}));
  EXPECT_NE(r.rejects[2].reason.find("duplicate"), std::string::npos);
}

TEST(ParseObservations, ExtraZoneColumnsAndRoomZone) {
  std::istringstream in(
      "timestamp,room_temp_c,outdoor_temp_c,mir_temp_c,lir_temp_c\n"
      "2023-11-14T00:00:00Z,27.5,33.0,26.5,25.0\n");
  const auto r = parse_observations(in, "hir");
  ASSERT_EQ(r.series.size(), 1u);
  const auto &temps = r.series[0].sensed_temps;
  EXPECT_EQ(temps.size(), 3u);
  EXPECT_DOUBLE_EQ(temps.at("hir"), 27.5);
  EXPECT_DOUBLE_EQ(temps.at("mir"), 26.5);
  EXPECT_DOUBLE_EQ(temps.at("lir"), 25.0);
}

TEST(ParseObservations, WriteParseRoundTrip) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> temp(-10.0, 45.0);
  std::bernoulli_distribution coin(0.5);
  fit::ObservationSeries series;
  for (int i = 0; i < 300; ++i) {
    fit::ObservationRecord r;
    r.timestamp = kT0 + 60.0 * i;
    r.sensed_temps = {{"hir", temp(rng)}, {"mir", temp(rng)}};
    r.outdoor_temp = temp(rng);
    if (coin(rng)) r.set_temp = temp(rng);
    r.door_open = coin(rng);
    if (coin(rng)) r.compressor_on = coin(rng);
    if (coin(rng)) r.electrical_power = 1200.0 * temp(rng) / 45.0 + 600.0;
    series.push_back(r);
  }
  std::stringstream buf;
  write_observations(buf, series, "hir");
  const auto back = parse_observations(buf, "hir");
  EXPECT_TRUE(back.rejects.empty());
  EXPECT_EQ(back.series, series);
}

TEST(Resample, MidpointIsLinear) {
  TimeSeries s;
  s.push_back(0.0, 30.0);
  s.push_back(3600.0, 32.0);
  const auto r = resample(s, 1800.0);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_DOUBLE_EQ(r.v[1], 31.0);
  EXPECT_DOUBLE_EQ(r.t[2], 3600.0);
}

TEST(Resample, UniformSeriesIsIdentity) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(30.0, 3.0);
  TimeSeries s;
  for (int i = 0; i < 100; ++i) s.push_back(kT0 + 600.0 * i, n(rng));
  const auto r = resample(s, 600.0);
  EXPECT_EQ(r.t, s.t);
  EXPECT_EQ(r.v, s.v);
}

TEST(Resample, Errors) {
  TimeSeries s;
  s.push_back(0.0, 30.0);
  expect_code(ErrorCode::TooFewPoints, [&] { resample(s, 60.0); });
  s.push_back(4.0 * 3600.0, 31.0);
  expect_code(ErrorCode::GapTooLarge, [&] { resample(s, 60.0); });
  EXPECT_NO_THROW(resample(s, 60.0, 5.0 * 3600.0));
}

TEST(Resample, ObservationsHoldDiscreteFields) {
  fit::ObservationSeries obs(3);
  for (int i = 0; i < 3; ++i) {
    obs[i].timestamp = kT0 + 120.0 * i;
    obs[i].sensed_temps["room"] = 26.0 + i;
    obs[i].outdoor_temp = 33.0;
    obs[i].compressor_on = i == 1;
    obs[i].set_temp = 24.0;
  }
  obs[2].set_temp.reset();
  const auto r = resample(obs, 60.0);
  ASSERT_EQ(r.size(), 5u);
  EXPECT_DOUBLE_EQ(r[1].sensed_temps.at("room"), 26.5);
  EXPECT_EQ(r[1].compressor_on, false);
  EXPECT_EQ(r[3].compressor_on, true);
  EXPECT_EQ(r[3].set_temp, 24.0);
  EXPECT_FALSE(r[4].set_temp.has_value());
}

TEST(Forecast, FileProviderReturnsHorizonPoints) {
  test_support::TempDir dir;
  std::ofstream(dir / "forecast.json") << forecast_doc(24);
  WeatherProvider p;
  p.kind = ProviderKind::file;
  p.path = (dir / "forecast.json").string();
  const auto s = fetch_forecast(p, 0.0, 0.0, 24);
  ASSERT_EQ(s.size(), 24u);
  EXPECT_DOUBLE_EQ(s.t.front(), kT0);
  EXPECT_DOUBLE_EQ(s.v[4], 31.0);
  expect_code(ErrorCode::CoverageError, [&] { fetch_forecast(p, 0.0, 0.0, 25); });
  const auto later = fetch_forecast(p, 0.0, 0.0, 4, kT0 + 5400.0);
  EXPECT_DOUBLE_EQ(later.t.front(), kT0 + 3600.0);
}

TEST(Forecast, CacheWithinTtlAndExactlyOneAfter) {
  FakeClock clock;
  int requests = 0;
  std::string last_url;
  WeatherProvider p;
  p.kind = ProviderKind::http;
  p.url_template = "http://weather.test/v1?lat={lat}&lon={lon}&h={hours}";
  p.ttl_s = 600.0;
  ForecastClient client(p, clock.fn(), [&](const std::string &url, double) {
    ++requests;
    last_url = url;
    return HttpResponse{200, forecast_doc(48)};
  });
  EXPECT_EQ(client.fetch(35.5, -120.25, 24).size(), 24u);
  EXPECT_EQ(last_url, "http://weather.test/v1?lat=35.5&lon=-120.25&h=24");
  EXPECT_EQ(client.provider_hits(), 1u);
  clock.now += 599.0;
  client.fetch(35.5, -120.25, 24);
  EXPECT_EQ(client.provider_hits(), 1u);
  clock.now += 1.0;
  client.fetch(35.5, -120.25, 24);
  client.fetch(35.5, -120.25, 24);
  EXPECT_EQ(client.provider_hits(), 2u);
  EXPECT_EQ(requests, 2);
}

TEST(Forecast, MissingTemperatureFieldIsSchemaError) {
  WeatherProvider p;
  p.kind = ProviderKind::http;
  p.url_template = "http://weather.test/{lat}/{lon}";
  ForecastClient client(p, system_clock(), [](const std::string &, double) {
    return HttpResponse{200, forecast_doc(24, kT0, false)};
  });
  expect_code(ErrorCode::SchemaError, [&] { client.fetch(1.0, 2.0, 24); });
}

TEST(Forecast, NetworkFailureWithoutFreshCache) {
  FakeClock clock;
  bool up = true;
  WeatherProvider p;
  p.kind = ProviderKind::http;
  p.url_template = "http://weather.test/{lat}/{lon}";
  p.ttl_s = 60.0;
  ForecastClient client(p, clock.fn(), [&](const std::string &, double) {
    if (!up) throw Error(ErrorCode::ProviderUnavailable, "down");
    return HttpResponse{200, forecast_doc(24)};
  });
  client.fetch(1.0, 2.0, 12);
  up = false;
  EXPECT_NO_THROW(client.fetch(1.0, 2.0, 12));  // fresh cache
  clock.now += 61.0;
  expect_code(ErrorCode::ProviderUnavailable, [&] { client.fetch(1.0, 2.0, 12); });
}

TEST(Forecast, NonSuccessStatusIsUnavailable) {
  WeatherProvider p;
  p.kind = ProviderKind::http;
  p.url_template = "http://weather.test/";
  ForecastClient client(p, system_clock(), [](const std::string &, double) {
    return HttpResponse{503, ""};
  });
  expect_code(ErrorCode::ProviderUnavailable, [&] { client.fetch(0.0, 0.0, 1); });
}

TEST(Forecast, NonHourlyDocumentIsResampled) {
  const auto doc = json{{"t", {kT0, kT0 + 10800.0}}, {"temp", {30.0, 33.0}}}.dump();
  const auto s = parse_forecast(doc, FieldMapping{"t", "temp"});
  ASSERT_EQ(s.size(), 4u);
  EXPECT_DOUBLE_EQ(s.v[1], 31.0);
}

TEST(Forecast, ProviderValidation) {
  WeatherProvider p;
  p.kind = ProviderKind::file;
  expect_code(ErrorCode::InvalidParameter, [&] { p.validate(); });
  p.path = "x.json";
  p.url_template = "http://x";
  expect_code(ErrorCode::InvalidParameter, [&] { p.validate(); });
  p.url_template.clear();
  p.ttl_s = -1.0;
  expect_code(ErrorCode::InvalidParameter, [&] { p.validate(); });
}

TEST(Forecast, DefaultTransportAgainstLocalServer) {
  httplib::Server server;
  server.Get("/forecast", [](const httplib::Request &req, httplib::Response &res) {
    EXPECT_EQ(req.get_param_value("lat"), "10");
    res.set_content(forecast_doc(6), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  WeatherProvider p;
  p.kind = ProviderKind::http;
  p.url_template = "http://127.0.0.1:" + std::to_string(port) + "/forecast?lat={lat}&lon={lon}";
  p.timeout_s = 5.0;
  EXPECT_EQ(fetch_forecast(p, 10.0, 20.0, 6).size(), 6u);
  server.stop();
  th.join();
  expect_code(ErrorCode::ProviderUnavailable, [&] { fetch_forecast(p, 10.0, 20.0, 6); });
}

// Persistence.

namespace {

template <typename T>
T round_trip(RecordLog &log, const std::string &kind, const T &value) {
  log.append(LogEntry{kind, "u1", "", 1.0, json(value)});
  const auto loaded = log.load();
  EXPECT_TRUE(loaded.corrupt_lines.empty());
  return decode<T>(loaded.entries.back().payload);
}

}  // namespace

TEST(RecordLog, RoundTripEveryPersistedKind) {
  test_support::TempDir dir;
  RecordLog log(dir / "events.log");
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 25; ++trial) {
    fit::FitResult f;
    f.preset = coin(rng) ? thermal::Preset::three_region : thermal::Preset::single_zone;
    f.params = {{"C_room", std::abs(u(rng)) * 1e4}, {"R_room-outdoor", u(rng) * 1e-5}};
    f.rmse = u(rng);
    f.window_start = kT0 + u(rng);
    f.window_end = kT0 + 1e5 + u(rng);
    f.iterations = static_cast<int>(rng() % 100);
    f.converged = coin(rng);
    f.created_at = kT0 + u(rng) / 7.0;
    EXPECT_EQ(round_trip(log, kind::kFitResult, f), f);

    thermal::SetpointSchedule s;
    for (int k = 0; k < 5; ++k) {
      s.slots.push_back({kT0 + 1800.0 * k + u(rng), coin(rng) ? std::optional(u(rng)) : std::nullopt});
    }
    EXPECT_EQ(round_trip(log, kind::kSchedule, s), s);

    greina::Alert a{kT0 + u(rng), u(rng), u(rng)};
    EXPECT_EQ(round_trip(log, kind::kAlert, a), a);

    pacman::EnergyReport e;
    e.energy = std::abs(u(rng));
    e.cycles = static_cast<int>(rng() % 50);
    e.on_hours = std::abs(u(rng)) / 100.0;
    e.method = coin(rng) ? pacman::EnergyMethod::estimated : pacman::EnergyMethod::predicted;
    if (coin(rng)) e.accuracy_pct = std::abs(u(rng)) / 10.0;
    EXPECT_EQ(round_trip(log, kind::kEnergyReport, e), e);

    fit::ObservationRecord r;
    r.timestamp = kT0 + u(rng);
    r.sensed_temps = {{"room", u(rng) / 30.0}};
    r.outdoor_temp = u(rng) / 30.0;
    if (coin(rng)) r.set_temp = u(rng);
    r.door_open = coin(rng);
    if (coin(rng)) r.compressor_on = coin(rng);
    if (coin(rng)) r.electrical_power = u(rng);
    EXPECT_EQ(round_trip(log, kind::kObservation, r), r);

    greina::DriftDetector d;
    d.cusum = std::abs(u(rng));
    d.state = coin(rng) ? greina::DetectorState::alarmed : greina::DetectorState::healthy;
    if (coin(rng)) d.alarm_date = kT0 + u(rng);
    d.last_date = kT0 + u(rng);
    EXPECT_EQ(decode<greina::DriftDetector>(json(d)), d);

    cet::CETConfig c;
    c.alpha = std::abs(u(rng)) / 1e3;
    c.candidates = {20.0, 22.5, 25.0};
    EXPECT_EQ(decode<cet::CETConfig>(json(c)), c);
  }
  EXPECT_EQ(log.load().entries.size(), 25u * 5u);
}

TEST(RecordLog, DuplicateBatchAddsNothing) {
  test_support::TempDir dir;
  std::vector<LogEntry> batch;
  for (int i = 0; i < 10; ++i) {
    batch.push_back({kind::kObservation, "u1", std::to_string(i), 5.0, json{{"i", i}}});
  }
  {
    RecordLog log(dir / "events.log");
    EXPECT_EQ(log.append(batch), 10u);
    EXPECT_EQ(log.append(batch), 0u);
  }
  RecordLog reopened(dir / "events.log");
  EXPECT_EQ(reopened.append(batch), 0u);
  auto other_unit = batch;
  for (auto &e : other_unit) e.unit = "u2";
  other_unit.push_back(other_unit.front());  // repeated inside the batch
  EXPECT_EQ(reopened.append(other_unit), 10u);
  EXPECT_EQ(reopened.load().entries.size(), 20u);
}

TEST(RecordLog, TruncatedFinalRecordIsSkipped) {
  test_support::TempDir dir;
  const auto path = dir / "events.log";
  {
    RecordLog log(path);
    for (int i = 0; i < 3; ++i) log.append(LogEntry{kind::kAlert, "u1", std::to_string(i), 1.0, json(i)});
  }
  {
    std::ofstream out(path, std::ios::app);
    out << R"({"kind":"alert","unit":"u1","key":"3","written_at":1.0,"payl)";
  }
  RecordLog log(path);
  auto loaded = log.load();
  EXPECT_EQ(loaded.entries.size(), 3u);
  EXPECT_EQ(loaded.corrupt_lines, std::vector<std::size_t>{4});
  // Appending after the torn line keeps both the old records and the new one.
  EXPECT_EQ(log.append(LogEntry{kind::kAlert, "u1", "3", 2.0, json(3)}), 1u);
  loaded = log.load();
  EXPECT_EQ(loaded.entries.size(), 4u);
  EXPECT_EQ(loaded.corrupt_lines, std::vector<std::size_t>{4});
  EXPECT_EQ(loaded.entries.back().payload, json(3));
}

TEST(SnapshotStore, LatestByCreatedAt) {
  test_support::TempDir dir;
  SnapshotStore store(dir.path());
  EXPECT_FALSE(store.latest("model").has_value());
  fit::FitResult older, newer;
  older.created_at = kT0;
  older.params = {{"C_room", 1.0}};
  newer.created_at = kT0 + 3600.0;
  newer.params = {{"C_room", 2.0}};
  EXPECT_TRUE(store.write("model", json(newer), newer.created_at));
  EXPECT_FALSE(store.write("model", json(older), older.created_at));
  EXPECT_EQ(decode<fit::FitResult>(*store.latest("model")), newer);
  SnapshotStore reopened(dir.path());
  EXPECT_EQ(decode<fit::FitResult>(*reopened.latest("model")), newer);
  EXPECT_FALSE(std::filesystem::exists(dir / "model.json.tmp"));
}

TEST(Json, DecodeMapsToSchemaError) {
  expect_code(ErrorCode::SchemaError, [] { decode<fit::FitResult>(json{{"preset", "single_zone"}}); });
  expect_code(ErrorCode::SchemaError, [] {
    decode<pacman::EnergyReport>(
        json{{"energy", 1.0}, {"cycles", 1}, {"on_hours", 1.0}, {"method", "guessed"}, {"accuracy_pct", nullptr}});
  });
}
