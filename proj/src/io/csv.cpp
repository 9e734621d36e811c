#include "smartstat/io/csv.hpp"

#include "smartstat/error.hpp"
#include "smartstat/thermal/simulate.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>

namespace smartstat::io {
namespace {

namespace chr = std::chrono;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

int digits(std::string_view s, std::size_t pos, std::size_t n) {
  if (pos + n > s.size()) throw Error(ErrorCode::FormatError, "truncated timestamp");
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + n, v);
  if (ec != std::errc() || p != s.data() + pos + n) {
    throw Error(ErrorCode::FormatError, "bad timestamp '" + std::string(s) + "'");
  }
  return v;
}

void expect(std::string_view s, std::size_t pos, char c) {
  if (pos >= s.size() || s[pos] != c) {
    throw Error(ErrorCode::FormatError, "bad timestamp '" + std::string(s) + "'");
  }
}

std::optional<double> number(std::string_view s, const char *column) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::FormatError, std::string(column) + ": not a number");
  }
  return v;
}

std::optional<bool> flag(std::string_view s, const char *column) {
  if (s.empty()) return std::nullopt;
  if (s == "0") return false;
  if (s == "1") return true;
  throw Error(ErrorCode::FormatError, std::string(column) + ": expected 0 or 1");
}

void put_number(std::ostream &out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, res.ptr - buf);
}

constexpr std::string_view kTempSuffix = "_temp_c";

}  // namespace

double parse_rfc3339(std::string_view s) {
  s = trim(s);
  const int year = digits(s, 0, 4);
  expect(s, 4, '-');
  const int month = digits(s, 5, 2);
  expect(s, 7, '-');
  const int day = digits(s, 8, 2);
  if (s.size() <= 10 || (s[10] != 'T' && s[10] != 't' && s[10] != ' ')) {
    throw Error(ErrorCode::FormatError, "bad timestamp '" + std::string(s) + "'");
  }
  const int hour = digits(s, 11, 2);
  expect(s, 13, ':');
  const int minute = digits(s, 14, 2);
  std::size_t pos = 16;
  double second = 0.0;
  if (pos < s.size() && s[pos] == ':') {
    second = digits(s, pos + 1, 2);
    pos += 3;
    if (pos < s.size() && s[pos] == '.') {
      const std::size_t begin = pos;
      ++pos;
      while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
      if (pos == begin + 1) throw Error(ErrorCode::FormatError, "empty fractional seconds");
      second += *number(s.substr(begin, pos - begin), "timestamp");
    }
  }
  double offset = 0.0;
  if (pos < s.size()) {
    if (s[pos] == 'Z' || s[pos] == 'z') {
      ++pos;
    } else if (s[pos] == '+' || s[pos] == '-') {
      const double sign = s[pos] == '-' ? -1.0 : 1.0;
      const int oh = digits(s, pos + 1, 2);
      expect(s, pos + 3, ':');
      const int om = digits(s, pos + 4, 2);
      offset = sign * (oh * 3600.0 + om * 60.0);
      pos += 6;
    }
  }
  if (pos != s.size()) {
    throw Error(ErrorCode::FormatError, "trailing characters in timestamp '" + std::string(s) + "'");
  }
  const chr::year_month_day ymd{chr::year(year), chr::month(static_cast<unsigned>(month)),
                                chr::day(static_cast<unsigned>(day))};
  if (!ymd.ok() || hour > 23 || minute > 59 || second >= 61.0) {
    throw Error(ErrorCode::FormatError, "timestamp out of range '" + std::string(s) + "'");
  }
  const double days = chr::sys_days(ymd).time_since_epoch().count();
  return days * 86400.0 + hour * 3600.0 + minute * 60.0 + second - offset;
}

std::string format_rfc3339(double t) {
  if (!std::isfinite(t)) throw Error(ErrorCode::InvalidParameter, "non-finite timestamp");
  const double whole = std::floor(t);
  const chr::sys_seconds secs{chr::seconds(static_cast<long long>(whole))};
  const auto day = chr::floor<chr::days>(secs);
  const chr::year_month_day ymd{day};
  const chr::hh_mm_ss hms{secs - day};
  char buf[48];
  int n = std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld",
                        static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                        static_cast<unsigned>(ymd.day()),
                        static_cast<long long>(hms.hours().count()),
                        static_cast<long long>(hms.minutes().count()),
                        static_cast<long long>(hms.seconds().count()));
  std::string out(buf, static_cast<std::size_t>(n));
  if (t != whole) {
    n = std::snprintf(buf, sizeof buf, "%.6f", t - whole);
    std::string frac(buf + 1, static_cast<std::size_t>(n - 1));  // drop the leading 0
    while (frac.size() > 2 && frac.back() == '0') frac.pop_back();
    out += frac;
  }
  return out + "Z";
}

ParseResult parse_observations(std::istream &in, std::string_view room_zone) {
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) {
    throw Error(ErrorCode::EmptyInput, "no header row");
  }
  const auto header = split(line);
  std::map<std::string, std::size_t, std::less<>> column;
  for (std::size_t i = 0; i < header.size(); ++i) column.emplace(std::string(header[i]), i);
  for (const char *required : {"timestamp", "room_temp_c", "outdoor_temp_c"}) {
    if (!column.count(required)) {
      throw Error(ErrorCode::FormatError, std::string("missing column ") + required);
    }
  }
  auto index = [&](std::string_view name) -> std::optional<std::size_t> {
    const auto it = column.find(name);
    if (it == column.end()) return std::nullopt;
    return it->second;
  };
  const auto set_col = index("set_temp_c");
  const auto door_col = index("door_open");
  const auto comp_col = index("compressor_on");
  const auto power_col = index("power_w");
  std::vector<std::pair<std::string, std::size_t>> extra_zones;
  for (const auto &[name, i] : column) {
    if (name == "room_temp_c" || name == "outdoor_temp_c" || name == "set_temp_c") continue;
    if (name.size() > kTempSuffix.size() && name.ends_with(kTempSuffix)) {
      extra_zones.emplace_back(name.substr(0, name.size() - kTempSuffix.size()), i);
    }
  }

  struct Row {
    std::size_t line;
    fit::ObservationRecord record;
  };
  std::vector<Row> rows;
  ParseResult result;
  std::size_t line_no = 1;
  std::size_t data_rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++data_rows;
    const auto cells = split(line);
    try {
      if (cells.size() != header.size()) {
        throw Error(ErrorCode::FormatError, "expected " + std::to_string(header.size()) +
                                                " fields, got " + std::to_string(cells.size()));
      }
      fit::ObservationRecord r;
      r.timestamp = parse_rfc3339(cells[column.at("timestamp")]);
      const auto room = number(cells[column.at("room_temp_c")], "room_temp_c");
      const auto outdoor = number(cells[column.at("outdoor_temp_c")], "outdoor_temp_c");
      if (!room || !outdoor) throw Error(ErrorCode::FormatError, "required temperature empty");
      r.sensed_temps[std::string(room_zone)] = *room;
      r.outdoor_temp = *outdoor;
      for (const auto &[zone, i] : extra_zones) {
        if (const auto v = number(cells[i], "zone temperature")) r.sensed_temps[zone] = *v;
      }
      if (set_col) r.set_temp = number(cells[*set_col], "set_temp_c");
      if (door_col) r.door_open = flag(cells[*door_col], "door_open").value_or(false);
      if (comp_col) r.compressor_on = flag(cells[*comp_col], "compressor_on");
      if (power_col) r.electrical_power = number(cells[*power_col], "power_w");
      for (const auto &[zone, t] : r.sensed_temps) {
        if (!thermal::in_envelope(t)) {
          throw Error(ErrorCode::InvalidParameter, zone + " temperature outside the sanity envelope");
        }
      }
      if (!thermal::in_envelope(r.outdoor_temp)) {
        throw Error(ErrorCode::InvalidParameter, "outdoor temperature outside the sanity envelope");
      }
      if (r.set_temp && !thermal::in_envelope(*r.set_temp)) {
        throw Error(ErrorCode::InvalidParameter, "set temperature outside the sanity envelope");
      }
      if (r.electrical_power && *r.electrical_power < 0.0) {
        throw Error(ErrorCode::InvalidParameter, "negative power");
      }
      rows.push_back({line_no, std::move(r)});
    } catch (const Error &e) {
      result.rejects.push_back({line_no, e.what()});
    }
  }
  if (data_rows == 0) throw Error(ErrorCode::EmptyInput, "no data rows");

  std::stable_sort(rows.begin(), rows.end(), [](const Row &a, const Row &b) {
    return a.record.timestamp < b.record.timestamp;
  });
  for (auto &row : rows) {
    if (!result.series.empty() && result.series.back().timestamp == row.record.timestamp) {
      result.rejects.push_back({row.line, "duplicate timestamp"});
      continue;
    }
    result.series.push_back(std::move(row.record));
  }
  std::sort(result.rejects.begin(), result.rejects.end(),
            [](const RowReject &a, const RowReject &b) { return a.line < b.line; });
  return result;
}

void write_observations(std::ostream &out, const fit::ObservationSeries &series,
                        std::string_view room_zone) {
  std::vector<std::string> extra;
  if (!series.empty()) {
    for (const auto &[zone, t] : series.front().sensed_temps) {
      if (zone != room_zone) extra.push_back(zone);
    }
  }
  out << "timestamp,room_temp_c,outdoor_temp_c,set_temp_c,door_open,compressor_on,power_w";
  for (const auto &zone : extra) out << ',' << zone << kTempSuffix;
  out << '\n';
  for (const auto &r : series) {
    const auto room = r.sensed_temps.find(std::string(room_zone));
    if (room == r.sensed_temps.end()) {
      throw Error(ErrorCode::UnknownZone, "record without '" + std::string(room_zone) + "'");
    }
    out << format_rfc3339(r.timestamp) << ',';
    put_number(out, room->second);
    out << ',';
    put_number(out, r.outdoor_temp);
    out << ',';
    if (r.set_temp) put_number(out, *r.set_temp);
    out << ',' << (r.door_open ? '1' : '0') << ',';
    if (r.compressor_on) out << (*r.compressor_on ? '1' : '0');
    out << ',';
    if (r.electrical_power) put_number(out, *r.electrical_power);
    for (const auto &zone : extra) {
      out << ',';
      if (const auto it = r.sensed_temps.find(zone); it != r.sensed_temps.end()) {
        put_number(out, it->second);
      }
    }
    out << '\n';
  }
}

}  // namespace smartstat::io
