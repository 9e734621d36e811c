#include "smartstat/io/record_log.hpp"

#include "smartstat/error.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <fstream>
#include <sstream>
#include <system_error>

namespace smartstat::io {
namespace {

[[noreturn]] void io_failure(const std::string &what) {
  throw std::system_error(errno, std::generic_category(), what);
}

nlohmann::json envelope(const LogEntry &e) {
  return {{"kind", e.kind},
          {"unit", e.unit},
          {"key", e.key},
          {"written_at", e.written_at},
          {"payload", e.payload}};
}

std::optional<LogEntry> parse_line(const std::string &line) {
  const auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  try {
    LogEntry e;
    e.kind = j.at("kind").get<std::string>();
    e.unit = j.at("unit").get<std::string>();
    e.key = j.at("key").get<std::string>();
    e.written_at = j.at("written_at").get<double>();
    e.payload = j.at("payload");
    return e;
  } catch (const nlohmann::json::exception &) {
    return std::nullopt;
  }
}

void write_all(int fd, const std::string &data, const std::string &what) {
  std::size_t done = 0;
  while (done < data.size()) {
    const auto n = ::write(fd, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      io_failure(what);
    }
    done += static_cast<std::size_t>(n);
  }
}

std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

RecordLog::RecordLog(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
}

void RecordLog::index_locked() {
  if (indexed_) return;
  for (const auto &e : load().entries) {
    if (!e.key.empty()) keys_.emplace(e.kind, e.unit, e.key);
  }
  indexed_ = true;
}

std::size_t RecordLog::append(std::span<const LogEntry> batch) {
  std::lock_guard lock(mutex_);
  index_locked();
  std::string data;
  std::vector<Key> fresh;
  for (const auto &e : batch) {
    if (!e.key.empty()) {
      Key k{e.kind, e.unit, e.key};
      if (keys_.count(k) || std::find(fresh.begin(), fresh.end(), k) != fresh.end()) continue;
      fresh.push_back(std::move(k));
    }
    data += envelope(e).dump();
    data += '\n';
  }
  if (data.empty()) return 0;

  const int fd = ::open(path_.c_str(), O_RDWR | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) io_failure("open " + path_.string());
  // Terminate a torn last line so it stays a single corrupt record.
  const auto size = ::lseek(fd, 0, SEEK_END);
  if (size > 0) {
    char last = '\n';
    if (::pread(fd, &last, 1, size - 1) == 1 && last != '\n') data.insert(data.begin(), '\n');
  }
  try {
    write_all(fd, data, "append " + path_.string());
    if (::fsync(fd) != 0) io_failure("fsync " + path_.string());
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  const auto written = static_cast<std::size_t>(std::count(data.begin(), data.end(), '\n')) -
                       (data.front() == '\n' ? 1 : 0);
  keys_.insert(fresh.begin(), fresh.end());
  return written;
}

LoadResult RecordLog::load() const {
  LoadResult out;
  std::istringstream in(read_file(path_));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (auto e = parse_line(line)) {
      out.entries.push_back(std::move(*e));
    } else {
      out.corrupt_lines.push_back(line_no);
    }
  }
  return out;
}

SnapshotStore::SnapshotStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::optional<SnapshotStore::Stored> SnapshotStore::read(const std::string &name) const {
  const auto text = read_file(dir_ / (name + ".json"));
  if (text.empty()) return std::nullopt;
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.contains("created_at") || !j.contains("payload")) {
    throw Error(ErrorCode::CorruptRecord, "snapshot '" + name + "' is unreadable");
  }
  return Stored{j.at("created_at").get<double>(), j.at("payload")};
}

bool SnapshotStore::write(const std::string &name, const nlohmann::json &payload,
                          double created_at) {
  std::lock_guard lock(mutex_);
  if (const auto current = read(name); current && current->created_at > created_at) return false;
  const auto target = dir_ / (name + ".json");
  const auto tmp = dir_ / (name + ".json.tmp");
  const std::string data = nlohmann::json{{"created_at", created_at}, {"payload", payload}}.dump();
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) io_failure("open " + tmp.string());
  try {
    write_all(fd, data, "write " + tmp.string());
    if (::fsync(fd) != 0) io_failure("fsync " + tmp.string());
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  std::filesystem::rename(tmp, target);
  return true;
}

std::optional<nlohmann::json> SnapshotStore::latest(const std::string &name) const {
  std::lock_guard lock(mutex_);
  if (auto s = read(name)) return std::move(s->payload);
  return std::nullopt;
}

}  // namespace smartstat::io
