#pragma once

// Append-only event log (one JSON envelope per line) and latest-snapshot
// files replaced by atomic rename.

#include <json.hpp>

#include <cstddef>
#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace smartstat::io {

namespace kind {
inline constexpr const char *kObservation = "observation";
inline constexpr const char *kFitResult = "fit_result";
inline constexpr const char *kSchedule = "schedule";
inline constexpr const char *kAlert = "alert";
inline constexpr const char *kEnergyReport = "energy_report";
inline constexpr const char *kHealth = "health";
inline constexpr const char *kConfig = "config";
}  // namespace kind

struct LogEntry {
  std::string kind;
  std::string unit;
  std::string key;  // dedup key within (kind, unit); empty never deduplicates
  double written_at = 0.0;
  nlohmann::json payload;

  friend bool operator==(const LogEntry &, const LogEntry &) = default;
};

struct LoadResult {
  std::vector<LogEntry> entries;
  std::vector<std::size_t> corrupt_lines;  // 1-based, skipped
};

/// Single writer, any number of readers. A batch is one write(2) on an
/// O_APPEND descriptor followed by fsync, so a record is either whole or a
/// truncated last line that load() reports as corrupt.
class RecordLog {
 public:
  explicit RecordLog(std::filesystem::path path);

  /// Appends entries whose (kind, unit, key) is new, including against
  /// earlier entries of the same batch. Returns the number written.
  std::size_t append(std::span<const LogEntry> batch);
  std::size_t append(const LogEntry &entry) { return append(std::span(&entry, 1)); }

  [[nodiscard]] LoadResult load() const;

  [[nodiscard]] const std::filesystem::path &path() const { return path_; }

 private:
  using Key = std::tuple<std::string, std::string, std::string>;

  void index_locked();

  std::filesystem::path path_;
  std::mutex mutex_;
  bool indexed_ = false;
  std::set<Key> keys_;
};

/// Single-document snapshots, one file per name. write() keeps whichever
/// of the stored and the new document has the later created_at.
class SnapshotStore {
 public:
  explicit SnapshotStore(std::filesystem::path dir);

  /// Returns true when the new document became the stored one.
  bool write(const std::string &name, const nlohmann::json &payload, double created_at);

  [[nodiscard]] std::optional<nlohmann::json> latest(const std::string &name) const;

 private:
  struct Stored {
    double created_at;
    nlohmann::json payload;
  };
  [[nodiscard]] std::optional<Stored> read(const std::string &name) const;

  std::filesystem::path dir_;
  mutable std::mutex mutex_;
};

}  // namespace smartstat::io
