#pragma once

// Append-only NDJSON event log, one entry per line.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dcage/protocol.hpp"

namespace dcage {

enum class Direction { FromVehicle, ToVehicle, Internal };

constexpr std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::FromVehicle: return "from_vehicle";
    case Direction::ToVehicle: return "to_vehicle";
    case Direction::Internal: return "internal";
  }
  return "";
}

std::optional<Direction> parse_direction(std::string_view s);

struct EventLogEntry {
  std::uint64_t global_seq{0};
  std::int64_t wall_time_ms{0};
  Direction direction{Direction::Internal};
  protocol::WireMessage message;

  bool operator==(const EventLogEntry&) const = default;
};

/// Single line without the trailing newline.
std::string to_line(const EventLogEntry& e);
/// Throws ProtocolError on malformed input.
EventLogEntry from_line(std::string_view line);

/// Raised when a log cannot be read back; `line` is 1-based.
class LogCorruptError : public std::runtime_error {
 public:
  LogCorruptError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Serialized appends to a file, or to memory when no path is given.
class EventLogWriter {
 public:
  EventLogWriter() = default;
  explicit EventLogWriter(const std::filesystem::path& path);

  void append(const EventLogEntry& e);
  void flush();
  /// In-memory mode only: every line appended so far, newline-terminated.
  std::string contents() const;

 private:
  mutable std::mutex mu_;
  std::optional<std::ofstream> out_;
  std::string buffer_;
};

/// Reads every entry. Blank lines are skipped. Throws LogCorruptError.
std::vector<EventLogEntry> read_log(std::istream& in);
std::vector<EventLogEntry> read_log(const std::filesystem::path& path);

using Sleeper = std::function<void(std::int64_t ms)>;

/// Streams the log to `sink` in order. Gaps between wall times are divided
/// by `speed_factor` and passed to `sleep` (no pacing when `sleep` is
/// empty). Entries before a corrupt line are delivered before the
/// LogCorruptError is thrown. Throws ConfigError for speed_factor <= 0 and
/// LogCorruptError when global_seq is not strictly increasing.
std::size_t replay(std::istream& in, double speed_factor, const std::function<void(const EventLogEntry&)>& sink,
                   const Sleeper& sleep = {});

}  // namespace dcage
