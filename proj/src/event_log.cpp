#include "dcage/event_log.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "dcage/errors.hpp"

namespace dcage {

using nlohmann::json;

std::optional<Direction> parse_direction(std::string_view s) {
  for (auto d : {Direction::FromVehicle, Direction::ToVehicle, Direction::Internal}) {
    if (s == to_string(d)) return d;
  }
  return std::nullopt;
}

std::string to_line(const EventLogEntry& e) {
  json j{{"global_seq", e.global_seq},
         {"wall_time", e.wall_time_ms},
         {"direction", std::string(to_string(e.direction))},
         {"message", protocol::to_json(e.message)}};
  return j.dump();
}

EventLogEntry from_line(std::string_view line) {
  const json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ProtocolError("malformed log entry");
  for (const char* k : {"global_seq", "wall_time", "direction", "message"}) {
    if (!j.contains(k)) throw ProtocolError(std::string("log entry missing '") + k + "'");
  }
  if (!j["global_seq"].is_number_unsigned()) throw ProtocolError("global_seq must be a non-negative integer");
  if (!j["wall_time"].is_number_integer()) throw ProtocolError("wall_time must be an integer");
  if (!j["direction"].is_string()) throw ProtocolError("direction must be a string");
  const auto dir = parse_direction(j["direction"].get<std::string>());
  if (!dir) throw ProtocolError("unknown direction");
  EventLogEntry e;
  e.global_seq = j["global_seq"].get<std::uint64_t>();
  e.wall_time_ms = j["wall_time"].get<std::int64_t>();
  e.direction = *dir;
  e.message = protocol::from_json(j["message"]);
  return e;
}

EventLogWriter::EventLogWriter(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.emplace(path, std::ios::binary | std::ios::trunc);
  if (!*out_) throw ConfigError("cannot open event log '" + path.string() + "' for writing");
}

void EventLogWriter::append(const EventLogEntry& e) {
  std::string line = to_line(e);
  line.push_back('\n');
  std::lock_guard lock(mu_);
  if (out_) {
    *out_ << line;
  } else {
    buffer_ += line;
  }
}

void EventLogWriter::flush() {
  std::lock_guard lock(mu_);
  if (out_) out_->flush();
}

std::string EventLogWriter::contents() const {
  std::lock_guard lock(mu_);
  return buffer_;
}

namespace {

template <typename Sink>
std::size_t for_each_entry(std::istream& in, Sink&& sink) {
  std::string line;
  std::size_t lineno = 0;
  std::size_t count = 0;
  std::optional<std::uint64_t> last_seq;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    EventLogEntry e;
    try {
      e = from_line(line);
    } catch (const ProtocolError& err) {
      throw LogCorruptError(lineno, err.what());
    }
    if (last_seq && e.global_seq <= *last_seq) throw LogCorruptError(lineno, "global_seq not strictly increasing");
    last_seq = e.global_seq;
    sink(e);
    ++count;
  }
  return count;
}

}  // namespace

std::vector<EventLogEntry> read_log(std::istream& in) {
  std::vector<EventLogEntry> out;
  for_each_entry(in, [&](const EventLogEntry& e) { out.push_back(e); });
  return out;
}

std::vector<EventLogEntry> read_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open event log '" + path.string() + "'");
  return read_log(in);
}

std::size_t replay(std::istream& in, double speed_factor, const std::function<void(const EventLogEntry&)>& sink,
                   const Sleeper& sleep) {
  if (!(speed_factor > 0.0) || !std::isfinite(speed_factor)) {
    throw ConfigError("speed_factor must be a positive finite number");
  }
  std::optional<std::int64_t> prev;
  return for_each_entry(in, [&](const EventLogEntry& e) {
    if (sleep && prev && e.wall_time_ms > *prev) {
      sleep(static_cast<std::int64_t>(std::llround(static_cast<double>(e.wall_time_ms - *prev) / speed_factor)));
    }
    prev = e.wall_time_ms;
    sink(e);
  });
}

}  // namespace dcage
