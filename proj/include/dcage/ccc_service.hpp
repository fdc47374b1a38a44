#pragma once

// Command Control Centre core: fleet registry, command dispatch with Ack
// correlation, event log and subscriber fan-out. Transport-agnostic; the
// network layer and the in-process runner both drive it through the same
// calls.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "dcage/event_log.hpp"
#include "dcage/protocol.hpp"

namespace dcage {

enum class Connection { Connected, Lost };

constexpr std::string_view to_string(Connection c) { return c == Connection::Connected ? "connected" : "lost"; }

struct VehicleRecord {
  std::string vehicle_id;
  std::optional<VehicleStateSummary> last_summary;
  std::optional<protocol::TelemetrySnapshot> last_telemetry;
  std::int64_t last_seen_ms{0};
  Connection connection{Connection::Connected};
  std::string software;
  std::uint64_t last_seq{0};
  std::uint64_t stale_dropped{0};
};

struct CccConfig {
  std::int64_t lost_after_ms{3000};
  std::int64_t ack_timeout_ms{2000};
};

namespace ccc_reasons {
inline constexpr const char* kUnknownVehicle = "unknown vehicle";
inline constexpr const char* kDisconnected = "disconnected";
inline constexpr const char* kTimeout = "no acknowledgement within timeout";
}  // namespace ccc_reasons

using ConnectionId = std::uint64_t;
/// Sends one message to a vehicle. Returns false when the link is gone.
using SendFn = std::function<bool(const protocol::WireMessage&)>;
using AckCallback = std::function<void(const protocol::Ack&)>;
using Clock = std::function<std::int64_t()>;

struct DispatchResult {
  /// Seq of the forwarded Command; absent when rejected before sending.
  std::optional<std::uint64_t> seq;
  /// Set when the outcome is known immediately.
  std::optional<protocol::Ack> immediate;
};

struct CccStats {
  std::uint64_t stale_dropped{0};
  std::uint64_t late_acks{0};
  std::uint64_t protocol_errors{0};
  std::uint64_t timeouts{0};
};

class CccService {
 public:
  /// `log` may be null (no persistence).
  CccService(CccConfig cfg, Clock clock, std::shared_ptr<EventLogWriter> log = nullptr);

  ConnectionId open_connection(SendFn send);
  /// The vehicle bound to this connection, if any, is marked lost.
  void close_connection(ConnectionId conn);

  void ingest(const protocol::WireMessage& msg, ConnectionId conn);
  /// Malformed frames get an Error reply on the same connection.
  void ingest_frame(std::string_view body, ConnectionId conn);

  /// Forwards `cmd` with a fresh seq. `on_ack` runs exactly once: with the
  /// vehicle's Ack, a synthesized timeout, or an immediate rejection.
  DispatchResult dispatch_command(const std::string& vehicle_id, const protocol::CommandBody& cmd,
                                  AckCallback on_ack = {});

  /// Expires pending commands and marks silent vehicles lost.
  void poll();

  std::vector<VehicleRecord> fleet_query() const;
  std::optional<VehicleRecord> vehicle_detail(const std::string& vehicle_id) const;
  CccStats stats() const;
  std::size_t pending_commands() const;

  using Subscriber = std::function<void(const EventLogEntry&)>;
  /// Subscribers see every logged entry, in log order, on the thread that
  /// produced it. They must not call back into the service.
  std::uint64_t subscribe(Subscriber s);
  void unsubscribe(std::uint64_t id);

 private:
  struct Pending {
    std::string vehicle_id;
    std::uint64_t seq;
    std::int64_t deadline_ms;
    AckCallback on_ack;
  };
  struct Conn {
    SendFn send;
    std::optional<std::string> vehicle_id;
  };

  // Callers hold mu_.
  void log_locked(Direction dir, const protocol::WireMessage& msg);
  void reply_error_locked(ConnectionId conn, std::optional<std::uint64_t> ref, const std::string& reason);
  void refresh_connections_locked(std::int64_t now);

  CccConfig cfg_;
  Clock clock_;
  std::shared_ptr<EventLogWriter> log_;

  mutable std::shared_mutex mu_;
  std::map<std::string, VehicleRecord> fleet_;
  std::map<ConnectionId, Conn> conns_;
  std::map<std::string, ConnectionId> route_;  // vehicle -> connection
  std::map<std::string, std::uint64_t> out_seq_;
  std::vector<Pending> pending_;
  std::map<std::uint64_t, Subscriber> subscribers_;
  ConnectionId next_conn_{1};
  std::uint64_t next_sub_{1};
  std::uint64_t global_seq_{0};
  CccStats stats_;
};

}  // namespace dcage
