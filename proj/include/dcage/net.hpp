#pragma once

// Network transport: the CCC's vehicle listener and HTTP/WebSocket API, and
// the vehicle-side link used for live runs.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dcage/ccc_service.hpp"
#include "dcage/protocol.hpp"
#include "dcage/scenario.hpp"

namespace dcage::net {

struct Endpoint {
  std::string host;
  std::uint16_t port{0};
};

/// "host:port", "host" or ":port". Throws ConfigError.
Endpoint parse_endpoint(std::string_view text, std::uint16_t default_port);

nlohmann::json record_to_json(const VehicleRecord& r, bool with_telemetry);

struct ServerOptions {
  std::string bind{"0.0.0.0"};
  std::uint16_t vehicle_port{7700};  // 0 picks a free port
  std::uint16_t http_port{7780};
  unsigned threads{2};
  std::int64_t poll_interval_ms{100};
  bool handle_signals{false};  // SIGINT/SIGTERM stop the server
};

/// Serves one CccService: length-prefixed JSON frames from vehicles on
/// `vehicle_port`, and on `http_port`
///   GET  /fleet
///   GET  /vehicle/{id}
///   POST /vehicle/{id}/command   (body: command JSON; answers with the Ack)
///   GET  /stream                 (WebSocket, one event log line per message)
class CccServer {
 public:
  CccServer(CccService& ccc, ServerOptions opts);
  ~CccServer();
  CccServer(const CccServer&) = delete;
  CccServer& operator=(const CccServer&) = delete;

  /// Binds both listeners and starts the worker threads. Throws
  /// std::system_error when a port cannot be bound.
  void start();
  void stop();
  /// Blocks until stop() is called from another thread or a signal handler.
  void wait();

  std::uint16_t vehicle_port() const;
  std::uint16_t http_port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Vehicle side of the CCC link. Received frames are queued and handed out
/// by take_received() so the control loop stays single-threaded.
class VehicleLink {
 public:
  /// Connects synchronously. Throws std::system_error.
  explicit VehicleLink(const Endpoint& ccc);
  ~VehicleLink();
  VehicleLink(const VehicleLink&) = delete;
  VehicleLink& operator=(const VehicleLink&) = delete;

  /// False once the connection is gone.
  bool send(const protocol::WireMessage& msg);
  std::vector<std::string> take_received();
  bool connected() const;
  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct LiveOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> tick_ms;
  std::optional<std::string> vehicle_id;
  bool realtime{true};
  std::ostream* progress{nullptr};
};

struct LiveResult {
  MissionState final_mission_state{MissionState::Inactive};
  DrivingMode final_mode{DrivingMode::FAD};
  std::int64_t sim_duration_ms{0};
  bool link_lost{false};
};

/// Runs the simulated vehicle and its cage against a remote CCC. The
/// scenario's mission, if any, is assigned locally at its scheduled time;
/// everything else comes from the operator through the CCC. Ends when the
/// mission completes or at the scenario's max duration.
LiveResult run_live(const Scenario& scenario, const Endpoint& ccc, const LiveOptions& options = {});

}  // namespace dcage::net
