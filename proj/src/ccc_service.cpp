#include "dcage/ccc_service.hpp"

#include <algorithm>

#include <json.hpp>

#include "dcage/errors.hpp"

namespace dcage {

using protocol::Ack;
using protocol::AckOutcome;
using protocol::WireMessage;

CccService::CccService(CccConfig cfg, Clock clock, std::shared_ptr<EventLogWriter> log)
    : cfg_(cfg), clock_(std::move(clock)), log_(std::move(log)) {
  if (cfg_.lost_after_ms <= 0 || cfg_.ack_timeout_ms <= 0) throw ConfigError("CCC timeouts must be strictly positive");
  if (!clock_) throw ConfigError("CCC needs a clock");
}

ConnectionId CccService::open_connection(SendFn send) {
  std::unique_lock lock(mu_);
  const ConnectionId id = next_conn_++;
  conns_[id] = Conn{std::move(send), std::nullopt};
  return id;
}

void CccService::close_connection(ConnectionId conn) {
  std::unique_lock lock(mu_);
  auto it = conns_.find(conn);
  if (it == conns_.end()) return;
  if (it->second.vehicle_id) {
    const auto& vid = *it->second.vehicle_id;
    auto r = route_.find(vid);
    if (r != route_.end() && r->second == conn) {
      route_.erase(r);
      fleet_[vid].connection = Connection::Lost;
    }
  }
  conns_.erase(it);
}

void CccService::log_locked(Direction dir, const WireMessage& msg) {
  EventLogEntry e{++global_seq_, clock_(), dir, msg};
  if (log_) log_->append(e);
  for (const auto& [_, sub] : subscribers_) sub(e);
}

void CccService::reply_error_locked(ConnectionId conn, std::optional<std::uint64_t> ref, const std::string& reason) {
  ++stats_.protocol_errors;
  auto it = conns_.find(conn);
  if (it == conns_.end()) return;
  const std::string vid = it->second.vehicle_id.value_or("");
  WireMessage reply{vid, ++out_seq_[vid], clock_(), protocol::Error{ref, reason}};
  log_locked(Direction::ToVehicle, reply);
  if (it->second.send) it->second.send(reply);
}

void CccService::ingest(const WireMessage& msg, ConnectionId conn) {
  std::vector<std::pair<AckCallback, Ack>> callbacks;
  {
    std::unique_lock lock(mu_);
    auto cit = conns_.find(conn);
    if (cit == conns_.end()) return;
    const std::int64_t now = clock_();

    if (const auto* reg = protocol::get_if<protocol::Register>(msg)) {
      if (msg.vehicle_id.empty()) {
        reply_error_locked(conn, msg.seq, "Register needs a vehicle_id");
        return;
      }
      VehicleRecord& rec = fleet_[msg.vehicle_id];
      rec.vehicle_id = msg.vehicle_id;
      rec.software = reg->software;
      rec.last_seen_ms = now;
      rec.last_seq = msg.seq;
      rec.connection = Connection::Connected;
      cit->second.vehicle_id = msg.vehicle_id;
      route_[msg.vehicle_id] = conn;
      log_locked(Direction::FromVehicle, msg);
      return;
    }

    if (!cit->second.vehicle_id) {
      reply_error_locked(conn, msg.seq, "vehicle not registered on this connection");
      return;
    }
    if (msg.vehicle_id != *cit->second.vehicle_id) {
      reply_error_locked(conn, msg.seq, "vehicle_id does not match the registered vehicle");
      return;
    }
    VehicleRecord& rec = fleet_[msg.vehicle_id];
    rec.last_seen_ms = now;
    rec.connection = Connection::Connected;
    route_[msg.vehicle_id] = conn;
    if (msg.seq <= rec.last_seq) {
      ++rec.stale_dropped;
      ++stats_.stale_dropped;
      return;
    }
    rec.last_seq = msg.seq;

    if (const auto* t = protocol::get_if<protocol::TelemetrySnapshot>(msg)) {
      rec.last_summary = t->summary;
      rec.last_telemetry = *t;
      log_locked(Direction::FromVehicle, msg);
    } else if (protocol::get_if<protocol::Event>(msg) || protocol::get_if<protocol::Error>(msg)) {
      log_locked(Direction::FromVehicle, msg);
    } else if (const auto* ack = protocol::get_if<Ack>(msg)) {
      auto it = std::find_if(pending_.begin(), pending_.end(), [&](const Pending& p) {
        return p.vehicle_id == msg.vehicle_id && p.seq == ack->ref_seq;
      });
      if (it == pending_.end()) {
        ++stats_.late_acks;  // already timed out, or never sent
        return;
      }
      log_locked(Direction::FromVehicle, msg);
      if (it->on_ack) callbacks.emplace_back(std::move(it->on_ack), *ack);
      pending_.erase(it);
    } else {
      reply_error_locked(conn, msg.seq, "unexpected message type '" + std::string(msg.type()) + "'");
    }
  }
  for (auto& [cb, ack] : callbacks) cb(ack);
}

void CccService::ingest_frame(std::string_view body, ConnectionId conn) {
  WireMessage msg;
  try {
    msg = protocol::decode(body);
  } catch (const ProtocolError& e) {
    const auto j = nlohmann::json::parse(body, nullptr, false);
    std::optional<std::uint64_t> ref;
    if (j.is_object() && j.contains("seq") && j["seq"].is_number_unsigned()) ref = j["seq"].get<std::uint64_t>();
    std::unique_lock lock(mu_);
    reply_error_locked(conn, ref, e.what());
    return;
  }
  ingest(msg, conn);
}

DispatchResult CccService::dispatch_command(const std::string& vehicle_id, const protocol::CommandBody& cmd,
                                            AckCallback on_ack) {
  DispatchResult result;
  {
    std::unique_lock lock(mu_);
    const std::int64_t now = clock_();
    auto rec = fleet_.find(vehicle_id);
    if (rec == fleet_.end()) {
      result.immediate = Ack{0, AckOutcome::Rejected, ccc_reasons::kUnknownVehicle};
    } else {
      refresh_connections_locked(now);
      auto route = route_.find(vehicle_id);
      if (rec->second.connection == Connection::Lost || route == route_.end()) {
        result.immediate = Ack{0, AckOutcome::Rejected, ccc_reasons::kDisconnected};
      } else {
        const std::uint64_t seq = ++out_seq_[vehicle_id];
        WireMessage msg{vehicle_id, seq, now, protocol::Command{cmd}};
        log_locked(Direction::ToVehicle, msg);
        pending_.push_back({vehicle_id, seq, now + cfg_.ack_timeout_ms, std::move(on_ack)});
        result.seq = seq;
        auto& conn = conns_.at(route->second);
        // A failed send is not special-cased: the command simply times out.
        if (conn.send) conn.send(msg);
      }
    }
  }
  if (result.immediate && on_ack) on_ack(*result.immediate);
  return result;
}

void CccService::refresh_connections_locked(std::int64_t now) {
  for (auto& [_, rec] : fleet_) {
    if (rec.connection == Connection::Connected && now - rec.last_seen_ms > cfg_.lost_after_ms) {
      rec.connection = Connection::Lost;
    }
  }
}

void CccService::poll() {
  std::vector<std::pair<AckCallback, Ack>> callbacks;
  {
    std::unique_lock lock(mu_);
    const std::int64_t now = clock_();
    refresh_connections_locked(now);
    auto expired = std::stable_partition(pending_.begin(), pending_.end(),
                                         [&](const Pending& p) { return now < p.deadline_ms; });
    for (auto it = expired; it != pending_.end(); ++it) {
      Ack ack{it->seq, AckOutcome::Timeout, ccc_reasons::kTimeout};
      log_locked(Direction::Internal, WireMessage{it->vehicle_id, ++out_seq_[it->vehicle_id], now, ack});
      ++stats_.timeouts;
      if (it->on_ack) callbacks.emplace_back(std::move(it->on_ack), ack);
    }
    pending_.erase(expired, pending_.end());
  }
  for (auto& [cb, ack] : callbacks) cb(ack);
}

std::vector<VehicleRecord> CccService::fleet_query() const {
  std::shared_lock lock(mu_);
  const std::int64_t now = clock_();
  std::vector<VehicleRecord> out;
  out.reserve(fleet_.size());
  for (const auto& [_, rec] : fleet_) {
    out.push_back(rec);
    if (now - rec.last_seen_ms > cfg_.lost_after_ms) out.back().connection = Connection::Lost;
  }
  return out;
}

std::optional<VehicleRecord> CccService::vehicle_detail(const std::string& vehicle_id) const {
  std::shared_lock lock(mu_);
  auto it = fleet_.find(vehicle_id);
  if (it == fleet_.end()) return std::nullopt;
  VehicleRecord rec = it->second;
  if (clock_() - rec.last_seen_ms > cfg_.lost_after_ms) rec.connection = Connection::Lost;
  return rec;
}

CccStats CccService::stats() const {
  std::shared_lock lock(mu_);
  return stats_;
}

std::size_t CccService::pending_commands() const {
  std::shared_lock lock(mu_);
  return pending_.size();
}

std::uint64_t CccService::subscribe(Subscriber s) {
  std::unique_lock lock(mu_);
  const auto id = next_sub_++;
  subscribers_[id] = std::move(s);
  return id;
}

void CccService::unsubscribe(std::uint64_t id) {
  std::unique_lock lock(mu_);
  subscribers_.erase(id);
}

}  // namespace dcage
