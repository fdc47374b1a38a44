#include "dcage/net.hpp"

#include <atomic>
#include <chrono>
#include <deque>
#include <mutex>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "dcage/dc_runtime.hpp"
#include "dcage/errors.hpp"
#include "dcage/event_log.hpp"
#include "dcage/simulation.hpp"

namespace dcage::net {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using asio::awaitable;
using asio::use_awaitable;
using nlohmann::json;

Endpoint parse_endpoint(std::string_view text, std::uint16_t default_port) {
  Endpoint ep{"127.0.0.1", default_port};
  const auto colon = text.rfind(':');
  const std::string_view host = colon == std::string_view::npos ? text : text.substr(0, colon);
  if (!host.empty()) ep.host = std::string(host);
  if (colon != std::string_view::npos) {
    const std::string port(text.substr(colon + 1));
    std::size_t used = 0;
    int p = -1;
    try {
      p = std::stoi(port, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != port.size() || p < 1 || p > 65535) throw ConfigError("bad port in address '" + std::string(text) + "'");
    ep.port = static_cast<std::uint16_t>(p);
  }
  return ep;
}

json record_to_json(const VehicleRecord& r, bool with_telemetry) {
  json j{{"vehicle_id", r.vehicle_id},
         {"connection", std::string(to_string(r.connection))},
         {"last_seen_ms", r.last_seen_ms},
         {"software", r.software},
         {"last_seq", r.last_seq},
         {"stale_dropped", r.stale_dropped}};
  j["last_summary"] = r.last_summary ? protocol::summary_to_json(*r.last_summary) : json(nullptr);
  if (with_telemetry) {
    j["telemetry"] = r.last_telemetry
                         ? protocol::to_json(protocol::WireMessage{r.vehicle_id, 0, 0, *r.last_telemetry})["payload"]
                         : json(nullptr);
  }
  return j;
}

namespace {

// ---- vehicle link (CCC side) ---------------------------------------------

class VehicleSession : public std::enable_shared_from_this<VehicleSession> {
 public:
  VehicleSession(tcp::socket sock, CccService& ccc) : sock_(std::move(sock)), ccc_(ccc) {}

  void start() {
    std::weak_ptr<VehicleSession> weak = weak_from_this();
    conn_ = ccc_.open_connection([weak](const protocol::WireMessage& m) {
      auto self = weak.lock();
      if (!self || self->closed_) return false;
      asio::post(self->sock_.get_executor(), [self, f = protocol::frame(m)]() mutable { self->enqueue(std::move(f)); });
      return true;
    });
    asio::co_spawn(sock_.get_executor(), [self = shared_from_this()] { return self->read_loop(); }, asio::detached);
  }

 private:
  awaitable<void> read_loop() {
    protocol::FrameReader reader;
    std::array<char, 8192> buf{};
    try {
      for (;;) {
        const std::size_t n = co_await sock_.async_read_some(asio::buffer(buf), use_awaitable);
        reader.feed({buf.data(), n});
        while (auto body = reader.next()) ccc_.ingest_frame(*body, conn_);
      }
    } catch (const std::exception&) {
      // EOF, reset or an oversized frame: the link is gone either way.
    }
    shutdown();
  }

  void enqueue(std::string f) {
    if (closed_) return;
    out_.push_back(std::move(f));
    if (!writing_) {
      writing_ = true;
      asio::co_spawn(sock_.get_executor(), [self = shared_from_this()] { return self->write_loop(); }, asio::detached);
    }
  }

  awaitable<void> write_loop() {
    try {
      while (!out_.empty()) {
        co_await asio::async_write(sock_, asio::buffer(out_.front()), use_awaitable);
        out_.pop_front();
      }
    } catch (const std::exception&) {
      out_.clear();
    }
    writing_ = false;
  }

  void shutdown() {
    if (closed_.exchange(true)) return;
    ccc_.close_connection(conn_);
    boost::system::error_code ec;
    sock_.shutdown(tcp::socket::shutdown_both, ec);
    sock_.close(ec);
  }

  tcp::socket sock_;
  CccService& ccc_;
  ConnectionId conn_{0};
  std::deque<std::string> out_;
  bool writing_{false};
  std::atomic<bool> closed_{false};
};

// ---- HTTP / WebSocket -----------------------------------------------------

using Request = http::request<http::string_body>;
using Response = http::response<http::string_body>;

Response json_response(const Request& req, http::status status, const json& body) {
  Response res{status, req.version()};
  res.set(http::field::content_type, "application/json");
  res.set(http::field::access_control_allow_origin, "*");
  res.keep_alive(req.keep_alive());
  res.body() = body.dump();
  res.prepare_payload();
  return res;
}

json ack_to_json(const protocol::Ack& a) {
  return {{"ref_seq", a.ref_seq}, {"outcome", std::string(protocol::to_string(a.outcome))}, {"reason", a.reason}};
}

// Pending WebSocket output, owned by the session's executor.
struct StreamQueue {
  explicit StreamQueue(const asio::any_io_executor& ex) : signal(ex) {}
  static constexpr std::size_t kMaxBacklog = 10000;
  std::deque<std::string> lines;
  std::uint64_t dropped{0};
  bool closed{false};
  asio::steady_timer signal;
};

class HttpApi {
 public:
  explicit HttpApi(CccService& ccc) : ccc_(ccc) {}

  awaitable<void> session(tcp::socket sock) {
    beast::tcp_stream stream(std::move(sock));
    beast::flat_buffer buf;
    try {
      for (;;) {
        Request req;
        stream.expires_after(std::chrono::seconds(60));
        co_await http::async_read(stream, buf, req, use_awaitable);
        if (websocket::is_upgrade(req)) {
          if (req.target() == "/stream") {
            stream.expires_never();
            co_await stream_session(stream.release_socket(), std::move(req));
            co_return;
          }
          Response res = json_response(req, http::status::not_found, {{"error", "no such stream"}});
          co_await http::async_write(stream, res, use_awaitable);
          break;
        }
        Response res = co_await handle(req, stream.get_executor());
        co_await http::async_write(stream, res, use_awaitable);
        if (!res.keep_alive()) break;
      }
    } catch (const std::exception&) {
      co_return;
    }
    beast::error_code ec;
    stream.socket().shutdown(tcp::socket::shutdown_send, ec);
  }

 private:
  awaitable<Response> handle(const Request& req, asio::any_io_executor ex) {
    const std::string target(req.target());
    const std::string path = target.substr(0, target.find('?'));
    constexpr std::string_view kVehicle = "/vehicle/";
    constexpr std::string_view kCommand = "/command";

    if (path == "/fleet") {
      if (req.method() != http::verb::get) co_return method_not_allowed(req);
      json arr = json::array();
      for (const auto& r : ccc_.fleet_query()) arr.push_back(record_to_json(r, false));
      co_return json_response(req, http::status::ok, arr);
    }
    if (path.starts_with(kVehicle)) {
      std::string rest = path.substr(kVehicle.size());
      const bool command = rest.ends_with(kCommand);
      if (command) rest.resize(rest.size() - kCommand.size());
      if (rest.empty() || rest.find('/') != std::string::npos) {
        co_return json_response(req, http::status::not_found, {{"error", "not found"}});
      }
      if (!command) {
        if (req.method() != http::verb::get) co_return method_not_allowed(req);
        const auto rec = ccc_.vehicle_detail(rest);
        if (!rec) co_return json_response(req, http::status::not_found, {{"error", "unknown vehicle"}});
        co_return json_response(req, http::status::ok, record_to_json(*rec, true));
      }
      if (req.method() != http::verb::post) co_return method_not_allowed(req);
      protocol::CommandBody cmd;
      try {
        cmd = protocol::command_from_json(json::parse(req.body()));
      } catch (const std::exception& e) {
        co_return json_response(req, http::status::bad_request, {{"error", e.what()}});
      }
      co_return json_response(req, http::status::ok, co_await dispatch(rest, cmd, ex));
    }
    co_return json_response(req, http::status::not_found, {{"error", "not found"}});
  }

  static Response method_not_allowed(const Request& req) {
    return json_response(req, http::status::method_not_allowed, {{"error", "method not allowed"}});
  }

  // Waits for the Ack; the service guarantees exactly one, a timeout included.
  awaitable<json> dispatch(const std::string& vehicle_id, const protocol::CommandBody& cmd,
                           asio::any_io_executor ex) {
    struct Waiter {
      explicit Waiter(const asio::any_io_executor& e) : timer(e) {}
      asio::steady_timer timer;
      std::optional<protocol::Ack> ack;
    };
    auto w = std::make_shared<Waiter>(ex);
    w->timer.expires_after(std::chrono::hours(1));
    const DispatchResult r = ccc_.dispatch_command(vehicle_id, cmd, [w, ex](const protocol::Ack& a) {
      asio::post(ex, [w, a] {
        w->ack = a;
        w->timer.cancel();
      });
    });
    while (!w->ack) {
      boost::system::error_code ec;
      co_await w->timer.async_wait(asio::redirect_error(use_awaitable, ec));
    }
    json out{{"ack", ack_to_json(*w->ack)}};
    out["seq"] = r.seq ? json(*r.seq) : json(nullptr);
    co_return out;
  }

  awaitable<void> stream_session(tcp::socket sock, Request req) {
    auto ws = std::make_shared<websocket::stream<tcp::socket>>(std::move(sock));
    const auto ex = ws->get_executor();
    auto q = std::make_shared<StreamQueue>(ex);
    // Subscribe first so nothing logged after the handshake is missed.
    const auto sub = ccc_.subscribe([q, ex](const EventLogEntry& e) {
      asio::post(ex, [q, line = to_line(e)]() mutable {
        if (q->lines.size() >= StreamQueue::kMaxBacklog) {
          q->lines.pop_front();
          ++q->dropped;
        }
        q->lines.push_back(std::move(line));
        q->signal.cancel();
      });
    });
    try {
      co_await ws->async_accept(req, use_awaitable);
    } catch (const std::exception&) {
      ccc_.unsubscribe(sub);
      co_return;
    }
    // Reads only to notice the close.
    asio::co_spawn(
        ex,
        [ws, q]() -> awaitable<void> {
          beast::flat_buffer b;
          try {
            for (;;) {
              co_await ws->async_read(b, use_awaitable);
              b.consume(b.size());
            }
          } catch (const std::exception&) {
          }
          q->closed = true;
          q->signal.cancel();
        },
        asio::detached);
    ws->text(true);
    try {
      while (!q->closed) {
        if (q->lines.empty()) {
          q->signal.expires_after(std::chrono::hours(1));
          boost::system::error_code ec;
          co_await q->signal.async_wait(asio::redirect_error(use_awaitable, ec));
          continue;
        }
        const std::string line = std::move(q->lines.front());
        q->lines.pop_front();
        co_await ws->async_write(asio::buffer(line), use_awaitable);
      }
    } catch (const std::exception&) {
    }
    ccc_.unsubscribe(sub);
  }

  CccService& ccc_;
};

}  // namespace

// ---- server ---------------------------------------------------------------

struct CccServer::Impl {
  Impl(CccService& c, ServerOptions o)
      : ccc(c), opts(std::move(o)), vehicle_acceptor(ioc), http_acceptor(ioc), signals(ioc), api(c) {}

  CccService& ccc;
  ServerOptions opts;
  asio::io_context ioc;
  tcp::acceptor vehicle_acceptor;
  tcp::acceptor http_acceptor;
  asio::signal_set signals;
  HttpApi api;
  std::vector<std::thread> threads;
  std::optional<asio::executor_work_guard<asio::io_context::executor_type>> work;

  static void open(tcp::acceptor& acc, const std::string& bind, std::uint16_t port) {
    const tcp::endpoint ep{asio::ip::make_address(bind), port};
    acc.open(ep.protocol());
    acc.set_option(tcp::acceptor::reuse_address(true));
    acc.bind(ep);
    acc.listen();
  }

  awaitable<void> accept_vehicles() {
    for (;;) {
      tcp::socket s = co_await vehicle_acceptor.async_accept(asio::make_strand(ioc), use_awaitable);
      s.set_option(tcp::no_delay(true));
      std::make_shared<VehicleSession>(std::move(s), ccc)->start();
    }
  }

  awaitable<void> accept_http() {
    for (;;) {
      tcp::socket s = co_await http_acceptor.async_accept(asio::make_strand(ioc), use_awaitable);
      const auto ex = s.get_executor();
      asio::co_spawn(ex, api.session(std::move(s)), asio::detached);
    }
  }

  awaitable<void> poll_loop() {
    asio::steady_timer t(co_await asio::this_coro::executor);
    for (;;) {
      t.expires_after(std::chrono::milliseconds(opts.poll_interval_ms));
      co_await t.async_wait(use_awaitable);
      ccc.poll();
    }
  }
};

CccServer::CccServer(CccService& ccc, ServerOptions opts) : impl_(std::make_unique<Impl>(ccc, std::move(opts))) {
  if (impl_->opts.threads == 0) throw ConfigError("server needs at least one thread");
  if (impl_->opts.poll_interval_ms <= 0) throw ConfigError("poll interval must be strictly positive");
}

CccServer::~CccServer() {
  stop();
  wait();
}

void CccServer::start() {
  Impl& m = *impl_;
  Impl::open(m.vehicle_acceptor, m.opts.bind, m.opts.vehicle_port);
  Impl::open(m.http_acceptor, m.opts.bind, m.opts.http_port);
  if (m.opts.handle_signals) {
    m.signals.add(SIGINT);
    m.signals.add(SIGTERM);
    m.signals.async_wait([this](const boost::system::error_code& ec, int) {
      if (!ec) stop();
    });
  }
  auto log_errors = [](std::exception_ptr) {};
  asio::co_spawn(m.ioc, m.accept_vehicles(), log_errors);
  asio::co_spawn(m.ioc, m.accept_http(), log_errors);
  asio::co_spawn(m.ioc, m.poll_loop(), log_errors);
  m.work.emplace(m.ioc.get_executor());
  for (unsigned i = 0; i < m.opts.threads; ++i) m.threads.emplace_back([&m] { m.ioc.run(); });
}

void CccServer::stop() {
  impl_->work.reset();
  impl_->ioc.stop();
}

void CccServer::wait() {
  for (auto& t : impl_->threads) {
    if (t.joinable() && t.get_id() != std::this_thread::get_id()) t.join();
  }
  impl_->threads.clear();
}

std::uint16_t CccServer::vehicle_port() const { return impl_->vehicle_acceptor.local_endpoint().port(); }
std::uint16_t CccServer::http_port() const { return impl_->http_acceptor.local_endpoint().port(); }

// ---- vehicle link (vehicle side) -----------------------------------------

struct VehicleLink::Impl {
  asio::io_context ioc;
  tcp::socket sock{ioc};
  std::thread thread;
  std::atomic<bool> connected{false};
  std::mutex mu;
  std::vector<std::string> inbox;
  std::deque<std::string> out;  // io thread only
  bool writing{false};

  awaitable<void> read_loop() {
    protocol::FrameReader reader;
    std::array<char, 8192> buf{};
    try {
      for (;;) {
        const std::size_t n = co_await sock.async_read_some(asio::buffer(buf), use_awaitable);
        reader.feed({buf.data(), n});
        while (auto body = reader.next()) {
          std::lock_guard lock(mu);
          inbox.push_back(std::move(*body));
        }
      }
    } catch (const std::exception&) {
    }
    connected = false;
  }

  awaitable<void> write_loop() {
    try {
      while (!out.empty()) {
        co_await asio::async_write(sock, asio::buffer(out.front()), use_awaitable);
        out.pop_front();
      }
    } catch (const std::exception&) {
      connected = false;
      out.clear();
    }
    writing = false;
  }
};

VehicleLink::VehicleLink(const Endpoint& ccc) : impl_(std::make_unique<Impl>()) {
  tcp::resolver resolver(impl_->ioc);
  asio::connect(impl_->sock, resolver.resolve(ccc.host, std::to_string(ccc.port)));
  impl_->sock.set_option(tcp::no_delay(true));
  impl_->connected = true;
  asio::co_spawn(impl_->ioc, impl_->read_loop(), asio::detached);
  impl_->thread = std::thread([m = impl_.get()] { m->ioc.run(); });
}

VehicleLink::~VehicleLink() { close(); }

bool VehicleLink::send(const protocol::WireMessage& msg) {
  if (!impl_->connected) return false;
  asio::post(impl_->ioc, [m = impl_.get(), f = protocol::frame(msg)]() mutable {
    m->out.push_back(std::move(f));
    if (!m->writing) {
      m->writing = true;
      asio::co_spawn(m->ioc, m->write_loop(), asio::detached);
    }
  });
  return true;
}

std::vector<std::string> VehicleLink::take_received() {
  std::lock_guard lock(impl_->mu);
  return std::exchange(impl_->inbox, {});
}

bool VehicleLink::connected() const { return impl_->connected; }

void VehicleLink::close() {
  if (!impl_->thread.joinable()) return;
  asio::post(impl_->ioc, [m = impl_.get()] {
    // Let queued frames go out before the close.
    auto finish = [m]() -> awaitable<void> {
      asio::steady_timer t(m->ioc);
      for (int i = 0; i < 100 && (m->writing || !m->out.empty()); ++i) {
        t.expires_after(std::chrono::milliseconds(10));
        co_await t.async_wait(use_awaitable);
      }
      boost::system::error_code ec;
      m->sock.shutdown(tcp::socket::shutdown_both, ec);
      m->sock.close(ec);
      m->ioc.stop();
    };
    asio::co_spawn(m->ioc, finish(), asio::detached);
  });
  impl_->thread.join();
  impl_->connected = false;
}

// ---- live run ---------------------------------------------------------------

LiveResult run_live(const Scenario& scenario_in, const Endpoint& ccc, const LiveOptions& options) {
  Scenario sc = scenario_in;
  if (options.seed) sc.sim.seed = *options.seed;
  if (options.tick_ms) {
    if (*options.tick_ms < 1 || *options.tick_ms > 100) throw ConfigError("tick_ms must lie in [1, 100]");
    sc.sim.tick_ms = *options.tick_ms;
  }
  if (options.vehicle_id) sc.vehicle_id = *options.vehicle_id;

  Simulation sim(sc);
  DependabilityCage dc(DcConfig::from_scenario(sc));
  VehicleLink link(ccc);
  link.send(dc.register_message(0));

  LiveResult res;
  bool assigned = !sc.mission.has_value();
  std::optional<std::int64_t> finish_at;
  DrivingMode last_mode = dc.mode();
  const auto wall_start = std::chrono::steady_clock::now();
  const auto max_ms = static_cast<std::int64_t>(sc.sim.max_duration_s * 1000.0);

  while (sim.now_ms() < max_ms) {
    if (!assigned && sim.now_ms() >= sc.mission->assign_at_ms) {
      assigned = true;
      if (auto why = sim.assign(sc.mission->assignment); why && options.progress) {
        *options.progress << "mission not assigned: " << *why << "\n";
      }
    }
    for (const auto& body : link.take_received()) dc.handle_ccc_frame(body);
    const TickResult r = dc.tick(sim.sense());
    sim.apply(r.actuation);
    for (const auto& m : dc.drain_outbox()) link.send(m);

    if (options.progress && dc.mode() != last_mode) {
      *options.progress << "[" << sim.now_ms() << " ms] " << to_string(last_mode) << " -> " << to_string(dc.mode())
                        << "\n";
    }
    last_mode = dc.mode();
    if (!link.connected()) {
      res.link_lost = true;
      break;
    }
    if (!finish_at && sc.mission && sim.mission().state == MissionState::Completed) finish_at = sim.now_ms() + 1000;
    if (finish_at && sim.now_ms() >= *finish_at) break;
    if (options.realtime) std::this_thread::sleep_until(wall_start + std::chrono::milliseconds(sim.now_ms()));
  }
  link.close();
  res.final_mission_state = sim.mission().state;
  res.final_mode = dc.mode();
  res.sim_duration_ms = sim.now_ms();
  return res;
}

}  // namespace dcage::net
