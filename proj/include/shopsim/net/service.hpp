#pragma once

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "shopsim/gateway.hpp"

namespace shopsim::net {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

struct ServiceOptions {
  std::string bind_address = "127.0.0.1";
  std::uint16_t port = 7450;  // 0 picks an ephemeral port
  std::string dashboard_dir;  // empty: no static files
  std::chrono::milliseconds tick_period{1000};
  std::optional<std::uint64_t> max_ticks;  // stop after this many ticks
  std::optional<Scenario> scenario;        // scheduled inputs merged ahead of live ones
  std::function<void(const std::vector<LogEntry>&)> on_log;
  std::function<std::int64_t()> clock_ms;  // heartbeat clock; steady clock if unset
};

inline std::string mime_type(const std::filesystem::path& p) {
  const std::string ext = p.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript; charset=utf-8";
  if (ext == ".css") return "text/css; charset=utf-8";
  if (ext == ".json" || ext == ".map") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".ico") return "image/x-icon";
  if (ext == ".wasm") return "application/wasm";
  return "application/octet-stream";
}

// Resolves a request target inside `root`; nullopt for anything that escapes
// it or does not name a regular file.
inline std::optional<std::filesystem::path> resolve_static(const std::string& root, std::string_view target) {
  namespace fs = std::filesystem;
  if (root.empty()) return std::nullopt;
  std::string path(target.substr(0, target.find_first_of("?#")));
  if (path.empty() || path.front() != '/') return std::nullopt;
  if (path.back() == '/') path += "index.html";
  const fs::path rel = fs::path(path.substr(1)).lexically_normal();
  if (rel.empty() || rel.is_absolute() || *rel.begin() == "..") return std::nullopt;
  fs::path full = fs::path(root) / rel;
  std::error_code ec;
  if (!fs::is_regular_file(full, ec)) return std::nullopt;
  return full;
}

class Service;

// Transport-neutral view of one connected client.
class Connection : public std::enable_shared_from_this<Connection> {
 public:
  virtual ~Connection() = default;
  virtual void send(std::string frame) = 0;
  virtual void close_after_flush() = 0;
  const std::string& session_id() const { return sid_; }

 protected:
  std::string sid_;
  friend class Service;
};

// Hosts one World, its single ticker, the gateway and every connection on
// one io_context thread. All gateway and world access happens on that
// thread; only the injection queue is shared.
class Service {
 public:
  Service(asio::io_context& ioc, World world, GatewayConfig config, ServiceOptions opts)
      : ioc_(ioc),
        world_(std::move(world)),
        gateway_(std::move(config), world_, queue_),
        opts_(std::move(opts)),
        acceptor_(ioc),
        tick_timer_(ioc),
        heartbeat_timer_(ioc) {
    if (opts_.scenario) {
      apply_initial(world_, *opts_.scenario);
      schedule_ = opts_.scenario->schedule();
    }
  }

  void start() {
    tcp::endpoint ep(asio::ip::make_address(opts_.bind_address), opts_.port);
    acceptor_.open(ep.protocol());
    acceptor_.set_option(asio::socket_base::reuse_address(true));
    acceptor_.bind(ep);
    acceptor_.listen();
    accept();
    arm_tick();
    arm_heartbeat();
  }

  void stop() {
    stopped_ = true;
    beast::error_code ec;
    acceptor_.close(ec);
    tick_timer_.cancel();
    heartbeat_timer_.cancel();
    auto conns = conns_;
    for (auto& [sid, c] : conns) c->close_after_flush();
  }

  std::uint16_t port() const { return acceptor_.local_endpoint().port(); }
  const World& world() const { return world_; }
  Gateway& gateway() { return gateway_; }
  InjectionQueue& queue() { return queue_; }

  std::int64_t now_ms() const {
    if (opts_.clock_ms) return opts_.clock_ms();
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
  }

  // --- called by connections (io thread) ---
  void attach(const std::shared_ptr<Connection>& c) {
    c->sid_ = gateway_.open_session(now_ms());
    conns_[c->sid_] = c;
  }
  void on_frame(const std::string& sid, std::string_view bytes) { dispatch(gateway_.on_frame(sid, bytes, now_ms())); }
  void on_disconnect(const std::string& sid) {
    gateway_.close_session(sid);
    conns_.erase(sid);
  }
  const std::string& dashboard_dir() const { return opts_.dashboard_dir; }

  // Runs one tick immediately (also used by the timer).
  void tick_now() {
    std::vector<Injection> inputs;
    if (auto it = schedule_.find(world_.tick_index); it != schedule_.end()) inputs = it->second;
    for (auto& inj : queue_.drain()) inputs.push_back(std::move(inj));
    auto entries = tick_in_place(world_, inputs);
    if (opts_.on_log) opts_.on_log(entries);
    dispatch(gateway_.on_tick(entries));
    ++ticks_run_;
    if (opts_.max_ticks && ticks_run_ >= *opts_.max_ticks) stop();
  }

 private:
  void dispatch(std::vector<Outbound> out) {
    for (auto& o : out) {
      auto it = conns_.find(o.session_id);
      if (it == conns_.end()) continue;
      auto conn = it->second;
      if (o.msg) conn->send(proto::encode_frame(*o.msg));
      if (o.close) {
        conn->close_after_flush();
        gateway_.close_session(o.session_id);
        conns_.erase(o.session_id);
      }
    }
  }

  void accept();

  void arm_tick() {
    if (stopped_) return;
    tick_timer_.expires_after(opts_.tick_period);
    tick_timer_.async_wait([this](beast::error_code ec) {
      if (ec || stopped_) return;
      tick_now();
      arm_tick();
    });
  }

  void arm_heartbeat() {
    if (stopped_) return;
    heartbeat_timer_.expires_after(std::chrono::milliseconds(250));
    heartbeat_timer_.async_wait([this](beast::error_code ec) {
      if (ec || stopped_) return;
      dispatch(gateway_.poll_heartbeat(now_ms()));
      arm_heartbeat();
    });
  }

  asio::io_context& ioc_;
  World world_;
  InjectionQueue queue_;
  Gateway gateway_;
  ServiceOptions opts_;
  tcp::acceptor acceptor_;
  asio::steady_timer tick_timer_;
  asio::steady_timer heartbeat_timer_;
  std::map<std::uint64_t, std::vector<Injection>> schedule_;
  std::map<std::string, std::shared_ptr<Connection>> conns_;
  std::uint64_t ticks_run_ = 0;
  bool stopped_ = false;
};

// Newline-delimited frames over a raw stream socket.
class TcpConnection : public Connection {
 public:
  TcpConnection(tcp::socket socket, Service& svc, std::string prefix)
      : socket_(std::move(socket)), svc_(svc), in_(std::move(prefix)) {}

  void start() {
    svc_.attach(shared_from_this());
    read();
  }

  void send(std::string frame) override {
    if (closing_) return;
    out_.push_back(std::move(frame));
    if (out_.size() == 1) write();
  }

  void close_after_flush() override {
    if (closing_) return;
    closing_ = true;
    if (out_.empty()) shutdown();
  }

 private:
  void read() {
    auto self = std::static_pointer_cast<TcpConnection>(shared_from_this());
    asio::async_read_until(socket_, asio::dynamic_buffer(in_, proto::kMaxFrameBytes + 1), '\n',
                           [self](beast::error_code ec, std::size_t n) { self->on_read(ec, n); });
  }

  void on_read(beast::error_code ec, std::size_t n) {
    if (ec == asio::error::not_found) {
      // Line longer than the cap: report it and drop the connection, since
      // the stream can no longer be resynchronised cheaply.
      svc_.on_frame(sid_, in_);
      close_after_flush();
      return;
    }
    if (ec) {
      if (!gone_) svc_.on_disconnect(sid_);
      gone_ = true;
      return;
    }
    std::string line = in_.substr(0, n);
    in_.erase(0, n);
    svc_.on_frame(sid_, line);
    if (!closing_) read();
  }

  void write() {
    auto self = std::static_pointer_cast<TcpConnection>(shared_from_this());
    asio::async_write(socket_, asio::buffer(out_.front()), [self](beast::error_code ec, std::size_t) {
      self->out_.pop_front();
      if (ec) {
        self->out_.clear();
        self->shutdown();
        return;
      }
      if (!self->out_.empty()) self->write();
      else if (self->closing_) self->shutdown();
    });
  }

  void shutdown() {
    beast::error_code ec;
    socket_.shutdown(tcp::socket::shutdown_both, ec);
    socket_.close(ec);
    if (!gone_) svc_.on_disconnect(sid_);
    gone_ = true;
  }

  tcp::socket socket_;
  Service& svc_;
  std::string in_;
  std::deque<std::string> out_;
  bool closing_ = false;
  bool gone_ = false;
};

// The same frames carried one per WebSocket text message (browser channel).
class WsConnection : public Connection {
 public:
  WsConnection(tcp::socket socket, Service& svc) : ws_(std::move(socket)), svc_(svc) {}

  void start(http::request<http::string_body> req) {
    ws_.read_message_max(4 * proto::kMaxFrameBytes);
    ws_.text(true);
    auto self = std::static_pointer_cast<WsConnection>(shared_from_this());
    ws_.async_accept(req, [self](beast::error_code ec) {
      if (ec) return;
      self->svc_.attach(self);
      self->read();
    });
  }

  void send(std::string frame) override {
    if (closing_) return;
    out_.push_back(std::move(frame));
    if (out_.size() == 1) write();
  }

  void close_after_flush() override {
    if (closing_) return;
    closing_ = true;
    if (out_.empty()) shutdown();
  }

 private:
  void read() {
    auto self = std::static_pointer_cast<WsConnection>(shared_from_this());
    ws_.async_read(buf_, [self](beast::error_code ec, std::size_t) {
      if (ec) {
        if (!self->gone_) self->svc_.on_disconnect(self->sid_);
        self->gone_ = true;
        return;
      }
      std::string msg = beast::buffers_to_string(self->buf_.data());
      self->buf_.consume(self->buf_.size());
      self->svc_.on_frame(self->sid_, msg);
      if (!self->closing_) self->read();
    });
  }

  void write() {
    auto self = std::static_pointer_cast<WsConnection>(shared_from_this());
    ws_.async_write(asio::buffer(out_.front()), [self](beast::error_code ec, std::size_t) {
      self->out_.pop_front();
      if (ec) {
        self->out_.clear();
        self->shutdown();
        return;
      }
      if (!self->out_.empty()) self->write();
      else if (self->closing_) self->shutdown();
    });
  }

  void shutdown() {
    if (!gone_) svc_.on_disconnect(sid_);
    gone_ = true;
    auto self = std::static_pointer_cast<WsConnection>(shared_from_this());
    ws_.async_close(websocket::close_code::normal, [self](beast::error_code) {});
  }

  websocket::stream<tcp::socket> ws_;
  Service& svc_;
  beast::flat_buffer buf_;
  std::deque<std::string> out_;
  bool closing_ = false;
  bool gone_ = false;
};

// Plain HTTP: upgrades `/ws` to a WebSocket session, serves dashboard assets
// otherwise. One request per connection.
class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket socket, Service& svc, std::string prefix) : socket_(std::move(socket)), svc_(svc) {
    auto mb = buf_.prepare(prefix.size());
    asio::buffer_copy(mb, asio::buffer(prefix));
    buf_.commit(prefix.size());
  }

  void start() {
    auto self = shared_from_this();
    http::async_read(socket_, buf_, req_, [self](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->on_request();
    });
  }

 private:
  void on_request() {
    if (websocket::is_upgrade(req_)) {
      if (req_.target() == "/ws") {
        std::make_shared<WsConnection>(std::move(socket_), svc_)->start(std::move(req_));
        return;
      }
      respond(http::status::not_found, "text/plain", "no such channel\n");
      return;
    }
    if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
      respond(http::status::method_not_allowed, "text/plain", "method not allowed\n");
      return;
    }
    auto path = resolve_static(svc_.dashboard_dir(), std::string_view(req_.target().data(), req_.target().size()));
    if (!path) {
      respond(http::status::not_found, "text/plain", "not found\n");
      return;
    }
    std::ifstream in(*path, std::ios::binary);
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    respond(http::status::ok, mime_type(*path), req_.method() == http::verb::head ? std::string() : std::move(body));
  }

  void respond(http::status status, const std::string& type, std::string body) {
    res_ = {};
    res_.result(status);
    res_.version(req_.version());
    res_.set(http::field::server, "shopsim");
    res_.set(http::field::content_type, type);
    res_.keep_alive(false);
    res_.body() = std::move(body);
    res_.prepare_payload();
    auto self = shared_from_this();
    http::async_write(socket_, res_, [self](beast::error_code, std::size_t) {
      beast::error_code ec;
      self->socket_.shutdown(tcp::socket::shutdown_send, ec);
    });
  }

  tcp::socket socket_;
  Service& svc_;
  beast::flat_buffer buf_;
  http::request<http::string_body> req_;
  http::response<http::string_body> res_;
};

// Peeks at the first byte: an HTTP method ("GET", "HEAD") selects the
// HTTP/WebSocket path, anything else is a raw frame stream.
class Sniffer : public std::enable_shared_from_this<Sniffer> {
 public:
  Sniffer(tcp::socket socket, Service& svc) : socket_(std::move(socket)), svc_(svc) {}

  void start() {
    auto self = shared_from_this();
    socket_.async_read_some(asio::buffer(first_), [self](beast::error_code ec, std::size_t n) {
      if (ec || n == 0) return;
      std::string prefix(self->first_.data(), n);
      if (prefix[0] == 'G' || prefix[0] == 'H')
        std::make_shared<HttpConnection>(std::move(self->socket_), self->svc_, std::move(prefix))->start();
      else
        std::make_shared<TcpConnection>(std::move(self->socket_), self->svc_, std::move(prefix))->start();
    });
  }

 private:
  tcp::socket socket_;
  Service& svc_;
  std::array<char, 1> first_{};
};

inline void Service::accept() {
  acceptor_.async_accept([this](beast::error_code ec, tcp::socket socket) {
    if (ec || stopped_) return;
    beast::error_code nd;
    socket.set_option(tcp::no_delay(true), nd);
    std::make_shared<Sniffer>(std::move(socket), *this)->start();
    accept();
  });
}

}  // namespace shopsim::net
