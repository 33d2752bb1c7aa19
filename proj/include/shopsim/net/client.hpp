#pragma once

#include <boost/asio.hpp>

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "shopsim/gateway.hpp"

namespace shopsim::net {

// Synchronous frame client with per-operation timeouts. Drives a private
// io_context so callers never see asynchrony.
class Client {
 public:
  explicit Client(std::chrono::milliseconds timeout = std::chrono::seconds(5)) : socket_(ioc_), timeout_(timeout) {}

  void connect(const std::string& host, std::uint16_t port) {
    boost::asio::ip::tcp::resolver resolver(ioc_);
    boost::system::error_code ec;
    auto endpoints = resolver.resolve(host, std::to_string(port), ec);
    if (ec) throw Error(Errc::UsageError, "cannot resolve " + host + ": " + ec.message());
    bool done = false;
    boost::asio::async_connect(socket_, endpoints, [&](boost::system::error_code e, const auto&) {
      ec = e;
      done = true;
    });
    run(done, "connect");
    if (ec) throw std::runtime_error("connect to " + host + ":" + std::to_string(port) + " failed: " + ec.message());
  }

  // Sends a frame with the next local seq; returns that seq.
  std::uint64_t send(proto::MsgType type, json body = json::object()) {
    const std::uint64_t seq = next_seq_++;
    send_raw(proto::encode_frame(proto::make(type, seq, 0, std::move(body))));
    return seq;
  }

  void send_raw(const std::string& bytes) {
    bool done = false;
    boost::system::error_code ec;
    boost::asio::async_write(socket_, boost::asio::buffer(bytes), [&](boost::system::error_code e, std::size_t) {
      ec = e;
      done = true;
    });
    run(done, "write");
    if (ec) throw std::runtime_error("write failed: " + ec.message());
  }

  // Next inbound frame; nullopt once the server closed the stream.
  std::optional<proto::Message> read() {
    bool done = false;
    boost::system::error_code ec;
    std::size_t n = 0;
    boost::asio::async_read_until(socket_, boost::asio::dynamic_buffer(in_, 16 * proto::kMaxFrameBytes), '\n',
                                  [&](boost::system::error_code e, std::size_t k) {
                                    ec = e;
                                    n = k;
                                    done = true;
                                  });
    run(done, "read");
    if (ec == boost::asio::error::eof || ec == boost::asio::error::connection_reset) return std::nullopt;
    if (ec) throw std::runtime_error("read failed: " + ec.message());
    std::string line = in_.substr(0, n);
    in_.erase(0, n);
    auto decoded = proto::decode_frame(line);
    if (auto* err = std::get_if<proto::DecodeError>(&decoded))
      throw std::runtime_error("bad frame from server: " + err->reason);
    return std::get<proto::Message>(std::move(decoded));
  }

  // Reads until a frame satisfies `pred`; frames skipped on the way are kept
  // in `skipped` when given.
  template <class Pred>
  std::optional<proto::Message> read_until(Pred pred, std::vector<proto::Message>* skipped = nullptr) {
    while (auto m = read()) {
      if (pred(*m)) return m;
      if (skipped) skipped->push_back(std::move(*m));
    }
    return std::nullopt;
  }

  // Sends HELLO and returns the WELCOME; the STATE burst follows on the
  // stream. Throws with the NACK code on refusal.
  proto::Message hello(const std::string& token, Role role) {
    send(proto::MsgType::HELLO, json{{"token", token}, {"role", std::string(to_string(role))}});
    auto first = read();
    if (!first) throw std::runtime_error("connection closed during HELLO");
    if (first->type == proto::MsgType::NACK)
      throw std::runtime_error(first->body.at("code").get<std::string>() + ": " +
                               first->body.at("reason").get<std::string>());
    if (first->type != proto::MsgType::WELCOME) throw std::runtime_error("expected WELCOME");
    return *first;
  }

  // Waits for the ACK or NACK that references `seq`.
  proto::Message await_reply(std::uint64_t seq, std::vector<proto::Message>* skipped = nullptr) {
    auto m = read_until(
        [&](const proto::Message& f) {
          return (f.type == proto::MsgType::ACK || f.type == proto::MsgType::NACK) &&
                 f.body.value("ref_seq", std::uint64_t{0}) == seq;
        },
        skipped);
    if (!m) throw std::runtime_error("connection closed before reply");
    return *m;
  }

  void close() {
    boost::system::error_code ec;
    socket_.shutdown(boost::asio::ip::tcp::socket::shutdown_both, ec);
    socket_.close(ec);
  }

 private:
  void run(bool& done, const char* what) {
    ioc_.restart();
    ioc_.run_for(timeout_);
    if (!done) {
      socket_.cancel();
      ioc_.restart();
      ioc_.run();
      throw std::runtime_error(std::string(what) + " timed out");
    }
  }

  boost::asio::io_context ioc_;
  boost::asio::ip::tcp::socket socket_;
  std::chrono::milliseconds timeout_;
  std::string in_;
  std::uint64_t next_seq_ = 1;
};

}  // namespace shopsim::net
