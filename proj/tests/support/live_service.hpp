#pragma once

#include <future>
#include <thread>

#include "shopsim/net/service.hpp"

namespace shopsim::testing {

// A Service on an ephemeral port with its io_context on a background thread.
class LiveService {
 public:
  explicit LiveService(net::ServiceOptions opts = fast(), World world = make_world(default_manifest()))
      : svc_(ioc_, std::move(world),
             GatewayConfig{{{"op-token", Role::Operator}, {"view-token", Role::Viewer}}}, std::move(opts)) {
    svc_.start();
    port_ = svc_.port();
    thread_ = std::thread([this] { ioc_.run(); });
  }

  ~LiveService() {
    boost::asio::post(ioc_, [this] {
      svc_.stop();
      ioc_.stop();
    });
    thread_.join();
  }

  static net::ServiceOptions fast() {
    net::ServiceOptions o;
    o.port = 0;
    o.tick_period = std::chrono::milliseconds(20);
    return o;
  }

  std::uint16_t port() const { return port_; }

  // Runs `f` on the io thread and waits for it.
  template <class F>
  auto on_io(F f) {
    std::promise<decltype(f(svc_))> p;
    auto fut = p.get_future();
    boost::asio::post(ioc_, [&] {
      if constexpr (std::is_void_v<decltype(f(svc_))>) {
        f(svc_);
        p.set_value();
      } else {
        p.set_value(f(svc_));
      }
    });
    return fut.get();
  }

 private:
  boost::asio::io_context ioc_;
  net::Service svc_;
  std::uint16_t port_ = 0;
  std::thread thread_;
};

}  // namespace shopsim::testing
