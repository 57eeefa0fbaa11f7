// Copyright 2026 The eeroot Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "eeroot/ws_server.hpp"

#include <atomic>
#include <thread>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "eeroot/errors.hpp"

namespace eeroot {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(tcp::socket socket, Service& service) : ws_(std::move(socket)), service_(service) {}

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(beast::bind_front_handler(&Session::on_accept, shared_from_this()));
  }

  void close() {
    asio::post(ws_.get_executor(), [self = shared_from_this()] {
      beast::error_code ec;
      beast::get_lowest_layer(self->ws_).socket().close(ec);
    });
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    std::weak_ptr<Session> weak = weak_from_this();
    auto executor = ws_.get_executor();
    id_ = service_.connect([weak, executor] {
      asio::post(executor, [weak] {
        if (auto self = weak.lock()) self->flush();
      });
    });
    connected_ = true;
    read();
    flush();
  }

  void read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&Session::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      finish();
      return;
    }
    service_.submit(id_, beast::buffers_to_string(buffer_.data()));
    buffer_.consume(buffer_.size());
    read();
  }

  void flush() {
    if (writing_ || !connected_) return;
    auto msg = service_.pop(id_);
    if (!msg) return;
    writing_ = true;
    out_ = msg->dump();
    ws_.text(true);
    ws_.async_write(asio::buffer(out_), beast::bind_front_handler(&Session::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    writing_ = false;
    if (ec) {
      finish();
      return;
    }
    flush();
  }

  void finish() {
    if (!connected_) return;
    connected_ = false;
    service_.disconnect(id_);
  }

  websocket::stream<beast::tcp_stream> ws_;
  Service& service_;
  Service::ClientId id_ = 0;
  beast::flat_buffer buffer_;
  std::string out_;
  bool writing_ = false;
  bool connected_ = false;
};

}  // namespace

struct WsServer::Impl {
  Impl(Service& s, const WsServerOptions& o) : service(s), acceptor(io) {
    beast::error_code ec;
    const auto address = asio::ip::make_address(o.address, ec);
    if (ec) throw ConfigError("invalid listen address '" + o.address + "'");
    const tcp::endpoint endpoint(address, o.port);
    acceptor.open(endpoint.protocol(), ec);
    if (!ec) acceptor.set_option(asio::socket_base::reuse_address(true), ec);
    if (!ec) acceptor.bind(endpoint, ec);
    if (!ec) acceptor.listen(asio::socket_base::max_listen_connections, ec);
    if (ec) throw Error("cannot listen on " + o.address + ":" + std::to_string(o.port) + ": " + ec.message());
  }

  void accept() {
    acceptor.async_accept(asio::make_strand(io), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      auto session = std::make_shared<Session>(std::move(socket), service);
      std::erase_if(sessions, [](const std::weak_ptr<Session>& w) { return w.expired(); });
      sessions.push_back(session);
      session->start();
      accept();
    });
  }

  Service& service;
  asio::io_context io;
  tcp::acceptor acceptor;
  std::vector<std::weak_ptr<Session>> sessions;
  std::thread thread;
  std::atomic<bool> running{false};
};

WsServer::WsServer(Service& service, WsServerOptions options)
    : impl_(std::make_unique<Impl>(service, options)) {}

WsServer::~WsServer() { stop(); }

std::uint16_t WsServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void WsServer::start() {
  if (impl_->running.exchange(true)) return;
  impl_->accept();
  impl_->thread = std::thread([this] { impl_->io.run(); });
}

void WsServer::stop() {
  if (!impl_ || !impl_->running.exchange(false)) return;
  asio::post(impl_->io, [this] {
    beast::error_code ec;
    impl_->acceptor.close(ec);
    for (auto& w : impl_->sessions) {
      if (auto s = w.lock()) s->close();
    }
  });
  impl_->io.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace eeroot
