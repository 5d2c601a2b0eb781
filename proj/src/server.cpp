#include "cowrite/server.hpp"

#include <deque>
#include <iostream>
#include <optional>
#include <thread>
#include <vector>

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

namespace cowrite {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

namespace {

struct Route {
  std::string session_id;
  std::string tail;  // "", "ws", "export", "analytics"
};

// Splits "/sessions/{id}[/tail]".
std::optional<Route> parse_session_path(std::string_view path) {
  constexpr std::string_view prefix = "/sessions/";
  if (path.substr(0, prefix.size()) != prefix) return std::nullopt;
  path.remove_prefix(prefix.size());
  auto slash = path.find('/');
  Route r;
  r.session_id = std::string(path.substr(0, slash));
  if (slash != std::string_view::npos) r.tail = std::string(path.substr(slash + 1));
  if (r.session_id.empty()) return std::nullopt;
  return r;
}

std::string query_param(std::string_view query, std::string_view key) {
  while (!query.empty()) {
    auto amp = query.find('&');
    auto part = query.substr(0, amp);
    auto eq = part.find('=');
    if (part.substr(0, eq) == key) return eq == std::string_view::npos ? "" : std::string(part.substr(eq + 1));
    if (amp == std::string_view::npos) break;
    query.remove_prefix(amp + 1);
  }
  return {};
}

class WebSocketSession : public std::enable_shared_from_this<WebSocketSession> {
 public:
  WebSocketSession(tcp::socket&& socket, SessionManager& manager, std::string session_id)
      : ws_(std::move(socket)), manager_(manager), session_id_(std::move(session_id)) {}

  void run(http::request<http::string_body> request) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(request, beast::bind_front_handler(&WebSocketSession::on_accept, shared_from_this()));
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    std::weak_ptr<WebSocketSession> weak = shared_from_this();
    auto executor = ws_.get_executor();
    manager_.subscribe(session_id_, [weak, executor](const json& frame) {
      net::post(executor, [weak, message = frame.dump()]() mutable {
        if (auto self = weak.lock()) self->send(std::move(message));
      });
    });
    do_read();
  }

  void do_read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&WebSocketSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      manager_.unsubscribe(session_id_);
      return;
    }
    const std::string message = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    for (const auto& frame : manager_.handle_client_message(session_id_, message)) send(frame.dump());
    do_read();
  }

  void send(std::string message) {
    queue_.push_back(std::move(message));
    if (queue_.size() == 1) do_write();
  }

  void do_write() {
    ws_.text(true);
    ws_.async_write(net::buffer(queue_.front()),
                    beast::bind_front_handler(&WebSocketSession::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) return;
    queue_.pop_front();
    if (!queue_.empty()) do_write();
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  SessionManager& manager_;
  std::string session_id_;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, SessionManager& manager) : stream_(std::move(socket)), manager_(manager) {}

  void run() {
    net::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpSession::do_read, shared_from_this()));
  }

 private:
  void do_read() {
    request_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, request_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      beast::error_code ignored;
      stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      return;
    }
    if (websocket::is_upgrade(request_)) {
      auto route = parse_session_path(std::string_view(request_.target().data(), request_.target().size()));
      if (route && route->tail == "ws" && manager_.has_session(route->session_id)) {
        stream_.expires_never();
        std::make_shared<WebSocketSession>(stream_.release_socket(), manager_, route->session_id)
            ->run(std::move(request_));
        return;
      }
      write(respond(http::status::not_found, {{"error", "unknown session"}}));
      return;
    }
    write(handle());
  }

  http::response<http::string_body> respond(http::status status, const json& body,
                                            std::string content_type = "application/json") {
    http::response<http::string_body> res{status, request_.version()};
    res.set(http::field::content_type, content_type);
    res.keep_alive(request_.keep_alive());
    res.body() = content_type == "application/json" ? body.dump() : body.get<std::string>();
    res.prepare_payload();
    return res;
  }

  http::response<http::string_body> handle() {
    std::string_view target(request_.target().data(), request_.target().size());
    auto qmark = target.find('?');
    std::string_view path = target.substr(0, qmark);
    std::string_view query = qmark == std::string_view::npos ? std::string_view() : target.substr(qmark + 1);
    const auto method = request_.method();

    try {
      if (path == "/healthz" && method == http::verb::get) return respond(http::status::ok, {{"status", "ok"}});
      if (path == "/sessions" && method == http::verb::post) {
        json overrides = nullptr;
        if (!request_.body().empty()) {
          overrides = json::parse(request_.body(), nullptr, false);
          if (overrides.is_discarded()) return respond(http::status::bad_request, {{"error", "body is not JSON"}});
        }
        return respond(http::status::created, {{"session_id", manager_.create_session(overrides)}});
      }
      auto route = parse_session_path(path);
      if (route && method == http::verb::get) {
        if (route->tail.empty()) return respond(http::status::ok, manager_.describe(route->session_id));
        if (route->tail == "analytics") {
          return respond(http::status::ok, manager_.analytics(route->session_id).to_json());
        }
        if (route->tail == "export") {
          const std::string format = query_param(query, "format");
          if (format.empty() || format == "jsonl") {
            return respond(http::status::ok, manager_.export_jsonl(route->session_id), "application/x-ndjson");
          }
          if (format == "candidates") {
            std::string out;
            for (const auto& [hash, text] : manager_.candidate_table(route->session_id)) {
              out += json{{"hash", hash}, {"text", text}}.dump() + "\n";
            }
            return respond(http::status::ok, out, "application/x-ndjson");
          }
          return respond(http::status::bad_request, {{"error", "unsupported export format '" + format + "'"}});
        }
      }
      return respond(http::status::not_found, {{"error", "no route for " + std::string(path)}});
    } catch (const UnknownSession& e) {
      return respond(http::status::not_found, {{"error", e.what()}});
    } catch (const InvalidPolicy& e) {
      return respond(http::status::bad_request, {{"error", e.what()}});
    } catch (const std::exception& e) {
      return respond(http::status::internal_server_error, {{"error", e.what()}});
    }
  }

  void write(http::response<http::string_body> response) {
    auto res = std::make_shared<http::response<http::string_body>>(std::move(response));
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (!res->keep_alive()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->do_read();
    });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
  SessionManager& manager_;
};

}  // namespace

struct Server::Impl {
  Impl(SessionManager& m, Options o) : manager(m), options(std::move(o)), acceptor(ioc), ticker(ioc) {}

  void do_accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec == net::error::operation_aborted) return;
      } else {
        std::make_shared<HttpSession>(std::move(socket), manager)->run();
      }
      do_accept();
    });
  }

  void schedule_tick() {
    ticker.expires_after(options.tick_interval);
    ticker.async_wait([this](beast::error_code ec) {
      if (ec) return;
      manager.tick();
      schedule_tick();
    });
  }

  SessionManager& manager;
  Options options;
  net::io_context ioc;
  tcp::acceptor acceptor;
  net::steady_timer ticker;
  std::vector<std::thread> threads;
  std::mutex stop_mutex;
  std::condition_variable stop_cv;
  bool stopped = false;
};

Server::Server(SessionManager& manager, Options options) : impl_(std::make_unique<Impl>(manager, std::move(options))) {}

Server::~Server() { stop(); }

void Server::start() {
  auto& i = *impl_;
  tcp::endpoint endpoint{net::ip::make_address(i.options.address), i.options.port};
  i.acceptor.open(endpoint.protocol());
  i.acceptor.set_option(net::socket_base::reuse_address(true));
  i.acceptor.bind(endpoint);
  i.acceptor.listen(net::socket_base::max_listen_connections);
  i.do_accept();
  i.schedule_tick();
  const int n = std::max(1, i.options.threads);
  for (int t = 0; t < n; ++t) i.threads.emplace_back([&i] { i.ioc.run(); });
}

void Server::stop() {
  auto& i = *impl_;
  {
    std::lock_guard lock(i.stop_mutex);
    if (i.stopped) return;
    i.stopped = true;
  }
  i.stop_cv.notify_all();
  i.ioc.stop();
  for (auto& t : i.threads) {
    if (t.joinable()) t.join();
  }
}

void Server::wait() {
  std::unique_lock lock(impl_->stop_mutex);
  impl_->stop_cv.wait(lock, [this] { return impl_->stopped; });
}

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

}  // namespace cowrite
