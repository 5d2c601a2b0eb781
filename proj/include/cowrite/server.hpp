#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "cowrite/session_manager.hpp"

namespace cowrite {

// HTTP + WebSocket front end for a SessionManager.
//
//   POST /sessions                      -> {"session_id"}; body: optional policy overrides
//   GET  /sessions/{id}                 -> session description
//   GET  /sessions/{id}/export?format=jsonl|candidates
//   GET  /sessions/{id}/analytics
//   GET  /healthz
//   WS   /sessions/{id}/ws              -> client/server JSON frames
class Server {
 public:
  struct Options {
    std::string address = "127.0.0.1";
    unsigned short port = 8080;  // 0 picks a free port
    int threads = 2;
    std::chrono::milliseconds tick_interval{5};
  };

  Server(SessionManager& manager, Options options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and starts serving on background threads.
  void start();
  void stop();
  // Blocks until stop() is called from another thread or a signal handler.
  void wait();
  unsigned short port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cowrite
