#pragma once

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cowrite/clock.hpp"
#include "cowrite/event_log.hpp"
#include "cowrite/generation.hpp"
#include "cowrite/orchestrator.hpp"

namespace cowrite {

class UnknownSession : public std::runtime_error {
 public:
  explicit UnknownSession(const std::string& id) : std::runtime_error("unknown session " + id) {}
};

struct ServiceOptions {
  TriggerPolicy policy;
  std::filesystem::path data_dir;  // empty: keep logs in memory
  bool fsync = true;
  std::uint64_t seed = 0;  // session seeds derive from this and the session counter
};

// Owns all live sessions. Events of one session are serialized by that
// session's mutex; sessions proceed independently. Every event is appended
// to the session log before any frame describing it is returned or pushed.
class SessionManager {
 public:
  using Frame = nlohmann::json;
  using Sink = std::function<void(const Frame&)>;
  using Executor = std::function<void(std::function<void()>)>;

  // Runs jobs on the calling thread; generation then completes before
  // handle_client_message returns.
  static Executor inline_executor();

  SessionManager(ServiceOptions options, std::shared_ptr<GenerationBackend> backend,
                 std::shared_ptr<GenerationBackend> fallback, std::shared_ptr<const Clock> clock,
                 Executor executor = inline_executor());
  ~SessionManager();

  // Throws InvalidPolicy.
  std::string create_session(const nlohmann::json& policy_overrides = nullptr);
  bool has_session(const std::string& id) const;

  // Never throws for bad input: unknown sessions and malformed messages
  // come back as {"type":"error"} frames.
  std::vector<Frame> handle_client_message(const std::string& id, std::string_view message);
  std::vector<Frame> handle_client_frame(const std::string& id, const Frame& frame);

  // Frames produced outside a client message (delayed suggestions, backend
  // errors) go to the subscribed sink.
  void subscribe(const std::string& id, Sink sink);
  void unsubscribe(const std::string& id);

  // Presents every session whose delay has elapsed.
  void tick();

  std::vector<SessionEvent> export_events(const std::string& id) const;
  std::string export_jsonl(const std::string& id) const;
  CandidateTable candidate_table(const std::string& id) const;
  SessionAnalytics analytics(const std::string& id) const;
  // Session id, policy, seed, phase, word count and document.
  nlohmann::json describe(const std::string& id) const;

  // Blocks until no generation job is running.
  void drain();

 private:
  struct Session;

  std::shared_ptr<Session> find(const std::string& id) const;
  std::vector<Frame> apply(Session& s, Effects fx, std::vector<Frame> frames);
  void start_generation(const std::shared_ptr<Session>& s, const DispatchOrder& order);
  void finish_generation(const std::shared_ptr<Session>& s, std::uint64_t request_id, std::vector<Candidate> result,
                         const GenerationError* error);
  Frame status_frame(const Session& s) const;

  ServiceOptions options_;
  std::shared_ptr<GenerationBackend> backend_;
  std::shared_ptr<GenerationBackend> fallback_;
  std::shared_ptr<const Clock> clock_;
  Executor executor_;

  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t created_ = 0;

  std::mutex jobs_mutex_;
  std::condition_variable jobs_cv_;
  std::size_t jobs_running_ = 0;
};

}  // namespace cowrite
