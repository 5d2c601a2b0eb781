#include "cowrite/session_manager.hpp"

#include <random>

#include "cowrite/rng.hpp"

namespace cowrite {

using nlohmann::json;

struct SessionManager::Session {
  Session(std::string id, TriggerPolicy policy, std::uint64_t seed, EventLog log)
      : machine(std::move(id), policy, seed), log(std::move(log)) {}

  std::mutex mutex;
  SessionMachine machine;
  EventLog log;
  Sink sink;
  std::map<std::uint64_t, CancellationToken> inflight;
};

namespace {

json error_frame(std::string_view code, std::string_view msg) {
  return {{"type", "error"}, {"code", std::string(code)}, {"msg", std::string(msg)}};
}

json suggestions_frame(const phase::Showing& showing) {
  json items = json::array();
  for (const auto& c : showing.candidates) items.push_back(c.text);
  return {{"type", "suggestions"}, {"items", std::move(items)}, {"selected", showing.selected}};
}

std::string random_session_id() {
  static std::mutex mutex;
  static std::random_device device;
  static std::mt19937_64 engine(device());
  std::lock_guard lock(mutex);
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(engine()),
                static_cast<unsigned long long>(engine()));
  return buf;
}

std::optional<std::int64_t> optional_ts(const json& frame) {
  if (!frame.contains("ts") || frame.at("ts").is_null()) return std::nullopt;
  if (!frame.at("ts").is_number_integer()) throw std::invalid_argument("'ts' must be an integer");
  return frame.at("ts").get<std::int64_t>();
}

}  // namespace

SessionManager::Executor SessionManager::inline_executor() {
  return [](std::function<void()> job) { job(); };
}

SessionManager::SessionManager(ServiceOptions options, std::shared_ptr<GenerationBackend> backend,
                               std::shared_ptr<GenerationBackend> fallback, std::shared_ptr<const Clock> clock,
                               Executor executor)
    : options_(std::move(options)),
      backend_(std::move(backend)),
      fallback_(std::move(fallback)),
      clock_(std::move(clock)),
      executor_(std::move(executor)) {
  if (!backend_) throw std::invalid_argument("session manager needs a generation backend");
  if (!clock_) throw std::invalid_argument("session manager needs a clock");
  options_.policy.validate();
}

SessionManager::~SessionManager() {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::lock_guard lock(sessions_mutex_);
    for (auto& [id, s] : sessions_) all.push_back(s);
  }
  for (auto& s : all) {
    std::lock_guard lock(s->mutex);
    s->sink = nullptr;
    for (auto& [rid, token] : s->inflight) token.cancel();
  }
  drain();
}

std::string SessionManager::create_session(const json& policy_overrides) {
  TriggerPolicy policy = TriggerPolicy::with_overrides(options_.policy, policy_overrides);
  std::lock_guard lock(sessions_mutex_);
  std::string id;
  do {
    id = random_session_id();
  } while (sessions_.count(id));
  const std::uint64_t seed = splitmix64(options_.seed + created_++);
  EventLog log = options_.data_dir.empty() ? EventLog() : EventLog(options_.data_dir, id, options_.fsync);
  sessions_.emplace(id, std::make_shared<Session>(id, policy, seed, std::move(log)));
  return id;
}

bool SessionManager::has_session(const std::string& id) const { return find(id) != nullptr; }

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& id) const {
  std::lock_guard lock(sessions_mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

SessionManager::Frame SessionManager::status_frame(const Session& s) const {
  const auto& st = s.machine.state();
  return {{"type", "status"}, {"phase", std::string(phase_name(st.phase))}, {"word_count", st.word_count}};
}

std::vector<SessionManager::Frame> SessionManager::apply(Session& s, Effects fx, std::vector<Frame> frames) {
  s.log.append(fx.events, fx.candidate_texts);
  if (fx.cancel) {
    auto it = s.inflight.find(*fx.cancel);
    if (it != s.inflight.end()) {
      it->second.cancel();
      s.inflight.erase(it);
    }
  }
  if (fx.dispatch) s.inflight.emplace(fx.dispatch->request_id, CancellationToken());
  if (fx.presented) frames.push_back(suggestions_frame(std::get<phase::Showing>(s.machine.state().phase)));
  return frames;
}

std::vector<SessionManager::Frame> SessionManager::handle_client_message(const std::string& id,
                                                                         std::string_view message) {
  json frame;
  try {
    frame = json::parse(message);
  } catch (const json::parse_error& e) {
    return {error_frame("malformed_message", e.what())};
  }
  return handle_client_frame(id, frame);
}

std::vector<SessionManager::Frame> SessionManager::handle_client_frame(const std::string& id, const Frame& frame) {
  auto session = find(id);
  if (!session) return {error_frame("unknown_session", "no session " + id)};
  if (!frame.is_object() || !frame.contains("type") || !frame.at("type").is_string()) {
    return {error_frame("malformed_message", "frame must be an object with a string 'type'")};
  }
  const std::string type = frame.at("type").get<std::string>();

  std::vector<Frame> frames;
  std::optional<DispatchOrder> dispatch;
  {
    std::lock_guard lock(session->mutex);
    auto& machine = session->machine;
    const std::int64_t now = clock_->now_ms();
    Effects fx;
    try {
      if (type == "text_update") {
        if (!frame.contains("text") || !frame.at("text").is_string()) {
          return {error_frame("malformed_message", "text_update needs a string 'text'")};
        }
        fx = machine.on_text_change(frame.at("text").get<std::string>(), now, optional_ts(frame));
      } else if (type == "space_key") {
        fx = machine.on_space_keypress(now, optional_ts(frame));
      } else if (type == "cycle") {
        const std::string dir = frame.value("dir", "");
        if (dir != "up" && dir != "down") return {error_frame("malformed_message", "cycle needs dir 'up' or 'down'")};
        fx = machine.cycle(dir == "up" ? CycleDirection::Up : CycleDirection::Down, now);
      } else if (type == "accept") {
        fx = machine.accept(now);
      } else if (type == "reject") {
        fx = machine.reject(now);
      } else {
        return {error_frame("malformed_message", "unknown frame type '" + type + "'")};
      }
    } catch (const std::invalid_argument& e) {
      return {error_frame("malformed_message", e.what())};
    }

    const bool applied = !fx.events.empty();
    dispatch = fx.dispatch;
    frames = apply(*session, std::move(fx), {});
    const auto& st = machine.state();
    if (type == "accept" && applied) frames.push_back({{"type", "document_ack"}, {"word_count", st.word_count}});
    if (type == "cycle" && applied) {
      frames.push_back(suggestions_frame(std::get<phase::Showing>(st.phase)));
    } else {
      frames.push_back(status_frame(*session));
    }
  }
  if (dispatch) start_generation(session, *dispatch);
  return frames;
}

void SessionManager::start_generation(const std::shared_ptr<Session>& s, const DispatchOrder& order) {
  CancellationToken token;
  {
    std::lock_guard lock(s->mutex);
    auto it = s->inflight.find(order.request_id);
    if (it == s->inflight.end()) return;  // already cancelled
    token = it->second;
  }
  {
    std::lock_guard lock(jobs_mutex_);
    ++jobs_running_;
  }
  executor_([this, s, order, token] {
    std::vector<Candidate> result;
    std::optional<GenerationError> error;
    try {
      result = backend_->generate(order.request, token);
    } catch (const GenerationError& e) {
      error = e;
    } catch (const std::exception& e) {
      error = GenerationError(GenerationErrorKind::Unavailable, e.what());
    }
    if (error && error->kind() != GenerationErrorKind::Cancelled && fallback_ && !token.cancelled()) {
      try {
        result = fallback_->generate(order.request, token);
        error.reset();
      } catch (const GenerationError& e) {
        error = e;
      }
    }
    finish_generation(s, order.request_id, std::move(result), error ? &*error : nullptr);
    {
      std::lock_guard lock(jobs_mutex_);
      --jobs_running_;
    }
    jobs_cv_.notify_all();
  });
}

void SessionManager::finish_generation(const std::shared_ptr<Session>& s, std::uint64_t request_id,
                                       std::vector<Candidate> result, const GenerationError* error) {
  std::lock_guard lock(s->mutex);
  s->inflight.erase(request_id);
  const std::int64_t now = clock_->now_ms();
  std::vector<Frame> frames;
  if (error) {
    if (error->kind() == GenerationErrorKind::Cancelled) return;
    Effects fx = s->machine.on_generation_failed(request_id, to_string(error->kind()), error->what(), now);
    if (fx.events.empty()) return;
    frames = apply(*s, std::move(fx), {error_frame("backend_error", error->what())});
    frames.push_back(status_frame(*s));
  } else {
    Effects fx = s->machine.on_generation_result(request_id, std::move(result), now);
    if (fx.events.empty()) return;
    const bool failed = fx.events.back().kind == EventKind::BackendError;
    frames = apply(*s, std::move(fx), {});
    if (failed) {
      frames.push_back(error_frame("backend_error", "backend returned no usable text"));
      frames.push_back(status_frame(*s));
    }
  }
  if (s->sink) {
    for (const auto& f : frames) s->sink(f);
  }
}

void SessionManager::subscribe(const std::string& id, Sink sink) {
  auto s = find(id);
  if (!s) throw UnknownSession(id);
  std::lock_guard lock(s->mutex);
  s->sink = std::move(sink);
}

void SessionManager::unsubscribe(const std::string& id) {
  auto s = find(id);
  if (!s) return;
  std::lock_guard lock(s->mutex);
  s->sink = nullptr;
}

void SessionManager::tick() {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::lock_guard lock(sessions_mutex_);
    for (auto& [id, s] : sessions_) all.push_back(s);
  }
  const std::int64_t now = clock_->now_ms();
  for (auto& s : all) {
    std::lock_guard lock(s->mutex);
    Effects fx = s->machine.present_when_due(now);
    if (!fx.presented) continue;
    auto frames = apply(*s, std::move(fx), {});
    if (s->sink) {
      for (const auto& f : frames) s->sink(f);
    }
  }
}

std::vector<SessionEvent> SessionManager::export_events(const std::string& id) const {
  auto s = find(id);
  if (!s) throw UnknownSession(id);
  std::lock_guard lock(s->mutex);
  return s->log.events();
}

std::string SessionManager::export_jsonl(const std::string& id) const { return events_to_jsonl(export_events(id)); }

CandidateTable SessionManager::candidate_table(const std::string& id) const {
  auto s = find(id);
  if (!s) throw UnknownSession(id);
  std::lock_guard lock(s->mutex);
  return s->log.candidates();
}

SessionAnalytics SessionManager::analytics(const std::string& id) const { return compute_analytics(export_events(id)); }

json SessionManager::describe(const std::string& id) const {
  auto s = find(id);
  if (!s) throw UnknownSession(id);
  std::lock_guard lock(s->mutex);
  const auto& st = s->machine.state();
  return {{"session_id", st.session_id},
          {"policy", st.policy.to_json()},
          {"seed", st.seed},
          {"phase", std::string(phase_name(st.phase))},
          {"word_count", st.word_count},
          {"document", st.document}};
}

void SessionManager::drain() {
  std::unique_lock lock(jobs_mutex_);
  jobs_cv_.wait(lock, [this] { return jobs_running_ == 0; });
}

}  // namespace cowrite
