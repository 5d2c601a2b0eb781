#include "cowrite/orchestrator.hpp"

#include "cowrite/rng.hpp"
#include "cowrite/text.hpp"

namespace cowrite {

using nlohmann::json;

void TriggerPolicy::validate() const {
  if (min_words <= 0) throw InvalidPolicy("min_words must be positive");
  if (delay_ms < 0) throw InvalidPolicy("delay_ms must not be negative");
  if (context_words <= 0) throw InvalidPolicy("context_words must be positive");
  if (n_candidates <= 0) throw InvalidPolicy("n_candidates must be positive");
  if (max_new_tokens <= 0) throw InvalidPolicy("max_new_tokens must be positive");
  if (!(temperature > 0.0)) throw InvalidPolicy("temperature must be positive");
}

json TriggerPolicy::to_json() const {
  return {{"min_words", min_words},         {"delay_ms", delay_ms},
          {"context_words", context_words}, {"n_candidates", n_candidates},
          {"max_new_tokens", max_new_tokens}, {"temperature", temperature}};
}

TriggerPolicy TriggerPolicy::with_overrides(const TriggerPolicy& base, const json& overrides) {
  TriggerPolicy p = base;
  if (overrides.is_null()) return p;
  if (!overrides.is_object()) throw InvalidPolicy("policy overrides must be a JSON object");
  try {
    for (const auto& [key, value] : overrides.items()) {
      if (key == "min_words") p.min_words = value.get<int>();
      else if (key == "delay_ms") p.delay_ms = value.get<std::int64_t>();
      else if (key == "context_words") p.context_words = value.get<int>();
      else if (key == "n_candidates") p.n_candidates = value.get<int>();
      else if (key == "max_new_tokens") p.max_new_tokens = value.get<int>();
      else if (key == "temperature") p.temperature = value.get<double>();
      else throw InvalidPolicy("unknown policy field '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw InvalidPolicy(std::string("bad policy value: ") + e.what());
  }
  p.validate();
  return p;
}

std::string_view phase_name(const Phase& p) {
  struct Visitor {
    std::string_view operator()(const phase::BelowThreshold&) const { return "below_threshold"; }
    std::string_view operator()(const phase::Idle&) const { return "idle"; }
    std::string_view operator()(const phase::Pending&) const { return "pending"; }
    std::string_view operator()(const phase::Showing&) const { return "showing"; }
  };
  return std::visit(Visitor{}, p);
}

std::string build_context(std::string_view document, int context_words) {
  auto words = split_words(document);
  if (words.empty()) throw std::invalid_argument("cannot build a context from an empty document");
  if (context_words <= 0) throw std::invalid_argument("context_words must be positive");
  const std::size_t keep = std::min(words.size(), static_cast<std::size_t>(context_words));
  std::vector<std::string> tail(words.end() - static_cast<std::ptrdiff_t>(keep), words.end());
  return join_words(tail);
}

SessionMachine::SessionMachine(std::string session_id, TriggerPolicy policy, std::uint64_t seed) {
  policy.validate();
  state_.session_id = std::move(session_id);
  state_.policy = policy;
  state_.seed = seed;
  state_.phase = resting_phase();
}

std::uint64_t SessionMachine::request_seed(std::uint64_t request_id) const {
  return splitmix64(state_.seed ^ splitmix64(request_id));
}

SessionEvent& SessionMachine::emit(Effects& fx, EventKind kind, std::int64_t now_ms, json payload) {
  SessionEvent e;
  e.session_id = state_.session_id;
  e.seq = ++state_.event_seq;
  e.timestamp_ms = now_ms;
  e.kind = kind;
  e.payload = std::move(payload);
  fx.events.push_back(std::move(e));
  return fx.events.back();
}

Phase SessionMachine::resting_phase() const {
  if (state_.word_count < static_cast<std::size_t>(state_.policy.min_words)) return phase::BelowThreshold{};
  return phase::Idle{};
}

Effects SessionMachine::on_text_change(std::string new_document, std::int64_t now_ms,
                                       std::optional<std::int64_t> client_ts) {
  Effects fx;
  // Adding or removing trailing whitespace (the spacebar itself) is not
  // treated as resumed typing.
  const bool content_changed = trim_right(new_document) != trim_right(state_.document);
  state_.document = std::move(new_document);
  state_.word_count = count_words(state_.document);
  fx.document_changed = true;

  json payload{{"text", state_.document}, {"word_count", state_.word_count}};
  if (client_ts) payload["client_ts"] = *client_ts;
  emit(fx, EventKind::TextChange, now_ms, std::move(payload));

  if (auto* pending = std::get_if<phase::Pending>(&state_.phase)) {
    if (content_changed) {
      fx.cancel = pending->request_id;
      state_.phase = resting_phase();
    }
  } else if (std::holds_alternative<phase::Showing>(state_.phase)) {
    if (content_changed) state_.phase = resting_phase();
  } else {
    state_.phase = resting_phase();
  }
  // Trailing-whitespace edits keep the word count, so a kept Pending or
  // Showing phase still satisfies the threshold.
  return fx;
}

Effects SessionMachine::on_space_keypress(std::int64_t now_ms, std::optional<std::int64_t> client_ts) {
  Effects fx;
  json payload = json::object();
  if (client_ts) payload["client_ts"] = *client_ts;
  emit(fx, EventKind::SpaceKey, now_ms, std::move(payload));

  if (auto* pending = std::get_if<phase::Pending>(&state_.phase)) {
    pending->since_ms = now_ms;
    return fx;
  }
  if (!std::holds_alternative<phase::Idle>(state_.phase)) return fx;

  const auto& policy = state_.policy;
  DispatchOrder order;
  order.request_id = state_.next_request_id++;
  order.request.context = build_context(state_.document, policy.context_words);
  order.request.max_new_tokens = policy.max_new_tokens;
  order.request.temperature = policy.temperature;
  order.request.n_candidates = policy.n_candidates;
  order.request.seed = request_seed(order.request_id);
  emit(fx, EventKind::Dispatched, now_ms,
       {{"request_id", order.request_id},
        {"context", order.request.context},
        {"seed", *order.request.seed},
        {"n_candidates", order.request.n_candidates},
        {"max_new_tokens", order.request.max_new_tokens},
        {"temperature", order.request.temperature}});
  state_.phase = phase::Pending{now_ms, order.request_id, std::nullopt};
  fx.dispatch = std::move(order);
  return fx;
}

Effects SessionMachine::on_generation_result(std::uint64_t request_id, std::vector<Candidate> candidates,
                                             std::int64_t now_ms) {
  auto* pending = std::get_if<phase::Pending>(&state_.phase);
  if (!pending || pending->request_id != request_id || pending->ready) return {};

  std::vector<Candidate> usable;
  for (auto& c : candidates) {
    if (c.exhausted || c.text.empty()) continue;
    if (usable.size() == static_cast<std::size_t>(state_.policy.n_candidates)) break;
    usable.push_back(std::move(c));
  }
  if (usable.empty()) return on_generation_failed(request_id, "exhausted", "backend returned no usable text", now_ms);
  pending->ready = std::move(usable);
  return present_when_due(now_ms);
}

Effects SessionMachine::on_generation_failed(std::uint64_t request_id, std::string_view kind,
                                             std::string_view message, std::int64_t now_ms) {
  auto* pending = std::get_if<phase::Pending>(&state_.phase);
  if (!pending || pending->request_id != request_id) return {};
  Effects fx;
  emit(fx, EventKind::BackendError, now_ms,
       {{"request_id", request_id}, {"kind", std::string(kind)}, {"message", std::string(message)}});
  state_.phase = resting_phase();
  return fx;
}

std::optional<std::int64_t> SessionMachine::due_at() const {
  const auto* pending = std::get_if<phase::Pending>(&state_.phase);
  if (!pending || !pending->ready) return std::nullopt;
  return pending->since_ms + state_.policy.delay_ms;
}

Effects SessionMachine::present_when_due(std::int64_t now_ms) {
  auto due = due_at();
  if (!due || now_ms < *due) return {};
  auto pending = std::get<phase::Pending>(std::move(state_.phase));

  Effects fx;
  phase::Showing showing;
  showing.candidates = std::move(*pending.ready);
  showing.request_id = pending.request_id;
  showing.degraded = showing.candidates.size() < static_cast<std::size_t>(state_.policy.n_candidates);
  json items = json::array();
  for (const auto& c : showing.candidates) {
    std::string hash = text_hash(c.text);
    fx.candidate_texts[hash] = c.text;
    items.push_back({{"hash", hash},
                     {"backend_id", c.backend_id},
                     {"token_count", c.token_count},
                     {"latency_ms", c.latency_ms},
                     {"truncated", c.truncated}});
  }
  emit(fx, EventKind::Presented, now_ms,
       {{"request_id", pending.request_id},
        {"since", pending.since_ms},
        {"degraded", showing.degraded},
        {"candidates", std::move(items)}});
  state_.phase = std::move(showing);
  fx.presented = true;
  return fx;
}

Effects SessionMachine::cycle(CycleDirection direction, std::int64_t now_ms) {
  auto* showing = std::get_if<phase::Showing>(&state_.phase);
  if (!showing) return {};
  const std::size_t n = showing->candidates.size();
  showing->selected = direction == CycleDirection::Down ? (showing->selected + 1) % n : (showing->selected + n - 1) % n;
  Effects fx;
  emit(fx, EventKind::Cycled, now_ms,
       {{"dir", direction == CycleDirection::Down ? "down" : "up"}, {"selected", showing->selected}});
  return fx;
}

Effects SessionMachine::accept(std::int64_t now_ms) {
  auto* showing = std::get_if<phase::Showing>(&state_.phase);
  if (!showing) return {};
  const Candidate chosen = showing->candidates[showing->selected];
  const std::size_t index = showing->selected;

  if (!state_.document.empty() && !is_space(state_.document.back()) && !chosen.text.empty() &&
      !is_space(chosen.text.front())) {
    state_.document += ' ';
  }
  state_.document += chosen.text;
  state_.word_count = count_words(state_.document);
  state_.phase = resting_phase();

  Effects fx;
  fx.document_changed = true;
  emit(fx, EventKind::Accepted, now_ms,
       {{"index", index},
        {"backend_id", chosen.backend_id},
        {"hash", text_hash(chosen.text)},
        {"word_count", state_.word_count}});
  return fx;
}

Effects SessionMachine::reject(std::int64_t now_ms) {
  auto* showing = std::get_if<phase::Showing>(&state_.phase);
  if (!showing) return {};
  const std::size_t index = showing->selected;
  state_.phase = resting_phase();
  Effects fx;
  emit(fx, EventKind::Rejected, now_ms, {{"index", index}});
  return fx;
}

}  // namespace cowrite
