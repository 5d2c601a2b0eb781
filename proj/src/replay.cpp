#include "cowrite/replay.hpp"

namespace cowrite {

namespace {

std::optional<std::int64_t> client_ts(const SessionEvent& e) {
  if (e.payload.contains("client_ts")) return e.payload.at("client_ts").get<std::int64_t>();
  return std::nullopt;
}

std::vector<Candidate> rebuild_candidates(const SessionEvent& e, const CandidateTable& texts) {
  std::vector<Candidate> out;
  for (const auto& item : e.payload.at("candidates")) {
    const auto hash = item.at("hash").get<std::string>();
    auto it = texts.find(hash);
    if (it == texts.end()) throw ReplayError("candidate text " + hash + " missing from side table");
    Candidate c;
    c.text = it->second;
    c.backend_id = item.at("backend_id").get<std::string>();
    c.token_count = item.at("token_count").get<int>();
    c.latency_ms = item.at("latency_ms").get<std::int64_t>();
    c.truncated = item.at("truncated").get<bool>();
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

ReplayResult replay(const std::vector<SessionEvent>& events, const CandidateTable& texts, const TriggerPolicy& policy,
                    std::uint64_t seed) {
  const std::string session_id = events.empty() ? std::string() : events.front().session_id;
  SessionMachine machine(session_id, policy, seed);
  ReplayResult result;

  for (const auto& e : events) {
    Effects fx;
    switch (e.kind) {
      case EventKind::TextChange:
        fx = machine.on_text_change(e.payload.at("text").get<std::string>(), e.timestamp_ms, client_ts(e));
        break;
      case EventKind::SpaceKey:
        fx = machine.on_space_keypress(e.timestamp_ms, client_ts(e));
        break;
      case EventKind::Dispatched:
        // Re-emitted by the SpaceKey that caused it.
        continue;
      case EventKind::Presented:
        fx = machine.on_generation_result(e.payload.at("request_id").get<std::uint64_t>(), rebuild_candidates(e, texts),
                                          e.timestamp_ms);
        break;
      case EventKind::Cycled:
        fx = machine.cycle(e.payload.at("dir").get<std::string>() == "up" ? CycleDirection::Up : CycleDirection::Down,
                           e.timestamp_ms);
        break;
      case EventKind::Accepted:
        fx = machine.accept(e.timestamp_ms);
        break;
      case EventKind::Rejected:
        fx = machine.reject(e.timestamp_ms);
        break;
      case EventKind::BackendError:
        fx = machine.on_generation_failed(e.payload.at("request_id").get<std::uint64_t>(),
                                          e.payload.at("kind").get<std::string>(),
                                          e.payload.at("message").get<std::string>(), e.timestamp_ms);
        break;
    }
    result.events.insert(result.events.end(), fx.events.begin(), fx.events.end());
  }

  if (result.events.size() != events.size()) {
    throw ReplayError("replay produced " + std::to_string(result.events.size()) + " events, log has " +
                      std::to_string(events.size()));
  }
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (!(result.events[i] == events[i])) {
      throw ReplayError("replay diverges at seq " + std::to_string(events[i].seq) + ": expected " +
                        events[i].to_json().dump() + ", got " + result.events[i].to_json().dump());
    }
  }
  result.state = machine.state();
  return result;
}

}  // namespace cowrite
