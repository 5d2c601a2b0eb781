#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace cowrite {

enum class EventKind { TextChange, SpaceKey, Dispatched, Presented, Cycled, Accepted, Rejected, BackendError };

std::string_view to_string(EventKind kind);
std::optional<EventKind> event_kind_from_string(std::string_view name);

// One append-only telemetry record. Payload fields per kind:
//   TextChange   {text, word_count, client_ts?}
//   SpaceKey     {client_ts?}
//   Dispatched   {request_id, context, seed, n_candidates, max_new_tokens, temperature}
//   Presented    {request_id, since, degraded, candidates: [{hash, backend_id, token_count, latency_ms, truncated}]}
//   Cycled       {dir, selected}
//   Accepted     {index, backend_id, hash, word_count}
//   Rejected     {index}
//   BackendError {request_id, kind, message}
struct SessionEvent {
  std::string session_id;
  std::uint64_t seq = 0;
  std::int64_t timestamp_ms = 0;
  EventKind kind = EventKind::TextChange;
  nlohmann::json payload = nlohmann::json::object();

  nlohmann::json to_json() const;
  static SessionEvent from_json(const nlohmann::json& j);
  bool operator==(const SessionEvent&) const = default;
};

// Candidate text keyed by text_hash(); the side table that keeps event
// payloads small while still allowing exact reconstruction.
using CandidateTable = std::map<std::string, std::string>;

std::string events_to_jsonl(const std::vector<SessionEvent>& events);
std::vector<SessionEvent> events_from_jsonl(std::string_view jsonl);

struct SessionAnalytics {
  std::uint64_t n_triggers = 0;
  std::uint64_t n_presented = 0;
  std::uint64_t n_accepted = 0;
  std::uint64_t n_rejected = 0;
  double acceptance_rate = 0.0;
  double mean_time_to_decision_ms = 0.0;
  std::uint64_t final_word_count = 0;

  nlohmann::json to_json() const;
  bool operator==(const SessionAnalytics&) const = default;
};

// Events must be in seq order. A decision's latency is measured from the
// most recent Presented event.
SessionAnalytics compute_analytics(const std::vector<SessionEvent>& events);

}  // namespace cowrite
