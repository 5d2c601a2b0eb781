#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "cowrite/generation.hpp"
#include "cowrite/session_event.hpp"

namespace cowrite {

class InvalidPolicy : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// When and what to suggest.
struct TriggerPolicy {
  int min_words = 25;
  std::int64_t delay_ms = 8000;
  int context_words = 20;
  int n_candidates = 3;
  int max_new_tokens = 60;
  double temperature = 1.0;

  // delay_ms may be 0; every other field must be positive.
  void validate() const;
  nlohmann::json to_json() const;
  // Applies the keys present in `overrides` on top of `base`, then validates.
  static TriggerPolicy with_overrides(const TriggerPolicy& base, const nlohmann::json& overrides);
  bool operator==(const TriggerPolicy&) const = default;
};

namespace phase {
struct BelowThreshold {};
struct Idle {};
struct Pending {
  std::int64_t since_ms = 0;  // last spacebar press; the delay runs from here
  std::uint64_t request_id = 0;
  std::optional<std::vector<Candidate>> ready;  // arrived, waiting for the delay
};
struct Showing {
  std::vector<Candidate> candidates;
  std::size_t selected = 0;
  std::uint64_t request_id = 0;
  bool degraded = false;  // fewer candidates than the policy asks for
};
}  // namespace phase

using Phase = std::variant<phase::BelowThreshold, phase::Idle, phase::Pending, phase::Showing>;

std::string_view phase_name(const Phase& p);

struct SessionState {
  std::string session_id;
  std::string document;
  std::size_t word_count = 0;
  Phase phase = phase::BelowThreshold{};
  TriggerPolicy policy;
  std::uint64_t event_seq = 0;
  std::uint64_t next_request_id = 1;
  std::uint64_t seed = 0;
};

enum class CycleDirection { Up, Down };

struct DispatchOrder {
  std::uint64_t request_id = 0;
  GenerationRequest request;
};

// Side effects of one transition, for the caller to carry out.
struct Effects {
  std::vector<SessionEvent> events;
  CandidateTable candidate_texts;                // texts referenced by new Presented events
  std::optional<DispatchOrder> dispatch;         // start this generation
  std::optional<std::uint64_t> cancel;           // abandon this in-flight request
  bool presented = false;
  bool document_changed = false;
};

// Last `context_words` whitespace tokens of `document`, single-spaced.
// Throws std::invalid_argument for an empty document.
std::string build_context(std::string_view document, int context_words);

// Per-session suggestion state machine. Not thread-safe: callers serialize
// all events of one session. Every (phase, event) pair is defined; events
// that do not apply to the current phase leave the state unchanged.
class SessionMachine {
 public:
  SessionMachine(std::string session_id, TriggerPolicy policy, std::uint64_t seed);

  const SessionState& state() const { return state_; }

  Effects on_text_change(std::string new_document, std::int64_t now_ms,
                         std::optional<std::int64_t> client_ts = std::nullopt);
  Effects on_space_keypress(std::int64_t now_ms, std::optional<std::int64_t> client_ts = std::nullopt);
  // Delivery of a finished generation. Stale request ids are ignored.
  Effects on_generation_result(std::uint64_t request_id, std::vector<Candidate> candidates, std::int64_t now_ms);
  Effects on_generation_failed(std::uint64_t request_id, std::string_view kind, std::string_view message,
                               std::int64_t now_ms);
  // Shows ready candidates once now - since >= delay_ms.
  Effects present_when_due(std::int64_t now_ms);
  Effects cycle(CycleDirection direction, std::int64_t now_ms);
  Effects accept(std::int64_t now_ms);
  Effects reject(std::int64_t now_ms);

  // When the pending candidates become presentable, if they have arrived.
  std::optional<std::int64_t> due_at() const;

  // Sampling seed used for a request id; a pure function of the session seed.
  std::uint64_t request_seed(std::uint64_t request_id) const;

 private:
  SessionEvent& emit(Effects& fx, EventKind kind, std::int64_t now_ms, nlohmann::json payload);
  Phase resting_phase() const;

  SessionState state_;
};

}  // namespace cowrite
