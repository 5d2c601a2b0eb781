#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cowrite/orchestrator.hpp"
#include "cowrite/session_event.hpp"

namespace cowrite {

class ReplayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ReplayResult {
  SessionState state;
  std::vector<SessionEvent> events;  // as re-emitted by the state machine
};

// Feeds an exported event stream back through a fresh SessionMachine.
// Input events (text, keys, decisions) are re-applied at their logged
// timestamps; Presented events re-deliver candidates from `texts`. The
// re-emitted stream must match the original, otherwise ReplayError.
ReplayResult replay(const std::vector<SessionEvent>& events, const CandidateTable& texts, const TriggerPolicy& policy,
                    std::uint64_t seed);

}  // namespace cowrite
