#include "cowrite/session_event.hpp"

#include <array>
#include <sstream>
#include <stdexcept>

namespace cowrite {

using nlohmann::json;

namespace {
constexpr std::array<std::pair<EventKind, std::string_view>, 8> kNames{{
    {EventKind::TextChange, "text_change"},
    {EventKind::SpaceKey, "space_key"},
    {EventKind::Dispatched, "dispatched"},
    {EventKind::Presented, "presented"},
    {EventKind::Cycled, "cycled"},
    {EventKind::Accepted, "accepted"},
    {EventKind::Rejected, "rejected"},
    {EventKind::BackendError, "backend_error"},
}};
}  // namespace

std::string_view to_string(EventKind kind) {
  for (const auto& [k, name] : kNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<EventKind> event_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

json SessionEvent::to_json() const {
  return {{"session_id", session_id},
          {"seq", seq},
          {"timestamp_ms", timestamp_ms},
          {"kind", std::string(to_string(kind))},
          {"payload", payload}};
}

SessionEvent SessionEvent::from_json(const json& j) {
  SessionEvent e;
  e.session_id = j.at("session_id").get<std::string>();
  e.seq = j.at("seq").get<std::uint64_t>();
  e.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
  auto kind = event_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) throw std::runtime_error("unknown event kind " + j.at("kind").dump());
  e.kind = *kind;
  e.payload = j.at("payload");
  return e;
}

std::string events_to_jsonl(const std::vector<SessionEvent>& events) {
  std::string out;
  for (const auto& e : events) {
    out += e.to_json().dump();
    out += '\n';
  }
  return out;
}

std::vector<SessionEvent> events_from_jsonl(std::string_view jsonl) {
  std::vector<SessionEvent> events;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      events.push_back(SessionEvent::from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("event line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return events;
}

json SessionAnalytics::to_json() const {
  return {{"n_triggers", n_triggers},
          {"n_presented", n_presented},
          {"n_accepted", n_accepted},
          {"n_rejected", n_rejected},
          {"acceptance_rate", acceptance_rate},
          {"mean_time_to_decision_ms", mean_time_to_decision_ms},
          {"final_word_count", final_word_count}};
}

SessionAnalytics compute_analytics(const std::vector<SessionEvent>& events) {
  SessionAnalytics a;
  std::optional<std::int64_t> presented_at;
  std::int64_t decision_total = 0;
  std::uint64_t decisions = 0;
  for (const auto& e : events) {
    switch (e.kind) {
      case EventKind::Dispatched:
        ++a.n_triggers;
        break;
      case EventKind::Presented:
        ++a.n_presented;
        presented_at = e.timestamp_ms;
        break;
      case EventKind::Accepted:
      case EventKind::Rejected:
        (e.kind == EventKind::Accepted ? a.n_accepted : a.n_rejected) += 1;
        if (presented_at) {
          decision_total += e.timestamp_ms - *presented_at;
          ++decisions;
          presented_at.reset();
        }
        if (e.kind == EventKind::Accepted) a.final_word_count = e.payload.value("word_count", a.final_word_count);
        break;
      case EventKind::TextChange:
        a.final_word_count = e.payload.value("word_count", a.final_word_count);
        break;
      default:
        break;
    }
  }
  a.acceptance_rate = static_cast<double>(a.n_accepted) / static_cast<double>(std::max<std::uint64_t>(1, a.n_presented));
  if (decisions) a.mean_time_to_decision_ms = static_cast<double>(decision_total) / static_cast<double>(decisions);
  return a;
}

}  // namespace cowrite
