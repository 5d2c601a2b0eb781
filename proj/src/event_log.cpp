#include "cowrite/event_log.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include <json.hpp>

namespace cowrite {

using nlohmann::json;

EventLog::EventLog(const std::filesystem::path& dir, const std::string& session_id, bool sync) : sync_(sync) {
  std::filesystem::create_directories(dir);
  events_path_ = dir / (session_id + ".events.jsonl");
  auto candidates_path = dir / (session_id + ".candidates.jsonl");
  events_file_.reset(std::fopen(events_path_.c_str(), "ab"));
  candidates_file_.reset(std::fopen(candidates_path.c_str(), "ab"));
  if (!events_file_ || !candidates_file_) throw std::runtime_error("cannot open session log in " + dir.string());
}

std::optional<std::filesystem::path> EventLog::events_path() const {
  if (events_path_.empty()) return std::nullopt;
  return events_path_;
}

void EventLog::write_line(std::FILE* f, const std::string& line) {
  if (std::fwrite(line.data(), 1, line.size(), f) != line.size() || std::fputc('\n', f) == EOF) {
    throw std::runtime_error("session log write failed");
  }
}

void EventLog::append(const std::vector<SessionEvent>& events, const CandidateTable& texts) {
  if (events.empty() && texts.empty()) return;
  for (const auto& e : events) {
    if (!events_.empty() && e.seq <= events_.back().seq) throw std::logic_error("event seq must increase");
  }
  if (events_file_) {
    for (const auto& [hash, text] : texts) {
      if (candidates_.count(hash)) continue;
      write_line(candidates_file_.get(), json{{"hash", hash}, {"text", text}}.dump());
    }
    for (const auto& e : events) write_line(events_file_.get(), e.to_json().dump());
    for (std::FILE* f : {candidates_file_.get(), events_file_.get()}) {
      if (std::fflush(f) != 0) throw std::runtime_error("session log flush failed");
      if (sync_ && ::fsync(::fileno(f)) != 0) throw std::runtime_error("session log fsync failed");
    }
  }
  candidates_.insert(texts.begin(), texts.end());
  events_.insert(events_.end(), events.begin(), events.end());
}

std::vector<SessionEvent> EventLog::read_events(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return events_from_jsonl(buf.str());
}

CandidateTable EventLog::read_candidates(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  CandidateTable table;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = json::parse(line);
    table[j.at("hash").get<std::string>()] = j.at("text").get<std::string>();
  }
  return table;
}

}  // namespace cowrite
