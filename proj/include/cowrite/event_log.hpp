#pragma once

#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cowrite/session_event.hpp"

namespace cowrite {

// Append-only log for one session: `<id>.events.jsonl` plus the candidate
// side table `<id>.candidates.jsonl`. With no directory the log lives in
// memory only. One writer per log.
class EventLog {
 public:
  EventLog() = default;  // in-memory
  EventLog(const std::filesystem::path& dir, const std::string& session_id, bool sync = true);
  EventLog(EventLog&&) noexcept = default;
  EventLog& operator=(EventLog&&) noexcept = default;

  // Returns once the records are written (and fsync'ed when `sync`).
  // Candidate texts are written before the events that reference them.
  void append(const std::vector<SessionEvent>& events, const CandidateTable& texts = {});

  const std::vector<SessionEvent>& events() const { return events_; }
  const CandidateTable& candidates() const { return candidates_; }
  std::optional<std::filesystem::path> events_path() const;

  static std::vector<SessionEvent> read_events(const std::filesystem::path& path);
  static CandidateTable read_candidates(const std::filesystem::path& path);

 private:
  struct FileCloser {
    void operator()(std::FILE* f) const {
      if (f) std::fclose(f);
    }
  };
  using File = std::unique_ptr<std::FILE, FileCloser>;

  void write_line(std::FILE* f, const std::string& line);

  std::vector<SessionEvent> events_;
  CandidateTable candidates_;
  std::filesystem::path events_path_;
  File events_file_;
  File candidates_file_;
  bool sync_ = true;
};

}  // namespace cowrite
