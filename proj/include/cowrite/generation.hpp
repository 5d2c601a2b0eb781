#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cowrite {

struct GenerationRequest {
  std::string context;
  int max_new_tokens = 60;
  double temperature = 1.0;
  int n_candidates = 3;
  std::optional<std::uint64_t> seed;

  // Throws GenerationError(InvalidRequest).
  void validate() const;
};

struct Candidate {
  std::string text;
  std::string backend_id;
  std::int64_t latency_ms = 0;
  int token_count = 0;
  bool truncated = false;  // cut to max_new_tokens by the client side
  bool exhausted = false;  // the backend produced no text

  bool operator==(const Candidate&) const = default;
};

enum class GenerationErrorKind {
  InvalidRequest,
  Unavailable,     // connection refused, DNS, socket errors
  Timeout,
  HttpStatus,      // non-2xx response
  SchemaMismatch,  // response body does not follow the wire schema
  Cancelled,
  EmptyModel,
};

std::string_view to_string(GenerationErrorKind kind);

class GenerationError : public std::runtime_error {
 public:
  GenerationError(GenerationErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  GenerationErrorKind kind() const { return kind_; }

 private:
  GenerationErrorKind kind_;
};

// Shared cancellation flag. Copies observe the same state. Backends may
// register a hook that aborts in-flight I/O.
class CancellationToken {
 public:
  CancellationToken() : state_(std::make_shared<State>()) {}

  void cancel() const;
  bool cancelled() const { return state_->cancelled.load(); }
  // Runs immediately when already cancelled. One hook at a time.
  void on_cancel(std::function<void()> hook) const;
  void clear_hook() const;

 private:
  struct State {
    std::atomic<bool> cancelled{false};
    std::mutex mutex;
    std::function<void()> hook;
  };
  std::shared_ptr<State> state_;
};

class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  virtual std::string id() const = 0;
  // Returns exactly request.n_candidates candidates, each with
  // token_count <= request.max_new_tokens, or throws GenerationError.
  virtual std::vector<Candidate> generate(const GenerationRequest& request,
                                          const CancellationToken& cancel = CancellationToken()) = 0;
};

// round(0.75 * n_tokens); only used for UI estimates.
int estimate_words_from_tokens(int n_tokens);

// Index one past the last token to keep: the first sentence-final token at or
// beyond 75% of the budget, otherwise min(size, max_new_tokens).
std::size_t sentence_cut(const std::vector<std::string>& tokens, int max_new_tokens);

// Number of leading tokens after which sentence_cut may stop early.
int sentence_cut_threshold(int max_new_tokens);

bool ends_sentence(std::string_view token);

}  // namespace cowrite
