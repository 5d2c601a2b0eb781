#include "cowrite/generation.hpp"

#include <cmath>

namespace cowrite {

std::string_view to_string(GenerationErrorKind kind) {
  switch (kind) {
    case GenerationErrorKind::InvalidRequest: return "invalid_request";
    case GenerationErrorKind::Unavailable: return "backend_unavailable";
    case GenerationErrorKind::Timeout: return "timeout";
    case GenerationErrorKind::HttpStatus: return "http_status";
    case GenerationErrorKind::SchemaMismatch: return "schema_mismatch";
    case GenerationErrorKind::Cancelled: return "cancelled";
    case GenerationErrorKind::EmptyModel: return "empty_model";
  }
  return "unknown";
}

void GenerationRequest::validate() const {
  if (max_new_tokens <= 0) throw GenerationError(GenerationErrorKind::InvalidRequest, "max_new_tokens must be positive");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw GenerationError(GenerationErrorKind::InvalidRequest, "temperature must be positive");
  }
  if (n_candidates < 1) throw GenerationError(GenerationErrorKind::InvalidRequest, "n_candidates must be at least 1");
}

void CancellationToken::cancel() const {
  std::function<void()> hook;
  {
    std::lock_guard lock(state_->mutex);
    if (state_->cancelled.exchange(true)) return;
    hook = state_->hook;
  }
  if (hook) hook();
}

void CancellationToken::on_cancel(std::function<void()> hook) const {
  {
    std::lock_guard lock(state_->mutex);
    if (!state_->cancelled.load()) {
      state_->hook = std::move(hook);
      return;
    }
  }
  if (hook) hook();
}

void CancellationToken::clear_hook() const {
  std::lock_guard lock(state_->mutex);
  state_->hook = nullptr;
}

int estimate_words_from_tokens(int n_tokens) {
  if (n_tokens < 0) throw std::invalid_argument("token count must be non-negative");
  return static_cast<int>(std::lround(0.75 * n_tokens));
}

bool ends_sentence(std::string_view token) {
  while (!token.empty() && (token.back() == '"' || token.back() == '\'' || token.back() == ')')) token.remove_suffix(1);
  if (token.empty()) return false;
  char c = token.back();
  return c == '.' || c == '!' || c == '?';
}

int sentence_cut_threshold(int max_new_tokens) {
  return static_cast<int>(std::ceil(0.75 * max_new_tokens));
}

std::size_t sentence_cut(const std::vector<std::string>& tokens, int max_new_tokens) {
  const std::size_t cap = std::min(tokens.size(), static_cast<std::size_t>(std::max(max_new_tokens, 0)));
  const std::size_t threshold = static_cast<std::size_t>(sentence_cut_threshold(max_new_tokens));
  for (std::size_t i = 0; i < cap; ++i) {
    if (i + 1 >= threshold && ends_sentence(tokens[i])) return i + 1;
  }
  return cap;
}

}  // namespace cowrite
