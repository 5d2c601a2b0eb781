#include "cowrite/remote_backend.hpp"

#include <httplib.h>

#include "cowrite/text.hpp"

namespace cowrite {

using nlohmann::json;

json to_wire(const GenerationRequest& request) {
  return {{"context", request.context},
          {"max_new_tokens", request.max_new_tokens},
          {"temperature", request.temperature},
          {"n_candidates", request.n_candidates},
          {"seed", request.seed ? json(*request.seed) : json(nullptr)}};
}

GenerationRequest request_from_wire(const json& body) {
  try {
    GenerationRequest r;
    r.context = body.at("context").get<std::string>();
    r.max_new_tokens = body.at("max_new_tokens").get<int>();
    r.temperature = body.at("temperature").get<double>();
    r.n_candidates = body.at("n_candidates").get<int>();
    if (body.contains("seed") && !body.at("seed").is_null()) r.seed = body.at("seed").get<std::uint64_t>();
    r.validate();
    return r;
  } catch (const json::exception& e) {
    throw GenerationError(GenerationErrorKind::InvalidRequest, e.what());
  }
}

WireResponse response_from_wire(const json& body) {
  if (!body.is_object()) throw GenerationError(GenerationErrorKind::SchemaMismatch, "response is not an object");
  WireResponse out;
  try {
    out.model_id = body.at("model_id").get<std::string>();
    const auto& items = body.at("candidates");
    if (!items.is_array()) throw GenerationError(GenerationErrorKind::SchemaMismatch, "candidates is not an array");
    for (const auto& item : items) {
      Candidate c;
      c.text = item.at("text").get<std::string>();
      c.token_count = item.at("token_count").get<int>();
      if (c.token_count < 0) throw GenerationError(GenerationErrorKind::SchemaMismatch, "negative token_count");
      c.exhausted = c.text.empty();
      out.candidates.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw GenerationError(GenerationErrorKind::SchemaMismatch, e.what());
  }
  return out;
}

json to_wire(const WireResponse& response) {
  json items = json::array();
  for (const auto& c : response.candidates) items.push_back({{"text", c.text}, {"token_count", c.token_count}});
  return {{"candidates", std::move(items)}, {"model_id", response.model_id}};
}

void enforce_token_cap(Candidate& candidate, int max_new_tokens) {
  if (candidate.token_count <= max_new_tokens) return;
  auto words = split_words(candidate.text);
  const auto keep = static_cast<std::size_t>(
      (static_cast<long long>(words.size()) * max_new_tokens) / candidate.token_count);
  words.resize(std::min(keep, words.size()));
  candidate.text = join_words(words);
  candidate.token_count = max_new_tokens;
  candidate.truncated = true;
}

RemoteBackend::RemoteBackend(RemoteEndpoint endpoint, std::string id)
    : endpoint_(std::move(endpoint)), id_(std::move(id)) {
  if (endpoint_.base_url.empty()) throw std::invalid_argument("remote backend needs an endpoint URL");
}

std::vector<Candidate> RemoteBackend::generate(const GenerationRequest& request, const CancellationToken& cancel) {
  request.validate();
  httplib::Client client(endpoint_.base_url);
  const auto timeout = endpoint_.timeout;
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

  cancel.on_cancel([&client] { client.stop(); });
  const auto start = std::chrono::steady_clock::now();
  auto result = client.Post(endpoint_.path, to_wire(request).dump(), "application/json");
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
  cancel.clear_hook();

  if (cancel.cancelled()) throw GenerationError(GenerationErrorKind::Cancelled, "request cancelled");
  if (!result) {
    const auto err = result.error();
    if (err == httplib::Error::ConnectionTimeout || ((err == httplib::Error::Read || err == httplib::Error::Write) && elapsed >= timeout)) {
      throw GenerationError(GenerationErrorKind::Timeout,
                            "no response from " + endpoint_.base_url + " within " + std::to_string(timeout.count()) + " ms");
    }
    throw GenerationError(GenerationErrorKind::Unavailable, endpoint_.base_url + ": " + httplib::to_string(err));
  }
  if (result->status < 200 || result->status >= 300) {
    throw GenerationError(GenerationErrorKind::HttpStatus,
                          "status " + std::to_string(result->status) + " from " + endpoint_.base_url);
  }
  json body;
  try {
    body = json::parse(result->body);
  } catch (const json::parse_error& e) {
    throw GenerationError(GenerationErrorKind::SchemaMismatch, e.what());
  }
  WireResponse response = response_from_wire(body);
  if (response.candidates.empty()) throw GenerationError(GenerationErrorKind::SchemaMismatch, "no candidates returned");
  if (response.candidates.size() > static_cast<std::size_t>(request.n_candidates)) {
    response.candidates.resize(static_cast<std::size_t>(request.n_candidates));
  }
  for (auto& c : response.candidates) {
    enforce_token_cap(c, request.max_new_tokens);
    c.backend_id = response.model_id.empty() ? id_ : id_ + ":" + response.model_id;
    c.latency_ms = elapsed.count();
  }
  return response.candidates;
}

}  // namespace cowrite
