#pragma once

#include <chrono>
#include <string>
#include <vector>

#include <json.hpp>

#include "cowrite/generation.hpp"

namespace cowrite {

struct RemoteEndpoint {
  std::string base_url;  // e.g. "http://127.0.0.1:8500"
  std::string path = "/generate";
  std::chrono::milliseconds timeout{15000};
};

// Wire schema shared with the inference server:
//   request  {"context", "max_new_tokens", "temperature", "n_candidates", "seed"}
//   response {"candidates": [{"text", "token_count"}], "model_id"}
nlohmann::json to_wire(const GenerationRequest& request);
GenerationRequest request_from_wire(const nlohmann::json& body);

struct WireResponse {
  std::string model_id;
  std::vector<Candidate> candidates;  // text and token_count only
};
// Throws GenerationError(SchemaMismatch).
WireResponse response_from_wire(const nlohmann::json& body);
nlohmann::json to_wire(const WireResponse& response);

// Cuts a candidate whose reported token count exceeds the cap. The server's
// tokenizer is not available here, so the kept share of whitespace words is
// proportional to cap / reported count.
void enforce_token_cap(Candidate& candidate, int max_new_tokens);

class RemoteBackend final : public GenerationBackend {
 public:
  explicit RemoteBackend(RemoteEndpoint endpoint, std::string id = "remote");

  std::string id() const override { return id_; }
  // May return fewer than n_candidates when the server does; never more.
  std::vector<Candidate> generate(const GenerationRequest& request,
                                  const CancellationToken& cancel = CancellationToken()) override;

 private:
  RemoteEndpoint endpoint_;
  std::string id_;
};

}  // namespace cowrite
