#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "cowrite/orchestrator.hpp"

namespace cowrite {

struct ServiceConfig {
  std::string backend = "ngram";  // "ngram" | "remote"
  std::string remote_url;
  std::int64_t remote_timeout_ms = 15000;
  bool fallback_to_ngram = true;  // remote failures retry once on the n-gram model when one is loaded
  std::filesystem::path model_path;    // serialized n-gram model
  std::filesystem::path train_corpus;  // or train one at startup from clean JSONL
  int ngram_order = 3;
  std::filesystem::path data_dir = "data/sessions";
  std::string listen = "127.0.0.1:8080";
  std::uint64_t seed = 0;
  TriggerPolicy policy;

  void validate() const;
  nlohmann::json to_json() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

// Layers, lowest precedence first: built-in defaults, config file, COWRITE_*
// environment variables, command-line flags. `file` and `flags` use the
// keys of ServiceConfig::to_json(); policy fields sit under "policy".
ServiceConfig resolve_service_config(const nlohmann::json& file, const EnvLookup& env, const nlohmann::json& flags);

// "host:port" -> (host, port). Throws std::invalid_argument.
std::pair<std::string, unsigned short> split_listen_address(const std::string& listen);

}  // namespace cowrite
