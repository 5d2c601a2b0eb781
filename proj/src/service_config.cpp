#include "cowrite/service_config.hpp"

#include <cstdlib>
#include <stdexcept>

namespace cowrite {

using nlohmann::json;

namespace {

void apply_layer(ServiceConfig& c, const json& layer) {
  if (layer.is_null()) return;
  if (!layer.is_object()) throw std::invalid_argument("configuration layer must be a JSON object");
  for (const auto& [key, value] : layer.items()) {
    if (key == "backend") c.backend = value.get<std::string>();
    else if (key == "remote_url") c.remote_url = value.get<std::string>();
    else if (key == "remote_timeout_ms") c.remote_timeout_ms = value.get<std::int64_t>();
    else if (key == "fallback_to_ngram") c.fallback_to_ngram = value.get<bool>();
    else if (key == "model") c.model_path = value.get<std::string>();
    else if (key == "train_corpus") c.train_corpus = value.get<std::string>();
    else if (key == "ngram_order") c.ngram_order = value.get<int>();
    else if (key == "data_dir") c.data_dir = value.get<std::string>();
    else if (key == "listen") c.listen = value.get<std::string>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else if (key == "policy") c.policy = TriggerPolicy::with_overrides(c.policy, value);
    else throw std::invalid_argument("unknown configuration key '" + key + "'");
  }
}

json parse_env_value(const std::string& raw) {
  json v = json::parse(raw, nullptr, false);
  if (v.is_discarded() || v.is_object() || v.is_array()) return raw;
  return v;
}

}  // namespace

void ServiceConfig::validate() const {
  if (backend != "ngram" && backend != "remote") throw std::invalid_argument("backend must be 'ngram' or 'remote'");
  if (backend == "remote" && remote_url.empty()) throw std::invalid_argument("remote backend needs remote_url");
  if (backend == "ngram" && model_path.empty() && train_corpus.empty()) {
    throw std::invalid_argument("n-gram backend needs a model file or a training corpus");
  }
  if (remote_timeout_ms <= 0) throw std::invalid_argument("remote_timeout_ms must be positive");
  if (ngram_order < 2) throw std::invalid_argument("ngram_order must be at least 2");
  split_listen_address(listen);
  policy.validate();
}

json ServiceConfig::to_json() const {
  return {{"backend", backend},
          {"remote_url", remote_url},
          {"remote_timeout_ms", remote_timeout_ms},
          {"fallback_to_ngram", fallback_to_ngram},
          {"model", model_path.string()},
          {"train_corpus", train_corpus.string()},
          {"ngram_order", ngram_order},
          {"data_dir", data_dir.string()},
          {"listen", listen},
          {"seed", seed},
          {"policy", policy.to_json()}};
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (!v) return std::nullopt;
    return std::string(v);
  };
}

ServiceConfig resolve_service_config(const json& file, const EnvLookup& env, const json& flags) {
  ServiceConfig c;
  try {
    apply_layer(c, file);

    json env_layer = json::object();
    json env_policy = json::object();
    static const std::pair<const char*, const char*> kTop[] = {
        {"COWRITE_BACKEND", "backend"},         {"COWRITE_REMOTE_URL", "remote_url"},
        {"COWRITE_REMOTE_TIMEOUT_MS", "remote_timeout_ms"}, {"COWRITE_MODEL", "model"},
        {"COWRITE_TRAIN_CORPUS", "train_corpus"}, {"COWRITE_DATA_DIR", "data_dir"},
        {"COWRITE_LISTEN", "listen"},           {"COWRITE_SEED", "seed"},
    };
    static const std::pair<const char*, const char*> kPolicy[] = {
        {"COWRITE_MIN_WORDS", "min_words"},         {"COWRITE_DELAY_MS", "delay_ms"},
        {"COWRITE_CONTEXT_WORDS", "context_words"}, {"COWRITE_N_CANDIDATES", "n_candidates"},
        {"COWRITE_MAX_NEW_TOKENS", "max_new_tokens"}, {"COWRITE_TEMPERATURE", "temperature"},
    };
    static const char* kStringKeys[] = {"backend", "remote_url", "model", "train_corpus", "data_dir", "listen"};
    if (env) {
      for (const auto& [var, key] : kTop) {
        if (auto v = env(var)) {
          bool as_string = false;
          for (const char* s : kStringKeys) as_string = as_string || std::string(s) == key;
          env_layer[key] = as_string ? json(*v) : parse_env_value(*v);
        }
      }
      for (const auto& [var, key] : kPolicy) {
        if (auto v = env(var)) env_policy[key] = parse_env_value(*v);
      }
    }
    if (!env_policy.empty()) env_layer["policy"] = env_policy;
    apply_layer(c, env_layer);
    apply_layer(c, flags);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad configuration value: ") + e.what());
  }
  return c;
}

std::pair<std::string, unsigned short> split_listen_address(const std::string& listen) {
  auto colon = listen.rfind(':');
  if (colon == std::string::npos || colon == 0) throw std::invalid_argument("listen address must be host:port");
  std::string host = listen.substr(0, colon);
  int port = 0;
  try {
    std::size_t used = 0;
    port = std::stoi(listen.substr(colon + 1), &used);
    if (used != listen.size() - colon - 1) throw std::invalid_argument(listen);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad port in listen address '" + listen + "'");
  }
  if (port < 0 || port > 65535) throw std::invalid_argument("port out of range in '" + listen + "'");
  return {host, static_cast<unsigned short>(port)};
}

}  // namespace cowrite
