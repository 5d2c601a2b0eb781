#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "cowrite/service_config.hpp"

using namespace cowrite;
using nlohmann::json;

namespace {

EnvLookup env_of(std::map<std::string, std::string> vars) {
  return [vars = std::move(vars)](const std::string& k) -> std::optional<std::string> {
    auto it = vars.find(k);
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

}  // namespace

TEST_CASE("defaults") {
  auto c = resolve_service_config(nullptr, env_of({}), nullptr);
  CHECK(c.backend == "ngram");
  CHECK(c.listen == "127.0.0.1:8080");
  CHECK(c.policy == TriggerPolicy{});
  CHECK(c.remote_timeout_ms == 15000);
  // An n-gram backend needs something to load.
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.model_path = "m.json";
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("flags override environment which overrides the file") {
  const json file{{"listen", "0.0.0.0:9000"}, {"seed", 3}, {"policy", {{"delay_ms", 5000}, {"min_words", 10}}}};
  auto c = resolve_service_config(file, env_of({}), nullptr);
  CHECK(c.listen == "0.0.0.0:9000");
  CHECK(c.policy.delay_ms == 5000);
  CHECK(c.policy.min_words == 10);
  CHECK(c.policy.context_words == 20);

  auto env = env_of({{"COWRITE_DELAY_MS", "2000"}, {"COWRITE_SEED", "9"}, {"COWRITE_LISTEN", "127.0.0.1:7000"}});
  c = resolve_service_config(file, env, nullptr);
  CHECK(c.policy.delay_ms == 2000);
  CHECK(c.policy.min_words == 10);
  CHECK(c.seed == 9);
  CHECK(c.listen == "127.0.0.1:7000");

  c = resolve_service_config(file, env, {{"policy", {{"delay_ms", 0}}}, {"seed", 11}});
  CHECK(c.policy.delay_ms == 0);
  CHECK(c.seed == 11);
  CHECK(c.listen == "127.0.0.1:7000");
}

TEST_CASE("string-valued environment variables are taken literally") {
  auto c = resolve_service_config(nullptr, env_of({{"COWRITE_MODEL", "123"}, {"COWRITE_BACKEND", "remote"},
                                                   {"COWRITE_REMOTE_URL", "http://x:1"}, {"COWRITE_TEMPERATURE", "0.7"}}),
                                  nullptr);
  CHECK(c.model_path == "123");
  CHECK(c.backend == "remote");
  CHECK(c.policy.temperature == doctest::Approx(0.7));
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("invalid configuration is rejected") {
  CHECK_THROWS_AS(resolve_service_config({{"colour", "blue"}}, env_of({}), nullptr), std::invalid_argument);
  CHECK_THROWS_AS(resolve_service_config({{"seed", "many"}}, env_of({}), nullptr), std::invalid_argument);
  CHECK_THROWS_AS(resolve_service_config(nullptr, env_of({{"COWRITE_MIN_WORDS", "0"}}), nullptr), InvalidPolicy);
  CHECK_THROWS_AS(resolve_service_config(json::array(), env_of({}), nullptr), std::invalid_argument);

  ServiceConfig c;
  c.model_path = "m";
  c.backend = "remote";
  CHECK_THROWS(c.validate());
  c.backend = "ngram";
  c.listen = "nohost";
  CHECK_THROWS(c.validate());
  c.listen = "h:70000";
  CHECK_THROWS(c.validate());
  c.listen = "h:80x";
  CHECK_THROWS(c.validate());
}

TEST_CASE("listen address parsing") {
  CHECK(split_listen_address("127.0.0.1:8080") == std::pair<std::string, unsigned short>{"127.0.0.1", 8080});
  CHECK(split_listen_address("localhost:0").second == 0);
  CHECK_THROWS(split_listen_address(":80"));
}

TEST_CASE("to_json feeds back through resolve unchanged") {
  ServiceConfig c;
  c.model_path = "model.json";
  c.seed = 77;
  c.policy.delay_ms = 1234;
  auto j = c.to_json();
  auto back = resolve_service_config(j, env_of({}), nullptr);
  CHECK(back.to_json() == j);
}
