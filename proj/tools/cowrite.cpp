#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <pthread.h>

#include <CLI11.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/thread_pool.hpp>
#include <json.hpp>

#include "cowrite/corpus_io.hpp"
#include "cowrite/evaluation.hpp"
#include "cowrite/event_log.hpp"
#include "cowrite/ngram.hpp"
#include "cowrite/pipeline.hpp"
#include "cowrite/remote_backend.hpp"
#include "cowrite/replay.hpp"
#include "cowrite/server.hpp"
#include "cowrite/service_config.hpp"
#include "cowrite/session_manager.hpp"
#include "cowrite/text.hpp"

using namespace cowrite;
using nlohmann::json;

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return json::parse(in);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    if (!trim_right(line).empty()) out.push_back(std::string(trim_right(line)));
  }
  return out;
}

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::shared_ptr<NgramModel> load_or_train(const std::filesystem::path& model, const std::filesystem::path& corpus,
                                          int order) {
  if (!model.empty()) return std::make_shared<NgramModel>(NgramModel::load(model));
  return std::make_shared<NgramModel>(train_ngram(read_clean_reviews(corpus), order));
}

// Backend selection shared by generate / eval.
struct BackendFlags {
  std::string model;
  std::string corpus;
  int order = 3;
  std::string remote_url;
  std::int64_t timeout_ms = 15000;
  std::string id;

  void add(CLI::App* app) {
    app->add_option("--model", model, "Serialized n-gram model")->check(CLI::ExistingFile);
    app->add_option("--train-corpus", corpus, "Clean JSONL corpus to train an n-gram model from")
        ->check(CLI::ExistingFile);
    app->add_option("--order", order, "n-gram order when training")->check(CLI::Range(2, 10));
    app->add_option("--remote-url", remote_url, "Base URL of a remote /generate endpoint");
    app->add_option("--remote-timeout-ms", timeout_ms, "Remote request timeout")->check(CLI::PositiveNumber);
    app->add_option("--id", id, "Backend id override");
  }

  std::shared_ptr<GenerationBackend> build() const {
    if (!remote_url.empty()) {
      return std::make_shared<RemoteBackend>(RemoteEndpoint{remote_url, "/generate", std::chrono::milliseconds(timeout_ms)},
                                             id.empty() ? "remote" : id);
    }
    if (model.empty() && corpus.empty()) throw CLI::ValidationError("backend", "need --model, --train-corpus or --remote-url");
    return std::make_shared<NgramBackend>(load_or_train(model, corpus, order), id.empty() ? "ngram" : id);
  }
};

void run_pipeline_cmd(const std::string& input, const std::string& out_dir, std::uint64_t seed, const std::string& ratio,
                      int min_year, int max_year, int min_helpfulness, const std::string& templates,
                      const std::string& abbrev, const std::vector<std::string>& keywords) {
  PipelineConfig config;
  config.seed = seed;
  config.ratio = Ratio::parse(ratio);
  config.min_year = min_year;
  config.max_year = max_year;
  config.min_helpfulness_exclusive = min_helpfulness;
  if (!templates.empty()) config.templates = read_template_file(templates);
  if (!abbrev.empty()) config.abbreviations = read_abbreviation_file(abbrev);
  config.keywords = keywords;
  auto out = run_pipeline(input, out_dir, config);
  std::cout << out.report.dump(2) << "\n";
}

int serve(const std::string& config_path, const json& flags) {
  const json file = config_path.empty() ? json(nullptr) : read_json_file(config_path);
  ServiceConfig config = resolve_service_config(file, process_env(), flags);
  config.validate();

  std::shared_ptr<NgramModel> model;
  if (!config.model_path.empty() || !config.train_corpus.empty()) {
    model = load_or_train(config.model_path, config.train_corpus, config.ngram_order);
  }
  std::shared_ptr<GenerationBackend> backend;
  std::shared_ptr<GenerationBackend> fallback;
  if (config.backend == "remote") {
    backend = std::make_shared<RemoteBackend>(
        RemoteEndpoint{config.remote_url, "/generate", std::chrono::milliseconds(config.remote_timeout_ms)});
    if (config.fallback_to_ngram && model) fallback = std::make_shared<NgramBackend>(model);
  } else {
    backend = std::make_shared<NgramBackend>(model);
  }

  // Signals are taken synchronously below; block them before any thread starts.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  boost::asio::thread_pool generation_pool(4);
  ServiceOptions options;
  options.policy = config.policy;
  options.data_dir = config.data_dir;
  options.seed = config.seed;
  std::filesystem::create_directories(config.data_dir);
  SessionManager manager(options, backend, fallback, std::make_shared<SteadyClock>(),
                         [&generation_pool](std::function<void()> job) {
                           boost::asio::post(generation_pool, std::move(job));
                         });

  auto [host, port] = split_listen_address(config.listen);
  Server server(manager, Server::Options{host, port, 2, std::chrono::milliseconds(5)});
  server.start();
  std::cerr << "listening on " << host << ":" << server.port() << " (backend " << backend->id() << ")\n";
  std::cerr << "config " << config.to_json().dump() << "\n";

  int sig = 0;
  sigwait(&signals, &sig);
  std::cerr << "signal " << sig << ", shutting down\n";
  server.stop();
  manager.drain();
  generation_pool.join();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Peer-review co-writing suggestion toolkit"};
  app.require_subcommand(1);

  // pipeline run
  auto* pipeline = app.add_subcommand("pipeline", "Corpus preparation");
  pipeline->require_subcommand(1);
  auto* pipeline_run = pipeline->add_subcommand("run", "Clean, filter and split a raw review export");
  std::string p_input, p_out, p_ratio = "0.8", p_templates, p_abbrev;
  std::uint64_t p_seed = 42;
  int p_min_year = 2016, p_max_year = 2021, p_min_help = 5;
  std::vector<std::string> p_keywords;
  pipeline_run->add_option("--input", p_input, "Raw reviews (.jsonl or .csv)")->required()->check(CLI::ExistingFile);
  pipeline_run->add_option("--out-dir", p_out, "Output directory")->required();
  pipeline_run->add_option("--seed", p_seed, "Split seed");
  pipeline_run->add_option("--ratio", p_ratio, "Train share, a decimal in (0, 1)");
  pipeline_run->add_option("--min-year", p_min_year);
  pipeline_run->add_option("--max-year", p_max_year);
  pipeline_run->add_option("--min-helpfulness", p_min_help, "Keep reviews rated strictly above this");
  pipeline_run->add_option("--templates", p_templates, "Template question file, one per line")->check(CLI::ExistingFile);
  pipeline_run->add_option("--abbrev", p_abbrev, "Abbreviation table (JSON object)")->check(CLI::ExistingFile);
  pipeline_run->add_option("--keyword", p_keywords, "Extra whole-word keyword to remove (repeatable)");
  pipeline_run->callback([&] {
    run_pipeline_cmd(p_input, p_out, p_seed, p_ratio, p_min_year, p_max_year, p_min_help, p_templates, p_abbrev,
                     p_keywords);
  });

  // ngram train
  auto* ngram = app.add_subcommand("ngram", "n-gram model tools");
  ngram->require_subcommand(1);
  auto* ngram_train = ngram->add_subcommand("train", "Train an n-gram model on a clean JSONL corpus");
  std::string n_corpus, n_out;
  int n_order = 3;
  ngram_train->add_option("--corpus", n_corpus)->required()->check(CLI::ExistingFile);
  ngram_train->add_option("--order", n_order)->check(CLI::Range(2, 10));
  ngram_train->add_option("--out", n_out)->required();
  ngram_train->callback([&] {
    auto model = train_ngram(read_clean_reviews(n_corpus), n_order);
    model.save(n_out);
    std::cout << json{{"order", model.order()}, {"vocabulary", model.vocabulary().size()}, {"out", n_out}}.dump()
              << "\n";
  });

  // generate
  auto* generate = app.add_subcommand("generate", "Sample suggestions for a context");
  BackendFlags g_backend;
  g_backend.add(generate);
  GenerationRequest g_request;
  std::uint64_t g_seed = 0;
  generate->add_option("--context", g_request.context)->required();
  generate->add_option("-n,--n-candidates", g_request.n_candidates)->check(CLI::PositiveNumber);
  generate->add_option("--max-new-tokens", g_request.max_new_tokens)->check(CLI::PositiveNumber);
  generate->add_option("--temperature", g_request.temperature)->check(CLI::PositiveNumber);
  auto* g_seed_opt = generate->add_option("--seed", g_seed);
  generate->callback([&] {
    if (g_seed_opt->count()) g_request.seed = g_seed;
    for (const auto& c : g_backend.build()->generate(g_request)) {
      std::cout << json{{"text", c.text},
                        {"token_count", c.token_count},
                        {"backend_id", c.backend_id},
                        {"latency_ms", c.latency_ms},
                        {"truncated", c.truncated}}
                       .dump()
                << "\n";
    }
  });

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP/WebSocket session service");
  std::string s_config;
  std::string s_backend, s_remote, s_model, s_corpus, s_data, s_listen;
  std::uint64_t s_seed = 0;
  std::int64_t s_delay = 0;
  int s_min_words = 0;
  serve_cmd->add_option("--config", s_config, "JSON configuration file")->check(CLI::ExistingFile);
  auto* o_backend = serve_cmd->add_option("--backend", s_backend)->check(CLI::IsMember({"ngram", "remote"}));
  auto* o_remote = serve_cmd->add_option("--remote-url", s_remote);
  auto* o_model = serve_cmd->add_option("--model", s_model);
  auto* o_corpus = serve_cmd->add_option("--train-corpus", s_corpus);
  auto* o_data = serve_cmd->add_option("--data-dir", s_data);
  auto* o_listen = serve_cmd->add_option("--listen", s_listen, "host:port");
  auto* o_seed = serve_cmd->add_option("--seed", s_seed);
  auto* o_delay = serve_cmd->add_option("--delay-ms", s_delay);
  auto* o_min_words = serve_cmd->add_option("--min-words", s_min_words);
  int serve_status = 0;
  serve_cmd->callback([&] {
    json flags = json::object();
    if (o_backend->count()) flags["backend"] = s_backend;
    if (o_remote->count()) flags["remote_url"] = s_remote;
    if (o_model->count()) flags["model"] = s_model;
    if (o_corpus->count()) flags["train_corpus"] = s_corpus;
    if (o_data->count()) flags["data_dir"] = s_data;
    if (o_listen->count()) flags["listen"] = s_listen;
    if (o_seed->count()) flags["seed"] = s_seed;
    if (o_delay->count()) flags["policy"]["delay_ms"] = s_delay;
    if (o_min_words->count()) flags["policy"]["min_words"] = s_min_words;
    serve_status = serve(s_config, flags);
  });

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluation tools");
  eval->require_subcommand(1);

  auto* eval_score = eval->add_subcommand("score", "Score Likert responses per construct");
  std::string e_input, e_format = "markdown";
  eval_score->add_option("--input", e_input, "CSV: participant_id,construct,item_id,value")
      ->required()
      ->check(CLI::ExistingFile);
  eval_score->add_option("--format", e_format)->check(CLI::IsMember({"markdown", "json"}));
  eval_score->callback([&] {
    auto scores = score_all(read_likert_csv(std::filesystem::path(e_input)));
    if (e_format == "json") {
      std::cout << scores_to_json(scores).dump(2) << "\n";
    } else {
      std::cout << scores_to_markdown(scores);
    }
  });

  auto* eval_samples = eval->add_subcommand("samples", "Export a blinded human-evaluation sheet");
  BackendFlags s_a, s_b;
  std::string es_prompts, es_out;
  int es_k = 10;
  std::uint64_t es_seed = 0;
  eval_samples->add_option("--model", s_a.model, "n-gram model (first backend)")->check(CLI::ExistingFile);
  eval_samples->add_option("--train-corpus", s_a.corpus)->check(CLI::ExistingFile);
  eval_samples->add_option("--remote-url", s_b.remote_url, "Remote endpoint (second backend)");
  eval_samples->add_option("--prompts", es_prompts, "One prompt per line")->required()->check(CLI::ExistingFile);
  eval_samples->add_option("-k", es_k, "Samples per backend")->check(CLI::PositiveNumber);
  eval_samples->add_option("--seed", es_seed);
  eval_samples->add_option("--out-dir", es_out)->required();
  int samples_status = 0;
  eval_samples->callback([&] {
    std::vector<std::shared_ptr<GenerationBackend>> backends;
    if (!s_a.model.empty() || !s_a.corpus.empty()) backends.push_back(s_a.build());
    if (!s_b.remote_url.empty()) backends.push_back(s_b.build());
    if (backends.empty()) throw CLI::ValidationError("backend", "need --model/--train-corpus and/or --remote-url");
    auto e = export_human_eval_samples(backends, read_lines(es_prompts), es_k, GenerationRequest{}, es_seed);
    std::filesystem::create_directories(es_out);
    std::ofstream sheet(std::filesystem::path(es_out) / "rating_sheet.csv");
    write_rating_sheet(sheet, e.rows);
    std::ofstream(std::filesystem::path(es_out) / "blinding.json") << blinding_to_json(e).dump(2) << "\n";
    std::cout << json{{"rows", e.rows.size()}, {"partial", e.partial}, {"failures", e.failures}}.dump() << "\n";
    samples_status = e.partial ? 2 : 0;
  });

  auto* eval_bench = eval->add_subcommand("bench", "Measure generation latency");
  BackendFlags b_backend;
  b_backend.add(eval_bench);
  std::string b_text, b_file, b_format = "markdown";
  int b_trials = 10;
  eval_bench->add_option("--input-text", b_text);
  eval_bench->add_option("--input-file", b_file)->check(CLI::ExistingFile);
  eval_bench->add_option("--trials", b_trials)->check(CLI::PositiveNumber);
  eval_bench->add_option("--format", b_format)->check(CLI::IsMember({"markdown", "json"}));
  int bench_status = 0;
  eval_bench->callback([&] {
    const std::string input = b_file.empty() ? b_text : normalize_whitespace(read_all(b_file));
    if (input.empty()) throw CLI::ValidationError("input", "need --input-text or --input-file");
    auto stats = benchmark_latency(*b_backend.build(), input, b_trials);
    if (b_format == "json") {
      std::cout << stats.to_json().dump(2) << "\n";
    } else {
      std::cout << latency_report_markdown({stats});
    }
    bench_status = stats.partial ? 2 : 0;
  });

  // replay
  auto* replay_cmd = app.add_subcommand("replay", "Re-run an exported session log and check it");
  std::string r_events, r_candidates, r_policy;
  std::uint64_t r_seed = 0;
  replay_cmd->add_option("--events", r_events, "<id>.events.jsonl")->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--candidates", r_candidates, "<id>.candidates.jsonl")->check(CLI::ExistingFile);
  replay_cmd->add_option("--seed", r_seed, "Session seed (from GET /sessions/{id})")->required();
  replay_cmd->add_option("--policy", r_policy, "Policy overrides as JSON");
  int replay_status = 0;
  replay_cmd->callback([&] {
    const auto events = EventLog::read_events(r_events);
    const auto texts = r_candidates.empty() ? CandidateTable{} : EventLog::read_candidates(r_candidates);
    const auto policy = TriggerPolicy::with_overrides(TriggerPolicy{}, r_policy.empty() ? json(nullptr) : json::parse(r_policy));
    try {
      auto result = replay(events, texts, policy, r_seed);
      std::cout << json{{"ok", true},
                        {"events", events.size()},
                        {"document", result.state.document},
                        {"analytics", compute_analytics(result.events).to_json()}}
                       .dump(2)
                << "\n";
    } catch (const ReplayError& e) {
      std::cout << json{{"ok", false}, {"error", e.what()}}.dump(2) << "\n";
      replay_status = 1;
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return serve_status | samples_status | bench_status | replay_status;
}
