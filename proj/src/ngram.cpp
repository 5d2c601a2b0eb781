#include "cowrite/ngram.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>

#include "cowrite/text.hpp"

namespace cowrite {

using nlohmann::json;

namespace {
constexpr const char* kFormat = "cowrite.ngram";
constexpr int kFormatVersion = 1;
}  // namespace

const NgramModel::Counts& NgramModel::backoff(std::span<const std::string> history) const {
  const std::size_t longest = std::min(history.size(), static_cast<std::size_t>(order_ - 1));
  for (std::size_t k = longest; k >= 1; --k) {
    Context context(history.end() - static_cast<std::ptrdiff_t>(k), history.end());
    auto it = tables_[k].find(context);
    if (it != tables_[k].end()) return it->second;
  }
  return tables_[0].begin()->second;
}

json NgramModel::to_json() const {
  json tables = json::array();
  for (const auto& table : tables_) {
    json entries = json::array();
    for (const auto& [context, counts] : table) {
      entries.push_back({{"context", context}, {"next", counts}});
    }
    tables.push_back(std::move(entries));
  }
  return {{"format", kFormat},
          {"version", kFormatVersion},
          {"order", order_},
          {"vocabulary", vocabulary_},
          {"tables", std::move(tables)}};
}

NgramModel NgramModel::from_json(const json& doc) {
  try {
    if (doc.at("format").get<std::string>() != kFormat) throw std::runtime_error("not an n-gram model file");
    if (doc.at("version").get<int>() != kFormatVersion) throw std::runtime_error("unsupported model version");
    NgramModel m;
    m.order_ = doc.at("order").get<int>();
    if (m.order_ < 2) throw std::runtime_error("order must be at least 2");
    m.vocabulary_ = doc.at("vocabulary").get<std::set<std::string>>();
    const auto& tables = doc.at("tables");
    if (tables.size() != static_cast<std::size_t>(m.order_)) throw std::runtime_error("table count does not match order");
    for (const auto& entries : tables) {
      Table table;
      for (const auto& e : entries) {
        Counts counts = e.at("next").get<Counts>();
        std::uint64_t total = 0;
        for (const auto& [tok, n] : counts) total += n;
        if (total == 0) throw std::runtime_error("context with zero total count");
        table.emplace(e.at("context").get<Context>(), std::move(counts));
      }
      m.tables_.push_back(std::move(table));
    }
    if (m.tables_[0].size() != 1) throw std::runtime_error("missing unigram table");
    return m;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed n-gram model: ") + e.what());
  }
}

void NgramModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << serialize() << '\n';
}

NgramModel NgramModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return from_json(json::parse(in));
}

NgramModel train_ngram(const std::vector<CleanReview>& corpus, int order) {
  if (order < 2) throw std::invalid_argument("n-gram order must be at least 2");
  if (corpus.empty()) throw std::invalid_argument("cannot train on an empty corpus");

  NgramModel m;
  m.order_ = order;
  m.tables_.assign(static_cast<std::size_t>(order), {});
  const std::size_t pad = static_cast<std::size_t>(order - 1);
  for (const auto& review : corpus) {
    std::vector<std::string> seq(pad, std::string(kBeginToken));
    for (auto& w : split_words(review.text)) {
      m.vocabulary_.insert(w);
      seq.push_back(std::move(w));
    }
    seq.emplace_back(kEndToken);
    for (std::size_t pos = pad; pos < seq.size(); ++pos) {
      for (std::size_t k = 0; k <= pad; ++k) {
        NgramModel::Context context(seq.begin() + static_cast<std::ptrdiff_t>(pos - k),
                                    seq.begin() + static_cast<std::ptrdiff_t>(pos));
        ++m.tables_[k][context][seq[pos]];
      }
    }
  }
  if (m.vocabulary_.empty()) throw std::invalid_argument("training corpus contains no tokens");
  return m;
}

std::vector<std::pair<std::string, double>> scaled_distribution(const NgramModel::Counts& counts, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  if (counts.empty()) throw std::invalid_argument("empty count table");
  double log_max = -INFINITY;
  for (const auto& [tok, n] : counts) log_max = std::max(log_max, std::log(static_cast<double>(n)));
  std::vector<std::pair<std::string, double>> dist;
  dist.reserve(counts.size());
  double total = 0.0;
  for (const auto& [tok, n] : counts) {
    double w = std::exp((std::log(static_cast<double>(n)) - log_max) / temperature);
    dist.emplace_back(tok, w);
    total += w;
  }
  for (auto& [tok, p] : dist) p /= total;
  return dist;
}

std::string sample_next(const NgramModel& model, std::span<const std::string> context_tokens, double temperature,
                        Rng& rng) {
  auto dist = scaled_distribution(model.backoff(context_tokens), temperature);
  const double u = rng.uniform();
  double acc = 0.0;
  for (const auto& [tok, p] : dist) {
    acc += p;
    if (u < acc) return tok;
  }
  // u landed in the rounding gap above the final cumulative sum.
  for (auto it = dist.rbegin(); it != dist.rend(); ++it) {
    if (it->second > 0.0) return it->first;
  }
  return dist.back().first;
}

NgramBackend::NgramBackend(std::shared_ptr<const NgramModel> model, std::string id)
    : model_(std::move(model)), id_(std::move(id)) {
  if (!model_) throw std::invalid_argument("n-gram backend needs a model");
}

std::vector<std::string> NgramBackend::sample_tokens(std::span<const std::string> context, int max_new_tokens,
                                                     double temperature, std::uint64_t stream_seed) const {
  Rng rng(stream_seed);
  std::vector<std::string> history(context.begin(), context.end());
  std::vector<std::string> out;
  const int threshold = sentence_cut_threshold(max_new_tokens);
  while (static_cast<int>(out.size()) < max_new_tokens) {
    std::string tok = sample_next(*model_, history, temperature, rng);
    if (tok == kEndToken && out.empty()) {
      // At least one token: redraw from the same distribution without the end marker.
      NgramModel::Counts counts = model_->backoff(history);
      counts.erase(std::string(kEndToken));
      if (counts.empty()) {
        counts = model_->table(0).at({});
        counts.erase(std::string(kEndToken));
      }
      if (counts.empty()) break;
      auto dist = scaled_distribution(counts, temperature);
      tok = dist.back().first;
      const double u = rng.uniform();
      double acc = 0.0;
      for (const auto& [t, p] : dist) {
        acc += p;
        if (u < acc) {
          tok = t;
          break;
        }
      }
    }
    if (tok == kEndToken) break;
    history.push_back(tok);
    out.push_back(std::move(tok));
    if (static_cast<int>(out.size()) >= threshold && ends_sentence(out.back())) break;
  }
  return out;
}

std::vector<Candidate> NgramBackend::generate(const GenerationRequest& request, const CancellationToken& cancel) {
  request.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t seed = request.seed ? *request.seed : std::random_device{}();
  const std::vector<std::string> context = split_words(request.context);

  std::vector<Candidate> out;
  out.reserve(static_cast<std::size_t>(request.n_candidates));
  for (int i = 0; i < request.n_candidates; ++i) {
    if (cancel.cancelled()) throw GenerationError(GenerationErrorKind::Cancelled, "request cancelled");
    auto tokens = sample_tokens(context, request.max_new_tokens, request.temperature, seed + static_cast<std::uint64_t>(i));
    Candidate c;
    c.backend_id = id_;
    c.token_count = static_cast<int>(tokens.size());
    c.text = join_words(tokens);
    c.exhausted = tokens.empty();
    out.push_back(std::move(c));
  }
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
  for (auto& c : out) c.latency_ms = elapsed.count();
  return out;
}

}  // namespace cowrite
