#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cowrite/corpus.hpp"
#include "cowrite/generation.hpp"
#include "cowrite/rng.hpp"

namespace cowrite {

inline constexpr std::string_view kBeginToken = "<s>";
inline constexpr std::string_view kEndToken = "</s>";

// Whitespace-token n-gram counts with tables for every context length from
// order-1 down to 0 (the unigram table), used for backoff. Immutable after
// training; safe to share across threads.
class NgramModel {
 public:
  using Counts = std::map<std::string, std::uint64_t>;
  using Context = std::vector<std::string>;
  using Table = std::map<Context, Counts>;

  int order() const { return order_; }
  const std::set<std::string>& vocabulary() const { return vocabulary_; }
  // context_len in [0, order-1]; table(0) holds the single empty context.
  const Table& table(std::size_t context_len) const { return tables_.at(context_len); }

  // Counts for the longest suffix of `history` (at most order-1 tokens)
  // seen in training, falling back to the unigram table.
  const Counts& backoff(std::span<const std::string> history) const;

  nlohmann::json to_json() const;
  static NgramModel from_json(const nlohmann::json& doc);
  std::string serialize() const { return to_json().dump(); }
  void save(const std::filesystem::path& path) const;
  static NgramModel load(const std::filesystem::path& path);

  bool operator==(const NgramModel&) const = default;

 private:
  friend NgramModel train_ngram(const std::vector<CleanReview>& corpus, int order);

  int order_ = 2;
  std::set<std::string> vocabulary_;
  std::vector<Table> tables_;
};

NgramModel train_ngram(const std::vector<CleanReview>& corpus, int order);

// Temperature-scaled distribution: counts^(1/T), normalized. Computed in log
// space so tiny temperatures converge to the argmax instead of overflowing.
std::vector<std::pair<std::string, double>> scaled_distribution(const NgramModel::Counts& counts, double temperature);

std::string sample_next(const NgramModel& model, std::span<const std::string> context_tokens, double temperature,
                        Rng& rng);

class NgramBackend final : public GenerationBackend {
 public:
  explicit NgramBackend(std::shared_ptr<const NgramModel> model, std::string id = "ngram");

  std::string id() const override { return id_; }
  std::vector<Candidate> generate(const GenerationRequest& request,
                                  const CancellationToken& cancel = CancellationToken()) override;

  // One candidate drawn from its own sampling stream.
  std::vector<std::string> sample_tokens(std::span<const std::string> context, int max_new_tokens,
                                         double temperature, std::uint64_t stream_seed) const;

 private:
  std::shared_ptr<const NgramModel> model_;
  std::string id_;
};

}  // namespace cowrite
