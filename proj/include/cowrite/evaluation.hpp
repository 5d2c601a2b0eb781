#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cowrite/generation.hpp"

namespace cowrite {

// ---------------------------------------------------------------------------
// Likert construct scoring
// ---------------------------------------------------------------------------

enum class Construct { EaseOfUse, EaseOfInteraction, Excitement, Enjoyment, Usefulness };

inline constexpr int kLikertMax = 7;

std::string_view to_string(Construct c);
// Display label, e.g. "Perceived ease of use".
std::string_view label(Construct c);
// Accepts snake_case ("ease_of_use") or CamelCase ("EaseOfUse").
std::optional<Construct> construct_from_string(std::string_view name);

struct LikertResponse {
  std::string participant_id;
  Construct construct = Construct::EaseOfUse;
  std::string item_id;
  int value = 4;  // 1..7
};

struct ConstructScore {
  Construct construct = Construct::EaseOfUse;
  double mean = 0.0;
  double sd = 0.0;               // sample SD over participants, 0 for one participant
  double normalized_mean = 0.0;  // mean / 7, unrounded
  std::size_t n_participants = 0;

  // normalized_mean rounded to two decimals, as reported.
  double reported_normalized_mean() const;
};

double round_to(double value, int decimals);

// Averages items per participant, then takes mean and sample SD over
// participants. Throws std::invalid_argument for empty input, mixed
// constructs or values outside 1..7.
ConstructScore score_construct(const std::vector<LikertResponse>& responses);

// One score per construct present, in Construct order.
std::vector<ConstructScore> score_all(const std::vector<LikertResponse>& responses);

// CSV with header participant_id,construct,item_id,value.
std::vector<LikertResponse> read_likert_csv(std::istream& in);
std::vector<LikertResponse> read_likert_csv(const std::filesystem::path& path);

nlohmann::json scores_to_json(const std::vector<ConstructScore>& scores);
// Constructs as columns; Mean / Std. / Normalized mean as rows.
std::string scores_to_markdown(const std::vector<ConstructScore>& scores);

// ---------------------------------------------------------------------------
// Blinded human-evaluation sheets
// ---------------------------------------------------------------------------

struct RatingRow {
  std::string sample_id;
  std::string prompt;
  std::string instruction;
  std::optional<int> fluency;      // 1..5, filled in by raters
  std::optional<int> correctness;  // 1..5
};

struct HumanEvalExport {
  std::vector<RatingRow> rows;
  std::map<std::string, std::string> blinding;  // sample_id -> backend id
  bool partial = false;
  std::vector<std::string> failures;
};

// k instructions per backend, cycling through `prompts`; candidate j of a
// backend uses seed + j. Rows are shuffled with `seed` and relabelled
// S001, S002, ... so the sheet carries no backend identity.
HumanEvalExport export_human_eval_samples(const std::vector<std::shared_ptr<GenerationBackend>>& backends,
                                          const std::vector<std::string>& prompts, int k,
                                          const GenerationRequest& base_request, std::uint64_t seed);

struct LabelledSample {
  std::string backend_id;
  std::string prompt;
  std::string instruction;
  bool operator==(const LabelledSample&) const = default;
};
// Inverse of the blinding step. Throws std::invalid_argument for ids
// missing from the map.
std::vector<LabelledSample> unblind(const std::vector<RatingRow>& rows,
                                    const std::map<std::string, std::string>& blinding);

// Columns: sample_id,prompt,instruction,fluency,correctness.
void write_rating_sheet(std::ostream& out, const std::vector<RatingRow>& rows);
std::vector<RatingRow> read_rating_sheet(std::istream& in);
nlohmann::json blinding_to_json(const HumanEvalExport& e);

// ---------------------------------------------------------------------------
// Latency benchmark
// ---------------------------------------------------------------------------

struct LatencyStats {
  std::string backend_id;
  std::size_t trials_requested = 0;
  std::size_t trials_completed = 0;
  double mean_ms = 0.0;
  double p95_ms = 0.0;  // nearest rank
  std::vector<double> samples_ms;
  bool partial = false;
  std::string error;

  nlohmann::json to_json() const;
};

// Sequential generate() calls with the same request, timed by wall clock.
// A failing trial stops the run and the stats cover the completed trials.
LatencyStats benchmark_latency(GenerationBackend& backend, const std::string& input_text, int n_trials,
                               const GenerationRequest& base_request = {});

std::string latency_report_markdown(const std::vector<LatencyStats>& runs);

}  // namespace cowrite
