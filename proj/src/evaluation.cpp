#include "cowrite/evaluation.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cowrite/csv.hpp"
#include "cowrite/rng.hpp"
#include "cowrite/text.hpp"

namespace cowrite {

using nlohmann::json;

namespace {

struct ConstructName {
  Construct construct;
  std::string_view snake;
  std::string_view camel;
  std::string_view label;
};

constexpr std::array<ConstructName, 5> kConstructs{{
    {Construct::EaseOfUse, "ease_of_use", "EaseOfUse", "Perceived ease of use"},
    {Construct::EaseOfInteraction, "ease_of_interaction", "EaseOfInteraction", "Perceived ease of interaction"},
    {Construct::Excitement, "excitement", "Excitement", "Perceived level of excitement"},
    {Construct::Enjoyment, "enjoyment", "Enjoyment", "Perceived level of enjoyment"},
    {Construct::Usefulness, "usefulness", "Usefulness", "Perceived usefulness"},
}};

const ConstructName& entry(Construct c) {
  for (const auto& e : kConstructs) {
    if (e.construct == c) return e;
  }
  throw std::logic_error("unknown construct");
}

std::string fixed(double v, int decimals) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(decimals) << v;
  return os.str();
}

std::optional<int> parse_rating(const std::string& s) {
  if (normalize_whitespace(s).empty()) return std::nullopt;
  int v = std::stoi(s);
  if (v < 1 || v > 5) throw std::invalid_argument("rating " + s + " outside 1..5");
  return v;
}

}  // namespace

std::string_view to_string(Construct c) { return entry(c).snake; }
std::string_view label(Construct c) { return entry(c).label; }

std::optional<Construct> construct_from_string(std::string_view name) {
  for (const auto& e : kConstructs) {
    if (name == e.snake || name == e.camel) return e.construct;
  }
  return std::nullopt;
}

double round_to(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(value * scale) / scale;
}

double ConstructScore::reported_normalized_mean() const { return round_to(normalized_mean, 2); }

ConstructScore score_construct(const std::vector<LikertResponse>& responses) {
  if (responses.empty()) throw std::invalid_argument("no responses to score");
  const Construct construct = responses.front().construct;
  std::map<std::string, std::pair<double, int>> per_participant;
  for (const auto& r : responses) {
    if (r.construct != construct) throw std::invalid_argument("responses mix several constructs");
    if (r.value < 1 || r.value > kLikertMax) {
      throw std::invalid_argument("Likert value " + std::to_string(r.value) + " outside 1..7");
    }
    auto& [sum, n] = per_participant[r.participant_id];
    sum += r.value;
    ++n;
  }

  std::vector<double> averages;
  for (const auto& [id, acc] : per_participant) averages.push_back(acc.first / acc.second);

  ConstructScore s;
  s.construct = construct;
  s.n_participants = averages.size();
  double total = 0.0;
  for (double a : averages) total += a;
  s.mean = total / static_cast<double>(averages.size());
  if (averages.size() > 1) {
    double ss = 0.0;
    for (double a : averages) ss += (a - s.mean) * (a - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(averages.size() - 1));
  }
  s.normalized_mean = s.mean / kLikertMax;
  return s;
}

std::vector<ConstructScore> score_all(const std::vector<LikertResponse>& responses) {
  std::map<Construct, std::vector<LikertResponse>> grouped;
  for (const auto& r : responses) grouped[r.construct].push_back(r);
  std::vector<ConstructScore> out;
  for (const auto& [c, group] : grouped) out.push_back(score_construct(group));
  return out;
}

std::vector<LikertResponse> read_likert_csv(std::istream& in) {
  std::vector<std::string> fields;
  std::size_t line = 1;
  if (!read_csv_record(in, fields, line)) return {};
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < fields.size(); ++i) column[normalize_whitespace(fields[i])] = i;
  for (const char* name : {"participant_id", "construct", "item_id", "value"}) {
    if (!column.count(name)) throw std::invalid_argument(std::string("Likert CSV lacks column '") + name + "'");
  }
  std::vector<LikertResponse> out;
  for (;;) {
    const std::size_t start = line;
    if (!read_csv_record(in, fields, line)) break;
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != column.size()) throw std::invalid_argument("line " + std::to_string(start) + ": wrong field count");
    auto construct = construct_from_string(normalize_whitespace(fields[column["construct"]]));
    if (!construct) {
      throw std::invalid_argument("line " + std::to_string(start) + ": unknown construct '" + fields[column["construct"]] + "'");
    }
    LikertResponse r;
    r.participant_id = fields[column["participant_id"]];
    r.construct = *construct;
    r.item_id = fields[column["item_id"]];
    try {
      r.value = std::stoi(fields[column["value"]]);
    } catch (const std::exception&) {
      throw std::invalid_argument("line " + std::to_string(start) + ": value is not an integer");
    }
    if (r.value < 1 || r.value > kLikertMax) {
      throw std::invalid_argument("line " + std::to_string(start) + ": value outside 1..7");
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<LikertResponse> read_likert_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read " + path.string());
  return read_likert_csv(in);
}

json scores_to_json(const std::vector<ConstructScore>& scores) {
  json out = json::array();
  for (const auto& s : scores) {
    out.push_back({{"construct", std::string(to_string(s.construct))},
                   {"label", std::string(label(s.construct))},
                   {"mean", s.mean},
                   {"sd", s.sd},
                   {"normalized_mean", s.normalized_mean},
                   {"normalized_mean_reported", s.reported_normalized_mean()},
                   {"n_participants", s.n_participants}});
  }
  return out;
}

std::string scores_to_markdown(const std::vector<ConstructScore>& scores) {
  std::string out = "| |";
  std::string rule = "|---|";
  std::string mean = "| **Mean** |";
  std::string sd = "| **Std.** |";
  std::string norm = "| **Normalized mean** |";
  for (const auto& s : scores) {
    out += " " + std::string(label(s.construct)) + " |";
    rule += "---|";
    mean += " " + fixed(s.mean, 2) + " |";
    sd += " " + fixed(s.sd, 2) + " |";
    norm += " " + fixed(s.reported_normalized_mean(), 2) + " |";
  }
  return out + "\n" + rule + "\n" + mean + "\n" + sd + "\n" + norm + "\n";
}

HumanEvalExport export_human_eval_samples(const std::vector<std::shared_ptr<GenerationBackend>>& backends,
                                          const std::vector<std::string>& prompts, int k,
                                          const GenerationRequest& base_request, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  if (prompts.empty()) throw std::invalid_argument("at least one prompt is required");
  if (backends.empty()) throw std::invalid_argument("at least one backend is required");
  std::set<std::string> ids;
  for (const auto& b : backends) {
    if (!b) throw std::invalid_argument("null backend");
    if (!ids.insert(b->id()).second) throw std::invalid_argument("backend ids must be distinct: " + b->id());
  }

  HumanEvalExport out;
  std::vector<LabelledSample> samples;
  for (const auto& backend : backends) {
    for (int j = 0; j < k; ++j) {
      GenerationRequest request = base_request;
      request.context = prompts[static_cast<std::size_t>(j) % prompts.size()];
      request.n_candidates = 1;
      request.seed = seed + static_cast<std::uint64_t>(j);
      try {
        auto candidates = backend->generate(request);
        if (candidates.empty()) throw GenerationError(GenerationErrorKind::SchemaMismatch, "no candidate returned");
        samples.push_back({backend->id(), request.context, candidates.front().text});
      } catch (const GenerationError& e) {
        out.partial = true;
        out.failures.push_back(backend->id() + " sample " + std::to_string(j) + ": " + e.what());
      }
    }
  }

  Rng rng(seed);
  for (std::size_t i = samples.size(); i > 1; --i) {
    std::swap(samples[i - 1], samples[static_cast<std::size_t>(rng.below_or_equal(i - 1))]);
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "S%03zu", i + 1);
    out.rows.push_back(RatingRow{id, samples[i].prompt, samples[i].instruction, std::nullopt, std::nullopt});
    out.blinding[id] = samples[i].backend_id;
  }
  return out;
}

std::vector<LabelledSample> unblind(const std::vector<RatingRow>& rows,
                                    const std::map<std::string, std::string>& blinding) {
  std::vector<LabelledSample> out;
  for (const auto& r : rows) {
    auto it = blinding.find(r.sample_id);
    if (it == blinding.end()) throw std::invalid_argument("sample " + r.sample_id + " missing from blinding map");
    out.push_back({it->second, r.prompt, r.instruction});
  }
  return out;
}

void write_rating_sheet(std::ostream& out, const std::vector<RatingRow>& rows) {
  out << "sample_id,prompt,instruction,fluency,correctness\n";
  for (const auto& r : rows) {
    out << csv_row({r.sample_id, r.prompt, r.instruction, r.fluency ? std::to_string(*r.fluency) : "",
                    r.correctness ? std::to_string(*r.correctness) : ""})
        << '\n';
  }
}

std::vector<RatingRow> read_rating_sheet(std::istream& in) {
  std::vector<std::string> fields;
  std::size_t line = 1;
  if (!read_csv_record(in, fields, line)) return {};
  std::vector<RatingRow> rows;
  while (read_csv_record(in, fields, line)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != 5) throw std::invalid_argument("rating sheet rows need 5 fields");
    rows.push_back({fields[0], fields[1], fields[2], parse_rating(fields[3]), parse_rating(fields[4])});
  }
  return rows;
}

json blinding_to_json(const HumanEvalExport& e) {
  return {{"blinding", e.blinding}, {"partial", e.partial}, {"failures", e.failures}};
}

json LatencyStats::to_json() const {
  return {{"backend_id", backend_id},   {"trials_requested", trials_requested},
          {"trials_completed", trials_completed}, {"mean_ms", mean_ms},
          {"p95_ms", p95_ms},           {"partial", partial},
          {"error", error}};
}

LatencyStats benchmark_latency(GenerationBackend& backend, const std::string& input_text, int n_trials,
                               const GenerationRequest& base_request) {
  if (n_trials < 1) throw std::invalid_argument("n_trials must be at least 1");
  LatencyStats stats;
  stats.backend_id = backend.id();
  stats.trials_requested = static_cast<std::size_t>(n_trials);
  GenerationRequest request = base_request;
  request.context = input_text;
  if (!request.seed) request.seed = 0;

  for (int t = 0; t < n_trials; ++t) {
    const auto start = std::chrono::steady_clock::now();
    try {
      backend.generate(request);
    } catch (const GenerationError& e) {
      stats.partial = true;
      stats.error = e.what();
      break;
    }
    const std::chrono::duration<double, std::milli> elapsed = std::chrono::steady_clock::now() - start;
    stats.samples_ms.push_back(elapsed.count());
  }
  stats.trials_completed = stats.samples_ms.size();
  if (stats.samples_ms.empty()) return stats;

  double total = 0.0;
  for (double v : stats.samples_ms) total += v;
  stats.mean_ms = total / static_cast<double>(stats.samples_ms.size());
  if (stats.samples_ms.size() == 1) {
    stats.p95_ms = stats.mean_ms;
  } else {
    std::vector<double> sorted = stats.samples_ms;
    std::sort(sorted.begin(), sorted.end());
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(sorted.size())));
    stats.p95_ms = sorted[std::max<std::size_t>(rank, 1) - 1];
  }
  return stats;
}

std::string latency_report_markdown(const std::vector<LatencyStats>& runs) {
  std::string out = "| Backend | Trials | Mean (ms) | p95 (ms) | Note |\n|---|---|---|---|---|\n";
  for (const auto& r : runs) {
    out += "| " + r.backend_id + " | " + std::to_string(r.trials_completed) + "/" + std::to_string(r.trials_requested) +
           " | " + fixed(r.mean_ms, 1) + " | " + fixed(r.p95_ms, 1) + " | " + (r.partial ? "partial: " + r.error : "") +
           " |\n";
  }
  return out;
}

}  // namespace cowrite
