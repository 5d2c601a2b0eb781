#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cowrite/corpus.hpp"

namespace cowrite {

struct PipelineConfig {
  std::uint64_t seed = 42;
  Ratio ratio{4, 5};
  int min_year = 2016;
  int max_year = 2021;
  int min_helpfulness_exclusive = 5;
  std::vector<std::string> templates = default_template_questions();
  std::vector<std::string> keywords;
  AbbreviationTable abbreviations = AbbreviationTable::defaults();
};

struct PipelineOutputs {
  std::filesystem::path clean_path;
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  std::filesystem::path train_text_path;
  std::filesystem::path test_text_path;
  std::filesystem::path report_path;
  nlohmann::json report;
};

// The text cleaning chain applied to one review, in pipeline order.
std::string clean_text(std::string_view text, const PipelineConfig& config);

// strip_markup -> remove_template_questions -> expand_abbreviations ->
// filter_reviews -> split_corpus. Reviews that clean to an empty text are
// dropped before the split and counted in the report.
PipelineOutputs run_pipeline(const std::filesystem::path& input_path, const std::filesystem::path& out_dir,
                             const PipelineConfig& config);

}  // namespace cowrite
