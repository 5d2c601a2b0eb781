#include "cowrite/pipeline.hpp"

#include <fstream>

#include "cowrite/corpus_io.hpp"

namespace cowrite {

std::string clean_text(std::string_view text, const PipelineConfig& config) {
  std::string s = strip_markup(text);
  s = remove_template_questions(s, config.templates, config.keywords);
  return expand_abbreviations(s, config.abbreviations);
}

PipelineOutputs run_pipeline(const std::filesystem::path& input_path, const std::filesystem::path& out_dir,
                             const PipelineConfig& config) {
  if (config.templates.empty()) throw CorpusError("at least one template question is required");
  std::vector<RawReview> raw = read_raw_reviews(input_path);

  std::size_t changed_markup = 0;
  std::size_t changed_templates = 0;
  std::size_t changed_abbreviations = 0;
  std::vector<RawReview> cleaned;
  cleaned.reserve(raw.size());
  for (const auto& r : raw) {
    std::string a = strip_markup(r.text);
    std::string b = remove_template_questions(a, config.templates, config.keywords);
    std::string c = expand_abbreviations(b, config.abbreviations);
    changed_markup += a != r.text;
    changed_templates += b != a;
    changed_abbreviations += c != b;
    cleaned.push_back(RawReview{r.id, r.year, r.helpfulness, std::move(c)});
  }

  std::size_t dropped_year = 0;
  for (const auto& r : cleaned) dropped_year += r.year < config.min_year || r.year > config.max_year;
  std::vector<RawReview> kept =
      filter_reviews(cleaned, config.min_year, config.max_year, config.min_helpfulness_exclusive);
  std::size_t dropped_helpfulness = cleaned.size() - dropped_year - kept.size();

  std::vector<CleanReview> clean;
  std::size_t dropped_empty = 0;
  for (auto& r : kept) {
    if (r.text.empty()) {
      ++dropped_empty;
      continue;
    }
    clean.push_back(CleanReview::from_text(std::move(r.id), std::move(r.text)));
  }
  if (clean.empty()) throw CorpusError("no reviews survive filtering; nothing to split");

  CorpusSplit split = split_corpus(clean, config.ratio, config.seed);
  CorpusStats stats = corpus_stats(clean);

  std::filesystem::create_directories(out_dir);
  PipelineOutputs out;
  out.clean_path = out_dir / "clean.jsonl";
  out.train_path = out_dir / "train.jsonl";
  out.test_path = out_dir / "test.jsonl";
  out.train_text_path = out_dir / "train.txt";
  out.test_text_path = out_dir / "test.txt";
  out.report_path = out_dir / "report.json";
  write_clean_reviews_jsonl(out.clean_path, clean);
  write_clean_reviews_jsonl(out.train_path, split.train);
  write_clean_reviews_jsonl(out.test_path, split.test);
  write_plain_text(out.train_text_path, split.train);
  write_plain_text(out.test_text_path, split.test);

  out.report = {
      {"input", input_path.filename().string()},
      {"records_read", raw.size()},
      {"changed",
       {{"strip_markup", changed_markup},
        {"remove_template_questions", changed_templates},
        {"expand_abbreviations", changed_abbreviations}}},
      {"dropped", {{"year", dropped_year}, {"helpfulness", dropped_helpfulness}, {"empty_after_cleaning", dropped_empty}}},
      {"kept", clean.size()},
      {"split",
       {{"seed", config.seed},
        {"ratio", std::to_string(config.ratio.num) + "/" + std::to_string(config.ratio.den)},
        {"train", split.train.size()},
        {"test", split.test.size()}}},
      {"word_count", {{"mean", stats.mean_word_count}, {"sd", stats.sd_word_count}}},
      {"filter",
       {{"min_year", config.min_year},
        {"max_year", config.max_year},
        {"min_helpfulness_exclusive", config.min_helpfulness_exclusive}}},
  };
  std::ofstream report(out.report_path, std::ios::binary | std::ios::trunc);
  if (!report) throw CorpusError("cannot write " + out.report_path.string());
  report << out.report.dump(2) << '\n';
  return out;
}

}  // namespace cowrite
