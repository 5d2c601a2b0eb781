#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cowrite/corpus.hpp"

namespace cowrite {

// Malformed or unreadable corpus input. `line()` is 1-based, 0 when the
// failure is not tied to a record.
class CorpusFormatError : public CorpusError {
 public:
  CorpusFormatError(const std::string& what, std::size_t line)
      : CorpusError(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// JSON Lines ({"id","year","helpfulness","text"}) or CSV with the same
// header, chosen by file extension (.csv => CSV).
std::vector<RawReview> read_raw_reviews(const std::filesystem::path& path);
std::vector<RawReview> read_raw_reviews_jsonl(std::istream& in);
std::vector<RawReview> read_raw_reviews_csv(std::istream& in);

std::vector<CleanReview> read_clean_reviews(const std::filesystem::path& path);
void write_clean_reviews_jsonl(const std::filesystem::path& path, const std::vector<CleanReview>& reviews);
void write_plain_text(const std::filesystem::path& path, const std::vector<CleanReview>& reviews);

// One template per line; blank lines and lines starting with '#' are skipped.
std::vector<std::string> read_template_file(const std::filesystem::path& path);
// JSON object {"abbreviation": "expansion", ...}.
AbbreviationTable read_abbreviation_file(const std::filesystem::path& path);

}  // namespace cowrite
