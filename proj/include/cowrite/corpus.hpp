#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cowrite {

struct RawReview {
  std::string id;
  int year = 0;
  int helpfulness = 1;  // 1..7 Likert
  std::string text;
};

struct CleanReview {
  std::string id;
  std::string text;
  std::size_t word_count = 0;

  static CleanReview from_text(std::string id, std::string text);
  bool operator==(const CleanReview&) const = default;
};

// Exact rational in (0, 1). Parsed from decimal strings such as "0.8" so
// that floor(ratio * n) has no floating point error.
struct Ratio {
  std::uint64_t num = 4;
  std::uint64_t den = 5;

  static Ratio parse(std::string_view decimal);
  std::size_t floor_times(std::size_t n) const { return static_cast<std::size_t>((num * n) / den); }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

struct CorpusSplit {
  std::vector<CleanReview> train;
  std::vector<CleanReview> test;
  std::uint64_t seed = 0;
  Ratio ratio;
};

// Ordered abbreviation -> expansion map. Keys are stored case-folded.
class AbbreviationTable {
 public:
  AbbreviationTable() = default;
  explicit AbbreviationTable(std::vector<std::pair<std::string, std::string>> entries);

  static AbbreviationTable defaults();

  void add(std::string_view abbreviation, std::string expansion);
  const std::string* find(std::string_view folded_word) const;
  const std::map<std::string, std::string>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, std::string> entries_;
};

struct CorpusStats {
  std::size_t count = 0;
  double mean_word_count = 0.0;
  double sd_word_count = 0.0;  // population SD
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The template questions students were given, in English translation.
const std::vector<std::string>& default_template_questions();

std::string strip_markup(std::string_view text);

// Removes every case-insensitive, whitespace-normalized occurrence of each
// template. Entries of `keywords` are removed only as whole words.
std::string remove_template_questions(std::string_view text, const std::vector<std::string>& templates,
                                      const std::vector<std::string>& keywords = {});

std::string expand_abbreviations(std::string_view text, const AbbreviationTable& table);

std::vector<RawReview> filter_reviews(const std::vector<RawReview>& reviews, int min_year, int max_year,
                                      int min_helpfulness_exclusive);

CorpusSplit split_corpus(const std::vector<CleanReview>& reviews, Ratio ratio, std::uint64_t seed);

CorpusStats corpus_stats(const std::vector<CleanReview>& reviews);

}  // namespace cowrite
