#include "cowrite/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "cowrite/rng.hpp"
#include "cowrite/text.hpp"

namespace cowrite {
namespace {

bool is_word_byte(char c) {
  auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u) != 0;
}

// Removes '<' [^<>]* '>' spans until none remain.
std::string remove_tags(std::string_view text) {
  std::string current(text);
  for (;;) {
    std::string out;
    out.reserve(current.size());
    bool removed = false;
    std::size_t i = 0;
    while (i < current.size()) {
      if (current[i] == '<') {
        std::size_t j = i + 1;
        while (j < current.size() && current[j] != '<' && current[j] != '>') ++j;
        if (j < current.size() && current[j] == '>') {
          out += ' ';
          i = j + 1;
          removed = true;
          continue;
        }
      }
      out += current[i++];
    }
    current = std::move(out);
    if (!removed) return current;
  }
}

bool starts_with_folded(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

bool is_url_token(std::string_view token) {
  std::size_t i = 0;
  while (i < token.size() && !is_word_byte(token[i])) ++i;
  std::string folded = fold_case(token.substr(i));
  return starts_with_folded(folded, "http://") || starts_with_folded(folded, "https://") ||
         starts_with_folded(folded, "ftp://") || starts_with_folded(folded, "www.");
}

bool is_pdf_token(std::string_view token) {
  while (!token.empty() && !is_word_byte(token.back())) token.remove_suffix(1);
  if (token.size() < 4) return false;
  return fold_case(token.substr(token.size() - 4)) == ".pdf";
}

bool whole_word_at(std::string_view text, std::size_t pos, std::size_t len) {
  bool left = pos == 0 || !is_word_byte(text[pos - 1]);
  bool right = pos + len >= text.size() || !is_word_byte(text[pos + len]);
  return left && right;
}

// Deletes the first occurrence of `needle` (already folded and normalized)
// from `text`. Returns false when there is none.
bool erase_first(std::string& text, const std::string& needle, bool whole_word) {
  if (needle.empty()) return false;
  std::string folded = fold_case(text);
  std::size_t pos = folded.find(needle);
  while (pos != std::string::npos && whole_word && !whole_word_at(folded, pos, needle.size())) {
    pos = folded.find(needle, pos + 1);
  }
  if (pos == std::string::npos) return false;
  text = normalize_whitespace(text.substr(0, pos) + " " + text.substr(pos + needle.size()));
  return true;
}

}  // namespace

CleanReview CleanReview::from_text(std::string id, std::string text) {
  CleanReview r{std::move(id), std::move(text), 0};
  r.word_count = count_words(r.text);
  return r;
}

Ratio Ratio::parse(std::string_view decimal) {
  std::string_view s = decimal;
  std::uint64_t num = 0;
  std::uint64_t den = 1;
  bool seen_point = false;
  bool seen_digit = false;
  for (char c : s) {
    if (c == '.' && !seen_point) {
      seen_point = true;
    } else if (c >= '0' && c <= '9') {
      if (num > 100000000000ULL) throw CorpusError("ratio has too many digits: " + std::string(decimal));
      num = num * 10 + static_cast<std::uint64_t>(c - '0');
      if (seen_point) den *= 10;
      seen_digit = true;
    } else {
      throw CorpusError("ratio is not a decimal number: " + std::string(decimal));
    }
  }
  if (!seen_digit) throw CorpusError("ratio is empty");
  std::uint64_t g = std::gcd(num, den);
  Ratio r{g ? num / g : num, g ? den / g : den};
  if (r.num == 0 || r.num >= r.den) throw CorpusError("ratio must lie strictly between 0 and 1: " + std::string(decimal));
  return r;
}

AbbreviationTable::AbbreviationTable(std::vector<std::pair<std::string, std::string>> entries) {
  for (auto& [key, value] : entries) add(key, std::move(value));
}

AbbreviationTable AbbreviationTable::defaults() {
  return AbbreviationTable({
      {"bsp", "beispielsweise"},
      {"bspw", "beispielsweise"},
      {"dh", "da her"},
      {"ev", "eventuell"},
      {"evtl", "eventuell"},
      {"ggf", "gegebenenfalls"},
      {"o\xC3\xA4", "oder \xC3\xA4hnliches"},
      {"vlt", "vielleicht"},
      {"zb", "zum Beispiel"},
  });
}

void AbbreviationTable::add(std::string_view abbreviation, std::string expansion) {
  std::string key = fold_case(abbreviation);
  if (key.empty()) throw CorpusError("abbreviation key must be nonempty");
  for (char c : key) {
    if (!is_word_byte(c)) throw CorpusError("abbreviation key must be a single word: " + key);
  }
  entries_[key] = std::move(expansion);
}

const std::string* AbbreviationTable::find(std::string_view folded_word) const {
  auto it = entries_.find(std::string(folded_word));
  return it == entries_.end() ? nullptr : &it->second;
}

const std::vector<std::string>& default_template_questions() {
  static const std::vector<std::string> questions{
      "What do you see as the strengths of the fellow student's solution?",
      "What do you see as weaknesses in the fellow student's solution and how can they be addressed?",
      "What should be paid attention to in the revision of the solution?",
      "Provide concrete suggestions for improvement in this regard.",
      "Give concrete suggestions for improvement (constructive feedback).",
      "What should you pay attention to in the revision of the solution? Give concrete suggestions for "
      "improvement (constructive feedback).",
  };
  return questions;
}

std::string strip_markup(std::string_view text) {
  std::string untagged = remove_tags(text);
  std::vector<std::string> kept;
  for (auto& token : split_words(untagged)) {
    if (is_url_token(token) || is_pdf_token(token)) continue;
    kept.push_back(std::move(token));
  }
  return join_words(kept);
}

std::string remove_template_questions(std::string_view text, const std::vector<std::string>& templates,
                                      const std::vector<std::string>& keywords) {
  std::vector<std::string> needles;
  for (const auto& t : templates) {
    std::string n = fold_case(normalize_whitespace(t));
    if (!n.empty()) needles.push_back(std::move(n));
  }
  // Longer templates first so a combined question is removed as one unit.
  std::stable_sort(needles.begin(), needles.end(),
                   [](const std::string& a, const std::string& b) { return a.size() > b.size(); });

  std::string out = normalize_whitespace(text);
  // A removal can splice a new occurrence together; repeat to a fixpoint.
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& n : needles) changed = erase_first(out, n, false) || changed;
  }
  for (const auto& k : keywords) {
    std::string n = fold_case(normalize_whitespace(k));
    while (erase_first(out, n, true)) {
    }
  }
  return out;
}

std::string expand_abbreviations(std::string_view text, const AbbreviationTable& table) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_byte(text[i])) {
      out += text[i++];
      continue;
    }
    std::size_t start = i;
    while (i < text.size() && is_word_byte(text[i])) ++i;
    std::string_view word = text.substr(start, i - start);
    if (const std::string* expansion = table.find(fold_case(word))) {
      out += *expansion;
      if (i < text.size() && text[i] == '.') ++i;
    } else {
      out += word;
    }
  }
  return out;
}

std::vector<RawReview> filter_reviews(const std::vector<RawReview>& reviews, int min_year, int max_year,
                                      int min_helpfulness_exclusive) {
  if (min_year > max_year) throw CorpusError("min_year must not exceed max_year");
  std::vector<RawReview> kept;
  for (const auto& r : reviews) {
    if (r.year >= min_year && r.year <= max_year && r.helpfulness > min_helpfulness_exclusive) kept.push_back(r);
  }
  return kept;
}

CorpusSplit split_corpus(const std::vector<CleanReview>& reviews, Ratio ratio, std::uint64_t seed) {
  if (reviews.empty()) throw CorpusError("cannot split an empty corpus");
  if (ratio.num == 0 || ratio.num >= ratio.den) throw CorpusError("split ratio must lie strictly between 0 and 1");

  std::vector<std::size_t> order(reviews.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    std::size_t j = static_cast<std::size_t>(rng.below_or_equal(i));
    std::swap(order[i], order[j]);
  }

  CorpusSplit split;
  split.seed = seed;
  split.ratio = ratio;
  const std::size_t n_train = ratio.floor_times(reviews.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    (k < n_train ? split.train : split.test).push_back(reviews[order[k]]);
  }
  return split;
}

CorpusStats corpus_stats(const std::vector<CleanReview>& reviews) {
  if (reviews.empty()) throw CorpusError("corpus statistics need at least one review");
  CorpusStats s;
  s.count = reviews.size();
  double sum = 0.0;
  for (const auto& r : reviews) sum += static_cast<double>(r.word_count);
  s.mean_word_count = sum / static_cast<double>(s.count);
  double ss = 0.0;
  for (const auto& r : reviews) {
    double d = static_cast<double>(r.word_count) - s.mean_word_count;
    ss += d * d;
  }
  s.sd_word_count = std::sqrt(ss / static_cast<double>(s.count));
  return s;
}

}  // namespace cowrite
