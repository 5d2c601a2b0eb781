#include "cowrite/corpus_io.hpp"

#include <fstream>
#include <istream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "cowrite/csv.hpp"
#include "cowrite/text.hpp"

namespace cowrite {
namespace {

using nlohmann::json;

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusFormatError("cannot read " + path.string(), 0);
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CorpusError("cannot write " + path.string());
  return out;
}

RawReview make_review(std::string id, long long year, long long helpfulness, std::string text, std::size_t line) {
  if (id.empty()) throw CorpusFormatError("empty id", line);
  if (helpfulness < 1 || helpfulness > 7) {
    throw CorpusFormatError("helpfulness " + std::to_string(helpfulness) + " outside 1..7", line);
  }
  return RawReview{std::move(id), static_cast<int>(year), static_cast<int>(helpfulness), std::move(text)};
}

void check_unique(const std::vector<RawReview>& reviews, const std::vector<std::size_t>& lines) {
  std::map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < reviews.size(); ++i) {
    auto [it, inserted] = seen.emplace(reviews[i].id, lines[i]);
    if (!inserted) {
      throw CorpusFormatError("duplicate id '" + reviews[i].id + "' (first seen on line " +
                                  std::to_string(it->second) + ")",
                              lines[i]);
    }
  }
}

long long parse_int(const std::string& s, const char* column, std::size_t line) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw CorpusFormatError(std::string("column '") + column + "' is not an integer: '" + s + "'", line);
  }
}

}  // namespace

static std::vector<RawReview> read_csv_reviews(std::istream& in);

std::vector<RawReview> read_raw_reviews_jsonl(std::istream& in) {
  std::vector<RawReview> reviews;
  std::vector<std::size_t> lines;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (normalize_whitespace(line).empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw CorpusFormatError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    if (!record.is_object()) throw CorpusFormatError("record is not a JSON object", line_no);
    try {
      reviews.push_back(make_review(record.at("id").get<std::string>(), record.at("year").get<long long>(),
                                    record.at("helpfulness").get<long long>(),
                                    record.at("text").get<std::string>(), line_no));
    } catch (const json::exception& e) {
      throw CorpusFormatError(std::string("bad field: ") + e.what(), line_no);
    }
    lines.push_back(line_no);
  }
  check_unique(reviews, lines);
  return reviews;
}

std::vector<RawReview> read_raw_reviews_csv(std::istream& in) {
  try {
    return read_csv_reviews(in);
  } catch (const CorpusFormatError&) {
    throw;
  } catch (const std::runtime_error& e) {
    throw CorpusFormatError(e.what(), 0);
  }
}

static std::vector<RawReview> read_csv_reviews(std::istream& in) {
  std::vector<std::string> fields;
  std::size_t line = 1;
  if (!read_csv_record(in, fields, line)) return {};
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < fields.size(); ++i) column[normalize_whitespace(fields[i])] = i;
  for (const char* name : {"id", "year", "helpfulness", "text"}) {
    if (!column.count(name)) throw CorpusFormatError(std::string("missing CSV column '") + name + "'", 1);
  }

  std::vector<RawReview> reviews;
  std::vector<std::size_t> lines;
  for (;;) {
    std::size_t start = line;
    if (!read_csv_record(in, fields, line)) break;
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != column.size()) {
      throw CorpusFormatError("expected " + std::to_string(column.size()) + " fields, found " +
                                  std::to_string(fields.size()),
                              start);
    }
    reviews.push_back(make_review(fields[column["id"]], parse_int(fields[column["year"]], "year", start),
                                  parse_int(fields[column["helpfulness"]], "helpfulness", start),
                                  fields[column["text"]], start));
    lines.push_back(start);
  }
  check_unique(reviews, lines);
  return reviews;
}

std::vector<RawReview> read_raw_reviews(const std::filesystem::path& path) {
  auto in = open_input(path);
  if (fold_case(path.extension().string()) == ".csv") return read_raw_reviews_csv(in);
  return read_raw_reviews_jsonl(in);
}

std::vector<CleanReview> read_clean_reviews(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<CleanReview> reviews;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (normalize_whitespace(line).empty()) continue;
    try {
      json record = json::parse(line);
      reviews.push_back(CleanReview::from_text(record.at("id").get<std::string>(), record.at("text").get<std::string>()));
    } catch (const json::exception& e) {
      throw CorpusFormatError(std::string("bad clean review: ") + e.what(), line_no);
    }
  }
  return reviews;
}

void write_clean_reviews_jsonl(const std::filesystem::path& path, const std::vector<CleanReview>& reviews) {
  auto out = open_output(path);
  for (const auto& r : reviews) {
    json record{{"id", r.id}, {"text", r.text}, {"word_count", r.word_count}};
    out << record.dump() << '\n';
  }
}

void write_plain_text(const std::filesystem::path& path, const std::vector<CleanReview>& reviews) {
  auto out = open_output(path);
  for (const auto& r : reviews) out << normalize_whitespace(r.text) << '\n';
}

std::vector<std::string> read_template_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<std::string> templates;
  std::string line;
  while (std::getline(in, line)) {
    std::string t = normalize_whitespace(line);
    if (t.empty() || t.front() == '#') continue;
    templates.push_back(std::move(t));
  }
  if (templates.empty()) throw CorpusError("template file " + path.string() + " lists no templates");
  return templates;
}

AbbreviationTable read_abbreviation_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw CorpusFormatError(path.string() + ": " + e.what(), 0);
  }
  if (!doc.is_object()) throw CorpusFormatError(path.string() + ": expected a JSON object", 0);
  AbbreviationTable table;
  for (auto& [key, value] : doc.items()) {
    if (!value.is_string()) throw CorpusFormatError(path.string() + ": expansion for '" + key + "' is not a string", 0);
    table.add(key, value.get<std::string>());
  }
  return table;
}

}  // namespace cowrite
