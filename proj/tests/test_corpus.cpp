#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <regex>
#include <set>

#include "cowrite/corpus.hpp"
#include "cowrite/text.hpp"
#include "support/fixtures.hpp"

using namespace cowrite;

namespace {

// Reference URL detector, independent of the implementation's prefix scan.
bool reference_is_url(const std::string& token) {
  static const std::regex url(R"(^[^A-Za-z0-9\x80-\xff]*((https?|ftp)://|www\.).*)", std::regex::icase);
  return std::regex_match(token, url);
}

std::string reference_strip_urls(const std::string& text) {
  std::vector<std::string> kept;
  for (auto& t : split_words(text)) {
    if (!reference_is_url(t)) kept.push_back(t);
  }
  return join_words(kept);
}

bool has_tag(const std::string& s) {
  static const std::regex tag("<[^<>]*>");
  return std::regex_search(s, tag);
}

}  // namespace

TEST_SUITE("strip_markup") {
  TEST_CASE("removes tags") { CHECK(strip_markup("<p>Gute Arbeit</p>") == "Gute Arbeit"); }

  TEST_CASE("identity on clean text") { CHECK(strip_markup("Gute Arbeit") == "Gute Arbeit"); }

  TEST_CASE("URL removal matches the token-wise reference regex") {
    const std::string input = "Siehe https://example.com/a hier";
    CHECK(reference_strip_urls(input) == "Siehe hier");
    CHECK(strip_markup(input) == reference_strip_urls(input));

    for (const std::string s : {"a www.uni.de b", "(http://x.y) z", "FTP://host/file ok", "HTTPS://A.B c",
                                "keine url: wwwx.de", "mailto:x@y.de bleibt"}) {
      CHECK(strip_markup(s) == reference_strip_urls(s));
    }
  }

  TEST_CASE("drops PDF file names") {
    CHECK(strip_markup("Siehe Abgabe_final.pdf bitte") == "Siehe bitte");
    CHECK(strip_markup("Datei (Loesung.PDF), gut") == "Datei gut");
    CHECK(strip_markup("pdf bleibt") == "pdf bleibt");
  }

  TEST_CASE("nested and malformed tags") {
    CHECK(strip_markup("a<b<i>>c") == "a c");
    CHECK(strip_markup("x < y") == "x < y");
    CHECK(strip_markup("3 > 2") == "3 > 2");
    CHECK(strip_markup("<br/>Zeile<br>zwei") == "Zeile zwei");
  }

  TEST_CASE("idempotent with no tags or URLs left on fuzzed input") {
    std::mt19937 rng(1234);
    const std::vector<std::string> pieces{"<", ">", "<p>", "</div>", " ", "\n", "gut", "www.", "http://", "a.pdf",
                                          "x", "<a href='q'>", "Lösung", ".", "https://u.de/p", "\t", "<<", ">>"};
    std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
    std::uniform_int_distribution<int> len(0, 25);
    for (int i = 0; i < 500; ++i) {
      std::string s;
      for (int n = len(rng); n > 0; --n) s += pieces[pick(rng)];
      const std::string once = strip_markup(s);
      CHECK(strip_markup(once) == once);
      CHECK_FALSE(has_tag(once));
      for (const auto& t : split_words(once)) CHECK_FALSE(reference_is_url(t));
    }
  }
}

TEST_SUITE("remove_template_questions") {
  const auto& templates = default_template_questions();

  TEST_CASE("removes the first listed question from surrounding text") {
    const std::string q = "What do you see as the strengths of the fellow student's solution?";
    CHECK(templates.front() == q);
    CHECK(remove_template_questions("Intro. " + q + " The structure is clear.", templates) ==
          "Intro. The structure is clear.");
  }

  TEST_CASE("text without templates is unchanged") {
    CHECK(remove_template_questions("The structure is clear.", templates) == "The structure is clear.");
  }

  TEST_CASE("text equal to a template becomes empty") {
    for (const auto& t : templates) CHECK(remove_template_questions(t, templates) == "");
  }

  TEST_CASE("matching ignores case and whitespace layout") {
    CHECK(remove_template_questions("ok  PROVIDE concrete\nsuggestions   for improvement in this regard. fine",
                                    templates) == "ok fine");
  }

  TEST_CASE("combined question is removed as one unit") {
    CHECK(remove_template_questions(templates.back() + " Gut.", templates) == "Gut.");
  }

  TEST_CASE("removal that splices a new occurrence is repeated") {
    const std::vector<std::string> t{"a b c"};
    CHECK(remove_template_questions("a a b c b c", t) == "");
  }

  TEST_CASE("keywords are removed as whole words only") {
    const std::vector<std::string> kw{"Anna Muster"};
    CHECK(remove_template_questions("Liebe Anna Muster, gut", templates, kw) == "Liebe , gut");
    CHECK(remove_template_questions("Annas Muster bleibt", templates, {"Anna"}) == "Annas Muster bleibt");
  }
}

TEST_SUITE("expand_abbreviations") {
  const auto table = AbbreviationTable::defaults();

  TEST_CASE("default table rows") {
    CHECK(expand_abbreviations("zb hier", table) == "zum Beispiel hier");
    CHECK(expand_abbreviations("ggf anpassen", table) == "gegebenenfalls anpassen");
    CHECK(expand_abbreviations("dh gut", table) == "da her gut");
    CHECK(expand_abbreviations("o\xC3\xA4", table) == "oder \xC3\xA4hnliches");
  }

  TEST_CASE("default table has 9 keys and 7 expansions") {
    CHECK(table.size() == 9);
    std::set<std::string> expansions;
    for (const auto& [k, v] : table.entries()) expansions.insert(v);
    CHECK(expansions.size() == 7);
  }

  TEST_CASE("interior substrings are untouched") {
    CHECK(expand_abbreviations("Herzblatt", table) == "Herzblatt");
    CHECK(expand_abbreviations("Evaluation Level", table) == "Evaluation Level");
  }

  TEST_CASE("case-insensitive with optional trailing period") {
    CHECK(expand_abbreviations("ZB so", table) == "zum Beispiel so");
    CHECK(expand_abbreviations("evtl. morgen", table) == "eventuell morgen");
    CHECK(expand_abbreviations("O\xC3\x84", table) == "oder \xC3\xA4hnliches");
    CHECK(expand_abbreviations("(bspw, vlt)", table) == "(beispielsweise, vielleicht)");
  }

  TEST_CASE("dotted variants are not auto-handled") {
    CHECK(expand_abbreviations("z.B. so", table) == "z.B. so");
  }

  TEST_CASE("idempotent on the default table") {
    for (const auto& [k, v] : table.entries()) {
      const std::string once = expand_abbreviations("x " + k + " y", table);
      CHECK(expand_abbreviations(once, table) == once);
    }
  }

  TEST_CASE("rejects empty keys") { CHECK_THROWS_AS(AbbreviationTable(std::vector<std::pair<std::string, std::string>>{{"", "x"}}), CorpusError); }
}

TEST_SUITE("filter_reviews") {
  TEST_CASE("strict helpfulness and inclusive years") {
    std::vector<RawReview> in{{"a", 2018, 6, ""}, {"b", 2018, 5, ""}, {"c", 2016, 7, ""},
                              {"d", 2021, 6, ""}, {"e", 2015, 7, ""}, {"f", 2022, 7, ""}};
    auto out = filter_reviews(in, 2016, 2021, 5);
    std::vector<std::string> ids;
    for (const auto& r : out) ids.push_back(r.id);
    CHECK(ids == std::vector<std::string>{"a", "c", "d"});
  }

  TEST_CASE("empty input") { CHECK(filter_reviews({}, 2016, 2021, 5).empty()); }

  TEST_CASE("membership property over the whole grid") {
    std::vector<RawReview> in;
    for (int y = 2010; y <= 2026; ++y)
      for (int h = 1; h <= 7; ++h) in.push_back({std::to_string(y) + "-" + std::to_string(h), y, h, ""});
    auto out = filter_reviews(in, 2016, 2021, 5);
    std::set<std::string> kept;
    for (const auto& r : out) kept.insert(r.id);
    for (const auto& r : in) {
      const bool expected = r.helpfulness >= 6 && r.year >= 2016 && r.year <= 2021;
      CHECK(kept.count(r.id) == (expected ? 1u : 0u));
    }
  }

  TEST_CASE("min_year above max_year is rejected") { CHECK_THROWS_AS(filter_reviews({}, 2022, 2016, 5), CorpusError); }
}

TEST_SUITE("split_corpus") {
  TEST_CASE("floor arithmetic") {
    auto split = split_corpus(testing::synthetic_corpus(10), Ratio::parse("0.8"), 42);
    CHECK(split.train.size() == 8);
    CHECK(split.test.size() == 2);
  }

  TEST_CASE("full-size corpus of 11925 reviews") {
    // floor(0.8 * 11925) = 9540
    CHECK(Ratio::parse("0.8").floor_times(11925) == 11925 * 4 / 5);
    auto split = split_corpus(testing::synthetic_corpus(11925), Ratio::parse("0.8"), 7);
    CHECK(split.train.size() == 9540);
    CHECK(split.test.size() == 2385);
  }

  TEST_CASE("deterministic and a partition for many seeds") {
    auto corpus = testing::synthetic_corpus(57);
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      auto a = split_corpus(corpus, Ratio::parse("0.75"), seed);
      auto b = split_corpus(corpus, Ratio::parse("0.75"), seed);
      CHECK(a.train == b.train);
      CHECK(a.test == b.test);
      std::multiset<std::string> ids;
      for (const auto& r : a.train) ids.insert(r.id);
      for (const auto& r : a.test) ids.insert(r.id);
      std::multiset<std::string> expected;
      for (const auto& r : corpus) expected.insert(r.id);
      CHECK(ids == expected);
    }
  }

  TEST_CASE("different seeds shuffle differently") {
    auto corpus = testing::synthetic_corpus(50);
    CHECK_FALSE(split_corpus(corpus, Ratio::parse("0.8"), 1).train == split_corpus(corpus, Ratio::parse("0.8"), 2).train);
  }

  TEST_CASE("errors") {
    CHECK_THROWS_AS(split_corpus({}, Ratio::parse("0.8"), 1), CorpusError);
    CHECK_THROWS_AS(Ratio::parse("1.0"), CorpusError);
    CHECK_THROWS_AS(Ratio::parse("0"), CorpusError);
    CHECK_THROWS_AS(Ratio::parse("abc"), CorpusError);
    CHECK(Ratio::parse("0.80").num == 4);
    CHECK(Ratio::parse(".5").den == 2);
  }
}

TEST_SUITE("corpus_stats") {
  TEST_CASE("mean and population SD") {
    auto s = corpus_stats({CleanReview::from_text("a", testing::words(10)), CleanReview::from_text("b", testing::words(30))});
    CHECK(s.count == 2);
    CHECK(s.mean_word_count == doctest::Approx(20.0));
    CHECK(s.sd_word_count == doctest::Approx(10.0));
  }
  TEST_CASE("single review has zero SD") {
    CHECK(corpus_stats({CleanReview::from_text("a", "x y z")}).sd_word_count == 0.0);
  }
  TEST_CASE("empty input fails") { CHECK_THROWS_AS(corpus_stats({}), CorpusError); }
}
