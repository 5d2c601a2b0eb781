#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cowrite/text.hpp"

using namespace cowrite;

TEST_CASE("words are maximal whitespace-delimited runs") {
  CHECK(count_words("") == 0);
  CHECK(count_words("   ") == 0);
  CHECK(count_words("a") == 1);
  CHECK(count_words("  a\tb\n\nc  ") == 3);
  CHECK(split_words(" x  y ") == std::vector<std::string>{"x", "y"});
  CHECK(count_words("z.B. Gute-Arbeit!") == 2);
}

TEST_CASE("normalize_whitespace collapses and trims") {
  CHECK(normalize_whitespace("  a \n\t b  ") == "a b");
  CHECK(normalize_whitespace("") == "");
}

TEST_CASE("fold_case keeps byte offsets") {
  CHECK(fold_case("ABC xyz") == "abc xyz");
  CHECK(fold_case("O\xC3\x84 \xC3\x96L \xC3\x9C") == "o\xC3\xA4 \xC3\xB6l \xC3\xBC");
  const std::string s = "Gr\xC3\x96\xC3\x9F" "E";
  CHECK(fold_case(s).size() == s.size());
}

TEST_CASE("text_hash is stable") {
  CHECK(text_hash("") == "cbf29ce484222325");
  CHECK(text_hash("a") == "af63dc4c8601ec8c");
  CHECK(text_hash("abc") != text_hash("abd"));
}
