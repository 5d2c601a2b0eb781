#pragma once

// Shared test fixtures and generators.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cowrite/corpus.hpp"

namespace cowrite::testing {

inline std::string words(std::size_t n, const std::string& stem = "w") {
  std::string out;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i > 1) out += ' ';
    out += stem + std::to_string(i);
  }
  return out;
}

inline std::vector<CleanReview> synthetic_corpus(std::size_t n) {
  std::vector<CleanReview> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(CleanReview::from_text("r" + std::to_string(i), words(1 + i % 17, "t")));
  }
  return out;
}

// Small German-flavoured review corpus for n-gram training.
inline std::vector<CleanReview> review_corpus() {
  const std::vector<std::string> texts{
      "Die Lösung ist gut strukturiert und die Argumentation ist nachvollziehbar.",
      "Die Argumentation ist an einigen Stellen zu knapp und sollte ausgebaut werden.",
      "Du solltest die Quellen genauer angeben und die Struktur verbessern.",
      "Die Struktur ist klar und die Beispiele sind gut gewählt.",
      "Insgesamt ist die Lösung gut aber die Beispiele sollten genauer erklärt werden.",
      "Die Einleitung ist gut und die Argumentation ist überzeugend.",
      "Du könntest die Beispiele verbessern und die Quellen ergänzen.",
      "Die Lösung sollte an einigen Stellen genauer sein.",
  };
  std::vector<CleanReview> out;
  for (std::size_t i = 0; i < texts.size(); ++i) out.push_back(CleanReview::from_text("c" + std::to_string(i), texts[i]));
  return out;
}

}  // namespace cowrite::testing
