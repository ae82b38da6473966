#pragma once

// Rule-based sentence segmentation over terminal punctuation with an
// abbreviation allowlist. Offsets are UTF-8 byte offsets.

#include <algorithm>
#include <array>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "mcqa/error.hpp"
#include "mcqa/types.hpp"
#include "mcqa/util.hpp"

namespace mcqa {

using SentenceSplitter = std::function<std::vector<SentenceSpan>(std::string_view)>;

namespace detail {

inline constexpr std::array<std::string_view, 30> kAbbreviations = {
    "mr",   "mrs",  "ms",  "dr",  "prof", "st",   "jr",  "sr",  "vs",   "etc",
    "e.g",  "i.e",  "inc", "ltd", "co",   "corp", "gen", "col", "lt",   "sgt",
    "capt", "rev",  "hon", "mt",  "ft",   "jan",  "feb", "aug", "sept", "approx"};

inline bool is_closer(char c) {
  return c == '"' || c == '\'' || c == ')' || c == ']' || c == '}';
}

inline bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

// Word that ends at `dot` (exclusive of the dot), lowercased, without leading
// openers.
inline std::string word_before(std::string_view text, std::size_t dot) {
  std::size_t b = dot;
  while (b > 0 && !is_space(text[b - 1])) --b;
  std::string_view w = text.substr(b, dot - b);
  while (!w.empty() && (w.front() == '(' || w.front() == '"' || w.front() == '\''))
    w.remove_prefix(1);
  return to_lower(w);
}

// "U.S", "e.g": letters separated by single dots.
inline bool is_dotted_acronym(std::string_view w) {
  if (w.find('.') == std::string_view::npos) return false;
  bool expect_letter = true;
  for (char c : w) {
    if (expect_letter) {
      if (!std::isalpha(static_cast<unsigned char>(c))) return false;
      expect_letter = false;
    } else {
      if (c != '.') return false;
      expect_letter = true;
    }
  }
  return !expect_letter;
}

inline bool next_word_lowercase(std::string_view text, std::size_t pos) {
  while (pos < text.size() && is_space(text[pos])) ++pos;
  return pos < text.size() && std::islower(static_cast<unsigned char>(text[pos]));
}

}  // namespace detail

inline std::vector<SentenceSpan> split_sentences(std::string_view text) {
  if (trim(text).empty()) throw Error("split_sentences: empty text");

  std::vector<SentenceSpan> out;
  auto emit = [&](std::size_t start, std::size_t end) {
    while (start < end && is_space(text[start])) ++start;
    while (end > start && is_space(text[end - 1])) --end;
    if (start < end)
      out.push_back({out.size(), start, end, std::string(text.substr(start, end - start))});
  };

  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (detail::is_terminal(c)) {
      std::size_t j = i;
      while (j < text.size() && detail::is_terminal(text[j])) ++j;
      while (j < text.size() && detail::is_closer(text[j])) ++j;
      bool at_boundary = j == text.size() || is_space(text[j]);
      // "Stop!" he said: a quoted terminal followed by lowercase continues
      if (at_boundary && j > i && !detail::is_terminal(text[j - 1]) && detail::next_word_lowercase(text, j))
        at_boundary = false;
      if (at_boundary && c == '.' && j == i + 1) {
        std::string w = detail::word_before(text, i);
        if (std::find(detail::kAbbreviations.begin(), detail::kAbbreviations.end(), w) !=
            detail::kAbbreviations.end())
          at_boundary = false;
        else if (w.size() > 1 && detail::is_dotted_acronym(w) &&
                 detail::next_word_lowercase(text, j))
          at_boundary = false;
      }
      if (at_boundary) {
        emit(start, j);
        start = j;
      }
      i = j;
      continue;
    }
    // Paragraph break: a whitespace run holding two or more newlines.
    if (c == '\n') {
      std::size_t j = i;
      int newlines = 0;
      while (j < text.size() && is_space(text[j])) {
        if (text[j] == '\n') ++newlines;
        ++j;
      }
      if (newlines >= 2) {
        emit(start, i);
        start = j;
      }
      i = j;
      continue;
    }
    ++i;
  }
  emit(start, text.size());
  return out;
}

// Builds a passage and checks the sentence invariants against the text.
inline Passage make_passage(std::string id, Domain domain, std::string text,
                            const SentenceSplitter& splitter = split_sentences) {
  Passage p{std::move(id), domain, std::move(text), {}};
  p.sentences = splitter(p.text);
  return p;
}

inline void check_passage(const Passage& p) {
  std::size_t covered_to = 0;
  for (std::size_t k = 0; k < p.sentences.size(); ++k) {
    const auto& s = p.sentences[k];
    if (s.index != k) throw InvariantError(p.id + ": sentence index out of order");
    if (s.start_char >= s.end_char) throw InvariantError(p.id + ": empty sentence span");
    if (s.end_char > p.text.size()) throw InvariantError(p.id + ": sentence out of bounds");
    if (s.start_char < covered_to) throw InvariantError(p.id + ": overlapping sentences");
    if (p.text.compare(s.start_char, s.end_char - s.start_char, s.text) != 0)
      throw InvariantError(p.id + ": sentence text differs from passage slice");
    for (std::size_t x = covered_to; x < s.start_char; ++x)
      if (!is_space(p.text[x])) throw InvariantError(p.id + ": uncovered non-space text");
    covered_to = s.end_char;
  }
  for (std::size_t x = covered_to; x < p.text.size(); ++x)
    if (!is_space(p.text[x])) throw InvariantError(p.id + ": uncovered non-space text");
}

// Index of the sentence whose [start, end) range holds `pos`.
inline std::optional<std::size_t> sentence_at(const Passage& p, std::size_t pos) {
  auto it = std::upper_bound(p.sentences.begin(), p.sentences.end(), pos,
                             [](std::size_t v, const SentenceSpan& s) { return v < s.end_char; });
  if (it == p.sentences.end() || pos < it->start_char) return std::nullopt;
  return it->index;
}

}  // namespace mcqa
