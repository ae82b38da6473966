#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mcqa/types.hpp"

namespace mcqa {

// Answer normalization in the style of the CoQA/SQuAD scorers: lowercase,
// drop ASCII punctuation, drop the articles a/an/the, collapse whitespace.
inline std::vector<std::string> normalized_tokens(std::string_view s) {
  std::string cleaned;
  cleaned.reserve(s.size());
  for (char c : s) {
    auto u = static_cast<unsigned char>(c);
    if (std::ispunct(u)) continue;
    cleaned.push_back(static_cast<char>(std::tolower(u)));
  }
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty() && cur != "a" && cur != "an" && cur != "the") tokens.push_back(cur);
    cur.clear();
  };
  for (char c : cleaned) {
    if (std::isspace(static_cast<unsigned char>(c)))
      flush();
    else
      cur.push_back(c);
  }
  flush();
  return tokens;
}

inline std::string normalize_answer(std::string_view s) {
  std::string out;
  for (const auto& t : normalized_tokens(s)) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

// yes / no / unknown when the answer is exactly that literal after
// normalization, otherwise open.
inline AnswerType literal_type(std::string_view answer) {
  const auto n = normalize_answer(answer);
  if (n == "yes") return AnswerType::yes;
  if (n == "no") return AnswerType::no;
  if (n == "unknown") return AnswerType::unknown;
  return AnswerType::open;
}

}  // namespace mcqa
