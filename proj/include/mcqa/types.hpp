#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mcqa/error.hpp"

namespace mcqa {

enum class Domain { children, literature, news, exam, wikipedia, other };

inline constexpr Domain kAllDomains[] = {Domain::children, Domain::literature, Domain::news,
                                         Domain::exam,     Domain::wikipedia,  Domain::other};

inline std::string_view to_string(Domain d) {
  switch (d) {
    case Domain::children: return "children";
    case Domain::literature: return "literature";
    case Domain::news: return "news";
    case Domain::exam: return "exam";
    case Domain::wikipedia: return "wikipedia";
    case Domain::other: return "other";
  }
  return "other";
}

inline std::optional<Domain> parse_domain(std::string_view s) {
  for (Domain d : kAllDomains)
    if (to_string(d) == s) return d;
  return std::nullopt;
}

struct SentenceSpan {
  std::size_t index = 0;
  std::size_t start_char = 0;  // byte offsets into Passage::text
  std::size_t end_char = 0;
  std::string text;

  friend bool operator==(const SentenceSpan&, const SentenceSpan&) = default;
};

struct Passage {
  std::string id;
  Domain domain = Domain::other;
  std::string text;
  std::vector<SentenceSpan> sentences;

  friend bool operator==(const Passage&, const Passage&) = default;
};

struct AnswerSpan {
  std::size_t start_char = 0;
  std::size_t end_char = 0;
  std::string text;

  friend bool operator==(const AnswerSpan&, const AnswerSpan&) = default;
};

enum class AnswerType { open, yes, no, unknown };

inline std::string_view to_string(AnswerType t) {
  switch (t) {
    case AnswerType::open: return "open";
    case AnswerType::yes: return "yes";
    case AnswerType::no: return "no";
    case AnswerType::unknown: return "unknown";
  }
  return "open";
}

inline std::optional<AnswerType> parse_answer_type(std::string_view s) {
  for (AnswerType t : {AnswerType::open, AnswerType::yes, AnswerType::no, AnswerType::unknown})
    if (to_string(t) == s) return t;
  return std::nullopt;
}

enum class PairStatus { pending, kept, unknownized, discarded };

inline std::string_view to_string(PairStatus s) {
  switch (s) {
    case PairStatus::pending: return "pending";
    case PairStatus::kept: return "kept";
    case PairStatus::unknownized: return "unknownized";
    case PairStatus::discarded: return "discarded";
  }
  return "pending";
}

inline std::optional<PairStatus> parse_status(std::string_view s) {
  for (PairStatus st :
       {PairStatus::pending, PairStatus::kept, PairStatus::unknownized, PairStatus::discarded})
    if (to_string(st) == s) return st;
  return std::nullopt;
}

enum class Outcome { keep, discard, unknown };

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::keep: return "keep";
    case Outcome::discard: return "discard";
    case Outcome::unknown: return "unknown";
  }
  return "unknown";
}

struct SentenceProb {
  std::size_t sentence_index = 0;
  double prob = 0.0;

  friend bool operator==(const SentenceProb&, const SentenceProb&) = default;
};

struct ClassifierVerdict {
  Outcome outcome = Outcome::unknown;
  double context_prob = 0.0;
  std::vector<SentenceProb> passage_probs;  // ordered by sentence index
  std::size_t context_sentence_index = 0;

  friend bool operator==(const ClassifierVerdict&, const ClassifierVerdict&) = default;
};

inline constexpr std::string_view kUnknownAnswer = "unknown";

struct QAPair {
  int turn = 1;
  std::string question;
  std::string answer;
  AnswerType answer_type = AnswerType::open;
  std::optional<AnswerSpan> source_span;
  PairStatus status = PairStatus::pending;
  std::optional<ClassifierVerdict> verdict;

  friend bool operator==(const QAPair&, const QAPair&) = default;
};

struct Conversation {
  std::string passage_id;
  Domain domain = Domain::other;
  std::vector<QAPair> pairs;      // kept and unknownized, in turn order
  std::vector<QAPair> discarded;  // audit trail only

  friend bool operator==(const Conversation&, const Conversation&) = default;
};

struct Dataset {
  std::vector<Conversation> conversations;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Throws InvariantError describing the first violated QAPair invariant.
inline void check_pair(const QAPair& p) {
  const auto where = "turn " + std::to_string(p.turn) + ": ";
  if (p.turn < 1) throw InvariantError(where + "turn must be >= 1");
  if (p.answer_type == AnswerType::yes && p.answer != "yes")
    throw InvariantError(where + "yes pair must have answer \"yes\"");
  if (p.answer_type == AnswerType::no && p.answer != "no")
    throw InvariantError(where + "no pair must have answer \"no\"");
  if (p.answer_type == AnswerType::unknown &&
      (p.answer != kUnknownAnswer || p.status != PairStatus::unknownized))
    throw InvariantError(where + "unknown pair must be unknownized with answer \"unknown\"");
  if (p.status == PairStatus::unknownized && p.answer_type != AnswerType::unknown)
    throw InvariantError(where + "unknownized pair must have type unknown");
}

inline void check_conversation(const Conversation& c) {
  int last = 0;
  for (const auto& p : c.pairs) {
    check_pair(p);
    if (p.turn <= last)
      throw InvariantError(c.passage_id + ": turn numbers must be strictly increasing");
    if (p.status != PairStatus::kept && p.status != PairStatus::unknownized)
      throw InvariantError(c.passage_id + ": only kept/unknownized pairs belong in turns");
    last = p.turn;
  }
  for (const auto& p : c.discarded) {
    if (p.status != PairStatus::discarded)
      throw InvariantError(c.passage_id + ": discarded list holds a non-discarded pair");
  }
}

// "question answer" per pair in turn order, oldest first. A positive budget
// drops the oldest pairs until the rendering fits.
inline std::string serialize_history(const std::vector<QAPair>& pairs, std::size_t budget = 0) {
  std::vector<std::string> rendered;
  rendered.reserve(pairs.size());
  for (const auto& p : pairs) rendered.push_back(p.question + " " + p.answer);
  std::size_t first = 0;
  if (budget > 0) {
    std::size_t total = 0;
    for (const auto& r : rendered) total += r.size();
    total += rendered.empty() ? 0 : rendered.size() - 1;
    while (first < rendered.size() && total > budget) {
      total -= rendered[first].size() + (first + 1 < rendered.size() ? 1 : 0);
      ++first;
    }
  }
  std::string out;
  for (std::size_t i = first; i < rendered.size(); ++i) {
    if (i > first) out += ' ';
    out += rendered[i];
  }
  return out;
}

inline std::string serialize_history(const Conversation& c, std::size_t budget = 0) {
  return serialize_history(c.pairs, budget);
}

}  // namespace mcqa
