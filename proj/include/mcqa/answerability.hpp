#pragma once

// Hierarchical answerability classification.
//
// A candidate pair is first scored against its own context sentence c. Above
// the threshold it is kept as is. Otherwise every other sentence of the
// passage is scored: if one of them clears the threshold the question belongs
// to a different part of the passage and the pair is discarded; if none does,
// the question is unanswerable and its answer becomes "unknown". All
// comparisons are strict (a score equal to the threshold fails).

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mcqa/backends.hpp"
#include "mcqa/generation.hpp"
#include "mcqa/sentences.hpp"
#include "mcqa/types.hpp"

namespace mcqa {

// How much of the classifier runs: none (no filtering), context level only
// (fail => unknown, never discard), or the full two-level check.
enum class AcLevel { none, context, full };

inline std::string_view to_string(AcLevel l) {
  switch (l) {
    case AcLevel::none: return "none";
    case AcLevel::context: return "context";
    case AcLevel::full: return "full";
  }
  return "full";
}

// "passage" names the passage-level arm, which always runs on top of the
// context level, so it is the full check.
inline AcLevel parse_ac_level(std::string_view s) {
  if (s == "none") return AcLevel::none;
  if (s == "context") return AcLevel::context;
  if (s == "passage" || s == "full") return AcLevel::full;
  throw ConfigError("unknown AC level '" + std::string(s) + "' (none|context|passage|full)");
}

// Sentence holding the synthetic answer. Closed pairs anchor on the extracted
// span. Open pairs anchor on the revised answer when it occurs verbatim inside
// the answer context window (nearest occurrence to the span), else on the span.
inline const SentenceSpan& find_context_sentence(const Passage& passage, const QAPair& pair,
                                                 std::size_t max_words_after = 32) {
  if (!pair.source_span) throw InvariantError("pair has no source span");
  const auto& span = *pair.source_span;
  std::size_t anchor = span.start_char;

  if (pair.answer_type == AnswerType::open && !pair.answer.empty() &&
      span.end_char <= passage.text.size()) {
    const auto ctx = build_answer_context(passage, span, max_words_after);
    const std::string_view window = std::string_view(passage.text).substr(0, ctx.text.size());
    std::optional<std::size_t> best;
    for (auto pos = window.find(pair.answer); pos != std::string_view::npos;
         pos = window.find(pair.answer, pos + 1)) {
      auto dist = [&](std::size_t x) { return x > span.start_char ? x - span.start_char : span.start_char - x; };
      if (!best || dist(pos) < dist(*best)) best = pos;
    }
    if (best) {
      // skip leading whitespace inside the answer
      std::size_t a = *best;
      while (a < passage.text.size() && is_space(passage.text[a])) ++a;
      anchor = a;
    }
  }
  auto idx = sentence_at(passage, anchor);
  if (!idx)
    throw InvariantError("answer anchor " + std::to_string(anchor) + " lies outside every sentence of " +
                         passage.id);
  return passage.sentences[*idx];
}

struct ClassifyOptions {
  double tau = 0.5;
  AcLevel level = AcLevel::full;
  std::size_t max_words_after = 32;
};

inline ClassifierVerdict classify(const AnswerabilityScorer& scorer, const QAPair& pair,
                                  const Passage& passage, std::string_view history_text,
                                  const ClassifyOptions& opts = {}) {
  if (!(opts.tau >= 0.0 && opts.tau <= 1.0))
    throw ConfigError("threshold must lie in [0,1], got " + std::to_string(opts.tau));
  if (passage.sentences.empty()) throw InvariantError(passage.id + " has no sentences");
  if (opts.level == AcLevel::none) throw ConfigError("classify called with AC level none");

  const auto& c = find_context_sentence(passage, pair, opts.max_words_after);
  ClassifierVerdict v;
  v.context_sentence_index = c.index;
  v.context_prob = score(scorer, {history_text, pair.question, c.text, c.index});
  if (v.context_prob > opts.tau) {
    v.outcome = Outcome::keep;
    return v;
  }
  if (opts.level == AcLevel::context) {
    v.outcome = Outcome::unknown;
    return v;
  }

  std::vector<ScoreQuery> queries;
  queries.reserve(passage.sentences.size());
  for (const auto& s : passage.sentences)
    if (s.index != c.index) queries.push_back({history_text, pair.question, s.text, s.index});
  const auto probs = score_batch(scorer, queries);
  double max_prob = 0.0;  // max over an empty set
  for (std::size_t k = 0; k < queries.size(); ++k) {
    v.passage_probs.push_back({queries[k].sentence_index, probs[k]});
    max_prob = std::max(max_prob, probs[k]);
  }
  v.outcome = max_prob > opts.tau ? Outcome::discard : Outcome::unknown;
  return v;
}

inline ClassifierVerdict classify(const AnswerabilityScorer& scorer, const QAPair& pair,
                                  const Passage& passage, std::string_view history_text,
                                  double tau) {
  return classify(scorer, pair, passage, history_text, ClassifyOptions{tau});
}

inline QAPair apply_verdict(QAPair pair, const ClassifierVerdict& verdict) {
  switch (verdict.outcome) {
    case Outcome::keep:
      pair.status = PairStatus::kept;
      break;
    case Outcome::unknown:
      pair.status = PairStatus::unknownized;
      pair.answer = std::string(kUnknownAnswer);
      pair.answer_type = AnswerType::unknown;
      break;
    case Outcome::discard:
      pair.status = PairStatus::discarded;
      break;
  }
  pair.verdict = verdict;
  return pair;
}

// Throws InvariantError if the verdict breaks the outcome/probability rules of
// the full two-level check.
inline void check_verdict(const ClassifierVerdict& v, double tau, std::size_t num_sentences) {
  double max_prob = 0.0;
  for (const auto& sp : v.passage_probs) max_prob = std::max(max_prob, sp.prob);
  switch (v.outcome) {
    case Outcome::keep:
      if (!(v.context_prob > tau) || !v.passage_probs.empty())
        throw InvariantError("keep verdict with failing context score or passage scores");
      break;
    case Outcome::discard:
      if (v.context_prob > tau || !(max_prob > tau))
        throw InvariantError("discard verdict without a passing other sentence");
      break;
    case Outcome::unknown:
      if (v.context_prob > tau || max_prob > tau)
        throw InvariantError("unknown verdict with a passing score");
      if (v.passage_probs.size() + 1 != num_sentences)
        throw InvariantError("unknown verdict did not score every other sentence");
      break;
  }
}

}  // namespace mcqa
