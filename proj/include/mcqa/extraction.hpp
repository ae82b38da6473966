#pragma once

// Contextual answer extraction: encoder input assembly and span validation.

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcqa/backends.hpp"
#include "mcqa/types.hpp"

namespace mcqa {

inline constexpr std::string_view kEncoderSeparator = "[SEP]";

// "<history> [SEP] <passage>"; on the first turn the encoding starts at the
// separator.
inline std::string encode_cae_input(const Passage& passage, const Conversation& history,
                                    std::size_t history_budget = 0) {
  std::string h = serialize_history(history, history_budget);
  std::string out;
  out.reserve(h.size() + passage.text.size() + 8);
  if (!h.empty()) {
    out += h;
    out += ' ';
  }
  out += kEncoderSeparator;
  out += ' ';
  out += passage.text;
  return out;
}

struct CaeOptions {
  std::size_t history_budget = 0;
  int max_requeries = 3;
  std::uint64_t seed = 0;
};

// Queries the extractor and rejects any span whose range was already used in
// this conversation (kept pairs in `history`, plus `used`, which the pipeline
// extends with discarded attempts). A colliding backend is re-queried up to
// `max_requeries` times before giving up.
inline std::optional<AnswerSpan> run_cae(const SpanExtractorBackend& backend,
                                         const Passage& passage, const Conversation& history,
                                         std::span<const AnswerSpan> used = {},
                                         const CaeOptions& opts = {}) {
  std::vector<AnswerSpan> avoid(used.begin(), used.end());
  for (const auto& p : history.pairs)
    if (p.source_span) avoid.push_back(*p.source_span);

  const std::string encoded = encode_cae_input(passage, history, opts.history_budget);
  for (int attempt = 0; attempt <= opts.max_requeries; ++attempt) {
    ExtractionRequest req{passage, history, encoded, avoid,
                          splitmix64(opts.seed + static_cast<std::uint64_t>(attempt))};
    auto span = extract_span(backend, req);
    if (!span) return std::nullopt;
    bool dup = std::any_of(avoid.begin(), avoid.end(), [&](const AnswerSpan& a) {
      return a.start_char == span->start_char && a.end_char == span->end_char;
    });
    if (!dup) return span;
  }
  return std::nullopt;
}

}  // namespace mcqa
