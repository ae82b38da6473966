#pragma once

// Autoregressive synthesis: per turn, extract a span, draw an answer type,
// generate the pair, run answerability classification, and thread kept and
// unknownized pairs into the history of the next turn.

#include <algorithm>
#include <atomic>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "mcqa/answerability.hpp"
#include "mcqa/backends.hpp"
#include "mcqa/config.hpp"
#include "mcqa/extraction.hpp"
#include "mcqa/generation.hpp"
#include "mcqa/types.hpp"
#include "mcqa/util.hpp"

namespace mcqa {

struct GenerationConfig {
  TypeRatio ratio{8, 1, 1};
  double tau = 0.5;
  std::size_t max_words_after = 32;
  std::optional<std::size_t> words_before;  // unset: entire front of the span
  int beam_size = 4;
  int max_kept_turns = 10;
  int max_attempts_per_conversation = 15;
  std::uint64_t seed = 42;
  double gamma = 2.0;  // classifier training only
  std::size_t history_length_budget = 0;  // bytes; 0 = unbounded
  AcLevel ac_level = AcLevel::full;
  int max_cae_requeries = 3;
  unsigned workers = 0;  // 0 = hardware concurrency

  void validate() const {
    ratio.validate();
    if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0,1]");
    if (beam_size < 1) throw ConfigError("beam_size must be >= 1");
    if (max_kept_turns < 1) throw ConfigError("max_kept_turns must be >= 1");
    if (max_attempts_per_conversation < max_kept_turns)
      throw ConfigError("max_attempts_per_conversation must be >= max_kept_turns");
    if (!(gamma >= 0.0)) throw ConfigError("gamma must be non-negative");
    if (max_cae_requeries < 0) throw ConfigError("max_cae_requeries must be >= 0");
  }

  // Applies recognised keys on top of the current values.
  void apply(const KeyValues& kv) {
    for (const auto& [k, v] : kv) {
      if (k == "ratio") ratio = TypeRatio::parse(v);
      else if (k == "tau") tau = parse_number<double>(k, v);
      else if (k == "max_words_after") max_words_after = parse_number<std::size_t>(k, v);
      else if (k == "words_before") {
        if (v == "all" || v.empty()) words_before.reset();
        else words_before = parse_number<std::size_t>(k, v);
      }
      else if (k == "beam_size") beam_size = parse_number<int>(k, v);
      else if (k == "max_kept_turns") max_kept_turns = parse_number<int>(k, v);
      else if (k == "max_attempts_per_conversation") max_attempts_per_conversation = parse_number<int>(k, v);
      else if (k == "seed") seed = parse_number<std::uint64_t>(k, v);
      else if (k == "gamma") gamma = parse_number<double>(k, v);
      else if (k == "history_length_budget") history_length_budget = parse_number<std::size_t>(k, v);
      else if (k == "ac_level") ac_level = parse_ac_level(v);
      else if (k == "max_cae_requeries") max_cae_requeries = parse_number<int>(k, v);
      else if (k == "workers") workers = parse_number<unsigned>(k, v);
      else throw ConfigError("unknown config key '" + k + "'");
    }
  }

  KeyValues to_key_values() const {
    auto num = [](auto x) {
      std::ostringstream ss;
      ss << x;
      return ss.str();
    };
    return {{"ratio", ratio.str()},
            {"tau", num(tau)},
            {"max_words_after", num(max_words_after)},
            {"words_before", words_before ? num(*words_before) : "all"},
            {"beam_size", num(beam_size)},
            {"max_kept_turns", num(max_kept_turns)},
            {"max_attempts_per_conversation", num(max_attempts_per_conversation)},
            {"seed", num(seed)},
            {"gamma", num(gamma)},
            {"history_length_budget", num(history_length_budget)},
            {"ac_level", std::string(to_string(ac_level))},
            {"max_cae_requeries", num(max_cae_requeries)},
            {"workers", num(workers)}};
  }
};

struct Backends {
  const SpanExtractorBackend* extractor = nullptr;
  const Seq2SeqBackend* generator = nullptr;
  const AnswerabilityScorer* scorer = nullptr;

  void validate(AcLevel level) const {
    if (!extractor || !generator) throw ConfigError("extractor and generator backends are required");
    if (level != AcLevel::none && !scorer) throw ConfigError("answerability scorer is required");
  }
  bool concurrent() const {
    return extractor->supports_concurrent_calls() && generator->supports_concurrent_calls() &&
           (!scorer || scorer->supports_concurrent_calls());
  }
};

struct ConversationResult {
  Conversation conversation;
  int attempts = 0;
  int rejected = 0;  // generator outputs that could not be parsed into a pair
  std::optional<std::string> error;
};

inline ConversationResult synthesize_conversation(const Passage& passage, const Backends& backends,
                                                  const GenerationConfig& config, Rng& rng) {
  config.validate();
  backends.validate(config.ac_level);

  ConversationResult r;
  r.conversation.passage_id = passage.id;
  r.conversation.domain = passage.domain;
  auto& conv = r.conversation;
  std::vector<AnswerSpan> used;

  GenerationOptions gen;
  gen.max_words_after = config.max_words_after;
  gen.words_before = config.words_before;
  gen.history_budget = config.history_length_budget;
  gen.decode.beam_size = config.beam_size;

  ClassifyOptions cls{config.tau, config.ac_level, config.max_words_after};

  try {
    while (static_cast<int>(conv.pairs.size()) < config.max_kept_turns &&
           r.attempts < config.max_attempts_per_conversation) {
      ++r.attempts;
      const std::uint64_t turn_seed = rng();
      auto span = run_cae(*backends.extractor, passage, conv, used,
                          {config.history_length_budget, config.max_cae_requeries, turn_seed});
      if (!span) break;
      used.push_back(*span);

      const AnswerType type = select_answer_type(rng, config.ratio);
      const int turn = static_cast<int>(conv.pairs.size()) + 1;
      gen.decode.seed = splitmix64(turn_seed);
      QAPair candidate;
      try {
        candidate = generate_qa(*backends.generator, passage, *span, conv, type, gen, turn);
      } catch (const GenerationError&) {
        ++r.rejected;
        continue;
      }

      if (config.ac_level == AcLevel::none) {
        candidate.status = PairStatus::kept;
      } else {
        const auto history = serialize_history(conv, config.history_length_budget);
        candidate = apply_verdict(std::move(candidate),
                                  classify(*backends.scorer, candidate, passage, history, cls));
      }
      if (candidate.status == PairStatus::discarded)
        conv.discarded.push_back(std::move(candidate));
      else
        conv.pairs.push_back(std::move(candidate));
    }
  } catch (const Error& e) {
    r.error = e.what();
  }
  return r;
}

struct PassageError {
  std::string passage_id;
  std::string message;
};

struct SynthesisResult {
  Dataset dataset;
  std::vector<PassageError> errors;
  std::size_t attempts = 0;
  std::size_t rejected = 0;
};

// One conversation per passage, each on its own RNG stream keyed by
// (seed, passage id), so output does not depend on order or scheduling.
// Conversations are returned sorted by passage id; empty ones are dropped.
inline SynthesisResult synthesize_dataset(const std::vector<Passage>& passages,
                                          const Backends& backends, const GenerationConfig& config) {
  config.validate();
  backends.validate(config.ac_level);
  if (passages.empty()) throw ConfigError("no passages to synthesize from");
  {
    std::set<std::string_view> ids;
    for (const auto& p : passages)
      if (!ids.insert(p.id).second) throw ConfigError("duplicate passage id '" + p.id + "'");
  }

  std::vector<ConversationResult> results(passages.size());
  auto run_one = [&](std::size_t i) {
    Rng rng = stream_for(config.seed, passages[i].id);
    results[i] = synthesize_conversation(passages[i], backends, config, rng);
  };

  unsigned workers = config.workers ? config.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(passages.size()));
  if (workers <= 1 || !backends.concurrent()) {
    for (std::size_t i = 0; i < passages.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < passages.size();) run_one(i);
      });
  }

  SynthesisResult out;
  for (std::size_t i = 0; i < passages.size(); ++i) {
    auto& r = results[i];
    out.attempts += static_cast<std::size_t>(r.attempts);
    out.rejected += static_cast<std::size_t>(r.rejected);
    if (r.error) out.errors.push_back({passages[i].id, *r.error});
    if (!r.conversation.pairs.empty()) out.dataset.conversations.push_back(std::move(r.conversation));
  }
  std::sort(out.dataset.conversations.begin(), out.dataset.conversations.end(),
            [](const Conversation& a, const Conversation& b) { return a.passage_id < b.passage_id; });
  std::sort(out.errors.begin(), out.errors.end(),
            [](const PassageError& a, const PassageError& b) { return a.passage_id < b.passage_id; });
  return out;
}

}  // namespace mcqa
