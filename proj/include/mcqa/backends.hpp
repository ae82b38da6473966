#pragma once

// Model-role contracts (span extractor, sequence generator, answerability
// scorer), the checked call sites that enforce them, and deterministic mocks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mcqa/config.hpp"
#include "mcqa/error.hpp"
#include "mcqa/normalize.hpp"
#include "mcqa/types.hpp"
#include "mcqa/util.hpp"

namespace mcqa {

// ---------------------------------------------------------------------------
// Contracts

struct ExtractionRequest {
  const Passage& passage;
  const Conversation& history;
  std::string_view encoded_input;       // CAE encoding of (history, passage)
  std::span<const AnswerSpan> avoid;    // spans already used in this conversation
  std::uint64_t seed = 0;
};

class SpanExtractorBackend {
 public:
  virtual ~SpanExtractorBackend() = default;
  virtual std::optional<AnswerSpan> extract(const ExtractionRequest& req) const = 0;
  virtual std::string name() const = 0;
  virtual bool supports_concurrent_calls() const { return true; }
  virtual bool stochastic() const { return false; }
};

struct DecodeOptions {
  int beam_size = 4;
  std::uint64_t seed = 0;
};

class Seq2SeqBackend {
 public:
  virtual ~Seq2SeqBackend() = default;
  virtual std::string generate(std::string_view encoded_input, const DecodeOptions& opts) const = 0;
  virtual std::string name() const = 0;
  virtual bool supports_concurrent_calls() const { return true; }
};

struct ScoreQuery {
  std::string_view history;
  std::string_view question;
  std::string_view sentence;
  std::size_t sentence_index = 0;
};

// Returns the raw probability that `sentence` answers `question`; callers own
// the threshold.
class AnswerabilityScorer {
 public:
  virtual ~AnswerabilityScorer() = default;
  virtual double score(const ScoreQuery& q) const = 0;
  virtual std::vector<double> score_batch(std::span<const ScoreQuery> qs) const {
    std::vector<double> out;
    out.reserve(qs.size());
    for (const auto& q : qs) out.push_back(score(q));
    return out;
  }
  virtual std::string name() const = 0;
  virtual bool supports_concurrent_calls() const { return true; }
};

// ---------------------------------------------------------------------------
// Checked call sites

inline void check_span(const AnswerSpan& s, const Passage& p) {
  if (s.start_char >= s.end_char)
    throw ContractViolation("span [" + std::to_string(s.start_char) + "," +
                            std::to_string(s.end_char) + ") is empty");
  if (s.end_char > p.text.size())
    throw ContractViolation("span end " + std::to_string(s.end_char) + " beyond passage " + p.id +
                            " of length " + std::to_string(p.text.size()));
  if (p.text.compare(s.start_char, s.end_char - s.start_char, s.text) != 0)
    throw ContractViolation("span text does not match passage slice in " + p.id);
}

namespace detail {

template <class F>
auto guarded(const std::string& who, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw BackendError(who + ": " + e.what());
  }
}

}  // namespace detail

inline std::optional<AnswerSpan> extract_span(const SpanExtractorBackend& backend,
                                              const ExtractionRequest& req) {
  auto span = detail::guarded(backend.name(), [&] { return backend.extract(req); });
  if (span) check_span(*span, req.passage);
  return span;
}

inline std::string generate_text(const Seq2SeqBackend& backend, std::string_view input,
                                 const DecodeOptions& opts = {}) {
  auto out = detail::guarded(backend.name(), [&] { return backend.generate(input, opts); });
  if (trim(out).empty()) throw GenerationError(backend.name() + ": empty generator output");
  return out;
}

inline double check_probability(const std::string& who, double p) {
  if (!(p >= 0.0 && p <= 1.0))
    throw ContractViolation(who + ": score " + std::to_string(p) + " outside [0,1]");
  return p;
}

inline double score(const AnswerabilityScorer& scorer, const ScoreQuery& q) {
  return check_probability(scorer.name(),
                           detail::guarded(scorer.name(), [&] { return scorer.score(q); }));
}

inline std::vector<double> score_batch(const AnswerabilityScorer& scorer,
                                       std::span<const ScoreQuery> qs) {
  auto out = detail::guarded(scorer.name(), [&] { return scorer.score_batch(qs); });
  if (out.size() != qs.size())
    throw ContractViolation(scorer.name() + ": batch returned " + std::to_string(out.size()) +
                            " scores for " + std::to_string(qs.size()) + " queries");
  for (double p : out) check_probability(scorer.name(), p);
  return out;
}

// ---------------------------------------------------------------------------
// Mock extractors

namespace detail {

inline bool same_range(const AnswerSpan& a, const AnswerSpan& b) {
  return a.start_char == b.start_char && a.end_char == b.end_char;
}

inline bool is_avoided(const AnswerSpan& s, const ExtractionRequest& req) {
  auto hit = [&](const AnswerSpan& o) { return same_range(o, s); };
  if (std::any_of(req.avoid.begin(), req.avoid.end(), hit)) return true;
  for (const auto& p : req.history.pairs)
    if (p.source_span && hit(*p.source_span)) return true;
  return false;
}

}  // namespace detail

// Returns the configured character ranges in order, skipping used ones.
class ScriptedExtractor final : public SpanExtractorBackend {
 public:
  explicit ScriptedExtractor(std::vector<std::pair<std::size_t, std::size_t>> ranges,
                             bool honor_avoid = true)
      : ranges_(std::move(ranges)), honor_avoid_(honor_avoid) {}

  std::optional<AnswerSpan> extract(const ExtractionRequest& req) const override {
    for (auto [b, e] : ranges_) {
      AnswerSpan s{b, e, {}};
      if (b < e && e <= req.passage.text.size()) s.text = req.passage.text.substr(b, e - b);
      if (!honor_avoid_ || !detail::is_avoided(s, req)) return s;
    }
    return std::nullopt;
  }
  std::string name() const override { return "scripted"; }

 private:
  std::vector<std::pair<std::size_t, std::size_t>> ranges_;
  bool honor_avoid_;
};

// Runs of capitalized words, in passage order, with leading function words
// stripped; each run is offered once per conversation.
class CapitalizedRunExtractor final : public SpanExtractorBackend {
 public:
  static std::vector<AnswerSpan> candidates(std::string_view text) {
    std::vector<AnswerSpan> out;
    const auto words = whitespace_words(text);
    std::size_t k = 0;
    while (k < words.size()) {
      if (!is_capitalized(text, words[k])) {
        ++k;
        continue;
      }
      std::size_t first = k;
      std::size_t last = k;
      while (!ends_run(text, words[last]) && last + 1 < words.size() &&
             is_capitalized(text, words[last + 1]))
        ++last;
      k = last + 1;
      while (first <= last && is_function_word(text, words[first]) && !ends_run(text, words[first]))
        ++first;
      if (first > last || is_function_word(text, words[first])) continue;
      std::size_t b = words[first].start;
      std::size_t e = words[last].end;
      while (b < e && is_opener(text[b])) ++b;
      while (e > b && is_trailer(text[e - 1])) --e;
      if (b < e) out.push_back({b, e, std::string(text.substr(b, e - b))});
    }
    return out;
  }

  std::optional<AnswerSpan> extract(const ExtractionRequest& req) const override {
    for (auto& s : candidates(req.passage.text))
      if (!detail::is_avoided(s, req)) return s;
    return std::nullopt;
  }
  std::string name() const override { return "capitalized-runs"; }

 private:
  static bool is_opener(char c) { return c == '"' || c == '\'' || c == '(' || c == '['; }
  static bool is_trailer(char c) {
    return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' || c == '"' ||
           c == '\'' || c == ')' || c == ']';
  }
  static bool is_capitalized(std::string_view text, WordSlice w) {
    for (std::size_t i = w.start; i < w.end; ++i) {
      auto c = static_cast<unsigned char>(text[i]);
      if (std::isalpha(c)) return std::isupper(c) != 0;
      if (!is_opener(text[i])) return false;
    }
    return false;
  }
  static bool ends_run(std::string_view text, WordSlice w) {
    std::size_t e = w.end;
    while (e > w.start && (text[e - 1] == '"' || text[e - 1] == '\'' || text[e - 1] == ')')) --e;
    if (e == w.start) return true;
    char c = text[e - 1];
    return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?';
  }
  static bool is_function_word(std::string_view text, WordSlice w) {
    static constexpr std::string_view kWords[] = {
        "the", "a",    "an",    "he",   "she",  "it",  "they", "we",    "i",    "his",
        "her", "its",  "their", "this", "that", "in",  "on",   "at",    "but",  "and",
        "when", "then", "there", "after", "before", "as", "if",  "so",    "for",  "of",
        "to",  "by",   "with",  "from", "one",  "our", "my",   "you",   "your", "these"};
    std::string_view raw = text.substr(w.start, w.end - w.start);
    while (!raw.empty() && is_opener(raw.front())) raw.remove_prefix(1);
    while (!raw.empty() && is_trailer(raw.back())) raw.remove_suffix(1);
    auto lw = to_lower(raw);
    return std::find(std::begin(kWords), std::end(kWords), lw) != std::end(kWords);
  }
};

// ---------------------------------------------------------------------------
// Mock generator

inline constexpr std::string_view kOutputSeparator = "<sep>";

// Echoes the highlighted span through question templates. `{span}` in a
// template is replaced by the span text.
class TemplateSeq2Seq final : public Seq2SeqBackend {
 public:
  TemplateSeq2Seq(std::string open_template = "what about {span}?",
                  std::string closed_template = "is it true that {span}?",
                  bool flip_closed_label = false)
      : open_(std::move(open_template)),
        closed_(std::move(closed_template)),
        flip_(flip_closed_label) {}

  std::string generate(std::string_view in, const DecodeOptions&) const override {
    const std::string span = highlighted(in);
    if (auto pos = in.rfind("[CLOSED]"); pos != std::string_view::npos) {
      std::string label(trim(in.substr(pos + 8)));
      if (flip_) label = label == "yes" ? "no" : "yes";
      return fill(closed_, span) + " " + std::string(kOutputSeparator) + " " + label;
    }
    if (in.rfind("[OPEN]") != std::string_view::npos)
      return fill(open_, span) + " " + std::string(kOutputSeparator) + " " + span;
    throw BackendError("template mock: no flow tag in input");
  }
  std::string name() const override { return "template"; }

 private:
  static std::string highlighted(std::string_view in) {
    auto b = in.find("<hl> ");
    if (b == std::string_view::npos) return {};
    b += 5;
    auto e = in.find(" <hl>", b);
    if (e == std::string_view::npos) return {};
    return std::string(in.substr(b, e - b));
  }
  static std::string fill(const std::string& tmpl, const std::string& span) {
    std::string out = tmpl;
    for (auto pos = out.find("{span}"); pos != std::string::npos; pos = out.find("{span}", pos)) {
      out.replace(pos, 6, span);
      pos += span.size();
    }
    return out;
  }

  std::string open_;
  std::string closed_;
  bool flip_;
};

// ---------------------------------------------------------------------------
// Mock scorers

// (question, sentence index) -> probability, with a default for misses.
class MockScorer final : public AnswerabilityScorer {
 public:
  explicit MockScorer(double default_prob = 0.0) : default_(validated(default_prob)) {}

  MockScorer& set(std::string question, std::size_t sentence_index, double prob) {
    table_[{std::move(question), sentence_index}] = validated(prob);
    return *this;
  }

  double score(const ScoreQuery& q) const override {
    auto it = table_.find(std::make_pair(std::string(q.question), q.sentence_index));
    return it == table_.end() ? default_ : it->second;
  }
  std::string name() const override { return "table"; }

 private:
  static double validated(double p) {
    if (!(p >= 0.0 && p <= 1.0))
      throw ConfigError("mock scorer probability " + std::to_string(p) + " outside [0,1]");
    return p;
  }

  std::map<std::pair<std::string, std::size_t>, double> table_;
  double default_;
};

class ConstantScorer final : public AnswerabilityScorer {
 public:
  explicit ConstantScorer(double p) : p_(p) {}
  double score(const ScoreQuery&) const override { return p_; }
  std::string name() const override { return "const"; }

 private:
  double p_;
};

// Pseudo-random but pure: hashes (question, sentence, salt) into [0,1).
class HashScorer final : public AnswerabilityScorer {
 public:
  explicit HashScorer(std::uint64_t salt = 0) : salt_(salt) {}
  double score(const ScoreQuery& q) const override {
    std::uint64_t h = fnv1a64(q.question);
    h = splitmix64(h ^ fnv1a64(q.sentence) ^ salt_);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
  }
  std::string name() const override { return "hash"; }

 private:
  std::uint64_t salt_;
};

// Share of the question's content words that appear in the sentence.
class OverlapScorer final : public AnswerabilityScorer {
 public:
  double score(const ScoreQuery& q) const override {
    auto qt = content(normalized_tokens(q.question));
    if (qt.empty()) return 0.0;
    auto st = normalized_tokens(q.sentence);
    std::size_t hits = 0;
    for (const auto& t : qt)
      if (std::find(st.begin(), st.end(), t) != st.end()) ++hits;
    return static_cast<double>(hits) / static_cast<double>(qt.size());
  }
  std::string name() const override { return "overlap"; }

 private:
  static std::vector<std::string> content(std::vector<std::string> toks) {
    static constexpr std::string_view kStop[] = {"what", "who",  "when", "where", "why", "how",
                                                 "is",   "was",  "did",  "does",  "do",  "it",
                                                 "true", "that", "about", "of",   "to",  "in"};
    std::erase_if(toks, [](const std::string& t) {
      return std::find(std::begin(kStop), std::end(kStop), t) != std::end(kStop);
    });
    return toks;
  }
};

// Wraps any callable; handy for tests and for batch-vs-single comparisons.
class FunctionScorer final : public AnswerabilityScorer {
 public:
  explicit FunctionScorer(std::function<double(const ScoreQuery&)> f, std::string name = "function")
      : f_(std::move(f)), name_(std::move(name)) {}
  double score(const ScoreQuery& q) const override { return f_(q); }
  std::string name() const override { return name_; }

 private:
  std::function<double(const ScoreQuery&)> f_;
  std::string name_;
};

// ---------------------------------------------------------------------------
// Adapter configuration (training settings recorded for real-model adapters)

struct AdapterConfig {
  std::string role;              // CAE, CQG-AR, AC, CQA
  std::string stage;             // empty, or pre-training / fine-tuning
  std::string pretrained_model;
  std::optional<int> epochs;     // unset where the reference setup gives none
  int batch_size = 0;
  double learning_rate = 0.0;
  double warmup = 0.0;

  friend bool operator==(const AdapterConfig&, const AdapterConfig&) = default;
};

inline std::vector<AdapterConfig> reference_adapter_configs() {
  return {
      {"CAE", "", "bert-large-cased", 2, 16, 3e-5, 0.1},
      {"CQG-AR", "", "t5-large", 3, 4, 3e-5, 0.1},
      {"AC", "pre-training", "albert-large", 10, 16, 8e-6, 0.05},
      {"AC", "fine-tuning", "albert-large", 2, 4, 1e-6, 0.0},
      {"CQA", "", "t5-large", std::nullopt, 16, 3e-5, 0.1},
  };
}

inline AdapterConfig parse_adapter_config(std::string_view content) {
  auto kv = parse_key_values(content, "adapter config");
  AdapterConfig c;
  auto get = [&](std::string_view k) -> const std::string* {
    auto it = kv.find(k);
    return it == kv.end() ? nullptr : &it->second;
  };
  for (const auto& [k, v] : kv) {
    if (k != "role" && k != "stage" && k != "pretrained_model" && k != "epochs" &&
        k != "batch_size" && k != "learning_rate" && k != "warmup")
      throw ConfigError("adapter config: unknown key '" + k + "'");
  }
  if (auto v = get("role")) c.role = *v;
  else throw ConfigError("adapter config: 'role' is required");
  if (auto v = get("pretrained_model")) c.pretrained_model = *v;
  else throw ConfigError("adapter config: 'pretrained_model' is required");
  if (auto v = get("stage")) c.stage = *v;
  if (auto v = get("epochs"); v && *v != "-") c.epochs = parse_number<int>("epochs", *v);
  if (auto v = get("batch_size")) c.batch_size = parse_number<int>("batch_size", *v);
  if (auto v = get("learning_rate")) c.learning_rate = parse_number<double>("learning_rate", *v);
  if (auto v = get("warmup")) c.warmup = parse_number<double>("warmup", *v);
  return c;
}

}  // namespace mcqa
