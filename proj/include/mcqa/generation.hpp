#pragma once

// Open-ended and closed-ended generation flows: answer-type draw, answer
// context construction, encoder inputs, and output parsing.

#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "mcqa/backends.hpp"
#include "mcqa/extraction.hpp"
#include "mcqa/types.hpp"
#include "mcqa/util.hpp"

namespace mcqa {

enum class Flow { open, closed };

struct TypeRatio {
  double open = 8.0;
  double yes = 1.0;
  double no = 1.0;

  void validate() const {
    if (!(open >= 0 && yes >= 0 && no >= 0))
      throw ConfigError("type ratio weights must be non-negative");
    if (open + yes + no <= 0) throw ConfigError("type ratio weights are all zero");
  }

  // "8:1:1", or "open-only" for 1:0:0
  static TypeRatio parse(std::string_view s) {
    if (s == "open-only") return {1, 0, 0};
    TypeRatio r;
    auto c1 = s.find(':');
    auto c2 = c1 == std::string_view::npos ? c1 : s.find(':', c1 + 1);
    if (c2 == std::string_view::npos || s.find(':', c2 + 1) != std::string_view::npos)
      throw ConfigError("ratio must look like open:yes:no, got '" + std::string(s) + "'");
    r.open = parse_number<double>("ratio", s.substr(0, c1));
    r.yes = parse_number<double>("ratio", s.substr(c1 + 1, c2 - c1 - 1));
    r.no = parse_number<double>("ratio", s.substr(c2 + 1));
    r.validate();
    return r;
  }

  std::string str() const {
    auto fmt = [](double v) {
      std::string s = std::to_string(v);
      s.erase(s.find_last_not_of('0') + 1);
      if (s.back() == '.') s.pop_back();
      return s;
    };
    return fmt(open) + ":" + fmt(yes) + ":" + fmt(no);
  }

  friend bool operator==(const TypeRatio&, const TypeRatio&) = default;
};

// Cumulative bands [0, open), [open, open+yes), [open+yes, 1) over the
// normalized weights.
inline AnswerType answer_type_for(double u, const TypeRatio& ratio) {
  ratio.validate();
  const double total = ratio.open + ratio.yes + ratio.no;
  if (u < ratio.open / total) return AnswerType::open;
  if (u < (ratio.open + ratio.yes) / total) return AnswerType::yes;
  if (ratio.no == 0) return ratio.yes > 0 ? AnswerType::yes : AnswerType::open;
  return AnswerType::no;
}

inline AnswerType select_answer_type(Rng& rng, const TypeRatio& ratio) {
  ratio.validate();
  return answer_type_for(uniform01(rng), ratio);
}

struct AnswerContext {
  std::string text;
  std::size_t span_offset_in_context = 0;

  friend bool operator==(const AnswerContext&, const AnswerContext&) = default;
};

// Passage text from the start (or, with `words_before`, from that many words
// before the span) through the span end plus up to `max_words_after` words.
inline AnswerContext build_answer_context(const Passage& passage, const AnswerSpan& span,
                                          std::size_t max_words_after = 32,
                                          std::optional<std::size_t> words_before = std::nullopt) {
  check_span(span, passage);
  const std::string_view text = passage.text;
  std::size_t begin = 0;
  if (words_before) {
    auto words = whitespace_words(text.substr(0, span.start_char));
    // a word running into the span start is part of the span's own word
    if (!words.empty() && words.back().end == span.start_char) words.pop_back();
    if (words.size() > *words_before) begin = words[words.size() - *words_before].start;
    if (*words_before == 0) begin = span.start_char;
  }
  std::size_t end = span.end_char;
  std::size_t taken = 0;
  // finish a word the span ends inside of; it does not count toward the budget
  if (max_words_after > 0)
    while (end < text.size() && !is_space(text[end])) ++end;
  std::size_t i = end;
  while (taken < max_words_after) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i == text.size()) break;
    while (i < text.size() && !is_space(text[i])) ++i;
    end = i;
    ++taken;
  }
  return {std::string(text.substr(begin, end - begin)), span.start_char - begin};
}

inline constexpr std::string_view kHighlight = "<hl>";

namespace detail {

inline std::string highlighted_context(const AnswerContext& ctx, const AnswerSpan& span) {
  if (ctx.span_offset_in_context + span.text.size() > ctx.text.size() ||
      ctx.text.compare(ctx.span_offset_in_context, span.text.size(), span.text) != 0)
    throw GenerationError("span '" + span.text + "' not found at its offset in answer context");
  std::string out;
  out.reserve(ctx.text.size() + 12);
  out.append(ctx.text, 0, ctx.span_offset_in_context);
  out += kHighlight;
  out += ' ';
  out += span.text;
  out += ' ';
  out += kHighlight;
  out.append(ctx.text, ctx.span_offset_in_context + span.text.size());
  return out;
}

inline std::string with_history(std::string_view history, std::string body) {
  if (history.empty()) return body;
  std::string out(history);
  out += ' ';
  out += kEncoderSeparator;
  out += ' ';
  out += body;
  return out;
}

}  // namespace detail

// "<history> [SEP] <context with <hl> span <hl>> [SEP] [OPEN]"
inline std::string encode_open_input(const AnswerContext& ctx, std::string_view history,
                                     const AnswerSpan& span) {
  std::string body = detail::highlighted_context(ctx, span);
  body += ' ';
  body += kEncoderSeparator;
  body += " [OPEN]";
  return detail::with_history(history, std::move(body));
}

inline std::string encode_open_input(const AnswerContext& ctx, const Conversation& history,
                                     const AnswerSpan& span) {
  return encode_open_input(ctx, serialize_history(history), span);
}

// "<history> [SEP] <context with <hl> span <hl>> [SEP] [CLOSED] yes|no"
inline std::string encode_closed_input(const AnswerContext& ctx, std::string_view history,
                                       const AnswerSpan& span, AnswerType label) {
  if (label != AnswerType::yes && label != AnswerType::no)
    throw GenerationError("closed flow label must be yes or no");
  if (ctx.text.empty()) throw GenerationError("empty answer context");
  std::string body = detail::highlighted_context(ctx, span);
  body += ' ';
  body += kEncoderSeparator;
  body += " [CLOSED] ";
  body += to_string(label);
  return detail::with_history(history, std::move(body));
}

inline std::string encode_closed_input(const AnswerContext& ctx, const Conversation& history,
                                       const AnswerSpan& span, AnswerType label) {
  return encode_closed_input(ctx, serialize_history(history), span, label);
}

// Open flow splits on the separator and keeps the revised answer; closed flow
// keeps the question and forces the answer to the input label.
inline std::pair<std::string, std::string> parse_generation_output(
    std::string_view raw, Flow flow, std::optional<AnswerType> label = std::nullopt) {
  if (trim(raw).empty()) throw GenerationError("empty generator output");
  const auto sep = raw.find(kOutputSeparator);
  if (flow == Flow::open) {
    if (sep == std::string_view::npos)
      throw GenerationError("open-flow output has no separator: '" + std::string(raw) + "'");
    std::string q(trim(raw.substr(0, sep)));
    std::string a(trim(raw.substr(sep + kOutputSeparator.size())));
    if (q.empty()) throw GenerationError("open-flow output has an empty question");
    if (a.empty()) throw GenerationError("open-flow output has an empty revised answer");
    return {std::move(q), std::move(a)};
  }
  if (!label || (*label != AnswerType::yes && *label != AnswerType::no))
    throw GenerationError("closed flow needs a yes/no label");
  std::string q(trim(sep == std::string_view::npos ? raw : raw.substr(0, sep)));
  if (q.empty()) throw GenerationError("closed-flow output has an empty question");
  return {std::move(q), std::string(to_string(*label))};
}

struct GenerationOptions {
  std::size_t max_words_after = 32;
  std::optional<std::size_t> words_before;  // unset: whole front of the passage
  std::size_t history_budget = 0;
  DecodeOptions decode;
};

// One candidate pair (status pending) for an extracted span and drawn type.
inline QAPair generate_qa(const Seq2SeqBackend& seq2seq, const Passage& passage,
                          const AnswerSpan& span, const Conversation& history, AnswerType type,
                          const GenerationOptions& opts = {}, int turn = 1) {
  const auto ctx = build_answer_context(passage, span, opts.max_words_after, opts.words_before);
  const auto h = serialize_history(history, opts.history_budget);
  QAPair pair;
  pair.turn = turn;
  pair.source_span = span;
  pair.answer_type = type;
  if (type == AnswerType::open) {
    auto raw = generate_text(seq2seq, encode_open_input(ctx, h, span), opts.decode);
    std::tie(pair.question, pair.answer) = parse_generation_output(raw, Flow::open);
  } else if (type == AnswerType::yes || type == AnswerType::no) {
    auto raw = generate_text(seq2seq, encode_closed_input(ctx, h, span, type), opts.decode);
    std::tie(pair.question, pair.answer) = parse_generation_output(raw, Flow::closed, type);
  } else {
    throw GenerationError("cannot generate a pair of type unknown");
  }
  return pair;
}

}  // namespace mcqa
