#pragma once

// Training data for the answerability scorer (QNLI pre-training examples and
// CoQA fine-tuning examples with negative sampling) and the focal loss.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcqa/corpus.hpp"
#include "mcqa/error.hpp"
#include "mcqa/extraction.hpp"
#include "mcqa/sentences.hpp"
#include "mcqa/types.hpp"

namespace mcqa {

enum class ClfLabel { answerable, not_answerable };
enum class ClfOrigin { qnli, coqa_positive, coqa_negative };

inline std::string_view to_string(ClfLabel l) {
  return l == ClfLabel::answerable ? "answerable" : "not_answerable";
}

inline std::string_view to_string(ClfOrigin o) {
  switch (o) {
    case ClfOrigin::qnli: return "qnli";
    case ClfOrigin::coqa_positive: return "coqa_positive";
    case ClfOrigin::coqa_negative: return "coqa_negative";
  }
  return "qnli";
}

struct ClassifierExample {
  std::string history_text;
  std::string question;
  std::string sentence;
  ClfLabel label = ClfLabel::answerable;
  ClfOrigin origin = ClfOrigin::qnli;

  friend bool operator==(const ClassifierExample&, const ClassifierExample&) = default;
};

inline constexpr std::string_view kQuestionMarker = "<Q>";

// "<history> <Q> <question> [SEP] <sentence>"; history is omitted when empty.
inline std::string encode_classifier_input(std::string_view history, std::string_view question,
                                           std::string_view sentence) {
  std::string out;
  out.reserve(history.size() + question.size() + sentence.size() + 16);
  if (!history.empty()) {
    out += history;
    out += ' ';
  }
  out += kQuestionMarker;
  out += ' ';
  out += question;
  out += ' ';
  out += kEncoderSeparator;
  out += ' ';
  out += sentence;
  return out;
}

inline std::string encode_classifier_input(const ClassifierExample& ex) {
  return encode_classifier_input(ex.history_text, ex.question, ex.sentence);
}

inline nlohmann::ordered_json example_to_json(const ClassifierExample& ex) {
  nlohmann::ordered_json j;
  j["history"] = ex.history_text;
  j["question"] = ex.question;
  j["sentence"] = ex.sentence;
  j["label"] = to_string(ex.label);
  j["origin"] = to_string(ex.origin);
  j["input"] = encode_classifier_input(ex);
  return j;
}

// ---------------------------------------------------------------------------
// QNLI

struct QnliRecord {
  std::string question;
  std::string sentence;
  std::string label;  // entailment | not_entailment
};

struct QnliBuild {
  std::vector<ClassifierExample> examples;
  std::size_t skipped = 0;
};

// entailment => answerable.
inline QnliBuild build_qnli_examples(std::span<const QnliRecord> records) {
  QnliBuild out;
  for (const auto& r : records) {
    std::optional<ClfLabel> label;
    if (r.label == "entailment") label = ClfLabel::answerable;
    if (r.label == "not_entailment") label = ClfLabel::not_answerable;
    if (!label || trim(r.question).empty() || trim(r.sentence).empty()) {
      ++out.skipped;
      continue;
    }
    out.examples.push_back({"", r.question, r.sentence, *label, ClfOrigin::qnli});
  }
  return out;
}

// Tab-separated (index, question, sentence, label); a header row starting
// with "index" is ignored. Rows with the wrong field count are kept as
// records with an empty label so the builder counts them as skipped.
inline std::vector<QnliRecord> parse_qnli_tsv(const std::string& content) {
  std::vector<QnliRecord> out;
  std::istringstream in(content);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first && line.rfind("index\t", 0) == 0) {
      first = false;
      continue;
    }
    first = false;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t pos; (pos = line.find('\t', start)) != std::string::npos; start = pos + 1)
      fields.push_back(line.substr(start, pos - start));
    fields.push_back(line.substr(start));
    if (fields.size() != 4)
      out.push_back({"", "", ""});
    else
      out.push_back({fields[1], fields[2], fields[3]});
  }
  return out;
}

// ---------------------------------------------------------------------------
// CoQA

struct CoqaBuild {
  std::vector<ClassifierExample> examples;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t unanswerable_turns = 0;
  std::vector<std::string> warnings;
};

// Answerable turns give one positive (question, context sentence of the main
// answer's rationale). Unanswerable turns are paired with every sentence of
// the passage as negatives. History is the preceding gold turns.
inline CoqaBuild build_coqa_examples(std::span<const CoqaStory> stories) {
  CoqaBuild out;
  for (const auto& story : stories) {
    const auto& passage = story.passage;
    const Conversation gold = gold_to_conversation(story);
    for (std::size_t k = 0; k < gold.pairs.size(); ++k) {
      const auto& pair = gold.pairs[k];
      std::vector<QAPair> prefix(gold.pairs.begin(), gold.pairs.begin() + static_cast<long>(k));
      const std::string history = serialize_history(prefix);
      if (pair.answer_type == AnswerType::unknown) {
        ++out.unanswerable_turns;
        for (const auto& s : passage.sentences) {
          out.examples.push_back(
              {history, pair.question, s.text, ClfLabel::not_answerable, ClfOrigin::coqa_negative});
          ++out.negatives;
        }
        continue;
      }
      std::optional<std::size_t> idx;
      if (pair.source_span) {
        std::size_t a = pair.source_span->start_char;
        while (a < pair.source_span->end_char && is_space(passage.text[a])) ++a;
        idx = sentence_at(passage, a);
      }
      if (!idx) {
        out.warnings.push_back(passage.id + " turn " + std::to_string(pair.turn) +
                               ": no locatable context sentence, skipped");
        continue;
      }
      out.examples.push_back({history, pair.question, passage.sentences[*idx].text,
                              ClfLabel::answerable, ClfOrigin::coqa_positive});
      ++out.positives;
    }
  }
  return out;
}

// Re-segments each passage with `splitter` before building.
inline CoqaBuild build_coqa_examples(std::span<const CoqaStory> stories,
                                     const SentenceSplitter& splitter) {
  std::vector<CoqaStory> resplit(stories.begin(), stories.end());
  for (auto& s : resplit) s.passage.sentences = splitter(s.passage.text);
  return build_coqa_examples(std::span<const CoqaStory>(resplit));
}

// ---------------------------------------------------------------------------
// Focal loss: FL(p_t) = -(1 - p_t)^gamma * log(p_t)

// log(0) guard: p_t below this is evaluated at this value.
inline constexpr double kFocalEpsilon = 1e-12;

namespace detail {

inline double clamp_pt(double p_t, double gamma) {
  if (!(p_t >= 0.0 && p_t <= 1.0))
    throw Error("focal loss: p_t " + std::to_string(p_t) + " outside [0,1]");
  if (!(gamma >= 0.0)) throw Error("focal loss: gamma must be non-negative");
  return std::max(p_t, kFocalEpsilon);
}

}  // namespace detail

inline double focal_loss(double p_t, double gamma = 2.0) {
  p_t = detail::clamp_pt(p_t, gamma);
  return -std::pow(1.0 - p_t, gamma) * std::log(p_t);
}

// d FL / d p_t = gamma (1-p_t)^(gamma-1) log(p_t) - (1-p_t)^gamma / p_t
inline double focal_loss_grad(double p_t, double gamma = 2.0) {
  p_t = detail::clamp_pt(p_t, gamma);
  const double q = 1.0 - p_t;
  const double first = gamma == 0.0 ? 0.0 : gamma * std::pow(q, gamma - 1.0) * std::log(p_t);
  return first - std::pow(q, gamma) / p_t;
}

// p_t from the predicted probability of the answerable class and the label.
inline double prob_of_true_class(double prob_answerable, ClfLabel label) {
  return label == ClfLabel::answerable ? prob_answerable : 1.0 - prob_answerable;
}

inline double mean_focal_loss(std::span<const double> p_t, double gamma = 2.0) {
  if (p_t.empty()) return 0.0;
  double sum = 0.0;
  for (double p : p_t) sum += focal_loss(p, gamma);
  return sum / static_cast<double>(p_t.size());
}

}  // namespace mcqa
