#pragma once

// Measurement suite: token F1, per-domain CQA scores, per-type splits,
// answerability recall, and human-evaluation sampling and aggregation.

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcqa/corpus.hpp"
#include "mcqa/error.hpp"
#include "mcqa/normalize.hpp"
#include "mcqa/types.hpp"
#include "mcqa/util.hpp"

namespace mcqa {

// ---------------------------------------------------------------------------
// Token F1

inline double token_f1_single(std::string_view prediction, std::string_view reference) {
  const auto p = normalized_tokens(prediction);
  const auto r = normalized_tokens(reference);
  if (p.empty() && r.empty()) return 1.0;
  if (p.empty() || r.empty()) return 0.0;
  std::unordered_map<std::string, long> counts;
  for (const auto& t : r) ++counts[t];
  long common = 0;
  for (const auto& t : p) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / static_cast<double>(p.size());
  const double recall = static_cast<double>(common) / static_cast<double>(r.size());
  return 2.0 * precision * recall / (precision + recall);
}

// Best F1 over the references.
inline double token_f1(std::string_view prediction, const std::vector<std::string>& references) {
  if (references.empty()) throw Error("token_f1: at least one reference is required");
  double best = 0.0;
  for (const auto& r : references) best = std::max(best, token_f1_single(prediction, r));
  return best;
}

// ---------------------------------------------------------------------------
// Per-type split

enum class TurnClass { open, closed, unanswerable };

inline constexpr std::array<TurnClass, 3> kTurnClasses = {TurnClass::open, TurnClass::closed,
                                                         TurnClass::unanswerable};

inline std::string_view to_string(TurnClass c) {
  switch (c) {
    case TurnClass::open: return "Open";
    case TurnClass::closed: return "Close";
    case TurnClass::unanswerable: return "Unanswerable";
  }
  return "Open";
}

inline TurnClass candidate_class(std::string_view answer) {
  switch (literal_type(answer)) {
    case AnswerType::yes:
    case AnswerType::no: return TurnClass::closed;
    case AnswerType::unknown: return TurnClass::unanswerable;
    case AnswerType::open: return TurnClass::open;
  }
  return TurnClass::open;
}

// Most frequent candidate class; ties go to unanswerable, then closed, then open.
inline TurnClass classify_turn(const GoldTurn& turn) {
  std::array<int, 3> counts{};
  for (const auto& a : turn.answers) ++counts[static_cast<std::size_t>(candidate_class(a.text))];
  TurnClass best = TurnClass::unanswerable;
  for (TurnClass c : {TurnClass::unanswerable, TurnClass::closed, TurnClass::open})
    if (counts[static_cast<std::size_t>(c)] > counts[static_cast<std::size_t>(best)]) best = c;
  return best;
}

struct TurnRef {
  std::string conversation_id;
  int turn = 0;

  friend auto operator<=>(const TurnRef&, const TurnRef&) = default;
};

using TypeSplit = std::array<std::vector<TurnRef>, 3>;  // indexed by TurnClass

inline TypeSplit split_by_type(const std::vector<GoldConversation>& gold) {
  TypeSplit split;
  for (const auto& c : gold)
    for (const auto& t : c.turns)
      split[static_cast<std::size_t>(classify_turn(t))].push_back({c.id, t.turn});
  return split;
}

// ---------------------------------------------------------------------------
// CQA evaluation

using Predictions = std::map<TurnRef, std::string>;

// Line-delimited {conversation_id, turn, prediction}.
inline Predictions parse_predictions(const std::string& content) {
  Predictions out;
  std::istringstream in(content);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = "predictions line " + std::to_string(lineno);
    try {
      auto j = nlohmann::json::parse(line);
      TurnRef ref{j.at("conversation_id").get<std::string>(), j.at("turn").get<int>()};
      if (!out.emplace(ref, j.at("prediction").get<std::string>()).second)
        throw ParseError(where + ": duplicate prediction for " + ref.conversation_id + " turn " +
                         std::to_string(ref.turn));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  return out;
}

struct ScoreCell {
  double sum = 0.0;
  std::size_t n = 0;

  void add(double f1) {
    sum += f1;
    ++n;
  }
  std::optional<double> mean_percent() const {
    if (n == 0) return std::nullopt;
    return 100.0 * sum / static_cast<double>(n);
  }
};

struct CqaReport {
  std::map<Domain, ScoreCell> by_domain;
  std::array<ScoreCell, 3> by_type;  // indexed by TurnClass
  ScoreCell overall;
  std::size_t missing = 0;  // gold turns without a prediction, scored 0
};

// Macro-average of per-turn F1, grouped by domain and by turn class.
inline CqaReport evaluate_cqa(const Predictions& predictions,
                              const std::vector<GoldConversation>& gold) {
  CqaReport report;
  for (const auto& c : gold) {
    for (const auto& t : c.turns) {
      std::vector<std::string> refs;
      for (const auto& a : t.answers) refs.push_back(a.text);
      double f1 = 0.0;
      if (auto it = predictions.find({c.id, t.turn}); it != predictions.end())
        f1 = token_f1(it->second, refs);
      else
        ++report.missing;
      report.by_domain[c.domain].add(f1);
      report.by_type[static_cast<std::size_t>(classify_turn(t))].add(f1);
      report.overall.add(f1);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Answerability recall

struct AcOutcome {
  bool predicted_answerable = false;
  bool gold_answerable = false;
};

struct AcRecall {
  std::optional<double> answerable;    // percent; unset when the class is absent
  std::optional<double> unanswerable;
  std::size_t answerable_total = 0;
  std::size_t unanswerable_total = 0;
};

inline AcRecall ac_recall(const std::vector<AcOutcome>& outcomes) {
  if (outcomes.empty()) throw Error("ac_recall: no verdicts");
  AcRecall r;
  std::size_t ans_hit = 0, unans_hit = 0;
  for (const auto& o : outcomes) {
    if (o.gold_answerable) {
      ++r.answerable_total;
      ans_hit += o.predicted_answerable ? 1 : 0;
    } else {
      ++r.unanswerable_total;
      unans_hit += o.predicted_answerable ? 0 : 1;
    }
  }
  if (r.answerable_total)
    r.answerable = 100.0 * static_cast<double>(ans_hit) / static_cast<double>(r.answerable_total);
  if (r.unanswerable_total)
    r.unanswerable =
        100.0 * static_cast<double>(unans_hit) / static_cast<double>(r.unanswerable_total);
  return r;
}

// ---------------------------------------------------------------------------
// Human evaluation

struct EvalPacket {
  std::string id;  // opaque
  std::string passage;
  std::vector<std::pair<std::string, std::string>> history;
  std::string question;
  std::string answer;
};

struct LabeledDataset {
  std::string label;
  Dataset dataset;
  std::map<std::string, std::string, std::less<>> passages;  // passage id -> text
};

struct SampleResult {
  std::vector<EvalPacket> packets;
  std::map<std::string, std::string> key;  // packet id -> dataset label
};

// Uniform sample of n pairs per dataset without replacement, then a shared
// shuffle; ids are hashes so neither id nor position reveals the source.
inline SampleResult sample_for_human_eval(const std::vector<LabeledDataset>& datasets,
                                          std::size_t n_per_dataset, std::uint64_t seed) {
  struct Drawn {
    EvalPacket packet;
    std::string label;
  };
  std::vector<Drawn> drawn;
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    const auto& ds = datasets[d];
    std::vector<std::pair<std::size_t, std::size_t>> population;
    for (std::size_t c = 0; c < ds.dataset.conversations.size(); ++c)
      for (std::size_t p = 0; p < ds.dataset.conversations[c].pairs.size(); ++p)
        population.emplace_back(c, p);
    if (n_per_dataset > population.size())
      throw Error("dataset '" + ds.label + "' has " + std::to_string(population.size()) +
                  " pairs, cannot sample " + std::to_string(n_per_dataset));
    Rng rng = stream_for(seed, "sample:" + std::to_string(d));
    for (std::size_t k = 0; k < n_per_dataset; ++k) {
      auto j = k + uniform_below(rng, population.size() - k);
      std::swap(population[k], population[j]);
    }
    for (std::size_t k = 0; k < n_per_dataset; ++k) {
      const auto& conv = ds.dataset.conversations[population[k].first];
      const auto idx = population[k].second;
      auto it = ds.passages.find(conv.passage_id);
      if (it == ds.passages.end())
        throw Error("dataset '" + ds.label + "': passage '" + conv.passage_id + "' not supplied");
      EvalPacket pk;
      pk.passage = it->second;
      for (std::size_t h = 0; h < idx; ++h)
        pk.history.emplace_back(conv.pairs[h].question, conv.pairs[h].answer);
      pk.question = conv.pairs[idx].question;
      pk.answer = conv.pairs[idx].answer;
      drawn.push_back({std::move(pk), ds.label});
    }
  }
  Rng shuffle_rng = stream_for(seed, "shuffle");
  for (std::size_t k = drawn.size(); k > 1; --k)
    std::swap(drawn[k - 1], drawn[uniform_below(shuffle_rng, k)]);

  SampleResult out;
  std::set<std::string> ids;
  for (std::size_t k = 0; k < drawn.size(); ++k) {
    std::uint64_t h = splitmix64(seed ^ splitmix64(k + 1));
    std::string id;
    do {
      std::ostringstream ss;
      ss << "ex-" << std::hex << h;
      id = ss.str();
      h = splitmix64(h);
    } while (!ids.insert(id).second);
    drawn[k].packet.id = id;
    out.key[id] = drawn[k].label;
    out.packets.push_back(std::move(drawn[k].packet));
  }
  return out;
}

inline nlohmann::ordered_json packet_to_json(const EvalPacket& p) {
  nlohmann::ordered_json j;
  j["example_id"] = p.id;
  j["passage"] = p.passage;
  j["history"] = nlohmann::ordered_json::array();
  for (const auto& [q, a] : p.history) j["history"].push_back({{"question", q}, {"answer", a}});
  j["question"] = p.question;
  j["answer"] = p.answer;
  return j;
}

enum class Connectivity { dependent, independent, unnatural };
enum class Answerability { answerable, unanswerable };
enum class Correctness { correct, partially_correct, incorrect };

struct AnnotationRecord {
  std::string example_id;
  Connectivity connectivity = Connectivity::dependent;
  std::optional<Answerability> answerability;
  std::optional<Correctness> correctness;
};

inline AnnotationRecord parse_annotation(const nlohmann::json& j, const std::string& where) {
  AnnotationRecord r;
  try {
    r.example_id = j.at("example_id").get<std::string>();
    auto c = j.at("connectivity").get<std::string>();
    if (c == "dependent") r.connectivity = Connectivity::dependent;
    else if (c == "independent") r.connectivity = Connectivity::independent;
    else if (c == "unnatural") r.connectivity = Connectivity::unnatural;
    else throw SchemaError(where + ": connectivity: unknown value '" + c + "'");
    if (j.contains("answerability") && !j["answerability"].is_null()) {
      auto a = j["answerability"].get<std::string>();
      if (a == "answerable") r.answerability = Answerability::answerable;
      else if (a == "unanswerable") r.answerability = Answerability::unanswerable;
      else throw SchemaError(where + ": answerability: unknown value '" + a + "'");
    }
    if (j.contains("correctness") && !j["correctness"].is_null()) {
      auto a = j["correctness"].get<std::string>();
      if (a == "correct") r.correctness = Correctness::correct;
      else if (a == "partially_correct") r.correctness = Correctness::partially_correct;
      else if (a == "incorrect") r.correctness = Correctness::incorrect;
      else throw SchemaError(where + ": correctness: unknown value '" + a + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
  return r;
}

inline std::vector<AnnotationRecord> parse_annotations(const std::string& content) {
  std::vector<AnnotationRecord> out;
  std::istringstream in(content);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = "annotations line " + std::to_string(lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(where + ": " + e.what());
    }
    out.push_back(parse_annotation(j, where));
  }
  return out;
}

struct HumanEvalTable {
  std::array<std::size_t, 3> connectivity{};   // dependent, independent, unnatural
  std::array<std::size_t, 2> answerability{};  // answerable, unanswerable
  std::array<std::size_t, 3> correctness{};    // correct, partially correct, incorrect
  std::size_t records = 0;
  std::size_t assessed = 0;  // records not judged unnatural

  double connectivity_pct(std::size_t k) const { return pct(connectivity[k], records); }
  double answerability_pct(std::size_t k) const { return pct(answerability[k], assessed); }
  double correctness_pct(std::size_t k) const { return pct(correctness[k], assessed); }

 private:
  static double pct(std::size_t x, std::size_t n) {
    return n ? 100.0 * static_cast<double>(x) / static_cast<double>(n) : 0.0;
  }
};

// Connectivity over all records; answerability and correctness over the
// records not judged unnatural (those items are skipped for unnatural ones).
inline HumanEvalTable aggregate_annotations(const std::vector<AnnotationRecord>& records) {
  HumanEvalTable t;
  for (const auto& r : records) {
    const bool unnatural = r.connectivity == Connectivity::unnatural;
    if (unnatural && (r.answerability || r.correctness))
      throw SchemaError(r.example_id + ": unnatural record must not carry answerability/correctness");
    if (!unnatural && (!r.answerability || !r.correctness))
      throw SchemaError(r.example_id + ": answerability and correctness are required");
    ++t.records;
    ++t.connectivity[static_cast<std::size_t>(r.connectivity)];
    if (unnatural) continue;
    ++t.assessed;
    ++t.answerability[static_cast<std::size_t>(*r.answerability)];
    ++t.correctness[static_cast<std::size_t>(*r.correctness)];
  }
  return t;
}

}  // namespace mcqa
