#pragma once

// Passage/dataset I/O: CoQA reader, line-delimited synthetic dataset format,
// passage files, and answer-type distribution statistics.

#include <array>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mcqa/error.hpp"
#include "mcqa/normalize.hpp"
#include "mcqa/sentences.hpp"
#include "mcqa/types.hpp"

namespace mcqa {

using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// CoQA

struct GoldAnswer {
  std::string text;
  std::optional<AnswerSpan> rationale;

  friend bool operator==(const GoldAnswer&, const GoldAnswer&) = default;
};

struct GoldTurn {
  int turn = 1;
  std::string question;
  std::vector<GoldAnswer> answers;  // [0] is the main answer, then additional sets

  friend bool operator==(const GoldTurn&, const GoldTurn&) = default;
};

struct GoldConversation {
  std::string id;
  Domain domain = Domain::other;
  std::vector<GoldTurn> turns;

  friend bool operator==(const GoldConversation&, const GoldConversation&) = default;
};

struct CoqaStory {
  Passage passage;
  GoldConversation gold;
};

struct CoqaFile {
  std::vector<CoqaStory> stories;
  std::vector<std::string> warnings;
};

inline std::optional<Domain> coqa_source_domain(std::string_view source) {
  if (source == "mctest") return Domain::children;
  if (source == "gutenberg") return Domain::literature;
  if (source == "cnn") return Domain::news;
  if (source == "race") return Domain::exam;
  if (source == "wikipedia") return Domain::wikipedia;
  return std::nullopt;
}

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// byte offset of every code point, plus one past the end
inline std::vector<std::size_t> codepoint_offsets(std::string_view s) {
  std::vector<std::size_t> offs;
  offs.reserve(s.size() + 1);
  for (std::size_t i = 0; i < s.size(); ++i)
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) offs.push_back(i);
  offs.push_back(s.size());
  return offs;
}

template <class Json>
const Json& require(const Json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing field '" + key + "'");
  return *it;
}

}  // namespace detail

inline CoqaFile parse_coqa(const std::string& content,
                           const SentenceSplitter& splitter = split_sentences) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(content);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("CoQA: invalid JSON: ") + e.what());
  }
  if (!root.is_object() || !root.contains("data") || !root["data"].is_array())
    throw ParseError("CoQA: top-level 'data' array missing");

  CoqaFile file;
  std::size_t position = 0;
  for (const auto& item : root["data"]) {
    std::string id = "#" + std::to_string(position++);
    try {
      if (item.contains("id") && item["id"].is_string()) id = item["id"].get<std::string>();
      const auto source = detail::require(item, "source", id).template get<std::string>();
      auto story = detail::require(item, "story", id).template get<std::string>();
      auto domain = coqa_source_domain(source);
      if (!domain) {
        file.warnings.push_back(id + ": unknown source '" + source + "', mapped to other");
        domain = Domain::other;
      }
      const auto offs = detail::codepoint_offsets(story);
      auto to_span = [&](const nlohmann::json& a,
                         const std::string& where) -> std::optional<AnswerSpan> {
        if (!a.contains("span_start") || !a.contains("span_end")) return std::nullopt;
        long s = a["span_start"].get<long>(), e = a["span_end"].get<long>();
        if (s < 0 || e < 0) return std::nullopt;
        if (s >= e || static_cast<std::size_t>(e) >= offs.size())
          throw ParseError(where + ": span [" + std::to_string(s) + "," + std::to_string(e) +
                           ") outside story");
        std::size_t b = offs[s], en = offs[e];
        return AnswerSpan{b, en, story.substr(b, en - b)};
      };

      GoldConversation gold{id, *domain, {}};
      std::map<int, std::size_t> by_turn;
      for (const auto& q : detail::require(item, "questions", id)) {
        GoldTurn t;
        t.turn = detail::require(q, "turn_id", id).template get<int>();
        t.question = detail::require(q, "input_text", id).template get<std::string>();
        by_turn[t.turn] = gold.turns.size();
        gold.turns.push_back(std::move(t));
      }
      auto add_answers = [&](const nlohmann::json& answers, const std::string& where) {
        for (const auto& a : answers) {
          int turn = detail::require(a, "turn_id", where).template get<int>();
          auto it = by_turn.find(turn);
          if (it == by_turn.end())
            throw ParseError(where + ": answer for unknown turn " + std::to_string(turn));
          gold.turns[it->second].answers.push_back(
              {detail::require(a, "input_text", where).template get<std::string>(),
               to_span(a, where + " turn " + std::to_string(turn))});
        }
      };
      add_answers(detail::require(item, "answers", id), id);
      if (item.contains("additional_answers")) {
        for (const char* key : {"0", "1", "2"})
          if (item["additional_answers"].contains(key))
            add_answers(item["additional_answers"][key], id + " additional " + key);
      }
      for (const auto& t : gold.turns)
        if (t.answers.empty())
          throw ParseError(id + ": turn " + std::to_string(t.turn) + " has no answer");

      Passage p = make_passage(id, *domain, std::move(story), splitter);
      file.stories.push_back({std::move(p), std::move(gold)});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(id + ": " + e.what());
    }
  }
  return file;
}

inline CoqaFile load_coqa(const std::string& path,
                          const SentenceSplitter& splitter = split_sentences) {
  return parse_coqa(detail::read_file(path), splitter);
}

// Main-answer view of a gold conversation, shaped like synthetic output.
inline Conversation gold_to_conversation(const CoqaStory& story) {
  Conversation c{story.passage.id, story.passage.domain, {}, {}};
  for (const auto& t : story.gold.turns) {
    const auto& main = t.answers.front();
    QAPair p;
    p.turn = t.turn;
    p.question = t.question;
    p.answer_type = literal_type(main.text);
    p.source_span = main.rationale;
    switch (p.answer_type) {
      case AnswerType::yes: p.answer = "yes"; break;
      case AnswerType::no: p.answer = "no"; break;
      case AnswerType::unknown: p.answer = std::string(kUnknownAnswer); break;
      case AnswerType::open: p.answer = main.text; break;
    }
    p.status = p.answer_type == AnswerType::unknown ? PairStatus::unknownized : PairStatus::kept;
    c.pairs.push_back(std::move(p));
  }
  return c;
}

// ---------------------------------------------------------------------------
// Passage files: one {"id", "domain", "text"} object per line.

inline std::vector<Passage> parse_passages_jsonl(const std::string& content,
                                                 const SentenceSplitter& splitter = split_sentences) {
  std::vector<Passage> out;
  std::istringstream in(content);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = "line " + std::to_string(lineno);
    try {
      auto j = nlohmann::json::parse(line);
      auto id = detail::require(j, "id", where).get<std::string>();
      auto d = parse_domain(j.value("domain", std::string("other")));
      if (!d) throw SchemaError(where + ": domain: unknown value");
      out.push_back(make_passage(id, *d, detail::require(j, "text", where).get<std::string>(),
                                 splitter));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  return out;
}

inline std::string passage_to_line(const Passage& p) {
  ojson j;
  j["id"] = p.id;
  j["domain"] = to_string(p.domain);
  j["text"] = p.text;
  return j.dump();
}

// ---------------------------------------------------------------------------
// Synthetic dataset format

inline ojson pair_to_json(const QAPair& p) {
  ojson j;
  j["turn"] = p.turn;
  j["question"] = p.question;
  j["answer"] = p.answer;
  j["type"] = to_string(p.answer_type);
  j["status"] = to_string(p.status);
  if (p.source_span)
    j["span"] = {{"start", p.source_span->start_char},
                 {"end", p.source_span->end_char},
                 {"text", p.source_span->text}};
  else
    j["span"] = nullptr;
  if (p.verdict) {
    ojson probs;
    probs["context"] = p.verdict->context_prob;
    probs["context_index"] = p.verdict->context_sentence_index;
    ojson passage = ojson::array();
    for (const auto& sp : p.verdict->passage_probs) passage.push_back(sp.prob);
    probs["passage"] = std::move(passage);
    j["probs"] = std::move(probs);
  } else {
    j["probs"] = nullptr;
  }
  return j;
}

inline ojson conversation_to_json(const Conversation& c) {
  ojson j;
  j["passage_id"] = c.passage_id;
  j["domain"] = to_string(c.domain);
  j["turns"] = ojson::array();
  for (const auto& p : c.pairs) j["turns"].push_back(pair_to_json(p));
  j["discarded"] = ojson::array();
  for (const auto& p : c.discarded) j["discarded"].push_back(pair_to_json(p));
  return j;
}

namespace detail {

template <class T>
T field(const ojson& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(where + "." + key + ": missing");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw SchemaError(where + "." + key + ": wrong type");
  }
}

inline Outcome outcome_for(PairStatus s) {
  switch (s) {
    case PairStatus::kept: return Outcome::keep;
    case PairStatus::discarded: return Outcome::discard;
    default: return Outcome::unknown;
  }
}

}  // namespace detail

inline QAPair pair_from_json(const ojson& j, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + ": expected object");
  QAPair p;
  p.turn = detail::field<int>(j, "turn", where);
  p.question = detail::field<std::string>(j, "question", where);
  p.answer = detail::field<std::string>(j, "answer", where);
  auto type = parse_answer_type(detail::field<std::string>(j, "type", where));
  if (!type) throw SchemaError(where + ".type: unknown value");
  p.answer_type = *type;
  auto status = parse_status(detail::field<std::string>(j, "status", where));
  if (!status || *status == PairStatus::pending)
    throw SchemaError(where + ".status: unknown value");
  p.status = *status;
  if (auto it = j.find("span"); it != j.end() && !it->is_null()) {
    AnswerSpan s;
    s.start_char = detail::field<std::size_t>(*it, "start", where + ".span");
    s.end_char = detail::field<std::size_t>(*it, "end", where + ".span");
    s.text = detail::field<std::string>(*it, "text", where + ".span");
    if (s.start_char >= s.end_char) throw SchemaError(where + ".span: start >= end");
    p.source_span = std::move(s);
  }
  if (auto it = j.find("probs"); it != j.end() && !it->is_null()) {
    ClassifierVerdict v;
    v.outcome = detail::outcome_for(p.status);
    v.context_prob = detail::field<double>(*it, "context", where + ".probs");
    v.context_sentence_index = it->value("context_index", std::size_t{0});
    auto passage = detail::field<std::vector<double>>(*it, "passage", where + ".probs");
    for (std::size_t k = 0; k < passage.size(); ++k) {
      std::size_t idx = k < v.context_sentence_index ? k : k + 1;
      v.passage_probs.push_back({idx, passage[k]});
    }
    p.verdict = std::move(v);
  }
  return p;
}

inline Conversation conversation_from_json(const ojson& j, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + ": expected object");
  Conversation c;
  c.passage_id = detail::field<std::string>(j, "passage_id", where);
  auto d = parse_domain(detail::field<std::string>(j, "domain", where));
  if (!d) throw SchemaError(where + ".domain: unknown value");
  c.domain = *d;
  auto turns = j.find("turns");
  if (turns == j.end() || !turns->is_array()) throw SchemaError(where + ".turns: missing");
  for (std::size_t k = 0; k < turns->size(); ++k)
    c.pairs.push_back(pair_from_json((*turns)[k], where + ".turns[" + std::to_string(k) + "]"));
  if (auto disc = j.find("discarded"); disc != j.end()) {
    if (!disc->is_array()) throw SchemaError(where + ".discarded: expected array");
    for (std::size_t k = 0; k < disc->size(); ++k)
      c.discarded.push_back(
          pair_from_json((*disc)[k], where + ".discarded[" + std::to_string(k) + "]"));
  }
  try {
    check_conversation(c);
  } catch (const InvariantError& e) {
    throw SchemaError(where + ": " + e.what());
  }
  return c;
}

inline std::string serialize_dataset(const Dataset& d) {
  std::string out;
  for (const auto& c : d.conversations) {
    out += conversation_to_json(c).dump();
    out += '\n';
  }
  return out;
}

inline Dataset parse_dataset(const std::string& content) {
  Dataset d;
  std::istringstream in(content);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = "record " + std::to_string(lineno);
    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(where + ": " + e.what());
    }
    d.conversations.push_back(conversation_from_json(j, where));
  }
  return d;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

inline void write_dataset(const Dataset& d, const std::string& path) {
  for (const auto& c : d.conversations) check_conversation(c);
  write_text_file(path, serialize_dataset(d));
}

inline Dataset read_dataset(const std::string& path) {
  return parse_dataset(detail::read_file(path));
}

// ---------------------------------------------------------------------------
// Statistics

struct DatasetStats {
  std::array<std::size_t, 4> counts{};  // indexed by AnswerType
  std::array<double, 4> percentages{};
  std::size_t answerable = 0;
  std::size_t unanswerable = 0;

  std::size_t total() const { return answerable + unanswerable; }
  std::size_t count(AnswerType t) const { return counts[static_cast<std::size_t>(t)]; }
  double percentage(AnswerType t) const { return percentages[static_cast<std::size_t>(t)]; }
};

inline DatasetStats compute_stats(const Dataset& d) {
  DatasetStats s;
  for (const auto& c : d.conversations)
    for (const auto& p : c.pairs) ++s.counts[static_cast<std::size_t>(p.answer_type)];
  s.unanswerable = s.count(AnswerType::unknown);
  s.answerable = s.count(AnswerType::open) + s.count(AnswerType::yes) + s.count(AnswerType::no);
  if (s.total() > 0)
    for (std::size_t k = 0; k < 4; ++k)
      s.percentages[k] = 100.0 * static_cast<double>(s.counts[k]) / static_cast<double>(s.total());
  return s;
}

}  // namespace mcqa
