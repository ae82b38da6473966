#pragma once

// Shared fixtures and instrumented backends for the test suites.

#include <mutex>
#include <string>
#include <vector>

#include "mcqa/mcqa.hpp"

namespace mcqa::testing {

// Records every encoder input passed to the wrapped generator.
class RecordingSeq2Seq final : public Seq2SeqBackend {
 public:
  explicit RecordingSeq2Seq(const Seq2SeqBackend& inner) : inner_(inner) {}
  std::string generate(std::string_view in, const DecodeOptions& o) const override {
    {
      std::lock_guard lock(mu_);
      inputs_.emplace_back(in);
    }
    return inner_.generate(in, o);
  }
  std::string name() const override { return "recording"; }
  std::vector<std::string> inputs() const {
    std::lock_guard lock(mu_);
    return inputs_;
  }

 private:
  const Seq2SeqBackend& inner_;
  mutable std::mutex mu_;
  mutable std::vector<std::string> inputs_;
};

class RecordingExtractor final : public SpanExtractorBackend {
 public:
  explicit RecordingExtractor(const SpanExtractorBackend& inner) : inner_(inner) {}
  std::optional<AnswerSpan> extract(const ExtractionRequest& r) const override {
    {
      std::lock_guard lock(mu_);
      inputs_.emplace_back(r.encoded_input);
      ids_.push_back(r.passage.id);
    }
    return inner_.extract(r);
  }
  std::string name() const override { return "recording-extractor"; }
  std::vector<std::string> inputs() const {
    std::lock_guard lock(mu_);
    return inputs_;
  }
  // passage id of each recorded input
  std::vector<std::string> passage_ids() const {
    std::lock_guard lock(mu_);
    return ids_;
  }

 private:
  const SpanExtractorBackend& inner_;
  mutable std::mutex mu_;
  mutable std::vector<std::string> inputs_;
  mutable std::vector<std::string> ids_;
};

class RecordingScorer final : public AnswerabilityScorer {
 public:
  explicit RecordingScorer(const AnswerabilityScorer& inner) : inner_(inner) {}
  double score(const ScoreQuery& q) const override {
    {
      std::lock_guard lock(mu_);
      histories_.emplace_back(q.history);
      ++calls_;
    }
    return inner_.score(q);
  }
  std::string name() const override { return "recording-scorer"; }
  std::vector<std::string> histories() const {
    std::lock_guard lock(mu_);
    return histories_;
  }
  int calls() const {
    std::lock_guard lock(mu_);
    return calls_;
  }

 private:
  const AnswerabilityScorer& inner_;
  mutable std::mutex mu_;
  mutable std::vector<std::string> histories_;
  mutable int calls_ = 0;
};

// Twenty short passages with named entities for the rule-based extractor.
inline std::vector<Passage> toy_passages() {
  static const char* kNames[] = {"Alice", "Bruno", "Clara", "Dmitri", "Elena",
                                 "Farid", "Greta", "Hiro",  "Ingrid", "Jonas"};
  static const char* kPlaces[] = {"Paris", "Lisbon", "Oslo", "Cairo", "Lima",
                                  "Quito", "Seoul",  "Rome", "Dakar", "Hanoi"};
  static const Domain kDomains[] = {Domain::children, Domain::literature, Domain::news,
                                    Domain::exam};
  std::vector<Passage> out;
  for (int i = 0; i < 20; ++i) {
    std::string a = kNames[i % 10], b = kNames[(i + 3) % 10];
    std::string p = kPlaces[i % 10], q = kPlaces[(i + 4) % 10];
    std::string text = a + " Weber moved to " + p + " in the spring. " + "There " + a +
                       " met " + b + " Novak at the Central Library. " + "They travelled to " + q +
                       " by train. " + "The trip was paid for by the Harbor Trust. " + b +
                       " wrote a book about " + q + " and " + p + ".";
    char id[16];
    std::snprintf(id, sizeof id, "toy-%02d", i);
    out.push_back(make_passage(id, kDomains[i % 4], text));
  }
  return out;
}

}  // namespace mcqa::testing
