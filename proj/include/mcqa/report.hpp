#pragma once

// Plain-text report tables for statistics, CQA scores, answerability recall,
// and human evaluation.

#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcqa/corpus.hpp"
#include "mcqa/evaluation.hpp"
#include "mcqa/types.hpp"

namespace mcqa {

class TextTable {
 public:
  explicit TextTable(std::vector<std::string> header, std::size_t left_columns = 1)
      : header_(std::move(header)), left_(left_columns) {}

  void add_row(std::vector<std::string> row) {
    row.resize(header_.size());
    rows_.push_back(std::move(row));
  }

  std::string str() const {
    std::vector<std::size_t> width(header_.size());
    for (std::size_t c = 0; c < header_.size(); ++c) width[c] = header_[c].size();
    for (const auto& r : rows_)
      for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    std::string out;
    auto line = [&](const std::vector<std::string>& r) {
      std::string l;
      for (std::size_t c = 0; c < r.size(); ++c) {
        if (c) l += "  ";
        std::string pad(width[c] - r[c].size(), ' ');
        l += c < left_ ? r[c] + pad : pad + r[c];
      }
      while (!l.empty() && l.back() == ' ') l.pop_back();
      out += l + '\n';
    };
    line(header_);
    std::size_t total = 0;
    for (auto w : width) total += w;
    out += std::string(total + 2 * (width.size() - 1), '-') + '\n';
    for (const auto& r : rows_) line(r);
    return out;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::size_t left_;
};

inline std::string fixed1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

inline std::string fixed1(const std::optional<double>& v) { return v ? fixed1(*v) : "n/a"; }

inline std::string with_commas(std::size_t n) {
  std::string s = std::to_string(n);
  for (int i = static_cast<int>(s.size()) - 3; i > 0; i -= 3) s.insert(static_cast<std::size_t>(i), ",");
  return s;
}

// Data-distribution table: answerable (open, closed yes/no) and unanswerable
// counts with percentages of the whole; optionally the negative-sampling
// expansion of the unanswerable examples.
inline std::string render_stats_table(const DatasetStats& s,
                                      std::optional<std::size_t> expanded_unanswerable = std::nullopt) {
  auto cell = [&](AnswerType t) {
    return with_commas(s.count(t)) + " (" + fixed1(s.percentage(t)) + "%)";
  };
  TextTable t({"Data type", "", "", "#Q-As (Percentage)", "Total"}, 3);
  t.add_row({"Answerable", "Open-ended", "", cell(AnswerType::open), with_commas(s.answerable)});
  t.add_row({"", "Closed-ended", "Yes", cell(AnswerType::yes), ""});
  t.add_row({"", "", "No", cell(AnswerType::no), ""});
  std::string unans = cell(AnswerType::unknown);
  if (expanded_unanswerable) unans += " -> " + with_commas(*expanded_unanswerable);
  t.add_row({"Unanswerable", "", "", unans, with_commas(s.unanswerable)});
  return t.str();
}

inline std::string_view domain_column(Domain d) {
  switch (d) {
    case Domain::children: return "Child.";
    case Domain::literature: return "Liter.";
    case Domain::news: return "News.";
    case Domain::exam: return "Exam.";
    case Domain::wikipedia: return "Wiki.";
    case Domain::other: return "Other";
  }
  return "Other";
}

struct F1Row {
  std::string data;       // e.g. Synthetic / Real
  std::string framework;  // row label
  CqaReport report;
};

// F1 by domain; one column per domain that any row scored.
inline std::string render_domain_f1_table(const std::vector<F1Row>& rows) {
  std::vector<Domain> domains;
  for (Domain d : kAllDomains)
    for (const auto& r : rows)
      if (r.report.by_domain.count(d)) {
        domains.push_back(d);
        break;
      }
  std::vector<std::string> header{"Data", "Framework"};
  for (Domain d : domains) header.emplace_back(domain_column(d));
  TextTable t(header, 2);
  for (const auto& r : rows) {
    std::vector<std::string> row{r.data, r.framework};
    for (Domain d : domains) {
      auto it = r.report.by_domain.find(d);
      row.push_back(it == r.report.by_domain.end() ? "-" : fixed1(it->second.mean_percent()));
    }
    t.add_row(std::move(row));
  }
  return t.str();
}

// F1 by turn class (Open / Close / Unanswerable).
inline std::string render_type_f1_table(const std::vector<F1Row>& rows) {
  TextTable t({"Data", "Framework", "Open", "Close", "Unanswerable"}, 2);
  for (const auto& r : rows) {
    std::vector<std::string> row{r.data, r.framework};
    for (TurnClass c : kTurnClasses)
      row.push_back(fixed1(r.report.by_type[static_cast<std::size_t>(c)].mean_percent()));
    t.add_row(std::move(row));
  }
  return t.str();
}

inline std::string render_ac_recall_table(
    const std::vector<std::pair<std::string, AcRecall>>& rows) {
  TextTable t({"Training dataset", "Answerable-Recall", "Unanswerable-Recall"});
  for (const auto& [label, r] : rows) t.add_row({label, fixed1(r.answerable), fixed1(r.unanswerable)});
  return t.str();
}

inline std::string render_human_eval_table(
    const std::vector<std::pair<std::string, HumanEvalTable>>& columns) {
  std::vector<std::string> header{"Item", "Judgement"};
  for (const auto& c : columns) header.push_back(c.first);
  TextTable t(header, 2);
  auto add = [&](std::string item, std::string judgement, auto pct) {
    std::vector<std::string> row{std::move(item), std::move(judgement)};
    for (const auto& c : columns) row.push_back(fixed1(pct(c.second)) + "%");
    t.add_row(std::move(row));
  };
  add("Conversational Connectivity", "Dependent", [](const HumanEvalTable& h) { return h.connectivity_pct(0); });
  add("", "Independent", [](const HumanEvalTable& h) { return h.connectivity_pct(1); });
  add("", "Unnatural", [](const HumanEvalTable& h) { return h.connectivity_pct(2); });
  add("Question Answerability", "Answerable", [](const HumanEvalTable& h) { return h.answerability_pct(0); });
  add("", "Unanswerable", [](const HumanEvalTable& h) { return h.answerability_pct(1); });
  add("Answer Correctness", "Correct", [](const HumanEvalTable& h) { return h.correctness_pct(0); });
  add("", "Partially correct", [](const HumanEvalTable& h) { return h.correctness_pct(1); });
  add("", "Incorrect", [](const HumanEvalTable& h) { return h.correctness_pct(2); });
  return t.str();
}

}  // namespace mcqa
