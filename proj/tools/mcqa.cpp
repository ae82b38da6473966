// mcqa: synthesize, filter, and evaluate conversational QA data.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mcqa/mcqa.hpp"

namespace {

using namespace mcqa;
using ojson = nlohmann::ordered_json;

constexpr const char* kConfigEnv = "MCQA_CONFIG";

struct UsageError : Error {
  using Error::Error;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool looks_like_coqa(const std::string& content) {
  auto first = content.find_first_not_of(" \t\r\n");
  if (first == std::string::npos || content[first] != '{') return false;
  try {
    auto j = nlohmann::json::parse(content);
    return j.is_object() && j.contains("data");
  } catch (const nlohmann::json::parse_error&) {
    return false;  // JSONL
  }
}

std::vector<Passage> load_passages(const std::string& path) {
  auto content = slurp(path);
  if (looks_like_coqa(content)) {
    std::vector<Passage> out;
    auto file = parse_coqa(content);
    for (const auto& w : file.warnings) std::cerr << "warning: " << w << '\n';
    for (auto& s : file.stories) out.push_back(std::move(s.passage));
    return out;
  }
  return parse_passages_jsonl(content);
}

std::string timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// backends

struct BackendSet {
  std::unique_ptr<SpanExtractorBackend> extractor;
  std::unique_ptr<Seq2SeqBackend> generator;
  std::unique_ptr<AnswerabilityScorer> scorer;
  ojson ids = ojson::object();
};

// hash[:salt] | overlap | const:p | table:path
std::unique_ptr<AnswerabilityScorer> make_scorer(const std::string& desc, double table_default = 0.0) {
  auto colon = desc.find(':');
  std::string kind = desc.substr(0, colon);
  std::string arg = colon == std::string::npos ? "" : desc.substr(colon + 1);
  if (kind == "hash") return std::make_unique<HashScorer>(arg.empty() ? 0 : parse_number<std::uint64_t>("scorer", arg));
  if (kind == "overlap") return std::make_unique<OverlapScorer>();
  if (kind == "const") return std::make_unique<ConstantScorer>(parse_number<double>("scorer", arg));
  if (kind == "table") {
    // question <TAB> sentence index <TAB> probability
    auto s = std::make_unique<MockScorer>(table_default);
    std::istringstream in(slurp(arg));
    std::string line;
    for (int n = 1; std::getline(in, line); ++n) {
      if (trim(line).empty() || line[0] == '#') continue;
      auto t1 = line.find('\t'), t2 = line.find('\t', t1 == std::string::npos ? t1 : t1 + 1);
      if (t1 == std::string::npos || t2 == std::string::npos)
        throw ConfigError(arg + ":" + std::to_string(n) + ": expected question<TAB>index<TAB>prob");
      s->set(line.substr(0, t1), parse_number<std::size_t>("index", line.substr(t1 + 1, t2 - t1 - 1)),
             parse_number<double>("prob", trim(line.substr(t2 + 1))));
    }
    return s;
  }
  if (kind == "model")
    throw ConfigError("scorer '" + desc + "': trained model adapters are not built into this binary");
  throw ConfigError("unknown scorer '" + desc + "' (hash[:salt]|overlap|const:p|table:path)");
}

BackendSet make_backends(const std::string& desc) {
  KeyValues kv;
  if (desc != "mock") kv = parse_key_values(slurp(desc), desc);
  auto get = [&](const std::string& k, std::string def) {
    auto it = kv.find(k);
    return it == kv.end() ? def : it->second;
  };
  for (const auto& [k, v] : kv)
    if (k != "extractor" && k != "generator" && k != "scorer" && k != "scorer_default" &&
        k != "open_template" && k != "closed_template")
      throw ConfigError(desc + ": unknown backend key '" + k + "'");

  BackendSet b;
  auto ex = get("extractor", "rule");
  if (ex != "rule") throw ConfigError("unknown extractor '" + ex + "' (rule)");
  b.extractor = std::make_unique<CapitalizedRunExtractor>();

  auto gen = get("generator", "template");
  if (gen != "template") throw ConfigError("unknown generator '" + gen + "' (template)");
  b.generator = std::make_unique<TemplateSeq2Seq>(get("open_template", "what about {span}?"),
                                                  get("closed_template", "is it true that {span}?"));
  auto sc = get("scorer", "hash");
  b.scorer = make_scorer(sc, parse_number<double>("scorer_default", get("scorer_default", "0")));
  b.ids = {{"extractor", b.extractor->name()}, {"generator", b.generator->name()}, {"scorer", sc}};
  return b;
}

// ---------------------------------------------------------------------------
// commands

struct SynthesizeArgs {
  std::string passages, config, backends = "mock", out, ratio, level;
  std::optional<double> tau;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
};

void print_stats(const DatasetStats& s, std::optional<std::size_t> expanded = std::nullopt) {
  std::cout << render_stats_table(s, expanded);
}

int cmd_synthesize(const SynthesizeArgs& a) {
  GenerationConfig cfg;
  std::string config_path = a.config;
  if (config_path.empty())
    if (const char* env = std::getenv(kConfigEnv)) config_path = env;
  if (!config_path.empty()) {
    if (!std::filesystem::exists(config_path)) throw IoError("config file not found: " + config_path);
    cfg.apply(parse_key_values(slurp(config_path), config_path));
  }
  if (!a.ratio.empty()) cfg.ratio = TypeRatio::parse(a.ratio);
  if (!a.level.empty()) cfg.ac_level = parse_ac_level(a.level);
  if (a.tau) cfg.tau = *a.tau;
  if (a.seed) cfg.seed = *a.seed;
  if (a.workers) cfg.workers = *a.workers;
  cfg.validate();

  auto passages = load_passages(a.passages);
  auto be = make_backends(a.backends);
  Backends backends{be.extractor.get(), be.generator.get(),
                    cfg.ac_level == AcLevel::none ? nullptr : be.scorer.get()};
  auto r = synthesize_dataset(passages, backends, cfg);
  write_dataset(r.dataset, a.out);

  auto stats = compute_stats(r.dataset);
  std::size_t kept_turns = 0, discarded = 0;
  for (const auto& c : r.dataset.conversations) {
    kept_turns += c.pairs.size();
    discarded += c.discarded.size();
  }
  ojson m;
  m["command"] = "synthesize";
  m["config"] = ojson::object();
  for (const auto& [k, v] : cfg.to_key_values()) m["config"][k] = v;
  m["seed"] = cfg.seed;
  m["inputs"] = {{"passages", a.passages}, {"config", config_path}, {"backends", a.backends}};
  m["outputs"] = {{"dataset", a.out}};
  m["backends"] = be.ids;
  m["timestamp"] = timestamp();
  m["counts"] = {{"passages", passages.size()},
                 {"conversations", r.dataset.conversations.size()},
                 {"pairs", kept_turns},
                 {"open", stats.count(AnswerType::open)},
                 {"yes", stats.count(AnswerType::yes)},
                 {"no", stats.count(AnswerType::no)},
                 {"unknown", stats.count(AnswerType::unknown)},
                 {"discarded", discarded},
                 {"attempts", r.attempts},
                 {"rejected", r.rejected},
                 {"errors", r.errors.size()}};
  write_text_file(a.out + ".manifest.json", m.dump(2) + "\n");

  print_stats(stats);
  std::cout << "conversations " << r.dataset.conversations.size() << ", discarded " << discarded
            << ", rejected " << r.rejected << "\n";
  for (const auto& e : r.errors) std::cerr << "error: " << e.passage_id << ": " << e.message << '\n';
  return r.errors.empty() ? 0 : 1;
}

struct FilterArgs {
  std::string in, passages, out, scorer = "hash", level = "full";
  double tau = 0.5;
};

// Re-runs the classifier over every retained pair. A pair that was already
// unknownized cannot recover its answer, so a keep verdict leaves it unknown.
int cmd_filter(const FilterArgs& a) {
  auto data = read_dataset(a.in);
  std::map<std::string, Passage, std::less<>> passages;
  for (auto& p : load_passages(a.passages)) passages.emplace(p.id, std::move(p));
  auto scorer = make_scorer(a.scorer);
  ClassifyOptions opts{a.tau, parse_ac_level(a.level)};
  if (opts.level == AcLevel::none) throw ConfigError("filter needs --level context|passage|full");

  Dataset out;
  std::size_t kept = 0, unknown = 0, discarded = 0;
  for (const auto& conv : data.conversations) {
    auto pit = passages.find(conv.passage_id);
    if (pit == passages.end()) throw SchemaError("passage '" + conv.passage_id + "' not in " + a.passages);
    Conversation nc{conv.passage_id, conv.domain, {}, conv.discarded};
    for (const auto& p : conv.pairs) {
      QAPair c = p;
      c.verdict.reset();
      c.turn = static_cast<int>(nc.pairs.size()) + 1;
      auto v = classify(*scorer, c, pit->second, serialize_history(nc), opts);
      if (p.status == PairStatus::unknownized && v.outcome == Outcome::keep) {
        c.verdict = v;
      } else {
        c.status = PairStatus::pending;
        c = apply_verdict(std::move(c), v);
      }
      if (c.status == PairStatus::discarded) {
        ++discarded;
        nc.discarded.push_back(std::move(c));
      } else {
        ++(c.status == PairStatus::kept ? kept : unknown);
        nc.pairs.push_back(std::move(c));
      }
    }
    if (!nc.pairs.empty()) out.conversations.push_back(std::move(nc));
  }
  write_dataset(out, a.out);
  std::cout << "kept " << kept << ", unknown " << unknown << ", discarded " << discarded << "\n";
  print_stats(compute_stats(out));
  return 0;
}

struct ClfArgs {
  std::string qnli, coqa, out;
};

int cmd_build_clf_data(const ClfArgs& a) {
  if (a.qnli.empty() && a.coqa.empty()) throw UsageError("give --qnli and/or --coqa");
  std::string lines;
  if (!a.qnli.empty()) {
    auto b = build_qnli_examples(parse_qnli_tsv(slurp(a.qnli)));
    for (const auto& e : b.examples) lines += example_to_json(e).dump() + "\n";
    std::cout << "qnli examples " << b.examples.size() << ", skipped " << b.skipped << "\n";
  }
  if (!a.coqa.empty()) {
    auto file = load_coqa(a.coqa);
    auto b = build_coqa_examples(file.stories);
    for (const auto& w : b.warnings) std::cerr << "warning: " << w << '\n';
    for (const auto& e : b.examples) lines += example_to_json(e).dump() + "\n";
    std::cout << "coqa positives " << b.positives << ", unanswerable turns " << b.unanswerable_turns
              << ", negatives " << b.negatives << "\n";
  }
  write_text_file(a.out, lines);
  return 0;
}

struct EvaluateArgs {
  std::vector<std::string> pred, label;
  std::string gold, data = "Synthetic";
  bool by_type = false;
};

int cmd_evaluate(const EvaluateArgs& a) {
  if (!a.label.empty() && a.label.size() != a.pred.size())
    throw UsageError("--label must be given once per --pred");
  auto file = load_coqa(a.gold);
  std::vector<GoldConversation> gold;
  for (const auto& s : file.stories) gold.push_back(s.gold);
  std::vector<F1Row> rows;
  for (std::size_t k = 0; k < a.pred.size(); ++k) {
    auto report = evaluate_cqa(parse_predictions(slurp(a.pred[k])), gold);
    if (report.missing) std::cerr << "warning: " << a.pred[k] << ": " << report.missing << " turns unanswered\n";
    rows.push_back({a.data, a.label.empty() ? a.pred[k] : a.label[k], std::move(report)});
  }
  std::cout << (a.by_type ? render_type_f1_table(rows) : render_domain_f1_table(rows));
  return 0;
}

struct StatsArgs {
  std::string in;
  bool expand = false;
};

int cmd_stats(const StatsArgs& a) {
  auto content = slurp(a.in);
  if (looks_like_coqa(content)) {
    auto file = parse_coqa(content);
    Dataset d;
    for (const auto& s : file.stories) d.conversations.push_back(gold_to_conversation(s));
    std::optional<std::size_t> expanded;
    if (a.expand) expanded = build_coqa_examples(file.stories).negatives;
    print_stats(compute_stats(d), expanded);
    return 0;
  }
  if (a.expand) throw UsageError("--expand needs a CoQA file");
  print_stats(compute_stats(parse_dataset(content)));
  return 0;
}

struct SampleArgs {
  std::vector<std::string> in, passages;
  std::size_t n = 100;
  std::uint64_t seed = 42;
  std::string out, key;
};

// --in label=path
std::pair<std::string, std::string> labeled_path(const std::string& s) {
  auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("expected label=path, got '" + s + "'");
  return {s.substr(0, eq), s.substr(eq + 1)};
}

int cmd_sample_eval(const SampleArgs& a) {
  std::map<std::string, std::string, std::less<>> texts;
  for (const auto& p : a.passages)
    for (auto& x : load_passages(p)) texts[x.id] = x.text;
  std::vector<LabeledDataset> ds;
  for (const auto& s : a.in) {
    auto [label, path] = labeled_path(s);
    auto content = slurp(path);
    LabeledDataset l{label, {}, {}};
    if (looks_like_coqa(content)) {
      for (const auto& st : parse_coqa(content).stories) {
        auto c = gold_to_conversation(st);
        // unanswerable gold turns stay in the pool
        l.passages[st.passage.id] = st.passage.text;
        l.dataset.conversations.push_back(std::move(c));
      }
    } else {
      l.dataset = parse_dataset(content);
      for (const auto& c : l.dataset.conversations)
        if (auto it = texts.find(c.passage_id); it != texts.end()) l.passages[c.passage_id] = it->second;
    }
    ds.push_back(std::move(l));
  }
  auto r = sample_for_human_eval(ds, a.n, a.seed);
  std::string lines;
  for (const auto& p : r.packets) lines += packet_to_json(p).dump() + "\n";
  write_text_file(a.out, lines);
  ojson key = ojson::object();
  for (const auto& [id, label] : r.key) key[id] = label;
  write_text_file(a.key, key.dump(2) + "\n");
  std::cout << "wrote " << r.packets.size() << " packets to " << a.out << "\n";
  return 0;
}

struct AggregateArgs {
  std::string annotations, key;
};

int cmd_aggregate_eval(const AggregateArgs& a) {
  auto records = parse_annotations(slurp(a.annotations));
  std::vector<std::pair<std::string, HumanEvalTable>> columns;
  if (a.key.empty()) {
    columns.emplace_back("All", aggregate_annotations(records));
  } else {
    auto key = nlohmann::json::parse(slurp(a.key));
    std::map<std::string, std::vector<AnnotationRecord>> by_label;
    for (const auto& r : records) {
      if (!key.contains(r.example_id)) throw SchemaError(r.example_id + ": not in key " + a.key);
      by_label[key[r.example_id].get<std::string>()].push_back(r);
    }
    for (const auto& [label, rs] : by_label) columns.emplace_back(label, aggregate_annotations(rs));
  }
  std::cout << render_human_eval_table(columns);
  return 0;
}

struct AcRecallArgs {
  std::vector<std::string> coqa, label;
  std::string scorer = "overlap";
  double tau = 0.5;
};

// Scores each classifier example built from a CoQA file and reports
// per-class recall.
int cmd_ac_recall(const AcRecallArgs& a) {
  if (!a.label.empty() && a.label.size() != a.coqa.size())
    throw UsageError("--label must be given once per --coqa");
  auto scorer = make_scorer(a.scorer);
  std::vector<std::pair<std::string, AcRecall>> rows;
  for (std::size_t k = 0; k < a.coqa.size(); ++k) {
    auto file = load_coqa(a.coqa[k]);
    auto b = build_coqa_examples(file.stories);
    std::vector<AcOutcome> outcomes;
    for (const auto& e : b.examples) {
      double p = score(*scorer, {e.history_text, e.question, e.sentence, 0});
      outcomes.push_back({p > a.tau, e.label == ClfLabel::answerable});
    }
    rows.emplace_back(a.label.empty() ? a.coqa[k] : a.label[k], ac_recall(outcomes));
  }
  std::cout << render_ac_recall_table(rows);
  return 0;
}

template <class F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const UsageError& e) {
    std::cerr << "mcqa: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "mcqa: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "mcqa: config: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "mcqa: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "mcqa: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthesize and evaluate multi-type conversational QA data"};
  app.require_subcommand(1);
  int rc = 0;

  SynthesizeArgs syn;
  auto* s = app.add_subcommand("synthesize", "Generate conversations from passages");
  s->add_option("--passages", syn.passages, "CoQA JSON or passages JSONL")->required();
  s->add_option("--config", syn.config, std::string("key = value config (default: $") + kConfigEnv + ")");
  s->add_option("--backends", syn.backends, "'mock' or a backend key = value file");
  s->add_option("--out", syn.out, "output dataset (JSONL)")->required();
  s->add_option("--ratio", syn.ratio, "open:yes:no weights or 'open-only'");
  s->add_option("--level", syn.level, "answerability check: none|context|passage|full");
  s->add_option("--tau", syn.tau, "classifier threshold");
  s->add_option("--seed", syn.seed, "random seed");
  s->add_option("--workers", syn.workers, "worker threads (0 = all cores)");
  s->callback([&] { rc = guarded([&] { return cmd_synthesize(syn); }); });

  FilterArgs fil;
  auto* f = app.add_subcommand("filter", "Re-run answerability classification on a dataset");
  f->add_option("--in", fil.in)->required();
  f->add_option("--passages", fil.passages, "passages the dataset was built from")->required();
  f->add_option("--out", fil.out)->required();
  f->add_option("--tau", fil.tau);
  f->add_option("--scorer", fil.scorer, "hash[:salt]|overlap|const:p|table:path");
  f->add_option("--level", fil.level, "context|passage|full");
  f->callback([&] { rc = guarded([&] { return cmd_filter(fil); }); });

  ClfArgs clf;
  auto* b = app.add_subcommand("build-clf-data", "Build answerability classifier examples");
  b->add_option("--qnli", clf.qnli, "QNLI TSV");
  b->add_option("--coqa", clf.coqa, "CoQA JSON");
  b->add_option("--out", clf.out)->required();
  b->callback([&] { rc = guarded([&] { return cmd_build_clf_data(clf); }); });

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Token F1 of CQA predictions against CoQA gold");
  e->add_option("--pred", ev.pred, "predictions JSONL (repeatable)")->required();
  e->add_option("--label", ev.label, "row label per --pred");
  e->add_option("--data", ev.data, "training data column value");
  e->add_option("--gold", ev.gold, "CoQA JSON")->required();
  e->add_flag("--by-type", ev.by_type, "split by answer type instead of domain");
  e->callback([&] { rc = guarded([&] { return cmd_evaluate(ev); }); });

  StatsArgs st;
  auto* t = app.add_subcommand("stats", "Answer-type distribution of a CoQA or synthetic file");
  t->add_option("--in", st.in)->required();
  t->add_flag("--expand", st.expand, "show negative-sampling expansion of unanswerable turns");
  t->callback([&] { rc = guarded([&] { return cmd_stats(st); }); });

  SampleArgs sa;
  auto* sm = app.add_subcommand("sample-eval", "Blind sample for human evaluation");
  sm->add_option("--in", sa.in, "label=path (repeatable)")->required();
  sm->add_option("--passages", sa.passages, "passage files for synthetic inputs");
  sm->add_option("--n", sa.n, "pairs per dataset");
  sm->add_option("--seed", sa.seed);
  sm->add_option("--out", sa.out, "packets JSONL")->required();
  sm->add_option("--key", sa.key, "id -> label key (JSON)")->required();
  sm->callback([&] { rc = guarded([&] { return cmd_sample_eval(sa); }); });

  AggregateArgs ag;
  auto* g = app.add_subcommand("aggregate-eval", "Aggregate human-evaluation annotations");
  g->add_option("--annotations", ag.annotations)->required();
  g->add_option("--key", ag.key, "key written by sample-eval");
  g->callback([&] { rc = guarded([&] { return cmd_aggregate_eval(ag); }); });

  AcRecallArgs ac;
  auto* r = app.add_subcommand("ac-recall", "Answerability recall of a scorer on CoQA examples");
  r->add_option("--coqa", ac.coqa, "CoQA JSON (repeatable)")->required();
  r->add_option("--label", ac.label, "row label per --coqa");
  r->add_option("--scorer", ac.scorer);
  r->add_option("--tau", ac.tau);
  r->callback([&] { rc = guarded([&] { return cmd_ac_recall(ac); }); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return 2;
  }
  return rc;
}
