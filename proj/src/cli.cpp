#include "tick/cli.hpp"

#include <csignal>
#include <fstream>
#include <map>
#include <memory>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "tick/annotation.hpp"
#include "tick/backends.hpp"
#include "tick/checklist_gen.hpp"
#include "tick/evaluator.hpp"
#include "tick/harness_io.hpp"
#include "tick/improve.hpp"
#include "tick/metrics.hpp"
#include "tick/serialize.hpp"
#include "tick/tagging.hpp"
#include "tick/text_util.hpp"

namespace tick {

namespace fs = std::filesystem;

namespace {

struct Args {
  std::string command;
  std::vector<std::string> argv;
  std::string dataset;
  std::string config;
  std::string judge;
  std::string model;
  std::string truth_judge;
  std::vector<std::string> protocols{"tick"};
  int k = 1;
  bool no_cot = false;
  int max_iters = 4;
  int n = 8;
  std::string scorer = "stick";
  std::string feedback = "checklist";
  std::string reference = "human";
  std::string bind = "127.0.0.1:8080";
  std::size_t multiplicity = 3;
  std::string annotations;
  std::string level = "interval";
  std::string categories;
  bool evaluate = false;
  std::string run_id;
  std::string kind;
  std::string out;
};

struct Environment {
  nlohmann::json config = nlohmann::json::object();
  std::unique_ptr<Gateway> gateway;
  TemplateCatalog catalog = TemplateCatalog::builtin();
  fs::path runs_dir = "runs";
};

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

Environment load_environment(const Args& args) {
  Environment env;
  fs::path base = fs::current_path();
  if (!args.config.empty()) {
    std::ifstream in(args.config);
    if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open config " + args.config);
    try {
      env.config = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kParseError, "config " + args.config + ": " + e.what());
    }
    base = fs::absolute(args.config).parent_path();
  }
  const auto& c = env.config;

  GatewayOptions opts;
  opts.cache_enabled = c.value("cache", true);
  if (c.contains("cache_dir")) opts.cache_dir = resolve(base, c.at("cache_dir").get<std::string>());
  if (c.contains("budget")) opts.max_requests = c.at("budget").get<std::uint64_t>();
  opts.max_in_flight = c.value("max_in_flight", opts.max_in_flight);
  opts.max_attempts = c.value("max_attempts", opts.max_attempts);
  opts.initial_backoff = std::chrono::milliseconds(c.value("initial_backoff_ms", opts.initial_backoff.count()));
  env.gateway = std::make_unique<Gateway>(opts);

  if (c.contains("scripted")) {
    const auto& s = c.at("scripted");
    if (s.is_string()) {
      env.gateway->register_backend("scripted", ScriptedBackend::from_file(resolve(base, s.get<std::string>())));
    } else {
      for (const auto& [name, path] : s.items()) {
        env.gateway->register_backend(name, ScriptedBackend::from_file(resolve(base, path.get<std::string>())));
      }
    }
  }
  if (c.contains("replay")) {
    for (const auto& [name, path] : c.at("replay").items()) {
      env.gateway->register_backend(name, std::make_shared<ReplayBackend>(resolve(base, path.get<std::string>())));
    }
  }
  if (c.contains("providers")) register_providers(*env.gateway, parse_providers(c));
  if (c.contains("templates_dir")) {
    env.catalog = TemplateCatalog::with_overrides(resolve(base, c.at("templates_dir").get<std::string>()));
  }
  if (!args.out.empty()) {
    env.runs_dir = args.out;
  } else if (c.contains("runs_dir")) {
    env.runs_dir = resolve(base, c.at("runs_dir").get<std::string>());
  }
  return env;
}

void require_model(const Environment& env, const std::string& model, const char* flag) {
  if (model.empty()) throw Error(ErrorCode::kInvalidArgument, std::string(flag) + " is required");
  if (!env.gateway->has_model(model)) throw Error(ErrorCode::kUnknownModel, "model '" + model + "' is not configured");
}

/// Collects artifacts; each one is stamped with the digest of the prompts
/// issued since the current item began.
class RunBuilder {
 public:
  RunBuilder(Environment& env, const Args& args) : env_(env) {
    run_.config = {{"command", args.command}, {"argv", args.argv}, {"config", env.config}};
  }

  void begin_item() { mark_ = env_.gateway->call_log_size(); }

  void add(std::string kind, std::string item_id, nlohmann::json payload) {
    const auto log = env_.gateway->call_log();
    std::vector<std::string> slice(log.begin() + static_cast<std::ptrdiff_t>(std::min(mark_, log.size())), log.end());
    run_.artifacts.push_back(
        Artifact{std::move(kind), std::move(item_id), digest_prompt_hashes(std::move(slice)), std::move(payload)});
  }

  std::string persist(std::ostream& out) {
    run_.ledger = encode(env_.gateway->ledger());
    const auto id = RunStore(env_.runs_dir).persist(run_);
    out << id << "\n";
    return id;
  }

 private:
  Environment& env_;
  RunRecord run_;
  std::size_t mark_ = 0;
};

EvalConfig eval_config(const Args& args, const std::string& judge) {
  EvalConfig cfg;
  cfg.judge_model_id = judge;
  cfg.use_cot = !args.no_cot;
  cfg.k = args.k;
  cfg.validate();
  return cfg;
}

std::vector<DatasetRecord> dataset(const Args& args) {
  if (args.dataset.empty()) throw Error(ErrorCode::kInvalidArgument, "--dataset is required");
  auto records = load_dataset(args.dataset);
  if (records.empty()) throw Error(ErrorCode::kEmptyInput, "dataset " + args.dataset + " has no records");
  return records;
}

/// Dataset checklist when present, otherwise one generated by `model`.
std::shared_ptr<const Checklist> checklist_for(Environment& env, const DatasetRecord& record, const std::string& model,
                                               RunBuilder& builder) {
  auto c = record.checklist ? std::make_shared<const Checklist>(*record.checklist)
                            : std::make_shared<const Checklist>(
                                  ChecklistGenerator(*env.gateway, env.catalog).generate(record.instruction, model));
  builder.add("checklist", record.instruction.id, encode(*c));
  return c;
}

PreferenceLabel compare_scores(int a, int b) {
  if (a > b) return PreferenceLabel::kWin;
  if (a < b) return PreferenceLabel::kLoss;
  return PreferenceLabel::kTie;
}

int cmd_gen_checklist(const Args& args, std::ostream& out) {
  auto env = load_environment(args);
  require_model(env, args.judge, "--judge");
  const auto records = dataset(args);
  RunBuilder builder(env, args);
  ChecklistGenerator generator(*env.gateway, env.catalog);
  for (const auto& r : records) {
    builder.begin_item();
    builder.add("checklist", r.instruction.id, encode(generator.generate(r.instruction, args.judge)));
  }
  builder.persist(out);
  return kExitOk;
}

int cmd_evaluate(const Args& args, std::ostream& out) {
  auto env = load_environment(args);
  require_model(env, args.judge, "--judge");
  const auto records = dataset(args);
  const Evaluator evaluator(*env.gateway, env.catalog, eval_config(args, args.judge));
  RunBuilder builder(env, args);
  std::size_t evaluated = 0;
  for (const auto& r : records) {
    if (r.responses.empty()) {
      spdlog::warn("'{}' has no responses; skipped", r.instruction.id);
      continue;
    }
    builder.begin_item();
    const auto checklist = checklist_for(env, r, args.judge, builder);
    for (const auto& [model, text] : r.responses) {
      const auto e = evaluator.evaluate_checklist(r.instruction, text, *checklist, model);
      nlohmann::json payload{{"label", model}, {"evaluation", encode(e)}};
      if (r.gold_answers && r.checklist) {
        payload["question_accuracy"] = question_level_accuracy(e.records(), *r.gold_answers);
      }
      builder.add("evaluation", r.instruction.id, std::move(payload));
      ++evaluated;
    }
  }
  if (evaluated == 0) throw Error(ErrorCode::kEmptyInput, "no responses to evaluate");
  builder.persist(out);
  return kExitOk;
}

int cmd_prefer(const Args& args, std::ostream& out) {
  auto env = load_environment(args);
  require_model(env, args.judge, "--judge");
  const auto records = dataset(args);
  const Evaluator evaluator(*env.gateway, env.catalog, eval_config(args, args.judge));
  RunBuilder builder(env, args);
  std::map<std::string, std::shared_ptr<const Checklist>> checklists;
  std::size_t judged = 0;
  for (const auto& r : records) {
    if (r.responses.size() < 2) {
      spdlog::warn("'{}' has fewer than two responses; skipped", r.instruction.id);
      continue;
    }
    const auto& [model_a, a] = r.responses[0];
    const auto& [model_b, b] = r.responses[1];
    for (const auto& protocol : args.protocols) {
      builder.begin_item();
      nlohmann::json payload{{"protocol", protocol}, {"response_a", model_a}, {"response_b", model_b}};
      auto checklist = [&] {
        auto& c = checklists[r.instruction.id];
        if (!c) c = checklist_for(env, r, args.judge, builder);
        return c;
      };
      PreferenceLabel prediction;
      if (protocol == "tick") {
        prediction = evaluator.tick_preference(r.instruction, a, b, *checklist());
      } else if (protocol == "preference") {
        prediction = evaluator.judge_preference_direct(r.instruction, a, b);
      } else if (protocol == "direct-score") {
        const int sa = evaluator.direct_score(r.instruction, a);
        const int sb = evaluator.direct_score(r.instruction, b);
        payload["scores"] = {sa, sb};
        prediction = compare_scores(sa, sb);
      } else {
        const auto c = checklist();
        const int sa = evaluator.check_then_score(r.instruction, a, *c);
        const int sb = evaluator.check_then_score(r.instruction, b, *c);
        payload["scores"] = {sa, sb};
        prediction = compare_scores(sa, sb);
      }
      payload["prediction"] = to_string(prediction);
      if (r.human_preferences && !r.human_preferences->empty()) {
        double sum = 0.0;
        for (int v : *r.human_preferences) sum += v;
        payload["human"] = to_string(bin_preference(sum / static_cast<double>(r.human_preferences->size())));
      }
      builder.add("preference", r.instruction.id, std::move(payload));
      ++judged;
    }
  }
  if (judged == 0) throw Error(ErrorCode::kEmptyInput, "no record carries two responses");
  builder.persist(out);
  return kExitOk;
}

int cmd_score(const Args& args, std::ostream& out, bool with_checklist) {
  auto env = load_environment(args);
  require_model(env, args.judge, "--judge");
  const auto records = dataset(args);
  const Evaluator evaluator(*env.gateway, env.catalog, eval_config(args, args.judge));
  RunBuilder builder(env, args);
  std::size_t scored = 0;
  for (const auto& r : records) {
    if (r.responses.empty()) continue;
    builder.begin_item();
    std::shared_ptr<const Checklist> checklist;
    if (with_checklist) checklist = checklist_for(env, r, args.judge, builder);
    for (const auto& [model, text] : r.responses) {
      const int score = with_checklist ? evaluator.check_then_score(r.instruction, text, *checklist)
                                       : evaluator.direct_score(r.instruction, text);
      builder.add("score", r.instruction.id,
                  {{"protocol", with_checklist ? "check-then-score" : "direct-score"}, {"label", model}, {"score", score}});
      ++scored;
    }
  }
  if (scored == 0) throw Error(ErrorCode::kEmptyInput, "no responses to score");
  builder.persist(out);
  return kExitOk;
}

int cmd_refine(const Args& args, std::ostream& out) {
  auto env = load_environment(args);
  const std::string model = args.model.empty() ? args.judge : args.model;
  require_model(env, model, "--judge");
  const auto records = dataset(args);
  const auto cfg = eval_config(args, model);
  SelfImprover improver(*env.gateway, env.catalog);
  const Evaluator evaluator(*env.gateway, env.catalog, cfg);
  RunBuilder builder(env, args);
  for (const auto& r : records) {
    builder.begin_item();
    RefinementTrace trace;
    if (args.feedback == "checklist") {
      trace = improver.stick_refine(r.instruction, model, cfg, args.max_iters);
    } else {
      auto checklist = std::make_shared<const Checklist>(
          ChecklistGenerator(*env.gateway, env.catalog).generate(r.instruction, model));
      trace = improver.vanilla_self_refine(r.instruction, model, args.max_iters, &evaluator, checklist);
    }
    builder.add("trace", r.instruction.id, encode(trace));
  }
  builder.persist(out);
  return kExitOk;
}

int cmd_bestofn(const Args& args, std::ostream& out) {
  auto env = load_environment(args);
  const std::string model = args.model.empty() ? args.judge : args.model;
  require_model(env, model, "--judge");
  if (!args.truth_judge.empty()) require_model(env, args.truth_judge, "--truth-judge");
  const auto scorer = parse_scorer_kind(args.scorer);
  if (scorer == ScorerKind::kExternal) {
    throw Error(ErrorCode::kInvalidArgument, "the external scorer is only available through the library");
  }
  const auto records = dataset(args);
  SelfImprover improver(*env.gateway, env.catalog);
  BestOfNOptions options;
  options.eval = eval_config(args, model);
  RunBuilder builder(env, args);
  for (const auto& r : records) {
    builder.begin_item();
    const auto set = improver.best_of_n(r.instruction, model, args.n, scorer, options);
    nlohmann::json payload{{"set", encode(set)}};
    if (!args.truth_judge.empty()) {
      const Evaluator truth(*env.gateway, env.catalog, eval_config(args, args.truth_judge));
      const auto checklist = checklist_for(env, r, args.truth_judge, builder);
      std::vector<double> scores;
      for (std::size_t i = 0; i < set.candidates.size(); ++i) {
        scores.push_back(truth.evaluate_checklist(r.instruction, set.candidates[i].text, *checklist,
                                                  "candidate" + std::to_string(i))
                             .pass_rate()
                             .to_double());
      }
      payload["true_scores"] = scores;
    }
    builder.add("candidate_set", r.instruction.id, std::move(payload));
  }
  builder.persist(out);
  return kExitOk;
}

nlohmann::json similarity_payload(const std::string& label, const Checklist& hypothesis, const Checklist& reference) {
  const auto h = flatten_checklist(hypothesis.texts());
  const auto ref = flatten_checklist(reference.texts());
  const auto s = text_similarity(h, ref);
  return {{"label", label},
          {"bleu", s.bleu},
          {"rouge1", s.rouge1_f1},
          {"rouge2", s.rouge2_f1},
          {"rougeL", s.rougeL_f1},
          {"count_hypothesis", hypothesis.size()},
          {"count_reference", reference.size()}};
}

int cmd_similarity(const Args& args, std::ostream& out) {
  auto env = load_environment(args);
  require_model(env, args.judge, "--judge");
  const auto records = dataset(args);
  ChecklistGenerator generator(*env.gateway, env.catalog);
  RunBuilder builder(env, args);
  std::size_t compared = 0;
  for (const auto& r : records) {
    builder.begin_item();
    if (args.reference == "human") {
      if (!r.checklist) {
        spdlog::warn("'{}' has no reference checklist; skipped", r.instruction.id);
        continue;
      }
      const auto generated = generator.generate(r.instruction, args.judge);
      builder.add("checklist", r.instruction.id, encode(generated));
      builder.add("similarity", r.instruction.id, similarity_payload("generated-vs-reference", generated, *r.checklist));
    } else {
      const auto [first, second] = generator.generate_pair(r.instruction, args.judge);
      builder.add("similarity", r.instruction.id, similarity_payload("sample-vs-sample", first, second));
    }
    ++compared;
  }
  if (compared == 0) throw Error(ErrorCode::kEmptyInput, "no record carries a reference checklist");
  builder.persist(out);
  return kExitOk;
}

int cmd_agree(const Args& args, std::ostream& out) {
  auto env = load_environment(args);
  if (args.annotations.empty()) throw Error(ErrorCode::kInvalidArgument, "--annotations is required");
  std::ifstream in(args.annotations);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open " + args.annotations);
  std::map<std::string, std::vector<AnnotationRecord>> by_protocol;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (trim(line).empty()) continue;
    try {
      auto rec = decode<AnnotationRecord>(nlohmann::json::parse(line));
      rec.validate();
      by_protocol[std::string(to_string(rec.protocol))].push_back(std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParseError, e.what(), n);
    } catch (const Error& e) {
      throw Error(e.code(), e.what(), n);
    }
  }
  if (by_protocol.empty()) throw Error(ErrorCode::kEmptyInput, "no annotations in " + args.annotations);
  const auto level = parse_measurement_level(args.level);
  RunBuilder builder(env, args);
  for (const auto& [protocol, recs] : by_protocol) {
    std::map<std::string, std::size_t> rows, cols;
    for (const auto& a : recs) {
      rows.emplace(a.item_id, rows.size());
      cols.emplace(a.annotator_id, cols.size());
    }
    RatingMatrix m(rows.size(), std::vector<std::optional<double>>(cols.size()));
    double sum = 0.0;
    for (const auto& a : recs) {
      m[rows[a.item_id]][cols[a.annotator_id]] = a.score;
      sum += a.score;
    }
    nlohmann::json payload{{"protocol", protocol},
                           {"level", to_string(level)},
                           {"items", rows.size()},
                           {"records", recs.size()},
                           {"mean_score", sum / static_cast<double>(recs.size())}};
    try {
      payload["alpha"] = krippendorff_alpha(m, level);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInsufficientData) throw;
      payload["alpha"] = nullptr;
    }
    builder.add("alpha", protocol, std::move(payload));
  }
  builder.persist(out);
  return kExitOk;
}

std::vector<std::string> read_categories(const std::string& path) {
  if (path.empty()) return default_categories();
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (auto t = trim(line); !t.empty()) out.emplace_back(t);
  }
  return out;
}

int cmd_tag_categories(const Args& args, std::ostream& out) {
  auto env = load_environment(args);
  require_model(env, args.judge, "--judge");
  const auto records = dataset(args);
  const auto categories = read_categories(args.categories);
  RunBuilder builder(env, args);
  ChecklistGenerator generator(*env.gateway, env.catalog);

  std::vector<Checklist> checklists;
  for (const auto& r : records) {
    checklists.push_back(r.checklist ? *r.checklist : generator.generate(r.instruction, args.judge));
  }
  builder.begin_item();
  const auto outcome = tag_categories(*env.gateway, env.catalog, checklists, args.judge, categories);

  std::vector<std::set<std::string>> predicted, gold;
  std::vector<Checklist> tagged;
  for (const auto& c : checklists) {
    std::vector<ChecklistQuestion> questions = c.questions();
    for (auto& q : questions) {
      const auto& t = outcome.tags.at(QuestionRef{c.instruction_id(), q.index});
      if (!q.categories.empty()) {
        predicted.push_back(t.labels);
        gold.push_back(q.categories);
      }
      q.categories = t.labels;
    }
    tagged.emplace_back(c.instruction_id(), std::move(questions), c.provenance());
    builder.add("checklist", c.instruction_id(), encode(tagged.back()));
  }
  nlohmann::json summary{{"questions", outcome.tags.size()},
                         {"dropped_unknown", outcome.dropped_unknown},
                         {"unparseable", outcome.unparseable}};
  if (!gold.empty()) {
    const auto prf = classification_prf(predicted, gold);
    summary["gold_questions"] = gold.size();
    summary["precision"] = prf.precision;
    summary["recall"] = prf.recall;
    summary["f1"] = prf.f1;
  }
  builder.add("tagging", "all", summary);

  if (args.evaluate) {
    const Evaluator evaluator(*env.gateway, env.catalog, eval_config(args, args.judge));
    for (std::size_t i = 0; i < records.size(); ++i) {
      for (const auto& [model, text] : records[i].responses) {
        builder.begin_item();
        const auto e = evaluator.evaluate_checklist(records[i].instruction, text, tagged[i], model);
        builder.add("evaluation", records[i].instruction.id, {{"label", model}, {"evaluation", encode(e)}});
      }
    }
  }
  builder.persist(out);
  return kExitOk;
}

int cmd_serve(const Args& args, std::ostream& out) {
  auto env = load_environment(args);
  const auto records = dataset(args);
  std::vector<AnnotationItem> items;
  for (const auto& r : records) {
    if (!r.checklist) throw Error(ErrorCode::kInvalidArgument, "'" + r.instruction.id + "' has no checklist");
    for (const auto& [model, text] : r.responses) {
      items.push_back(AnnotationItem{r.instruction.id + "/" + model, r.instruction, text, *r.checklist});
    }
  }
  const auto colon = args.bind.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "--bind expects host:port");
  const std::string host = args.bind.substr(0, colon);
  const int port = std::stoi(args.bind.substr(colon + 1));

  AnnotationService service(std::move(items), args.multiplicity, parse_measurement_level(args.level));
  // Block the stop signals before the server thread starts so only sigwait sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  {
    AnnotationServer server(service);
    server.start(host, port);
    int received = 0;
    sigwait(&signals, &received);
    spdlog::info("signal {} received; shutting down", received);
    server.stop();
  }
  pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);

  RunBuilder builder(env, args);
  for (const auto& rec : service.records()) builder.add("annotation", rec.item_id, encode(rec));
  builder.add("alpha", "service", service.agreement_json());
  builder.persist(out);
  return kExitOk;
}

int cmd_report(const Args& args, std::ostream& out) {
  auto env = load_environment(args);
  const RunStore store(env.runs_dir);
  const auto run = store.load(args.run_id);
  const auto report = emit_report(run, parse_report_kind(args.kind));
  write_report(report, env.runs_dir / args.run_id / "reports");
  out << report.summary;
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Checklist-based evaluation and self-improvement harness", "tick"};
  app.require_subcommand(1);
  Args args;

  auto add_common = [&](CLI::App* sub, bool needs_judge) {
    sub->add_option("--dataset", args.dataset, "Dataset file (one JSON record per line)")->check(CLI::ExistingFile);
    sub->add_option("--config", args.config, "Config file (providers, scripted backends, paths)")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", args.out, "Run store directory (overrides the config)");
    if (needs_judge) sub->add_option("--judge", args.judge, "Judge model id")->required();
  };
  auto add_judging = [&](CLI::App* sub) {
    sub->add_option("--k", args.k, "Samples per checklist question (maj@k, odd)")->check(CLI::Range(1, 99));
    sub->add_flag("--no-cot", args.no_cot, "Ask for the answer without reasoning");
  };
  const std::vector<std::string> protocols{"tick", "preference", "direct-score", "check-then-score"};

  auto* gen = app.add_subcommand("gen-checklist", "Generate a checklist per instruction");
  add_common(gen, true);
  auto* evaluate = app.add_subcommand("evaluate", "Answer checklists for every response");
  add_common(evaluate, true);
  add_judging(evaluate);
  auto* prefer = app.add_subcommand("prefer", "Pairwise preference between the first two responses");
  add_common(prefer, true);
  add_judging(prefer);
  prefer->add_option("--protocol", args.protocols, "Judging protocol(s)")->check(CLI::IsMember(protocols));
  auto* score = app.add_subcommand("score", "Direct 1-5 score per response");
  add_common(score, true);
  add_judging(score);
  auto* check_score = app.add_subcommand("check-score", "Check-then-score per response");
  add_common(check_score, true);
  add_judging(check_score);
  auto* refine = app.add_subcommand("refine", "Iterative self-refinement");
  add_common(refine, true);
  add_judging(refine);
  refine->add_option("--model", args.model, "Refining model (defaults to the judge)");
  refine->add_option("--max-iters", args.max_iters, "Refinement iterations")->check(CLI::Range(1, 64));
  refine->add_option("--feedback", args.feedback, "Feedback kind")->check(CLI::IsMember({"checklist", "critique"}));
  auto* bestofn = app.add_subcommand("bestofn", "Best-of-N sampling and selection");
  add_common(bestofn, true);
  add_judging(bestofn);
  bestofn->add_option("--model", args.model, "Generating model (defaults to the judge)");
  bestofn->add_option("--n", args.n, "Candidates per instruction")->check(CLI::Range(2, 256));
  bestofn->add_option("--scorer", args.scorer, "Selection scorer")
      ->check(CLI::IsMember({"stick", "direct", "direct_self_score", "external"}));
  bestofn->add_option("--truth-judge", args.truth_judge, "Judge whose pass rates serve as true scores");
  auto* similarity = app.add_subcommand("similarity", "Generated vs reference checklist similarity");
  add_common(similarity, true);
  similarity->add_option("--reference", args.reference, "Compare against the dataset checklist or a second sample")
      ->check(CLI::IsMember({"human", "sample"}));
  auto* agree = app.add_subcommand("agree", "Krippendorff's alpha over annotation records");
  add_common(agree, false);
  agree->add_option("--annotations", args.annotations, "Annotation records, one JSON object per line")->required();
  agree->add_option("--level", args.level, "Measurement level")
      ->check(CLI::IsMember({"nominal", "ordinal", "interval"}));
  auto* tag = app.add_subcommand("tag-categories", "Label checklist questions with categories");
  add_common(tag, true);
  tag->add_option("--categories", args.categories, "Category list, one per line")->check(CLI::ExistingFile);
  tag->add_flag("--evaluate", args.evaluate, "Also evaluate every response against the tagged checklist");
  auto* serve = app.add_subcommand("serve-annotation", "Serve the human annotation workflow over HTTP");
  add_common(serve, false);
  serve->add_option("--bind", args.bind, "host:port");
  serve->add_option("--multiplicity", args.multiplicity, "Annotations per task")->check(CLI::Range(1, 100));
  serve->add_option("--level", args.level, "Measurement level")
      ->check(CLI::IsMember({"nominal", "ordinal", "interval"}));
  auto* report = app.add_subcommand("report", "Emit a report for a stored run");
  report->add_option("--run", args.run_id, "Run id")->required();
  report->add_option("--kind", args.kind, "Report kind")
      ->required()
      ->check(CLI::IsMember({"drfr", "agreement", "similarity", "refinement", "bestofn", "categorical"}));
  report->add_option("--config", args.config, "Config file")->check(CLI::ExistingFile);
  report->add_option("--out", args.out, "Run store directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsageError;
  }

  auto* sub = app.get_subcommands().front();
  args.command = sub->get_name();
  for (int i = 1; i < argc; ++i) args.argv.emplace_back(argv[i]);

  try {
    if (sub == gen) return cmd_gen_checklist(args, out);
    if (sub == evaluate) return cmd_evaluate(args, out);
    if (sub == prefer) return cmd_prefer(args, out);
    if (sub == score) return cmd_score(args, out, false);
    if (sub == check_score) return cmd_score(args, out, true);
    if (sub == refine) return cmd_refine(args, out);
    if (sub == bestofn) return cmd_bestofn(args, out);
    if (sub == similarity) return cmd_similarity(args, out);
    if (sub == agree) return cmd_agree(args, out);
    if (sub == tag) return cmd_tag_categories(args, out);
    if (sub == serve) return cmd_serve(args, out);
    if (sub == report) return cmd_report(args, out);
  } catch (const Error& e) {
    err << "error: " << e.what();
    if (e.line()) err << " (line " << *e.line() << ")";
    err << "\n";
    return kExitPipelineError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitPipelineError;
  }
  return kExitUsageError;
}

}  // namespace tick
