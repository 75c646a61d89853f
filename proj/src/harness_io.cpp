#include "tick/harness_io.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "tick/evaluator.hpp"
#include "tick/improve.hpp"
#include "tick/metrics.hpp"
#include "tick/serialize.hpp"
#include "tick/text_util.hpp"

namespace tick {

namespace fs = std::filesystem;

void DatasetRecord::validate() const {
  instruction.validate();
  if (gold_answers && !checklist) {
    throw Error(ErrorCode::kInvariantViolation, "gold_answers given without a checklist");
  }
  if (gold_answers && checklist && gold_answers->size() != checklist->size()) {
    throw Error(ErrorCode::kInvariantViolation,
                fmt::format("{} gold answers for a {}-question checklist", gold_answers->size(), checklist->size()));
  }
  if (human_preferences) {
    for (int v : *human_preferences) {
      if (v < 1 || v > 5) throw Error(ErrorCode::kInvariantViolation, fmt::format("preference {} outside 1..5", v));
    }
  }
}

nlohmann::ordered_json encode(const DatasetRecord& record) {
  nlohmann::ordered_json j;
  j["schema"] = kDatasetSchemaVersion;
  j["instruction"] = encode(record.instruction);
  if (!record.responses.empty()) {
    nlohmann::ordered_json responses = nlohmann::ordered_json::object();
    for (const auto& [model, text] : record.responses) responses[model] = text;
    j["responses"] = responses;
  }
  if (record.checklist) j["checklist"] = encode(*record.checklist);
  if (record.gold_answers) {
    auto& gold = j["gold_answers"] = nlohmann::ordered_json::array();
    for (auto a : *record.gold_answers) gold.push_back(std::string(to_string(a)));
  }
  if (record.human_preferences) j["human_preferences"] = *record.human_preferences;
  return j;
}

namespace {

DatasetRecord parse_record(const nlohmann::ordered_json& j, std::size_t line) {
  auto fail = [line](const std::string& what) { return Error(ErrorCode::kParseError, what, line); };
  if (!j.is_object()) throw fail("record is not an object");
  if (!j.contains("schema")) throw fail("missing field 'schema'");
  if (!j.at("schema").is_number_integer() || j.at("schema").get<int>() != kDatasetSchemaVersion) {
    throw fail("unsupported schema " + j.at("schema").dump());
  }
  if (!j.contains("instruction") || !j.at("instruction").is_object()) throw fail("missing field 'instruction'");
  const auto& ji = j.at("instruction");
  for (const char* field : {"id", "text"}) {
    if (!ji.contains(field) || !ji.at(field).is_string()) {
      throw fail(std::string("missing field 'instruction.") + field + "'");
    }
  }

  DatasetRecord record;
  try {
    record.instruction = decode<Instruction>(nlohmann::json::parse(ji.dump()));
    if (j.contains("responses")) {
      const auto& jr = j.at("responses");
      if (!jr.is_object()) throw fail("'responses' must map model ids to texts");
      for (const auto& [model, text] : jr.items()) {
        if (!text.is_string()) throw fail("response '" + model + "' is not a string");
        record.responses.emplace_back(model, text.get<std::string>());
      }
    }
    if (j.contains("checklist")) {
      auto jc = nlohmann::json::parse(j.at("checklist").dump());
      if (jc.is_array()) jc = nlohmann::json{{"questions", jc}};
      if (!jc.contains("instruction_id")) jc["instruction_id"] = record.instruction.id;
      if (!jc.contains("provenance")) jc["provenance"] = {{"kind", "file"}};
      record.checklist = decode<Checklist>(jc);
    }
    if (j.contains("gold_answers")) {
      std::vector<BinaryAnswer> gold;
      for (const auto& a : j.at("gold_answers")) gold.push_back(parse_binary_answer(a.get<std::string>()));
      record.gold_answers = std::move(gold);
    }
    if (j.contains("human_preferences")) record.human_preferences = j.at("human_preferences").get<std::vector<int>>();
  } catch (const Error& e) {
    if (e.line()) throw;
    throw Error(e.code() == ErrorCode::kInvariantViolation ? e.code() : ErrorCode::kParseError, e.what(), line);
  } catch (const nlohmann::json::exception& e) {
    throw fail(e.what());
  }
  try {
    record.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvariantViolation, e.what(), line);
  }
  return record;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kParseError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  out.close();
  if (!out) throw Error(ErrorCode::kWriteFailure, "cannot write " + path.string());
}

}  // namespace

DatasetRecord parse_dataset_record(const nlohmann::json& j, std::size_t line) {
  return parse_record(nlohmann::ordered_json::parse(j.dump()), line);
}

std::vector<DatasetRecord> load_dataset(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kParseError, "cannot open dataset " + path.string());
  std::vector<DatasetRecord> records;
  std::set<std::string> ids;
  std::string text;
  for (std::size_t line = 1; std::getline(in, text); ++line) {
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (trim(text).empty()) continue;
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::kParseError, e.what(), line);
    }
    auto record = parse_record(j, line);
    if (!ids.insert(record.instruction.id).second) {
      throw Error(ErrorCode::kInvariantViolation, "duplicate instruction id '" + record.instruction.id + "'", line);
    }
    records.push_back(std::move(record));
  }
  return records;
}

void write_dataset(const fs::path& path, const std::vector<DatasetRecord>& records) {
  std::string out;
  for (const auto& r : records) out += encode(r).dump() + "\n";
  write_file(path, out);
}

std::vector<const Artifact*> RunRecord::of_kind(std::string_view kind) const {
  std::vector<const Artifact*> out;
  for (const auto& a : artifacts) {
    if (a.kind == kind) out.push_back(&a);
  }
  return out;
}

nlohmann::json encode(const Ledger& ledger) {
  auto counts = [](const LedgerCounts& c) {
    return nlohmann::json{{"requests", c.requests},
                          {"backend_calls", c.backend_calls},
                          {"cache_hits", c.cache_hits},
                          {"failures", c.failures}};
  };
  nlohmann::json by_kind = nlohmann::json::object();
  for (const auto& [kind, c] : ledger.by_kind) by_kind[kind] = counts(c);
  return {{"by_kind", by_kind}, {"total", counts(ledger.total)}};
}

std::string digest_prompt_hashes(std::vector<std::string> hashes) {
  std::sort(hashes.begin(), hashes.end());
  std::string joined;
  for (const auto& h : hashes) joined += h + "\n";
  return sha256_hex(joined);
}

RunStore::RunStore(fs::path root) : root_(std::move(root)) {}

namespace {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string compact_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%S", &tm);
  return buf;
}

bool valid_run_id(const std::string& id) {
  return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
  });
}

}  // namespace

std::string RunStore::persist(RunRecord& run) const {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) throw Error(ErrorCode::kWriteFailure, "cannot create run store " + root_.string() + ": " + ec.message());

  static thread_local std::mt19937_64 rng{std::random_device{}()};
  fs::path dir;
  std::string id;
  for (int attempt = 0;; ++attempt) {
    id = fmt::format("run-{}-{:08x}", compact_timestamp(), static_cast<std::uint32_t>(rng()));
    dir = root_ / id;
    // create_directory reports false when the directory already exists, which
    // makes the id claim exclusive.
    if (fs::create_directory(dir, ec)) break;
    if (ec || attempt > 16) throw Error(ErrorCode::kWriteFailure, "cannot allocate run directory under " + root_.string());
  }
  run.run_id = id;
  if (run.timestamp.empty()) run.timestamp = utc_timestamp();

  std::string artifacts;
  for (const auto& a : run.artifacts) {
    artifacts += nlohmann::json{{"kind", a.kind}, {"item_id", a.item_id}, {"prompt_hash", a.prompt_hash},
                                {"payload", a.payload}}
                     .dump() +
                 "\n";
  }
  write_file(dir / "config.json", run.config.dump(2) + "\n");
  write_file(dir / "artifacts.jsonl", artifacts);
  write_file(dir / "ledger.json", run.ledger.dump(2) + "\n");
  // meta.json last: a run directory without it is incomplete.
  write_file(dir / "meta.json", nlohmann::json{{"run_id", id}, {"timestamp", run.timestamp}}.dump(2) + "\n");
  return id;
}

bool RunStore::exists(const std::string& run_id) const {
  return valid_run_id(run_id) && fs::exists(root_ / run_id / "meta.json");
}

RunRecord RunStore::load(const std::string& run_id) const {
  if (!exists(run_id)) throw Error(ErrorCode::kUnknownRunId, "no run '" + run_id + "' in " + root_.string());
  const fs::path dir = root_ / run_id;
  RunRecord run;
  try {
    const auto meta = nlohmann::json::parse(read_file(dir / "meta.json"));
    run.run_id = meta.at("run_id").get<std::string>();
    run.timestamp = meta.at("timestamp").get<std::string>();
    run.config = nlohmann::json::parse(read_file(dir / "config.json"));
    run.ledger = nlohmann::json::parse(read_file(dir / "ledger.json"));
    std::istringstream lines(read_file(dir / "artifacts.jsonl"));
    std::string line;
    while (std::getline(lines, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      run.artifacts.push_back(Artifact{j.at("kind").get<std::string>(), j.at("item_id").get<std::string>(),
                                       j.at("prompt_hash").get<std::string>(), j.at("payload")});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, "run '" + run_id + "': " + e.what());
  }
  return run;
}

std::string_view to_string(ReportKind kind) {
  switch (kind) {
    case ReportKind::kDrfr: return "drfr";
    case ReportKind::kAgreement: return "agreement";
    case ReportKind::kSimilarity: return "similarity";
    case ReportKind::kRefinement: return "refinement";
    case ReportKind::kBestOfN: return "bestofn";
    case ReportKind::kCategorical: return "categorical";
  }
  return "?";
}

ReportKind parse_report_kind(std::string_view text) {
  for (auto k : {ReportKind::kDrfr, ReportKind::kAgreement, ReportKind::kSimilarity, ReportKind::kRefinement,
                 ReportKind::kBestOfN, ReportKind::kCategorical}) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown report kind '" + std::string(text) + "'");
}

namespace {

std::string f4(double v) { return fmt::format("{:.4f}", v); }

std::vector<const Artifact*> require(const RunRecord& run, std::string_view kind, ReportKind report) {
  auto found = run.of_kind(kind);
  if (found.empty()) {
    throw Error(ErrorCode::kMissingArtifacts,
                fmt::format("run '{}' has no {} artifacts for a {} report", run.run_id, kind, to_string(report)));
  }
  return found;
}

Report drfr_report(const RunRecord& run) {
  std::map<std::string, std::vector<ChecklistEvaluation>> by_label;
  for (const auto* a : require(run, "evaluation", ReportKind::kDrfr)) {
    by_label[a->payload.value("label", "")].push_back(decode<ChecklistEvaluation>(a->payload.at("evaluation")));
  }
  Report r{ReportKind::kDrfr, "label\titems\tyes\tquestions\tDRFR\tmean_PR\n", ""};
  r.summary = "Decomposed requirements following ratio\n";
  for (const auto& [label, evals] : by_label) {
    std::int64_t yes = 0, total = 0;
    double pr_sum = 0.0;
    for (const auto& e : evals) {
      yes += e.passes();
      total += static_cast<std::int64_t>(e.size());
      pr_sum += e.pass_rate().to_double();
    }
    const double value = drfr(evals).to_double();
    const double mean_pr = pr_sum / static_cast<double>(evals.size());
    r.tsv += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", label, evals.size(), yes, total, f4(value), f4(mean_pr));
    r.summary += fmt::format("  {}: DRFR {} over {} items ({}/{} questions)\n", label.empty() ? "(all)" : label,
                             f4(value), evals.size(), yes, total);
  }
  return r;
}

Report agreement_report(const RunRecord& run) {
  std::map<std::string, std::vector<LabelPair>> by_protocol;
  for (const auto* a : require(run, "preference", ReportKind::kAgreement)) {
    if (!a->payload.contains("human")) continue;
    by_protocol[a->payload.at("protocol").get<std::string>()].emplace_back(
        parse_preference_label(a->payload.at("human").get<std::string>()),
        parse_preference_label(a->payload.at("prediction").get<std::string>()));
  }
  if (by_protocol.empty()) {
    throw Error(ErrorCode::kMissingArtifacts, "run '" + run.run_id + "' has no preferences with human labels");
  }
  Report r{ReportKind::kAgreement, "protocol\tn\tPLD-0\tPLD-1\tPLD-2\tWPLD\n", ""};
  r.summary = "Pairwise agreement with human labels (lower WPLD is better)\n";
  for (const auto& [protocol, pairs] : by_protocol) {
    const auto s = agreement_summary(pairs);
    r.tsv += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", protocol, s.n, f4(s.pld0), f4(s.pld1), f4(s.pld2), f4(s.wpld));
    r.summary += fmt::format("  {}: n={} PLD-0 {} PLD-1 {} PLD-2 {} WPLD {}\n", protocol, s.n, f4(s.pld0),
                             f4(s.pld1), f4(s.pld2), f4(s.wpld));
  }
  return r;
}

Report similarity_report(const RunRecord& run) {
  struct Acc {
    std::size_t n = 0;
    double bleu = 0, r1 = 0, r2 = 0, rl = 0;
    std::vector<int> count_a, count_b;
  };
  std::map<std::string, Acc> by_label;
  for (const auto* a : require(run, "similarity", ReportKind::kSimilarity)) {
    auto& acc = by_label[a->payload.value("label", "")];
    const auto& p = a->payload;
    ++acc.n;
    acc.bleu += p.at("bleu").get<double>();
    acc.r1 += p.at("rouge1").get<double>();
    acc.r2 += p.at("rouge2").get<double>();
    acc.rl += p.at("rougeL").get<double>();
    acc.count_a.push_back(p.at("count_hypothesis").get<int>());
    acc.count_b.push_back(p.at("count_reference").get<int>());
  }
  Report r{ReportKind::kSimilarity, "label\tn\tBLEU\tROUGE-1\tROUGE-2\tROUGE-L\tcount_MAE\n", ""};
  r.summary = "Checklist similarity (means over items)\n";
  for (const auto& [label, acc] : by_label) {
    const double n = static_cast<double>(acc.n);
    const double mae = count_mae(acc.count_a, acc.count_b);
    r.tsv += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\n", label, acc.n, f4(acc.bleu / n), f4(acc.r1 / n),
                         f4(acc.r2 / n), f4(acc.rl / n), f4(mae));
    r.summary += fmt::format("  {}: n={} BLEU {} ROUGE-1 {} ROUGE-2 {} ROUGE-L {} count MAE {}\n",
                             label.empty() ? "(all)" : label, acc.n, f4(acc.bleu / n), f4(acc.r1 / n),
                             f4(acc.r2 / n), f4(acc.rl / n), f4(mae));
  }
  return r;
}

// Traces that stopped early carry their last evaluated iteration forward so
// every iteration is averaged over the same items.
Report refinement_report(const RunRecord& run) {
  std::vector<RefinementTrace> traces;
  for (const auto* a : require(run, "trace", ReportKind::kRefinement)) {
    auto t = decode<RefinementTrace>(a->payload);
    if (std::any_of(t.iterations.begin(), t.iterations.end(), [](const auto& it) { return it.evaluation.has_value(); })) {
      traces.push_back(std::move(t));
    }
  }
  if (traces.empty()) throw Error(ErrorCode::kMissingArtifacts, "run '" + run.run_id + "' has no scored traces");
  std::size_t length = 0;
  for (const auto& t : traces) length = std::max(length, t.iterations.size());

  Report r{ReportKind::kRefinement, "iteration\titems\tactive\tyes\tquestions\tDRFR\n", ""};
  r.summary = fmt::format("Per-iteration DRFR over {} items\n", traces.size());
  for (std::size_t i = 0; i < length; ++i) {
    std::vector<ChecklistEvaluation> evals;
    std::size_t active = 0;
    for (const auto& t : traces) {
      if (i < t.iterations.size()) ++active;
      const std::size_t last = std::min(i, t.iterations.size() - 1);
      for (std::size_t j = last + 1; j-- > 0;) {
        if (t.iterations[j].evaluation) {
          evals.push_back(*t.iterations[j].evaluation);
          break;
        }
      }
    }
    std::int64_t yes = 0, total = 0;
    for (const auto& e : evals) {
      yes += e.passes();
      total += static_cast<std::int64_t>(e.size());
    }
    const double value = drfr(evals).to_double();
    r.tsv += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", i, evals.size(), active, yes, total, f4(value));
    r.summary += fmt::format("  iteration {}: DRFR {} ({} still refining)\n", i, f4(value), active);
  }
  std::map<std::string, int> reasons;
  for (const auto& t : traces) ++reasons[std::string(to_string(t.stop_reason))];
  r.summary += "Stop reasons:";
  for (const auto& [reason, count] : reasons) r.summary += fmt::format(" {}={}", reason, count);
  r.summary += "\n";
  return r;
}

Report bestofn_report(const RunRecord& run) {
  Report r{ReportKind::kBestOfN, "instruction\tcandidates\tselected\tselected_score\tprecision\ttrue_score\n", ""};
  double precision_sum = 0.0, true_sum = 0.0, selected_sum = 0.0;
  std::size_t with_truth = 0, n = 0;
  std::string scorer;
  for (const auto* a : require(run, "candidate_set", ReportKind::kBestOfN)) {
    const auto set = decode<CandidateSet>(a->payload.at("set"));
    scorer = set.selecting_scorer;
    std::string selected;
    double own = 0.0;
    for (auto i : set.selected) {
      selected += (selected.empty() ? "" : ",") + std::to_string(i);
      own += to_double(set.candidates[i].scores.at(set.selecting_scorer));
    }
    own /= static_cast<double>(set.selected.size());
    selected_sum += own;
    ++n;
    std::string precision = "NA", truth = "NA";
    if (a->payload.contains("true_scores")) {
      const auto scores = a->payload.at("true_scores").get<std::vector<double>>();
      const double p = selection_precision(set.selected, scores);
      const double t = average_selected_score(set.selected, scores);
      precision_sum += p;
      true_sum += t;
      ++with_truth;
      precision = f4(p);
      truth = f4(t);
    }
    r.tsv += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", set.instruction_id, set.candidates.size(), selected, f4(own),
                         precision, truth);
  }
  r.summary = fmt::format("Best-of-N selection with scorer '{}' over {} instructions\n", scorer, n);
  r.summary += fmt::format("  mean selected score (own scorer): {}\n", f4(selected_sum / static_cast<double>(n)));
  if (with_truth > 0) {
    const double d = static_cast<double>(with_truth);
    r.summary += fmt::format("  selection precision: {}\n  average true score of selection: {}\n",
                             f4(precision_sum / d), f4(true_sum / d));
  }
  return r;
}

Report categorical_report(const RunRecord& run) {
  CategoryLabels labels;
  for (const auto* a : require(run, "checklist", ReportKind::kCategorical)) {
    const auto c = decode<Checklist>(a->payload);
    for (const auto& q : c.questions()) {
      if (!q.categories.empty()) labels[QuestionRef{c.instruction_id(), q.index}] = q.categories;
    }
  }
  if (labels.empty()) throw Error(ErrorCode::kMissingArtifacts, "run '" + run.run_id + "' has no labelled questions");
  std::vector<ChecklistEvaluation> evals;
  for (const auto* a : require(run, "evaluation", ReportKind::kCategorical)) {
    const auto e = decode<ChecklistEvaluation>(a->payload.at("evaluation"));
    bool labelled = false;
    for (std::size_t i = 0; i < e.size() && !labelled; ++i) labelled = labels.count(QuestionRef{e.instruction_id(), i});
    if (labelled) evals.push_back(e);
  }
  if (evals.empty()) throw Error(ErrorCode::kMissingArtifacts, "no evaluation covers a labelled question");
  std::map<std::string, std::int64_t> counts;
  for (const auto& e : evals) {
    for (std::size_t i = 0; i < e.size(); ++i) {
      auto it = labels.find(QuestionRef{e.instruction_id(), i});
      if (it == labels.end()) continue;
      for (const auto& cat : it->second) ++counts[cat];
    }
  }
  // Restrict the label map to evaluated instructions before aggregating.
  CategoryLabels used;
  for (const auto& e : evals) {
    for (std::size_t i = 0; i < e.size(); ++i) {
      auto it = labels.find(QuestionRef{e.instruction_id(), i});
      if (it != labels.end()) used.insert(*it);
    }
  }
  const auto rates = categorical_pass_rate(evals, used);
  Report r{ReportKind::kCategorical, "category\tanswers\tpass_rate\n", "Pass rate by question category\n"};
  for (const auto& [cat, rate] : rates) {
    r.tsv += fmt::format("{}\t{}\t{}\n", cat, counts[cat], f4(rate.to_double()));
    r.summary += fmt::format("  {}: {} ({} answers)\n", cat, f4(rate.to_double()), counts[cat]);
  }
  return r;
}

}  // namespace

Report emit_report(const RunRecord& run, ReportKind kind) {
  switch (kind) {
    case ReportKind::kDrfr: return drfr_report(run);
    case ReportKind::kAgreement: return agreement_report(run);
    case ReportKind::kSimilarity: return similarity_report(run);
    case ReportKind::kRefinement: return refinement_report(run);
    case ReportKind::kBestOfN: return bestofn_report(run);
    case ReportKind::kCategorical: return categorical_report(run);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown report kind");
}

void write_report(const Report& report, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kWriteFailure, "cannot create " + dir.string() + ": " + ec.message());
  const std::string name(to_string(report.kind));
  write_file(dir / (name + ".tsv"), report.tsv);
  write_file(dir / (name + ".txt"), report.summary);
}

}  // namespace tick
