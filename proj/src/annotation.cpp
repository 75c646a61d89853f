#include "tick/annotation.hpp"

#include <algorithm>
#include <limits>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "tick/serialize.hpp"

namespace tick {

std::size_t AnnotationTask::count(ScoringProtocol protocol) const {
  return static_cast<std::size_t>(
      std::count_if(received.begin(), received.end(), [&](const auto& r) { return r.protocol == protocol; }));
}

bool AnnotationTask::complete(ScoringProtocol protocol) const {
  std::set<std::string> annotators;
  for (const auto& r : received) {
    if (r.protocol == protocol) annotators.insert(r.annotator_id);
  }
  return annotators.size() >= multiplicity;
}

bool AnnotationTask::answered_by(const std::string& annotator_id) const {
  return std::any_of(received.begin(), received.end(), [&](const auto& r) { return r.annotator_id == annotator_id; });
}

int http_status(SubmitStatus status) {
  switch (status) {
    case SubmitStatus::kAccepted: return 201;
    case SubmitStatus::kUnknownTask: return 404;
    case SubmitStatus::kDuplicateAnnotator: return 409;
    case SubmitStatus::kIncompleteAnswers: return 422;
    case SubmitStatus::kInvalid: return 400;
  }
  return 500;
}

AnnotationService::AnnotationService(std::vector<AnnotationItem> items, std::size_t multiplicity,
                                     MeasurementLevel level)
    : level_(level) {
  if (multiplicity < 1) throw Error(ErrorCode::kInvalidArgument, "multiplicity must be >= 1");
  for (auto& item : items) {
    if (!index_.emplace(item.task_id, tasks_.size()).second) {
      throw Error(ErrorCode::kInvariantViolation, "duplicate task id '" + item.task_id + "'");
    }
    tasks_.push_back(AnnotationTask{std::move(item), multiplicity, {}});
  }
}

std::optional<AnnotationItem> AnnotationService::next_task(const std::string& annotator_id, ScoringProtocol protocol) {
  if (annotator_id.empty()) throw Error(ErrorCode::kInvalidArgument, "annotator id is required");
  std::lock_guard lock(mutex_);
  auto& handed = handed_out_[annotator_id];
  const AnnotationTask* best = nullptr;
  std::size_t best_count = std::numeric_limits<std::size_t>::max();
  for (const auto& t : tasks_) {
    if (t.complete(protocol) || t.answered_by(annotator_id) || handed.count(t.item.task_id)) continue;
    const std::size_t n = t.count(protocol);
    if (n < best_count) {
      best = &t;
      best_count = n;
    }
  }
  if (!best) return std::nullopt;
  handed.insert(best->item.task_id);
  return best->item;
}

SubmitResult AnnotationService::submit(const std::string& task_id, AnnotationRecord record) {
  std::lock_guard lock(mutex_);
  auto it = index_.find(task_id);
  if (it == index_.end()) return {SubmitStatus::kUnknownTask, "no task '" + task_id + "'"};
  auto& task = tasks_[it->second];
  if (record.item_id.empty()) record.item_id = task_id;
  if (record.item_id != task_id) return {SubmitStatus::kInvalid, "item_id does not match the task"};

  if (record.protocol == ScoringProtocol::kCheckThenScore) {
    const std::size_t have = record.checklist_answers ? record.checklist_answers->size() : 0;
    if (have != task.item.checklist.size()) {
      return {SubmitStatus::kIncompleteAnswers,
              std::to_string(have) + " of " + std::to_string(task.item.checklist.size()) + " checklist answers"};
    }
  }
  try {
    record.validate();
  } catch (const Error& e) {
    return {SubmitStatus::kInvalid, e.what()};
  }
  if (task.answered_by(record.annotator_id)) {
    return {SubmitStatus::kDuplicateAnnotator, "annotator '" + record.annotator_id + "' already answered this task"};
  }
  task.received.push_back(std::move(record));
  return {};
}

std::vector<ProtocolAgreement> AnnotationService::agreement() const {
  std::lock_guard lock(mutex_);
  std::vector<ProtocolAgreement> out;
  for (auto protocol : {ScoringProtocol::kDirectScore, ScoringProtocol::kCheckThenScore}) {
    ProtocolAgreement pa;
    pa.protocol = protocol;
    std::map<std::string, std::size_t> columns;
    std::vector<const AnnotationTask*> done;
    double sum = 0.0;
    for (const auto& t : tasks_) {
      if (!t.complete(protocol)) continue;
      done.push_back(&t);
      for (const auto& r : t.received) {
        if (r.protocol != protocol) continue;
        columns.emplace(r.annotator_id, columns.size());
        sum += r.score;
        ++pa.records;
      }
    }
    pa.completed_tasks = done.size();
    if (pa.records > 0) pa.mean_score = sum / static_cast<double>(pa.records);
    RatingMatrix matrix;
    for (const auto* t : done) {
      std::vector<std::optional<double>> row(columns.size());
      for (const auto& r : t->received) {
        if (r.protocol == protocol) row[columns.at(r.annotator_id)] = r.score;
      }
      matrix.push_back(std::move(row));
    }
    try {
      pa.alpha = krippendorff_alpha(matrix, level_);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInsufficientData) throw;
    }
    out.push_back(pa);
  }
  return out;
}

nlohmann::json AnnotationService::agreement_json() const {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& pa : agreement()) {
    out[std::string(to_string(pa.protocol))] = {
        {"completed_tasks", pa.completed_tasks},
        {"records", pa.records},
        {"alpha", pa.alpha ? nlohmann::json(*pa.alpha) : nlohmann::json(nullptr)},
        {"mean_score", pa.mean_score ? nlohmann::json(*pa.mean_score) : nlohmann::json(nullptr)},
    };
  }
  return out;
}

std::vector<AnnotationRecord> AnnotationService::records() const {
  std::lock_guard lock(mutex_);
  std::vector<AnnotationRecord> out;
  for (const auto& t : tasks_) out.insert(out.end(), t.received.begin(), t.received.end());
  return out;
}

std::optional<AnnotationTask> AnnotationService::task(const std::string& task_id) const {
  std::lock_guard lock(mutex_);
  auto it = index_.find(task_id);
  if (it == index_.end()) return std::nullopt;
  return tasks_[it->second];
}

nlohmann::json encode(const AnnotationItem& item) {
  nlohmann::json questions = nlohmann::json::array();
  for (const auto& q : item.checklist.questions()) questions.push_back(q.text);
  return {{"task_id", item.task_id},
          {"instruction", item.instruction.text},
          {"response", item.response},
          {"checklist", questions}};
}

AnnotationServer::AnnotationServer(AnnotationService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

AnnotationServer::~AnnotationServer() { stop(); }

namespace {

void reply(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

}  // namespace

void AnnotationServer::install_routes() {
  server_->Get("/tasks/next", [this](const httplib::Request& req, httplib::Response& res) {
    const auto annotator = req.get_param_value("annotator");
    if (annotator.empty()) return reply(res, 400, {{"error", "annotator parameter is required"}});
    ScoringProtocol protocol = ScoringProtocol::kCheckThenScore;
    if (req.has_param("protocol")) {
      try {
        protocol = parse_scoring_protocol(req.get_param_value("protocol"));
      } catch (const Error& e) {
        return reply(res, 400, {{"error", e.what()}});
      }
    }
    auto item = service_.next_task(annotator, protocol);
    if (!item) return reply(res, 204, nullptr);
    auto body = encode(*item);
    body["protocol"] = to_string(protocol);
    reply(res, 200, body);
  });

  server_->Post(R"(/tasks/(.+)/annotation)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string task_id = req.matches[1];
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error& e) {
      return reply(res, 400, {{"error", e.what()}});
    }
    if (!service_.task(task_id)) return reply(res, 404, {{"error", "no task '" + task_id + "'"}});
    if (!body.is_object()) return reply(res, 400, {{"error", "body must be an object"}});
    if (!body.contains("item_id")) body["item_id"] = task_id;
    // An unanswered question arrives as null; the record is incomplete rather
    // than malformed.
    if (body.contains("checklist_answers") && body["checklist_answers"].is_array()) {
      auto& answers = body["checklist_answers"];
      if (std::any_of(answers.begin(), answers.end(), [](const auto& a) { return a.is_null(); })) {
        return reply(res, 422, {{"error", "every checklist question must be answered before scoring"}});
      }
    }
    AnnotationRecord record;
    try {
      record = decode<AnnotationRecord>(body);
    } catch (const Error& e) {
      return reply(res, 400, {{"error", e.what()}});
    }
    const auto result = service_.submit(task_id, std::move(record));
    if (result.status == SubmitStatus::kAccepted) return reply(res, 201, {{"status", "accepted"}});
    reply(res, http_status(result.status), {{"error", result.message}});
  });

  server_->Get("/report/agreement", [this](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, service_.agreement_json());
  });
}

int AnnotationServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error(ErrorCode::kInvalidArgument, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  spdlog::info("annotation service on {}:{}", host, bound);
  return bound;
}

void AnnotationServer::listen(const std::string& host, int port) {
  spdlog::info("annotation service on {}:{}", host, port);
  if (!server_->listen(host, port)) {
    throw Error(ErrorCode::kInvalidArgument, "cannot bind " + host + ":" + std::to_string(port));
  }
}

void AnnotationServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace tick
