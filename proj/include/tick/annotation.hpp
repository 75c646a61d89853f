#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "tick/metrics.hpp"
#include "tick/types.hpp"

namespace httplib {
class Server;
}

namespace tick {

struct AnnotationItem {
  std::string task_id;
  Instruction instruction;
  std::string response;
  Checklist checklist;
};

struct AnnotationTask {
  AnnotationItem item;
  std::size_t multiplicity = 3;
  std::vector<AnnotationRecord> received;

  std::size_t count(ScoringProtocol protocol) const;
  /// At least `multiplicity` distinct annotators under `protocol`.
  bool complete(ScoringProtocol protocol) const;
  bool answered_by(const std::string& annotator_id) const;
};

enum class SubmitStatus { kAccepted, kUnknownTask, kDuplicateAnnotator, kIncompleteAnswers, kInvalid };
int http_status(SubmitStatus status);

struct SubmitResult {
  SubmitStatus status = SubmitStatus::kAccepted;
  std::string message;
};

struct ProtocolAgreement {
  ScoringProtocol protocol = ScoringProtocol::kDirectScore;
  std::size_t completed_tasks = 0;
  std::size_t records = 0;
  /// nullopt when fewer than two completed tasks are pairable.
  std::optional<double> alpha;
  std::optional<double> mean_score;
};

/// Task queue and validation for the human scoring workflow. Thread-safe; every
/// state transition happens under one lock.
class AnnotationService {
 public:
  AnnotationService(std::vector<AnnotationItem> items, std::size_t multiplicity = 3,
                    MeasurementLevel level = MeasurementLevel::kInterval);

  /// Least-annotated task still incomplete under `protocol` that this annotator
  /// has neither answered nor been handed before; ties go to the earlier task.
  std::optional<AnnotationItem> next_task(const std::string& annotator_id,
                                          ScoringProtocol protocol = ScoringProtocol::kCheckThenScore);

  SubmitResult submit(const std::string& task_id, AnnotationRecord record);

  /// Alpha over completed tasks, computed from the received records only.
  std::vector<ProtocolAgreement> agreement() const;
  nlohmann::json agreement_json() const;

  std::vector<AnnotationRecord> records() const;
  std::optional<AnnotationTask> task(const std::string& task_id) const;

 private:
  mutable std::mutex mutex_;
  std::vector<AnnotationTask> tasks_;
  std::map<std::string, std::size_t> index_;
  std::map<std::string, std::set<std::string>> handed_out_;
  MeasurementLevel level_;
};

nlohmann::json encode(const AnnotationItem& item);

/// HTTP binding: GET /tasks/next, POST /tasks/{id}/annotation,
/// GET /report/agreement.
class AnnotationServer {
 public:
  explicit AnnotationServer(AnnotationService& service);
  ~AnnotationServer();
  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  /// Binds (port 0 picks a free port) and serves on a background thread.
  int start(const std::string& host, int port);
  /// Serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();

 private:
  void install_routes();

  AnnotationService& service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace tick
