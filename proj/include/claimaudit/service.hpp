#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "claimaudit/pipeline.hpp"
#include "claimaudit/providers.hpp"

namespace claimaudit {

enum class SessionStatus { kPending, kReady, kFailed };
std::string to_string(SessionStatus s);
SessionStatus session_status_from_string(std::string_view s);

enum class FeedbackVerdict { kConfirmReliable, kConfirmHallucination, kDispute };
std::string to_string(FeedbackVerdict v);
FeedbackVerdict feedback_verdict_from_string(std::string_view s);

struct Revision {
  int revision_id = 0;
  std::string output_text;
  nlohmann::json graph;  // graph document, no timestamps inside
  std::string timestamp;
};

struct FeedbackEntry {
  std::string session_id;
  int revision_id = 0;
  std::string claim_id;
  FeedbackVerdict verdict_override = FeedbackVerdict::kDispute;
  std::string comment;
  std::string timestamp;
};

struct AuditSession {
  std::string session_id;
  std::string source_text;
  std::string output_text;  // text of the newest submission
  PipelineConfig config;
  SessionStatus status = SessionStatus::kPending;
  std::string diagnostic;
  std::string created_at;
  std::vector<Revision> history;  // revision ids strictly increasing
  std::vector<FeedbackEntry> feedback;

  const Revision* latest() const { return history.empty() ? nullptr : &history.back(); }
};

nlohmann::json to_json(const FeedbackEntry& f);
FeedbackEntry feedback_from_json(const nlohmann::json& j);
// Session summary as served over HTTP. The latest graph is embedded.
nlohmann::json to_json(const AuditSession& s);

// One directory per session: session.json, revisions/<n>.json and an
// append-only feedback.jsonl. Files are replaced atomically.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path root);

  bool exists(const std::string& session_id) const;
  void save_meta(const AuditSession& s) const;
  void append_revision(const std::string& session_id, const Revision& r) const;
  void append_feedback(const FeedbackEntry& f) const;
  // Throws NotFoundError for unknown ids.
  AuditSession load(const std::string& session_id) const;
  std::optional<Revision> load_revision(const std::string& session_id, int revision_id) const;
  std::vector<std::string> list() const;

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path dir(const std::string& session_id) const;
  std::filesystem::path root_;
};

struct ServiceOptions {
  bool async = false;  // run the pipeline off the request thread
  PipelineConfig default_config;
};

class AuditService {
 public:
  AuditService(std::filesystem::path store_root, const ProviderSetConfig& providers, ServiceOptions options = {});
  ~AuditService();
  AuditService(const AuditService&) = delete;
  AuditService& operator=(const AuditService&) = delete;

  AuditSession create_session(std::string source_text, std::string output_text,
                              std::optional<PipelineConfig> config = std::nullopt);
  AuditSession get_session(const std::string& session_id) const;
  // Revision 0 or absent selects the latest.
  nlohmann::json graph(const std::string& session_id, std::optional<int> revision = std::nullopt) const;
  nlohmann::json submit_feedback(FeedbackEntry entry);
  AuditSession reevaluate(const std::string& session_id, std::string revised_output_text);

  // Blocks until queued pipeline runs have finished.
  void wait_idle();

  const SessionStore& store() const { return store_; }
  ProviderSet& providers() { return providers_; }

 private:
  std::shared_ptr<std::mutex> session_lock(const std::string& session_id);
  void evaluate(const std::string& session_id, const std::string& output_text);
  void schedule(const std::string& session_id, const std::string& output_text);
  std::string new_session_id();

  SessionStore store_;
  ProviderSet providers_;
  ServiceOptions options_;
  std::mutex locks_mu_;
  std::map<std::string, std::shared_ptr<std::mutex>> locks_;
  std::mutex jobs_mu_;
  std::vector<std::thread> jobs_;
  std::mutex id_mu_;
  std::uint64_t id_counter_ = 0;
};

struct ServerOptions {
  std::string host = "0.0.0.0";
  int port = 8750;                // AUDIT_SERVICE_PORT
  std::string cors_origin = "*";  // AUDIT_UI_ORIGIN

  static ServerOptions from_environment();
};

// HTTP JSON facade. bind() reports an occupied port by returning false.
class AuditHttpServer {
 public:
  AuditHttpServer(AuditService& service, ServerOptions options);
  ~AuditHttpServer();
  AuditHttpServer(const AuditHttpServer&) = delete;
  AuditHttpServer& operator=(const AuditHttpServer&) = delete;

  // Port 0 binds an ephemeral port.
  bool bind();
  int port() const { return port_; }
  // Blocks until stop().
  void serve();
  void start_background();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  ServerOptions options_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace claimaudit
