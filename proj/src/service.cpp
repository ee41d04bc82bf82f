#include "claimaudit/service.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "claimaudit/errors.hpp"
#include "claimaudit/text.hpp"

namespace claimaudit {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw NotFoundError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const fs::path& p, const std::string& content) {
  std::ostringstream tmp_name;
  tmp_name << '.' << p.filename().string() << ".tmp." << std::this_thread::get_id();
  const fs::path tmp = p.parent_path() / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, p);
}

bool valid_session_id(const std::string& id) {
  return !id.empty() && id.size() <= 64 &&
         std::all_of(id.begin(), id.end(), [](unsigned char c) { return std::isalnum(c) || c == '-' || c == '_'; });
}

}  // namespace

std::string to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::kPending:
      return "pending";
    case SessionStatus::kReady:
      return "ready";
    case SessionStatus::kFailed:
      return "failed";
  }
  return "failed";
}

SessionStatus session_status_from_string(std::string_view s) {
  if (s == "pending") return SessionStatus::kPending;
  if (s == "ready") return SessionStatus::kReady;
  if (s == "failed") return SessionStatus::kFailed;
  throw InputError("unknown session status '" + std::string(s) + "'");
}

std::string to_string(FeedbackVerdict v) {
  switch (v) {
    case FeedbackVerdict::kConfirmReliable:
      return "confirm_reliable";
    case FeedbackVerdict::kConfirmHallucination:
      return "confirm_hallucination";
    case FeedbackVerdict::kDispute:
      return "dispute";
  }
  return "dispute";
}

FeedbackVerdict feedback_verdict_from_string(std::string_view s) {
  if (s == "confirm_reliable") return FeedbackVerdict::kConfirmReliable;
  if (s == "confirm_hallucination") return FeedbackVerdict::kConfirmHallucination;
  if (s == "dispute") return FeedbackVerdict::kDispute;
  throw InputError("unknown verdict_override '" + std::string(s) +
                   "' (expected confirm_reliable, confirm_hallucination or dispute)");
}

json to_json(const FeedbackEntry& f) {
  return {{"session_id", f.session_id},
          {"revision_id", f.revision_id},
          {"claim_id", f.claim_id},
          {"verdict_override", to_string(f.verdict_override)},
          {"comment", f.comment},
          {"timestamp", f.timestamp}};
}

FeedbackEntry feedback_from_json(const json& j) {
  FeedbackEntry f;
  f.session_id = j.value("session_id", "");
  f.revision_id = j.value("revision_id", 0);
  f.claim_id = j.at("claim_id").get<std::string>();
  f.verdict_override = feedback_verdict_from_string(j.at("verdict_override").get<std::string>());
  f.comment = j.value("comment", "");
  f.timestamp = j.value("timestamp", "");
  return f;
}

json to_json(const AuditSession& s) {
  json revisions = json::array();
  for (const auto& r : s.history) {
    revisions.push_back({{"revision_id", r.revision_id}, {"output_text", r.output_text}, {"timestamp", r.timestamp}});
  }
  json feedback = json::array();
  for (const auto& f : s.feedback) feedback.push_back(to_json(f));
  return {{"session_id", s.session_id},
          {"status", to_string(s.status)},
          {"diagnostic", s.diagnostic},
          {"source_text", s.source_text},
          {"output_text", s.output_text},
          {"config", to_json(s.config)},
          {"created_at", s.created_at},
          {"latest_revision", s.history.empty() ? json(nullptr) : json(s.history.back().revision_id)},
          {"revisions", std::move(revisions)},
          {"feedback", std::move(feedback)},
          {"graph", s.history.empty() ? json(nullptr) : s.history.back().graph}};
}

SessionStore::SessionStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_ / "sessions", ec);
  if (ec) throw ConfigError("cannot create session store at " + root_.string() + ": " + ec.message());
}

fs::path SessionStore::dir(const std::string& session_id) const {
  if (!valid_session_id(session_id)) throw NotFoundError("unknown session '" + session_id + "'");
  return root_ / "sessions" / session_id;
}

bool SessionStore::exists(const std::string& session_id) const {
  if (!valid_session_id(session_id)) return false;
  return fs::exists(dir(session_id) / "session.json");
}

void SessionStore::save_meta(const AuditSession& s) const {
  const fs::path d = dir(s.session_id);
  fs::create_directories(d / "revisions");
  const json meta = {{"session_id", s.session_id},
                     {"source_text", s.source_text},
                     {"output_text", s.output_text},
                     {"config", to_json(s.config)},
                     {"status", to_string(s.status)},
                     {"diagnostic", s.diagnostic},
                     {"created_at", s.created_at}};
  write_atomic(d / "session.json", meta.dump(2) + "\n");
}

void SessionStore::append_revision(const std::string& session_id, const Revision& r) const {
  const fs::path d = dir(session_id) / "revisions";
  fs::create_directories(d);
  const fs::path p = d / (std::to_string(r.revision_id) + ".json");
  if (fs::exists(p)) throw Error("revision " + std::to_string(r.revision_id) + " already exists for " + session_id);
  const json doc = {
      {"revision_id", r.revision_id}, {"output_text", r.output_text}, {"timestamp", r.timestamp}, {"graph", r.graph}};
  write_atomic(p, doc.dump(2) + "\n");
}

void SessionStore::append_feedback(const FeedbackEntry& f) const {
  std::ofstream out(dir(f.session_id) / "feedback.jsonl", std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot append feedback for " + f.session_id);
  out << to_json(f).dump() + "\n";
  out.flush();
}

std::optional<Revision> SessionStore::load_revision(const std::string& session_id, int revision_id) const {
  const fs::path p = dir(session_id) / "revisions" / (std::to_string(revision_id) + ".json");
  if (!fs::exists(p)) return std::nullopt;
  const json j = json::parse(read_file(p));
  return Revision{j.at("revision_id").get<int>(), j.at("output_text").get<std::string>(), j.at("graph"),
                  j.at("timestamp").get<std::string>()};
}

AuditSession SessionStore::load(const std::string& session_id) const {
  if (!exists(session_id)) throw NotFoundError("unknown session '" + session_id + "'");
  const fs::path d = dir(session_id);
  const json meta = json::parse(read_file(d / "session.json"));
  AuditSession s;
  s.session_id = meta.at("session_id").get<std::string>();
  s.source_text = meta.at("source_text").get<std::string>();
  s.output_text = meta.at("output_text").get<std::string>();
  s.config = pipeline_config_from_json(meta.at("config"));
  s.status = session_status_from_string(meta.at("status").get<std::string>());
  s.diagnostic = meta.value("diagnostic", "");
  s.created_at = meta.value("created_at", "");

  std::vector<int> ids;
  if (fs::exists(d / "revisions")) {
    for (const auto& entry : fs::directory_iterator(d / "revisions")) {
      const auto name = entry.path().filename().string();
      if (entry.path().extension() != ".json" || name.front() == '.') continue;
      try {
        ids.push_back(std::stoi(entry.path().stem().string()));
      } catch (const std::exception&) {
        spdlog::warn("session {}: ignoring stray file {}", session_id, name);
      }
    }
  }
  std::sort(ids.begin(), ids.end());
  for (int id : ids) {
    if (auto r = load_revision(session_id, id)) s.history.push_back(std::move(*r));
  }

  std::ifstream fb(d / "feedback.jsonl");
  std::string line;
  while (std::getline(fb, line)) {
    if (is_blank(line)) continue;
    try {
      s.feedback.push_back(feedback_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      spdlog::warn("session {}: skipping unreadable feedback line: {}", session_id, e.what());
    }
  }
  return s;
}

std::vector<std::string> SessionStore::list() const {
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(root_ / "sessions")) {
    if (entry.is_directory() && fs::exists(entry.path() / "session.json")) {
      out.push_back(entry.path().filename().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

AuditService::AuditService(fs::path store_root, const ProviderSetConfig& providers, ServiceOptions options)
    : store_(std::move(store_root)), providers_(ProviderSet::create(providers)), options_(std::move(options)) {
  options_.default_config.validate();
}

AuditService::~AuditService() { wait_idle(); }

void AuditService::wait_idle() {
  for (;;) {
    std::vector<std::thread> jobs;
    {
      std::lock_guard<std::mutex> lock(jobs_mu_);
      jobs.swap(jobs_);
    }
    if (jobs.empty()) return;
    for (auto& t : jobs) t.join();
  }
}

std::shared_ptr<std::mutex> AuditService::session_lock(const std::string& session_id) {
  std::lock_guard<std::mutex> lock(locks_mu_);
  auto& m = locks_[session_id];
  if (!m) m = std::make_shared<std::mutex>();
  return m;
}

std::string AuditService::new_session_id() {
  std::lock_guard<std::mutex> lock(id_mu_);
  for (;;) {
    std::random_device rd;
    const auto now = std::chrono::system_clock::now().time_since_epoch().count();
    const std::string seed = std::to_string(now) + ':' + std::to_string(++id_counter_) + ':' + std::to_string(rd());
    std::string id = sha256_hex(seed).substr(0, 16);
    if (!store_.exists(id)) return id;
  }
}

void AuditService::evaluate(const std::string& session_id, const std::string& output_text) {
  const auto mu = session_lock(session_id);
  std::lock_guard<std::mutex> lock(*mu);
  AuditSession s = store_.load(session_id);
  s.output_text = output_text;
  try {
    const auto result = run_audit(s.source_text, output_text, s.config, providers_);
    Revision r;
    r.revision_id = s.history.empty() ? 1 : s.history.back().revision_id + 1;
    r.output_text = output_text;
    r.graph = export_graph_json(result.document);
    r.timestamp = iso_now();
    store_.append_revision(session_id, r);
    s.status = SessionStatus::kReady;
    s.diagnostic.clear();
  } catch (const std::exception& e) {
    spdlog::warn("session {}: pipeline failed: {}", session_id, e.what());
    s.status = SessionStatus::kFailed;
    s.diagnostic = e.what();
  }
  store_.save_meta(s);
}

void AuditService::schedule(const std::string& session_id, const std::string& output_text) {
  if (!options_.async) {
    evaluate(session_id, output_text);
    return;
  }
  std::lock_guard<std::mutex> lock(jobs_mu_);
  jobs_.emplace_back([this, session_id, output_text] { evaluate(session_id, output_text); });
}

AuditSession AuditService::create_session(std::string source_text, std::string output_text,
                                          std::optional<PipelineConfig> config) {
  if (is_blank(source_text)) throw InputError("source_text is empty");
  if (is_blank(output_text)) throw InputError("output_text is empty");
  AuditSession s;
  s.session_id = new_session_id();
  s.source_text = std::move(source_text);
  s.output_text = output_text;
  s.config = config.value_or(options_.default_config);
  s.config.validate();
  s.status = SessionStatus::kPending;
  s.created_at = iso_now();
  {
    const auto mu = session_lock(s.session_id);
    std::lock_guard<std::mutex> lock(*mu);
    store_.save_meta(s);
  }
  schedule(s.session_id, output_text);
  return store_.load(s.session_id);
}

AuditSession AuditService::get_session(const std::string& session_id) const { return store_.load(session_id); }

json AuditService::graph(const std::string& session_id, std::optional<int> revision) const {
  if (!store_.exists(session_id)) throw NotFoundError("unknown session '" + session_id + "'");
  if (revision && *revision > 0) {
    auto r = store_.load_revision(session_id, *revision);
    if (!r) throw NotFoundError("session " + session_id + " has no revision " + std::to_string(*revision));
    return r->graph;
  }
  const AuditSession s = store_.load(session_id);
  if (s.history.empty()) {
    throw NotFoundError("session " + session_id + " has no evaluated revision (status " + to_string(s.status) + ")");
  }
  return s.history.back().graph;
}

json AuditService::submit_feedback(FeedbackEntry entry) {
  if (!store_.exists(entry.session_id)) throw NotFoundError("unknown session '" + entry.session_id + "'");
  if (entry.claim_id.empty()) throw InputError("feedback needs a claim_id");
  const auto mu = session_lock(entry.session_id);
  std::lock_guard<std::mutex> lock(*mu);
  const AuditSession s = store_.load(entry.session_id);
  if (entry.revision_id <= 0) {
    if (s.history.empty()) throw NotFoundError("session " + entry.session_id + " has no evaluated revision");
    entry.revision_id = s.history.back().revision_id;
  }
  const auto it = std::find_if(s.history.begin(), s.history.end(),
                               [&](const Revision& r) { return r.revision_id == entry.revision_id; });
  if (it == s.history.end()) {
    throw NotFoundError("session " + entry.session_id + " has no revision " + std::to_string(entry.revision_id));
  }
  const auto& nodes = it->graph.at("nodes");
  const bool known = std::any_of(nodes.begin(), nodes.end(),
                                 [&](const json& n) { return n.at("id").get<std::string>() == entry.claim_id; });
  if (!known) {
    throw NotFoundError("claim '" + entry.claim_id + "' not found in revision " + std::to_string(entry.revision_id));
  }
  entry.timestamp = iso_now();
  store_.append_feedback(entry);
  return {{"status", "accepted"},
          {"session_id", entry.session_id},
          {"revision_id", entry.revision_id},
          {"claim_id", entry.claim_id},
          {"feedback_count", s.feedback.size() + 1}};
}

AuditSession AuditService::reevaluate(const std::string& session_id, std::string revised_output_text) {
  if (!store_.exists(session_id)) throw NotFoundError("unknown session '" + session_id + "'");
  if (is_blank(revised_output_text)) throw InputError("revised output text is empty");
  if (options_.async) {
    const auto mu = session_lock(session_id);
    std::lock_guard<std::mutex> lock(*mu);
    AuditSession s = store_.load(session_id);
    s.status = SessionStatus::kPending;
    s.output_text = revised_output_text;
    store_.save_meta(s);
  }
  schedule(session_id, revised_output_text);
  return store_.load(session_id);
}

}  // namespace claimaudit
