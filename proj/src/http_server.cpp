#include <cstdlib>
#include <functional>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "claimaudit/errors.hpp"
#include "claimaudit/graph.hpp"
#include "claimaudit/service.hpp"

namespace claimaudit {

using nlohmann::json;

namespace {

constexpr const char* kSessionId = "([A-Za-z0-9_-]+)";

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}, {"status", status}});
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) throw InputError("request body is empty");
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) throw InputError("request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw InputError(std::string("request body is not valid JSON: ") + e.what());
  }
}

std::string required_string(const json& body, const char* key) {
  const auto it = body.find(key);
  if (it == body.end() || !it->is_string()) throw InputError(std::string("missing string field '") + key + "'");
  return it->get<std::string>();
}

using RouteFn = std::function<void(const httplib::Request&, httplib::Response&)>;

httplib::Server::Handler guarded(RouteFn fn) {
  return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const NotFoundError& e) {
      send_error(res, 404, e.what());
    } catch (const InputError& e) {
      send_error(res, 400, e.what());
    } catch (const ConfigError& e) {
      send_error(res, 400, e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, e.what());
    } catch (const std::exception& e) {
      spdlog::error("{} {}: {}", req.method, req.path, e.what());
      send_error(res, 500, e.what());
    }
  };
}

}  // namespace

ServerOptions ServerOptions::from_environment() {
  ServerOptions o;
  if (const char* port = std::getenv("AUDIT_SERVICE_PORT"); port && *port) {
    try {
      o.port = std::stoi(port);
    } catch (const std::exception&) {
      throw ConfigError(std::string("AUDIT_SERVICE_PORT is not a port number: ") + port);
    }
    if (o.port < 0 || o.port > 65535) throw ConfigError(std::string("AUDIT_SERVICE_PORT out of range: ") + port);
  }
  if (const char* origin = std::getenv("AUDIT_UI_ORIGIN"); origin && *origin) o.cors_origin = origin;
  return o;
}

struct AuditHttpServer::Impl {
  httplib::Server server;
};

AuditHttpServer::AuditHttpServer(AuditService& service, ServerOptions options)
    : impl_(std::make_unique<Impl>()), options_(std::move(options)) {
  auto& svr = impl_->server;
  const std::string origin = options_.cors_origin;

  svr.set_post_routing_handler([origin](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
  svr.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  svr.Get("/healthz", guarded([](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, {{"status", "ok"}});
          }));

  svr.Post("/sessions", guarded([&service](const httplib::Request& req, httplib::Response& res) {
             const json body = parse_body(req);
             std::optional<PipelineConfig> cfg;
             if (body.contains("config") && !body["config"].is_null()) {
               cfg = pipeline_config_from_json(body["config"]);
             }
             const auto s = service.create_session(required_string(body, "source_text"),
                                                   required_string(body, "output_text"), cfg);
             send_json(res, 201, to_json(s));
           }));

  svr.Get(std::string("/sessions/") + kSessionId,
          guarded([&service](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, to_json(service.get_session(req.matches[1])));
          }));

  svr.Get(std::string("/sessions/") + kSessionId + "/graph",
          guarded([&service](const httplib::Request& req, httplib::Response& res) {
            std::optional<int> revision;
            if (req.has_param("revision")) {
              const std::string v = req.get_param_value("revision");
              try {
                std::size_t pos = 0;
                revision = std::stoi(v, &pos);
                if (pos != v.size()) throw std::invalid_argument(v);
              } catch (const std::exception&) {
                throw InputError("revision must be an integer, got '" + v + "'");
              }
            }
            res.status = 200;
            res.set_content(dump_graph_json(service.graph(req.matches[1], revision)), "application/json");
          }));

  svr.Post(std::string("/sessions/") + kSessionId + "/feedback",
           guarded([&service](const httplib::Request& req, httplib::Response& res) {
             const json body = parse_body(req);
             FeedbackEntry f;
             f.session_id = req.matches[1];
             f.revision_id = body.value("revision_id", 0);
             f.claim_id = required_string(body, "claim_id");
             f.verdict_override = feedback_verdict_from_string(required_string(body, "verdict_override"));
             f.comment = body.value("comment", "");
             send_json(res, 201, service.submit_feedback(std::move(f)));
           }));

  svr.Post(std::string("/sessions/") + kSessionId + "/reevaluate",
           guarded([&service](const httplib::Request& req, httplib::Response& res) {
             const json body = parse_body(req);
             const auto s = service.reevaluate(req.matches[1], required_string(body, "output_text"));
             send_json(res, 200, to_json(s));
           }));
}

AuditHttpServer::~AuditHttpServer() { stop(); }

bool AuditHttpServer::bind() {
  auto& svr = impl_->server;
  // The library default adds SO_REUSEPORT, which would let a second server
  // share a port that is already taken.
  svr.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  if (options_.port == 0) {
    port_ = svr.bind_to_any_port(options_.host);
    return port_ > 0;
  }
  if (!svr.bind_to_port(options_.host, options_.port)) return false;
  port_ = options_.port;
  return true;
}

void AuditHttpServer::serve() { impl_->server.listen_after_bind(); }

void AuditHttpServer::start_background() {
  thread_ = std::thread([this] { serve(); });
  impl_->server.wait_until_ready();
}

void AuditHttpServer::stop() {
  if (impl_) impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace claimaudit
