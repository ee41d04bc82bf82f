// claimaudit: decompose, audit, eval-summeval, export-graph, serve.
//
// Exit codes: 0 consistent or success, 1 configuration error, 2 provider
// error, 3 hallucinated verdict.

#include <csignal>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <pthread.h>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "claimaudit/decompose.hpp"
#include "claimaudit/errors.hpp"
#include "claimaudit/evalharness.hpp"
#include "claimaudit/graph.hpp"
#include "claimaudit/pipeline.hpp"
#include "claimaudit/providers.hpp"
#include "claimaudit/service.hpp"
#include "claimaudit/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace claimaudit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitProvider = 2;
constexpr int kExitHallucinated = 3;

const std::vector<std::string> kCommands = {"decompose", "audit", "eval-summeval", "export-graph", "serve"};

struct ProviderFlags {
  std::string provider;
  std::string nli_provider;
  std::string llm_endpoint;
  std::string nli_endpoint;
  std::string model;
  std::string nli_model;
  std::string cache_dir;
  std::string stub_config;
  int embedding_dim = 0;
  double timeout = 30.0;
  int retries = 2;
};

struct PipelineFlags {
  std::string strategy = "sici";
  int radius = 0;
  std::size_t k = kDefaultTopK;
  double threshold = kDefaultDecisionThreshold;
  std::string aggregation = "max_entail";
  bool no_coref = false;
  bool include_unreferenced = false;
  double tau_nli = 0.5;
  double tau_sim = 0.5;
};

struct CommonFlags {
  std::string config;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::string log_level = "warn";
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << content;
}

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Flat key=value file; keys mirror flag names, flags win");
  cmd->add_option("--seed", f.seed, "Layout RNG seed");
  cmd->add_option("--workers", f.workers, "Parallel workers")->check(CLI::PositiveNumber);
  cmd->add_option("--log-level", f.log_level, "trace, debug, info, warn, error or off");
}

void add_provider_flags(CLI::App* cmd, ProviderFlags& f) {
  const auto kinds = CLI::IsMember({"stub", "http_llm", "local_model"});
  cmd->add_option("--provider", f.provider, "Backend kind for every capability")->check(kinds);
  cmd->add_option("--nli-provider", f.nli_provider, "Backend kind for NLI only")->check(kinds);
  cmd->add_option("--llm-endpoint", f.llm_endpoint, "Endpoint for embedding, extraction and NER");
  cmd->add_option("--nli-endpoint", f.nli_endpoint, "Endpoint for NLI");
  cmd->add_option("--model", f.model, "Model name for embedding, extraction and NER");
  cmd->add_option("--nli-model", f.nli_model, "Model name for NLI");
  cmd->add_option("--cache-dir", f.cache_dir, "Persistent response cache directory");
  cmd->add_option("--stub-config", f.stub_config, "JSON file with stub antonyms, gazetteer, predicates, markers");
  cmd->add_option("--embedding-dim", f.embedding_dim, "Embedding dimension (0 = backend default)");
  cmd->add_option("--timeout", f.timeout, "Provider timeout in seconds");
  cmd->add_option("--retries", f.retries, "Provider retries on transport errors");
}

void add_pipeline_flags(CLI::App* cmd, PipelineFlags& f, bool with_strategy, bool with_threshold = true) {
  if (with_strategy) {
    cmd->add_option("--strategy", f.strategy, "triples or sici")->check(CLI::IsMember({"triples", "sici"}));
    cmd->add_option("--radius", f.radius, "SICI window radius (0-3)");
  }
  cmd->add_option("--k", f.k, "Source matches per output claim (1-10)");
  if (with_threshold) cmd->add_option("--threshold", f.threshold, "Decision threshold in (0,1)");
  cmd->add_option("--aggregation", f.aggregation, "max_entail or mean_entail");
  cmd->add_flag("--no-coref", f.no_coref, "Disable pronoun resolution");
  cmd->add_flag("--include-unreferenced", f.include_unreferenced, "Keep unmatched source claims in the graph");
  cmd->add_option("--tau-nli", f.tau_nli, "Quadrant threshold on the NLI axis");
  cmd->add_option("--tau-sim", f.tau_sim, "Quadrant threshold on the similarity axis");
}

ProviderSetConfig provider_config(const ProviderFlags& f) {
  ProviderSetConfig cfg = ProviderSetConfig::from_environment();
  ProviderConfig* all[] = {&cfg.embedding, &cfg.nli, &cfg.extraction, &cfg.ner};
  ProviderConfig* llm_side[] = {&cfg.embedding, &cfg.extraction, &cfg.ner};
  if (!f.provider.empty()) {
    for (auto* c : all) c->kind = provider_kind_from_string(f.provider);
  }
  if (!f.nli_provider.empty()) cfg.nli.kind = provider_kind_from_string(f.nli_provider);
  if (!f.llm_endpoint.empty()) {
    for (auto* c : llm_side) c->endpoint = f.llm_endpoint;
  }
  if (!f.nli_endpoint.empty()) cfg.nli.endpoint = f.nli_endpoint;
  if (!f.model.empty()) {
    for (auto* c : llm_side) c->model_name = f.model;
  }
  if (!f.nli_model.empty()) cfg.nli.model_name = f.nli_model;
  StubSettings stub = StubSettings::defaults();
  if (!f.stub_config.empty()) {
    json j;
    try {
      j = json::parse(read_text(f.stub_config));
    } catch (const json::parse_error& e) {
      throw ConfigError("stub config " + f.stub_config + " is not valid JSON: " + e.what());
    }
    stub = stub_settings_from_json(j);
  }
  for (auto* c : all) {
    if (!f.cache_dir.empty()) c->cache_dir = f.cache_dir;
    c->stub = stub;
    c->embedding_dim = f.embedding_dim;
    c->timeout_seconds = f.timeout;
    c->retries = f.retries;
    c->validate();
  }
  return cfg;
}

PipelineConfig pipeline_config(const PipelineFlags& f, const CommonFlags& common) {
  PipelineConfig cfg;
  try {
    cfg.decompose.strategy = strategy_from_string(f.strategy);
    cfg.aggregation = aggregation_from_string(f.aggregation);
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  cfg.decompose.window_radius = f.radius;
  cfg.decompose.coref = !f.no_coref;
  cfg.k = f.k;
  cfg.threshold = f.threshold;
  cfg.include_unreferenced = f.include_unreferenced;
  cfg.quadrant_thresholds = {f.tau_nli, f.tau_sim};
  cfg.layout.rng_seed = common.seed;
  try {
    cfg.validate();
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

void configure_logging(const std::string& level) {
  auto logger = spdlog::stderr_color_mt("claimaudit");
  spdlog::set_default_logger(logger);
  const auto lvl = spdlog::level::from_str(level);
  if (lvl == spdlog::level::off && level != "off") throw ConfigError("unknown log level '" + level + "'");
  spdlog::set_level(lvl);
}

// Splices "--key=value" tokens from the --config file right after the
// subcommand name, so options given on the command line (parsed later with
// take-last semantics) override them.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::size_t cmd_pos = args.size();
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (std::find(kCommands.begin(), kCommands.end(), args[i]) != kCommands.end()) {
      cmd_pos = i;
      break;
    }
  }
  if (cmd_pos == args.size()) return args;
  std::string config_path;
  for (std::size_t i = cmd_pos + 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (config_path.empty()) return args;

  std::istringstream in(read_text(config_path));
  std::vector<std::string> injected;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string_view t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(config_path + ":" + std::to_string(line_no) + ": expected key=value");
    }
    std::string key(trim(t.substr(0, eq)));
    const std::string value(trim(t.substr(eq + 1)));
    if (key.rfind("--", 0) == 0) key.erase(0, 2);
    if (key.empty() || key == "config") {
      throw ConfigError(config_path + ":" + std::to_string(line_no) + ": invalid key");
    }
    injected.push_back("--" + key + "=" + value);
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(cmd_pos) + 1, injected.begin(), injected.end());
  return args;
}

int run_decompose(const std::string& input, const std::string& origin, const PipelineFlags& pf,
                  const ProviderFlags& prov, const CommonFlags& common) {
  const PipelineConfig cfg = pipeline_config(pf, common);
  auto providers = ProviderSet::create(provider_config(prov));
  const std::string text = read_text(input);
  Origin o;
  try {
    o = origin_from_string(origin);
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  const auto d = decompose(text, o, cfg.decompose, providers);
  if (d.extraction_failed) {
    std::cout << json{{"extraction_failed", true}, {"failure_reason", d.failure_reason}}.dump() << '\n';
    return kExitOk;
  }
  for (const auto& c : d.claims) std::cout << to_json(c).dump() << '\n';
  return kExitOk;
}

int run_audit_cmd(const std::string& source, const std::string& output, const std::string& json_path,
                  const std::string& svg_path, const PipelineFlags& pf, const ProviderFlags& prov,
                  const CommonFlags& common) {
  const PipelineConfig cfg = pipeline_config(pf, common);
  auto providers = ProviderSet::create(provider_config(prov));
  const std::string source_text = read_text(source);
  const std::string output_text = read_text(output);
  const auto result = run_audit(source_text, output_text, cfg, providers);
  const std::string doc = dump_graph_json(export_graph_json(result.document));
  if (json_path.empty() || json_path == "-") {
    std::cout << doc;
  } else {
    write_text(json_path, doc);
  }
  if (!svg_path.empty()) write_text(svg_path, render_svg(result.document));
  const auto& v = result.verdict;
  std::cerr << "verdict: " << to_string(v.label) << " (score " << v.response_score << ", threshold " << v.threshold
            << (v.failure_forced ? ", extraction failed" : "") << ")\n";
  return v.label == Label::kConsistent ? kExitOk : kExitHallucinated;
}

int run_eval(const std::string& data, const std::string& method_name, const std::string& subset,
             std::optional<double> threshold, bool sweep, const std::string& report_dir, const PipelineFlags& pf,
             const ProviderFlags& prov, const CommonFlags& common) {
  const Method method = method_from_string(method_name);
  PipelineConfig base = pipeline_config(pf, common);
  const ProviderSetConfig pcfg = provider_config(prov);
  auto providers = ProviderSet::create(pcfg);

  SummEvalDataset ds;
  try {
    ds = load_summeval(data);
  } catch (const ParseError& e) {
    throw ConfigError(data + ": " + e.what());
  }
  auto records = ds.records;
  if (!subset.empty()) records = select_subset(records, load_subset(subset));

  RunOptions opts;
  opts.workers = common.workers;
  opts.threshold = threshold.value_or(base.threshold);
  const EvalReport report = run_method(records, method, base, providers, opts);

  std::optional<SweepResult> curve;
  if (sweep) {
    std::vector<double> scores;
    std::vector<Label> labels;
    for (const auto& ex : report.per_example) {
      scores.push_back(ex.score);
      labels.push_back(ex.label);
    }
    curve = sweep_threshold(scores, labels);
  }

  if (!report_dir.empty()) {
    json snapshot = {{"method", to_string(method)},
                     {"data", data},
                     {"subset", subset},
                     {"threshold", opts.threshold},
                     {"workers", opts.workers},
                     {"records", records.size()},
                     {"skipped", ds.skipped},
                     {"pipeline", to_json(pipeline_for(method, base))}};
    json providers_json = json::object();
    const std::pair<const char*, const ProviderConfig*> roles[] = {
        {"embedding", &pcfg.embedding}, {"nli", &pcfg.nli}, {"extraction", &pcfg.extraction}, {"ner", &pcfg.ner}};
    for (const auto& [role, c] : roles) {
      providers_json[role] = {{"kind", to_string(c->kind)},
                              {"endpoint", c->endpoint},
                              {"model_name", c->model_name},
                              {"cache_dir", c->cache_dir.string()}};
    }
    snapshot["providers"] = std::move(providers_json);
    write_report(report_dir, report, snapshot, curve);
  }

  std::cout << "method: " << report.method_name << '\n';
  std::cout << "n: " << report.n << " (tp " << report.counts.tp << ", tn " << report.counts.tn << ", fp "
            << report.counts.fp << ", fn " << report.counts.fn << ")\n";
  if (report.balanced_accuracy) {
    std::cout << "balanced_accuracy: " << *report.balanced_accuracy << '\n';
  } else {
    std::cout << "balanced_accuracy: undefined (single class)\n";
  }
  if (curve) {
    std::cout << "best_threshold: " << curve->best_threshold << '\n';
    std::cout << "best_balanced_accuracy: " << curve->best_balanced_accuracy << '\n';
  }
  std::cout << "wall_clock_seconds: " << report.wall_clock_seconds << '\n';
  std::cout << "provider_invocations: " << report.provider_invocations << '\n';
  if (!report.unevaluable.empty()) {
    std::cout << "unevaluable: " << report.unevaluable.size() << '\n';
    return kExitProvider;
  }
  return kExitOk;
}

int run_export(const std::string& session_dir, int revision, const std::string& svg_path) {
  const fs::path dir = fs::path(session_dir).lexically_normal();
  const fs::path clean = dir.filename().empty() ? dir.parent_path() : dir;
  if (!fs::exists(clean / "session.json")) throw ConfigError("not a session directory: " + session_dir);
  const SessionStore store(clean.parent_path().parent_path());
  const std::string id = clean.filename().string();
  json graph;
  if (revision > 0) {
    auto r = store.load_revision(id, revision);
    if (!r) throw ConfigError("session " + id + " has no revision " + std::to_string(revision));
    graph = r->graph;
  } else {
    const auto s = store.load(id);
    if (s.history.empty()) throw ConfigError("session " + id + " has no evaluated revision");
    graph = s.history.back().graph;
  }
  std::cout << dump_graph_json(graph);
  if (!svg_path.empty()) write_text(svg_path, render_svg(parse_graph_json(graph)));
  return kExitOk;
}

int run_serve(const std::string& store_dir, std::optional<int> port, const std::string& host, bool async_mode,
              const PipelineFlags& pf, const ProviderFlags& prov, const CommonFlags& common) {
  ServiceOptions sopts;
  sopts.async = async_mode;
  sopts.default_config = pipeline_config(pf, common);
  ServerOptions server_opts = ServerOptions::from_environment();
  if (port) server_opts.port = *port;
  if (!host.empty()) server_opts.host = host;

  // Signals are taken synchronously by this thread; block them before any
  // worker thread exists so they inherit the mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  AuditService service(store_dir, provider_config(prov), sopts);
  AuditHttpServer server(service, server_opts);
  if (!server.bind()) {
    std::cerr << "error: cannot bind " << server_opts.host << ":" << server_opts.port << " (port in use?)\n";
    return kExitConfig;
  }
  server.start_background();
  std::cerr << "listening on " << server_opts.host << ":" << server.port() << '\n';
  int sig = 0;
  sigwait(&signals, &sig);
  std::cerr << "shutting down\n";
  server.stop();
  service.wait_idle();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Claim-level factual consistency auditing"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  CommonFlags common;
  ProviderFlags prov;
  PipelineFlags pf;

  auto* dec = app.add_subcommand("decompose", "Split a document into claims (JSON lines)");
  std::string dec_input;
  std::string dec_origin = "output";
  dec->add_option("--input", dec_input, "Document file")->required();
  dec->add_option("--origin", dec_origin, "source or output");
  add_common(dec, common);
  add_provider_flags(dec, prov);
  add_pipeline_flags(dec, pf, true);

  auto* aud = app.add_subcommand("audit", "Audit one output against its source");
  std::string aud_source;
  std::string aud_output;
  std::string aud_json;
  std::string aud_svg;
  aud->add_option("--source", aud_source, "Source context file")->required();
  aud->add_option("--output", aud_output, "Model output file")->required();
  aud->add_option("--json", aud_json, "Graph document path (default stdout)");
  aud->add_option("--svg", aud_svg, "Static SVG scatter path");
  add_common(aud, common);
  add_provider_flags(aud, prov);
  add_pipeline_flags(aud, pf, true);

  auto* ev = app.add_subcommand("eval-summeval", "Run a detection method over SummEval");
  std::string ev_data;
  std::string ev_method;
  std::string ev_subset;
  std::string ev_report;
  std::optional<double> ev_threshold;
  bool ev_sweep = false;
  ev->add_option("--data", ev_data, "SummEval annotated-pairs JSONL")->required();
  ev->add_option("--method", ev_method, "hhem_baseline, grapheval_plus, sici_0 or sici_1")->required();
  ev->add_option("--subset", ev_subset, "File of record indices");
  ev->add_option("--threshold", ev_threshold, "Decision threshold in (0,1)");
  ev->add_flag("--sweep", ev_sweep, "Sweep the threshold grid and write sweep.csv");
  ev->add_option("--report", ev_report, "Report directory");
  add_common(ev, common);
  add_provider_flags(ev, prov);
  add_pipeline_flags(ev, pf, false, false);

  auto* exp = app.add_subcommand("export-graph", "Print a saved session's graph document");
  std::string exp_session;
  int exp_revision = 0;
  std::string exp_svg;
  exp->add_option("--session", exp_session, "Session directory (<store>/sessions/<id>)")->required();
  exp->add_option("--revision", exp_revision, "Revision number (default latest)");
  exp->add_option("--svg", exp_svg, "Static SVG scatter path");
  add_common(exp, common);

  auto* srv = app.add_subcommand("serve", "Run the HTTP audit service");
  std::string srv_store = "audit-store";
  std::optional<int> srv_port;
  std::string srv_host;
  bool srv_async = false;
  srv->add_option("--store", srv_store, "Session store directory");
  srv->add_option("--port", srv_port, "Port (default AUDIT_SERVICE_PORT or 8750)");
  srv->add_option("--host", srv_host, "Bind address (default 0.0.0.0)");
  srv->add_flag("--async", srv_async, "Run evaluations in the background");
  add_common(srv, common);
  add_provider_flags(srv, prov);
  add_pipeline_flags(srv, pf, true);

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = expand_config(std::move(args));
    std::vector<const char*> cargs;
    for (const auto& a : args) cargs.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e);
      return code == 0 ? kExitOk : kExitConfig;
    }
    configure_logging(common.log_level);

    if (*dec) return run_decompose(dec_input, dec_origin, pf, prov, common);
    if (*aud) return run_audit_cmd(aud_source, aud_output, aud_json, aud_svg, pf, prov, common);
    if (*ev) return run_eval(ev_data, ev_method, ev_subset, ev_threshold, ev_sweep, ev_report, pf, prov, common);
    if (*exp) return run_export(exp_session, exp_revision, exp_svg);
    if (*srv) return run_serve(srv_store, srv_port, srv_host, srv_async, pf, prov, common);
    return kExitConfig;
  } catch (const TransportError& e) {
    std::cerr << "provider error: " << e.what() << '\n';
    return kExitProvider;
  } catch (const DecodeError& e) {
    std::cerr << "provider error: " << e.what() << '\n';
    return kExitProvider;
  } catch (const JudgmentError& e) {
    std::cerr << "provider error: " << e.what() << '\n';
    return kExitProvider;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}
