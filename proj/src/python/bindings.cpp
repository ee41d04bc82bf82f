// Python bindings. Structured values cross the boundary as JSON text; the
// claimaudit package decodes them into dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "claimaudit/errors.hpp"
#include "claimaudit/evalharness.hpp"
#include "claimaudit/graph.hpp"
#include "claimaudit/pipeline.hpp"
#include "claimaudit/providers.hpp"
#include "claimaudit/score.hpp"

namespace py = pybind11;
using namespace claimaudit;
using nlohmann::json;

namespace {

json parse_or_throw(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string(what) + " is not valid JSON: " + e.what());
  }
}

class Auditor {
 public:
  Auditor(const std::optional<std::string>& stub_config, const std::optional<std::string>& cache_dir,
          bool from_environment) {
    ProviderSetConfig cfg = from_environment ? ProviderSetConfig::from_environment() : ProviderSetConfig{};
    ProviderConfig* all[] = {&cfg.embedding, &cfg.nli, &cfg.extraction, &cfg.ner};
    for (auto* c : all) {
      if (stub_config) c->stub = stub_settings_from_json(parse_or_throw(*stub_config, "stub config"));
      if (cache_dir) c->cache_dir = *cache_dir;
      c->validate();
    }
    providers_ = ProviderSet::create(cfg);
  }

  std::string audit(const std::string& source, const std::string& output, const std::string& config_json) {
    const PipelineConfig cfg = config_json.empty() ? PipelineConfig{}
                                                    : pipeline_config_from_json(parse_or_throw(config_json, "config"));
    const auto result = run_audit(source, output, cfg, providers_);
    return dump_graph_json(export_graph_json(result.document));
  }

  std::string decompose_text(const std::string& text, const std::string& strategy, int radius, bool coref) {
    DecomposeConfig cfg;
    cfg.strategy = strategy_from_string(strategy);
    cfg.window_radius = radius;
    cfg.coref = coref;
    const auto d = claimaudit::decompose(text, Origin::kOutput, cfg, providers_);
    json claims = json::array();
    for (const auto& c : d.claims) claims.push_back(to_json(c));
    return json{{"claims", claims}, {"extraction_failed", d.extraction_failed}, {"failure_reason", d.failure_reason}}
        .dump();
  }

  std::string evaluate(const std::string& data_path, const std::string& method, std::size_t workers,
                       const std::optional<std::vector<std::size_t>>& subset) {
    const Method m = method_from_string(method);
    auto records = load_summeval(data_path).records;
    if (subset) records = select_subset(records, *subset);
    RunOptions opts;
    opts.workers = workers;
    const auto report = run_method(records, m, {}, providers_, opts);
    return to_json(report).dump();
  }

  std::size_t invocations() const { return providers_.total_invocations(); }

 private:
  ProviderSet providers_;
};

Label label_of(bool consistent) { return consistent ? Label::kConsistent : Label::kHallucinated; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Claim-level hallucination auditing core";

  auto base = py::register_exception<Error>(m, "ClaimAuditError", PyExc_RuntimeError);
  py::register_exception<InputError>(m, "InputError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<TransportError>(m, "TransportError", base.ptr());
  py::register_exception<DecodeError>(m, "DecodeError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<ConsistencyError>(m, "ConsistencyError", base.ptr());
  py::register_exception<NotFoundError>(m, "NotFoundError", base.ptr());
  py::register_exception<MetricError>(m, "MetricError", base.ptr());
  py::register_exception<JudgmentError>(m, "JudgmentError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());

  py::class_<Auditor>(m, "Auditor")
      .def(py::init<const std::optional<std::string>&, const std::optional<std::string>&, bool>(),
           py::arg("stub_config") = std::nullopt, py::arg("cache_dir") = std::nullopt,
           py::arg("from_environment") = false)
      .def("audit", &Auditor::audit, py::arg("source"), py::arg("output"), py::arg("config_json") = "",
           py::call_guard<py::gil_scoped_release>())
      .def("decompose", &Auditor::decompose_text, py::arg("text"), py::arg("strategy") = "sici",
           py::arg("radius") = 0, py::arg("coref") = true, py::call_guard<py::gil_scoped_release>())
      .def("evaluate", &Auditor::evaluate, py::arg("data_path"), py::arg("method"), py::arg("workers") = 1,
           py::arg("subset") = std::nullopt, py::call_guard<py::gil_scoped_release>())
      .def_property_readonly("invocations", &Auditor::invocations);

  m.def("confidence", [](double nli, double sim) { return confidence(nli, sim); }, py::arg("nli"), py::arg("avg_sim"));
  m.def(
      "classify_quadrant", [](double nli, double sim) { return to_string(classify_quadrant(nli, sim)); },
      py::arg("nli"), py::arg("avg_sim"));
  m.def(
      "assign_color", [](double conf) { return to_string(assign_color(conf)); }, py::arg("confidence"));
  m.def(
      "balanced_accuracy",
      [](const std::vector<bool>& preds, const std::vector<bool>& labels) {
        std::vector<Label> p;
        std::vector<Label> l;
        for (bool b : preds) p.push_back(label_of(b));
        for (bool b : labels) l.push_back(label_of(b));
        return balanced_accuracy(p, l);
      },
      py::arg("predicted_consistent"), py::arg("labelled_consistent"));
  m.def(
      "layout",
      [](const std::string& graph_json) {
        const auto doc = parse_graph_json(parse_or_throw(graph_json, "graph"));
        const auto result = layout(doc.graph, doc.layout);
        json out = json::array();
        for (const auto& p : result.positions) out.push_back({{"id", p.claim_id}, {"x", p.x}, {"y", p.y}});
        return out.dump();
      },
      py::arg("graph_json"));
  m.def(
      "render_svg",
      [](const std::string& graph_json) { return render_svg(parse_graph_json(parse_or_throw(graph_json, "graph"))); },
      py::arg("graph_json"));
  m.def("document_id", [](const std::string& text) { return document_id(text); }, py::arg("text"));
  m.attr("GRAPH_SCHEMA_VERSION") = kGraphSchemaVersion;
}
