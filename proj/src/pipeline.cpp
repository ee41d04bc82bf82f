#include "claimaudit/pipeline.hpp"

#include "claimaudit/errors.hpp"
#include "claimaudit/text.hpp"

namespace claimaudit {

using nlohmann::json;

void PipelineConfig::validate() const {
  decompose.validate();
  if (k < 1 || k > kMaxTopK) throw ConfigError("k must lie in 1.." + std::to_string(kMaxTopK));
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in (0,1)");
  try {
    weights.validate();
    quadrant_thresholds.validate();
    bands.validate();
    layout.validate();
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
}

std::string document_id(std::string_view text) { return sha256_hex(text).substr(0, 16); }

AuditResult run_audit(std::string_view source_text, std::string_view output_text, const PipelineConfig& cfg,
                      ProviderSet& providers) {
  cfg.validate();
  if (is_blank(source_text)) throw InputError("source text is empty");
  if (is_blank(output_text)) throw InputError("output text is empty");

  AuditResult r;
  DecomposeConfig source_cfg = cfg.decompose;
  source_cfg.window_radius = 0;
  r.output = decompose(output_text, Origin::kOutput, cfg.decompose, providers);
  r.source = decompose(source_text, Origin::kSource, source_cfg, providers);

  GraphDocument& doc = r.document;
  doc.graph.doc_ids = {document_id(source_text), document_id(output_text)};
  doc.thresholds = cfg.quadrant_thresholds;
  doc.weights = cfg.weights;
  doc.bands = cfg.bands;
  doc.quadrants = cfg.quadrant_table;
  doc.layout = cfg.layout;

  if (r.extraction_failed()) {
    r.verdict = judge_response({}, true, cfg.threshold);
    doc.verdict = r.verdict;
    doc.extraction_failed = true;
    doc.failure_reason = r.output.extraction_failed ? "output: " + r.output.failure_reason
                                                    : "source: " + r.source.failure_reason;
    return r;
  }

  r.matchsets = match_claims(r.output.claims, r.source.claims, cfg.k, providers);
  r.judgments.reserve(r.output.claims.size());
  r.assessments.reserve(r.output.claims.size());
  for (std::size_t i = 0; i < r.output.claims.size(); ++i) {
    auto j = judge_claim(r.output.claims[i], r.matchsets[i], r.source.claims, *providers.nli, cfg.aggregation);
    r.assessments.push_back(assess_claim(j.claim_id, j.nli_score, j.avg_similarity, cfg.weights,
                                         cfg.quadrant_thresholds, cfg.bands, cfg.quadrant_table));
    r.judgments.push_back(std::move(j));
  }
  r.verdict = judge_response(r.judgments, false, cfg.threshold);

  doc.graph = build_graph(r.output.claims, r.source.claims, r.matchsets, r.assessments, r.judgments,
                          cfg.include_unreferenced, doc.graph.doc_ids);
  auto placed = layout(doc.graph, cfg.layout);
  doc.positions = std::move(placed.positions);
  doc.overlaps = std::move(placed.overlaps);
  doc.metrics = response_metrics(r.assessments, cfg.weights);
  doc.verdict = r.verdict;
  return r;
}

json to_json(const PipelineConfig& cfg) {
  const auto& l = cfg.layout;
  return {{"strategy", to_string(cfg.decompose.strategy)},
          {"window_radius", cfg.decompose.window_radius},
          {"coref", cfg.decompose.coref},
          {"k", cfg.k},
          {"aggregation", to_string(cfg.aggregation)},
          {"threshold", cfg.threshold},
          {"weights", to_json(cfg.weights)},
          {"quadrant_thresholds", to_json(cfg.quadrant_thresholds)},
          {"quadrant_table", to_json(cfg.quadrant_table)},
          {"bands", to_json(cfg.bands)},
          {"include_unreferenced", cfg.include_unreferenced},
          {"layout",
           {{"node_radius", l.node_radius},
            {"anchor_strength", l.anchor_strength},
            {"spring_strength", l.spring_strength},
            {"repulsion_strength", l.repulsion_strength},
            {"rest_min", l.rest_min},
            {"rest_max", l.rest_max},
            {"iterations", l.iterations},
            {"step", l.step},
            {"rng_seed", l.rng_seed},
            {"anchor_tolerance", l.anchor_tolerance}}}};
}

PipelineConfig pipeline_config_from_json(const json& j) {
  PipelineConfig c;
  try {
    c.decompose.strategy = strategy_from_string(j.value("strategy", to_string(c.decompose.strategy)));
    c.decompose.window_radius = j.value("window_radius", c.decompose.window_radius);
    c.decompose.coref = j.value("coref", c.decompose.coref);
    c.k = j.value("k", c.k);
    c.aggregation = aggregation_from_string(j.value("aggregation", to_string(c.aggregation)));
    c.threshold = j.value("threshold", c.threshold);
    if (j.contains("weights")) c.weights = weights_from_json(j["weights"]);
    if (j.contains("quadrant_thresholds")) c.quadrant_thresholds = thresholds_from_json(j["quadrant_thresholds"]);
    if (j.contains("quadrant_table")) c.quadrant_table = quadrant_table_from_json(j["quadrant_table"]);
    if (j.contains("bands")) c.bands = bands_from_json(j["bands"]);
    c.include_unreferenced = j.value("include_unreferenced", c.include_unreferenced);
    if (j.contains("layout")) {
      const auto& l = j["layout"];
      c.layout.node_radius = l.value("node_radius", c.layout.node_radius);
      c.layout.anchor_strength = l.value("anchor_strength", c.layout.anchor_strength);
      c.layout.spring_strength = l.value("spring_strength", c.layout.spring_strength);
      c.layout.repulsion_strength = l.value("repulsion_strength", c.layout.repulsion_strength);
      c.layout.rest_min = l.value("rest_min", c.layout.rest_min);
      c.layout.rest_max = l.value("rest_max", c.layout.rest_max);
      c.layout.iterations = l.value("iterations", c.layout.iterations);
      c.layout.step = l.value("step", c.layout.step);
      c.layout.rng_seed = l.value("rng_seed", c.layout.rng_seed);
      c.layout.anchor_tolerance = l.value("anchor_tolerance", c.layout.anchor_tolerance);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed pipeline config: ") + e.what());
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

}  // namespace claimaudit
