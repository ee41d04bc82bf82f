#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "claimaudit/decompose.hpp"
#include "claimaudit/graph.hpp"
#include "claimaudit/judge.hpp"
#include "claimaudit/match.hpp"
#include "claimaudit/providers.hpp"
#include "claimaudit/score.hpp"

namespace claimaudit {

struct PipelineConfig {
  // Output side. The source side uses the same strategy with radius 0, so
  // source claims are single sentences.
  DecomposeConfig decompose;
  std::size_t k = kDefaultTopK;
  Aggregation aggregation = Aggregation::kMaxEntail;
  double threshold = kDefaultDecisionThreshold;
  ConfidenceWeights weights;
  QuadrantThresholds quadrant_thresholds;
  QuadrantTable quadrant_table;
  ColorBands bands;
  LayoutConfig layout;
  bool include_unreferenced = false;

  void validate() const;
  bool operator==(const PipelineConfig&) const = default;
};

struct AuditResult {
  Decomposition output;
  Decomposition source;
  std::vector<MatchSet> matchsets;
  std::vector<ClaimJudgment> judgments;
  std::vector<ClaimAssessment> assessments;
  ResponseVerdict verdict;
  GraphDocument document;

  bool extraction_failed() const { return output.extraction_failed || source.extraction_failed; }
};

// decompose -> match -> judge -> score -> graph for one source/output pair.
// Extraction failure on either side yields a forced hallucinated verdict and
// a document with no nodes. JudgmentError propagates.
AuditResult run_audit(std::string_view source_text, std::string_view output_text, const PipelineConfig& cfg,
                      ProviderSet& providers);

std::string document_id(std::string_view text);

nlohmann::json to_json(const PipelineConfig& cfg);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

}  // namespace claimaudit
