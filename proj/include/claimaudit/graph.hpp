#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "claimaudit/decompose.hpp"
#include "claimaudit/judge.hpp"
#include "claimaudit/match.hpp"
#include "claimaudit/score.hpp"

namespace claimaudit {

inline constexpr int kGraphSchemaVersion = 1;

struct GraphNode {
  Claim claim;
  std::optional<ClaimAssessment> assessment;  // output nodes only

  const std::string& id() const { return claim.id; }
  bool operator==(const GraphNode&) const = default;
};

struct GraphEdge {
  std::string output_claim_id;
  std::string source_claim_id;
  double similarity = 0.0;
  std::optional<NliVerdict> nli;

  double sim01() const { return similarity > 0.0 ? similarity : 0.0; }
  bool operator==(const GraphEdge&) const = default;
};

struct DocumentIds {
  std::string source;
  std::string output;
  bool operator==(const DocumentIds&) const = default;
};

struct ClaimGraph {
  std::vector<GraphNode> nodes;  // output nodes first, then source nodes, each in claim order
  std::vector<GraphEdge> edges;
  DocumentIds doc_ids;

  std::optional<std::size_t> index_of(const std::string& claim_id) const;
  bool operator==(const ClaimGraph&) const = default;
};

// Output claims each need a match set and an assessment. `judgments` is
// optional and, when given, attaches per-edge NLI verdicts.
ClaimGraph build_graph(const std::vector<Claim>& output_claims, const std::vector<Claim>& source_claims,
                       const std::vector<MatchSet>& matchsets, const std::vector<ClaimAssessment>& assessments,
                       const std::vector<ClaimJudgment>& judgments = {}, bool include_unreferenced = false,
                       DocumentIds doc_ids = {});

struct LayoutConfig {
  double node_radius = 0.02;
  double anchor_strength = 1.0;
  double spring_strength = 0.3;
  double repulsion_strength = 0.005;
  double rest_min = 0.05;
  double rest_max = 0.6;
  int iterations = 300;
  double step = 0.01;
  std::uint64_t rng_seed = 0;
  // Output nodes are kept this close to their anchor on x (and on y when the
  // separation constraint allows it).
  double anchor_tolerance = 0.05;

  void validate() const;
  double rest_length(double sim01) const;
  bool operator==(const LayoutConfig&) const = default;
};

struct NodePosition {
  std::string claim_id;
  double x = 0.0;
  double y = 0.0;
  bool operator==(const NodePosition&) const = default;
};

struct LayoutResult {
  std::vector<NodePosition> positions;  // aligned with graph.nodes
  // Node pairs still closer than 2 * node_radius; empty on success.
  std::vector<std::pair<std::string, std::string>> overlaps;
};

LayoutResult layout(const ClaimGraph& graph, const LayoutConfig& cfg = {});

// Everything the audit UI needs to render one revision.
struct GraphDocument {
  ClaimGraph graph;
  std::vector<NodePosition> positions;
  std::optional<ResponseMetrics> metrics;
  std::optional<ResponseVerdict> verdict;
  QuadrantThresholds thresholds;
  ConfidenceWeights weights;
  ColorBands bands;
  QuadrantTable quadrants;
  LayoutConfig layout;
  std::vector<std::pair<std::string, std::string>> overlaps;
  bool extraction_failed = false;
  std::string failure_reason;

  bool operator==(const GraphDocument&) const = default;
};

// Keys are emitted in sorted order so equal documents serialize to equal
// bytes. A graph without nodes is accepted only for failed extractions.
nlohmann::json export_graph_json(const GraphDocument& doc);
GraphDocument parse_graph_json(const nlohmann::json& j);
std::string dump_graph_json(const nlohmann::json& j);

// Static scatter with quadrant gridlines for headless use.
std::string render_svg(const GraphDocument& doc, int size_px = 640);

}  // namespace claimaudit
