#include "claimaudit/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "claimaudit/errors.hpp"

namespace claimaudit {

using nlohmann::json;

std::optional<std::size_t> ClaimGraph::index_of(const std::string& claim_id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].claim.id == claim_id) return i;
  }
  return std::nullopt;
}

ClaimGraph build_graph(const std::vector<Claim>& output_claims, const std::vector<Claim>& source_claims,
                       const std::vector<MatchSet>& matchsets, const std::vector<ClaimAssessment>& assessments,
                       const std::vector<ClaimJudgment>& judgments, bool include_unreferenced, DocumentIds doc_ids) {
  if (output_claims.empty()) throw ConsistencyError("build_graph: no output claims", {});
  if (matchsets.empty()) throw ConsistencyError("build_graph: no match sets", {});

  std::set<std::string> output_ids;
  std::set<std::string> source_ids;
  for (const auto& c : output_claims) output_ids.insert(c.id);
  for (const auto& c : source_claims) source_ids.insert(c.id);

  std::vector<std::string> offenders;
  std::unordered_map<std::string, const MatchSet*> match_by_id;
  std::set<std::string> referenced;
  for (const auto& ms : matchsets) {
    if (!output_ids.count(ms.output_claim_id)) offenders.push_back(ms.output_claim_id);
    match_by_id[ms.output_claim_id] = &ms;
    for (const auto& e : ms.edges) {
      if (e.output_claim_id != ms.output_claim_id) offenders.push_back(e.output_claim_id);
      if (!source_ids.count(e.source_claim_id)) offenders.push_back(e.source_claim_id);
      referenced.insert(e.source_claim_id);
    }
  }
  std::unordered_map<std::string, const ClaimAssessment*> assessment_by_id;
  for (const auto& a : assessments) {
    if (!output_ids.count(a.claim_id)) offenders.push_back(a.claim_id);
    assessment_by_id[a.claim_id] = &a;
  }
  for (const auto& c : output_claims) {
    if (!match_by_id.count(c.id) || !assessment_by_id.count(c.id)) offenders.push_back(c.id);
  }
  if (!offenders.empty()) {
    std::sort(offenders.begin(), offenders.end());
    offenders.erase(std::unique(offenders.begin(), offenders.end()), offenders.end());
    throw ConsistencyError("build_graph: dangling or incomplete claim ids", offenders);
  }

  std::unordered_map<std::string, const ClaimJudgment*> judgment_by_id;
  for (const auto& j : judgments) judgment_by_id[j.claim_id] = &j;

  ClaimGraph g;
  g.doc_ids = std::move(doc_ids);
  for (const auto& c : output_claims) g.nodes.push_back({c, *assessment_by_id.at(c.id)});
  for (const auto& c : source_claims) {
    if (include_unreferenced || referenced.count(c.id)) g.nodes.push_back({c, std::nullopt});
  }
  for (const auto& c : output_claims) {
    const MatchSet& ms = *match_by_id.at(c.id);
    const auto jt = judgment_by_id.find(c.id);
    for (const auto& e : ms.edges) {
      GraphEdge ge{e.output_claim_id, e.source_claim_id, e.similarity, std::nullopt};
      if (jt != judgment_by_id.end()) {
        for (const auto& pe : jt->second->per_edge) {
          if (pe.source_claim_id == e.source_claim_id) {
            ge.nli = pe.verdict;
            break;
          }
        }
      }
      g.edges.push_back(std::move(ge));
    }
  }
  return g;
}

void LayoutConfig::validate() const {
  if (!(node_radius > 0.0 && node_radius < 0.25)) throw InputError("layout: node_radius must lie in (0, 0.25)");
  if (!(anchor_strength >= 0.0 && spring_strength >= 0.0 && repulsion_strength >= 0.0)) {
    throw InputError("layout: strengths must be non-negative");
  }
  if (!(rest_min >= 0.0 && rest_min < rest_max)) throw InputError("layout: need 0 <= rest_min < rest_max");
  if (iterations < 1) throw InputError("layout: iterations must be at least 1");
  if (!(step > 0.0)) throw InputError("layout: step must be positive");
  if (!(anchor_tolerance >= 0.0)) throw InputError("layout: anchor_tolerance must be non-negative");
}

double LayoutConfig::rest_length(double sim01) const {
  const double s = std::clamp(sim01, 0.0, 1.0);
  return rest_min + (1.0 - s) * (rest_max - rest_min);
}

namespace {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Phase 0 boxes output nodes around their anchor on both axes, phase 1 only
// on x, phase 2 leaves them free on the canvas.
void constrain(Point& p, const std::optional<Point>& anchor, double tol, int phase) {
  if (anchor && phase <= 1) p.x = std::clamp(p.x, anchor->x - tol, anchor->x + tol);
  if (anchor && phase == 0) p.y = std::clamp(p.y, anchor->y - tol, anchor->y + tol);
  p.x = std::clamp(p.x, 0.0, 1.0);
  p.y = std::clamp(p.y, 0.0, 1.0);
}

std::vector<std::pair<std::size_t, std::size_t>> overlapping_pairs(const std::vector<Point>& p, double min_sep) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      if (std::hypot(p[j].x - p[i].x, p[j].y - p[i].y) < min_sep) out.emplace_back(i, j);
    }
  }
  return out;
}

}  // namespace

LayoutResult layout(const ClaimGraph& graph, const LayoutConfig& cfg) {
  cfg.validate();
  const std::size_t n = graph.nodes.size();
  std::vector<Point> pos(n);
  std::vector<std::optional<Point>> anchor(n);
  std::mt19937_64 rng(cfg.rng_seed);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = graph.nodes[i];
    if (node.assessment) {
      anchor[i] = Point{node.assessment->nli, node.assessment->avg_sim};
      pos[i] = *anchor[i];
    } else {
      pos[i].x = unit_uniform(rng);
      pos[i].y = unit_uniform(rng);
    }
  }

  struct Spring {
    std::size_t a;
    std::size_t b;
    double rest;
  };
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[graph.nodes[i].claim.id] = i;
  std::vector<Spring> springs;
  for (const auto& e : graph.edges) {
    const auto a = index.find(e.output_claim_id);
    const auto b = index.find(e.source_claim_id);
    if (a == index.end() || b == index.end()) {
      throw ConsistencyError("layout: edge endpoint missing from graph", {e.output_claim_id, e.source_claim_id});
    }
    springs.push_back({a->second, b->second, cfg.rest_length(e.sim01())});
  }

  const double min_sep = 2.0 * cfg.node_radius;
  std::vector<Point> force(n);
  for (int it = 0; it < cfg.iterations; ++it) {
    std::fill(force.begin(), force.end(), Point{});
    for (std::size_t i = 0; i < n; ++i) {
      if (!anchor[i]) continue;
      force[i].x += cfg.anchor_strength * (anchor[i]->x - pos[i].x);
      force[i].y += cfg.anchor_strength * (anchor[i]->y - pos[i].y);
    }
    for (const auto& s : springs) {
      const double dx = pos[s.b].x - pos[s.a].x;
      const double dy = pos[s.b].y - pos[s.a].y;
      const double len = std::hypot(dx, dy);
      if (len < 1e-12) continue;
      const double f = cfg.spring_strength * (len - s.rest) / len;
      force[s.a].x += f * dx;
      force[s.a].y += f * dy;
      force[s.b].x -= f * dx;
      force[s.b].y -= f * dy;
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dx = pos[j].x - pos[i].x;
        const double dy = pos[j].y - pos[i].y;
        const double dist = std::hypot(dx, dy);
        if (dist >= min_sep || dist < 1e-12) continue;
        const double f = cfg.repulsion_strength * (1.0 - dist / min_sep) / dist;
        force[i].x -= f * dx;
        force[i].y -= f * dy;
        force[j].x += f * dx;
        force[j].y += f * dy;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      pos[i].x = std::clamp(pos[i].x + cfg.step * force[i].x, 0.0, 1.0);
      pos[i].y = std::clamp(pos[i].y + cfg.step * force[i].y, 0.0, 1.0);
    }
  }

  // Gradient steps alone cannot guarantee separation, so finish with a
  // deterministic pairwise projection.
  constexpr int kMaxPasses = 2000;
  constexpr double kGoldenAngle = 2.39996322972865332;
  const double target = min_sep + 1e-7;
  for (int phase = 0; phase < 3; ++phase) {
    for (std::size_t i = 0; i < n; ++i) constrain(pos[i], anchor[i], cfg.anchor_tolerance, phase);
    for (int pass = 0; pass < kMaxPasses; ++pass) {
      bool moved = false;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          double dx = pos[j].x - pos[i].x;
          double dy = pos[j].y - pos[i].y;
          double dist = std::hypot(dx, dy);
          if (dist >= min_sep) continue;
          if (dist < 1e-12) {
            const double theta = kGoldenAngle * static_cast<double>(i * n + j + static_cast<std::size_t>(pass));
            dx = std::cos(theta);
            dy = std::sin(theta);
            dist = 0.0;
          } else {
            dx /= dist;
            dy /= dist;
          }
          const double half = 0.5 * (target - dist);
          pos[i].x -= half * dx;
          pos[i].y -= half * dy;
          pos[j].x += half * dx;
          pos[j].y += half * dy;
          constrain(pos[i], anchor[i], cfg.anchor_tolerance, phase);
          constrain(pos[j], anchor[j], cfg.anchor_tolerance, phase);
          moved = true;
        }
      }
      if (!moved) break;
    }
    if (overlapping_pairs(pos, min_sep).empty()) break;
    if (phase < 2) spdlog::debug("layout: relaxing anchor box after phase {}", phase);
  }

  LayoutResult out;
  out.positions.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.positions.push_back({graph.nodes[i].claim.id, pos[i].x, pos[i].y});
  for (const auto& [i, j] : overlapping_pairs(pos, min_sep)) {
    out.overlaps.emplace_back(graph.nodes[i].claim.id, graph.nodes[j].claim.id);
  }
  if (!out.overlaps.empty()) {
    std::string pairs;
    for (const auto& [a, b] : out.overlaps) pairs += " (" + a + ", " + b + ")";
    spdlog::warn("layout: {} node pairs still overlap:{}", out.overlaps.size(), pairs);
  }
  return out;
}

namespace {

json layout_to_json(const LayoutConfig& c) {
  return {{"node_radius", c.node_radius},         {"anchor_strength", c.anchor_strength},
          {"spring_strength", c.spring_strength}, {"repulsion_strength", c.repulsion_strength},
          {"rest_min", c.rest_min},               {"rest_max", c.rest_max},
          {"iterations", c.iterations},           {"step", c.step},
          {"rng_seed", c.rng_seed},               {"anchor_tolerance", c.anchor_tolerance}};
}

LayoutConfig layout_from_json(const json& j) {
  LayoutConfig c;
  c.node_radius = j.at("node_radius").get<double>();
  c.anchor_strength = j.at("anchor_strength").get<double>();
  c.spring_strength = j.at("spring_strength").get<double>();
  c.repulsion_strength = j.at("repulsion_strength").get<double>();
  c.rest_min = j.at("rest_min").get<double>();
  c.rest_max = j.at("rest_max").get<double>();
  c.iterations = j.at("iterations").get<int>();
  c.step = j.at("step").get<double>();
  c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  c.anchor_tolerance = j.at("anchor_tolerance").get<double>();
  return c;
}

}  // namespace

json export_graph_json(const GraphDocument& doc) {
  const auto& g = doc.graph;
  if (g.nodes.empty() && !doc.extraction_failed) {
    throw ConsistencyError("export_graph_json: graph has no nodes", {});
  }
  std::map<std::string, const NodePosition*> pos_by_id;
  for (const auto& p : doc.positions) pos_by_id[p.claim_id] = &p;
  std::vector<std::string> missing;
  for (const auto& node : g.nodes) {
    if (!pos_by_id.count(node.claim.id)) missing.push_back(node.claim.id);
  }
  if (!missing.empty()) throw ConsistencyError("export_graph_json: nodes without positions", missing);

  json nodes = json::array();
  for (const auto& node : g.nodes) {
    json n = to_json(node.claim);
    const auto* p = pos_by_id.at(node.claim.id);
    n["x"] = p->x;
    n["y"] = p->y;
    if (node.assessment) {
      const auto& a = *node.assessment;
      n["nli"] = a.nli;
      n["avg_sim"] = a.avg_sim;
      n["confidence"] = a.confidence;
      n["quadrant"] = to_string(a.quadrant);
      n["color"] = to_string(a.color);
    }
    nodes.push_back(std::move(n));
  }
  json edges = json::array();
  for (const auto& e : g.edges) {
    json je = {{"source", e.output_claim_id}, {"target", e.source_claim_id}, {"similarity", e.similarity},
               {"sim01", e.sim01()}};
    if (e.nli) je["nli"] = to_json(*e.nli);
    edges.push_back(std::move(je));
  }
  json overlaps = json::array();
  for (const auto& [a, b] : doc.overlaps) overlaps.push_back({a, b});

  json out = {
      {"schema_version", kGraphSchemaVersion},
      {"doc_ids", {{"source", g.doc_ids.source}, {"output", g.doc_ids.output}}},
      {"nodes", std::move(nodes)},
      {"edges", std::move(edges)},
      {"metrics", doc.metrics ? to_json(*doc.metrics) : json(nullptr)},
      {"verdict", doc.verdict ? to_json(*doc.verdict) : json(nullptr)},
      {"thresholds", to_json(doc.thresholds)},
      {"weights", to_json(doc.weights)},
      {"legend", {{"bands", to_json(doc.bands)}, {"quadrants", to_json(doc.quadrants)}}},
      {"layout", layout_to_json(doc.layout)},
      {"overlaps", std::move(overlaps)},
      {"extraction", {{"failed", doc.extraction_failed}, {"reason", doc.failure_reason}}},
  };
  return out;
}

GraphDocument parse_graph_json(const json& j) {
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kGraphSchemaVersion) {
      throw InputError("graph document schema_version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kGraphSchemaVersion) + ")");
    }
    GraphDocument doc;
    doc.graph.doc_ids = {j.at("doc_ids").at("source").get<std::string>(),
                         j.at("doc_ids").at("output").get<std::string>()};
    for (const auto& jn : j.at("nodes")) {
      GraphNode node{claim_from_json(jn), std::nullopt};
      if (jn.contains("quadrant")) {
        ClaimAssessment a;
        a.claim_id = node.claim.id;
        a.nli = jn.at("nli").get<double>();
        a.avg_sim = jn.at("avg_sim").get<double>();
        a.confidence = jn.at("confidence").get<double>();
        a.quadrant = quadrant_from_string(jn.at("quadrant").get<std::string>());
        a.color = color_from_string(jn.at("color").get<std::string>());
        node.assessment = a;
      }
      doc.positions.push_back({node.claim.id, jn.at("x").get<double>(), jn.at("y").get<double>()});
      doc.graph.nodes.push_back(std::move(node));
    }
    for (const auto& je : j.at("edges")) {
      GraphEdge e{je.at("source").get<std::string>(), je.at("target").get<std::string>(),
                  je.at("similarity").get<double>(), std::nullopt};
      if (je.contains("nli")) e.nli = verdict_from_json(je["nli"]);
      doc.graph.edges.push_back(std::move(e));
    }
    if (!j.at("metrics").is_null()) doc.metrics = metrics_from_json(j["metrics"]);
    if (!j.at("verdict").is_null()) doc.verdict = verdict_from_json_doc(j["verdict"]);
    doc.thresholds = thresholds_from_json(j.at("thresholds"));
    doc.weights = weights_from_json(j.at("weights"));
    doc.bands = bands_from_json(j.at("legend").at("bands"));
    doc.quadrants = quadrant_table_from_json(j.at("legend").at("quadrants"));
    doc.layout = layout_from_json(j.at("layout"));
    for (const auto& pair : j.at("overlaps")) {
      doc.overlaps.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
    }
    doc.extraction_failed = j.at("extraction").at("failed").get<bool>();
    doc.failure_reason = j.at("extraction").at("reason").get<std::string>();
    return doc;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed graph document: ") + e.what());
  }
}

std::string dump_graph_json(const json& j) { return j.dump(2) + "\n"; }

}  // namespace claimaudit
