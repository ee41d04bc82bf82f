#include <doctest.h>

#include <cmath>
#include <set>

#include "claimaudit/errors.hpp"
#include "claimaudit/graph.hpp"
#include "helpers.hpp"

using namespace claimaudit;
using nlohmann::json;

namespace {

Claim claim(std::string id, Origin origin, std::size_t index) {
  Claim c;
  c.id = std::move(id);
  c.text = "claim " + c.id;
  c.origin = origin;
  c.kind = ClaimKind::kSentence;
  c.sentence_index = index;
  c.span = {index * 10, index * 10 + 8};
  return c;
}

struct Fixture {
  std::vector<Claim> outputs;
  std::vector<Claim> sources;
  std::vector<MatchSet> matchsets;
  std::vector<ClaimAssessment> assessments;
  std::vector<ClaimJudgment> judgments;
};

// One output claim matched to two of five sources.
Fixture one_to_two() {
  Fixture f;
  f.outputs = {claim("o0", Origin::kOutput, 0)};
  for (std::size_t i = 0; i < 5; ++i) f.sources.push_back(claim("s" + std::to_string(i), Origin::kSource, i));
  f.matchsets = {{"o0", {{"o0", "s3", 0.9}, {"o0", "s1", -0.2}}, 2}};
  f.assessments = {assess_claim("o0", 0.8, 0.45)};
  ClaimJudgment j;
  j.claim_id = "o0";
  j.nli_score = 0.8;
  j.per_edge = {{"s3", {0.8, 0.2, 0.0}}, {"s1", NliVerdict::neutrality()}};
  f.judgments = {j};
  return f;
}

// Output claims sitting in each quadrant cell, plus shared sources.
Fixture four_quadrants() {
  Fixture f;
  const std::vector<std::pair<double, double>> cells = {{0.9, 0.85}, {0.2, 0.8}, {0.85, 0.15}, {0.1, 0.2}};
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const std::string id = "o" + std::to_string(i);
    f.outputs.push_back(claim(id, Origin::kOutput, i));
    f.assessments.push_back(assess_claim(id, cells[i].first, cells[i].second));
  }
  for (std::size_t i = 0; i < 3; ++i) f.sources.push_back(claim("s" + std::to_string(i), Origin::kSource, i));
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const std::string id = "o" + std::to_string(i);
    f.matchsets.push_back({id, {{id, "s" + std::to_string(i % 3), cells[i].second}, {id, "s" + std::to_string((i + 1) % 3), 0.1}}, 2});
  }
  return f;
}

ClaimGraph build(const Fixture& f, bool include_unreferenced = false) {
  return build_graph(f.outputs, f.sources, f.matchsets, f.assessments, f.judgments, include_unreferenced, {"src", "out"});
}

double min_distance(const std::vector<NodePosition>& p) {
  double best = 1e9;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) best = std::min(best, std::hypot(p[i].x - p[j].x, p[i].y - p[j].y));
  }
  return best;
}

GraphDocument document_for(const ClaimGraph& g, const LayoutConfig& cfg = {}) {
  GraphDocument doc;
  doc.graph = g;
  const auto lr = layout(g, cfg);
  doc.positions = lr.positions;
  doc.overlaps = lr.overlaps;
  doc.layout = cfg;
  std::vector<ClaimAssessment> as;
  for (const auto& n : g.nodes) {
    if (n.assessment) as.push_back(*n.assessment);
  }
  doc.metrics = response_metrics(as);
  ClaimJudgment worst;
  worst.nli_score = 0.1;
  doc.verdict = judge_response({worst}, false);
  return doc;
}

}  // namespace

TEST_SUITE("graph") {
  TEST_CASE("referenced sources only by default") {
    const auto f = one_to_two();
    const auto g = build(f);
    CHECK(g.nodes.size() == 3);
    CHECK(g.edges.size() == 2);
    CHECK(g.nodes[0].id() == "o0");
    CHECK(g.nodes[1].id() == "s1");
    CHECK(g.nodes[2].id() == "s3");
    CHECK(g.edges[0].nli == NliVerdict{0.8, 0.2, 0.0});
    CHECK(g.edges[1].sim01() == 0.0);
    CHECK(build(f, true).nodes.size() == 6);
    CHECK(g.index_of("s3") == 2u);
    CHECK_FALSE(g.index_of("nope"));
  }

  TEST_CASE("build preconditions") {
    auto f = one_to_two();
    CHECK_THROWS_AS(build_graph(f.outputs, f.sources, {}, f.assessments), ConsistencyError);
    CHECK_THROWS_AS(build_graph({}, f.sources, f.matchsets, f.assessments), ConsistencyError);
    f.matchsets[0].edges.push_back({"o0", "s9", 0.5});
    f.matchsets[0].edges.push_back({"o0", "s8", 0.5});
    try {
      build(f);
      FAIL("expected ConsistencyError");
    } catch (const ConsistencyError& e) {
      CHECK(e.offenders() == std::vector<std::string>{"s8", "s9"});
    }
    auto g = one_to_two();
    g.assessments.clear();
    CHECK_THROWS_AS(build(g), ConsistencyError);
  }

  TEST_CASE("single output node sits exactly on its anchor") {
    Fixture f;
    f.outputs = {claim("o0", Origin::kOutput, 0)};
    f.sources = {claim("s0", Origin::kSource, 0)};
    f.matchsets = {{"o0", {{"o0", "s0", 0.3}}, 1}};
    f.assessments = {assess_claim("o0", 0.37, 0.61)};
    ClaimGraph g = build(f);
    g.nodes.pop_back();
    g.edges.clear();
    const auto lr = layout(g);
    REQUIRE(lr.positions.size() == 1);
    CHECK(lr.positions[0].x == 0.37);
    CHECK(lr.positions[0].y == 0.61);
    CHECK(lr.overlaps.empty());
  }

  TEST_CASE("coincident output nodes are pushed apart") {
    Fixture f;
    f.outputs = {claim("o0", Origin::kOutput, 0), claim("o1", Origin::kOutput, 1)};
    f.sources = {claim("s0", Origin::kSource, 0)};
    f.matchsets = {{"o0", {{"o0", "s0", 0.5}}, 1}, {"o1", {{"o1", "s0", 0.5}}, 1}};
    f.assessments = {assess_claim("o0", 0.6, 0.5), assess_claim("o1", 0.6, 0.5)};
    const LayoutConfig cfg;
    const auto lr = layout(build(f), cfg);
    CHECK(min_distance(lr.positions) >= 2 * cfg.node_radius - 1e-6);
    CHECK(lr.overlaps.empty());
  }

  TEST_CASE("crowded graphs still separate and stay in the unit square") {
    Fixture f;
    for (std::size_t i = 0; i < 12; ++i) {
      const std::string id = "o" + std::to_string(i);
      f.outputs.push_back(claim(id, Origin::kOutput, i));
      f.assessments.push_back(assess_claim(id, 1.0, 1.0));
    }
    for (std::size_t i = 0; i < 8; ++i) f.sources.push_back(claim("s" + std::to_string(i), Origin::kSource, i));
    for (std::size_t i = 0; i < 12; ++i) {
      const std::string id = "o" + std::to_string(i);
      f.matchsets.push_back({id, {{id, "s" + std::to_string(i % 8), 1.0}}, 1});
    }
    const LayoutConfig cfg;
    const auto lr = layout(build(f), cfg);
    REQUIRE(lr.positions.size() == 20);
    CHECK(min_distance(lr.positions) >= 2 * cfg.node_radius - 1e-6);
    for (const auto& p : lr.positions) {
      CHECK(p.x >= 0.0);
      CHECK(p.x <= 1.0);
      CHECK(p.y >= 0.0);
      CHECK(p.y <= 1.0);
    }
  }

  TEST_CASE("rest length endpoints") {
    const LayoutConfig cfg;
    CHECK(cfg.rest_length(1.0) == cfg.rest_min);
    CHECK(cfg.rest_length(0.0) == cfg.rest_max);
    LayoutConfig bad;
    bad.node_radius = 0;
    CHECK_THROWS_AS(bad.validate(), InputError);
  }

  TEST_CASE("layout is reproducible for a seed") {
    const auto g = build(four_quadrants(), true);
    LayoutConfig cfg;
    cfg.rng_seed = 42;
    const auto a = layout(g, cfg);
    const auto b = layout(g, cfg);
    CHECK(a.positions == b.positions);
    cfg.rng_seed = 43;
    CHECK_FALSE(layout(g, cfg).positions == a.positions);
  }

  TEST_CASE("export round trip and byte stability") {
    const auto g = build(one_to_two());
    const auto doc = document_for(g);
    const json j = export_graph_json(doc);
    const auto back = parse_graph_json(j);
    CHECK(back.graph == g);
    CHECK(back == doc);
    CHECK(dump_graph_json(export_graph_json(document_for(build(one_to_two())))) == dump_graph_json(j));
    CHECK(j["schema_version"] == kGraphSchemaVersion);
    CHECK(j["edges"][0]["source"] == "o0");
    CHECK(j["edges"][0]["target"] == "s3");
    CHECK(j["nodes"][0]["color"] == "orange");
  }

  TEST_CASE("export guards") {
    GraphDocument empty;
    CHECK_THROWS_AS(export_graph_json(empty), ConsistencyError);
    empty.extraction_failed = true;
    empty.failure_reason = "output: injected";
    const auto j = export_graph_json(empty);
    CHECK(j["nodes"].empty());
    CHECK(j["extraction"]["failed"] == true);
    CHECK(parse_graph_json(j) == empty);

    auto doc = document_for(build(one_to_two()));
    doc.positions.pop_back();
    CHECK_THROWS_AS(export_graph_json(doc), ConsistencyError);
  }

  TEST_CASE("schema mismatch and malformed documents are rejected") {
    json j = export_graph_json(document_for(build(one_to_two())));
    j["schema_version"] = 99;
    CHECK_THROWS_WITH_AS(parse_graph_json(j), doctest::Contains("schema_version 99"), InputError);
    CHECK_THROWS_AS(parse_graph_json(json{{"schema_version", 1}}), InputError);
  }

  TEST_CASE("four-quadrant document puts one node in each cell") {
    const auto doc = document_for(build(four_quadrants()));
    const json j = export_graph_json(doc);
    std::set<std::string> quadrants;
    std::set<std::pair<bool, bool>> cells;
    for (const auto& n : j["nodes"]) {
      if (n["origin"] != "output") continue;
      quadrants.insert(n["quadrant"].get<std::string>());
      cells.insert({n["x"].get<double>() >= 0.5, n["y"].get<double>() >= 0.5});
    }
    CHECK(quadrants.size() == 4);
    CHECK(cells.size() == 4);
  }

  TEST_CASE("checked-in four-quadrant fixture matches the schema") {
    const json j = json::parse(testutil::read_file(testutil::fixture("graph_four_quadrants.json")));
    const auto doc = parse_graph_json(j);
    CHECK(dump_graph_json(export_graph_json(doc)) == dump_graph_json(j));
    std::set<Quadrant> seen;
    for (const auto& n : doc.graph.nodes) {
      if (!n.assessment) continue;
      seen.insert(n.assessment->quadrant);
      CHECK(n.assessment->color == assign_color(n.assessment->confidence, doc.bands));
      CHECK(n.assessment->quadrant ==
            classify_quadrant(n.assessment->nli, n.assessment->avg_sim, doc.thresholds, doc.quadrants));
    }
    CHECK(seen.size() == 4);
  }

  TEST_CASE("svg rendering") {
    const auto svg = render_svg(document_for(build(four_quadrants())));
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("<circle") != std::string::npos);
  }
}
