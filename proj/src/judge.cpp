#include "claimaudit/judge.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "claimaudit/errors.hpp"

namespace claimaudit {

std::string to_string(Aggregation a) { return a == Aggregation::kMaxEntail ? "max_entail" : "mean_entail"; }

Aggregation aggregation_from_string(std::string_view s) {
  if (s == "max_entail" || s == "max") return Aggregation::kMaxEntail;
  if (s == "mean_entail" || s == "mean") return Aggregation::kMeanEntail;
  throw InputError("unknown aggregation '" + std::string(s) + "' (expected max_entail or mean_entail)");
}

std::string to_string(Label l) { return l == Label::kConsistent ? "consistent" : "hallucinated"; }

Label label_from_string(std::string_view s) {
  if (s == "consistent") return Label::kConsistent;
  if (s == "hallucinated") return Label::kHallucinated;
  throw InputError("unknown label '" + std::string(s) + "'");
}

double aggregate_entailment(const std::vector<double>& entail, Aggregation aggregation) {
  if (entail.empty()) throw InputError("aggregate_entailment: no values");
  if (aggregation == Aggregation::kMaxEntail) return *std::max_element(entail.begin(), entail.end());
  return std::accumulate(entail.begin(), entail.end(), 0.0) / static_cast<double>(entail.size());
}

ClaimJudgment judge_claim(const Claim& claim, const MatchSet& matchset, const std::vector<Claim>& sources,
                          NliScorer& nli, Aggregation aggregation) {
  if (matchset.output_claim_id != claim.id) {
    throw InputError("judge_claim: match set belongs to " + matchset.output_claim_id + ", not " + claim.id);
  }
  if (matchset.edges.empty()) throw InputError("judge_claim: empty match set for " + claim.id);
  std::unordered_map<std::string, const Claim*> by_id;
  for (const auto& s : sources) by_id.emplace(s.id, &s);

  ClaimJudgment out;
  out.claim_id = claim.id;
  std::vector<double> entail;
  for (const auto& edge : matchset.edges) {
    const auto it = by_id.find(edge.source_claim_id);
    if (it == by_id.end()) {
      throw ConsistencyError("judge_claim: unknown source claim", {edge.source_claim_id});
    }
    NliVerdict v;
    try {
      v = nli_score(it->second->text, claim.text, nli);
    } catch (const TransportError& e) {
      throw JudgmentError(claim.id, e.what());
    } catch (const DecodeError& e) {
      throw JudgmentError(claim.id, e.what());
    } catch (const NumericError& e) {
      throw JudgmentError(claim.id, e.what());
    }
    entail.push_back(v.entail);
    out.per_edge.push_back({edge.source_claim_id, v});
  }
  out.nli_score = std::clamp(aggregate_entailment(entail, aggregation), 0.0, 1.0);
  out.avg_similarity = matchset.avg_similarity();
  return out;
}

ResponseVerdict judge_response(const std::vector<ClaimJudgment>& judgments, bool extraction_failed, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw InputError("judge_response: threshold must lie in (0,1)");
  ResponseVerdict v;
  v.threshold = threshold;
  if (extraction_failed) {
    v.response_score = 0.0;
    v.label = Label::kHallucinated;
    v.failure_forced = true;
    return v;
  }
  if (judgments.empty()) throw InputError("judge_response: no claim judgments and no extraction failure");
  v.response_score = std::min_element(judgments.begin(), judgments.end(), [](const auto& a, const auto& b) {
                       return a.nli_score < b.nli_score;
                     })->nli_score;
  v.label = v.response_score >= threshold ? Label::kConsistent : Label::kHallucinated;
  return v;
}

nlohmann::json to_json(const ClaimJudgment& j) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : j.per_edge) edges.push_back({{"source_claim_id", e.source_claim_id}, {"nli", to_json(e.verdict)}});
  return {{"claim_id", j.claim_id}, {"nli_score", j.nli_score}, {"avg_similarity", j.avg_similarity}, {"per_edge", edges}};
}

nlohmann::json to_json(const ResponseVerdict& v) {
  return {{"response_score", v.response_score},
          {"label", to_string(v.label)},
          {"failure_forced", v.failure_forced},
          {"threshold", v.threshold}};
}

ResponseVerdict verdict_from_json_doc(const nlohmann::json& j) {
  ResponseVerdict v;
  v.response_score = j.at("response_score").get<double>();
  v.label = label_from_string(j.at("label").get<std::string>());
  v.failure_forced = j.at("failure_forced").get<bool>();
  v.threshold = j.at("threshold").get<double>();
  return v;
}

}  // namespace claimaudit
