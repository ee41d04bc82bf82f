#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "claimaudit/decompose.hpp"
#include "claimaudit/match.hpp"
#include "claimaudit/providers.hpp"

namespace claimaudit {

enum class Aggregation { kMaxEntail, kMeanEntail };
std::string to_string(Aggregation a);
Aggregation aggregation_from_string(std::string_view s);

enum class Label { kConsistent, kHallucinated };
std::string to_string(Label l);
Label label_from_string(std::string_view s);

struct EdgeVerdict {
  std::string source_claim_id;
  NliVerdict verdict;
  bool operator==(const EdgeVerdict&) const = default;
};

struct ClaimJudgment {
  std::string claim_id;
  double nli_score = 0.0;
  std::vector<EdgeVerdict> per_edge;  // aligned with the claim's MatchSet
  double avg_similarity = 0.0;

  bool operator==(const ClaimJudgment&) const = default;
};

struct ResponseVerdict {
  double response_score = 0.0;
  Label label = Label::kHallucinated;
  bool failure_forced = false;
  double threshold = 0.5;

  bool operator==(const ResponseVerdict&) const = default;
};

inline constexpr double kDefaultDecisionThreshold = 0.5;

// Folds per-edge entailment probabilities into one claim score.
double aggregate_entailment(const std::vector<double>& entail, Aggregation aggregation);

// Premise = each matched source claim's text, hypothesis = the claim's text.
// `sources` must contain every claim the match set references.
ClaimJudgment judge_claim(const Claim& claim, const MatchSet& matchset, const std::vector<Claim>& sources,
                          NliScorer& nli, Aggregation aggregation = Aggregation::kMaxEntail);

// Min over claims against the threshold; any extraction failure forces a
// hallucinated verdict with score 0.
ResponseVerdict judge_response(const std::vector<ClaimJudgment>& judgments, bool extraction_failed,
                               double threshold = kDefaultDecisionThreshold);

nlohmann::json to_json(const ClaimJudgment& j);
nlohmann::json to_json(const ResponseVerdict& v);
ResponseVerdict verdict_from_json_doc(const nlohmann::json& j);

}  // namespace claimaudit
