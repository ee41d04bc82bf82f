#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "claimaudit/decompose.hpp"
#include "claimaudit/providers.hpp"

namespace claimaudit {

struct SimilarityEdge {
  std::string output_claim_id;
  std::string source_claim_id;
  double similarity = 0.0;  // raw cosine in [-1, 1]

  // Anticorrelation carries no support signal; scoring and layout use this.
  double sim01() const { return similarity > 0.0 ? similarity : 0.0; }
  bool operator==(const SimilarityEdge&) const = default;
};

struct MatchSet {
  std::string output_claim_id;
  std::vector<SimilarityEdge> edges;  // similarity descending, ties by source id
  std::size_t k = 0;

  // Mean sim01 over the edges; 0 for an empty set.
  double avg_similarity() const;
};

inline constexpr std::size_t kDefaultTopK = 3;
inline constexpr std::size_t kMaxTopK = 10;

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

// Exact top-k over precomputed embeddings; `output_vecs[i]` belongs to
// `output_claims[i]`, likewise for sources.
std::vector<MatchSet> match_embedded(const std::vector<Claim>& output_claims,
                                     const std::vector<EmbeddingVector>& output_vecs,
                                     const std::vector<Claim>& source_claims,
                                     const std::vector<EmbeddingVector>& source_vecs, std::size_t k);

std::vector<MatchSet> match_claims(const std::vector<Claim>& output_claims, const std::vector<Claim>& source_claims,
                                   std::size_t k, ProviderSet& providers);

nlohmann::json to_json(const SimilarityEdge& e);
SimilarityEdge edge_from_json(const nlohmann::json& j);

}  // namespace claimaudit
