#include "claimaudit/match.hpp"

#include <algorithm>
#include <cmath>

#include "claimaudit/errors.hpp"

namespace claimaudit {

double MatchSet::avg_similarity() const {
  if (edges.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& e : edges) sum += e.sim01();
  return sum / static_cast<double>(edges.size());
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw InputError("cosine_similarity: dimension mismatch (" + std::to_string(a.dim()) + " vs " +
                     std::to_string(b.dim()) + ")");
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0) throw NumericError("cosine_similarity: vector a has zero norm");
  if (nb == 0.0) throw NumericError("cosine_similarity: vector b has zero norm");
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  if (!std::isfinite(c)) throw NumericError("cosine_similarity: non-finite result");
  return std::clamp(c, -1.0, 1.0);
}

std::vector<MatchSet> match_embedded(const std::vector<Claim>& output_claims,
                                     const std::vector<EmbeddingVector>& output_vecs,
                                     const std::vector<Claim>& source_claims,
                                     const std::vector<EmbeddingVector>& source_vecs, std::size_t k) {
  if (k == 0) throw InputError("match: k must be at least 1");
  if (output_claims.empty()) throw InputError("match: no output claims");
  if (source_claims.empty()) throw InputError("match: no source claims (handle the no-context case before matching)");
  if (output_claims.size() != output_vecs.size() || source_claims.size() != source_vecs.size()) {
    throw InputError("match: claims and embeddings differ in count");
  }
  std::vector<MatchSet> out;
  out.reserve(output_claims.size());
  for (std::size_t i = 0; i < output_claims.size(); ++i) {
    MatchSet ms;
    ms.output_claim_id = output_claims[i].id;
    ms.k = k;
    std::vector<SimilarityEdge> all;
    all.reserve(source_claims.size());
    for (std::size_t j = 0; j < source_claims.size(); ++j) {
      all.push_back({output_claims[i].id, source_claims[j].id, cosine_similarity(output_vecs[i], source_vecs[j])});
    }
    const std::size_t take = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(),
                      [](const SimilarityEdge& a, const SimilarityEdge& b) {
                        if (a.similarity != b.similarity) return a.similarity > b.similarity;
                        return a.source_claim_id < b.source_claim_id;
                      });
    all.resize(take);
    ms.edges = std::move(all);
    out.push_back(std::move(ms));
  }
  return out;
}

std::vector<MatchSet> match_claims(const std::vector<Claim>& output_claims, const std::vector<Claim>& source_claims,
                                   std::size_t k, ProviderSet& providers) {
  if (source_claims.empty()) throw InputError("match: no source claims (handle the no-context case before matching)");
  if (output_claims.empty()) throw InputError("match: no output claims");
  std::vector<std::string> texts;
  texts.reserve(output_claims.size() + source_claims.size());
  for (const auto& c : output_claims) texts.push_back(c.text);
  for (const auto& c : source_claims) texts.push_back(c.text);
  auto vecs = embed_texts(texts, *providers.embedder);
  std::vector<EmbeddingVector> out_vecs(std::make_move_iterator(vecs.begin()),
                                        std::make_move_iterator(vecs.begin() + static_cast<std::ptrdiff_t>(output_claims.size())));
  std::vector<EmbeddingVector> src_vecs(std::make_move_iterator(vecs.begin() + static_cast<std::ptrdiff_t>(output_claims.size())),
                                        std::make_move_iterator(vecs.end()));
  return match_embedded(output_claims, out_vecs, source_claims, src_vecs, k);
}

nlohmann::json to_json(const SimilarityEdge& e) {
  return {{"output_claim_id", e.output_claim_id}, {"source_claim_id", e.source_claim_id}, {"similarity", e.similarity}};
}

SimilarityEdge edge_from_json(const nlohmann::json& j) {
  return {j.at("output_claim_id").get<std::string>(), j.at("source_claim_id").get<std::string>(),
          j.at("similarity").get<double>()};
}

}  // namespace claimaudit
