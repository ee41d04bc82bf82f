#pragma once

// Concrete provider backends. Internal to the library; callers go through the
// make_* factories in providers.hpp.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "claimaudit/providers.hpp"

namespace claimaudit::detail {

std::string provider_identity(const ProviderConfig& cfg, std::string_view capability);

// Word-level helpers shared by the stub and lexical backends.
struct WordToken {
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;
};
std::vector<WordToken> word_tokens(std::string_view text);
bool is_whole_word(std::string_view text, std::size_t start, std::size_t end);
std::vector<std::string> naive_sentences(std::string_view text);
std::uint64_t fnv1a(std::string_view s);
std::vector<RawTriple> pattern_triples(std::string_view text, const std::vector<std::string>& predicates);

// ---- stub ----

class StubEmbedder final : public Embedder {
 public:
  explicit StubEmbedder(const ProviderConfig& cfg);
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
  static EmbeddingVector vector_for(std::string_view text, std::size_t dim);

 private:
  std::size_t dim_;
};

class StubNliScorer final : public NliScorer {
 public:
  explicit StubNliScorer(const ProviderConfig& cfg);
  NliVerdict score(std::string_view premise, std::string_view hypothesis) override;

 private:
  StubSettings settings_;
};

class StubTripleExtractor final : public TripleExtractor {
 public:
  explicit StubTripleExtractor(const ProviderConfig& cfg);
  ExtractionOutcome extract(std::string_view text) override;

 private:
  StubSettings settings_;
};

class StubEntityRecognizer final : public EntityRecognizer {
 public:
  explicit StubEntityRecognizer(const ProviderConfig& cfg);
  std::vector<EntitySpan> recognize(std::string_view text) override;

 private:
  StubSettings settings_;
};

// ---- local_model (lexical, weight-free) ----

class LexicalEmbedder final : public Embedder {
 public:
  explicit LexicalEmbedder(const ProviderConfig& cfg);
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

 private:
  std::size_t dim_;
};

class LexicalNliScorer final : public NliScorer {
 public:
  explicit LexicalNliScorer(const ProviderConfig& cfg);
  NliVerdict score(std::string_view premise, std::string_view hypothesis) override;

 private:
  StubSettings settings_;
};

class PatternTripleExtractor final : public TripleExtractor {
 public:
  explicit PatternTripleExtractor(const ProviderConfig& cfg);
  ExtractionOutcome extract(std::string_view text) override;

 private:
  StubSettings settings_;
};

class CapitalizationEntityRecognizer final : public EntityRecognizer {
 public:
  explicit CapitalizationEntityRecognizer(const ProviderConfig& cfg);
  std::vector<EntitySpan> recognize(std::string_view text) override;

 private:
  StubSettings settings_;
};

// ---- http ----

std::unique_ptr<Embedder> make_http_embedder(const ProviderConfig& cfg);
std::unique_ptr<NliScorer> make_http_nli_scorer(const ProviderConfig& cfg);
std::unique_ptr<TripleExtractor> make_http_triple_extractor(const ProviderConfig& cfg);
std::unique_ptr<EntityRecognizer> make_http_entity_recognizer(const ProviderConfig& cfg);

}  // namespace claimaudit::detail
