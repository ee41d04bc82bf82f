#pragma once

// Uniform interfaces to the external model capabilities the pipeline needs:
// text embedding, NLI scoring, triple extraction and named-entity recognition.
//
// Each capability has three backends selected by ProviderKind:
//   stub         deterministic fixtures for tests and offline runs
//   http_llm     JSON-over-POST to a model server (see docs/http_protocol.md)
//   local_model  in-process lexical models that need no weights
// and an optional content-addressed disk cache layered on top.

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace claimaudit {

enum class ProviderKind { kStub, kHttpLlm, kLocalModel };
std::string to_string(ProviderKind kind);
ProviderKind provider_kind_from_string(std::string_view s);

enum class EntityLabel { kPerson, kOrg, kLocation, kMisc };
std::string to_string(EntityLabel label);
EntityLabel entity_label_from_string(std::string_view s);

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
  double norm() const;
  bool operator==(const EmbeddingVector&) const = default;
};

struct NliVerdict {
  double entail = 0.0;
  double neutral = 1.0;
  double contradict = 0.0;

  // Scalar consistency scorers (HHEM-style) carry no neutral mass.
  static NliVerdict from_scalar(double score);
  static NliVerdict entailment() { return {1.0, 0.0, 0.0}; }
  static NliVerdict neutrality() { return {0.0, 1.0, 0.0}; }
  static NliVerdict contradiction() { return {0.0, 0.0, 1.0}; }

  // Rescales to unit sum; throws NumericError for negative, non-finite or
  // all-zero components.
  NliVerdict normalized() const;
  bool valid(double tolerance = 1e-6) const;
  bool operator==(const NliVerdict&) const = default;
};

struct RawTriple {
  std::string subject;
  std::string predicate;
  std::string object;

  bool operator==(const RawTriple&) const = default;
};

struct ExtractionOutcome {
  std::vector<RawTriple> triples;
  bool failed = false;
  std::string failure_reason;

  static ExtractionOutcome success(std::vector<RawTriple> triples);
  static ExtractionOutcome failure(std::string reason);
  bool operator==(const ExtractionOutcome&) const = default;
};

struct EntitySpan {
  std::string text;
  EntityLabel label = EntityLabel::kMisc;
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start; }
  bool operator==(const EntitySpan&) const = default;
};

// Knobs for the stub backends. Everything here feeds the cache fingerprint.
struct StubSettings {
  // Word pairs treated as mutual antonyms by the stub NLI contradiction rule.
  std::vector<std::pair<std::string, std::string>> antonyms;
  std::map<std::string, EntityLabel> gazetteer;
  // Verb table for pattern-based triple extraction.
  std::vector<std::string> predicates;
  bool fail_extraction = false;
  // Extraction fails for any text containing one of these substrings.
  std::vector<std::string> extraction_failure_markers;

  static StubSettings defaults();
  std::string fingerprint() const;
};

struct ProviderConfig {
  ProviderKind kind = ProviderKind::kStub;
  std::string endpoint;
  std::string model_name = "stub-v1";
  std::string api_key;
  std::filesystem::path cache_dir;
  double timeout_seconds = 30.0;
  int retries = 2;
  int embedding_dim = 0;  // 0 selects the backend default (stub 64, local_model 256)
  StubSettings stub = StubSettings::defaults();

  // Throws ConfigError when the combination cannot work (e.g. http_llm
  // without an endpoint).
  void validate() const;
};

// Shared bookkeeping: a stable identity used in cache keys and a count of
// items the backend actually computed.
class ProviderBase {
 public:
  explicit ProviderBase(std::string identity) : identity_(std::move(identity)) {}
  virtual ~ProviderBase() = default;
  ProviderBase(const ProviderBase&) = delete;
  ProviderBase& operator=(const ProviderBase&) = delete;

  const std::string& identity() const { return identity_; }
  // Items the underlying backend computed (cache hits excluded).
  virtual std::size_t invocations() const { return invocations_.load(); }

 protected:
  void count(std::size_t n = 1) { invocations_.fetch_add(n); }

 private:
  std::string identity_;
  std::atomic<std::size_t> invocations_{0};
};

class Embedder : public ProviderBase {
 public:
  using ProviderBase::ProviderBase;
  virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
};

class NliScorer : public ProviderBase {
 public:
  using ProviderBase::ProviderBase;
  virtual NliVerdict score(std::string_view premise, std::string_view hypothesis) = 0;
};

class TripleExtractor : public ProviderBase {
 public:
  using ProviderBase::ProviderBase;
  // Model misbehaviour is reported through ExtractionOutcome::failed, never
  // thrown.
  virtual ExtractionOutcome extract(std::string_view text) = 0;
};

class EntityRecognizer : public ProviderBase {
 public:
  using ProviderBase::ProviderBase;
  virtual std::vector<EntitySpan> recognize(std::string_view text) = 0;
};

std::unique_ptr<Embedder> make_embedder(const ProviderConfig& cfg);
std::unique_ptr<NliScorer> make_nli_scorer(const ProviderConfig& cfg);
std::unique_ptr<TripleExtractor> make_triple_extractor(const ProviderConfig& cfg);
std::unique_ptr<EntityRecognizer> make_entity_recognizer(const ProviderConfig& cfg);

struct ProviderSetConfig {
  ProviderConfig embedding;
  ProviderConfig nli;
  ProviderConfig extraction;
  ProviderConfig ner;

  static ProviderSetConfig all(const ProviderConfig& cfg);
  // Stub defaults overridden by AUDIT_LLM_ENDPOINT, AUDIT_LLM_API_KEY,
  // AUDIT_NLI_ENDPOINT and AUDIT_CACHE_DIR when set.
  static ProviderSetConfig from_environment();
};

// The four capabilities bundled for the pipeline. Backends are cache-wrapped
// when their config names a cache_dir.
struct ProviderSet {
  std::unique_ptr<Embedder> embedder;
  std::unique_ptr<NliScorer> nli;
  std::unique_ptr<TripleExtractor> extractor;
  std::unique_ptr<EntityRecognizer> ner;

  static ProviderSet create(const ProviderSetConfig& cfg);
  std::size_t total_invocations() const;
};

// Validated entry points. These enforce the pre/post conditions every backend
// must honour regardless of kind.
std::vector<EmbeddingVector> embed_texts(const std::vector<std::string>& texts, Embedder& embedder);
NliVerdict nli_score(std::string_view premise, std::string_view hypothesis, NliScorer& scorer);
ExtractionOutcome extract_triples_llm(std::string_view text, TripleExtractor& extractor);
std::vector<EntitySpan> ner_entities(std::string_view text, EntityRecognizer& recognizer);

// Longest span wins on overlap (earlier start breaks length ties); result is
// sorted by start and clipped spans outside [0, text_length] are dropped.
std::vector<EntitySpan> normalize_entity_spans(std::vector<EntitySpan> raw, std::size_t text_length);

// Parses a free-text triple listing as an LLM might return it: a JSON array
// of objects/arrays, or one "(s; p; o)" / "s | p | o" per line. Returns
// nullopt when nothing parses.
std::optional<std::vector<RawTriple>> parse_triples_text(std::string_view payload);

// Content-addressed on-disk store of provider results. Safe for concurrent
// readers and writers; writes go through a temp file and an atomic rename.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  static std::string make_key(std::string_view identity, std::string_view operation,
                              const nlohmann::json& canonical_input);

  std::optional<nlohmann::json> load(const std::string& key) const;
  void store(const std::string& key, const nlohmann::json& value) const;
  // Drops an entry whose payload did not decode.
  void discard(const std::string& key) const;

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path entry_path(const std::string& key) const;
  std::filesystem::path dir_;
};

std::unique_ptr<Embedder> with_cache(std::unique_ptr<Embedder> inner, std::shared_ptr<ResponseCache> cache);
std::unique_ptr<NliScorer> with_cache(std::unique_ptr<NliScorer> inner, std::shared_ptr<ResponseCache> cache);
std::unique_ptr<TripleExtractor> with_cache(std::unique_ptr<TripleExtractor> inner,
                                            std::shared_ptr<ResponseCache> cache);
std::unique_ptr<EntityRecognizer> with_cache(std::unique_ptr<EntityRecognizer> inner,
                                             std::shared_ptr<ResponseCache> cache);

// JSON forms shared by the cache, the HTTP backends and the exports.
nlohmann::json to_json(const EmbeddingVector& v);
nlohmann::json to_json(const NliVerdict& v);
nlohmann::json to_json(const RawTriple& t);
nlohmann::json to_json(const ExtractionOutcome& o);
nlohmann::json to_json(const EntitySpan& e);
EmbeddingVector embedding_from_json(const nlohmann::json& j);
NliVerdict verdict_from_json(const nlohmann::json& j);
RawTriple triple_from_json(const nlohmann::json& j);
ExtractionOutcome outcome_from_json(const nlohmann::json& j);
EntitySpan entity_from_json(const nlohmann::json& j);

// Overrides `base` with any of: antonyms ([[a, b], ...]), gazetteer
// ({surface: label}), predicates, fail_extraction,
// extraction_failure_markers. Present keys replace the base value, except
// gazetteer and antonyms, which extend it.
StubSettings stub_settings_from_json(const nlohmann::json& j, StubSettings base = StubSettings::defaults());

}  // namespace claimaudit
