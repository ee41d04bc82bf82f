#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "claimaudit/providers.hpp"

namespace claimaudit {

enum class ClaimKind { kTriple, kSentence };
enum class Origin { kSource, kOutput };
enum class Strategy { kTriples, kSici };

std::string to_string(ClaimKind kind);
std::string to_string(Origin origin);
std::string to_string(Strategy strategy);
ClaimKind claim_kind_from_string(std::string_view s);
Origin origin_from_string(std::string_view s);
Strategy strategy_from_string(std::string_view s);

// Half-open character range [start, end) into the originating document.
struct TextSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  bool operator==(const TextSpan&) const = default;
};

// An atomic checkable unit: a triple or a coreference-resolved sentence
// window, taken from either the source context or the model output.
struct Claim {
  std::string id;
  std::string text;
  ClaimKind kind = ClaimKind::kSentence;
  Origin origin = Origin::kOutput;
  TextSpan span;
  std::optional<RawTriple> triple;            // iff kind == kTriple
  std::optional<std::size_t> sentence_index;  // iff kind == kSentence

  bool operator==(const Claim&) const = default;
};

struct SentenceUnit {
  std::size_t index = 0;
  std::string raw_text;
  std::string resolved_text;
  std::string window_text;
  TextSpan span;  // raw_text == document[span.start, span.end)
  std::size_t window_first = 0;
  std::size_t window_last = 0;
};

struct DecomposeConfig {
  static constexpr int kMaxWindowRadius = 3;

  Strategy strategy = Strategy::kSici;
  int window_radius = 0;  // 0 = SICI-0, 1 = SICI-1
  bool coref = true;

  void validate() const;
  bool operator==(const DecomposeConfig&) const = default;
};

struct Decomposition {
  std::vector<Claim> claims;
  bool extraction_failed = false;
  std::string failure_reason;
};

// Rule-based splitter. Raw texts exclude surrounding whitespace; the
// whitespace between consecutive spans is exactly the original separator.
std::vector<SentenceUnit> split_sentences(std::string_view document);

// Replaces third-person pronouns with the nearest preceding compatible entity
// anywhere earlier in the document. `document` is the text the unit spans
// and the entity offsets refer to.
std::vector<SentenceUnit> resolve_coreferences(std::vector<SentenceUnit> units, std::vector<EntitySpan> entities);

std::vector<SentenceUnit> build_windows(std::vector<SentenceUnit> units, int radius);

Decomposition decompose(std::string_view document, Origin origin, const DecomposeConfig& cfg, ProviderSet& providers);

std::string make_claim_id(std::string_view document, Origin origin, ClaimKind kind, std::size_t ordinal);

nlohmann::json to_json(const Claim& claim);
Claim claim_from_json(const nlohmann::json& j);

}  // namespace claimaudit
