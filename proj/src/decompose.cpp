#include "claimaudit/decompose.hpp"

#include <algorithm>
#include <cctype>
#include <iomanip>
#include <sstream>
#include <unordered_set>

#include "claimaudit/errors.hpp"
#include "claimaudit/text.hpp"

namespace claimaudit {

using nlohmann::json;

std::string to_string(ClaimKind kind) { return kind == ClaimKind::kTriple ? "triple" : "sentence"; }
std::string to_string(Origin origin) { return origin == Origin::kSource ? "source" : "output"; }
std::string to_string(Strategy strategy) { return strategy == Strategy::kTriples ? "triples" : "sici"; }

ClaimKind claim_kind_from_string(std::string_view s) {
  if (s == "triple") return ClaimKind::kTriple;
  if (s == "sentence") return ClaimKind::kSentence;
  throw InputError("unknown claim kind '" + std::string(s) + "'");
}

Origin origin_from_string(std::string_view s) {
  if (s == "source") return Origin::kSource;
  if (s == "output") return Origin::kOutput;
  throw InputError("unknown origin '" + std::string(s) + "'");
}

Strategy strategy_from_string(std::string_view s) {
  if (s == "triples") return Strategy::kTriples;
  if (s == "sici") return Strategy::kSici;
  throw InputError("unknown strategy '" + std::string(s) + "' (expected triples or sici)");
}

void DecomposeConfig::validate() const {
  if (window_radius < 0 || window_radius > kMaxWindowRadius) {
    throw InputError("window_radius must be in [0, " + std::to_string(kMaxWindowRadius) + "], got " +
                     std::to_string(window_radius));
  }
}

namespace {

// Abbreviations that never close a sentence.
const std::unordered_set<std::string>& title_abbreviations() {
  static const std::unordered_set<std::string> set = {
      "mr.",  "mrs.", "ms.",  "dr.",   "prof.", "sr.",  "st.",  "gen.", "gov.", "sen.", "rep.", "lt.",
      "col.", "sgt.", "capt.", "mt.",  "vs.",   "e.g.", "i.e.", "approx.", "fig.", "rev.", "hon.", "cf."};
  return set;
}

// Abbreviations that close a sentence only when a typical sentence opener
// follows.
const std::unordered_set<std::string>& terminal_abbreviations() {
  static const std::unordered_set<std::string> set = {
      "u.s.", "u.k.", "u.n.", "e.u.", "inc.", "ltd.", "co.", "corp.", "jr.", "a.m.", "p.m.", "etc.", "no.",
      "jan.", "feb.", "mar.", "apr.", "jun.", "jul.", "aug.", "sep.", "sept.", "oct.", "nov.", "dec."};
  return set;
}

const std::unordered_set<std::string>& sentence_openers() {
  static const std::unordered_set<std::string> set = {
      "he",    "she",   "it",     "they",  "we",   "i",    "you",  "the",   "this",  "that",    "these",
      "those", "there", "but",    "and",   "in",   "on",   "at",   "after", "before", "when",   "while",
      "however", "his", "her",    "its",   "their", "our", "a",    "an",    "mr.",   "mrs.",    "ms.",
      "dr.",   "if",    "as",     "for",   "meanwhile", "then", "so", "what", "why",  "how",     "officials"};
  return set;
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Length of a closing quote or bracket at position i, 0 if none.
std::size_t skip_spaces(std::string_view doc, std::size_t i) {
  while (i < doc.size() && is_space(doc[i])) ++i;
  return i;
}

std::size_t closer_length(std::string_view doc, std::size_t i) {
  const char c = doc[i];
  if (c == '"' || c == '\'' || c == ')' || c == ']') return 1;
  // UTF-8 right double / single quotation marks.
  if (doc.substr(i, 3) == "\xE2\x80\x9D" || doc.substr(i, 3) == "\xE2\x80\x99") return 3;
  return 0;
}

std::string word_before(std::string_view doc, std::size_t period) {
  std::size_t b = period;
  while (b > 0 && !is_space(doc[b - 1])) --b;
  std::string token = to_lower(doc.substr(b, period + 1 - b));
  while (!token.empty() && (token.front() == '(' || token.front() == '"' || token.front() == '\'' ||
                            token.front() == '[')) {
    token.erase(token.begin());
  }
  return token;
}

std::string word_after(std::string_view doc, std::size_t from) {
  std::size_t b = from;
  while (b < doc.size() && is_space(doc[b])) ++b;
  std::size_t e = b;
  while (e < doc.size() && !is_space(doc[e])) ++e;
  std::string w = to_lower(doc.substr(b, e - b));
  while (!w.empty() && (w.front() == '"' || w.front() == '\'' || w.front() == '(')) w.erase(w.begin());
  while (!w.empty() && (w.back() == ',' || w.back() == ';' || w.back() == ':')) w.pop_back();
  return w;
}

// True when the period at `period` belongs to an abbreviation that does not
// close the sentence.
bool guarded_abbreviation(std::string_view doc, std::size_t period, std::size_t next) {
  const std::string token = word_before(doc, period);
  if (title_abbreviations().count(token) != 0) return true;
  if (terminal_abbreviations().count(token) == 0) return false;
  const std::string following = word_after(doc, next);
  if (following.empty()) return false;
  // "No. 5", "Jan. 12"
  if (std::isdigit(static_cast<unsigned char>(following.front()))) return true;
  if (token == "no.") return false;
  std::size_t k = skip_spaces(doc, next);
  while (k < doc.size() && (doc[k] == '"' || doc[k] == '\'' || doc[k] == '(')) ++k;
  if (k < doc.size() && !std::isupper(static_cast<unsigned char>(doc[k]))) return true;
  return sentence_openers().count(following) == 0;
}

std::size_t trim_end(std::string_view doc, std::size_t start, std::size_t end) {
  while (end > start && is_space(doc[end - 1])) --end;
  return end;
}

}  // namespace

std::vector<SentenceUnit> split_sentences(std::string_view document) {
  if (is_blank(document)) throw InputError("split_sentences: document is empty");
  std::vector<SentenceUnit> units;
  const auto emit = [&](std::size_t start, std::size_t end) {
    end = trim_end(document, start, end);
    if (end <= start) return;
    SentenceUnit u;
    u.index = units.size();
    u.span = {start, end};
    u.raw_text = std::string(document.substr(start, end - start));
    u.resolved_text = u.raw_text;
    u.window_text = u.raw_text;
    u.window_first = u.window_last = u.index;
    units.push_back(std::move(u));
  };

  std::size_t start = skip_spaces(document, 0);
  std::size_t i = start;
  while (i < document.size()) {
    const char c = document[i];
    if (c == '.' || c == '!' || c == '?') {
      std::size_t j = i;
      while (j < document.size() && (document[j] == '.' || document[j] == '!' || document[j] == '?')) ++j;
      const bool single_period = c == '.' && j == i + 1;
      const bool ellipsis = j >= i + 2 && std::all_of(document.begin() + static_cast<std::ptrdiff_t>(i),
                                                      document.begin() + static_cast<std::ptrdiff_t>(j),
                                                      [](char ch) { return ch == '.'; });
      while (j < document.size()) {
        const std::size_t len = closer_length(document, j);
        if (len == 0) break;
        j += len;
      }
      if (j == document.size() || is_space(document[j])) {
        if (single_period && j < document.size() && guarded_abbreviation(document, i, j)) {
          i = j;
          continue;
        }
        // A trailing-off "..." followed by a lowercase word continues the sentence.
        const std::size_t next_word = skip_spaces(document, j);
        if (ellipsis && next_word < document.size() &&
            std::islower(static_cast<unsigned char>(document[next_word]))) {
          i = j;
          continue;
        }
        emit(start, j);
        start = skip_spaces(document, j);
        i = start;
        continue;
      }
      i = j;
      continue;
    }
    if (c == '\n') {
      // A blank line ends a sentence even without punctuation (headlines,
      // bullet lists).
      std::size_t k = i + 1;
      while (k < document.size() && is_space(document[k]) && document[k] != '\n') ++k;
      if (k < document.size() && document[k] == '\n') {
        emit(start, i);
        start = skip_spaces(document, k);
        i = start;
        continue;
      }
    }
    ++i;
  }
  if (start < document.size()) emit(start, document.size());
  return units;
}

namespace {

enum class PronounClass { kPerson, kNonPerson, kAny };

struct PronounInfo {
  PronounClass cls;
  bool possessive;
};

std::optional<PronounInfo> pronoun_info(const std::string& lower) {
  if (lower == "he" || lower == "she" || lower == "him" || lower == "her") return PronounInfo{PronounClass::kPerson, false};
  if (lower == "his" || lower == "hers") return PronounInfo{PronounClass::kPerson, true};
  if (lower == "it") return PronounInfo{PronounClass::kNonPerson, false};
  if (lower == "its") return PronounInfo{PronounClass::kNonPerson, true};
  if (lower == "they" || lower == "them") return PronounInfo{PronounClass::kAny, false};
  if (lower == "their") return PronounInfo{PronounClass::kAny, true};
  return std::nullopt;
}

bool compatible(PronounClass cls, EntityLabel label) {
  switch (cls) {
    case PronounClass::kPerson:
      return label == EntityLabel::kPerson;
    case PronounClass::kNonPerson:
      return label != EntityLabel::kPerson;
    case PronounClass::kAny:
      return true;
  }
  return false;
}

}  // namespace

std::vector<SentenceUnit> resolve_coreferences(std::vector<SentenceUnit> units, std::vector<EntitySpan> entities) {
  std::sort(entities.begin(), entities.end(), [](const EntitySpan& a, const EntitySpan& b) { return a.start < b.start; });
  for (auto& unit : units) {
    const std::string& raw = unit.raw_text;
    std::string resolved;
    resolved.reserve(raw.size());
    std::size_t i = 0;
    while (i < raw.size()) {
      if (!std::isalpha(static_cast<unsigned char>(raw[i])) ||
          (i > 0 && std::isalnum(static_cast<unsigned char>(raw[i - 1])))) {
        resolved.push_back(raw[i++]);
        continue;
      }
      std::size_t j = i;
      while (j < raw.size() && std::isalpha(static_cast<unsigned char>(raw[j]))) ++j;
      const std::string word = raw.substr(i, j - i);
      // "it's", "he'd" and the like are left alone: the suffix is not a
      // possessive we could rewrite safely.
      const bool contracted = j < raw.size() && raw[j] == '\'';
      const auto info = contracted ? std::nullopt : pronoun_info(to_lower(word));
      const std::size_t abs = unit.span.start + i;
      const bool inside_entity = std::any_of(entities.begin(), entities.end(), [&](const EntitySpan& e) {
        return abs >= e.start && abs < e.end;
      });
      const EntitySpan* antecedent = nullptr;
      if (info && !inside_entity) {
        for (const auto& e : entities) {
          if (e.end > abs) break;
          if (compatible(info->cls, e.label)) antecedent = &e;
        }
      }
      if (antecedent != nullptr) {
        resolved += antecedent->text;
        if (info->possessive) resolved += "'s";
      } else {
        resolved += word;
      }
      i = j;
    }
    unit.resolved_text = std::move(resolved);
  }
  return units;
}

std::vector<SentenceUnit> build_windows(std::vector<SentenceUnit> units, int radius) {
  if (radius < 0) throw InputError("build_windows: radius must be non-negative");
  const std::size_t n = units.size();
  const auto r = static_cast<std::size_t>(radius);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t first = i >= r ? i - r : 0;
    const std::size_t last = std::min(n - 1, i + r);
    std::string text;
    for (std::size_t k = first; k <= last; ++k) {
      if (k > first) text += ' ';
      text += units[k].resolved_text;
    }
    units[i].window_first = first;
    units[i].window_last = last;
    units[i].window_text = std::move(text);
  }
  return units;
}

std::string make_claim_id(std::string_view document, Origin origin, ClaimKind kind, std::size_t ordinal) {
  std::ostringstream id;
  id << (origin == Origin::kSource ? 's' : 'o') << '-' << sha256_hex(document).substr(0, 10) << '-'
     << (kind == ClaimKind::kTriple ? 't' : 's') << std::setw(4) << std::setfill('0') << ordinal;
  return id.str();
}

namespace {

bool contains_ci(const std::string& haystack_lower, const std::string& needle) {
  const std::string n = to_lower(trim(needle));
  return !n.empty() && haystack_lower.find(n) != std::string::npos;
}

// Span of the sentence a triple most plausibly came from: first sentence at
// or after the cursor mentioning subject and object, then subject only, then
// any sentence at all with either; falls back to the whole document.
TextSpan locate_triple(const std::vector<SentenceUnit>& units, const std::vector<std::string>& lowered,
                       const RawTriple& t, std::size_t& cursor, std::string_view document) {
  const std::size_t n = units.size();
  const auto search = [&](auto pred) -> std::optional<std::size_t> {
    for (std::size_t step = 0; step < n; ++step) {
      const std::size_t k = (cursor + step) % n;
      if (pred(lowered[k])) return k;
    }
    return std::nullopt;
  };
  auto hit = search([&](const std::string& s) { return contains_ci(s, t.subject) && contains_ci(s, t.object); });
  if (!hit) hit = search([&](const std::string& s) { return contains_ci(s, t.subject); });
  if (!hit) hit = search([&](const std::string& s) { return contains_ci(s, t.object) || contains_ci(s, t.predicate); });
  if (!hit) {
    const auto body = trim(document);
    const std::size_t start = static_cast<std::size_t>(body.data() - document.data());
    return {start, start + body.size()};
  }
  cursor = *hit;
  return units[*hit].span;
}

}  // namespace

Decomposition decompose(std::string_view document, Origin origin, const DecomposeConfig& cfg, ProviderSet& providers) {
  if (is_blank(document)) throw InputError("decompose: document is empty");
  cfg.validate();
  Decomposition out;
  auto units = split_sentences(document);

  if (cfg.strategy == Strategy::kTriples) {
    const auto outcome = extract_triples_llm(document, *providers.extractor);
    if (outcome.failed) {
      out.extraction_failed = true;
      out.failure_reason = outcome.failure_reason;
      return out;
    }
    std::vector<std::string> lowered;
    lowered.reserve(units.size());
    for (const auto& u : units) lowered.push_back(to_lower(u.raw_text));
    std::size_t cursor = 0;
    for (std::size_t k = 0; k < outcome.triples.size(); ++k) {
      const auto& t = outcome.triples[k];
      Claim c;
      c.id = make_claim_id(document, origin, ClaimKind::kTriple, k);
      c.text = t.subject + " " + t.predicate + " " + t.object;
      c.kind = ClaimKind::kTriple;
      c.origin = origin;
      c.span = locate_triple(units, lowered, t, cursor, document);
      c.triple = t;
      out.claims.push_back(std::move(c));
    }
    return out;
  }

  if (cfg.coref) units = resolve_coreferences(std::move(units), ner_entities(document, *providers.ner));
  units = build_windows(std::move(units), cfg.window_radius);
  for (const auto& u : units) {
    Claim c;
    c.id = make_claim_id(document, origin, ClaimKind::kSentence, u.index);
    c.text = u.window_text;
    c.kind = ClaimKind::kSentence;
    c.origin = origin;
    c.span = {units[u.window_first].span.start, units[u.window_last].span.end};
    c.sentence_index = u.index;
    out.claims.push_back(std::move(c));
  }
  return out;
}

json to_json(const Claim& claim) {
  json j = {{"id", claim.id},
            {"text", claim.text},
            {"kind", to_string(claim.kind)},
            {"origin", to_string(claim.origin)},
            {"span", {claim.span.start, claim.span.end}}};
  if (claim.triple) j["triple"] = to_json(*claim.triple);
  if (claim.sentence_index) j["sentence_index"] = *claim.sentence_index;
  return j;
}

Claim claim_from_json(const json& j) {
  Claim c;
  c.id = j.at("id").get<std::string>();
  c.text = j.at("text").get<std::string>();
  c.kind = claim_kind_from_string(j.at("kind").get<std::string>());
  c.origin = origin_from_string(j.at("origin").get<std::string>());
  c.span = {j.at("span").at(0).get<std::size_t>(), j.at("span").at(1).get<std::size_t>()};
  if (j.contains("triple")) c.triple = triple_from_json(j["triple"]);
  if (j.contains("sentence_index")) c.sentence_index = j["sentence_index"].get<std::size_t>();
  return c;
}

}  // namespace claimaudit
