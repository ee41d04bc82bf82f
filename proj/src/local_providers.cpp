// Stub and local_model backends. Both are pure functions of their inputs.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <unordered_set>

#include "claimaudit/errors.hpp"
#include "claimaudit/text.hpp"
#include "provider_backends.hpp"

namespace claimaudit::detail {

namespace {

bool is_word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) != 0 || c == '\'' || u >= 0x80;
}

double unit_double(std::mt19937_64& rng) {
  // (0, 1]: never zero so log() below stays finite.
  return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> words = {
      "a",    "an",   "the",  "of",   "to",   "in",   "on",   "at",   "for",  "by",   "with",
      "and",  "or",   "but",  "is",   "are",  "was",  "were", "be",   "been", "it",   "its",
      "that", "this", "as",   "from", "has",  "have", "had",  "he",   "she",  "they", "his",
      "her",  "their", "them", "him", "s",    "will", "would", "which", "who", "also"};
  return words;
}

const std::unordered_set<std::string>& negations() {
  static const std::unordered_set<std::string> words = {"not", "no", "never", "n't", "none", "nobody", "cannot"};
  return words;
}

std::vector<std::string> lower_words(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : word_tokens(text)) out.push_back(to_lower(t.text));
  return out;
}

bool is_number_token(const std::string& w) {
  return !w.empty() && std::all_of(w.begin(), w.end(), [](char c) {
    return std::isdigit(static_cast<unsigned char>(c)) || c == ',' || c == '.';
  });
}

std::string strip_edge_punct(std::string s) {
  const auto punct = [](char c) {
    return c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':' || c == '"' || c == ')' ||
           c == '(';
  };
  while (!s.empty() && punct(s.back())) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && punct(s[b])) ++b;
  return s.substr(b);
}

}  // namespace

std::vector<WordToken> word_tokens(std::string_view text) {
  std::vector<WordToken> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_char(text[i])) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < text.size() && is_word_char(text[i])) ++i;
    std::size_t end = i;
    // Trailing apostrophes belong to quoting, not the word.
    while (end > start && text[end - 1] == '\'') --end;
    if (end > start) out.push_back({std::string(text.substr(start, end - start)), start, end});
  }
  return out;
}

bool is_whole_word(std::string_view text, std::size_t start, std::size_t end) {
  const bool left = start == 0 || !std::isalnum(static_cast<unsigned char>(text[start - 1]));
  const bool right = end >= text.size() || !std::isalnum(static_cast<unsigned char>(text[end]));
  return left && right;
}

std::vector<std::string> naive_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if ((c == '.' || c == '!' || c == '?') &&
        (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])))) {
      const auto s = trim(text.substr(start, i + 1 - start));
      if (!s.empty()) out.emplace_back(s);
      start = i + 1;
    }
  }
  const auto tail = trim(text.substr(std::min(start, text.size())));
  if (!tail.empty()) out.emplace_back(tail);
  return out;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<RawTriple> pattern_triples(std::string_view text, const std::vector<std::string>& predicates) {
  const std::unordered_set<std::string> verbs(predicates.begin(), predicates.end());
  std::vector<RawTriple> out;
  for (const auto& sentence : naive_sentences(text)) {
    std::vector<std::string> words;
    for (auto& w : whitespace_tokens(sentence)) {
      auto stripped = strip_edge_punct(w);
      if (!stripped.empty()) words.push_back(std::move(stripped));
    }
    if (words.size() < 3) continue;
    for (std::size_t i = 1; i + 1 < words.size(); ++i) {
      if (verbs.count(to_lower(words[i])) == 0) continue;
      std::vector<std::string> subj(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(i));
      std::vector<std::string> obj(words.begin() + static_cast<std::ptrdiff_t>(i) + 1, words.end());
      out.push_back({join(subj, " "), words[i], join(obj, " ")});
      break;
    }
  }
  return out;
}

// ---- stub ----

StubEmbedder::StubEmbedder(const ProviderConfig& cfg)
    : Embedder(provider_identity(cfg, "embed")),
      dim_(cfg.embedding_dim > 0 ? static_cast<std::size_t>(cfg.embedding_dim) : 64) {}

EmbeddingVector StubEmbedder::vector_for(std::string_view text, std::size_t dim) {
  const auto digest = sha256(normalize_for_comparison(text));
  std::uint64_t seed = 0;
  for (int i = 0; i < 8; ++i) seed = (seed << 8) | digest[static_cast<std::size_t>(i)];
  std::mt19937_64 rng(seed);
  EmbeddingVector v;
  v.values.resize(dim);
  // Box-Muller over mt19937_64 keeps the vectors identical across standard
  // libraries (std::normal_distribution is implementation-defined).
  for (std::size_t i = 0; i < dim; i += 2) {
    const double r = std::sqrt(-2.0 * std::log(unit_double(rng)));
    const double theta = 2.0 * std::numbers::pi * unit_double(rng);
    v.values[i] = r * std::cos(theta);
    if (i + 1 < dim) v.values[i + 1] = r * std::sin(theta);
  }
  const double n = v.norm();
  for (auto& x : v.values) x /= n;
  return v;
}

std::vector<EmbeddingVector> StubEmbedder::embed(const std::vector<std::string>& texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(vector_for(t, dim_));
  count(texts.size());
  return out;
}

StubNliScorer::StubNliScorer(const ProviderConfig& cfg)
    : NliScorer(provider_identity(cfg, "nli")), settings_(cfg.stub) {}

NliVerdict StubNliScorer::score(std::string_view premise, std::string_view hypothesis) {
  count();
  const std::string p = normalize_for_comparison(premise);
  const std::string h = normalize_for_comparison(hypothesis);
  if (!h.empty() && p.find(h) != std::string::npos) return NliVerdict::entailment();

  // Contradiction: a single antonym substitution turns the hypothesis into
  // the premise.
  auto words = whitespace_tokens(h);
  for (std::size_t i = 0; i < words.size(); ++i) {
    const std::string original = words[i];
    for (const auto& [a, b] : settings_.antonyms) {
      const std::string la = to_lower(a);
      const std::string lb = to_lower(b);
      std::string replacement;
      if (original == la) replacement = lb;
      else if (original == lb) replacement = la;
      else continue;
      words[i] = replacement;
      if (join(words, " ") == p) return NliVerdict::contradiction();
      words[i] = original;
    }
  }
  return NliVerdict::neutrality();
}

StubTripleExtractor::StubTripleExtractor(const ProviderConfig& cfg)
    : TripleExtractor(provider_identity(cfg, "extract")), settings_(cfg.stub) {}

ExtractionOutcome StubTripleExtractor::extract(std::string_view text) {
  count();
  if (settings_.fail_extraction) return ExtractionOutcome::failure("injected");
  for (const auto& marker : settings_.extraction_failure_markers) {
    if (!marker.empty() && text.find(marker) != std::string_view::npos) return ExtractionOutcome::failure("injected");
  }
  auto triples = pattern_triples(text, settings_.predicates);
  if (triples.empty()) return ExtractionOutcome::failure("no triples extracted");
  return ExtractionOutcome::success(std::move(triples));
}

StubEntityRecognizer::StubEntityRecognizer(const ProviderConfig& cfg)
    : EntityRecognizer(provider_identity(cfg, "ner")), settings_(cfg.stub) {}

std::vector<EntitySpan> StubEntityRecognizer::recognize(std::string_view text) {
  count();
  std::vector<EntitySpan> spans;
  for (const auto& [surface, label] : settings_.gazetteer) {
    if (surface.empty()) continue;
    std::size_t pos = text.find(surface);
    while (pos != std::string_view::npos) {
      if (is_whole_word(text, pos, pos + surface.size())) spans.push_back({surface, label, pos, pos + surface.size()});
      pos = text.find(surface, pos + 1);
    }
  }
  return normalize_entity_spans(std::move(spans), text.size());
}

// ---- local_model ----

LexicalEmbedder::LexicalEmbedder(const ProviderConfig& cfg)
    : Embedder(provider_identity(cfg, "embed")),
      dim_(cfg.embedding_dim > 0 ? static_cast<std::size_t>(cfg.embedding_dim) : 256) {}

std::vector<EmbeddingVector> LexicalEmbedder::embed(const std::vector<std::string>& texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    std::vector<std::string> words;
    for (auto& w : lower_words(text)) {
      if (stopwords().count(w) == 0) words.push_back(std::move(w));
    }
    EmbeddingVector v;
    v.values.assign(dim_, 0.0);
    const auto add = [&](std::string_view feature, double weight) {
      const std::uint64_t h = fnv1a(feature);
      v.values[h % dim_] += ((h >> 63) != 0U ? -weight : weight);
    };
    for (std::size_t i = 0; i < words.size(); ++i) {
      add(words[i], 1.0);
      if (i + 1 < words.size()) add(words[i] + " " + words[i + 1], 0.5);
    }
    const double n = v.norm();
    if (n == 0.0) {
      v = StubEmbedder::vector_for(text, dim_);
    } else {
      for (auto& x : v.values) x /= n;
    }
    out.push_back(std::move(v));
  }
  count(texts.size());
  return out;
}

LexicalNliScorer::LexicalNliScorer(const ProviderConfig& cfg)
    : NliScorer(provider_identity(cfg, "nli")), settings_(cfg.stub) {}

NliVerdict LexicalNliScorer::score(std::string_view premise, std::string_view hypothesis) {
  count();
  const auto pw = lower_words(premise);
  const auto hw = lower_words(hypothesis);
  const std::set<std::string> pset(pw.begin(), pw.end());

  std::size_t content = 0;
  std::size_t covered = 0;
  bool conflict = false;
  for (const auto& w : hw) {
    if (stopwords().count(w) != 0 || negations().count(w) != 0) continue;
    ++content;
    if (pset.count(w) != 0) {
      ++covered;
      continue;
    }
    for (const auto& [a, b] : settings_.antonyms) {
      if ((w == a && pset.count(b) != 0) || (w == b && pset.count(a) != 0)) conflict = true;
    }
    if (is_number_token(w) && std::any_of(pset.begin(), pset.end(), is_number_token)) conflict = true;
  }
  const auto negation_count = [](const std::vector<std::string>& ws) {
    return std::count_if(ws.begin(), ws.end(), [](const std::string& w) { return negations().count(w) != 0; });
  };
  if ((negation_count(pw) % 2) != (negation_count(hw) % 2)) conflict = true;

  if (content == 0) return NliVerdict::neutrality();
  const double coverage = static_cast<double>(covered) / static_cast<double>(content);
  if (conflict) return {0.0, 1.0 - coverage, coverage > 0.0 ? coverage : 0.0};
  return {coverage, 1.0 - coverage, 0.0};
}

PatternTripleExtractor::PatternTripleExtractor(const ProviderConfig& cfg)
    : TripleExtractor(provider_identity(cfg, "extract")), settings_(cfg.stub) {}

ExtractionOutcome PatternTripleExtractor::extract(std::string_view text) {
  count();
  auto triples = pattern_triples(text, settings_.predicates);
  if (triples.empty()) return ExtractionOutcome::failure("no triples extracted");
  return ExtractionOutcome::success(std::move(triples));
}

CapitalizationEntityRecognizer::CapitalizationEntityRecognizer(const ProviderConfig& cfg)
    : EntityRecognizer(provider_identity(cfg, "ner")), settings_(cfg.stub) {}

std::vector<EntitySpan> CapitalizationEntityRecognizer::recognize(std::string_view text) {
  count();
  static const std::unordered_set<std::string> person_titles = {"mr", "mrs", "ms", "dr", "prof", "sir"};
  static const std::unordered_set<std::string> org_suffixes = {"inc", "corp", "ltd", "co", "plc", "llc", "group"};

  const auto tokens = word_tokens(text);
  const auto capitalized = [](const std::string& w) {
    return !w.empty() && std::isupper(static_cast<unsigned char>(w.front()));
  };

  std::vector<EntitySpan> spans;
  std::size_t i = 0;
  while (i < tokens.size()) {
    if (!capitalized(tokens[i].text)) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    // Runs may only be separated by single spaces.
    while (j < tokens.size() && capitalized(tokens[j].text) && tokens[j].start == tokens[j - 1].end + 1) ++j;
    std::size_t first = i;
    const bool titled = person_titles.count(to_lower(tokens[i].text)) != 0;
    if (titled) ++first;
    if (first < j) {
      const std::size_t start = tokens[first].start;
      const std::size_t end = tokens[j - 1].end;
      const std::string surface(text.substr(start, end - start));
      const bool gazetteered = settings_.gazetteer.count(surface) != 0;
      // Sentence-initial function words ("The", "He") are capitalized by
      // position only.
      const bool function_word = !gazetteered && j - first == 1 && stopwords().count(to_lower(surface)) != 0;
      if (!function_word) {
        EntityLabel label = EntityLabel::kMisc;
        if (gazetteered) label = settings_.gazetteer.at(surface);
        else if (titled) label = EntityLabel::kPerson;
        else if (org_suffixes.count(to_lower(tokens[j - 1].text)) != 0) label = EntityLabel::kOrg;
        spans.push_back({surface, label, start, end});
      }
    }
    i = j;
  }
  return normalize_entity_spans(std::move(spans), text.size());
}

}  // namespace claimaudit::detail
