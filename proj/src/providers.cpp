#include "claimaudit/providers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "claimaudit/errors.hpp"
#include "claimaudit/text.hpp"
#include "provider_backends.hpp"

namespace claimaudit {

using nlohmann::json;

std::string to_string(ProviderKind kind) {
  switch (kind) {
    case ProviderKind::kStub:
      return "stub";
    case ProviderKind::kHttpLlm:
      return "http_llm";
    case ProviderKind::kLocalModel:
      return "local_model";
  }
  return "unknown";
}

ProviderKind provider_kind_from_string(std::string_view s) {
  if (s == "stub") return ProviderKind::kStub;
  if (s == "http_llm" || s == "http") return ProviderKind::kHttpLlm;
  if (s == "local_model" || s == "local") return ProviderKind::kLocalModel;
  throw ConfigError("unknown provider kind '" + std::string(s) + "' (expected stub, http_llm, local_model)");
}

std::string to_string(EntityLabel label) {
  switch (label) {
    case EntityLabel::kPerson:
      return "person";
    case EntityLabel::kOrg:
      return "org";
    case EntityLabel::kLocation:
      return "location";
    case EntityLabel::kMisc:
      return "misc";
  }
  return "misc";
}

EntityLabel entity_label_from_string(std::string_view s) {
  const std::string l = to_lower(s);
  if (l == "person" || l == "per") return EntityLabel::kPerson;
  if (l == "org" || l == "organization" || l == "organisation") return EntityLabel::kOrg;
  if (l == "location" || l == "loc" || l == "gpe") return EntityLabel::kLocation;
  return EntityLabel::kMisc;
}

double EmbeddingVector::norm() const {
  double sum = 0.0;
  for (const double v : values) sum += v * v;
  return std::sqrt(sum);
}

NliVerdict NliVerdict::from_scalar(double score) {
  if (!std::isfinite(score) || score < 0.0 || score > 1.0) {
    throw NumericError("scalar consistency score outside [0,1]: " + std::to_string(score));
  }
  return {score, 0.0, 1.0 - score};
}

NliVerdict NliVerdict::normalized() const {
  for (const double v : {entail, neutral, contradict}) {
    if (!std::isfinite(v) || v < 0.0) throw NumericError("NLI component negative or non-finite");
  }
  const double sum = entail + neutral + contradict;
  if (sum <= 0.0) throw NumericError("NLI components sum to zero");
  return {entail / sum, neutral / sum, contradict / sum};
}

bool NliVerdict::valid(double tolerance) const {
  for (const double v : {entail, neutral, contradict}) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) return false;
  }
  return std::abs(entail + neutral + contradict - 1.0) <= tolerance;
}

ExtractionOutcome ExtractionOutcome::success(std::vector<RawTriple> triples) {
  return {std::move(triples), false, {}};
}

ExtractionOutcome ExtractionOutcome::failure(std::string reason) {
  return {{}, true, reason.empty() ? std::string("unspecified") : std::move(reason)};
}

StubSettings StubSettings::defaults() {
  StubSettings s;
  s.antonyms = {
      {"increased", "decreased"}, {"increase", "decrease"}, {"rose", "fell"},
      {"won", "lost"},            {"win", "lose"},          {"higher", "lower"},
      {"more", "less"},           {"larger", "smaller"},    {"before", "after"},
      {"true", "false"},          {"open", "closed"},       {"up", "down"},
      {"first", "last"},          {"above", "below"},       {"accepted", "rejected"},
      {"approved", "denied"},     {"alive", "dead"},        {"profit", "loss"},
  };
  s.predicates = {"founded",  "acquired", "is",       "was",       "are",      "were",    "has",
                  "had",      "met",      "sat",      "owns",      "leads",    "led",     "joined",
                  "left",     "won",      "lost",     "increased", "decreased", "rose",   "fell",
                  "built",    "wrote",    "said",     "visited",   "signed",   "bought",  "sold",
                  "hired",    "created",  "launched", "announced", "reported", "became",  "married",
                  "killed",   "scored",   "beat",     "arrested",  "died",     "released", "opened",
                  "closed",   "received", "praised",  "criticised", "criticized", "named", "faces",
                  "plays",    "played",   "lives",    "lived",     "works",    "worked",  "runs",
                  "ran",      "slept",    "arrived",  "will",      "can",      "could",   "would"};
  return s;
}

std::string StubSettings::fingerprint() const {
  json j;
  j["antonyms"] = json::array();
  for (const auto& [a, b] : antonyms) j["antonyms"].push_back({a, b});
  j["gazetteer"] = json::object();
  for (const auto& [k, v] : gazetteer) j["gazetteer"][k] = to_string(v);
  j["predicates"] = predicates;
  j["fail_extraction"] = fail_extraction;
  j["markers"] = extraction_failure_markers;
  return sha256_hex(j.dump()).substr(0, 16);
}

void ProviderConfig::validate() const {
  if (kind == ProviderKind::kHttpLlm && trim(endpoint).empty()) {
    throw ConfigError("http_llm provider '" + model_name + "' requires an endpoint");
  }
  if (timeout_seconds <= 0.0) throw ConfigError("provider timeout must be positive");
  if (retries < 0) throw ConfigError("provider retries must be non-negative");
  if (embedding_dim < 0) throw ConfigError("embedding_dim must be non-negative");
}

namespace detail {

std::string provider_identity(const ProviderConfig& cfg, std::string_view capability) {
  std::string id = to_string(cfg.kind) + "/" + cfg.model_name + "/" + std::string(capability);
  if (cfg.kind != ProviderKind::kHttpLlm) id += "/" + cfg.stub.fingerprint();
  if (cfg.embedding_dim > 0 && capability == "embed") id += "/d" + std::to_string(cfg.embedding_dim);
  return id;
}

}  // namespace detail

std::unique_ptr<Embedder> make_embedder(const ProviderConfig& cfg) {
  cfg.validate();
  switch (cfg.kind) {
    case ProviderKind::kStub:
      return std::make_unique<detail::StubEmbedder>(cfg);
    case ProviderKind::kLocalModel:
      return std::make_unique<detail::LexicalEmbedder>(cfg);
    case ProviderKind::kHttpLlm:
      return detail::make_http_embedder(cfg);
  }
  throw ConfigError("unhandled provider kind");
}

std::unique_ptr<NliScorer> make_nli_scorer(const ProviderConfig& cfg) {
  cfg.validate();
  switch (cfg.kind) {
    case ProviderKind::kStub:
      return std::make_unique<detail::StubNliScorer>(cfg);
    case ProviderKind::kLocalModel:
      return std::make_unique<detail::LexicalNliScorer>(cfg);
    case ProviderKind::kHttpLlm:
      return detail::make_http_nli_scorer(cfg);
  }
  throw ConfigError("unhandled provider kind");
}

std::unique_ptr<TripleExtractor> make_triple_extractor(const ProviderConfig& cfg) {
  cfg.validate();
  switch (cfg.kind) {
    case ProviderKind::kStub:
      return std::make_unique<detail::StubTripleExtractor>(cfg);
    case ProviderKind::kLocalModel:
      return std::make_unique<detail::PatternTripleExtractor>(cfg);
    case ProviderKind::kHttpLlm:
      return detail::make_http_triple_extractor(cfg);
  }
  throw ConfigError("unhandled provider kind");
}

std::unique_ptr<EntityRecognizer> make_entity_recognizer(const ProviderConfig& cfg) {
  cfg.validate();
  switch (cfg.kind) {
    case ProviderKind::kStub:
      return std::make_unique<detail::StubEntityRecognizer>(cfg);
    case ProviderKind::kLocalModel:
      return std::make_unique<detail::CapitalizationEntityRecognizer>(cfg);
    case ProviderKind::kHttpLlm:
      return detail::make_http_entity_recognizer(cfg);
  }
  throw ConfigError("unhandled provider kind");
}

ProviderSetConfig ProviderSetConfig::all(const ProviderConfig& cfg) { return {cfg, cfg, cfg, cfg}; }

ProviderSetConfig ProviderSetConfig::from_environment() {
  ProviderSetConfig out = all(ProviderConfig{});
  const auto env = [](const char* name) -> std::string {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
  };
  const std::string llm = env("AUDIT_LLM_ENDPOINT");
  const std::string key = env("AUDIT_LLM_API_KEY");
  const std::string nli = env("AUDIT_NLI_ENDPOINT");
  const std::string cache = env("AUDIT_CACHE_DIR");
  if (!llm.empty()) {
    for (ProviderConfig* c : {&out.embedding, &out.extraction, &out.ner}) {
      c->kind = ProviderKind::kHttpLlm;
      c->endpoint = llm;
      c->api_key = key;
      c->model_name = "remote";
    }
  }
  if (!nli.empty()) {
    out.nli.kind = ProviderKind::kHttpLlm;
    out.nli.endpoint = nli;
    out.nli.api_key = key;
    out.nli.model_name = "remote-nli";
  }
  if (!cache.empty()) {
    for (ProviderConfig* c : {&out.embedding, &out.nli, &out.extraction, &out.ner}) c->cache_dir = cache;
  }
  return out;
}

namespace {

template <typename P>
std::unique_ptr<P> maybe_cached(std::unique_ptr<P> inner, const ProviderConfig& cfg) {
  if (cfg.cache_dir.empty()) return inner;
  return with_cache(std::move(inner), std::make_shared<ResponseCache>(cfg.cache_dir));
}

}  // namespace

ProviderSet ProviderSet::create(const ProviderSetConfig& cfg) {
  ProviderSet set;
  set.embedder = maybe_cached(make_embedder(cfg.embedding), cfg.embedding);
  set.nli = maybe_cached(make_nli_scorer(cfg.nli), cfg.nli);
  set.extractor = maybe_cached(make_triple_extractor(cfg.extraction), cfg.extraction);
  set.ner = maybe_cached(make_entity_recognizer(cfg.ner), cfg.ner);
  return set;
}

std::size_t ProviderSet::total_invocations() const {
  return embedder->invocations() + nli->invocations() + extractor->invocations() + ner->invocations();
}

std::vector<EmbeddingVector> embed_texts(const std::vector<std::string>& texts, Embedder& embedder) {
  if (texts.empty()) throw InputError("embed_texts: no texts given");
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (is_blank(texts[i])) throw InputError("embed_texts: text at index " + std::to_string(i) + " is empty");
  }
  auto out = embedder.embed(texts);
  if (out.size() != texts.size()) {
    throw DecodeError("embedder returned " + std::to_string(out.size()) + " vectors for " +
                          std::to_string(texts.size()) + " texts",
                      {});
  }
  const std::size_t dim = out.front().dim();
  for (const auto& v : out) {
    if (v.dim() == 0 || v.dim() != dim) throw DecodeError("embedder returned inconsistent dimensions", {});
    for (const double x : v.values) {
      if (!std::isfinite(x)) throw DecodeError("embedder returned a non-finite value", {});
    }
  }
  return out;
}

NliVerdict nli_score(std::string_view premise, std::string_view hypothesis, NliScorer& scorer) {
  if (is_blank(premise)) throw InputError("nli_score: premise is empty");
  if (is_blank(hypothesis)) throw InputError("nli_score: hypothesis is empty");
  return scorer.score(premise, hypothesis).normalized();
}

ExtractionOutcome extract_triples_llm(std::string_view text, TripleExtractor& extractor) {
  const bool has_content = std::any_of(text.begin(), text.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
  });
  if (!has_content) return ExtractionOutcome::failure("input: text has no extractable content");
  auto outcome = extractor.extract(text);
  if (outcome.failed) {
    outcome.triples.clear();
    if (outcome.failure_reason.empty()) outcome.failure_reason = "unspecified";
    return outcome;
  }
  outcome.failure_reason.clear();
  std::erase_if(outcome.triples, [](const RawTriple& t) {
    return is_blank(t.subject) || is_blank(t.predicate) || is_blank(t.object);
  });
  if (outcome.triples.empty()) return ExtractionOutcome::failure("no triples extracted");
  for (auto& t : outcome.triples) {
    t.subject = std::string(trim(t.subject));
    t.predicate = std::string(trim(t.predicate));
    t.object = std::string(trim(t.object));
  }
  return outcome;
}

std::vector<EntitySpan> ner_entities(std::string_view text, EntityRecognizer& recognizer) {
  if (is_blank(text)) throw InputError("ner_entities: text is empty");
  return normalize_entity_spans(recognizer.recognize(text), text.size());
}

std::vector<EntitySpan> normalize_entity_spans(std::vector<EntitySpan> raw, std::size_t text_length) {
  std::erase_if(raw, [&](const EntitySpan& e) { return e.start >= e.end || e.end > text_length; });
  std::stable_sort(raw.begin(), raw.end(), [](const EntitySpan& a, const EntitySpan& b) {
    if (a.length() != b.length()) return a.length() > b.length();
    return a.start < b.start;
  });
  std::vector<EntitySpan> kept;
  for (auto& e : raw) {
    const bool overlaps = std::any_of(kept.begin(), kept.end(), [&](const EntitySpan& k) {
      return e.start < k.end && k.start < e.end;
    });
    if (!overlaps) kept.push_back(std::move(e));
  }
  std::sort(kept.begin(), kept.end(), [](const EntitySpan& a, const EntitySpan& b) { return a.start < b.start; });
  return kept;
}

namespace {

std::optional<RawTriple> triple_from_any(const json& j) {
  if (j.is_object()) {
    const auto get = [&](std::initializer_list<const char*> names) -> std::string {
      for (const char* n : names) {
        if (j.contains(n) && j[n].is_string()) return j[n].get<std::string>();
      }
      return {};
    };
    RawTriple t{get({"subject", "s", "head"}), get({"predicate", "p", "relation", "verb"}),
                get({"object", "o", "tail"})};
    if (is_blank(t.subject) || is_blank(t.predicate) || is_blank(t.object)) return std::nullopt;
    return t;
  }
  if (j.is_array() && j.size() == 3 && j[0].is_string() && j[1].is_string() && j[2].is_string()) {
    return RawTriple{j[0].get<std::string>(), j[1].get<std::string>(), j[2].get<std::string>()};
  }
  return std::nullopt;
}

std::vector<std::string> split_fields(std::string_view line, char sep) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      fields.emplace_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return fields;
}

}  // namespace

std::optional<std::vector<RawTriple>> parse_triples_text(std::string_view payload) {
  const auto body = trim(payload);
  if (body.empty()) return std::nullopt;
  if (body.front() == '[' || body.front() == '{') {
    const json j = json::parse(body, nullptr, false);
    if (!j.is_discarded()) {
      const json& arr = j.is_object() && j.contains("triples") ? j["triples"] : j;
      if (!arr.is_array()) return std::nullopt;
      std::vector<RawTriple> out;
      for (const auto& item : arr) {
        auto t = triple_from_any(item);
        if (!t) return std::nullopt;
        out.push_back(std::move(*t));
      }
      if (out.empty()) return std::nullopt;
      return out;
    }
  }
  std::vector<RawTriple> out;
  std::istringstream lines{std::string(body)};
  std::string line;
  while (std::getline(lines, line)) {
    std::string_view l = trim(line);
    if (l.empty()) continue;
    // Tolerate list markers such as "1." or "-".
    while (!l.empty() && (std::isdigit(static_cast<unsigned char>(l.front())) || l.front() == '-' ||
                          l.front() == '*' || l.front() == '.')) {
      l.remove_prefix(1);
    }
    l = trim(l);
    if (!l.empty() && l.front() == '(' && l.back() == ')') l = l.substr(1, l.size() - 2);
    std::vector<std::string> fields;
    for (const char sep : {';', '|', ','}) {
      fields = split_fields(l, sep);
      if (fields.size() == 3) break;
    }
    if (fields.size() != 3 || is_blank(fields[0]) || is_blank(fields[1]) || is_blank(fields[2])) {
      return std::nullopt;
    }
    out.push_back({fields[0], fields[1], fields[2]});
  }
  if (out.empty()) return std::nullopt;
  return out;
}

json to_json(const EmbeddingVector& v) { return v.values; }

json to_json(const NliVerdict& v) {
  return {{"entail", v.entail}, {"neutral", v.neutral}, {"contradict", v.contradict}};
}

json to_json(const RawTriple& t) { return {{"subject", t.subject}, {"predicate", t.predicate}, {"object", t.object}}; }

json to_json(const ExtractionOutcome& o) {
  json triples = json::array();
  for (const auto& t : o.triples) triples.push_back(to_json(t));
  return {{"triples", triples}, {"failed", o.failed}, {"failure_reason", o.failure_reason}};
}

json to_json(const EntitySpan& e) {
  return {{"text", e.text}, {"label", to_string(e.label)}, {"start", e.start}, {"end", e.end}};
}

EmbeddingVector embedding_from_json(const json& j) {
  if (!j.is_array()) throw DecodeError("embedding is not an array", j.dump());
  EmbeddingVector v;
  v.values.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) throw DecodeError("embedding component is not a number", j.dump());
    v.values.push_back(x.get<double>());
  }
  return v;
}

NliVerdict verdict_from_json(const json& j) {
  if (j.is_number()) return NliVerdict::from_scalar(j.get<double>());
  if (!j.is_object()) throw DecodeError("NLI verdict is neither an object nor a number", j.dump());
  if (j.contains("score") && j["score"].is_number() && !j.contains("entail")) {
    return NliVerdict::from_scalar(j["score"].get<double>());
  }
  const auto component = [&](std::initializer_list<const char*> names) -> double {
    for (const char* n : names) {
      if (j.contains(n)) {
        if (!j[n].is_number()) throw DecodeError(std::string("NLI component '") + n + "' is not a number", j.dump());
        return j[n].get<double>();
      }
    }
    throw DecodeError("NLI verdict is missing a component", j.dump());
  };
  const NliVerdict raw{component({"entail", "entailment"}), component({"neutral"}),
                       component({"contradict", "contradiction"})};
  try {
    return raw.normalized();
  } catch (const NumericError& e) {
    throw DecodeError(e.what(), j.dump());
  }
}

RawTriple triple_from_json(const json& j) {
  auto t = triple_from_any(j);
  if (!t) throw DecodeError("malformed triple", j.dump());
  return *t;
}

ExtractionOutcome outcome_from_json(const json& j) {
  if (!j.is_object() || !j.contains("failed") || !j.contains("triples")) {
    throw DecodeError("malformed extraction outcome", j.dump());
  }
  ExtractionOutcome o;
  o.failed = j.at("failed").get<bool>();
  o.failure_reason = j.value("failure_reason", "");
  for (const auto& t : j.at("triples")) o.triples.push_back(triple_from_json(t));
  return o;
}

EntitySpan entity_from_json(const json& j) {
  if (!j.is_object() || !j.contains("start") || !j.contains("end")) {
    throw DecodeError("malformed entity span", j.dump());
  }
  EntitySpan e;
  e.text = j.value("text", "");
  e.label = entity_label_from_string(j.value("label", "misc"));
  e.start = j.at("start").get<std::size_t>();
  e.end = j.at("end").get<std::size_t>();
  return e;
}

StubSettings stub_settings_from_json(const json& j, StubSettings base) {
  if (!j.is_object()) throw ConfigError("stub settings must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "antonyms") {
        for (const auto& pair : value) {
          base.antonyms.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
        }
      } else if (key == "gazetteer") {
        for (const auto& [surface, label] : value.items()) {
          base.gazetteer[surface] = entity_label_from_string(label.get<std::string>());
        }
      } else if (key == "predicates") {
        base.predicates = value.get<std::vector<std::string>>();
      } else if (key == "fail_extraction") {
        base.fail_extraction = value.get<bool>();
      } else if (key == "extraction_failure_markers") {
        base.extraction_failure_markers = value.get<std::vector<std::string>>();
      } else {
        throw ConfigError("unknown stub settings key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed stub settings: ") + e.what());
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
  return base;
}

}  // namespace claimaudit
