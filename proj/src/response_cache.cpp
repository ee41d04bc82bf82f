#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "claimaudit/errors.hpp"
#include "claimaudit/providers.hpp"
#include "claimaudit/text.hpp"

namespace claimaudit {

using nlohmann::json;
namespace fs = std::filesystem;

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec || !fs::is_directory(dir_)) {
    throw ConfigError("cache directory " + dir_.string() + " is not writable: " + ec.message());
  }
}

std::string ResponseCache::make_key(std::string_view identity, std::string_view operation,
                                    const json& canonical_input) {
  std::string material;
  material.reserve(identity.size() + operation.size() + 64);
  material.append(identity).append("\n").append(operation).append("\n").append(canonical_input.dump());
  return sha256_hex(material);
}

fs::path ResponseCache::entry_path(const std::string& key) const {
  return dir_ / key.substr(0, 2) / (key + ".json");
}

std::optional<json> ResponseCache::load(const std::string& key) const {
  const fs::path path = entry_path(key);
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream buf;
  buf << in.rdbuf();
  const json entry = json::parse(buf.str(), nullptr, false);
  if (entry.is_discarded() || !entry.is_object() || entry.value("key", "") != key || !entry.contains("result")) {
    spdlog::warn("discarding corrupt cache entry {}", path.string());
    discard(key);
    return std::nullopt;
  }
  return entry["result"];
}

void ResponseCache::store(const std::string& key, const json& value) const {
  static std::atomic<std::uint64_t> sequence{0};
  const fs::path path = entry_path(key);
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ostringstream tmp_name;
  tmp_name << key << '.' << std::hash<std::thread::id>{}(std::this_thread::get_id()) << '.' << sequence++ << ".tmp";
  const fs::path tmp = path.parent_path() / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      spdlog::warn("cache write failed for {}", path.string());
      return;
    }
    out << json{{"key", key}, {"result", value}}.dump();
  }
  // Values for a key are identical by construction, so last writer wins.
  fs::rename(tmp, path, ec);
  if (ec) {
    spdlog::warn("cache rename failed for {}: {}", path.string(), ec.message());
    fs::remove(tmp, ec);
  }
}

void ResponseCache::discard(const std::string& key) const {
  std::error_code ec;
  fs::remove(entry_path(key), ec);
}

namespace {

template <typename T, typename Decode>
std::optional<T> load_decoded(const ResponseCache& cache, const std::string& key, Decode decode) {
  auto raw = cache.load(key);
  if (!raw) return std::nullopt;
  try {
    return decode(*raw);
  } catch (const std::exception& e) {
    spdlog::warn("discarding undecodable cache entry {}: {}", key, e.what());
    cache.discard(key);
    return std::nullopt;
  }
}

class CachedEmbedder final : public Embedder {
 public:
  CachedEmbedder(std::unique_ptr<Embedder> inner, std::shared_ptr<ResponseCache> cache)
      : Embedder(inner->identity()), inner_(std::move(inner)), cache_(std::move(cache)) {}

  std::size_t invocations() const override { return inner_->invocations(); }

  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
    std::vector<std::optional<EmbeddingVector>> found(texts.size());
    std::vector<std::string> keys(texts.size());
    std::vector<std::string> misses;
    std::map<std::string, std::size_t> miss_index;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      keys[i] = ResponseCache::make_key(identity(), "embed", texts[i]);
      found[i] = load_decoded<EmbeddingVector>(*cache_, keys[i], embedding_from_json);
      if (!found[i] && miss_index.emplace(texts[i], misses.size()).second) misses.push_back(texts[i]);
    }
    std::vector<EmbeddingVector> computed;
    if (!misses.empty()) {
      computed = inner_->embed(misses);
      if (computed.size() != misses.size()) throw DecodeError("embedder returned the wrong number of vectors", {});
      for (std::size_t m = 0; m < misses.size(); ++m) {
        cache_->store(ResponseCache::make_key(identity(), "embed", misses[m]), to_json(computed[m]));
      }
    }
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
      out.push_back(found[i] ? std::move(*found[i]) : computed[miss_index.at(texts[i])]);
    }
    return out;
  }

 private:
  std::unique_ptr<Embedder> inner_;
  std::shared_ptr<ResponseCache> cache_;
};

class CachedNliScorer final : public NliScorer {
 public:
  CachedNliScorer(std::unique_ptr<NliScorer> inner, std::shared_ptr<ResponseCache> cache)
      : NliScorer(inner->identity()), inner_(std::move(inner)), cache_(std::move(cache)) {}

  std::size_t invocations() const override { return inner_->invocations(); }

  NliVerdict score(std::string_view premise, std::string_view hypothesis) override {
    const std::string key =
        ResponseCache::make_key(identity(), "nli", json{{"premise", premise}, {"hypothesis", hypothesis}});
    if (auto hit = load_decoded<NliVerdict>(*cache_, key, verdict_from_json)) return *hit;
    const NliVerdict v = inner_->score(premise, hypothesis);
    cache_->store(key, to_json(v));
    return v;
  }

 private:
  std::unique_ptr<NliScorer> inner_;
  std::shared_ptr<ResponseCache> cache_;
};

class CachedTripleExtractor final : public TripleExtractor {
 public:
  CachedTripleExtractor(std::unique_ptr<TripleExtractor> inner, std::shared_ptr<ResponseCache> cache)
      : TripleExtractor(inner->identity()), inner_(std::move(inner)), cache_(std::move(cache)) {}

  std::size_t invocations() const override { return inner_->invocations(); }

  ExtractionOutcome extract(std::string_view text) override {
    const std::string key = ResponseCache::make_key(identity(), "extract", text);
    if (auto hit = load_decoded<ExtractionOutcome>(*cache_, key, outcome_from_json)) return *hit;
    ExtractionOutcome outcome = inner_->extract(text);
    // Outages are not observations of the model; keep them retryable.
    if (!(outcome.failed && outcome.failure_reason.rfind("transport:", 0) == 0)) cache_->store(key, to_json(outcome));
    return outcome;
  }

 private:
  std::unique_ptr<TripleExtractor> inner_;
  std::shared_ptr<ResponseCache> cache_;
};

class CachedEntityRecognizer final : public EntityRecognizer {
 public:
  CachedEntityRecognizer(std::unique_ptr<EntityRecognizer> inner, std::shared_ptr<ResponseCache> cache)
      : EntityRecognizer(inner->identity()), inner_(std::move(inner)), cache_(std::move(cache)) {}

  std::size_t invocations() const override { return inner_->invocations(); }

  std::vector<EntitySpan> recognize(std::string_view text) override {
    const std::string key = ResponseCache::make_key(identity(), "ner", text);
    const auto decode = [](const json& j) {
      if (!j.is_array()) throw DecodeError("cached ner entry is not an array", j.dump());
      std::vector<EntitySpan> spans;
      for (const auto& e : j) spans.push_back(entity_from_json(e));
      return spans;
    };
    if (auto hit = load_decoded<std::vector<EntitySpan>>(*cache_, key, decode)) return *hit;
    auto spans = inner_->recognize(text);
    json arr = json::array();
    for (const auto& e : spans) arr.push_back(to_json(e));
    cache_->store(key, arr);
    return spans;
  }

 private:
  std::unique_ptr<EntityRecognizer> inner_;
  std::shared_ptr<ResponseCache> cache_;
};

}  // namespace

std::unique_ptr<Embedder> with_cache(std::unique_ptr<Embedder> inner, std::shared_ptr<ResponseCache> cache) {
  return std::make_unique<CachedEmbedder>(std::move(inner), std::move(cache));
}
std::unique_ptr<NliScorer> with_cache(std::unique_ptr<NliScorer> inner, std::shared_ptr<ResponseCache> cache) {
  return std::make_unique<CachedNliScorer>(std::move(inner), std::move(cache));
}
std::unique_ptr<TripleExtractor> with_cache(std::unique_ptr<TripleExtractor> inner,
                                            std::shared_ptr<ResponseCache> cache) {
  return std::make_unique<CachedTripleExtractor>(std::move(inner), std::move(cache));
}
std::unique_ptr<EntityRecognizer> with_cache(std::unique_ptr<EntityRecognizer> inner,
                                             std::shared_ptr<ResponseCache> cache) {
  return std::make_unique<CachedEntityRecognizer>(std::move(inner), std::move(cache));
}

}  // namespace claimaudit
