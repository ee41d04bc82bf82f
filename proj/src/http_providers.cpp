// HTTP backends. Every capability speaks the same envelope:
//   POST <endpoint>/<task>  {"model": ..., "task": ..., "inputs": [...]}
//   200                     {"outputs": [...]}   one output per input
// The per-task item shapes are documented in docs/http_protocol.md.

#include <chrono>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "claimaudit/errors.hpp"
#include "claimaudit/text.hpp"
#include "provider_backends.hpp"

namespace claimaudit::detail {

namespace {

using nlohmann::json;

class JsonEndpoint {
 public:
  explicit JsonEndpoint(const ProviderConfig& cfg) : cfg_(cfg) {
    const std::string& url = cfg.endpoint;
    const auto scheme_end = url.find("://");
    const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    base_ = path_start == std::string::npos ? url : url.substr(0, path_start);
    prefix_ = path_start == std::string::npos ? std::string() : url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }

  // Returns the "outputs" array, checked to hold `expected` items.
  json call(const std::string& task, json inputs, std::size_t expected) const {
    const json request = {{"model", cfg_.model_name}, {"task", task}, {"inputs", std::move(inputs)}};
    const std::string path = prefix_ + "/" + task;
    const std::string body = request.dump();

    httplib::Client client(base_);
    const auto secs = static_cast<time_t>(cfg_.timeout_seconds);
    const auto usecs = static_cast<time_t>((cfg_.timeout_seconds - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(100 * attempt));
      auto res = client.Post(path, headers, body, "application/json");
      if (!res) {
        last_error = "request failed: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500) {
        last_error = "server error " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        throw TransportError(cfg_.endpoint, "HTTP " + std::to_string(res->status) + " from " + task);
      }
      const json parsed = json::parse(res->body, nullptr, false);
      if (parsed.is_discarded() || !parsed.is_object() || !parsed.contains("outputs") ||
          !parsed["outputs"].is_array()) {
        throw DecodeError("response to " + task + " lacks an \"outputs\" array", res->body);
      }
      if (parsed["outputs"].size() != expected) {
        throw DecodeError("response to " + task + " has " + std::to_string(parsed["outputs"].size()) +
                              " outputs, expected " + std::to_string(expected),
                          res->body);
      }
      return parsed["outputs"];
    }
    throw TransportError(cfg_.endpoint, last_error);
  }

 private:
  ProviderConfig cfg_;
  std::string base_;
  std::string prefix_;
};

class HttpEmbedder final : public Embedder {
 public:
  explicit HttpEmbedder(const ProviderConfig& cfg) : Embedder(provider_identity(cfg, "embed")), endpoint_(cfg) {}

  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
    count(texts.size());
    const json outputs = endpoint_.call("embed", texts, texts.size());
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& o : outputs) out.push_back(embedding_from_json(o));
    return out;
  }

 private:
  JsonEndpoint endpoint_;
};

class HttpNliScorer final : public NliScorer {
 public:
  explicit HttpNliScorer(const ProviderConfig& cfg) : NliScorer(provider_identity(cfg, "nli")), endpoint_(cfg) {}

  NliVerdict score(std::string_view premise, std::string_view hypothesis) override {
    count();
    const json outputs = endpoint_.call("nli", json::array({{{"premise", premise}, {"hypothesis", hypothesis}}}), 1);
    return verdict_from_json(outputs[0]);
  }

 private:
  JsonEndpoint endpoint_;
};

class HttpTripleExtractor final : public TripleExtractor {
 public:
  explicit HttpTripleExtractor(const ProviderConfig& cfg)
      : TripleExtractor(provider_identity(cfg, "extract")), endpoint_(cfg) {}

  ExtractionOutcome extract(std::string_view text) override {
    count();
    json outputs;
    try {
      outputs = endpoint_.call("extract", json::array({text}), 1);
    } catch (const TransportError& e) {
      spdlog::warn("triple extraction transport failure: {}", e.what());
      return ExtractionOutcome::failure(std::string("transport: ") + e.what());
    } catch (const DecodeError& e) {
      return ExtractionOutcome::failure(std::string("unparseable response: ") + e.what());
    }
    const json& item = outputs[0];
    std::optional<std::vector<RawTriple>> triples;
    if (item.is_string()) {
      triples = parse_triples_text(item.get<std::string>());
    } else {
      triples = parse_triples_text(item.dump());
    }
    if (!triples) return ExtractionOutcome::failure("unparseable response: " + item.dump().substr(0, 200));
    return ExtractionOutcome::success(std::move(*triples));
  }

 private:
  JsonEndpoint endpoint_;
};

class HttpEntityRecognizer final : public EntityRecognizer {
 public:
  explicit HttpEntityRecognizer(const ProviderConfig& cfg)
      : EntityRecognizer(provider_identity(cfg, "ner")), endpoint_(cfg) {}

  std::vector<EntitySpan> recognize(std::string_view text) override {
    count();
    const json outputs = endpoint_.call("ner", json::array({text}), 1);
    if (!outputs[0].is_array()) throw DecodeError("ner output is not an array", outputs.dump());
    std::vector<EntitySpan> spans;
    for (const auto& e : outputs[0]) spans.push_back(entity_from_json(e));
    return spans;
  }

 private:
  JsonEndpoint endpoint_;
};

}  // namespace

std::unique_ptr<Embedder> make_http_embedder(const ProviderConfig& cfg) {
  return std::make_unique<HttpEmbedder>(cfg);
}
std::unique_ptr<NliScorer> make_http_nli_scorer(const ProviderConfig& cfg) {
  return std::make_unique<HttpNliScorer>(cfg);
}
std::unique_ptr<TripleExtractor> make_http_triple_extractor(const ProviderConfig& cfg) {
  return std::make_unique<HttpTripleExtractor>(cfg);
}
std::unique_ptr<EntityRecognizer> make_http_entity_recognizer(const ProviderConfig& cfg) {
  return std::make_unique<HttpEntityRecognizer>(cfg);
}

}  // namespace claimaudit::detail
