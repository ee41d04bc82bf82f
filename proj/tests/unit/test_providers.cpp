#include <doctest.h>

#include <cmath>
#include <set>

#include "claimaudit/errors.hpp"
#include "claimaudit/match.hpp"
#include "claimaudit/providers.hpp"
#include "helpers.hpp"

using namespace claimaudit;
using nlohmann::json;
using testutil::stub_config;
using testutil::TempDir;

TEST_SUITE("providers") {
  TEST_CASE("stub embeddings are deterministic and unit norm") {
    auto e = make_embedder(stub_config());
    const auto same = embed_texts({"a", "a"}, *e);
    CHECK(same[0] == same[1]);
    const auto one = embed_texts({"a"}, *e);
    CHECK(std::abs(one[0].norm() - 1.0) < 1e-9);
    CHECK(one[0].dim() == 64);
    const auto two = embed_texts({"a", "b"}, *e);
    CHECK(cosine_similarity(two[0], two[1]) != doctest::Approx(1.0));
  }

  TEST_CASE("embedding preconditions") {
    auto e = make_embedder(stub_config());
    CHECK_THROWS_AS(embed_texts({}, *e), InputError);
    CHECK_THROWS_AS(embed_texts({"ok", "  "}, *e), InputError);
  }

  TEST_CASE("stub nli rules") {
    auto n = make_nli_scorer(stub_config());
    CHECK(nli_score("the cat sat on the mat", "the cat sat", *n) == NliVerdict::entailment());
    CHECK(nli_score("x", "y", *n) == NliVerdict::neutrality());
    CHECK(nli_score("Revenue increased by ten percent.", "Revenue decreased by ten percent.", *n) ==
          NliVerdict::contradiction());
    CHECK_THROWS_AS(nli_score("", "y", *n), InputError);
  }

  TEST_CASE("verdict decoding normalizes and rejects garbage") {
    const auto v = verdict_from_json(json{{"entailment", 2.0}, {"neutral", 1.0}, {"contradiction", 1.0}});
    CHECK(v.entail == doctest::Approx(0.5));
    CHECK(v.valid());
    {
      const auto v = verdict_from_json(0.8);
      CHECK(v.entail == 0.8);
      CHECK(v.neutral == 0.0);
      CHECK(v.contradict == doctest::Approx(0.2));
    }
    CHECK_THROWS_AS(verdict_from_json(json{{"entail", -1}, {"neutral", 1}, {"contradict", 1}}), DecodeError);
    CHECK_THROWS_AS(verdict_from_json(json("high")), DecodeError);
    CHECK_THROWS_AS(NliVerdict::from_scalar(1.5), NumericError);
  }

  TEST_CASE("stub triple extraction and failure injection") {
    auto x = make_triple_extractor(stub_config());
    const auto ok = extract_triples_llm("Alice founded Acme.", *x);
    CHECK_FALSE(ok.failed);
    REQUIRE(ok.triples.size() == 1);
    CHECK(ok.triples[0] == RawTriple{"Alice", "founded", "Acme"});

    auto stub = StubSettings::defaults();
    stub.fail_extraction = true;
    auto failing = make_triple_extractor(stub_config(stub));
    const auto bad = extract_triples_llm("Alice founded Acme.", *failing);
    CHECK(bad.failed);
    CHECK(bad.failure_reason == "injected");
    CHECK(bad.triples.empty());

    const auto empty = extract_triples_llm(" . ", *x);
    CHECK(empty.failed);
    CHECK(x->invocations() == 1);
  }

  TEST_CASE("stub ner uses the gazetteer") {
    auto stub = StubSettings::defaults();
    stub.gazetteer = {{"Alice", EntityLabel::kPerson}, {"Bob", EntityLabel::kPerson}};
    auto r = make_entity_recognizer(stub_config(stub));
    const auto spans = ner_entities("Alice met Bob.", *r);
    REQUIRE(spans.size() == 2);
    CHECK(spans[0] == EntitySpan{"Alice", EntityLabel::kPerson, 0, 5});
    CHECK(spans[1] == EntitySpan{"Bob", EntityLabel::kPerson, 10, 13});
    CHECK(ner_entities("no entities here", *r).empty());
  }

  TEST_CASE("overlapping spans resolve longest first") {
    const std::vector<EntitySpan> raw = {{"New", EntityLabel::kMisc, 0, 3},
                                         {"New York City", EntityLabel::kLocation, 0, 13},
                                         {"York", EntityLabel::kMisc, 4, 8},
                                         {"City Hall", EntityLabel::kLocation, 9, 18},
                                         {"Hall", EntityLabel::kMisc, 14, 18},
                                         {"out of range", EntityLabel::kMisc, 15, 99}};
    const auto kept = normalize_entity_spans(raw, 30);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].text == "New York City");
    CHECK(kept[1].text == "Hall");
    for (std::size_t i = 0; i + 1 < kept.size(); ++i) CHECK(kept[i].end <= kept[i + 1].start);
  }

  TEST_CASE("free-text triple parsing") {
    CHECK(parse_triples_text(R"([{"subject":"A","predicate":"b","object":"C"}])")->size() == 1);
    CHECK(parse_triples_text(R"({"triples":[["A","b","C"],["D","e","F"]]})")->size() == 2);
    const auto lines = parse_triples_text("1. (Alice; founded; Acme)\n- Bob | joined | Acme\n");
    REQUIRE(lines);
    CHECK((*lines)[1] == RawTriple{"Bob", "joined", "Acme"});
    CHECK_FALSE(parse_triples_text("I cannot help with that."));
    CHECK_FALSE(parse_triples_text(""));
  }

  TEST_CASE("local model backends need no weights") {
    ProviderConfig cfg;
    cfg.kind = ProviderKind::kLocalModel;
    auto set = ProviderSet::create(ProviderSetConfig::all(cfg));
    const auto v = embed_texts({"sales rose sharply", "sales rose", "penguins swim"}, *set.embedder);
    CHECK(v[0].dim() == 256);
    CHECK(cosine_similarity(v[0], v[1]) > cosine_similarity(v[0], v[2]));
    const auto entail = nli_score("Sales rose in March.", "Sales rose.", *set.nli);
    CHECK(entail.entail == doctest::Approx(1.0));
    const auto contra = nli_score("Sales rose in March.", "Sales fell in March.", *set.nli);
    CHECK(contra.contradict > contra.entail);
    const auto spans = ner_entities("Later, Dr. Jane Doe visited Acme Corp in Paris.", *set.ner);
    std::set<std::string> texts;
    for (const auto& s : spans) texts.insert(s.text);
    CHECK(texts.count("Jane Doe") == 1);
    CHECK(texts.count("Acme Corp") == 1);
  }

  TEST_CASE("config validation") {
    ProviderConfig cfg;
    cfg.kind = ProviderKind::kHttpLlm;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.endpoint = "http://127.0.0.1:1";
    CHECK_NOTHROW(cfg.validate());
    cfg.timeout_seconds = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK(provider_kind_from_string("local_model") == ProviderKind::kLocalModel);
  }

  TEST_CASE("stub settings merge") {
    const auto s = stub_settings_from_json(json::parse(R"({"antonyms":[["hot","cold"]],"gazetteer":{"Zed":"person"},
                                                           "predicates":["zaps"],"fail_extraction":true})"));
    CHECK(s.antonyms.size() == StubSettings::defaults().antonyms.size() + 1);
    CHECK(s.gazetteer.at("Zed") == EntityLabel::kPerson);
    CHECK(s.predicates == std::vector<std::string>{"zaps"});
    CHECK(s.fail_extraction);
    CHECK_THROWS_AS(stub_settings_from_json(json{{"bogus", 1}}), ConfigError);
    CHECK_THROWS_AS(stub_settings_from_json(json{{"predicates", 3}}), ConfigError);
  }

  TEST_CASE("cache hits skip the backend") {
    TempDir dir;
    auto set = testutil::stub_set(StubSettings::defaults(), dir.path());
    nli_score("a b c", "a b", *set.nli);
    nli_score("a b c", "a b", *set.nli);
    CHECK(set.nli->invocations() == 1);

    // A fresh provider over the same directory still hits.
    auto again = testutil::stub_set(StubSettings::defaults(), dir.path());
    nli_score("a b c", "a b", *again.nli);
    CHECK(again.nli->invocations() == 0);
  }

  TEST_CASE("cache key includes the model name") {
    TempDir dir;
    auto first = stub_config(StubSettings::defaults(), dir.path());
    auto second = first;
    second.model_name = "stub-v2";
    auto a = make_nli_scorer(first);
    auto b = make_nli_scorer(second);
    auto ca = with_cache(std::move(a), std::make_shared<ResponseCache>(dir.path()));
    auto cb = with_cache(std::move(b), std::make_shared<ResponseCache>(dir.path()));
    nli_score("p q", "p", *ca);
    nli_score("p q", "p", *cb);
    CHECK(ca->invocations() + cb->invocations() == 2);
  }

  TEST_CASE("repeated embeds compute each unique text once") {
    TempDir dir;
    auto set = testutil::stub_set(StubSettings::defaults(), dir.path());
    std::set<std::string> unique;
    for (int i = 0; i < 1000; ++i) {
      const std::string text = "text " + std::to_string(i % 37);
      unique.insert(text);
      embed_texts({text}, *set.embedder);
    }
    CHECK(set.embedder->invocations() == unique.size());
  }

  TEST_CASE("corrupt cache entries are discarded and recomputed") {
    TempDir dir;
    auto cache = std::make_shared<ResponseCache>(dir.path());
    auto scorer = with_cache(make_nli_scorer(stub_config()), cache);
    const auto key = ResponseCache::make_key(scorer->identity(), "nli", json{{"premise", "u v"}, {"hypothesis", "u"}});
    cache->store(key, json("not a verdict"));
    CHECK(nli_score("u v", "u", *scorer) == NliVerdict::entailment());
    CHECK(scorer->invocations() == 1);
    CHECK(cache->load(key).value() == to_json(NliVerdict::entailment()));
  }
}
