#include <doctest.h>

#include <fstream>
#include <random>
#include <string>

#include <json.hpp>

#include "claimaudit/decompose.hpp"
#include "claimaudit/errors.hpp"
#include "helpers.hpp"

using namespace claimaudit;
using nlohmann::json;

using testutil::stub_set;

namespace {

std::vector<std::string> raw_texts(const std::vector<SentenceUnit>& units) {
  std::vector<std::string> out;
  for (const auto& u : units) out.push_back(u.raw_text);
  return out;
}

}  // namespace

TEST_SUITE("decompose") {
  TEST_CASE("hand-labeled split fixture") {
    std::ifstream in(testutil::fixture("sentence_splits.json"));
    REQUIRE(in);
    const json cases = json::parse(in);
    REQUIRE(cases.size() == 30);
    for (const auto& c : cases) {
      const std::string text = c.at("text").get<std::string>();
      CAPTURE(text);
      const auto units = split_sentences(text);
      CHECK(raw_texts(units) == c.at("sentences").get<std::vector<std::string>>());
      for (const auto& u : units) CHECK(text.substr(u.span.start, u.span.end - u.span.start) == u.raw_text);
    }
  }

  TEST_CASE("splitter basics") {
    CHECK(split_sentences("A. B.").size() == 2);
    CHECK(raw_texts(split_sentences("Mr. Smith left. He slept.")) ==
          std::vector<std::string>{"Mr. Smith left.", "He slept."});
    const auto one = split_sentences("no terminal period here");
    REQUIRE(one.size() == 1);
    CHECK(one[0].raw_text == "no terminal period here");
    CHECK_THROWS_AS(split_sentences("   "), InputError);
  }

  TEST_CASE("coreference resolves to nearest preceding compatible entity") {
    const std::string doc = "Alice arrived. She slept.";
    auto units = split_sentences(doc);
    const std::vector<EntitySpan> ents = {{"Alice", EntityLabel::kPerson, 0, 5}};
    units = resolve_coreferences(units, ents);
    CHECK(units[1].resolved_text == "Alice slept.");

    const std::string doc2 = "Alice met Bob. He smiled. His bag is red.";
    auto u2 = split_sentences(doc2);
    u2 = resolve_coreferences(u2, {{"Alice", EntityLabel::kPerson, 0, 5}, {"Bob", EntityLabel::kPerson, 10, 13}});
    CHECK(u2[1].resolved_text == "Bob smiled.");
    CHECK(u2[2].resolved_text == "Bob's bag is red.");
  }

  TEST_CASE("coreference leaves text without antecedents alone") {
    auto units = resolve_coreferences(split_sentences("He slept. Alice arrived."), {{"Alice", EntityLabel::kPerson, 10, 15}});
    CHECK(units[0].resolved_text == "He slept.");
    auto plain = resolve_coreferences(split_sentences("The sky is blue. Grass grows."), {});
    for (const auto& u : plain) CHECK(u.resolved_text == u.raw_text);
  }

  TEST_CASE("windows clamp at document edges") {
    auto units = build_windows(resolve_coreferences(split_sentences("A b. C d. E f."), {}), 1);
    CHECK(units[0].window_first == 0);
    CHECK(units[0].window_last == 1);
    CHECK(units[1].window_first == 0);
    CHECK(units[1].window_last == 2);
    CHECK(units[1].window_text == "A b. C d. E f.");
    auto zero = build_windows(resolve_coreferences(split_sentences("A b. C d."), {}), 0);
    for (const auto& u : zero) CHECK(u.window_text == u.resolved_text);
    CHECK_THROWS_AS(build_windows(units, -1), InputError);
  }

  TEST_CASE("window index sets over random documents") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
      const int n = std::uniform_int_distribution<int>(1, 50)(rng);
      const int r = std::uniform_int_distribution<int>(0, 3)(rng);
      std::string doc;
      for (int i = 0; i < n; ++i) doc += "Sentence number " + std::to_string(i) + " ends here. ";
      const auto units = build_windows(resolve_coreferences(split_sentences(doc), {}), r);
      REQUIRE(units.size() == static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        CHECK(units[i].window_first == static_cast<std::size_t>(std::max(0, i - r)));
        CHECK(units[i].window_last == static_cast<std::size_t>(std::min(n - 1, i + r)));
      }
    }
  }

  TEST_CASE("sici radius 0 gives one claim per sentence") {
    auto providers = stub_set();
    const auto d = decompose("A. B. C.", Origin::kOutput, {Strategy::kSici, 0, true}, providers);
    REQUIRE(d.claims.size() == 3);
    CHECK(d.claims[1].text == "B.");
    CHECK(d.claims[1].kind == ClaimKind::kSentence);
    CHECK(d.claims[1].sentence_index == 1u);
    CHECK_FALSE(d.extraction_failed);
  }

  TEST_CASE("triples strategy uses the stub pattern table") {
    auto providers = stub_set();
    const auto d = decompose("Alice founded Acme.", Origin::kSource, {Strategy::kTriples, 0, true}, providers);
    REQUIRE(d.claims.size() == 1);
    CHECK(d.claims[0].text == "Alice founded Acme");
    CHECK(d.claims[0].kind == ClaimKind::kTriple);
    CHECK(d.claims[0].origin == Origin::kSource);
    REQUIRE(d.claims[0].triple);
    CHECK(*d.claims[0].triple == RawTriple{"Alice", "founded", "Acme"});
  }

  TEST_CASE("injected extraction failure yields no claims and the flag") {
    auto stub = StubSettings::defaults();
    stub.fail_extraction = true;
    auto providers = stub_set(stub);
    const auto d = decompose("Alice founded Acme.", Origin::kOutput, {Strategy::kTriples, 0, true}, providers);
    CHECK(d.claims.empty());
    CHECK(d.extraction_failed);
    CHECK(d.failure_reason == "injected");
  }

  TEST_CASE("decompose preconditions") {
    auto providers = stub_set();
    CHECK_THROWS_AS(decompose("  ", Origin::kOutput, {}, providers), InputError);
    CHECK_THROWS_AS(decompose("A.", Origin::kOutput, {Strategy::kSici, 4, true}, providers), InputError);
  }

  TEST_CASE("claim ids and json round trip") {
    auto providers = stub_set();
    const auto a = decompose("One here. Two here.", Origin::kOutput, {Strategy::kSici, 1, true}, providers);
    const auto b = decompose("One here. Two here.", Origin::kOutput, {Strategy::kSici, 1, true}, providers);
    REQUIRE(a.claims.size() == 2);
    CHECK(a.claims == b.claims);
    CHECK(a.claims[0].id != a.claims[1].id);
    CHECK(a.claims[0].id.rfind("o-", 0) == 0);
    for (const auto& c : a.claims) CHECK(claim_from_json(to_json(c)) == c);
  }
}
