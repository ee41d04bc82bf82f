#include <doctest.h>

#include "claimaudit/text.hpp"

using namespace claimaudit;

TEST_SUITE("text") {
  TEST_CASE("sha256 matches published vectors") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  }

  TEST_CASE("trim and blank detection") {
    CHECK(trim("  a b \n") == "a b");
    CHECK(trim("   ").empty());
    CHECK(is_blank(" \t\n"));
    CHECK_FALSE(is_blank(" x "));
  }

  TEST_CASE("whitespace tokens") {
    CHECK(whitespace_tokens("  one two\tthree\n") == std::vector<std::string>{"one", "two", "three"});
    CHECK(count_whitespace_tokens("") == 0);
    CHECK(count_whitespace_tokens("a  b c") == 3);
  }

  TEST_CASE("normalize for comparison") {
    CHECK(normalize_for_comparison("  The Cat   SAT.  ") == "the cat sat");
    CHECK(normalize_for_comparison("Really?!") == "really");
    CHECK(join({"a", "b", "c"}, ", ") == "a, b, c");
  }
}
