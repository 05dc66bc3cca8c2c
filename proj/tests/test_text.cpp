#include <doctest.h>

#include <algorithm>
#include <cstdint>

#include "ranklab/rng.hpp"
#include "ranklab/text.hpp"

using namespace ranklab;

namespace {

// Independent FNV-1a reference, written out from the published constants so
// a transcription slip in the library shows up here.
std::uint64_t reference_bucket(const std::string& token, std::uint64_t seed,
                               std::uint64_t dim) {
  std::uint64_t h = 14695981039346656037ULL;
  for (int i = 0; i < 8; ++i) {
    h ^= (seed >> (8 * i)) & 0xffULL;
    h *= 1099511628211ULL;
  }
  for (const unsigned char c : token) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h % dim;
}

}  // namespace

TEST_CASE("tokenize lowercases and splits on non-alphanumerics") {
  CHECK(text::tokenize("Hello, World!") == text::TokenSeq{"hello", "world"});
  CHECK(text::tokenize("") == text::TokenSeq{});
  CHECK(text::tokenize("BM25-reranking @ 2019") ==
        text::TokenSeq{"bm25", "reranking", "2019"});
  CHECK(text::tokenize("  --  ") == text::TokenSeq{});
  CHECK(text::tokenize("a\tb\nc") == text::TokenSeq{"a", "b", "c"});
}

TEST_CASE("hash_features of the empty token list is empty") {
  const auto v = text::hash_features({}, 64, 1);
  CHECK(v.entries.empty());
  CHECK(v.dim == 64);
  CHECK(v.sum() == 0.0);
}

TEST_CASE("hash_features buckets match an independent hash") {
  const std::uint64_t seed = 42;
  const std::int32_t dim = 1 << 15;
  const auto a_bucket = reference_bucket("a", seed, dim);
  const auto b_bucket = reference_bucket("b", seed, dim);
  REQUIRE(a_bucket != b_bucket);
  const auto v = text::hash_features({"a", "a", "b"}, dim, seed);
  REQUIRE(v.entries.size() == 2);
  for (const auto& e : v.entries) {
    if (static_cast<std::uint64_t>(e.index) == a_bucket) CHECK(e.value == 2.0);
    else if (static_cast<std::uint64_t>(e.index) == b_bucket) CHECK(e.value == 1.0);
    else FAIL("unexpected bucket ", e.index);
  }
}

TEST_CASE("hash_features is order-invariant") {
  text::TokenSeq tokens = {"x", "y", "z", "x", "w", "y"};
  const auto before = text::hash_features(tokens, 256, 9);
  std::reverse(tokens.begin(), tokens.end());
  const auto after = text::hash_features(tokens, 256, 9);
  REQUIRE(before.entries.size() == after.entries.size());
  for (std::size_t i = 0; i < before.entries.size(); ++i) {
    CHECK(before.entries[i].index == after.entries[i].index);
    CHECK(before.entries[i].value == after.entries[i].value);
  }
}

TEST_CASE("hash_features mass equals the token count and indices are sorted") {
  rng::SplitMix64 gen(123);
  for (int trial = 0; trial < 50; ++trial) {
    text::TokenSeq tokens;
    const int n = static_cast<int>(gen.below(40));
    for (int i = 0; i < n; ++i)
      tokens.push_back("t" + std::to_string(gen.below(25)));
    const auto v = text::hash_features(tokens, 128, 5);
    CHECK(v.sum() == static_cast<double>(n));
    for (std::size_t i = 1; i < v.entries.size(); ++i)
      CHECK(v.entries[i - 1].index < v.entries[i].index);
    for (const auto& e : v.entries) {
      CHECK(e.index >= 0);
      CHECK(e.index < 128);
      CHECK(e.value > 0.0);
    }
  }
}

TEST_CASE("hash_features depends on the seed deterministically") {
  const auto a1 = text::hash_features({"token"}, 1 << 15, 1);
  const auto a2 = text::hash_features({"token"}, 1 << 15, 1);
  CHECK(a1.entries[0].index == a2.entries[0].index);
  const auto b = text::hash_features({"token"}, 1 << 15, 2);
  // different seed, almost surely a different bucket
  CHECK(a1.entries[0].index != b.entries[0].index);
}

TEST_CASE("hash_features rejects dim < 1") {
  CHECK_THROWS_AS(text::hash_features({"a"}, 0, 1), std::invalid_argument);
}
