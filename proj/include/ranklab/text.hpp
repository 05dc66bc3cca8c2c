#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ranklab::text {

using TokenSeq = std::vector<std::string>;

// Lowercases and splits on every byte outside [a-z0-9]; empty fragments are
// dropped. Bytes above 0x7f count as separators.
TokenSeq tokenize(std::string_view s);

// Bag of hashed terms. Entries are sorted by index with no explicit zeros.
struct SparseVector {
  struct Entry {
    std::int32_t index;
    double value;
  };
  std::vector<Entry> entries;
  std::int32_t dim = 0;

  bool empty() const { return entries.empty(); }
  // Total mass, i.e. the token count when values are term counts.
  double sum() const;
};

// Buckets each token to seeded_hash(token, seed) mod dim; value = term count.
// Order-invariant in the token list and deterministic given (tokens, dim, seed).
SparseVector hash_features(const TokenSeq& tokens, std::int32_t dim,
                           std::uint64_t seed);

}  // namespace ranklab::text
