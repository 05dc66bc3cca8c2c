#include "ranklab/text.hpp"

#include <map>
#include <stdexcept>

#include "ranklab/hashing.hpp"

namespace ranklab::text {

TokenSeq tokenize(std::string_view s) {
  TokenSeq out;
  std::string cur;
  for (char raw : s) {
    unsigned char c = static_cast<unsigned char>(raw);
    if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
    const bool keep = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
    if (keep) {
      cur.push_back(static_cast<char>(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

double SparseVector::sum() const {
  double total = 0.0;
  for (const auto& e : entries) total += e.value;
  return total;
}

SparseVector hash_features(const TokenSeq& tokens, std::int32_t dim,
                           std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("hash_features: dim must be >= 1");
  std::map<std::int32_t, double> buckets;
  for (const auto& tok : tokens) {
    const auto idx =
        static_cast<std::int32_t>(hashing::seeded_hash(tok, seed) %
                                  static_cast<std::uint64_t>(dim));
    buckets[idx] += 1.0;
  }
  SparseVector v;
  v.dim = dim;
  v.entries.reserve(buckets.size());
  for (const auto& [idx, count] : buckets) v.entries.push_back({idx, count});
  return v;
}

}  // namespace ranklab::text
