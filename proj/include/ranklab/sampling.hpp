#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ranklab/hashing.hpp"
#include "ranklab/retrievers.hpp"

namespace ranklab::sampling {

struct PoolEntry {
  std::string doc_id;
  std::string source;     // generator name
  std::int32_t rank = 0;  // 1-based rank within the source's candidate list
};

// Per-query candidate negatives before sampling. Duplicates across
// generators are kept on purpose; duplicates within one generator cannot
// occur. No entry is ever a positive of the query.
struct NegativePool {
  std::string query_id;
  std::vector<PoolEntry> entries;
  int top_n = 0;
};

struct SamplerConfig {
  int top_n = 200;
  int m = 40;
  std::uint64_t seed = 0;
};

// m distinct doc ids drawn uniformly without replacement from the collection
// minus the positives. Throws when m exceeds the eligible count.
std::vector<std::string> sample_random(const corpus::Collection& coll,
                                       const std::string& query_id,
                                       const std::set<std::string>& positives,
                                       int m, std::uint64_t seed);

// The generator's top list with positives removed, truncated to top_n.
NegativePool candidate_pool(const retrievers::Retriever& generator,
                            const retrievers::PreparedQuery& q,
                            const std::set<std::string>& positives, int top_n);

// Concatenation of per-generator pools without de-duplication, so a document
// surfaced by several generators keeps one entry per generator.
NegativePool joint_pool(std::span<const retrievers::Retriever* const> generators,
                        const retrievers::PreparedQuery& q,
                        const std::set<std::string>& positives, int top_n);

// Uniform draw over pool entries: without replacement when m <= pool size,
// with replacement otherwise (tiny corpora). Entry multiplicity carries over
// into draw probability.
std::vector<std::string> draw_negatives(const NegativePool& pool, int m,
                                        std::uint64_t seed);

// Independent per-query stream seed: hash(run_seed, query_id).
inline std::uint64_t query_seed(std::uint64_t run_seed, std::string_view query_id) {
  return hashing::seeded_hash(query_id, run_seed);
}

// `qid \t docid \t source \t rank_in_source` lines.
void write_pools_tsv(const std::vector<NegativePool>& pools,
                     const std::string& path);

}  // namespace ranklab::sampling
