#include "ranklab/sampling.hpp"

#include <fstream>
#include <numeric>
#include <stdexcept>

#include "ranklab/rng.hpp"

namespace ranklab::sampling {

std::vector<std::string> sample_random(const corpus::Collection& coll,
                                       const std::string& query_id,
                                       const std::set<std::string>& positives,
                                       int m, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("sample_random: m must be >= 1");
  std::vector<std::size_t> eligible;
  eligible.reserve(coll.size());
  for (std::size_t ord = 0; ord < coll.size(); ++ord)
    if (positives.find(coll.at(ord).id) == positives.end())
      eligible.push_back(ord);
  if (static_cast<std::size_t>(m) > eligible.size())
    throw std::invalid_argument(
        "sample_random: m=" + std::to_string(m) + " exceeds eligible pool of " +
        std::to_string(eligible.size()) + " for query " + query_id);
  rng::SplitMix64 gen(seed);
  // Partial Fisher-Yates: the first m slots end up a uniform sample.
  for (int i = 0; i < m; ++i) {
    const auto j = i + static_cast<std::size_t>(
                           gen.below(eligible.size() - static_cast<std::size_t>(i)));
    std::swap(eligible[static_cast<std::size_t>(i)], eligible[j]);
  }
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i)
    out.push_back(coll.at(eligible[static_cast<std::size_t>(i)]).id);
  return out;
}

NegativePool candidate_pool(const retrievers::Retriever& generator,
                            const retrievers::PreparedQuery& q,
                            const std::set<std::string>& positives, int top_n) {
  if (top_n < 1) throw std::invalid_argument("candidate_pool: top_n must be >= 1");
  // Fetching top_n + |positives| guarantees top_n non-positive candidates
  // whenever the generator can supply them.
  const int fetch = top_n + static_cast<int>(positives.size());
  const auto candidates = generator.topk(q, fetch);
  NegativePool pool;
  pool.query_id = q.id;
  pool.top_n = top_n;
  std::int32_t rank = 0;
  for (const auto& c : candidates.entries) {
    ++rank;
    if (positives.find(c.doc_id) != positives.end()) continue;
    pool.entries.push_back({c.doc_id, generator.name(), rank});
    if (pool.entries.size() == static_cast<std::size_t>(top_n)) break;
  }
  return pool;
}

NegativePool joint_pool(std::span<const retrievers::Retriever* const> generators,
                        const retrievers::PreparedQuery& q,
                        const std::set<std::string>& positives, int top_n) {
  if (generators.empty())
    throw std::invalid_argument("joint_pool: need at least one generator");
  NegativePool pool;
  pool.query_id = q.id;
  pool.top_n = top_n;
  for (const auto* gen : generators) {
    auto part = candidate_pool(*gen, q, positives, top_n);
    pool.entries.insert(pool.entries.end(),
                        std::make_move_iterator(part.entries.begin()),
                        std::make_move_iterator(part.entries.end()));
  }
  return pool;
}

std::vector<std::string> draw_negatives(const NegativePool& pool, int m,
                                        std::uint64_t seed) {
  if (pool.entries.empty())
    throw std::invalid_argument("draw_negatives: empty pool for query " +
                                pool.query_id);
  if (m < 1) throw std::invalid_argument("draw_negatives: m must be >= 1");
  rng::SplitMix64 gen(seed);
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(m));
  if (static_cast<std::size_t>(m) > pool.entries.size()) {
    for (int i = 0; i < m; ++i)
      out.push_back(pool.entries[static_cast<std::size_t>(gen.below(pool.entries.size()))].doc_id);
    return out;
  }
  std::vector<std::size_t> idx(pool.entries.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < m; ++i) {
    const auto j = static_cast<std::size_t>(i) +
                   static_cast<std::size_t>(gen.below(idx.size() - static_cast<std::size_t>(i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
    out.push_back(pool.entries[idx[static_cast<std::size_t>(i)]].doc_id);
  }
  return out;
}

void write_pools_tsv(const std::vector<NegativePool>& pools,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write pool file: " + path);
  for (const auto& pool : pools)
    for (const auto& e : pool.entries)
      out << pool.query_id << '\t' << e.doc_id << '\t' << e.source << '\t'
          << e.rank << '\n';
}

}  // namespace ranklab::sampling
