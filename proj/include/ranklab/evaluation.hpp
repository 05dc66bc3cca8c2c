#pragma once

#include <span>
#include <string>
#include <vector>

#include "ranklab/ranker.hpp"
#include "ranklab/retrievers.hpp"

namespace ranklab::eval {

struct RunEntry {
  std::string doc_id;
  double score;
};

// Ranked result list: score descending, ties by doc_id ascending, no
// duplicate doc ids.
struct RunList {
  std::string query_id;
  std::vector<RunEntry> entries;
};

// Re-scores the candidate set with `scorer` and re-sorts; the document set
// is unchanged.
RunList rerank(const retrievers::PairScorer& scorer,
               const retrievers::PreparedQuery& q,
               const retrievers::CandidateList& candidates,
               const corpus::Collection& coll);

// Mean over run queries of 1/rank of the first relevant (grade > 0) doc in
// the top k, 0 when none. Queries without judgments are excluded and
// reported through `warnings`.
double mrr_at_k(std::span<const RunList> runs,
                std::span<const corpus::Judgment> judgments, int k,
                std::vector<std::string>* warnings = nullptr);

// Mean fraction of a query's relevant docs found in the top k.
double recall_at_k(std::span<const RunList> runs,
                   std::span<const corpus::Judgment> judgments, int k,
                   std::vector<std::string>* warnings = nullptr);

// Gain (2^grade - 1) / log2(rank + 1), normalized by the ideal ordering;
// queries with zero ideal DCG are excluded.
double ndcg_at_k(std::span<const RunList> runs,
                 std::span<const corpus::Judgment> judgments, int k,
                 std::vector<std::string>* warnings = nullptr);

// Retrieval at `depth` followed by reranking, one RunList per query.
std::vector<RunList> full_rank(const retrievers::Retriever& retriever,
                               const retrievers::PairScorer& ranker,
                               std::span<const retrievers::PreparedQuery> queries,
                               int depth, const corpus::Collection& coll,
                               int threads = 1);

// TREC run format: `qid Q0 docid rank score tag`, rank 1-based, scores at
// full precision.
void write_run_file(std::span<const RunList> runs, const std::string& tag,
                    const std::string& path);
// Entries are re-sorted into the RunList order; malformed lines are rejected
// with their line number.
std::vector<RunList> load_run_file(const std::string& path);

// `metric@k \t value` with 4 decimal places.
std::string format_metric_line(const std::string& metric, int k, double value);

}  // namespace ranklab::eval
