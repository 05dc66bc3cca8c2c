#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "ranklab/evaluation.hpp"
#include "ranklab/rng.hpp"
#include "test_util.hpp"

using namespace ranklab;

namespace {

constexpr std::uint64_t kSeed = 99;

class ConstantScorer : public retrievers::PairScorer {
 public:
  explicit ConstantScorer(double v) : v_(v) {}
  double score(const retrievers::PreparedQuery&, std::int32_t) const override {
    return v_;
  }

 private:
  double v_;
};

// Scores by negated ordinal so ordering is predictable.
class OrdinalScorer : public retrievers::PairScorer {
 public:
  double score(const retrievers::PreparedQuery&, std::int32_t ord) const override {
    return -static_cast<double>(ord);
  }
};

eval::RunList make_run(const std::string& qid,
                       const std::vector<std::string>& docs) {
  eval::RunList run;
  run.query_id = qid;
  double score = static_cast<double>(docs.size());
  for (const auto& d : docs) run.entries.push_back({d, score--});
  return run;
}

// Brute-force metric oracles, written independently of the eval module.
double oracle_mrr(const std::vector<eval::RunList>& runs,
                  const std::vector<corpus::Judgment>& judgments, int k) {
  std::map<std::string, std::set<std::string>> rel;
  for (const auto& j : judgments)
    if (j.grade > 0) rel[j.query_id].insert(j.doc_id);
  std::map<std::string, bool> judged;
  for (const auto& j : judgments) judged[j.query_id] = true;
  double sum = 0.0;
  int n = 0;
  for (const auto& run : runs) {
    if (!judged.count(run.query_id)) continue;
    ++n;
    const auto it = rel.find(run.query_id);
    for (int r = 0; r < k && r < static_cast<int>(run.entries.size()); ++r) {
      if (it != rel.end() && it->second.count(run.entries[static_cast<std::size_t>(r)].doc_id)) {
        sum += 1.0 / (r + 1);
        break;
      }
    }
  }
  return n == 0 ? 0.0 : sum / n;
}

double oracle_recall(const std::vector<eval::RunList>& runs,
                     const std::vector<corpus::Judgment>& judgments, int k) {
  std::map<std::string, std::set<std::string>> rel;
  for (const auto& j : judgments)
    if (j.grade > 0) rel[j.query_id].insert(j.doc_id);
  double sum = 0.0;
  int n = 0;
  for (const auto& run : runs) {
    const auto it = rel.find(run.query_id);
    if (it == rel.end() || it->second.empty()) continue;
    ++n;
    int found = 0;
    for (int r = 0; r < k && r < static_cast<int>(run.entries.size()); ++r)
      if (it->second.count(run.entries[static_cast<std::size_t>(r)].doc_id)) ++found;
    sum += static_cast<double>(found) / static_cast<double>(it->second.size());
  }
  return n == 0 ? 0.0 : sum / n;
}

double oracle_ndcg(const std::vector<eval::RunList>& runs,
                   const std::vector<corpus::Judgment>& judgments, int k) {
  std::map<std::string, std::map<std::string, int>> grades;
  for (const auto& j : judgments) grades[j.query_id][j.doc_id] = j.grade;
  double sum = 0.0;
  int n = 0;
  for (const auto& run : runs) {
    const auto it = grades.find(run.query_id);
    if (it == grades.end()) continue;
    std::vector<int> ideal;
    for (const auto& [d, g] : it->second)
      if (g > 0) ideal.push_back(g);
    if (ideal.empty()) continue;
    std::sort(ideal.rbegin(), ideal.rend());
    double idcg = 0.0;
    for (int r = 0; r < k && r < static_cast<int>(ideal.size()); ++r)
      idcg += (std::pow(2.0, ideal[static_cast<std::size_t>(r)]) - 1.0) /
              std::log2(r + 2.0);
    double dcg = 0.0;
    for (int r = 0; r < k && r < static_cast<int>(run.entries.size()); ++r) {
      const auto g = it->second.find(run.entries[static_cast<std::size_t>(r)].doc_id);
      if (g != it->second.end() && g->second > 0)
        dcg += (std::pow(2.0, g->second) - 1.0) / std::log2(r + 2.0);
    }
    ++n;
    sum += dcg / idcg;
  }
  return n == 0 ? 0.0 : sum / n;
}

}  // namespace

TEST_CASE("rerank keeps a single candidate unchanged") {
  const corpus::Collection coll(std::vector<corpus::Document>{{"d0", "x"}, {"d1", "y"}});
  const auto q = retrievers::prepare_query({"q", "x"}, 1 << 10, kSeed);
  retrievers::CandidateList cand;
  cand.query_id = "q";
  cand.k = 1;
  cand.entries = {{"d1", 3.0}};
  const auto run = eval::rerank(ConstantScorer(0.5), q, cand, coll);
  REQUIRE(run.entries.size() == 1);
  CHECK(run.entries[0].doc_id == "d1");
}

TEST_CASE("rerank with a constant scorer orders by doc id") {
  const corpus::Collection coll(std::vector<corpus::Document>{{"b", "x"}, {"a", "y"}, {"c", "z"}});
  const auto q = retrievers::prepare_query({"q", "x"}, 1 << 10, kSeed);
  retrievers::CandidateList cand;
  cand.query_id = "q";
  cand.k = 3;
  cand.entries = {{"b", 5.0}, {"c", 4.0}, {"a", 3.0}};
  const auto run = eval::rerank(ConstantScorer(1.0), q, cand, coll);
  CHECK(run.entries[0].doc_id == "a");
  CHECK(run.entries[1].doc_id == "b");
  CHECK(run.entries[2].doc_id == "c");
}

TEST_CASE("rerank is independent of the input candidate order") {
  const corpus::Collection coll(std::vector<corpus::Document>{{"d0", "x"}, {"d1", "y"}, {"d2", "z"}});
  const auto q = retrievers::prepare_query({"q", "x"}, 1 << 10, kSeed);
  const OrdinalScorer scorer;
  retrievers::CandidateList cand1, cand2;
  cand1.query_id = cand2.query_id = "q";
  cand1.k = cand2.k = 3;
  cand1.entries = {{"d0", 3.0}, {"d1", 2.0}, {"d2", 1.0}};
  cand2.entries = {{"d2", 9.0}, {"d0", 8.0}, {"d1", 7.0}};
  const auto r1 = eval::rerank(scorer, q, cand1, coll);
  const auto r2 = eval::rerank(scorer, q, cand2, coll);
  REQUIRE(r1.entries.size() == r2.entries.size());
  for (std::size_t i = 0; i < r1.entries.size(); ++i) {
    CHECK(r1.entries[i].doc_id == r2.entries[i].doc_id);
    CHECK(r1.entries[i].score == r2.entries[i].score);
  }
}

TEST_CASE("mrr trivial cases") {
  const std::vector<corpus::Judgment> qrels = {{"q1", "d3", 1}};
  std::vector<eval::RunList> runs = {make_run("q1", {"d3", "d1", "d2"})};
  CHECK(eval::mrr_at_k(runs, qrels, 10) == doctest::Approx(1.0));
  runs = {make_run("q1", {"d1", "d2", "d3"})};
  CHECK(eval::mrr_at_k(runs, qrels, 10) == doctest::Approx(1.0 / 3.0));
  CHECK(eval::mrr_at_k(runs, qrels, 2) == doctest::Approx(0.0));
}

TEST_CASE("recall trivial cases") {
  const std::vector<corpus::Judgment> qrels = {{"q1", "d1", 1}, {"q1", "d2", 1}};
  std::vector<eval::RunList> runs = {make_run("q1", {"d1", "d2"})};
  CHECK(eval::recall_at_k(runs, qrels, 5) == doctest::Approx(1.0));
  runs = {make_run("q1", {"d8", "d9"})};
  CHECK(eval::recall_at_k(runs, qrels, 5) == doctest::Approx(0.0));
}

TEST_CASE("ndcg trivial cases") {
  const std::vector<corpus::Judgment> qrels = {{"q1", "d1", 1}};
  std::vector<eval::RunList> runs = {make_run("q1", {"d1", "d2"})};
  CHECK(eval::ndcg_at_k(runs, qrels, 10) == doctest::Approx(1.0));
  runs = {make_run("q1", {"d2", "d1"})};
  CHECK(eval::ndcg_at_k(runs, qrels, 10) ==
        doctest::Approx(1.0 / std::log2(3.0)).epsilon(1e-9));
}

TEST_CASE("queries without judgments are excluded with a warning") {
  const std::vector<corpus::Judgment> qrels = {{"q1", "d1", 1}};
  const std::vector<eval::RunList> runs = {make_run("q1", {"d1"}),
                                           make_run("q9", {"d1"})};
  std::vector<std::string> warnings;
  CHECK(eval::mrr_at_k(runs, qrels, 10, &warnings) == doctest::Approx(1.0));
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("q9") != std::string::npos);
}

TEST_CASE("metrics agree exactly with brute-force oracles on random instances") {
  rng::SplitMix64 gen(55);
  for (int trial = 0; trial < 300; ++trial) {
    const int n_docs = 3 + static_cast<int>(gen.below(20));
    const int n_queries = 1 + static_cast<int>(gen.below(6));
    std::vector<eval::RunList> runs;
    std::vector<corpus::Judgment> qrels;
    for (int qi = 0; qi < n_queries; ++qi) {
      const std::string qid = "q" + std::to_string(qi);
      eval::RunList run;
      run.query_id = qid;
      std::vector<int> perm;
      for (int d = 0; d < n_docs; ++d) perm.push_back(d);
      rng::shuffle(perm, gen);
      const int depth = 1 + static_cast<int>(gen.below(static_cast<std::uint64_t>(n_docs)));
      double score = 100.0;
      for (int r = 0; r < depth; ++r)
        run.entries.push_back({"d" + std::to_string(perm[static_cast<std::size_t>(r)]), score -= gen.unit() + 0.001});
      runs.push_back(std::move(run));
      for (int d = 0; d < n_docs; ++d)
        if (gen.unit() < 0.3)
          qrels.push_back({qid, "d" + std::to_string(d),
                           static_cast<int>(gen.below(3))});
    }
    for (const int k : {1, 3, 10}) {
      CHECK(eval::mrr_at_k(runs, qrels, k) == oracle_mrr(runs, qrels, k));
      CHECK(eval::recall_at_k(runs, qrels, k) == oracle_recall(runs, qrels, k));
      CHECK(eval::ndcg_at_k(runs, qrels, k) == oracle_ndcg(runs, qrels, k));
    }
  }
}

TEST_CASE("metric values stay in [0, 1] and depend only on order") {
  const std::vector<corpus::Judgment> qrels = {{"q1", "d2", 1}, {"q1", "d5", 2}};
  auto runs = std::vector<eval::RunList>{make_run("q1", {"d5", "d1", "d2"})};
  const double mrr = eval::mrr_at_k(runs, qrels, 10);
  const double rec = eval::recall_at_k(runs, qrels, 10);
  const double ndcg = eval::ndcg_at_k(runs, qrels, 10);
  // Monotone transform of the scores: ordering identical, metrics identical.
  for (auto& e : runs[0].entries) e.score = std::exp(e.score);
  CHECK(eval::mrr_at_k(runs, qrels, 10) == mrr);
  CHECK(eval::recall_at_k(runs, qrels, 10) == rec);
  CHECK(eval::ndcg_at_k(runs, qrels, 10) == ndcg);
  for (const double v : {mrr, rec, ndcg}) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("full_rank at depth 1 returns the retriever's top hit") {
  const corpus::Collection coll(std::vector<corpus::Document>{{"d0", "x"}, {"d1", "x x"}, {"d2", "y"}});
  const auto index = retrievers::InvertedIndex::build(coll);
  const retrievers::Bm25Retriever bm25(coll, index, {});
  const std::vector<retrievers::PreparedQuery> queries = {
      retrievers::prepare_query({"q", "x"}, 1 << 10, kSeed)};
  const auto runs = eval::full_rank(bm25, ConstantScorer(1.0), queries, 1, coll);
  REQUIRE(runs.size() == 1);
  REQUIRE(runs[0].entries.size() == 1);
  CHECK(runs[0].entries[0].doc_id == bm25.topk(queries[0], 1).entries[0].doc_id);
}

TEST_CASE("full_rank depth bounds the run size") {
  const corpus::Collection coll(std::vector<corpus::Document>{{"d0", "x"}, {"d1", "x"}, {"d2", "x"}});
  const auto index = retrievers::InvertedIndex::build(coll);
  const retrievers::Bm25Retriever bm25(coll, index, {});
  const std::vector<retrievers::PreparedQuery> queries = {
      retrievers::prepare_query({"q", "x"}, 1 << 10, kSeed)};
  for (int depth = 1; depth <= 4; ++depth) {
    const auto runs = eval::full_rank(bm25, OrdinalScorer(), queries, depth, coll);
    CHECK(runs[0].entries.size() <= static_cast<std::size_t>(depth));
  }
}

TEST_CASE("run files round-trip through the TREC format") {
  testutil::TempDir tmp;
  std::vector<eval::RunList> runs = {make_run("q1", {"d3", "d1"}),
                                     make_run("q2", {"d2"})};
  runs[0].entries[0].score = 1.25;
  runs[0].entries[1].score = 0.5;
  const auto path = tmp.file("run.txt");
  eval::write_run_file(runs, "tag", path);
  const auto first = testutil::read_file(path);
  CHECK(first.find("q1 Q0 d3 1 1.25 tag\n") != std::string::npos);
  const auto loaded = eval::load_run_file(path);
  const auto path2 = tmp.file("run2.txt");
  eval::write_run_file(loaded, "tag", path2);
  CHECK(testutil::read_file(path2) == first);
}

TEST_CASE("run file loader rejects malformed lines with their number") {
  testutil::TempDir tmp;
  const auto path = tmp.file("bad.run");
  testutil::write_file(path, "q1 Q0 d1 1 2.0 tag\nq1 Q0 d2 oops 1.0 tag\n");
  CHECK_THROWS_WITH_AS(eval::load_run_file(path), doctest::Contains("line 2"),
                       std::runtime_error);
  const auto path2 = tmp.file("short.run");
  testutil::write_file(path2, "q1 Q0 d1\n");
  CHECK_THROWS_WITH_AS(eval::load_run_file(path2), doctest::Contains("line 1"),
                       std::runtime_error);
}

TEST_CASE("run file loader rejects duplicate docs per query") {
  testutil::TempDir tmp;
  const auto path = tmp.file("dup.run");
  testutil::write_file(path, "q1 Q0 d1 1 2.0 t\nq1 Q0 d1 2 1.0 t\n");
  CHECK_THROWS_AS(eval::load_run_file(path), std::runtime_error);
}

TEST_CASE("metric lines use four decimals") {
  CHECK(eval::format_metric_line("mrr", 10, 1.0) == "mrr@10\t1.0000");
  CHECK(eval::format_metric_line("ndcg", 5, 0.63093) == "ndcg@5\t0.6309");
}
