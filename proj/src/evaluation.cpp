#include "ranklab/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "ranklab/parallel.hpp"

namespace ranklab::eval {

namespace {

bool run_order(const RunEntry& a, const RunEntry& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.doc_id < b.doc_id;
}

using QrelMap = std::map<std::string, std::map<std::string, int>>;

QrelMap qrel_map(std::span<const corpus::Judgment> judgments) {
  QrelMap m;
  for (const auto& j : judgments) m[j.query_id][j.doc_id] = j.grade;
  return m;
}

// Shared averaging scaffold: per_query returns the metric value for one
// judged query; queries without judgments are excluded with a warning.
template <typename Fn>
double mean_over_queries(std::span<const RunList> runs, const QrelMap& qrels,
                         std::vector<std::string>* warnings, Fn&& per_query) {
  double sum = 0.0;
  int counted = 0;
  for (const auto& run : runs) {
    const auto it = qrels.find(run.query_id);
    if (it == qrels.end() || it->second.empty()) {
      if (warnings)
        warnings->push_back("query " + run.query_id +
                            " has no judgments; excluded from the average");
      continue;
    }
    double value = 0.0;
    if (!per_query(run, it->second, &value)) {
      if (warnings)
        warnings->push_back("query " + run.query_id +
                            " has no usable judgments; excluded from the average");
      continue;
    }
    sum += value;
    ++counted;
  }
  return counted == 0 ? 0.0 : sum / counted;
}

}  // namespace

RunList rerank(const retrievers::PairScorer& scorer,
               const retrievers::PreparedQuery& q,
               const retrievers::CandidateList& candidates,
               const corpus::Collection& coll) {
  if (candidates.entries.empty())
    throw std::invalid_argument("rerank: empty candidate list for query " + q.id);
  RunList out;
  out.query_id = candidates.query_id;
  out.entries.reserve(candidates.entries.size());
  for (const auto& c : candidates.entries)
    out.entries.push_back(
        {c.doc_id, scorer.score(q, static_cast<std::int32_t>(coll.ordinal_of(c.doc_id)))});
  std::sort(out.entries.begin(), out.entries.end(), run_order);
  return out;
}

double mrr_at_k(std::span<const RunList> runs,
                std::span<const corpus::Judgment> judgments, int k,
                std::vector<std::string>* warnings) {
  if (k < 1) throw std::invalid_argument("mrr_at_k: k must be >= 1");
  const auto qrels = qrel_map(judgments);
  return mean_over_queries(
      runs, qrels, warnings,
      [&](const RunList& run, const std::map<std::string, int>& rel, double* value) {
        *value = 0.0;
        const std::size_t depth =
            std::min(run.entries.size(), static_cast<std::size_t>(k));
        for (std::size_t r = 0; r < depth; ++r) {
          const auto it = rel.find(run.entries[r].doc_id);
          if (it != rel.end() && it->second > 0) {
            *value = 1.0 / static_cast<double>(r + 1);
            break;
          }
        }
        return true;
      });
}

double recall_at_k(std::span<const RunList> runs,
                   std::span<const corpus::Judgment> judgments, int k,
                   std::vector<std::string>* warnings) {
  if (k < 1) throw std::invalid_argument("recall_at_k: k must be >= 1");
  const auto qrels = qrel_map(judgments);
  return mean_over_queries(
      runs, qrels, warnings,
      [&](const RunList& run, const std::map<std::string, int>& rel, double* value) {
        int total_relevant = 0;
        for (const auto& [doc, grade] : rel)
          if (grade > 0) ++total_relevant;
        if (total_relevant == 0) return false;
        int found = 0;
        const std::size_t depth =
            std::min(run.entries.size(), static_cast<std::size_t>(k));
        for (std::size_t r = 0; r < depth; ++r) {
          const auto it = rel.find(run.entries[r].doc_id);
          if (it != rel.end() && it->second > 0) ++found;
        }
        *value = static_cast<double>(found) / static_cast<double>(total_relevant);
        return true;
      });
}

double ndcg_at_k(std::span<const RunList> runs,
                 std::span<const corpus::Judgment> judgments, int k,
                 std::vector<std::string>* warnings) {
  if (k < 1) throw std::invalid_argument("ndcg_at_k: k must be >= 1");
  const auto qrels = qrel_map(judgments);
  return mean_over_queries(
      runs, qrels, warnings,
      [&](const RunList& run, const std::map<std::string, int>& rel, double* value) {
        std::vector<int> grades;
        for (const auto& [doc, grade] : rel)
          if (grade > 0) grades.push_back(grade);
        if (grades.empty()) return false;
        std::sort(grades.rbegin(), grades.rend());
        double ideal = 0.0;
        const std::size_t ideal_depth =
            std::min(grades.size(), static_cast<std::size_t>(k));
        for (std::size_t r = 0; r < ideal_depth; ++r)
          ideal += (std::pow(2.0, grades[r]) - 1.0) / std::log2(static_cast<double>(r + 2));
        if (ideal == 0.0) return false;
        double dcg = 0.0;
        const std::size_t depth =
            std::min(run.entries.size(), static_cast<std::size_t>(k));
        for (std::size_t r = 0; r < depth; ++r) {
          const auto it = rel.find(run.entries[r].doc_id);
          if (it != rel.end() && it->second > 0)
            dcg += (std::pow(2.0, it->second) - 1.0) /
                   std::log2(static_cast<double>(r + 2));
        }
        *value = dcg / ideal;
        return true;
      });
}

std::vector<RunList> full_rank(const retrievers::Retriever& retriever,
                               const retrievers::PairScorer& ranker,
                               std::span<const retrievers::PreparedQuery> queries,
                               int depth, const corpus::Collection& coll,
                               int threads) {
  if (depth < 1) throw std::invalid_argument("full_rank: depth must be >= 1");
  std::vector<RunList> runs(queries.size());
  parallel::parallel_for(queries.size(), threads, [&](std::size_t i) {
    const auto candidates = retriever.topk(queries[i], depth);
    if (candidates.entries.empty()) {
      runs[i].query_id = queries[i].id;
      return;
    }
    runs[i] = rerank(ranker, queries[i], candidates, coll);
  });
  return runs;
}

void write_run_file(std::span<const RunList> runs, const std::string& tag,
                    const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write run file: " + path);
  std::string body;
  for (const auto& run : runs) {
    for (std::size_t r = 0; r < run.entries.size(); ++r) {
      body += run.query_id;
      body += " Q0 ";
      body += run.entries[r].doc_id;
      body.push_back(' ');
      body += std::to_string(r + 1);
      body.push_back(' ');
      char buf[32];
      const auto res = std::to_chars(buf, buf + sizeof(buf), run.entries[r].score);
      body.append(buf, res.ptr);
      body.push_back(' ');
      body += tag;
      body.push_back('\n');
    }
  }
  out << body;
}

std::vector<RunList> load_run_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open run file: " + path);
  std::vector<RunList> runs;
  std::vector<std::set<std::string>> seen;
  std::unordered_map<std::string, std::size_t> by_query;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string qid, q0, docid, rank_s, score_s, tag;
    if (!(ss >> qid >> q0 >> docid >> rank_s >> score_s >> tag)) {
      std::ostringstream msg;
      msg << path << ": malformed run line " << line_no
          << " (expected `qid Q0 docid rank score tag`)";
      throw std::runtime_error(msg.str());
    }
    int rank = 0;
    auto rr = std::from_chars(rank_s.data(), rank_s.data() + rank_s.size(), rank);
    double score = 0.0;
    auto sr = std::from_chars(score_s.data(), score_s.data() + score_s.size(), score);
    if (rr.ec != std::errc() || rr.ptr != rank_s.data() + rank_s.size() ||
        sr.ec != std::errc() || sr.ptr != score_s.data() + score_s.size()) {
      std::ostringstream msg;
      msg << path << ": bad rank or score on run line " << line_no;
      throw std::runtime_error(msg.str());
    }
    auto [it, inserted] = by_query.emplace(qid, runs.size());
    if (inserted) {
      runs.push_back(RunList{qid, {}});
      seen.emplace_back();
    }
    auto& run = runs[it->second];
    if (!seen[it->second].insert(docid).second) {
      std::ostringstream msg;
      msg << path << ": duplicate doc " << docid << " for query " << qid
          << " on run line " << line_no;
      throw std::runtime_error(msg.str());
    }
    run.entries.push_back({docid, score});
  }
  for (auto& run : runs)
    std::sort(run.entries.begin(), run.entries.end(), run_order);
  return runs;
}

std::string format_metric_line(const std::string& metric, int k, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s@%d\t%.4f", metric.c_str(), k, value);
  return buf;
}

}  // namespace ranklab::eval
