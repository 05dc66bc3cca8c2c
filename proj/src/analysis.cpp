#include "ranklab/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ranklab::analysis {

SupportDistribution distribution_from_scores(
    std::vector<std::string> support,
    const std::vector<std::optional<double>>& scores, std::string source) {
  if (support.empty())
    throw std::invalid_argument("distribution: empty support");
  if (support.size() != scores.size())
    throw std::invalid_argument("distribution: support/score size mismatch");
  SupportDistribution dist;
  dist.support = std::move(support);
  dist.source = std::move(source);
  dist.probs.resize(static_cast<Eigen::Index>(scores.size()));
  double max_s = -std::numeric_limits<double>::infinity();
  for (const auto& s : scores)
    if (s && *s > max_s) max_s = *s;
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double p = scores[i] ? std::exp(*scores[i] - max_s) : kEpsilonFloor;
    dist.probs(static_cast<Eigen::Index>(i)) = p;
    sum += p;
  }
  dist.probs /= sum;
  return dist;
}

SupportDistribution model_distribution(const retrievers::PairScorer& scorer,
                                       const retrievers::PreparedQuery& q,
                                       std::span<const std::int32_t> support,
                                       const corpus::Collection& coll,
                                       std::string source) {
  std::vector<std::string> ids;
  std::vector<std::optional<double>> scores;
  ids.reserve(support.size());
  scores.reserve(support.size());
  for (const auto ord : support) {
    ids.push_back(coll.at(static_cast<std::size_t>(ord)).id);
    scores.push_back(scorer.score(q, ord));
  }
  return distribution_from_scores(std::move(ids), scores, std::move(source));
}

SupportDistribution joint_distribution(std::span<const SupportDistribution> parts) {
  if (parts.empty())
    throw std::invalid_argument("joint_distribution: need at least one part");
  // A single part passes through untouched so the degenerate product is
  // bit-identical to the plain distribution.
  if (parts.size() == 1) return parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i)
    if (parts[i].support != parts[0].support)
      throw std::invalid_argument("joint_distribution: support mismatch");
  SupportDistribution dist;
  dist.support = parts[0].support;
  std::string label = "joint(" + parts[0].source;
  dist.probs = parts[0].probs;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    dist.probs = dist.probs.cwiseProduct(parts[i].probs);
    label += "," + parts[i].source;
  }
  dist.source = label + ")";
  const double sum = dist.probs.sum();
  if (sum <= 0.0)
    throw std::invalid_argument(
        "joint_distribution: all-zero product (degenerate support)");
  dist.probs /= sum;
  return dist;
}

SupportDistribution joint_distribution(
    std::span<const retrievers::Retriever* const> scorers,
    const retrievers::PreparedQuery& q, std::span<const std::int32_t> support,
    const corpus::Collection& coll) {
  if (scorers.empty())
    throw std::invalid_argument("joint_distribution: need at least one scorer");
  std::vector<SupportDistribution> parts;
  parts.reserve(scorers.size());
  for (const auto* s : scorers)
    parts.push_back(model_distribution(*s, q, support, coll, s->name()));
  return joint_distribution(parts);
}

double kl_divergence(const SupportDistribution& p, const SupportDistribution& q) {
  if (p.support != q.support)
    throw std::invalid_argument("kl_divergence: support mismatch");
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p.probs.size(); ++i) {
    const double pi = p.probs(i);
    if (pi == 0.0) continue;
    const double qi = q.probs(i);
    if (pi == qi) continue;  // identical mass contributes exactly zero
    kl += pi * std::log(pi / std::max(qi, kEpsilonFloor));
  }
  return kl;
}

ShiftReport distribution_shift(
    std::span<const retrievers::Retriever* const> generators,
    const retrievers::PairScorer& ranker_scorer,
    const retrievers::Retriever& bm25_reference,
    const retrievers::PreparedQuery& q, const std::set<std::string>& positives,
    int top_n, const corpus::Collection& coll) {
  if (generators.empty())
    throw std::invalid_argument("distribution_shift: need generators");
  if (top_n < 1) throw std::invalid_argument("distribution_shift: top_n >= 1");

  std::set<std::string> union_ids;
  const auto add_top = [&](const retrievers::CandidateList& list) {
    for (const auto& e : list.entries)
      if (positives.find(e.doc_id) == positives.end()) union_ids.insert(e.doc_id);
  };
  add_top(bm25_reference.topk(q, top_n));
  for (const auto* g : generators) add_top(g->topk(q, top_n));
  add_top(retrievers::retriever_topk(ranker_scorer, coll, q, top_n));
  if (union_ids.empty())
    throw std::invalid_argument("distribution_shift: empty support for query " +
                                q.id);

  std::vector<std::int32_t> support;
  support.reserve(union_ids.size());
  for (const auto& id : union_ids)
    support.push_back(static_cast<std::int32_t>(coll.ordinal_of(id)));

  const auto bm25_dist =
      model_distribution(bm25_reference, q, support, coll, bm25_reference.name());
  const auto joint = joint_distribution(generators, q, support, coll);
  const auto ranker_dist =
      model_distribution(ranker_scorer, q, support, coll, "ranker");

  ShiftReport report;
  report.kl_joint_bm25 = kl_divergence(joint, bm25_dist);
  report.kl_ranker_bm25 = kl_divergence(ranker_dist, bm25_dist);
  report.delta = report.kl_joint_bm25 - report.kl_ranker_bm25;
  report.abs_delta = std::abs(report.delta);
  report.support_size = support.size();
  return report;
}

void emit_figure_data(std::span<const FigurePoint> points,
                      const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write figure data: " + path);
  std::string body;
  char buf[32];
  for (const auto& p : points) {
    body += p.label;
    body.push_back('\t');
    auto res = std::to_chars(buf, buf + sizeof(buf), p.x);
    body.append(buf, res.ptr);
    body.push_back('\t');
    res = std::to_chars(buf, buf + sizeof(buf), p.y);
    body.append(buf, res.ptr);
    body.push_back('\n');
  }
  out << body;
}

std::vector<FigurePoint> load_figure_data(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open figure data: " + path);
  std::vector<FigurePoint> points;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos)
      throw std::runtime_error(path + ": malformed figure line " +
                               std::to_string(line_no));
    FigurePoint p;
    p.label = line.substr(0, t1);
    const std::string xs = line.substr(t1 + 1, t2 - t1 - 1);
    const std::string ys = line.substr(t2 + 1);
    const auto xr = std::from_chars(xs.data(), xs.data() + xs.size(), p.x);
    const auto yr = std::from_chars(ys.data(), ys.data() + ys.size(), p.y);
    if (xr.ec != std::errc() || yr.ec != std::errc())
      throw std::runtime_error(path + ": bad figure coordinates on line " +
                               std::to_string(line_no));
    points.push_back(std::move(p));
  }
  return points;
}

}  // namespace ranklab::analysis
