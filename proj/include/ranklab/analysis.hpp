#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ranklab/retrievers.hpp"

namespace ranklab::analysis {

// Smoothing floor applied to missing scores and to KL denominators before
// renormalization.
inline constexpr double kEpsilonFloor = 1e-9;

struct SupportDistribution {
  std::vector<std::string> support;  // duplicate-free doc ids
  Eigen::VectorXd probs;             // sums to 1 within 1e-9
  std::string source;
};

// Softmax over the given scores; entries without a score get the epsilon
// floor, then everything renormalizes.
SupportDistribution distribution_from_scores(
    std::vector<std::string> support,
    const std::vector<std::optional<double>>& scores, std::string source);

// Softmax of the scorer's scores restricted to `support`.
SupportDistribution model_distribution(const retrievers::PairScorer& scorer,
                                       const retrievers::PreparedQuery& q,
                                       std::span<const std::int32_t> support,
                                       const corpus::Collection& coll,
                                       std::string source);

// Elementwise product of the per-scorer distributions over a shared support,
// renormalized. Rejects an all-zero product.
SupportDistribution joint_distribution(
    std::span<const SupportDistribution> parts);
SupportDistribution joint_distribution(
    std::span<const retrievers::Retriever* const> scorers,
    const retrievers::PreparedQuery& q, std::span<const std::int32_t> support,
    const corpus::Collection& coll);

// sum p_i ln(p_i / q_i) with 0 ln(0/.) = 0 and q floored at epsilon.
// Requires identical supports.
double kl_divergence(const SupportDistribution& p, const SupportDistribution& q);

struct ShiftReport {
  double delta = 0.0;         // KL(joint||bm25) - KL(ranker||bm25)
  double abs_delta = 0.0;
  double kl_joint_bm25 = 0.0;
  double kl_ranker_bm25 = 0.0;
  std::size_t support_size = 0;
};

// Union-of-top-N support (positives excluded) over the reference BM25
// retriever, every generator, and the ranker; then the two KL terms.
ShiftReport distribution_shift(
    std::span<const retrievers::Retriever* const> generators,
    const retrievers::PairScorer& ranker_scorer,
    const retrievers::Retriever& bm25_reference,
    const retrievers::PreparedQuery& q, const std::set<std::string>& positives,
    int top_n, const corpus::Collection& coll);

struct FigurePoint {
  std::string label;
  double x = 0.0;
  double y = 0.0;
};

// TSV `label \t x \t y`, one line per point, order preserved.
void emit_figure_data(std::span<const FigurePoint> points,
                      const std::string& path);
std::vector<FigurePoint> load_figure_data(const std::string& path);

}  // namespace ranklab::analysis
