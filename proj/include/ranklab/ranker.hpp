#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "ranklab/retrievers.hpp"

namespace ranklab::ranker {

// Random projection used inside the interaction features. Drawn once from a
// fixed seed and never trained.
struct FrozenProjection {
  Eigen::MatrixXd rows;  // dim_hash x proj_dim

  std::int32_t proj_dim() const { return static_cast<std::int32_t>(rows.cols()); }

  static FrozenProjection make(std::int32_t dim_hash, std::int32_t proj_dim,
                               std::uint64_t seed);

  Eigen::VectorXd pool(const text::SparseVector& features) const {
    return retrievers::pool_rows(rows, features);
  }
};

// One-hidden-layer scorer over joint query-document features:
//   score(x) = w2 . tanh(w1^T x + b1) + b2
struct RankerModel {
  Eigen::MatrixXd w1;  // feat_dim x hidden
  Eigen::VectorXd b1;  // hidden
  Eigen::VectorXd w2;  // hidden
  double b2 = 0.0;

  std::int32_t feat_dim() const { return static_cast<std::int32_t>(w1.rows()); }
  std::int32_t hidden() const { return static_cast<std::int32_t>(w1.cols()); }

  // Uniform init in [-0.05, 0.05].
  static RankerModel init(std::int32_t feat_dim, std::int32_t hidden,
                          std::uint64_t seed);
};

inline std::int32_t interaction_feat_dim(std::int32_t proj_dim) {
  return 3 * proj_dim + 4;
}

// Joint (query, document) features:
//   [pooled q | pooled d | pooled q * pooled d | overlap | bm25 | |q| | |d|]
// The elementwise-product block is what keeps downstream scores from
// factorizing into f(q) * g(d).
Eigen::VectorXd interaction_features(const retrievers::PreparedQuery& q,
                                     std::int32_t ordinal,
                                     const FrozenProjection& proj,
                                     const retrievers::CollectionFeatures& feats,
                                     const retrievers::InvertedIndex& index,
                                     const retrievers::Bm25Params& params);

// Same layout assembled from precomputed pooled projections.
Eigen::VectorXd assemble_features(const Eigen::VectorXd& q_proj,
                                  const Eigen::VectorXd& d_proj, double overlap,
                                  double bm25, double q_len, double d_len);

double ranker_score(const RankerModel& model, const Eigen::VectorXd& features);

// Rows of X are feature vectors; returns one score per row.
Eigen::VectorXd ranker_score_batch(const RankerModel& model,
                                   const Eigen::MatrixXd& X);

struct RankerGrad {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::VectorXd w2;
  double b2 = 0.0;
};

// Exact gradients of sum_i upstream_i * score(x_i) w.r.t. all parameters.
RankerGrad ranker_grad(const RankerModel& model, const Eigen::MatrixXd& X,
                       const Eigen::VectorXd& upstream);

// Frozen view scoring any (query, document) pair; this is what reranking and
// the distribution analyses consume.
class RankerScorer : public retrievers::PairScorer {
 public:
  RankerScorer(const RankerModel& model, const FrozenProjection& proj,
               const retrievers::CollectionFeatures& feats,
               const retrievers::InvertedIndex& index,
               retrievers::Bm25Params params);

  double score(const retrievers::PreparedQuery& q,
               std::int32_t ordinal) const override;
  Eigen::VectorXd features(const retrievers::PreparedQuery& q,
                           std::int32_t ordinal) const;
  const RankerModel& model() const { return model_; }

 private:
  const RankerModel& model_;
  const FrozenProjection& proj_;
  const retrievers::CollectionFeatures& feats_;
  const retrievers::InvertedIndex& index_;
  retrievers::Bm25Params params_;
  Eigen::MatrixXd doc_proj_;  // n_docs x proj_dim, precomputed
};

}  // namespace ranklab::ranker
