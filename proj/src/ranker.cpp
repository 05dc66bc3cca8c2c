#include "ranklab/ranker.hpp"

#include <algorithm>
#include <stdexcept>

#include "ranklab/rng.hpp"

namespace ranklab::ranker {

FrozenProjection FrozenProjection::make(std::int32_t dim_hash,
                                        std::int32_t proj_dim,
                                        std::uint64_t seed) {
  if (dim_hash < 1 || proj_dim < 1)
    throw std::invalid_argument("FrozenProjection: dims must be >= 1");
  FrozenProjection p;
  p.rows.resize(dim_hash, proj_dim);
  rng::SplitMix64 gen(rng::derive_seed(seed, "frozen-projection"));
  for (std::int32_t r = 0; r < dim_hash; ++r)
    for (std::int32_t c = 0; c < proj_dim; ++c)
      p.rows(r, c) = gen.range(-1.0, 1.0);
  return p;
}

RankerModel RankerModel::init(std::int32_t feat_dim, std::int32_t hidden,
                              std::uint64_t seed) {
  if (feat_dim < 1 || hidden < 1)
    throw std::invalid_argument("RankerModel: dims must be >= 1");
  RankerModel m;
  m.w1.resize(feat_dim, hidden);
  m.b1 = Eigen::VectorXd::Zero(hidden);
  m.w2.resize(hidden);
  rng::SplitMix64 gen(rng::derive_seed(seed, "ranker-init"));
  for (std::int32_t r = 0; r < feat_dim; ++r)
    for (std::int32_t c = 0; c < hidden; ++c)
      m.w1(r, c) = gen.range(-0.05, 0.05);
  for (std::int32_t i = 0; i < hidden; ++i) m.w2(i) = gen.range(-0.05, 0.05);
  m.b2 = 0.0;
  return m;
}

Eigen::VectorXd assemble_features(const Eigen::VectorXd& q_proj,
                                  const Eigen::VectorXd& d_proj, double overlap,
                                  double bm25, double q_len, double d_len) {
  const auto p = q_proj.size();
  Eigen::VectorXd x(3 * p + 4);
  x.segment(0, p) = q_proj;
  x.segment(p, p) = d_proj;
  x.segment(2 * p, p) = q_proj.cwiseProduct(d_proj);
  x(3 * p) = overlap;
  x(3 * p + 1) = bm25;
  x(3 * p + 2) = q_len;
  x(3 * p + 3) = d_len;
  return x;
}

Eigen::VectorXd interaction_features(const retrievers::PreparedQuery& q,
                                     std::int32_t ordinal,
                                     const FrozenProjection& proj,
                                     const retrievers::CollectionFeatures& feats,
                                     const retrievers::InvertedIndex& index,
                                     const retrievers::Bm25Params& params) {
  const Eigen::VectorXd q_proj = proj.pool(q.features);
  const Eigen::VectorXd d_proj = proj.pool(feats.docs[static_cast<std::size_t>(ordinal)]);

  text::TokenSeq uniq = q.tokens;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  double overlap = 0.0;
  for (const auto& t : uniq)
    if (index.term_freq(t, ordinal) > 0) overlap += 1.0;

  const double bm25 = retrievers::bm25_score(index, params, q.tokens, ordinal);
  return assemble_features(q_proj, d_proj, overlap, bm25,
                           static_cast<double>(q.tokens.size()),
                           static_cast<double>(index.doc_len(static_cast<std::size_t>(ordinal))));
}

double ranker_score(const RankerModel& model, const Eigen::VectorXd& features) {
  if (features.size() != model.w1.rows())
    throw std::invalid_argument("ranker_score: feature dim " +
                                std::to_string(features.size()) +
                                " does not match model feat_dim " +
                                std::to_string(model.w1.rows()));
  const Eigen::VectorXd h =
      (model.w1.transpose() * features + model.b1).array().tanh();
  return model.w2.dot(h) + model.b2;
}

Eigen::VectorXd ranker_score_batch(const RankerModel& model,
                                   const Eigen::MatrixXd& X) {
  if (X.cols() != model.w1.rows())
    throw std::invalid_argument("ranker_score_batch: feature dim mismatch");
  const Eigen::MatrixXd h =
      ((X * model.w1).rowwise() + model.b1.transpose()).array().tanh();
  Eigen::VectorXd scores = h * model.w2;
  scores.array() += model.b2;
  return scores;
}

RankerGrad ranker_grad(const RankerModel& model, const Eigen::MatrixXd& X,
                       const Eigen::VectorXd& upstream) {
  if (X.rows() == 0) throw std::invalid_argument("ranker_grad: empty batch");
  if (X.cols() != model.w1.rows() || X.rows() != upstream.size())
    throw std::invalid_argument("ranker_grad: shape mismatch");
  const Eigen::MatrixXd h =
      ((X * model.w1).rowwise() + model.b1.transpose()).array().tanh();
  // z(i,j) = upstream(i) * w2(j) * (1 - h(i,j)^2)
  const Eigen::MatrixXd z =
      (1.0 - h.array().square()).matrix().cwiseProduct(
          upstream * model.w2.transpose());
  RankerGrad g;
  g.w1 = X.transpose() * z;
  g.b1 = z.colwise().sum().transpose();
  g.w2 = h.transpose() * upstream;
  g.b2 = upstream.sum();
  return g;
}

RankerScorer::RankerScorer(const RankerModel& model,
                           const FrozenProjection& proj,
                           const retrievers::CollectionFeatures& feats,
                           const retrievers::InvertedIndex& index,
                           retrievers::Bm25Params params)
    : model_(model), proj_(proj), feats_(feats), index_(index), params_(params) {
  doc_proj_.resize(static_cast<Eigen::Index>(feats.docs.size()), proj.proj_dim());
  for (std::size_t ord = 0; ord < feats.docs.size(); ++ord)
    doc_proj_.row(static_cast<Eigen::Index>(ord)) = proj.pool(feats.docs[ord]).transpose();
}

Eigen::VectorXd RankerScorer::features(const retrievers::PreparedQuery& q,
                                       std::int32_t ordinal) const {
  const Eigen::VectorXd q_proj = proj_.pool(q.features);
  const Eigen::VectorXd d_proj = doc_proj_.row(ordinal).transpose();

  text::TokenSeq uniq = q.tokens;
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  double overlap = 0.0;
  for (const auto& t : uniq)
    if (index_.term_freq(t, ordinal) > 0) overlap += 1.0;

  const double bm25 = retrievers::bm25_score(index_, params_, q.tokens, ordinal);
  return assemble_features(q_proj, d_proj, overlap, bm25,
                           static_cast<double>(q.tokens.size()),
                           static_cast<double>(index_.doc_len(static_cast<std::size_t>(ordinal))));
}

double RankerScorer::score(const retrievers::PreparedQuery& q,
                           std::int32_t ordinal) const {
  return ranker_score(model_, features(q, ordinal));
}

}  // namespace ranklab::ranker
