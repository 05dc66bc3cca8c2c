#include <doctest.h>

#include <cmath>

#include "ranklab/checkpoint.hpp"
#include "ranklab/ranker.hpp"
#include "ranklab/rng.hpp"
#include "ranklab/training.hpp"
#include "fd_util.hpp"
#include "test_util.hpp"

using namespace ranklab;

namespace {

constexpr std::uint64_t kSeed = 99;

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, rng::SplitMix64& gen,
                              double lo = -1.0, double hi = 1.0) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = gen.range(lo, hi);
  return m;
}

}  // namespace

TEST_CASE("interaction features: query equals document") {
  const corpus::Collection coll(std::vector<corpus::Document>{{"d0", "apple banana apple"}});
  const std::int32_t dim = 1 << 12;
  const auto feats = retrievers::CollectionFeatures::build(coll, dim, kSeed);
  const auto index = retrievers::InvertedIndex::build(coll);
  const auto proj = ranker::FrozenProjection::make(dim, 4, 7);
  const auto q = retrievers::prepare_query({"q", "apple banana apple"}, dim, kSeed);
  const auto x = ranker::interaction_features(q, 0, proj, feats, index, {});
  const int p = 4;
  for (int i = 0; i < p; ++i) {
    CHECK(x(i) == x(p + i));                       // same pooled vector
    CHECK(x(2 * p + i) == doctest::Approx(x(i) * x(i)).epsilon(1e-15));
  }
  CHECK(x(3 * p) == 2.0);      // unique shared terms: apple, banana
  CHECK(x(3 * p + 2) == 3.0);  // |q| counts tokens, not unique terms
  CHECK(x(3 * p + 3) == 3.0);
}

TEST_CASE("interaction features: disjoint query and document") {
  const corpus::Collection coll(std::vector<corpus::Document>{{"d0", "apple banana"}});
  const std::int32_t dim = 1 << 12;
  const auto feats = retrievers::CollectionFeatures::build(coll, dim, kSeed);
  const auto index = retrievers::InvertedIndex::build(coll);
  const auto proj = ranker::FrozenProjection::make(dim, 4, 7);
  const auto q = retrievers::prepare_query({"q", "cherry kiwi"}, dim, kSeed);
  const auto x = ranker::interaction_features(q, 0, proj, feats, index, {});
  CHECK(x(12) == 0.0);  // overlap
  CHECK(x(13) == 0.0);  // bm25
}

TEST_CASE("interaction features match a hand-computed toy case") {
  // Single-token texts so pooled projections are single projection rows.
  const corpus::Collection coll(std::vector<corpus::Document>{{"d0", "beta"}});
  const std::int32_t dim = 64;
  const auto feats = retrievers::CollectionFeatures::build(coll, dim, kSeed);
  const auto index = retrievers::InvertedIndex::build(coll);
  auto proj = ranker::FrozenProjection::make(dim, 2, 7);
  const auto q = retrievers::prepare_query({"q", "alpha"}, dim, kSeed);
  const auto qb = q.features.entries.at(0).index;
  const auto db = feats.docs[0].entries.at(0).index;
  REQUIRE(qb != db);
  proj.rows.setZero();
  proj.rows.row(qb) << 1.5, -2.0;
  proj.rows.row(db) << 0.25, 4.0;
  const auto x = ranker::interaction_features(q, 0, proj, feats, index, {});
  REQUIRE(x.size() == 10);
  CHECK(x(0) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(x(1) == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(x(2) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(x(3) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(x(4) == doctest::Approx(1.5 * 0.25).epsilon(1e-12));
  CHECK(x(5) == doctest::Approx(-2.0 * 4.0).epsilon(1e-12));
  CHECK(x(6) == 0.0);  // overlap
  CHECK(x(7) == 0.0);  // bm25
  CHECK(x(8) == 1.0);  // |q|
  CHECK(x(9) == 1.0);  // |d|
}

TEST_CASE("ranker_score with zero weights returns the output bias") {
  ranker::RankerModel m;
  m.w1 = Eigen::MatrixXd::Zero(6, 3);
  m.b1 = Eigen::VectorXd::Zero(3);
  m.w2 = Eigen::VectorXd::Zero(3);
  m.b2 = 0.75;
  CHECK(ranker::ranker_score(m, Eigen::VectorXd::Random(6)) == 0.75);
}

TEST_CASE("ranker_score hidden=1 closed form") {
  ranker::RankerModel m;
  m.w1 = Eigen::MatrixXd(2, 1);
  m.w1 << 0.5, -1.25;
  m.b1 = Eigen::VectorXd::Constant(1, 0.1);
  m.w2 = Eigen::VectorXd::Constant(1, 2.0);
  m.b2 = -0.3;
  Eigen::VectorXd x(2);
  x << 1.0, 0.4;
  const double pre = 0.5 * 1.0 + (-1.25) * 0.4 + 0.1;
  const double expected = 2.0 * std::tanh(pre) - 0.3;
  CHECK(ranker::ranker_score(m, x) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("ranker_score stays finite and rejects dim mismatch") {
  const auto m = ranker::RankerModel::init(8, 4, 3);
  Eigen::VectorXd x = Eigen::VectorXd::Constant(8, 1e6);
  CHECK(std::isfinite(ranker::ranker_score(m, x)));
  CHECK_THROWS_AS(ranker::ranker_score(m, Eigen::VectorXd::Zero(5)),
                  std::invalid_argument);
}

TEST_CASE("ranker_grad: zero upstream gives zero gradients") {
  const auto m = ranker::RankerModel::init(6, 3, 1);
  rng::SplitMix64 gen(2);
  const Eigen::MatrixXd X = random_matrix(4, 6, gen);
  const auto g = ranker::ranker_grad(m, X, Eigen::VectorXd::Zero(4));
  CHECK(g.w1.isZero(0.0));
  CHECK(g.b1.isZero(0.0));
  CHECK(g.w2.isZero(0.0));
  CHECK(g.b2 == 0.0);
}

TEST_CASE("ranker_grad: bias gradient equals the upstream sum") {
  const auto m = ranker::RankerModel::init(5, 4, 9);
  rng::SplitMix64 gen(4);
  const Eigen::MatrixXd X = random_matrix(7, 5, gen);
  Eigen::VectorXd u(7);
  for (int i = 0; i < 7; ++i) u(i) = gen.range(-2.0, 2.0);
  const auto g = ranker::ranker_grad(m, X, u);
  CHECK(g.b2 == doctest::Approx(u.sum()).epsilon(1e-12));
}

TEST_CASE("ranker_grad matches central finite differences") {
  rng::SplitMix64 gen(11);
  for (int draw = 0; draw < 25; ++draw) {
    auto m = ranker::RankerModel::init(6, 3, gen.next());
    const int n = 2 + static_cast<int>(gen.below(4));
    const Eigen::MatrixXd X = random_matrix(n, 6, gen, -2.0, 2.0);
    Eigen::VectorXd u(n);
    for (int i = 0; i < n; ++i) u(i) = gen.range(-1.5, 1.5);

    const auto eval = [&]() {
      return (ranker::ranker_score_batch(m, X).array() * u.array()).sum();
    };
    const auto analytic = ranker::ranker_grad(m, X, u);
    CHECK(testutil::relative_error(testutil::flatten(analytic.w1),
                                   testutil::numeric_gradient(eval, m.w1)) < 1e-4);
    CHECK(testutil::relative_error(analytic.b1,
                                   testutil::numeric_gradient(eval, m.b1)) < 1e-4);
    CHECK(testutil::relative_error(analytic.w2,
                                   testutil::numeric_gradient(eval, m.w2)) < 1e-4);
    double b2 = m.b2;
    const auto eval_b2 = [&]() {
      ranker::RankerModel tmp = m;
      tmp.b2 = b2;
      return (ranker::ranker_score_batch(tmp, X).array() * u.array()).sum();
    };
    const double fd_b2 = testutil::central_diff(eval_b2, &b2, 1e-5);
    CHECK(std::abs(analytic.b2 - fd_b2) <
          1e-4 * std::max({1.0, std::abs(analytic.b2), std::abs(fd_b2)}));
  }
}

TEST_CASE("trained ranker scores do not factorize into f(q) * g(d)") {
  corpus::SyntheticSpec spec;
  spec.n_topics = 2;
  spec.docs_per_topic = 30;
  spec.n_queries = 24;
  spec.vocab_size = 80;
  spec.seed = 5;
  const auto data = corpus::generate_synthetic(spec);
  const std::int32_t dim = 1 << 12;
  const auto feats = retrievers::CollectionFeatures::build(data.collection, dim, kSeed);
  const auto index = retrievers::InvertedIndex::build(data.collection);
  const retrievers::Bm25Params params;
  const retrievers::Bm25Retriever bm25(data.collection, index, params);
  const auto proj = ranker::FrozenProjection::make(dim, 8, kSeed);

  std::vector<retrievers::PreparedQuery> queries;
  for (const auto& q : data.queries)
    queries.push_back(retrievers::prepare_query(q, dim, kSeed));
  const training::TrainData tdata{data.collection, feats, queries,
                                  data.training.positives};
  const retrievers::Retriever* gens[] = {&bm25};
  auto pools = training::build_pools(gens, tdata, 20);
  training::PoolNegatives negatives(data.collection, std::move(pools));
  training::TrainConfig cfg;
  cfg.epochs = 3;
  cfg.m_negatives = 4;
  cfg.top_n = 20;
  auto model = ranker::RankerModel::init(ranker::interaction_feat_dim(8), 8, 1);
  model = training::train_ranker_model(std::move(model), tdata, proj, index,
                                       params, negatives, cfg);

  const ranker::RankerScorer scorer(model, proj, feats, index, params);
  // log-space rank-1 test on 2x2 grids: a separable score matrix would make
  // s(q1,d1) + s(q2,d2) - s(q1,d2) - s(q2,d1) vanish.
  double best = 0.0;
  for (std::size_t a = 0; a + 1 < queries.size() && a < 6; a += 2) {
    const auto& q1 = queries[a];
    const auto& q2 = queries[a + 1];
    for (std::int32_t d1 = 0; d1 < 4; ++d1)
      for (std::int32_t d2 = d1 + 1; d2 < 8; ++d2) {
        const double det = scorer.score(q1, d1) + scorer.score(q2, d2) -
                           scorer.score(q1, d2) - scorer.score(q2, d1);
        best = std::max(best, std::abs(det));
      }
  }
  CHECK(best > 1e-6);
}

TEST_CASE("ranker checkpoints round-trip bit-exactly") {
  testutil::TempDir tmp;
  const auto m = ranker::RankerModel::init(10, 4, 77);
  const auto path = tmp.file("ranker.tsv");
  checkpoint::save_ranker(m, path);
  const auto loaded = checkpoint::load_ranker(path);
  CHECK(loaded.w1 == m.w1);
  CHECK(loaded.b1 == m.b1);
  CHECK(loaded.w2 == m.w2);
  CHECK(loaded.b2 == m.b2);
}
