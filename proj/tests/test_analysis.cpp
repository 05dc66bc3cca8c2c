#include <doctest.h>

#include <cmath>

#include "ranklab/analysis.hpp"
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

class TableScorer : public retrievers::PairScorer {
 public:
  explicit TableScorer(std::vector<double> by_ordinal)
      : by_ordinal_(std::move(by_ordinal)) {}
  double score(const retrievers::PreparedQuery&, std::int32_t ord) const override {
    return by_ordinal_[static_cast<std::size_t>(ord)];
  }

 private:
  std::vector<double> by_ordinal_;
};

analysis::SupportDistribution make_dist(std::vector<std::string> support,
                                        std::vector<double> probs) {
  analysis::SupportDistribution d;
  d.support = std::move(support);
  d.probs = Eigen::Map<Eigen::VectorXd>(probs.data(),
                                        static_cast<Eigen::Index>(probs.size()));
  d.source = "test";
  return d;
}

}  // namespace

TEST_CASE("model_distribution of a constant scorer is uniform") {
  const corpus::Collection coll(std::vector<corpus::Document>{{"d0", "x"}, {"d1", "y"}, {"d2", "z"}});
  const auto q = retrievers::prepare_query({"q", "x"}, 1 << 10, kSeed);
  const std::vector<std::int32_t> support = {0, 1, 2};
  const auto dist =
      analysis::model_distribution(ConstantScorer(3.0), q, support, coll, "c");
  for (Eigen::Index i = 0; i < dist.probs.size(); ++i)
    CHECK(dist.probs(i) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(std::abs(dist.probs.sum() - 1.0) < 1e-12);
}

TEST_CASE("model_distribution closed form for a ln 2 gap") {
  const corpus::Collection coll(std::vector<corpus::Document>{{"d0", "x"}, {"d1", "y"}});
  const auto q = retrievers::prepare_query({"q", "x"}, 1 << 10, kSeed);
  const std::vector<std::int32_t> support01 = {0, 1};
  const auto dist = analysis::model_distribution(
      TableScorer({std::log(2.0), 0.0}), q, support01, coll, "t");
  CHECK(dist.probs(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(dist.probs(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("missing scores take the epsilon floor then renormalize") {
  const auto dist = analysis::distribution_from_scores(
      {"a", "b", "c"}, {0.0, std::nullopt, 0.0}, "t");
  CHECK(std::abs(dist.probs.sum() - 1.0) < 1e-12);
  CHECK(dist.probs(1) < 1e-8);
  CHECK(dist.probs(0) == dist.probs(2));
}

TEST_CASE("joint_distribution of one scorer is bit-identical to the single") {
  const corpus::Collection coll(std::vector<corpus::Document>{{"d0", "x"}, {"d1", "y"}});
  const auto q = retrievers::prepare_query({"q", "x"}, 1 << 10, kSeed);
  const auto index = retrievers::InvertedIndex::build(coll);
  const retrievers::Bm25Retriever bm25(coll, index, {});
  const std::vector<std::int32_t> support = {0, 1};
  const auto single = analysis::model_distribution(bm25, q, support, coll, "bm25");
  const retrievers::Retriever* gens[] = {&bm25};
  const auto joint = analysis::joint_distribution(gens, q, support, coll);
  REQUIRE(joint.probs.size() == single.probs.size());
  for (Eigen::Index i = 0; i < joint.probs.size(); ++i)
    CHECK(joint.probs(i) == single.probs(i));
}

TEST_CASE("joint of two identical scorers squares and renormalizes") {
  const auto p = make_dist({"a", "b"}, {0.75, 0.25});
  const analysis::SupportDistribution parts[] = {p, p};
  const auto joint = analysis::joint_distribution(parts);
  // (0.75^2, 0.25^2) normalized -> (9/10, 1/10)
  CHECK(joint.probs(0) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(joint.probs(1) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("joint_distribution is order-invariant") {
  const auto a = make_dist({"a", "b", "c"}, {0.5, 0.3, 0.2});
  const auto b = make_dist({"a", "b", "c"}, {0.1, 0.6, 0.3});
  const analysis::SupportDistribution ab[] = {a, b};
  const analysis::SupportDistribution ba[] = {b, a};
  const auto j1 = analysis::joint_distribution(ab);
  const auto j2 = analysis::joint_distribution(ba);
  for (Eigen::Index i = 0; i < j1.probs.size(); ++i)
    CHECK(j1.probs(i) == doctest::Approx(j2.probs(i)).epsilon(1e-15));
}

TEST_CASE("joint_distribution rejects support mismatches and empty input") {
  const auto a = make_dist({"a", "b"}, {0.5, 0.5});
  const auto b = make_dist({"a", "z"}, {0.5, 0.5});
  const analysis::SupportDistribution parts[] = {a, b};
  CHECK_THROWS_AS(analysis::joint_distribution(parts), std::invalid_argument);
  CHECK_THROWS_AS(
      analysis::joint_distribution(std::span<const analysis::SupportDistribution>{}),
      std::invalid_argument);
}

TEST_CASE("KL of a distribution with itself is exactly zero") {
  const auto p = make_dist({"a", "b", "c"}, {0.2, 0.5, 0.3});
  CHECK(analysis::kl_divergence(p, p) == 0.0);
}

TEST_CASE("KL closed form for (1,0) vs (0.5,0.5)") {
  const auto p = make_dist({"a", "b"}, {1.0, 0.0});
  const auto q = make_dist({"a", "b"}, {0.5, 0.5});
  CHECK(analysis::kl_divergence(p, q) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("KL rejects support mismatches") {
  const auto p = make_dist({"a", "b"}, {0.4, 0.6});
  const auto q = make_dist({"a", "c"}, {0.4, 0.6});
  CHECK_THROWS_AS(analysis::kl_divergence(p, q), std::invalid_argument);
}

TEST_CASE("KL is non-negative over random distribution pairs") {
  rng::SplitMix64 gen(123);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(gen.below(16));
    std::vector<std::string> support;
    std::vector<double> pv(static_cast<std::size_t>(n)), qv(static_cast<std::size_t>(n));
    double ps = 0.0, qs = 0.0;
    for (int i = 0; i < n; ++i) {
      support.push_back("d" + std::to_string(i));
      pv[static_cast<std::size_t>(i)] = 0.01 + gen.unit();
      qv[static_cast<std::size_t>(i)] = 0.01 + gen.unit();
      ps += pv[static_cast<std::size_t>(i)];
      qs += qv[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < n; ++i) {
      pv[static_cast<std::size_t>(i)] /= ps;
      qv[static_cast<std::size_t>(i)] /= qs;
    }
    const auto p = make_dist(support, pv);
    const auto q = make_dist(support, qv);
    CHECK(analysis::kl_divergence(p, q) >= 0.0);
  }
}

TEST_CASE("distribution shift is zero when generators and ranker are BM25") {
  const corpus::Collection coll(
      {{"d0", "x y"}, {"d1", "x"}, {"d2", "y z"}, {"d3", "w"}});
  const auto index = retrievers::InvertedIndex::build(coll);
  const retrievers::Bm25Retriever bm25(coll, index, {});
  const auto q = retrievers::prepare_query({"q", "x y"}, 1 << 10, kSeed);
  const retrievers::Retriever* gens[] = {&bm25};
  const auto report =
      analysis::distribution_shift(gens, bm25, bm25, q, {}, 3, coll);
  CHECK(report.kl_joint_bm25 == 0.0);
  CHECK(report.kl_ranker_bm25 == 0.0);
  CHECK(report.delta == 0.0);
}

TEST_CASE("distribution shift excludes positives from the support") {
  const corpus::Collection coll(
      {{"d0", "x y"}, {"d1", "x"}, {"d2", "y z"}, {"d3", "x y z"}});
  const auto index = retrievers::InvertedIndex::build(coll);
  const retrievers::Bm25Retriever bm25(coll, index, {});
  const auto q = retrievers::prepare_query({"q", "x y"}, 1 << 10, kSeed);
  const retrievers::Retriever* gens[] = {&bm25};
  const auto report =
      analysis::distribution_shift(gens, bm25, bm25, q, {"d3"}, 4, coll);
  CHECK(report.support_size <= 3);
}

TEST_CASE("figure data writes and parses losslessly") {
  testutil::TempDir tmp;
  const auto path = tmp.file("fig.tsv");
  SUBCASE("empty list gives an empty file") {
    analysis::emit_figure_data({}, path);
    CHECK(testutil::read_file(path).empty());
  }
  SUBCASE("points round-trip in order") {
    const std::vector<analysis::FigurePoint> points = {
        {"bm25", 0.0, 0.398}, {"joint", 0.41, 0.4112}, {"x", -1.5, 2.0}};
    analysis::emit_figure_data(points, path);
    const auto lines = testutil::read_file(path);
    CHECK(lines.find("bm25\t0\t0.398\n") != std::string::npos);
    const auto loaded = analysis::load_figure_data(path);
    REQUIRE(loaded.size() == points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      CHECK(loaded[i].label == points[i].label);
      CHECK(loaded[i].x == points[i].x);
      CHECK(loaded[i].y == points[i].y);
    }
  }
}
