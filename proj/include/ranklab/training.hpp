#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ranklab/ranker.hpp"
#include "ranklab/retrievers.hpp"
#include "ranklab/sampling.hpp"

namespace ranklab::training {

struct TrainConfig {
  double learning_rate = 1e-2;
  int epochs = 5;
  int batch_queries = 16;
  int m_negatives = 8;
  int top_n = 50;
  std::uint64_t seed = 64;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double warmup_fraction = 0.1;
  double weight_decay = 0.0;

  void validate() const;  // throws on out-of-range fields
};

// Hyperparameters tuned for PLM-scale encoders, kept for reference runs; the
// defaults above are sized for the models in this repo.
TrainConfig paper_profile();

// Numerically stable softmax; probabilities sum to 1 within 1e-12.
std::vector<double> softmax_over_candidates(const std::vector<double>& scores);

struct ContrastiveResult {
  double loss = 0.0;
  // d(loss)/d(score) over [positive, negatives...].
  std::vector<double> grad;
};

// loss = -log softmax(positive | positive + negatives)
ContrastiveResult contrastive_loss(double positive_score,
                                   const std::vector<double>& negative_scores);

// Linear warmup to 1 over warmup_steps, then linear decay to 0 at
// total_steps. `step` is 1-based.
struct AdamSchedule {
  int warmup_steps = 0;
  int total_steps = 0;
  double factor(int step) const;
};

AdamSchedule make_schedule(const TrainConfig& cfg, int total_steps);

// Standard Adam with bias correction and decoupled weight decay; the
// schedule factor scales the effective learning rate.
template <typename T>
void adam_step(T& param, const T& grad, T& moment1, T& moment2, int step,
               const TrainConfig& cfg, double lr_factor) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols())
    throw std::invalid_argument("adam_step: parameter/gradient shape mismatch");
  moment1 = cfg.adam_beta1 * moment1 + (1.0 - cfg.adam_beta1) * grad;
  moment2.array() = cfg.adam_beta2 * moment2.array() +
                    (1.0 - cfg.adam_beta2) * grad.array().square();
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, step);
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, step);
  const double lr = cfg.learning_rate * lr_factor;
  param.array() -= lr * (moment1.array() / bc1) /
                   ((moment2.array() / bc2).sqrt() + cfg.adam_eps);
  if (cfg.weight_decay > 0.0) param.array() -= lr * cfg.weight_decay * param.array();
}

void adam_step(double& param, double grad, double& moment1, double& moment2,
               int step, const TrainConfig& cfg, double lr_factor);

struct LossReport {
  std::vector<std::pair<int, double>> step_losses;  // (step, mean batch loss)
  std::vector<double> epoch_means;
  std::map<std::string, double> final_metrics;

  void write(const std::string& path) const;
};

// Everything a training run reads; all referenced objects stay frozen.
struct TrainData {
  const corpus::Collection& collection;
  const retrievers::CollectionFeatures& features;
  const std::vector<retrievers::PreparedQuery>& queries;
  const std::map<std::string, std::set<std::string>>& positives;
};

// One (query, positive) training instance.
struct Instance {
  std::int32_t query_idx;
  std::int32_t positive_ordinal;
};

// Deterministic: query order, positives in sorted id order. Queries without
// positives yield no instances.
std::vector<Instance> build_instances(const TrainData& data);

// Supplies m negative doc ordinals for one (query, positive, epoch) draw.
class NegativeSource {
 public:
  virtual ~NegativeSource() = default;
  virtual std::vector<std::int32_t> draw(const retrievers::PreparedQuery& q,
                                         const std::set<std::string>& positives,
                                         int m, std::uint64_t seed) = 0;
  // Number of draws that had to sample with replacement (pool smaller than m).
  int with_replacement_draws() const { return with_replacement_; }

 protected:
  int with_replacement_ = 0;
};

// Uniform negatives over the whole collection minus positives.
class RandomNegatives : public NegativeSource {
 public:
  explicit RandomNegatives(const corpus::Collection& coll) : coll_(coll) {}
  std::vector<std::int32_t> draw(const retrievers::PreparedQuery& q,
                                 const std::set<std::string>& positives, int m,
                                 std::uint64_t seed) override;

 private:
  const corpus::Collection& coll_;
};

// Negatives drawn uniformly from precomputed per-query pools.
class PoolNegatives : public NegativeSource {
 public:
  PoolNegatives(const corpus::Collection& coll,
                std::vector<sampling::NegativePool> pools);
  std::vector<std::int32_t> draw(const retrievers::PreparedQuery& q,
                                 const std::set<std::string>& positives, int m,
                                 std::uint64_t seed) override;
  const std::vector<sampling::NegativePool>& pools() const { return pools_; }

 private:
  const corpus::Collection& coll_;
  std::vector<sampling::NegativePool> pools_;
  std::map<std::string, std::size_t> by_query_;
};

// Joint pools (capped per-generator top lists, no dedup) for every query in
// the training data, aligned with data.queries.
std::vector<sampling::NegativePool> build_pools(
    std::span<const retrievers::Retriever* const> generators,
    const TrainData& data, int top_n, int threads = 1);

retrievers::DenseModel train_dense_retriever(retrievers::DenseModel model,
                                             const TrainData& data,
                                             NegativeSource& negatives,
                                             const TrainConfig& cfg,
                                             LossReport* report = nullptr);

retrievers::LexModel train_lex_retriever(retrievers::LexModel model,
                                         const TrainData& data,
                                         NegativeSource& negatives,
                                         const TrainConfig& cfg,
                                         LossReport* report = nullptr);

// Contrastive training of the interaction-feature ranker; the generators
// behind `negatives` are never touched.
ranker::RankerModel train_ranker_model(ranker::RankerModel model,
                                       const TrainData& data,
                                       const ranker::FrozenProjection& proj,
                                       const retrievers::InvertedIndex& index,
                                       retrievers::Bm25Params bm25,
                                       NegativeSource& negatives,
                                       const TrainConfig& cfg,
                                       LossReport* report = nullptr);

struct DistillOptions {
  int n_negatives = 10;
  // false: KL(teacher || student), the distillation default;
  // true:  KL(student || teacher).
  bool reverse_kl = false;
};

// Fixed per-instance candidate lists ([positive, negatives...]) and the
// teacher's softmax distribution over each.
struct DistillSet {
  std::vector<Instance> instances;
  std::vector<std::vector<std::int32_t>> candidates;
  std::vector<Eigen::VectorXd> teacher_probs;
};

// Instances whose candidate list would be smaller than 2 are skipped and
// reported through `warnings`.
DistillSet build_distill_set(const TrainData& data,
                             const retrievers::PairScorer& teacher,
                             NegativeSource& negatives,
                             const DistillOptions& opts, std::uint64_t seed,
                             std::vector<std::string>* warnings = nullptr);

retrievers::DenseModel distill_dense(retrievers::DenseModel student,
                                     const TrainData& data,
                                     const DistillSet& set,
                                     const TrainConfig& cfg,
                                     const DistillOptions& opts,
                                     LossReport* report = nullptr);

retrievers::LexModel distill_lex(retrievers::LexModel student,
                                 const TrainData& data, const DistillSet& set,
                                 const TrainConfig& cfg,
                                 const DistillOptions& opts,
                                 LossReport* report = nullptr);

// Mean per-instance KL(teacher || student) under the current student.
double mean_distill_kl(const retrievers::DenseModel& student,
                       const TrainData& data, const DistillSet& set);
double mean_distill_kl(const retrievers::LexModel& student,
                       const TrainData& data, const DistillSet& set);

}  // namespace ranklab::training
