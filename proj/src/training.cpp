#include "ranklab/training.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>

#include "ranklab/parallel.hpp"
#include "ranklab/rng.hpp"

namespace ranklab::training {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0))
    throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
  if (batch_queries < 1)
    throw std::invalid_argument("TrainConfig: batch_queries must be >= 1");
  if (m_negatives < 1)
    throw std::invalid_argument("TrainConfig: m_negatives must be >= 1");
  if (top_n < 1) throw std::invalid_argument("TrainConfig: top_n must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) ||
      !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw std::invalid_argument("TrainConfig: betas must be in [0, 1)");
  if (!(adam_eps >= 0.0))
    throw std::invalid_argument("TrainConfig: adam_eps must be >= 0");
  if (!(warmup_fraction >= 0.0 && warmup_fraction <= 1.0))
    throw std::invalid_argument("TrainConfig: warmup_fraction must be in [0, 1]");
  if (!(weight_decay >= 0.0))
    throw std::invalid_argument("TrainConfig: weight_decay must be >= 0");
}

TrainConfig paper_profile() {
  TrainConfig c;
  c.learning_rate = 1e-5;
  c.epochs = 2;
  c.batch_queries = 12;
  c.m_negatives = 40;
  c.top_n = 200;
  c.warmup_fraction = 0.1;
  c.weight_decay = 0.1;
  return c;
}

std::vector<double> softmax_over_candidates(const std::vector<double>& scores) {
  if (scores.empty())
    throw std::invalid_argument("softmax_over_candidates: empty score list");
  const double max_s = *std::max_element(scores.begin(), scores.end());
  std::vector<double> probs(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    probs[i] = std::exp(scores[i] - max_s);
    sum += probs[i];
  }
  for (auto& p : probs) p /= sum;
  return probs;
}

ContrastiveResult contrastive_loss(double positive_score,
                                   const std::vector<double>& negative_scores) {
  if (negative_scores.empty())
    throw std::invalid_argument("contrastive_loss: need at least one negative");
  std::vector<double> scores;
  scores.reserve(negative_scores.size() + 1);
  scores.push_back(positive_score);
  scores.insert(scores.end(), negative_scores.begin(), negative_scores.end());
  const double max_s = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (const double s : scores) sum += std::exp(s - max_s);
  ContrastiveResult res;
  res.loss = -(positive_score - max_s) + std::log(sum);
  res.grad.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    res.grad[i] = std::exp(scores[i] - max_s) / sum;
  res.grad[0] -= 1.0;
  return res;
}

double AdamSchedule::factor(int step) const {
  if (warmup_steps > 0 && step <= warmup_steps)
    return static_cast<double>(step) / static_cast<double>(warmup_steps);
  if (total_steps <= warmup_steps) return 1.0;
  const double remaining = static_cast<double>(total_steps - step + 1) /
                           static_cast<double>(total_steps - warmup_steps);
  return std::max(0.0, remaining);
}

AdamSchedule make_schedule(const TrainConfig& cfg, int total_steps) {
  AdamSchedule s;
  s.total_steps = total_steps;
  s.warmup_steps = static_cast<int>(cfg.warmup_fraction * total_steps);
  return s;
}

void adam_step(double& param, double grad, double& moment1, double& moment2,
               int step, const TrainConfig& cfg, double lr_factor) {
  moment1 = cfg.adam_beta1 * moment1 + (1.0 - cfg.adam_beta1) * grad;
  moment2 = cfg.adam_beta2 * moment2 + (1.0 - cfg.adam_beta2) * grad * grad;
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, step);
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, step);
  const double lr = cfg.learning_rate * lr_factor;
  param -= lr * (moment1 / bc1) / (std::sqrt(moment2 / bc2) + cfg.adam_eps);
  if (cfg.weight_decay > 0.0) param -= lr * cfg.weight_decay * param;
}

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

void LossReport::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write loss report: " + path);
  std::string body;
  for (const auto& [step, loss] : step_losses) {
    body += std::to_string(step);
    body.push_back('\t');
    append_double(body, loss);
    body.push_back('\n');
  }
  body += "#final\n";
  for (std::size_t e = 0; e < epoch_means.size(); ++e) {
    body += "epoch_mean_" + std::to_string(e);
    body.push_back('\t');
    append_double(body, epoch_means[e]);
    body.push_back('\n');
  }
  for (const auto& [key, value] : final_metrics) {
    body += key;
    body.push_back('\t');
    append_double(body, value);
    body.push_back('\n');
  }
  out << body;
}

std::vector<Instance> build_instances(const TrainData& data) {
  std::vector<Instance> out;
  for (std::size_t qi = 0; qi < data.queries.size(); ++qi) {
    const auto it = data.positives.find(data.queries[qi].id);
    if (it == data.positives.end()) continue;
    for (const auto& doc_id : it->second)
      out.push_back({static_cast<std::int32_t>(qi),
                     static_cast<std::int32_t>(data.collection.ordinal_of(doc_id))});
  }
  return out;
}

std::vector<std::int32_t> RandomNegatives::draw(
    const retrievers::PreparedQuery& q, const std::set<std::string>& positives,
    int m, std::uint64_t seed) {
  const auto ids = sampling::sample_random(coll_, q.id, positives, m, seed);
  std::vector<std::int32_t> out;
  out.reserve(ids.size());
  for (const auto& id : ids)
    out.push_back(static_cast<std::int32_t>(coll_.ordinal_of(id)));
  return out;
}

PoolNegatives::PoolNegatives(const corpus::Collection& coll,
                             std::vector<sampling::NegativePool> pools)
    : coll_(coll), pools_(std::move(pools)) {
  for (std::size_t i = 0; i < pools_.size(); ++i)
    by_query_[pools_[i].query_id] = i;
}

std::vector<std::int32_t> PoolNegatives::draw(
    const retrievers::PreparedQuery& q, const std::set<std::string>& positives,
    int m, std::uint64_t seed) {
  (void)positives;  // pools are already positive-free
  const auto it = by_query_.find(q.id);
  if (it == by_query_.end())
    throw std::runtime_error("no negative pool for query " + q.id);
  const auto& pool = pools_[it->second];
  if (pool.entries.empty()) return {};
  if (pool.entries.size() < static_cast<std::size_t>(m)) ++with_replacement_;
  const auto ids = sampling::draw_negatives(pool, m, seed);
  std::vector<std::int32_t> out;
  out.reserve(ids.size());
  for (const auto& id : ids)
    out.push_back(static_cast<std::int32_t>(coll_.ordinal_of(id)));
  return out;
}

std::vector<sampling::NegativePool> build_pools(
    std::span<const retrievers::Retriever* const> generators,
    const TrainData& data, int top_n, int threads) {
  std::vector<sampling::NegativePool> pools(data.queries.size());
  static const std::set<std::string> kNoPositives;
  parallel::parallel_for(data.queries.size(), threads, [&](std::size_t qi) {
    const auto& q = data.queries[qi];
    const auto it = data.positives.find(q.id);
    const auto& pos = it == data.positives.end() ? kNoPositives : it->second;
    pools[qi] = sampling::joint_pool(generators, q, pos, top_n);
  });
  return pools;
}

namespace {

// Trainable model adapter used by the shared training loops: scoring a
// (query, docs) group, accumulating gradients into a buffer, applying Adam.
class ModelOps {
 public:
  virtual ~ModelOps() = default;
  virtual std::vector<double> scores(const retrievers::PreparedQuery& q,
                                     std::span<const std::int32_t> docs) = 0;
  virtual void accumulate(const retrievers::PreparedQuery& q,
                          std::span<const std::int32_t> docs,
                          std::span<const double> upstream) = 0;
  virtual void zero_grads() = 0;
  virtual void apply_adam(int step, const TrainConfig& cfg, double lr_factor) = 0;
};

class DenseOps : public ModelOps {
 public:
  DenseOps(retrievers::DenseModel& model, const retrievers::CollectionFeatures& feats)
      : model_(model), feats_(feats),
        grad_(Eigen::MatrixXd::Zero(model.embedding.rows(), model.embedding.cols())),
        m1_(grad_), m2_(grad_) {}

  std::vector<double> scores(const retrievers::PreparedQuery& q,
                             std::span<const std::int32_t> docs) override {
    const Eigen::VectorXd q_enc = retrievers::pool_rows(model_.embedding, q.features);
    std::vector<double> out;
    out.reserve(docs.size());
    for (const auto d : docs)
      out.push_back(q_enc.dot(retrievers::pool_rows(
          model_.embedding, feats_.docs[static_cast<std::size_t>(d)])));
    return out;
  }

  void accumulate(const retrievers::PreparedQuery& q,
                  std::span<const std::int32_t> docs,
                  std::span<const double> upstream) override {
    const Eigen::VectorXd q_enc = retrievers::pool_rows(model_.embedding, q.features);
    const double q_total = q.features.sum();
    Eigen::VectorXd d_sum = Eigen::VectorXd::Zero(model_.embedding.cols());
    for (std::size_t j = 0; j < docs.size(); ++j) {
      const auto& df = feats_.docs[static_cast<std::size_t>(docs[j])];
      const Eigen::VectorXd d_enc = retrievers::pool_rows(model_.embedding, df);
      d_sum += upstream[j] * d_enc;
      const double d_total = df.sum();
      if (d_total > 0.0) {
        const double scale = upstream[j] / d_total;
        for (const auto& e : df.entries)
          grad_.row(e.index) += (scale * e.value) * q_enc.transpose();
      }
    }
    if (q_total > 0.0) {
      for (const auto& e : q.features.entries)
        grad_.row(e.index) += (e.value / q_total) * d_sum.transpose();
    }
  }

  void zero_grads() override { grad_.setZero(); }

  void apply_adam(int step, const TrainConfig& cfg, double lr_factor) override {
    adam_step(model_.embedding, grad_, m1_, m2_, step, cfg, lr_factor);
  }

 private:
  retrievers::DenseModel& model_;
  const retrievers::CollectionFeatures& feats_;
  Eigen::MatrixXd grad_, m1_, m2_;
};

class LexOps : public ModelOps {
 public:
  LexOps(retrievers::LexModel& model, const retrievers::CollectionFeatures& feats)
      : model_(model), feats_(feats),
        grad_(Eigen::VectorXd::Zero(model.term_weight.size())),
        m1_(grad_), m2_(grad_) {}

  std::vector<double> scores(const retrievers::PreparedQuery& q,
                             std::span<const std::int32_t> docs) override {
    std::vector<double> out;
    out.reserve(docs.size());
    for (const auto d : docs)
      out.push_back(retrievers::score_lex(model_, q.features,
                                          feats_.docs[static_cast<std::size_t>(d)]));
    return out;
  }

  void accumulate(const retrievers::PreparedQuery& q,
                  std::span<const std::int32_t> docs,
                  std::span<const double> upstream) override {
    for (std::size_t j = 0; j < docs.size(); ++j) {
      const auto& df = feats_.docs[static_cast<std::size_t>(docs[j])];
      auto qi = q.features.entries.begin();
      auto di = df.entries.begin();
      while (qi != q.features.entries.end() && di != df.entries.end()) {
        if (qi->index < di->index) {
          ++qi;
        } else if (di->index < qi->index) {
          ++di;
        } else {
          const double w = model_.term_weight(qi->index);
          grad_(qi->index) += upstream[j] * 2.0 * retrievers::softplus(w) *
                              retrievers::sigmoid(w) * qi->value * di->value;
          ++qi;
          ++di;
        }
      }
    }
  }

  void zero_grads() override { grad_.setZero(); }

  void apply_adam(int step, const TrainConfig& cfg, double lr_factor) override {
    adam_step(model_.term_weight, grad_, m1_, m2_, step, cfg, lr_factor);
  }

 private:
  retrievers::LexModel& model_;
  const retrievers::CollectionFeatures& feats_;
  Eigen::VectorXd grad_, m1_, m2_;
};

class RankerOps : public ModelOps {
 public:
  RankerOps(ranker::RankerModel& model, const TrainData& data,
            const ranker::FrozenProjection& proj,
            const retrievers::InvertedIndex& index, retrievers::Bm25Params bm25)
      : model_(model), data_(data), proj_(proj), index_(index), bm25_(bm25),
        gw1_(Eigen::MatrixXd::Zero(model.w1.rows(), model.w1.cols())),
        gb1_(Eigen::VectorXd::Zero(model.b1.size())),
        gw2_(Eigen::VectorXd::Zero(model.w2.size())),
        m1w1_(gw1_), m2w1_(gw1_), m1b1_(gb1_), m2b1_(gb1_),
        m1w2_(gw2_), m2w2_(gw2_) {
    doc_proj_.resize(static_cast<Eigen::Index>(data.features.docs.size()),
                     proj.proj_dim());
    for (std::size_t ord = 0; ord < data.features.docs.size(); ++ord)
      doc_proj_.row(static_cast<Eigen::Index>(ord)) =
          proj.pool(data.features.docs[ord]).transpose();
  }

  std::vector<double> scores(const retrievers::PreparedQuery& q,
                             std::span<const std::int32_t> docs) override {
    const Eigen::MatrixXd X = features_for(q, docs);
    const Eigen::VectorXd s = ranker::ranker_score_batch(model_, X);
    return {s.data(), s.data() + s.size()};
  }

  void accumulate(const retrievers::PreparedQuery& q,
                  std::span<const std::int32_t> docs,
                  std::span<const double> upstream) override {
    const Eigen::MatrixXd X = features_for(q, docs);
    Eigen::VectorXd u(static_cast<Eigen::Index>(upstream.size()));
    for (std::size_t i = 0; i < upstream.size(); ++i)
      u(static_cast<Eigen::Index>(i)) = upstream[i];
    const auto g = ranker::ranker_grad(model_, X, u);
    gw1_ += g.w1;
    gb1_ += g.b1;
    gw2_ += g.w2;
    gb2_ += g.b2;
  }

  void zero_grads() override {
    gw1_.setZero();
    gb1_.setZero();
    gw2_.setZero();
    gb2_ = 0.0;
  }

  void apply_adam(int step, const TrainConfig& cfg, double lr_factor) override {
    adam_step(model_.w1, gw1_, m1w1_, m2w1_, step, cfg, lr_factor);
    adam_step(model_.b1, gb1_, m1b1_, m2b1_, step, cfg, lr_factor);
    adam_step(model_.w2, gw2_, m1w2_, m2w2_, step, cfg, lr_factor);
    adam_step(model_.b2, gb2_, m1b2_, m2b2_, step, cfg, lr_factor);
  }

 private:
  Eigen::MatrixXd features_for(const retrievers::PreparedQuery& q,
                               std::span<const std::int32_t> docs) const {
    const Eigen::VectorXd q_proj = proj_.pool(q.features);
    text::TokenSeq uniq = q.tokens;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    Eigen::MatrixXd X(static_cast<Eigen::Index>(docs.size()), model_.feat_dim());
    for (std::size_t j = 0; j < docs.size(); ++j) {
      const auto ord = docs[j];
      double overlap = 0.0;
      for (const auto& t : uniq)
        if (index_.term_freq(t, ord) > 0) overlap += 1.0;
      const double bm25 = retrievers::bm25_score(index_, bm25_, q.tokens, ord);
      X.row(static_cast<Eigen::Index>(j)) =
          ranker::assemble_features(
              q_proj, doc_proj_.row(ord).transpose(), overlap, bm25,
              static_cast<double>(q.tokens.size()),
              static_cast<double>(index_.doc_len(static_cast<std::size_t>(ord))))
              .transpose();
    }
    return X;
  }

  ranker::RankerModel& model_;
  const TrainData& data_;
  const ranker::FrozenProjection& proj_;
  const retrievers::InvertedIndex& index_;
  retrievers::Bm25Params bm25_;
  Eigen::MatrixXd doc_proj_;
  Eigen::MatrixXd gw1_;
  Eigen::VectorXd gb1_, gw2_;
  double gb2_ = 0.0;
  Eigen::MatrixXd m1w1_, m2w1_;
  Eigen::VectorXd m1b1_, m2b1_, m1w2_, m2w2_;
  double m1b2_ = 0.0, m2b2_ = 0.0;
};

std::uint64_t draw_seed(const TrainConfig& cfg, const std::string& query_id,
                        int epoch, std::int32_t positive_ordinal) {
  std::uint64_t s = sampling::query_seed(cfg.seed, query_id);
  s = hashing::fnv1a_u64(static_cast<std::uint64_t>(epoch), s);
  return hashing::fnv1a_u64(static_cast<std::uint64_t>(positive_ordinal), s);
}

void run_contrastive(ModelOps& ops, const TrainData& data,
                     NegativeSource& negatives, const TrainConfig& cfg,
                     LossReport* report) {
  cfg.validate();
  const auto instances = build_instances(data);
  if (instances.empty() || cfg.epochs == 0) return;
  const int n = static_cast<int>(instances.size());
  const int steps_per_epoch = (n + cfg.batch_queries - 1) / cfg.batch_queries;
  const auto sched = make_schedule(cfg, cfg.epochs * steps_per_epoch);
  int step = 0;
  int skipped = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<int> order(instances.size());
    std::iota(order.begin(), order.end(), 0);
    rng::SplitMix64 gen(rng::derive_seed(cfg.seed, "epoch-order",
                                         static_cast<std::uint64_t>(epoch)));
    rng::shuffle(order, gen);
    double epoch_sum = 0.0;
    int epoch_batches = 0;
    for (int lo = 0; lo < n; lo += cfg.batch_queries) {
      const int hi = std::min(n, lo + cfg.batch_queries);
      const double inv_batch = 1.0 / static_cast<double>(hi - lo);
      ops.zero_grads();
      double batch_loss = 0.0;
      for (int i = lo; i < hi; ++i) {
        const auto& inst = instances[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
        const auto& q = data.queries[static_cast<std::size_t>(inst.query_idx)];
        const auto& pos_set = data.positives.at(q.id);
        const auto negs = negatives.draw(
            q, pos_set, cfg.m_negatives,
            draw_seed(cfg, q.id, epoch, inst.positive_ordinal));
        if (negs.empty()) {
          ++skipped;
          continue;
        }
        std::vector<std::int32_t> docs;
        docs.reserve(negs.size() + 1);
        docs.push_back(inst.positive_ordinal);
        docs.insert(docs.end(), negs.begin(), negs.end());
        const auto s = ops.scores(q, docs);
        const auto res = contrastive_loss(
            s[0], std::vector<double>(s.begin() + 1, s.end()));
        std::vector<double> upstream(res.grad.size());
        for (std::size_t j = 0; j < res.grad.size(); ++j)
          upstream[j] = res.grad[j] * inv_batch;
        ops.accumulate(q, docs, upstream);
        batch_loss += res.loss;
      }
      ++step;
      ops.apply_adam(step, cfg, sched.factor(step));
      const double mean_loss = batch_loss * inv_batch;
      epoch_sum += mean_loss;
      ++epoch_batches;
      if (report) report->step_losses.emplace_back(step, mean_loss);
    }
    if (report && epoch_batches > 0)
      report->epoch_means.push_back(epoch_sum / epoch_batches);
  }
  if (report) {
    if (!report->epoch_means.empty())
      report->final_metrics["final_epoch_mean_loss"] = report->epoch_means.back();
    report->final_metrics["skipped_instances"] = skipped;
    report->final_metrics["negatives_with_replacement"] =
        negatives.with_replacement_draws();
  }
}

double forward_kl(const Eigen::VectorXd& teacher, const std::vector<double>& student_probs) {
  double kl = 0.0;
  for (Eigen::Index j = 0; j < teacher.size(); ++j) {
    const double t = teacher(j);
    if (t > 0.0) kl += t * (std::log(t) - std::log(student_probs[static_cast<std::size_t>(j)]));
  }
  return kl;
}

void run_distillation(ModelOps& ops, const TrainData& data,
                      const DistillSet& set, const TrainConfig& cfg,
                      const DistillOptions& opts, LossReport* report) {
  cfg.validate();
  std::vector<int> usable;
  for (std::size_t i = 0; i < set.instances.size(); ++i)
    if (set.candidates[i].size() >= 2) usable.push_back(static_cast<int>(i));
  if (usable.empty()) return;

  const auto mean_kl_now = [&]() {
    double total = 0.0;
    for (const int i : usable) {
      const auto& q = data.queries[static_cast<std::size_t>(set.instances[static_cast<std::size_t>(i)].query_idx)];
      const auto s = ops.scores(q, set.candidates[static_cast<std::size_t>(i)]);
      total += forward_kl(set.teacher_probs[static_cast<std::size_t>(i)],
                          softmax_over_candidates(s));
    }
    return total / static_cast<double>(usable.size());
  };

  const double kl_initial = mean_kl_now();
  const int n = static_cast<int>(usable.size());
  const int steps_per_epoch = (n + cfg.batch_queries - 1) / cfg.batch_queries;
  const auto sched = make_schedule(cfg, cfg.epochs * steps_per_epoch);
  int step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<int> order = usable;
    rng::SplitMix64 gen(rng::derive_seed(cfg.seed, "distill-order",
                                         static_cast<std::uint64_t>(epoch)));
    rng::shuffle(order, gen);
    double epoch_sum = 0.0;
    int epoch_batches = 0;
    for (int lo = 0; lo < n; lo += cfg.batch_queries) {
      const int hi = std::min(n, lo + cfg.batch_queries);
      const double inv_batch = 1.0 / static_cast<double>(hi - lo);
      ops.zero_grads();
      double batch_loss = 0.0;
      for (int i = lo; i < hi; ++i) {
        const auto idx = static_cast<std::size_t>(order[static_cast<std::size_t>(i)]);
        const auto& q = data.queries[static_cast<std::size_t>(set.instances[idx].query_idx)];
        const auto& docs = set.candidates[idx];
        const auto& t = set.teacher_probs[idx];
        const auto s = ops.scores(q, docs);
        const auto p = softmax_over_candidates(s);
        std::vector<double> upstream(p.size());
        double loss = 0.0;
        if (!opts.reverse_kl) {
          loss = forward_kl(t, p);
          for (std::size_t j = 0; j < p.size(); ++j)
            upstream[j] = (p[j] - t(static_cast<Eigen::Index>(j))) * inv_batch;
        } else {
          for (std::size_t j = 0; j < p.size(); ++j)
            loss += p[j] * (std::log(p[j]) - std::log(t(static_cast<Eigen::Index>(j))));
          for (std::size_t j = 0; j < p.size(); ++j)
            upstream[j] = p[j] *
                          (std::log(p[j]) - std::log(t(static_cast<Eigen::Index>(j))) - loss) *
                          inv_batch;
        }
        ops.accumulate(q, docs, upstream);
        batch_loss += loss;
      }
      ++step;
      ops.apply_adam(step, cfg, sched.factor(step));
      const double mean_loss = batch_loss * inv_batch;
      epoch_sum += mean_loss;
      ++epoch_batches;
      if (report) report->step_losses.emplace_back(step, mean_loss);
    }
    if (report && epoch_batches > 0)
      report->epoch_means.push_back(epoch_sum / epoch_batches);
  }
  if (report) {
    report->final_metrics["kl_initial"] = kl_initial;
    report->final_metrics["kl_final"] = mean_kl_now();
  }
}

}  // namespace

retrievers::DenseModel train_dense_retriever(retrievers::DenseModel model,
                                             const TrainData& data,
                                             NegativeSource& negatives,
                                             const TrainConfig& cfg,
                                             LossReport* report) {
  DenseOps ops(model, data.features);
  run_contrastive(ops, data, negatives, cfg, report);
  return model;
}

retrievers::LexModel train_lex_retriever(retrievers::LexModel model,
                                         const TrainData& data,
                                         NegativeSource& negatives,
                                         const TrainConfig& cfg,
                                         LossReport* report) {
  LexOps ops(model, data.features);
  run_contrastive(ops, data, negatives, cfg, report);
  return model;
}

ranker::RankerModel train_ranker_model(ranker::RankerModel model,
                                       const TrainData& data,
                                       const ranker::FrozenProjection& proj,
                                       const retrievers::InvertedIndex& index,
                                       retrievers::Bm25Params bm25,
                                       NegativeSource& negatives,
                                       const TrainConfig& cfg,
                                       LossReport* report) {
  RankerOps ops(model, data, proj, index, bm25);
  run_contrastive(ops, data, negatives, cfg, report);
  return model;
}

DistillSet build_distill_set(const TrainData& data,
                             const retrievers::PairScorer& teacher,
                             NegativeSource& negatives,
                             const DistillOptions& opts, std::uint64_t seed,
                             std::vector<std::string>* warnings) {
  DistillSet set;
  set.instances = build_instances(data);
  set.candidates.resize(set.instances.size());
  set.teacher_probs.resize(set.instances.size());
  for (std::size_t i = 0; i < set.instances.size(); ++i) {
    const auto& inst = set.instances[i];
    const auto& q = data.queries[static_cast<std::size_t>(inst.query_idx)];
    const auto& pos_set = data.positives.at(q.id);
    std::uint64_t s = sampling::query_seed(seed, q.id);
    s = hashing::fnv1a(std::string_view{"distill"}, s);
    s = hashing::fnv1a_u64(static_cast<std::uint64_t>(inst.positive_ordinal), s);
    const auto negs = negatives.draw(q, pos_set, opts.n_negatives, s);
    if (negs.empty()) {
      if (warnings)
        warnings->push_back("distill: skipping query " + q.id +
                            " (candidate list smaller than 2)");
      continue;
    }
    auto& docs = set.candidates[i];
    docs.reserve(negs.size() + 1);
    docs.push_back(inst.positive_ordinal);
    docs.insert(docs.end(), negs.begin(), negs.end());
    std::vector<double> ts;
    ts.reserve(docs.size());
    for (const auto d : docs) ts.push_back(teacher.score(q, d));
    const auto probs = softmax_over_candidates(ts);
    Eigen::VectorXd t(static_cast<Eigen::Index>(probs.size()));
    for (std::size_t j = 0; j < probs.size(); ++j)
      t(static_cast<Eigen::Index>(j)) = probs[j];
    set.teacher_probs[i] = std::move(t);
  }
  return set;
}

retrievers::DenseModel distill_dense(retrievers::DenseModel student,
                                     const TrainData& data,
                                     const DistillSet& set,
                                     const TrainConfig& cfg,
                                     const DistillOptions& opts,
                                     LossReport* report) {
  DenseOps ops(student, data.features);
  run_distillation(ops, data, set, cfg, opts, report);
  return student;
}

retrievers::LexModel distill_lex(retrievers::LexModel student,
                                 const TrainData& data, const DistillSet& set,
                                 const TrainConfig& cfg,
                                 const DistillOptions& opts,
                                 LossReport* report) {
  LexOps ops(student, data.features);
  run_distillation(ops, data, set, cfg, opts, report);
  return student;
}

namespace {

template <typename ScoreFn>
double mean_kl_impl(ScoreFn&& score, const TrainData& data, const DistillSet& set) {
  double total = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < set.instances.size(); ++i) {
    if (set.candidates[i].size() < 2) continue;
    const auto& q = data.queries[static_cast<std::size_t>(set.instances[i].query_idx)];
    std::vector<double> s;
    s.reserve(set.candidates[i].size());
    for (const auto d : set.candidates[i]) s.push_back(score(q, d));
    total += forward_kl(set.teacher_probs[i], softmax_over_candidates(s));
    ++count;
  }
  return count == 0 ? 0.0 : total / count;
}

}  // namespace

double mean_distill_kl(const retrievers::DenseModel& student,
                       const TrainData& data, const DistillSet& set) {
  return mean_kl_impl(
      [&](const retrievers::PreparedQuery& q, std::int32_t d) {
        return retrievers::pool_rows(student.embedding, q.features)
            .dot(retrievers::pool_rows(student.embedding,
                                       data.features.docs[static_cast<std::size_t>(d)]));
      },
      data, set);
}

double mean_distill_kl(const retrievers::LexModel& student,
                       const TrainData& data, const DistillSet& set) {
  return mean_kl_impl(
      [&](const retrievers::PreparedQuery& q, std::int32_t d) {
        return retrievers::score_lex(student, q.features,
                                     data.features.docs[static_cast<std::size_t>(d)]);
      },
      data, set);
}

}  // namespace ranklab::training
