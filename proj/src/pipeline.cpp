#include "ranklab/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ranklab/checkpoint.hpp"
#include "ranklab/parallel.hpp"
#include "ranklab/rng.hpp"

namespace fs = std::filesystem;

namespace ranklab::pipeline {

config::KeyValues default_config() {
  config::KeyValues kv;
  kv.set("seed", "64");
  kv.set("threads", "1");
  kv.set("topics", "5");
  kv.set("docs_per_topic", "1000");
  kv.set("queries", "700");
  kv.set("train_queries", "500");
  kv.set("vocab", "1500");
  kv.set("noise_rate", "0.35");
  kv.set("dim_hash", "32768");
  kv.set("dim_emb", "64");
  kv.set("proj_dim", "16");
  kv.set("hidden", "32");
  kv.set("bm25_k1", "0.9");
  kv.set("bm25_b", "0.4");
  kv.set("learning_rate", "0.01");
  kv.set("epochs", "5");
  kv.set("batch_queries", "16");
  kv.set("m_negatives", "8");
  kv.set("top_n", "50");
  kv.set("adam_beta1", "0.9");
  kv.set("adam_beta2", "0.999");
  kv.set("adam_eps", "1e-8");
  kv.set("warmup_fraction", "0.1");
  kv.set("weight_decay", "0");
  kv.set("distill_learning_rate", "0.02");
  kv.set("distill_epochs", "6");
  kv.set("distill_n_negatives", "10");
  kv.set("distill_reverse_kl", "0");
  kv.set("distill_student", "den_hn");
  kv.set("generator_set", "bm25,den_hn,lex_hn");
  kv.set("rerank_depth", "1000");
  kv.set("retrieval_depth", "50");
  kv.set("analysis_top_n", "50");
  kv.set("eval_ks", "10,50");
  return kv;
}

training::TrainConfig train_config_from(const config::KeyValues& cfg,
                                        const std::string& prefix) {
  training::TrainConfig base;
  const auto key = [&](const char* k) { return prefix + k; };
  const auto fall = [&](const char* k, double d) {
    // Prefixed profiles fall back to the unprefixed key, then the default.
    if (cfg.has(key(k))) return cfg.get_double(key(k), d);
    return cfg.get_double(k, d);
  };
  const auto fall_int = [&](const char* k, std::int64_t d) {
    if (cfg.has(key(k))) return cfg.get_int(key(k), d);
    return cfg.get_int(k, d);
  };
  base.learning_rate = fall("learning_rate", base.learning_rate);
  base.epochs = static_cast<int>(fall_int("epochs", base.epochs));
  base.batch_queries = static_cast<int>(fall_int("batch_queries", base.batch_queries));
  base.m_negatives = static_cast<int>(fall_int("m_negatives", base.m_negatives));
  base.top_n = static_cast<int>(fall_int("top_n", base.top_n));
  base.seed = cfg.get_u64("seed", base.seed);
  base.adam_beta1 = fall("adam_beta1", base.adam_beta1);
  base.adam_beta2 = fall("adam_beta2", base.adam_beta2);
  base.adam_eps = fall("adam_eps", base.adam_eps);
  base.warmup_fraction = fall("warmup_fraction", base.warmup_fraction);
  base.weight_decay = fall("weight_decay", base.weight_decay);
  base.validate();
  return base;
}

std::vector<retrievers::PreparedQuery> prepare_queries(
    const std::vector<corpus::Query>& queries, std::int32_t dim,
    std::uint64_t hash_seed) {
  std::vector<retrievers::PreparedQuery> out;
  out.reserve(queries.size());
  for (const auto& q : queries)
    out.push_back(retrievers::prepare_query(q, dim, hash_seed));
  return out;
}

std::unique_ptr<retrievers::Retriever> retriever_from_checkpoint(
    const std::string& name, const std::string& path,
    const corpus::Collection& coll, const retrievers::CollectionFeatures& feats) {
  switch (checkpoint::detect_kind(path)) {
    case checkpoint::ModelKind::dense:
      return std::make_unique<retrievers::DenseRetriever>(
          name, coll, feats, checkpoint::load_dense(path));
    case checkpoint::ModelKind::lexicon:
      return std::make_unique<retrievers::LexRetriever>(
          name, coll, feats, checkpoint::load_lex(path));
    case checkpoint::ModelKind::ranker:
      throw std::runtime_error(path + ": ranker checkpoint used where a retriever is required");
  }
  throw std::runtime_error(path + ": unknown checkpoint kind");
}

void write_metrics_file(std::span<const eval::RunList> runs,
                        std::span<const corpus::Judgment> judgments,
                        const std::vector<int>& ks, const std::string& path,
                        std::vector<std::string>* warnings) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write metrics file: " + path);
  for (const int k : ks) {
    out << eval::format_metric_line("mrr", k, eval::mrr_at_k(runs, judgments, k, warnings)) << '\n';
    out << eval::format_metric_line("recall", k, eval::recall_at_k(runs, judgments, k, warnings)) << '\n';
    out << eval::format_metric_line("ndcg", k, eval::ndcg_at_k(runs, judgments, k, warnings)) << '\n';
  }
}

std::vector<int> parse_k_list(const std::string& spec) {
  std::vector<int> ks;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    ks.push_back(std::stoi(item));
  }
  if (ks.empty()) throw std::invalid_argument("empty k list: " + spec);
  return ks;
}

std::vector<std::string> split_list(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

CorpusPaths CorpusPaths::in_dir(const std::string& dir) {
  CorpusPaths p;
  p.collection = dir + "/collection.tsv";
  p.queries_train = dir + "/queries.train.tsv";
  p.queries_dev = dir + "/queries.dev.tsv";
  p.qrels_train = dir + "/qrels.train.txt";
  p.qrels_dev = dir + "/qrels.dev.txt";
  return p;
}

std::vector<std::string> run_synth(const config::KeyValues& cfg,
                                   const std::string& out_dir) {
  corpus::SyntheticSpec spec;
  spec.n_topics = static_cast<int>(cfg.get_int("topics", spec.n_topics));
  spec.docs_per_topic = static_cast<int>(cfg.get_int("docs_per_topic", spec.docs_per_topic));
  spec.n_queries = static_cast<int>(cfg.get_int("queries", spec.n_queries));
  spec.vocab_size = static_cast<int>(cfg.get_int("vocab", spec.vocab_size));
  spec.noise_rate = cfg.get_double("noise_rate", spec.noise_rate);
  spec.seed = cfg.get_u64("seed", spec.seed);
  const int n_train = static_cast<int>(cfg.get_int("train_queries", 500));
  if (n_train < 1 || n_train >= spec.n_queries)
    throw std::invalid_argument(
        "train_queries must be in [1, queries), got " + std::to_string(n_train));

  const auto data = corpus::generate_synthetic(spec);
  fs::create_directories(out_dir);
  const auto paths = CorpusPaths::in_dir(out_dir);

  corpus::write_collection(data.collection, paths.collection);
  std::vector<corpus::Query> train_q(data.queries.begin(),
                                     data.queries.begin() + n_train);
  std::vector<corpus::Query> dev_q(data.queries.begin() + n_train,
                                   data.queries.end());
  corpus::write_queries(train_q, paths.queries_train);
  corpus::write_queries(dev_q, paths.queries_dev);
  std::set<std::string> train_ids;
  for (const auto& q : train_q) train_ids.insert(q.id);
  std::vector<corpus::Judgment> train_j, dev_j;
  for (const auto& j : data.judgments)
    (train_ids.count(j.query_id) ? train_j : dev_j).push_back(j);
  corpus::write_qrels(train_j, paths.qrels_train);
  corpus::write_qrels(dev_j, paths.qrels_dev);

  manifest::RunManifest mf;
  mf.command = "synth";
  mf.config = cfg.values();
  mf.seed = spec.seed;
  const std::vector<std::string> files = {paths.collection, paths.queries_train,
                                          paths.queries_dev, paths.qrels_train,
                                          paths.qrels_dev};
  for (const auto& f : files) mf.add_output(f);
  mf.save(out_dir + "/manifest.json");
  auto all = files;
  all.push_back(out_dir + "/manifest.json");
  return all;
}

namespace {

// Stage bookkeeping for resumable runs: a stage is skipped when its recorded
// input checksums match the current inputs and every output file still
// carries the recorded checksum.
class StageRunner {
 public:
  StageRunner(const std::string& state_path, const std::string& config_fingerprint,
              std::ostream& log)
      : state_path_(state_path), fingerprint_(config_fingerprint), log_(log) {
    std::ifstream in(state_path_, std::ios::binary);
    if (in) {
      try {
        in >> state_;
      } catch (...) {
        state_ = nlohmann::json::object();
      }
    }
    if (!state_.is_object()) state_ = nlohmann::json::object();
  }

  template <typename Fn>
  bool run(const std::string& name, const std::vector<std::string>& inputs,
           const std::vector<std::string>& outputs, Fn&& fn) {
    nlohmann::json in_sums = nlohmann::json::object();
    in_sums["__config"] = fingerprint_;
    for (const auto& p : inputs) in_sums[p] = manifest::file_checksum_hex(p);
    if (up_to_date(name, in_sums, outputs)) {
      log_ << "stage " << name << ": up to date, skipped\n";
      skipped_.push_back(name);
      return false;
    }
    log_ << "stage " << name << ": running\n";
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fn();
    } catch (const std::exception& e) {
      throw std::runtime_error("stage " + name + " failed: " + e.what());
    }
    const auto t1 = std::chrono::steady_clock::now();
    timings_.emplace_back(name, std::chrono::duration<double>(t1 - t0).count());
    nlohmann::json out_sums = nlohmann::json::object();
    for (const auto& p : outputs) out_sums[p] = manifest::file_checksum_hex(p);
    state_[name] = {{"inputs", in_sums}, {"outputs", out_sums}};
    save_state();
    return true;
  }

  const std::vector<std::string>& skipped() const { return skipped_; }

  void write_timings(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    char buf[64];
    for (const auto& [name, seconds] : timings_) {
      std::snprintf(buf, sizeof(buf), "%.3f", seconds);
      out << name << '\t' << buf << '\n';
    }
  }

 private:
  bool up_to_date(const std::string& name, const nlohmann::json& in_sums,
                  const std::vector<std::string>& outputs) const {
    if (!state_.contains(name)) return false;
    const auto& rec = state_[name];
    if (!rec.contains("inputs") || rec["inputs"] != in_sums) return false;
    if (!rec.contains("outputs")) return false;
    for (const auto& p : outputs) {
      if (!rec["outputs"].contains(p)) return false;
      if (!fs::exists(p)) return false;
      if (manifest::file_checksum_hex(p) != rec["outputs"][p].get<std::string>())
        return false;
    }
    return true;
  }

  void save_state() const {
    std::ofstream out(state_path_, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write state file: " + state_path_);
    out << state_.dump(2) << '\n';
  }

  std::string state_path_;
  std::string fingerprint_;
  std::ostream& log_;
  nlohmann::json state_;
  std::vector<std::string> skipped_;
  std::vector<std::pair<std::string, double>> timings_;
};

double read_metric(const std::string& path, const std::string& key) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open metrics file: " + path);
  std::string line;
  while (std::getline(in, line)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) continue;
    if (line.substr(0, tab) == key) return std::stod(line.substr(tab + 1));
  }
  throw std::runtime_error(path + ": metric " + key + " not found");
}

}  // namespace

PipelineResult run_pipeline(const config::KeyValues& cfg,
                            const CorpusPaths& corpus_paths,
                            const std::string& out_dir, std::ostream& log) {
  PipelineResult result;
  fs::create_directories(out_dir);
  fs::create_directories(out_dir + "/models");
  fs::create_directories(out_dir + "/reports");
  fs::create_directories(out_dir + "/runs");
  fs::create_directories(out_dir + "/metrics");
  fs::create_directories(out_dir + "/analysis");

  const int threads = static_cast<int>(cfg.get_int("threads", 1));
  const auto dim_hash = static_cast<std::int32_t>(cfg.get_int("dim_hash", 32768));
  const auto dim_emb = static_cast<std::int32_t>(cfg.get_int("dim_emb", 64));
  const auto proj_dim = static_cast<std::int32_t>(cfg.get_int("proj_dim", 16));
  const auto hidden = static_cast<std::int32_t>(cfg.get_int("hidden", 32));
  const retrievers::Bm25Params bm25{cfg.get_double("bm25_k1", 0.9),
                                    cfg.get_double("bm25_b", 0.4)};
  const auto seed = cfg.get_u64("seed", 64);
  const auto train_cfg = train_config_from(cfg);
  const auto rerank_depth = static_cast<int>(cfg.get_int("rerank_depth", 1000));
  const auto retrieval_depth = static_cast<int>(cfg.get_int("retrieval_depth", 50));
  const auto analysis_top_n = static_cast<int>(cfg.get_int("analysis_top_n", 50));
  const auto ks = parse_k_list(cfg.get_or("eval_ks", "10,50"));
  const auto generator_set = split_list(cfg.get_or("generator_set", "bm25,den_hn,lex_hn"));
  if (generator_set.empty())
    throw std::invalid_argument("pipeline: empty generator_set");

  // Load the corpus once; everything downstream shares these objects.
  const auto collection = corpus::load_collection(corpus_paths.collection);
  const auto train_queries_raw = corpus::load_queries(corpus_paths.queries_train);
  const auto dev_queries_raw = corpus::load_queries(corpus_paths.queries_dev);
  const auto qrels_train = corpus::load_qrels(corpus_paths.qrels_train);
  const auto qrels_dev = corpus::load_qrels(corpus_paths.qrels_dev);
  const auto training_set =
      corpus::make_training_set(train_queries_raw, qrels_train, collection);
  const auto features = retrievers::CollectionFeatures::build(collection, dim_hash, kHashSeed);
  const auto train_queries = prepare_queries(train_queries_raw, dim_hash, kHashSeed);
  const auto dev_queries = prepare_queries(dev_queries_raw, dim_hash, kHashSeed);
  const training::TrainData data{collection, features, train_queries,
                                 training_set.positives};

  const std::string index_path = out_dir + "/index.txt";
  const std::vector<std::string> corpus_files = {
      corpus_paths.collection, corpus_paths.queries_train,
      corpus_paths.queries_dev, corpus_paths.qrels_train, corpus_paths.qrels_dev};

  // Thread count cannot change results, so it stays out of the fingerprint.
  config::KeyValues fingerprint_cfg = cfg;
  fingerprint_cfg.set("threads", "");
  StageRunner stages(out_dir + "/pipeline_state.json",
                     manifest::checksum_hex(hashing::fnv1a(fingerprint_cfg.serialize())),
                     log);

  stages.run("index", {corpus_paths.collection}, {index_path}, [&] {
    retrievers::InvertedIndex::build(collection).save(index_path);
  });
  const auto index = retrievers::InvertedIndex::load(index_path);
  const retrievers::Bm25Retriever bm25_retriever(collection, index, bm25);

  const auto model_path = [&](const std::string& name) {
    return out_dir + "/models/" + name + ".tsv";
  };
  const auto report_path = [&](const std::string& name) {
    return out_dir + "/reports/" + name + "_loss.tsv";
  };

  // Staged retriever training: *_bn learn from BM25 pools, *_hn continue
  // from the *_bn weights on pools sampled by the *_bn model itself.
  const auto train_stage_retriever = [&](const std::string& name, bool lexical,
                                         const std::string& parent) {
    std::vector<std::string> inputs = corpus_files;
    inputs.push_back(index_path);
    if (!parent.empty()) inputs.push_back(model_path(parent));
    stages.run(name, inputs, {model_path(name), report_path(name)}, [&] {
      std::unique_ptr<retrievers::Retriever> generator;
      if (parent.empty()) {
        generator = std::make_unique<retrievers::Bm25Retriever>(collection, index, bm25);
      } else {
        generator = retriever_from_checkpoint(parent, model_path(parent),
                                              collection, features);
      }
      const retrievers::Retriever* gens[] = {generator.get()};
      auto pools = training::build_pools(gens, data, train_cfg.top_n, threads);
      training::PoolNegatives negatives(collection, std::move(pools));
      training::LossReport report;
      if (lexical) {
        auto model = parent.empty()
                         ? retrievers::LexModel::init(dim_hash)
                         : checkpoint::load_lex(model_path(parent));
        model = training::train_lex_retriever(std::move(model), data, negatives,
                                              train_cfg, &report);
        checkpoint::save_lex(model, model_path(name));
      } else {
        auto model = parent.empty()
                         ? retrievers::DenseModel::init(dim_hash, dim_emb,
                                                        rng::derive_seed(seed, name))
                         : checkpoint::load_dense(model_path(parent));
        model = training::train_dense_retriever(std::move(model), data, negatives,
                                                train_cfg, &report);
        checkpoint::save_dense(model, model_path(name));
      }
      report.write(report_path(name));
    });
  };

  train_stage_retriever("den_bn", false, "");
  train_stage_retriever("lex_bn", true, "");
  train_stage_retriever("den_hn", false, "den_bn");
  train_stage_retriever("lex_hn", true, "lex_bn");

  // Resolve the configured generator set against the staged models.
  const auto make_generators = [&]() {
    std::vector<std::unique_ptr<retrievers::Retriever>> owned;
    for (const auto& name : generator_set) {
      if (name == "bm25") continue;
      if (name != "den_bn" && name != "den_hn" && name != "lex_bn" && name != "lex_hn")
        throw std::invalid_argument("unknown generator name: " + name);
      owned.push_back(retriever_from_checkpoint(name, model_path(name),
                                                collection, features));
    }
    return owned;
  };

  std::string set_label;
  for (const auto& name : generator_set)
    set_label += (set_label.empty() ? "" : "-") + name;
  const std::string ranker_name = "ranker_" + set_label;
  const ranker::FrozenProjection projection =
      ranker::FrozenProjection::make(dim_hash, proj_dim, kHashSeed);

  {
    std::vector<std::string> inputs = corpus_files;
    inputs.push_back(index_path);
    for (const auto& name : generator_set)
      if (name != "bm25") inputs.push_back(model_path(name));
    stages.run(ranker_name, inputs,
               {model_path(ranker_name), report_path(ranker_name)}, [&] {
      auto owned = make_generators();
      std::vector<const retrievers::Retriever*> gens;
      if (std::find(generator_set.begin(), generator_set.end(), "bm25") !=
          generator_set.end())
        gens.push_back(&bm25_retriever);
      for (const auto& g : owned) gens.push_back(g.get());
      auto pools = training::build_pools(
          std::span<const retrievers::Retriever* const>(gens.data(), gens.size()),
          data, train_cfg.top_n, threads);
      training::PoolNegatives negatives(collection, std::move(pools));
      training::LossReport report;
      auto model = ranker::RankerModel::init(
          ranker::interaction_feat_dim(proj_dim), hidden,
          rng::derive_seed(seed, "ranker"));
      model = training::train_ranker_model(std::move(model), data, projection,
                                           index, bm25, negatives, train_cfg,
                                           &report);
      checkpoint::save_ranker(model, model_path(ranker_name));
      report.write(report_path(ranker_name));
    });
  }

  // Distillation: the trained ranker teaches a staged retriever.
  const auto student_name = cfg.get_or("distill_student", "den_hn");
  const std::string distilled_name = "distilled_" + student_name;
  {
    auto distill_cfg = train_config_from(cfg, "distill_");
    training::DistillOptions opts;
    opts.n_negatives = static_cast<int>(cfg.get_int("distill_n_negatives", 10));
    opts.reverse_kl = cfg.get_int("distill_reverse_kl", 0) != 0;
    std::vector<std::string> inputs = corpus_files;
    inputs.push_back(model_path(ranker_name));
    inputs.push_back(model_path(student_name));
    stages.run("distill", inputs,
               {model_path(distilled_name), report_path(distilled_name)}, [&] {
      const auto ranker_model = checkpoint::load_ranker(model_path(ranker_name));
      const ranker::RankerScorer teacher(ranker_model, projection, features,
                                         index, bm25);
      auto owned = make_generators();
      std::vector<const retrievers::Retriever*> gens;
      if (std::find(generator_set.begin(), generator_set.end(), "bm25") !=
          generator_set.end())
        gens.push_back(&bm25_retriever);
      for (const auto& g : owned) gens.push_back(g.get());
      auto pools = training::build_pools(
          std::span<const retrievers::Retriever* const>(gens.data(), gens.size()),
          data, train_cfg.top_n, threads);
      training::PoolNegatives negatives(collection, std::move(pools));
      std::vector<std::string> warnings;
      const auto set = training::build_distill_set(data, teacher, negatives,
                                                   opts, seed, &warnings);
      for (const auto& w : warnings) log << "warning: " << w << '\n';
      training::LossReport report;
      const auto kind = checkpoint::detect_kind(model_path(student_name));
      if (kind == checkpoint::ModelKind::dense) {
        auto student = checkpoint::load_dense(model_path(student_name));
        student = training::distill_dense(std::move(student), data, set,
                                          distill_cfg, opts, &report);
        checkpoint::save_dense(student, model_path(distilled_name));
      } else {
        auto student = checkpoint::load_lex(model_path(student_name));
        student = training::distill_lex(std::move(student), data, set,
                                        distill_cfg, opts, &report);
        checkpoint::save_lex(student, model_path(distilled_name));
      }
      report.write(report_path(distilled_name));
    });
  }

  // Evaluation: raw BM25 vs reranked BM25 candidates on the dev split, plus
  // first-stage retrieval for the student before and after distillation.
  const auto run_path = [&](const std::string& name) {
    return out_dir + "/runs/" + name + ".run";
  };
  const auto metrics_path = [&](const std::string& name) {
    return out_dir + "/metrics/" + name + ".tsv";
  };
  {
    std::vector<std::string> inputs = corpus_files;
    inputs.push_back(index_path);
    inputs.push_back(model_path(ranker_name));
    inputs.push_back(model_path(student_name));
    inputs.push_back(model_path(distilled_name));
    const std::vector<std::string> outputs = {
        run_path("bm25_dev"), run_path("rerank_dev"),
        run_path("retriever_dev"), run_path("retriever_distilled_dev"),
        metrics_path("bm25_dev"), metrics_path("rerank_dev"),
        metrics_path("retriever_dev"), metrics_path("retriever_distilled_dev")};
    stages.run("evaluate", inputs, outputs, [&] {
      const auto ranker_model = checkpoint::load_ranker(model_path(ranker_name));
      const ranker::RankerScorer scorer(ranker_model, projection, features,
                                        index, bm25);
      std::vector<eval::RunList> bm25_runs(dev_queries.size());
      std::vector<eval::RunList> rerank_runs(dev_queries.size());
      parallel::parallel_for(dev_queries.size(), threads, [&](std::size_t i) {
        const auto candidates = bm25_retriever.topk(dev_queries[i], rerank_depth);
        auto& raw = bm25_runs[i];
        raw.query_id = dev_queries[i].id;
        for (const auto& e : candidates.entries)
          raw.entries.push_back({e.doc_id, e.score});
        if (!candidates.entries.empty())
          rerank_runs[i] = eval::rerank(scorer, dev_queries[i], candidates, collection);
        else
          rerank_runs[i].query_id = dev_queries[i].id;
      });
      eval::write_run_file(bm25_runs, "bm25", run_path("bm25_dev"));
      eval::write_run_file(rerank_runs, set_label, run_path("rerank_dev"));
      write_metrics_file(bm25_runs, qrels_dev, ks, metrics_path("bm25_dev"));
      write_metrics_file(rerank_runs, qrels_dev, ks, metrics_path("rerank_dev"));

      const auto student = retriever_from_checkpoint(
          student_name, model_path(student_name), collection, features);
      const auto distilled = retriever_from_checkpoint(
          distilled_name, model_path(distilled_name), collection, features);
      std::vector<eval::RunList> student_runs(dev_queries.size());
      std::vector<eval::RunList> distilled_runs(dev_queries.size());
      parallel::parallel_for(dev_queries.size(), threads, [&](std::size_t i) {
        const auto to_run = [&](const retrievers::CandidateList& c) {
          eval::RunList r;
          r.query_id = c.query_id;
          for (const auto& e : c.entries) r.entries.push_back({e.doc_id, e.score});
          return r;
        };
        student_runs[i] = to_run(student->topk(dev_queries[i], retrieval_depth));
        distilled_runs[i] = to_run(distilled->topk(dev_queries[i], retrieval_depth));
      });
      eval::write_run_file(student_runs, student_name, run_path("retriever_dev"));
      eval::write_run_file(distilled_runs, distilled_name,
                           run_path("retriever_distilled_dev"));
      write_metrics_file(student_runs, qrels_dev, ks, metrics_path("retriever_dev"));
      write_metrics_file(distilled_runs, qrels_dev, ks,
                         metrics_path("retriever_distilled_dev"));
    });
  }

  // Analysis: negative-distribution diagnostics for the configured set.
  const std::string fig_kl_path = out_dir + "/analysis/kl_vs_mrr.tsv";
  const std::string fig_shift_path = out_dir + "/analysis/shift_vs_mrr.tsv";
  const std::string summary_path = out_dir + "/analysis/summary.tsv";
  {
    std::vector<std::string> inputs = corpus_files;
    inputs.push_back(index_path);
    inputs.push_back(model_path(ranker_name));
    inputs.push_back(metrics_path("rerank_dev"));
    for (const auto& name : generator_set)
      if (name != "bm25") inputs.push_back(model_path(name));
    stages.run("analyze", inputs, {fig_kl_path, fig_shift_path, summary_path}, [&] {
      const auto ranker_model = checkpoint::load_ranker(model_path(ranker_name));
      const ranker::RankerScorer scorer(ranker_model, projection, features,
                                        index, bm25);
      auto owned = make_generators();
      std::vector<const retrievers::Retriever*> gens;
      if (std::find(generator_set.begin(), generator_set.end(), "bm25") !=
          generator_set.end())
        gens.push_back(&bm25_retriever);
      for (const auto& g : owned) gens.push_back(g.get());
      const std::span<const retrievers::Retriever* const> gen_span(gens.data(),
                                                                   gens.size());
      std::map<std::string, std::set<std::string>> dev_positives;
      for (const auto& j : qrels_dev)
        if (j.grade > 0) dev_positives[j.query_id].insert(j.doc_id);

      std::vector<double> kl_joint(dev_queries.size());
      std::vector<double> abs_delta(dev_queries.size());
      static const std::set<std::string> kNone;
      parallel::parallel_for(dev_queries.size(), threads, [&](std::size_t i) {
        const auto it = dev_positives.find(dev_queries[i].id);
        const auto& pos = it == dev_positives.end() ? kNone : it->second;
        const auto report = analysis::distribution_shift(
            gen_span, scorer, bm25_retriever, dev_queries[i], pos,
            analysis_top_n, collection);
        kl_joint[i] = report.kl_joint_bm25;
        abs_delta[i] = report.abs_delta;
      });
      double mean_kl = 0.0, mean_abs_delta = 0.0;
      for (std::size_t i = 0; i < dev_queries.size(); ++i) {
        mean_kl += kl_joint[i];
        mean_abs_delta += abs_delta[i];
      }
      if (!dev_queries.empty()) {
        mean_kl /= static_cast<double>(dev_queries.size());
        mean_abs_delta /= static_cast<double>(dev_queries.size());
      }
      const double rerank_mrr = read_metric(metrics_path("rerank_dev"),
                                            "mrr@" + std::to_string(ks.front()));
      const analysis::FigurePoint kl_point{set_label, mean_kl, rerank_mrr};
      const analysis::FigurePoint shift_point{set_label, mean_abs_delta, rerank_mrr};
      analysis::emit_figure_data({&kl_point, 1}, fig_kl_path);
      analysis::emit_figure_data({&shift_point, 1}, fig_shift_path);
      std::ofstream summary(summary_path, std::ios::binary);
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.6f", mean_kl);
      summary << "kl_joint_vs_bm25\t" << buf << '\n';
      std::snprintf(buf, sizeof(buf), "%.6f", mean_abs_delta);
      summary << "abs_distribution_shift\t" << buf << '\n';
      std::snprintf(buf, sizeof(buf), "%.4f", rerank_mrr);
      summary << "rerank_mrr\t" << buf << '\n';
      summary << "distribution\tsoftmax_of_scores_on_union_support\n";
    });
  }

  // Manifest: one record listing every produced artifact with checksums.
  manifest::RunManifest mf;
  mf.command = "pipeline";
  mf.config = cfg.values();
  mf.seed = seed;
  for (const auto& f : corpus_files) mf.add_input(f);
  std::vector<std::string> artifacts = {index_path};
  for (const auto& name : {std::string("den_bn"), std::string("lex_bn"),
                           std::string("den_hn"), std::string("lex_hn"),
                           ranker_name, distilled_name}) {
    artifacts.push_back(model_path(name));
    artifacts.push_back(report_path(name));
  }
  for (const auto& name :
       {"bm25_dev", "rerank_dev", "retriever_dev", "retriever_distilled_dev"}) {
    artifacts.push_back(run_path(name));
    artifacts.push_back(metrics_path(name));
  }
  artifacts.push_back(fig_kl_path);
  artifacts.push_back(fig_shift_path);
  artifacts.push_back(summary_path);
  artifacts.push_back(out_dir + "/pipeline_state.json");
  for (const auto& f : artifacts) mf.add_output(f);
  result.manifest_path = out_dir + "/manifest.json";
  mf.save(result.manifest_path);
  stages.write_timings(out_dir + "/timings.tsv");

  result.artifacts = artifacts;
  result.skipped_stages = stages.skipped();
  for (const int k : ks) {
    const std::string key = "mrr@" + std::to_string(k);
    result.metrics["bm25_" + key] = read_metric(metrics_path("bm25_dev"), key);
    result.metrics["rerank_" + key] = read_metric(metrics_path("rerank_dev"), key);
    result.metrics["retriever_" + key] = read_metric(metrics_path("retriever_dev"), key);
    result.metrics["distilled_" + key] =
        read_metric(metrics_path("retriever_distilled_dev"), key);
  }
  return result;
}

}  // namespace ranklab::pipeline
