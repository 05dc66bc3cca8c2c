// ranklab: batch front-end for the retrieval-and-rerank lab.
//
// Subcommands: synth, index, train-retriever, train-ranker, distill, rerank,
// full-rank, eval, analyze, pipeline. Configuration layers as
// defaults < config file < RANKLAB_* environment < flags. Exit codes:
// 0 success, 1 runtime failure, 2 usage error.

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>

#include "ranklab/checkpoint.hpp"
#include "ranklab/pipeline.hpp"
#include "ranklab/rng.hpp"

namespace fs = std::filesystem;
using namespace ranklab;

namespace {

struct CommonArgs {
  std::string config_file;
  std::vector<std::string> overrides;  // key=value
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config_file, "flat key=value config file");
  sub->add_option("--set", args.overrides,
                  "override a config key, e.g. --set epochs=3");
  sub->add_option("--seed", args.seed, "root seed")->each([&](const std::string&) {
    args.seed_set = true;
  });
  sub->add_option("--threads", args.threads, "worker thread bound");
}

config::KeyValues resolve_config(const CommonArgs& args) {
  auto cfg = pipeline::default_config();
  if (!args.config_file.empty())
    cfg.merge_from(config::KeyValues::from_file(args.config_file));
  cfg.apply_env_overrides();
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw std::invalid_argument("--set expects key=value, got: " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (args.seed_set) cfg.set("seed", std::to_string(args.seed));
  if (args.threads > 0) cfg.set("threads", std::to_string(args.threads));
  return cfg;
}

struct CorpusCtx {
  corpus::Collection coll;
  std::vector<corpus::Query> queries_raw;
  std::vector<corpus::Judgment> qrels;
  corpus::TrainingSet tset;
  retrievers::CollectionFeatures feats;
  retrievers::InvertedIndex index;
  retrievers::Bm25Params bm25;
  std::vector<retrievers::PreparedQuery> queries;
};

CorpusCtx load_ctx(const std::string& collection_path,
                   const std::string& queries_path,
                   const std::string& qrels_path,
                   const config::KeyValues& cfg) {
  CorpusCtx ctx;
  ctx.coll = corpus::load_collection(collection_path);
  ctx.queries_raw = corpus::load_queries(queries_path);
  if (!qrels_path.empty()) {
    ctx.qrels = corpus::load_qrels(qrels_path);
    ctx.tset = corpus::make_training_set(ctx.queries_raw, ctx.qrels, ctx.coll);
  }
  const auto dim_hash = static_cast<std::int32_t>(cfg.get_int("dim_hash", 32768));
  ctx.feats = retrievers::CollectionFeatures::build(ctx.coll, dim_hash,
                                                    pipeline::kHashSeed);
  ctx.index = retrievers::InvertedIndex::build(ctx.coll);
  ctx.bm25 = {cfg.get_double("bm25_k1", 0.9), cfg.get_double("bm25_b", 0.4)};
  ctx.queries = pipeline::prepare_queries(ctx.queries_raw, dim_hash,
                                          pipeline::kHashSeed);
  return ctx;
}

struct GeneratorSet {
  std::vector<std::unique_ptr<retrievers::Retriever>> owned;
  std::unique_ptr<retrievers::Bm25Retriever> bm25;
  std::vector<const retrievers::Retriever*> ptrs;
};

// Each entry is either the literal `bm25` or a retriever checkpoint path.
GeneratorSet make_generators(const std::vector<std::string>& specs,
                             const CorpusCtx& ctx) {
  GeneratorSet set;
  for (const auto& spec : specs) {
    if (spec == "bm25") {
      if (!set.bm25)
        set.bm25 = std::make_unique<retrievers::Bm25Retriever>(ctx.coll, ctx.index,
                                                               ctx.bm25);
      set.ptrs.push_back(set.bm25.get());
      continue;
    }
    if (!fs::exists(spec))
      throw std::runtime_error("generator checkpoint does not exist: " + spec +
                               " (train it first)");
    set.owned.push_back(pipeline::retriever_from_checkpoint(
        fs::path(spec).stem().string(), spec, ctx.coll, ctx.feats));
    set.ptrs.push_back(set.owned.back().get());
  }
  return set;
}

std::vector<eval::RunList> candidate_runs_to_lists(
    const std::vector<retrievers::CandidateList>& lists) {
  std::vector<eval::RunList> runs;
  runs.reserve(lists.size());
  for (const auto& c : lists) {
    eval::RunList r;
    r.query_id = c.query_id;
    for (const auto& e : c.entries) r.entries.push_back({e.doc_id, e.score});
    runs.push_back(std::move(r));
  }
  return runs;
}

int run_app(int argc, char** argv) {
  CLI::App app{"desk-scale retrieval-and-rerank laboratory"};
  app.require_subcommand(1);

  // --- synth ---------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  CommonArgs synth_common;
  add_common(synth, synth_common);
  std::string synth_out;
  synth->add_option("--out", synth_out, "output directory")->required();
  int synth_topics = -1, synth_dpt = -1, synth_queries = -1, synth_train = -1,
      synth_vocab = -1;
  double synth_noise = -1.0;
  synth->add_option("--topics", synth_topics);
  synth->add_option("--docs-per-topic", synth_dpt);
  synth->add_option("--queries", synth_queries);
  synth->add_option("--train-queries", synth_train);
  synth->add_option("--vocab", synth_vocab);
  synth->add_option("--noise", synth_noise);
  synth->callback([&] {
    auto cfg = resolve_config(synth_common);
    if (synth_topics > 0) cfg.set("topics", std::to_string(synth_topics));
    if (synth_dpt > 0) cfg.set("docs_per_topic", std::to_string(synth_dpt));
    if (synth_queries > 0) cfg.set("queries", std::to_string(synth_queries));
    if (synth_train > 0) cfg.set("train_queries", std::to_string(synth_train));
    if (synth_vocab > 0) cfg.set("vocab", std::to_string(synth_vocab));
    if (synth_noise >= 0.0) cfg.set("noise_rate", std::to_string(synth_noise));
    const auto files = pipeline::run_synth(cfg, synth_out);
    for (const auto& f : files) std::cout << f << '\n';
  });

  // --- index ---------------------------------------------------------------
  auto* index_cmd = app.add_subcommand("index", "build the inverted index");
  CommonArgs index_common;
  add_common(index_cmd, index_common);
  std::string index_collection, index_out;
  index_cmd->add_option("--collection", index_collection)->required();
  index_cmd->add_option("--out", index_out, "index file")->required();
  index_cmd->callback([&] {
    const auto coll = corpus::load_collection(index_collection);
    retrievers::InvertedIndex::build(coll).save(index_out);
    std::cout << index_out << '\n';
  });

  // --- train-retriever -------------------------------------------------------
  auto* tr = app.add_subcommand("train-retriever",
                                "contrastive training of a dense or lexicon retriever");
  CommonArgs tr_common;
  add_common(tr, tr_common);
  std::string tr_kind, tr_negatives = "bm25", tr_coll, tr_queries, tr_qrels,
              tr_out, tr_report, tr_init;
  tr->add_option("--kind", tr_kind, "dense|lex")->required();
  tr->add_option("--negatives", tr_negatives, "random|bm25|model:PATH");
  tr->add_option("--collection", tr_coll)->required();
  tr->add_option("--queries", tr_queries)->required();
  tr->add_option("--qrels", tr_qrels)->required();
  tr->add_option("--out", tr_out)->required();
  tr->add_option("--loss-report", tr_report);
  tr->add_option("--init", tr_init, "warm-start checkpoint");
  tr->callback([&] {
    if (tr_kind != "dense" && tr_kind != "lex")
      throw std::invalid_argument("--kind must be dense or lex");
    const auto cfg = resolve_config(tr_common);
    const auto ctx = load_ctx(tr_coll, tr_queries, tr_qrels, cfg);
    const auto train_cfg = pipeline::train_config_from(cfg);
    const training::TrainData data{ctx.coll, ctx.feats, ctx.queries,
                                   ctx.tset.positives};
    std::unique_ptr<training::NegativeSource> source;
    GeneratorSet gens;
    if (tr_negatives == "random") {
      source = std::make_unique<training::RandomNegatives>(ctx.coll);
    } else {
      std::string spec = tr_negatives;
      if (spec.rfind("model:", 0) == 0) spec = spec.substr(6);
      gens = make_generators({spec}, ctx);
      auto pools = training::build_pools(
          std::span<const retrievers::Retriever* const>(gens.ptrs.data(),
                                                        gens.ptrs.size()),
          data, train_cfg.top_n, static_cast<int>(cfg.get_int("threads", 1)));
      source = std::make_unique<training::PoolNegatives>(ctx.coll, std::move(pools));
    }
    training::LossReport report;
    const auto dim_hash = static_cast<std::int32_t>(cfg.get_int("dim_hash", 32768));
    if (tr_kind == "dense") {
      auto model = tr_init.empty()
                       ? retrievers::DenseModel::init(
                             dim_hash,
                             static_cast<std::int32_t>(cfg.get_int("dim_emb", 64)),
                             rng::derive_seed(train_cfg.seed, "dense"))
                       : checkpoint::load_dense(tr_init);
      model = training::train_dense_retriever(std::move(model), data, *source,
                                              train_cfg, &report);
      checkpoint::save_dense(model, tr_out);
    } else {
      auto model = tr_init.empty() ? retrievers::LexModel::init(dim_hash)
                                   : checkpoint::load_lex(tr_init);
      model = training::train_lex_retriever(std::move(model), data, *source,
                                            train_cfg, &report);
      checkpoint::save_lex(model, tr_out);
    }
    if (!tr_report.empty()) report.write(tr_report);
    std::cout << tr_out << '\n';
  });

  // --- train-ranker ----------------------------------------------------------
  auto* trk = app.add_subcommand("train-ranker",
                                 "train the interaction-feature ranker on joint negatives");
  CommonArgs trk_common;
  add_common(trk, trk_common);
  std::string trk_generators, trk_coll, trk_queries, trk_qrels, trk_out, trk_report;
  trk->add_option("--generators", trk_generators,
                  "comma list of `bm25` and retriever checkpoints")->required();
  trk->add_option("--collection", trk_coll)->required();
  trk->add_option("--queries", trk_queries)->required();
  trk->add_option("--qrels", trk_qrels)->required();
  trk->add_option("--out", trk_out)->required();
  trk->add_option("--loss-report", trk_report);
  trk->callback([&] {
    const auto cfg = resolve_config(trk_common);
    const auto specs = pipeline::split_list(trk_generators);
    if (specs.empty()) throw std::invalid_argument("--generators is empty");
    const auto ctx = load_ctx(trk_coll, trk_queries, trk_qrels, cfg);
    const auto train_cfg = pipeline::train_config_from(cfg);
    const training::TrainData data{ctx.coll, ctx.feats, ctx.queries,
                                   ctx.tset.positives};
    const auto gens = make_generators(specs, ctx);
    auto pools = training::build_pools(
        std::span<const retrievers::Retriever* const>(gens.ptrs.data(),
                                                      gens.ptrs.size()),
        data, train_cfg.top_n, static_cast<int>(cfg.get_int("threads", 1)));
    training::PoolNegatives negatives(ctx.coll, std::move(pools));
    const auto proj_dim = static_cast<std::int32_t>(cfg.get_int("proj_dim", 16));
    const auto projection = ranker::FrozenProjection::make(
        ctx.feats.dim, proj_dim, pipeline::kHashSeed);
    auto model = ranker::RankerModel::init(
        ranker::interaction_feat_dim(proj_dim),
        static_cast<std::int32_t>(cfg.get_int("hidden", 32)),
        rng::derive_seed(train_cfg.seed, "ranker"));
    training::LossReport report;
    model = training::train_ranker_model(std::move(model), data, projection,
                                         ctx.index, ctx.bm25, negatives,
                                         train_cfg, &report);
    checkpoint::save_ranker(model, trk_out);
    if (!trk_report.empty()) report.write(trk_report);
    std::cout << trk_out << '\n';
  });

  // --- distill ---------------------------------------------------------------
  auto* dst = app.add_subcommand("distill",
                                 "teach a retriever from a trained ranker's scores");
  CommonArgs dst_common;
  add_common(dst, dst_common);
  std::string dst_student, dst_teacher, dst_generators = "bm25", dst_coll,
              dst_queries, dst_qrels, dst_out, dst_report;
  dst->add_option("--student", dst_student, "retriever checkpoint")->required();
  dst->add_option("--teacher", dst_teacher, "ranker checkpoint")->required();
  dst->add_option("--generators", dst_generators,
                  "candidate generators (comma list)");
  dst->add_option("--collection", dst_coll)->required();
  dst->add_option("--queries", dst_queries)->required();
  dst->add_option("--qrels", dst_qrels)->required();
  dst->add_option("--out", dst_out)->required();
  dst->add_option("--loss-report", dst_report);
  dst->callback([&] {
    const auto cfg = resolve_config(dst_common);
    const auto ctx = load_ctx(dst_coll, dst_queries, dst_qrels, cfg);
    const auto train_cfg = pipeline::train_config_from(cfg, "distill_");
    training::DistillOptions opts;
    opts.n_negatives = static_cast<int>(cfg.get_int("distill_n_negatives", 10));
    opts.reverse_kl = cfg.get_int("distill_reverse_kl", 0) != 0;
    const training::TrainData data{ctx.coll, ctx.feats, ctx.queries,
                                   ctx.tset.positives};
    const auto gens = make_generators(pipeline::split_list(dst_generators), ctx);
    auto pools = training::build_pools(
        std::span<const retrievers::Retriever* const>(gens.ptrs.data(),
                                                      gens.ptrs.size()),
        data, train_cfg.top_n, static_cast<int>(cfg.get_int("threads", 1)));
    training::PoolNegatives negatives(ctx.coll, std::move(pools));
    const auto ranker_model = checkpoint::load_ranker(dst_teacher);
    const auto proj_dim = static_cast<std::int32_t>(cfg.get_int("proj_dim", 16));
    const auto projection = ranker::FrozenProjection::make(
        ctx.feats.dim, proj_dim, pipeline::kHashSeed);
    const ranker::RankerScorer teacher(ranker_model, projection, ctx.feats,
                                       ctx.index, ctx.bm25);
    std::vector<std::string> warnings;
    const auto set = training::build_distill_set(data, teacher, negatives, opts,
                                                 train_cfg.seed, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    training::LossReport report;
    if (checkpoint::detect_kind(dst_student) == checkpoint::ModelKind::dense) {
      auto student = checkpoint::load_dense(dst_student);
      student = training::distill_dense(std::move(student), data, set, train_cfg,
                                        opts, &report);
      checkpoint::save_dense(student, dst_out);
    } else {
      auto student = checkpoint::load_lex(dst_student);
      student = training::distill_lex(std::move(student), data, set, train_cfg,
                                      opts, &report);
      checkpoint::save_lex(student, dst_out);
    }
    if (!dst_report.empty()) report.write(dst_report);
    std::cout << dst_out << '\n';
  });

  // --- rerank ----------------------------------------------------------------
  auto* rrk = app.add_subcommand("rerank", "rescore an existing run file");
  CommonArgs rrk_common;
  add_common(rrk, rrk_common);
  std::string rrk_ranker, rrk_coll, rrk_queries, rrk_run, rrk_out,
      rrk_tag = "reranked";
  rrk->add_option("--ranker", rrk_ranker)->required();
  rrk->add_option("--collection", rrk_coll)->required();
  rrk->add_option("--queries", rrk_queries)->required();
  rrk->add_option("--run", rrk_run, "input TREC run file")->required();
  rrk->add_option("--out", rrk_out)->required();
  rrk->add_option("--tag", rrk_tag);
  rrk->callback([&] {
    const auto cfg = resolve_config(rrk_common);
    const auto ctx = load_ctx(rrk_coll, rrk_queries, "", cfg);
    const auto ranker_model = checkpoint::load_ranker(rrk_ranker);
    const auto proj_dim = static_cast<std::int32_t>(cfg.get_int("proj_dim", 16));
    const auto projection = ranker::FrozenProjection::make(
        ctx.feats.dim, proj_dim, pipeline::kHashSeed);
    const ranker::RankerScorer scorer(ranker_model, projection, ctx.feats,
                                      ctx.index, ctx.bm25);
    const auto in_runs = eval::load_run_file(rrk_run);
    std::map<std::string, std::size_t> query_at;
    for (std::size_t i = 0; i < ctx.queries.size(); ++i)
      query_at[ctx.queries[i].id] = i;
    std::vector<eval::RunList> out_runs;
    out_runs.reserve(in_runs.size());
    for (const auto& run : in_runs) {
      const auto it = query_at.find(run.query_id);
      if (it == query_at.end())
        throw std::runtime_error("run query " + run.query_id +
                                 " is not in the queries file");
      retrievers::CandidateList cand;
      cand.query_id = run.query_id;
      cand.k = static_cast<int>(run.entries.size());
      for (const auto& e : run.entries) cand.entries.push_back({e.doc_id, e.score});
      out_runs.push_back(eval::rerank(scorer, ctx.queries[it->second], cand, ctx.coll));
    }
    eval::write_run_file(out_runs, rrk_tag, rrk_out);
    std::cout << rrk_out << '\n';
  });

  // --- full-rank ---------------------------------------------------------------
  auto* frk = app.add_subcommand("full-rank", "retrieve top candidates then rerank");
  CommonArgs frk_common;
  add_common(frk, frk_common);
  std::string frk_retriever, frk_ranker, frk_coll, frk_queries, frk_out,
      frk_tag = "full-rank";
  int frk_depth = 50;
  frk->add_option("--retriever", frk_retriever, "`bm25` or checkpoint")->required();
  frk->add_option("--ranker", frk_ranker)->required();
  frk->add_option("--collection", frk_coll)->required();
  frk->add_option("--queries", frk_queries)->required();
  frk->add_option("--depth", frk_depth);
  frk->add_option("--out", frk_out)->required();
  frk->add_option("--tag", frk_tag);
  frk->callback([&] {
    const auto cfg = resolve_config(frk_common);
    const auto ctx = load_ctx(frk_coll, frk_queries, "", cfg);
    const auto gens = make_generators({frk_retriever}, ctx);
    const auto ranker_model = checkpoint::load_ranker(frk_ranker);
    const auto proj_dim = static_cast<std::int32_t>(cfg.get_int("proj_dim", 16));
    const auto projection = ranker::FrozenProjection::make(
        ctx.feats.dim, proj_dim, pipeline::kHashSeed);
    const ranker::RankerScorer scorer(ranker_model, projection, ctx.feats,
                                      ctx.index, ctx.bm25);
    const auto runs = eval::full_rank(*gens.ptrs.front(), scorer, ctx.queries,
                                      frk_depth, ctx.coll,
                                      static_cast<int>(cfg.get_int("threads", 1)));
    eval::write_run_file(runs, frk_tag, frk_out);
    std::cout << frk_out << '\n';
  });

  // --- eval ------------------------------------------------------------------
  auto* evl = app.add_subcommand("eval", "score a TREC run file against qrels");
  CommonArgs evl_common;
  add_common(evl, evl_common);
  std::string evl_run, evl_qrels, evl_ks = "10";
  evl->add_option("--run", evl_run)->required();
  evl->add_option("--qrels", evl_qrels)->required();
  evl->add_option("--k", evl_ks, "comma list of depths");
  evl->callback([&] {
    const auto runs = eval::load_run_file(evl_run);
    const auto qrels = corpus::load_qrels(evl_qrels);
    if (runs.empty()) std::cerr << "warning: empty run file, metrics are 0\n";
    std::vector<std::string> warnings;
    for (const int k : pipeline::parse_k_list(evl_ks)) {
      std::cout << eval::format_metric_line("mrr", k, eval::mrr_at_k(runs, qrels, k, &warnings)) << '\n';
      std::cout << eval::format_metric_line("recall", k, eval::recall_at_k(runs, qrels, k, &warnings)) << '\n';
      std::cout << eval::format_metric_line("ndcg", k, eval::ndcg_at_k(runs, qrels, k, &warnings)) << '\n';
    }
    std::sort(warnings.begin(), warnings.end());
    warnings.erase(std::unique(warnings.begin(), warnings.end()), warnings.end());
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  });

  // --- analyze ---------------------------------------------------------------
  auto* anz = app.add_subcommand("analyze",
                                 "negative-distribution diagnostics for a generator set");
  CommonArgs anz_common;
  add_common(anz, anz_common);
  std::string anz_generators, anz_ranker, anz_coll, anz_queries, anz_qrels,
      anz_out, anz_label = "set";
  anz->add_option("--generators", anz_generators)->required();
  anz->add_option("--ranker", anz_ranker)->required();
  anz->add_option("--collection", anz_coll)->required();
  anz->add_option("--queries", anz_queries)->required();
  anz->add_option("--qrels", anz_qrels)->required();
  anz->add_option("--out", anz_out, "output directory")->required();
  anz->add_option("--label", anz_label);
  anz->callback([&] {
    const auto cfg = resolve_config(anz_common);
    const auto ctx = load_ctx(anz_coll, anz_queries, anz_qrels, cfg);
    const auto gens = make_generators(pipeline::split_list(anz_generators), ctx);
    const auto ranker_model = checkpoint::load_ranker(anz_ranker);
    const auto proj_dim = static_cast<std::int32_t>(cfg.get_int("proj_dim", 16));
    const auto projection = ranker::FrozenProjection::make(
        ctx.feats.dim, proj_dim, pipeline::kHashSeed);
    const ranker::RankerScorer scorer(ranker_model, projection, ctx.feats,
                                      ctx.index, ctx.bm25);
    const retrievers::Bm25Retriever bm25_ref(ctx.coll, ctx.index, ctx.bm25);
    const int top_n = static_cast<int>(cfg.get_int("analysis_top_n", 50));
    double mean_kl = 0.0, mean_abs_delta = 0.0;
    int counted = 0;
    for (const auto& q : ctx.queries) {
      const auto it = ctx.tset.positives.find(q.id);
      static const std::set<std::string> kNone;
      const auto& pos = it == ctx.tset.positives.end() ? kNone : it->second;
      const auto report = analysis::distribution_shift(
          std::span<const retrievers::Retriever* const>(gens.ptrs.data(),
                                                        gens.ptrs.size()),
          scorer, bm25_ref, q, pos, top_n, ctx.coll);
      mean_kl += report.kl_joint_bm25;
      mean_abs_delta += report.abs_delta;
      ++counted;
    }
    if (counted > 0) {
      mean_kl /= counted;
      mean_abs_delta /= counted;
    }
    fs::create_directories(anz_out);
    const analysis::FigurePoint kl_point{anz_label, mean_kl, 0.0};
    const analysis::FigurePoint shift_point{anz_label, mean_abs_delta, 0.0};
    analysis::emit_figure_data({&kl_point, 1}, anz_out + "/kl_vs_mrr.tsv");
    analysis::emit_figure_data({&shift_point, 1}, anz_out + "/shift_vs_mrr.tsv");
    std::ofstream summary(anz_out + "/summary.tsv", std::ios::binary);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", mean_kl);
    summary << "kl_joint_vs_bm25\t" << buf << '\n';
    std::snprintf(buf, sizeof(buf), "%.6f", mean_abs_delta);
    summary << "abs_distribution_shift\t" << buf << '\n';
    summary << "distribution\tsoftmax_of_scores_on_union_support\n";
    std::cout << anz_out << '\n';
  });

  // --- pipeline ----------------------------------------------------------------
  auto* pip = app.add_subcommand("pipeline", "run every stage in dependency order");
  CommonArgs pip_common;
  add_common(pip, pip_common);
  std::string pip_corpus, pip_out, pip_generator_set;
  pip->add_option("--corpus", pip_corpus, "directory produced by synth")->required();
  pip->add_option("--out", pip_out)->required();
  pip->add_option("--generator-set", pip_generator_set,
                  "e.g. bm25,den_hn,lex_hn");
  pip->callback([&] {
    auto cfg = resolve_config(pip_common);
    if (!pip_generator_set.empty()) cfg.set("generator_set", pip_generator_set);
    const auto result = pipeline::run_pipeline(
        cfg, pipeline::CorpusPaths::in_dir(pip_corpus), pip_out, std::cout);
    for (const auto& [k, v] : result.metrics) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.4f", v);
      std::cout << k << '\t' << buf << '\n';
    }
    std::cout << "manifest: " << result.manifest_path << '\n';
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_app(argc, argv);
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
