#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "ranklab/analysis.hpp"
#include "ranklab/config.hpp"
#include "ranklab/evaluation.hpp"
#include "ranklab/manifest.hpp"
#include "ranklab/training.hpp"

namespace ranklab::pipeline {

// Feature hashing uses one fixed seed so checkpoints from different runs
// stay compatible with each other's hashed features; run seeds drive only
// initialization and sampling.
inline constexpr std::uint64_t kHashSeed = 0x52414e4b76312e30ULL;

// Every knob addressable through the flat key=value config.
config::KeyValues default_config();

// Reads learning_rate/epochs/... (optionally under a key prefix such as
// "distill_") on top of the given base values.
training::TrainConfig train_config_from(const config::KeyValues& cfg,
                                        const std::string& prefix = "");

std::vector<retrievers::PreparedQuery> prepare_queries(
    const std::vector<corpus::Query>& queries, std::int32_t dim,
    std::uint64_t hash_seed);

// Builds the matching retriever for a checkpoint file (kind is detected from
// the tensor names).
std::unique_ptr<retrievers::Retriever> retriever_from_checkpoint(
    const std::string& name, const std::string& path,
    const corpus::Collection& coll, const retrievers::CollectionFeatures& feats);

// `metric@k \t value` lines for mrr/recall/ndcg at each k, 4 decimals.
void write_metrics_file(std::span<const eval::RunList> runs,
                        std::span<const corpus::Judgment> judgments,
                        const std::vector<int>& ks, const std::string& path,
                        std::vector<std::string>* warnings = nullptr);

std::vector<int> parse_k_list(const std::string& spec);
std::vector<std::string> split_list(const std::string& spec);

struct PipelineResult {
  std::map<std::string, double> metrics;
  std::vector<std::string> artifacts;
  std::vector<std::string> skipped_stages;
  std::string manifest_path;
};

// Corpus files as laid out by the synth command.
struct CorpusPaths {
  std::string collection;
  std::string queries_train;
  std::string queries_dev;
  std::string qrels_train;
  std::string qrels_dev;

  static CorpusPaths in_dir(const std::string& dir);
};

// Synthesizes a corpus into `out_dir` (collection/queries/qrels files plus a
// manifest). Returns the file list.
std::vector<std::string> run_synth(const config::KeyValues& cfg,
                                   const std::string& out_dir);

// Full batch pipeline: index, staged retriever training, ranker training on
// the configured generator set, distillation, evaluation, analysis.
// Completed stages are skipped when inputs and outputs still match the
// recorded checksums.
PipelineResult run_pipeline(const config::KeyValues& cfg,
                            const CorpusPaths& corpus_paths,
                            const std::string& out_dir, std::ostream& log);

}  // namespace ranklab::pipeline
