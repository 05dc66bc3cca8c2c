#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ranklab/ranker.hpp"
#include "ranklab/retrievers.hpp"

namespace ranklab::checkpoint {

// Textual tensor container (`ranklab-tensors v1`): named row-major arrays
// with shape headers, values printed as shortest round-trip decimals so a
// save/load cycle is bit-exact. Vectors are stored as n x 1.
struct Tensor {
  std::string name;
  Eigen::MatrixXd data;
};

void save_tensors(const std::vector<Tensor>& tensors, const std::string& path);
std::vector<Tensor> load_tensors(const std::string& path);

enum class ModelKind { dense, lexicon, ranker };

// Inferred from the array names in the container.
ModelKind detect_kind(const std::string& path);
const char* kind_name(ModelKind kind);

void save_dense(const retrievers::DenseModel& model, const std::string& path);
retrievers::DenseModel load_dense(const std::string& path);

void save_lex(const retrievers::LexModel& model, const std::string& path);
retrievers::LexModel load_lex(const std::string& path);

void save_ranker(const ranker::RankerModel& model, const std::string& path);
ranker::RankerModel load_ranker(const std::string& path);

// Canonical container bytes, used by the frozen-generator checks.
std::string serialize_tensors(const std::vector<Tensor>& tensors);
std::vector<Tensor> dense_tensors(const retrievers::DenseModel& model);
std::vector<Tensor> lex_tensors(const retrievers::LexModel& model);
std::vector<Tensor> ranker_tensors(const ranker::RankerModel& model);

}  // namespace ranklab::checkpoint
