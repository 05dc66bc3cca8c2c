#include "ranklab/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ranklab::checkpoint {

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

double parse_double(const std::string& cell, const std::string& path) {
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
    throw std::runtime_error(path + ": bad tensor value `" + cell + "`");
  return v;
}

}  // namespace

std::string serialize_tensors(const std::vector<Tensor>& tensors) {
  std::string out = "ranklab-tensors v1\n";
  out += std::to_string(tensors.size());
  out.push_back('\n');
  for (const auto& t : tensors) {
    out += "tensor " + t.name + ' ' + std::to_string(t.data.rows()) + ' ' +
           std::to_string(t.data.cols()) + '\n';
    for (Eigen::Index r = 0; r < t.data.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.data.cols(); ++c) {
        if (c > 0) out.push_back(' ');
        append_double(out, t.data(r, c));
      }
      out.push_back('\n');
    }
  }
  return out;
}

void save_tensors(const std::vector<Tensor>& tensors, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << serialize_tensors(tensors);
  if (!out) throw std::runtime_error("short write on checkpoint: " + path);
}

std::vector<Tensor> load_tensors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string header;
  std::getline(in, header);
  if (header != "ranklab-tensors v1")
    throw std::runtime_error(path + ": not a ranklab tensor container");
  std::size_t count = 0;
  in >> count;
  std::vector<Tensor> tensors(count);
  for (auto& t : tensors) {
    std::string word;
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> word >> t.name >> rows >> cols) || word != "tensor")
      throw std::runtime_error(path + ": malformed tensor header");
    t.data.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) {
        std::string cell;
        if (!(in >> cell))
          throw std::runtime_error(path + ": truncated tensor " + t.name);
        t.data(r, c) = parse_double(cell, path);
      }
  }
  return tensors;
}

std::vector<Tensor> dense_tensors(const retrievers::DenseModel& model) {
  return {{"embedding", model.embedding}};
}

std::vector<Tensor> lex_tensors(const retrievers::LexModel& model) {
  return {{"term_weight", model.term_weight}};
}

std::vector<Tensor> ranker_tensors(const ranker::RankerModel& model) {
  Eigen::MatrixXd b2(1, 1);
  b2(0, 0) = model.b2;
  return {{"w1", model.w1}, {"b1", model.b1}, {"w2", model.w2}, {"b2", b2}};
}

namespace {

const Tensor& find_tensor(const std::vector<Tensor>& tensors,
                          const std::string& name, const std::string& path) {
  for (const auto& t : tensors)
    if (t.name == name) return t;
  throw std::runtime_error(path + ": missing tensor `" + name + "`");
}

bool has_tensor(const std::vector<Tensor>& tensors, const std::string& name) {
  for (const auto& t : tensors)
    if (t.name == name) return true;
  return false;
}

}  // namespace

ModelKind detect_kind(const std::string& path) {
  const auto tensors = load_tensors(path);
  if (has_tensor(tensors, "embedding")) return ModelKind::dense;
  if (has_tensor(tensors, "term_weight")) return ModelKind::lexicon;
  if (has_tensor(tensors, "w1")) return ModelKind::ranker;
  throw std::runtime_error(path + ": unrecognized model container");
}

const char* kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::dense: return "dense";
    case ModelKind::lexicon: return "lexicon";
    case ModelKind::ranker: return "ranker";
  }
  return "?";
}

void save_dense(const retrievers::DenseModel& model, const std::string& path) {
  save_tensors(dense_tensors(model), path);
}

retrievers::DenseModel load_dense(const std::string& path) {
  const auto tensors = load_tensors(path);
  retrievers::DenseModel m;
  m.embedding = find_tensor(tensors, "embedding", path).data;
  return m;
}

void save_lex(const retrievers::LexModel& model, const std::string& path) {
  save_tensors(lex_tensors(model), path);
}

retrievers::LexModel load_lex(const std::string& path) {
  const auto tensors = load_tensors(path);
  retrievers::LexModel m;
  m.term_weight = find_tensor(tensors, "term_weight", path).data.col(0);
  return m;
}

void save_ranker(const ranker::RankerModel& model, const std::string& path) {
  save_tensors(ranker_tensors(model), path);
}

ranker::RankerModel load_ranker(const std::string& path) {
  const auto tensors = load_tensors(path);
  ranker::RankerModel m;
  m.w1 = find_tensor(tensors, "w1", path).data;
  m.b1 = find_tensor(tensors, "b1", path).data.col(0);
  m.w2 = find_tensor(tensors, "w2", path).data.col(0);
  m.b2 = find_tensor(tensors, "b2", path).data(0, 0);
  return m;
}

}  // namespace ranklab::checkpoint
