#include "ranklab/retrievers.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ranklab/rng.hpp"

namespace ranklab::retrievers {

InvertedIndex InvertedIndex::build(const corpus::Collection& coll) {
  if (coll.size() == 0)
    throw std::invalid_argument("build_index: empty collection");
  InvertedIndex index;
  index.doc_len_.resize(coll.size());
  std::int64_t total_len = 0;
  for (std::size_t ord = 0; ord < coll.size(); ++ord) {
    const auto tokens = text::tokenize(coll.at(ord).text);
    index.doc_len_[ord] = static_cast<std::int32_t>(tokens.size());
    total_len += static_cast<std::int64_t>(tokens.size());
    std::map<std::string, std::int32_t> tf;
    for (const auto& t : tokens) ++tf[t];
    for (const auto& [term, count] : tf)
      index.postings_[term].push_back(
          {static_cast<std::int32_t>(ord), count});
  }
  index.avgdl_ = static_cast<double>(total_len) / static_cast<double>(coll.size());
  return index;
}

std::int32_t InvertedIndex::df(const std::string& term) const {
  const auto it = postings_.find(term);
  return it == postings_.end() ? 0 : static_cast<std::int32_t>(it->second.size());
}

const std::vector<Posting>* InvertedIndex::postings(const std::string& term) const {
  const auto it = postings_.find(term);
  return it == postings_.end() ? nullptr : &it->second;
}

std::int32_t InvertedIndex::term_freq(const std::string& term,
                                      std::int32_t ordinal) const {
  const auto* plist = postings(term);
  if (!plist) return 0;
  const auto it = std::lower_bound(
      plist->begin(), plist->end(), ordinal,
      [](const Posting& p, std::int32_t ord) { return p.ordinal < ord; });
  return (it != plist->end() && it->ordinal == ordinal) ? it->tf : 0;
}

void InvertedIndex::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write index file: " + path);
  out << "ranklab-index v1\n";
  out << "docs " << doc_len_.size() << '\n';
  for (const auto len : doc_len_) out << len << '\n';
  out << "terms " << postings_.size() << '\n';
  for (const auto& [term, plist] : postings_) {
    out << term << ' ' << plist.size();
    for (const auto& p : plist) out << ' ' << p.ordinal << ':' << p.tf;
    out << '\n';
  }
}

InvertedIndex InvertedIndex::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open index file: " + path);
  std::string header;
  std::getline(in, header);
  if (header != "ranklab-index v1")
    throw std::runtime_error(path + ": not a ranklab index file");
  InvertedIndex index;
  std::string word;
  std::size_t n_docs = 0;
  if (!(in >> word >> n_docs) || word != "docs")
    throw std::runtime_error(path + ": malformed index doc header");
  index.doc_len_.resize(n_docs);
  std::int64_t total_len = 0;
  for (std::size_t i = 0; i < n_docs; ++i) {
    if (!(in >> index.doc_len_[i]))
      throw std::runtime_error(path + ": truncated doc length table");
    total_len += index.doc_len_[i];
  }
  std::size_t n_terms = 0;
  if (!(in >> word >> n_terms) || word != "terms")
    throw std::runtime_error(path + ": malformed index term header");
  for (std::size_t i = 0; i < n_terms; ++i) {
    std::string term;
    std::size_t df = 0;
    if (!(in >> term >> df))
      throw std::runtime_error(path + ": truncated postings");
    auto& plist = index.postings_[term];
    plist.resize(df);
    for (std::size_t j = 0; j < df; ++j) {
      std::string cell;
      if (!(in >> cell))
        throw std::runtime_error(path + ": truncated postings for " + term);
      const auto colon = cell.find(':');
      if (colon == std::string::npos)
        throw std::runtime_error(path + ": malformed posting " + cell);
      plist[j].ordinal = std::stoi(cell.substr(0, colon));
      plist[j].tf = std::stoi(cell.substr(colon + 1));
    }
  }
  index.avgdl_ = n_docs == 0 ? 0.0
                             : static_cast<double>(total_len) /
                                   static_cast<double>(n_docs);
  return index;
}

double bm25_idf(std::size_t n_docs, std::int32_t df) {
  const double n = static_cast<double>(n_docs);
  const double d = static_cast<double>(df);
  return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

double bm25_score(const InvertedIndex& index, const Bm25Params& params,
                  const text::TokenSeq& query_tokens, std::int32_t ordinal) {
  const double len = static_cast<double>(index.doc_len(static_cast<std::size_t>(ordinal)));
  double score = 0.0;
  for (const auto& t : query_tokens) {
    const std::int32_t tf = index.term_freq(t, ordinal);
    if (tf == 0) continue;
    const double idf = bm25_idf(index.n_docs(), index.df(t));
    const double norm =
        params.k1 * (1.0 - params.b + params.b * len / index.avgdl());
    score += idf * (static_cast<double>(tf) * (params.k1 + 1.0)) /
             (static_cast<double>(tf) + norm);
  }
  return score;
}

PreparedQuery prepare_query(const corpus::Query& q, std::int32_t dim,
                            std::uint64_t hash_seed) {
  PreparedQuery pq;
  pq.id = q.id;
  pq.tokens = text::tokenize(q.text);
  pq.features = text::hash_features(pq.tokens, dim, hash_seed);
  return pq;
}

CollectionFeatures CollectionFeatures::build(const corpus::Collection& coll,
                                             std::int32_t dim,
                                             std::uint64_t hash_seed) {
  CollectionFeatures feats;
  feats.dim = dim;
  feats.hash_seed = hash_seed;
  feats.docs.reserve(coll.size());
  feats.bucket_postings.resize(static_cast<std::size_t>(dim));
  for (std::size_t ord = 0; ord < coll.size(); ++ord) {
    feats.docs.push_back(
        text::hash_features(text::tokenize(coll.at(ord).text), dim, hash_seed));
    for (const auto& e : feats.docs.back().entries)
      feats.bucket_postings[static_cast<std::size_t>(e.index)].push_back(
          {static_cast<std::int32_t>(ord), static_cast<std::int32_t>(e.value)});
  }
  return feats;
}

DenseModel DenseModel::init(std::int32_t dim_hash, std::int32_t dim_emb,
                            std::uint64_t seed) {
  if (dim_hash < 1 || dim_emb < 1)
    throw std::invalid_argument("DenseModel: dims must be >= 1");
  DenseModel m;
  m.embedding.resize(dim_hash, dim_emb);
  rng::SplitMix64 gen(rng::derive_seed(seed, "dense-init"));
  for (std::int32_t r = 0; r < dim_hash; ++r)
    for (std::int32_t c = 0; c < dim_emb; ++c)
      m.embedding(r, c) = gen.range(-0.05, 0.05);
  return m;
}

Eigen::VectorXd pool_rows(const Eigen::MatrixXd& table,
                          const text::SparseVector& features) {
  if (features.dim != static_cast<std::int32_t>(table.rows()))
    throw std::invalid_argument("pool_rows: feature dim " +
                                std::to_string(features.dim) +
                                " does not match table rows " +
                                std::to_string(table.rows()));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(table.cols());
  if (features.entries.empty()) return out;
  double total = 0.0;
  for (const auto& e : features.entries) {
    out += e.value * table.row(e.index).transpose();
    total += e.value;
  }
  out /= total;
  return out;
}

double score_dense(const DenseModel& model, const text::SparseVector& q,
                   const text::SparseVector& d) {
  return encode_dense(model, q).dot(encode_dense(model, d));
}

LexModel LexModel::init(std::int32_t dim_hash) {
  if (dim_hash < 1) throw std::invalid_argument("LexModel: dim must be >= 1");
  LexModel m;
  m.term_weight = Eigen::VectorXd::Zero(dim_hash);
  return m;
}

double softplus(double x) {
  // Overflow-safe ln(1 + e^x).
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                : std::exp(x) / (1.0 + std::exp(x));
}

double score_lex(const LexModel& model, const text::SparseVector& q,
                 const text::SparseVector& d) {
  if (q.dim != model.dim_hash() || d.dim != model.dim_hash())
    throw std::invalid_argument("score_lex: feature dim mismatch");
  double score = 0.0;
  auto qi = q.entries.begin();
  auto di = d.entries.begin();
  while (qi != q.entries.end() && di != d.entries.end()) {
    if (qi->index < di->index) {
      ++qi;
    } else if (di->index < qi->index) {
      ++di;
    } else {
      const double w = softplus(model.term_weight(qi->index));
      score += w * qi->value * w * di->value;
      ++qi;
      ++di;
    }
  }
  return score;
}

namespace {

CandidateList finalize_ranking(const std::string& query_id, int k,
                               std::vector<ScoredDoc> scored) {
  std::sort(scored.begin(), scored.end(), ranks_before);
  if (scored.size() > static_cast<std::size_t>(k)) scored.resize(static_cast<std::size_t>(k));
  CandidateList list;
  list.query_id = query_id;
  list.k = k;
  list.entries = std::move(scored);
  return list;
}

}  // namespace

CandidateList retriever_topk(const PairScorer& scorer,
                             const corpus::Collection& coll,
                             const PreparedQuery& q, int k) {
  if (k < 1) throw std::invalid_argument("retriever_topk: k must be >= 1");
  std::vector<ScoredDoc> scored;
  scored.reserve(coll.size());
  for (std::size_t ord = 0; ord < coll.size(); ++ord)
    scored.push_back({coll.at(ord).id,
                      scorer.score(q, static_cast<std::int32_t>(ord))});
  return finalize_ranking(q.id, k, std::move(scored));
}

CandidateList bm25_topk(const InvertedIndex& index,
                        const corpus::Collection& coll,
                        const Bm25Params& params, const PreparedQuery& q,
                        int k) {
  if (k < 1) throw std::invalid_argument("bm25_topk: k must be >= 1");
  std::vector<double> acc(coll.size(), 0.0);
  std::vector<std::int32_t> touched;
  for (const auto& t : q.tokens) {
    const auto* plist = index.postings(t);
    if (!plist) continue;
    const double idf = bm25_idf(index.n_docs(), index.df(t));
    for (const auto& p : *plist) {
      const double len = static_cast<double>(index.doc_len(static_cast<std::size_t>(p.ordinal)));
      const double norm =
          params.k1 * (1.0 - params.b + params.b * len / index.avgdl());
      if (acc[static_cast<std::size_t>(p.ordinal)] == 0.0) touched.push_back(p.ordinal);
      acc[static_cast<std::size_t>(p.ordinal)] +=
          idf * (static_cast<double>(p.tf) * (params.k1 + 1.0)) /
          (static_cast<double>(p.tf) + norm);
    }
  }
  std::vector<ScoredDoc> scored;
  scored.reserve(touched.size());
  for (const auto ord : touched)
    scored.push_back({coll.at(static_cast<std::size_t>(ord)).id, acc[static_cast<std::size_t>(ord)]});
  return finalize_ranking(q.id, k, std::move(scored));
}

CandidateList Retriever::topk(const PreparedQuery& q, int k) const {
  return retriever_topk(*this, coll_, q, k);
}

Bm25Retriever::Bm25Retriever(const corpus::Collection& coll,
                             const InvertedIndex& index, Bm25Params params)
    : Retriever(coll), index_(index), params_(params) {}

double Bm25Retriever::score(const PreparedQuery& q, std::int32_t ordinal) const {
  return bm25_score(index_, params_, q.tokens, ordinal);
}

CandidateList Bm25Retriever::topk(const PreparedQuery& q, int k) const {
  return bm25_topk(index_, coll_, params_, q, k);
}

DenseRetriever::DenseRetriever(std::string name, const corpus::Collection& coll,
                               const CollectionFeatures& feats, DenseModel model)
    : Retriever(coll), name_(std::move(name)), feats_(feats),
      model_(std::move(model)) {
  doc_encodings_.resize(static_cast<Eigen::Index>(coll.size()), model_.dim_emb());
  for (std::size_t ord = 0; ord < coll.size(); ++ord)
    doc_encodings_.row(static_cast<Eigen::Index>(ord)) =
        encode_dense(model_, feats_.docs[ord]).transpose();
}

double DenseRetriever::score(const PreparedQuery& q, std::int32_t ordinal) const {
  const Eigen::VectorXd q_enc = encode_dense(model_, q.features);
  return doc_encodings_.row(ordinal).dot(q_enc.transpose());
}

CandidateList DenseRetriever::topk(const PreparedQuery& q, int k) const {
  if (k < 1) throw std::invalid_argument("topk: k must be >= 1");
  const Eigen::VectorXd q_enc = encode_dense(model_, q.features);
  std::vector<ScoredDoc> scored;
  scored.reserve(coll_.size());
  for (std::size_t ord = 0; ord < coll_.size(); ++ord)
    scored.push_back({coll_.at(ord).id,
                      doc_encodings_.row(static_cast<Eigen::Index>(ord))
                          .dot(q_enc.transpose())});
  return finalize_ranking(q.id, k, std::move(scored));
}

LexRetriever::LexRetriever(std::string name, const corpus::Collection& coll,
                           const CollectionFeatures& feats, LexModel model)
    : Retriever(coll), name_(std::move(name)), feats_(feats),
      model_(std::move(model)) {
  effective_.resize(model_.term_weight.size());
  for (Eigen::Index i = 0; i < effective_.size(); ++i)
    effective_(i) = softplus(model_.term_weight(i));
}

double LexRetriever::score(const PreparedQuery& q, std::int32_t ordinal) const {
  const auto& d = feats_.docs[static_cast<std::size_t>(ordinal)];
  if (q.features.dim != feats_.dim)
    throw std::invalid_argument("LexRetriever: feature dim mismatch");
  double score = 0.0;
  auto qi = q.features.entries.begin();
  auto di = d.entries.begin();
  while (qi != q.features.entries.end() && di != d.entries.end()) {
    if (qi->index < di->index) {
      ++qi;
    } else if (di->index < qi->index) {
      ++di;
    } else {
      const double w = effective_(qi->index);
      score += w * qi->value * w * di->value;
      ++qi;
      ++di;
    }
  }
  return score;
}

CandidateList LexRetriever::topk(const PreparedQuery& q, int k) const {
  if (k < 1) throw std::invalid_argument("topk: k must be >= 1");
  std::vector<double> acc(coll_.size(), 0.0);
  for (const auto& e : q.features.entries) {
    const double wq = effective_(e.index) * e.value;
    for (const auto& p : feats_.bucket_postings[static_cast<std::size_t>(e.index)])
      acc[static_cast<std::size_t>(p.ordinal)] +=
          wq * effective_(e.index) * static_cast<double>(p.tf);
  }
  std::vector<ScoredDoc> scored;
  scored.reserve(coll_.size());
  for (std::size_t ord = 0; ord < coll_.size(); ++ord)
    scored.push_back({coll_.at(ord).id, acc[ord]});
  return finalize_ranking(q.id, k, std::move(scored));
}

}  // namespace ranklab::retrievers
