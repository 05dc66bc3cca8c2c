#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ranklab/corpus.hpp"
#include "ranklab/text.hpp"

namespace ranklab::retrievers {

struct Bm25Params {
  double k1 = 0.9;
  double b = 0.4;
};

struct Posting {
  std::int32_t ordinal;
  std::int32_t tf;
};

// Term postings plus the collection statistics BM25 needs. Built once from
// tokenize() output and immutable afterwards.
class InvertedIndex {
 public:
  static InvertedIndex build(const corpus::Collection& coll);

  std::size_t n_docs() const { return doc_len_.size(); }
  double avgdl() const { return avgdl_; }
  std::int32_t doc_len(std::size_t ordinal) const { return doc_len_[ordinal]; }
  std::int32_t df(const std::string& term) const;
  const std::vector<Posting>* postings(const std::string& term) const;
  // Term frequency of `term` in document `ordinal` (0 when absent).
  std::int32_t term_freq(const std::string& term, std::int32_t ordinal) const;
  const std::map<std::string, std::vector<Posting>>& terms() const {
    return postings_;
  }

  void save(const std::string& path) const;
  static InvertedIndex load(const std::string& path);

 private:
  std::map<std::string, std::vector<Posting>> postings_;
  std::vector<std::int32_t> doc_len_;
  double avgdl_ = 0.0;
};

// idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))
double bm25_idf(std::size_t n_docs, std::int32_t df);

// Sum over query tokens t occurring in the document of
//   idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len / avgdl)).
// Repeated query tokens contribute once per occurrence.
double bm25_score(const InvertedIndex& index, const Bm25Params& params,
                  const text::TokenSeq& query_tokens, std::int32_t ordinal);

// Query with its tokenization and hashed features computed once.
struct PreparedQuery {
  std::string id;
  text::TokenSeq tokens;
  text::SparseVector features;
};

PreparedQuery prepare_query(const corpus::Query& q, std::int32_t dim,
                            std::uint64_t hash_seed);

struct ScoredDoc {
  std::string doc_id;
  double score;
};

// Total rank order used for every materialized ranking: score descending,
// ties broken by doc_id ascending.
inline bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.doc_id < b.doc_id;
}

struct CandidateList {
  std::string query_id;
  std::vector<ScoredDoc> entries;
  int k = 0;
};

// Hashed features for every document, plus bucket-level postings for sparse
// scans. Shared by the dense/lexicon models and the ranker features.
struct CollectionFeatures {
  std::int32_t dim = 0;
  std::uint64_t hash_seed = 0;
  std::vector<text::SparseVector> docs;              // by ordinal
  std::vector<std::vector<Posting>> bucket_postings;  // bucket -> (ordinal, count)

  static CollectionFeatures build(const corpus::Collection& coll,
                                  std::int32_t dim, std::uint64_t hash_seed);
};

// Dense bi-encoder: count-weighted mean of embedding rows; relevance is the
// dot product of the two pooled vectors.
struct DenseModel {
  Eigen::MatrixXd embedding;  // dim_hash x dim_emb

  std::int32_t dim_hash() const { return static_cast<std::int32_t>(embedding.rows()); }
  std::int32_t dim_emb() const { return static_cast<std::int32_t>(embedding.cols()); }

  static DenseModel init(std::int32_t dim_hash, std::int32_t dim_emb,
                         std::uint64_t seed);
};

// Count-weighted mean of table rows over the nonzero feature indices; zero
// vector for empty input. Throws on dimension mismatch.
Eigen::VectorXd pool_rows(const Eigen::MatrixXd& table,
                          const text::SparseVector& features);

inline Eigen::VectorXd encode_dense(const DenseModel& model,
                                    const text::SparseVector& features) {
  return pool_rows(model.embedding, features);
}

double score_dense(const DenseModel& model, const text::SparseVector& q,
                   const text::SparseVector& d);

// Lexicon-weighting bi-encoder: one learned weight per hash bucket, applied
// through softplus so effective weights stay positive.
struct LexModel {
  Eigen::VectorXd term_weight;  // dim_hash

  std::int32_t dim_hash() const { return static_cast<std::int32_t>(term_weight.size()); }

  static LexModel init(std::int32_t dim_hash);
};

double softplus(double x);
double sigmoid(double x);

// Sum over shared indices of softplus(w_i)^2 * q_i * d_i.
double score_lex(const LexModel& model, const text::SparseVector& q,
                 const text::SparseVector& d);

// Anything that can score a (query, document) pair. Retrievers and the
// trained ranker both satisfy this, which is what reranking and the
// distribution analyses operate on.
class PairScorer {
 public:
  virtual ~PairScorer() = default;
  virtual double score(const PreparedQuery& q, std::int32_t ordinal) const = 0;
};

// A frozen first-stage model: pair scoring plus top-k retrieval.
class Retriever : public PairScorer {
 public:
  explicit Retriever(const corpus::Collection& coll) : coll_(coll) {}
  virtual const std::string& name() const = 0;
  // Exhaustive by default; subclasses may use an equivalent sparse scan.
  virtual CandidateList topk(const PreparedQuery& q, int k) const;
  const corpus::Collection& collection() const { return coll_; }

 protected:
  const corpus::Collection& coll_;
};

class Bm25Retriever : public Retriever {
 public:
  Bm25Retriever(const corpus::Collection& coll, const InvertedIndex& index,
                Bm25Params params);
  const std::string& name() const override { return name_; }
  double score(const PreparedQuery& q, std::int32_t ordinal) const override;
  // Omits documents matching no query term.
  CandidateList topk(const PreparedQuery& q, int k) const override;
  const InvertedIndex& index() const { return index_; }
  const Bm25Params& params() const { return params_; }

 private:
  const InvertedIndex& index_;
  Bm25Params params_;
  std::string name_ = "bm25";
};

class DenseRetriever : public Retriever {
 public:
  DenseRetriever(std::string name, const corpus::Collection& coll,
                 const CollectionFeatures& feats, DenseModel model);
  const std::string& name() const override { return name_; }
  double score(const PreparedQuery& q, std::int32_t ordinal) const override;
  CandidateList topk(const PreparedQuery& q, int k) const override;
  const DenseModel& model() const { return model_; }

 private:
  std::string name_;
  const CollectionFeatures& feats_;
  DenseModel model_;
  Eigen::MatrixXd doc_encodings_;  // n_docs x dim_emb, precomputed
};

class LexRetriever : public Retriever {
 public:
  LexRetriever(std::string name, const corpus::Collection& coll,
               const CollectionFeatures& feats, LexModel model);
  const std::string& name() const override { return name_; }
  double score(const PreparedQuery& q, std::int32_t ordinal) const override;
  CandidateList topk(const PreparedQuery& q, int k) const override;
  const LexModel& model() const { return model_; }

 private:
  std::string name_;
  const CollectionFeatures& feats_;
  LexModel model_;
  Eigen::VectorXd effective_;  // softplus(term_weight), precomputed
};

// Reference top-k: scores every document with `scorer`, applies the rank
// order, truncates to k. Zero scores are kept.
CandidateList retriever_topk(const PairScorer& scorer,
                             const corpus::Collection& coll,
                             const PreparedQuery& q, int k);

// BM25 top-k over the postings lists; equal to sorting all documents by
// bm25_score except that zero-score documents are omitted.
CandidateList bm25_topk(const InvertedIndex& index,
                        const corpus::Collection& coll,
                        const Bm25Params& params, const PreparedQuery& q,
                        int k);

}  // namespace ranklab::retrievers
