#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace ranklab::corpus {

struct Document {
  std::string id;
  std::string text;
};

struct Query {
  std::string id;
  std::string text;
};

struct Judgment {
  std::string query_id;
  std::string doc_id;
  int grade = 0;
};

// Ordered document list with id lookup. Immutable after construction and
// safe to share read-only across workers.
class Collection {
 public:
  Collection() = default;
  explicit Collection(std::vector<Document> docs);  // throws on duplicate id

  const std::vector<Document>& documents() const { return docs_; }
  std::size_t size() const { return docs_.size(); }
  const Document& at(std::size_t ordinal) const { return docs_[ordinal]; }
  bool contains(const std::string& id) const;
  // Ordinal of a document id; throws when absent.
  std::size_t ordinal_of(const std::string& id) const;

 private:
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

struct TrainingSet {
  std::vector<Query> queries;
  // query_id -> non-empty set of positive doc ids.
  std::map<std::string, std::set<std::string>> positives;
};

Collection load_collection(const std::string& path);
std::vector<Query> load_queries(const std::string& path);
std::vector<Judgment> load_qrels(const std::string& path);

void write_collection(const Collection& coll, const std::string& path);
void write_queries(const std::vector<Query>& queries, const std::string& path);
void write_qrels(const std::vector<Judgment>& judgments, const std::string& path);

// Validates that every positive resolves to a collection document and every
// judged query is present.
TrainingSet make_training_set(const std::vector<Query>& queries,
                              const std::vector<Judgment>& judgments,
                              const Collection& coll);

struct SyntheticSpec {
  int n_topics = 5;
  int docs_per_topic = 1000;
  int n_queries = 700;
  int vocab_size = 1500;
  double noise_rate = 0.35;
  std::uint64_t seed = 64;
};

struct SyntheticData {
  Collection collection;
  std::vector<Query> queries;
  TrainingSet training;  // positives for all generated queries
  std::vector<Judgment> judgments;
};

// Topic-core generator: each topic owns a disjoint core-term slice, each
// document draws from a per-document theme subset of its topic core plus
// uniform vocabulary noise at noise_rate, and each query samples core terms
// biased toward one document's theme. Pure function of the spec.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace ranklab::corpus
