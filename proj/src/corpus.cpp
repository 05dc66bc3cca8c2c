#include "ranklab/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ranklab/rng.hpp"

namespace ranklab::corpus {

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  return out;
}

// Reads `<id> TAB <text>` lines, UTF-8, trailing `\r` stripped.
std::vector<std::pair<std::string, std::string>> load_tsv(
    const std::string& path, const char* what) {
  auto in = open_input(path);
  std::vector<std::pair<std::string, std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      std::ostringstream msg;
      msg << path << ": malformed " << what << " line " << line_no
          << " (expected `<id>\\t<text>`)";
      throw std::runtime_error(msg.str());
    }
    rows.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return rows;
}

std::vector<std::string> split_whitespace(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ' ' || c == '\t') {
      if (!cur.empty()) {
        fields.push_back(std::move(cur));
        cur.clear();
      }
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) fields.push_back(std::move(cur));
  return fields;
}

}  // namespace

Collection::Collection(std::vector<Document> docs) : docs_(std::move(docs)) {
  by_id_.reserve(docs_.size());
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    if (docs_[i].id.empty())
      throw std::invalid_argument("Collection: empty document id");
    if (!by_id_.emplace(docs_[i].id, i).second)
      throw std::invalid_argument("Collection: duplicate document id `" +
                                  docs_[i].id + "`");
  }
}

bool Collection::contains(const std::string& id) const {
  return by_id_.find(id) != by_id_.end();
}

std::size_t Collection::ordinal_of(const std::string& id) const {
  const auto it = by_id_.find(id);
  if (it == by_id_.end())
    throw std::out_of_range("Collection: unknown document id `" + id + "`");
  return it->second;
}

Collection load_collection(const std::string& path) {
  const auto rows = load_tsv(path, "collection");
  std::vector<Document> docs;
  docs.reserve(rows.size());
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto ins = seen.emplace(rows[i].first, i + 1);
    if (!ins.second) {
      std::ostringstream msg;
      msg << path << ": duplicate document id `" << rows[i].first
          << "` on line " << (i + 1) << " (first seen on line "
          << ins.first->second << ")";
      throw std::runtime_error(msg.str());
    }
    docs.push_back({rows[i].first, rows[i].second});
  }
  return Collection(std::move(docs));
}

std::vector<Query> load_queries(const std::string& path) {
  const auto rows = load_tsv(path, "queries");
  std::vector<Query> queries;
  queries.reserve(rows.size());
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto ins = seen.emplace(rows[i].first, i + 1);
    if (!ins.second) {
      std::ostringstream msg;
      msg << path << ": duplicate query id `" << rows[i].first << "` on line "
          << (i + 1) << " (first seen on line " << ins.first->second << ")";
      throw std::runtime_error(msg.str());
    }
    queries.push_back({rows[i].first, rows[i].second});
  }
  return queries;
}

std::vector<Judgment> load_qrels(const std::string& path) {
  auto in = open_input(path);
  std::vector<Judgment> judgments;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = split_whitespace(line);
    if (fields.empty()) continue;  // blank line
    if (fields.size() != 4) {
      std::ostringstream msg;
      msg << path << ": malformed qrels line " << line_no
          << " (expected 4 whitespace-separated fields, got " << fields.size()
          << ")";
      throw std::runtime_error(msg.str());
    }
    int grade = 0;
    const auto& g = fields[3];
    const auto res = std::from_chars(g.data(), g.data() + g.size(), grade);
    if (res.ec != std::errc() || res.ptr != g.data() + g.size() || grade < 0) {
      std::ostringstream msg;
      msg << path << ": non-negative integer grade expected on qrels line "
          << line_no << ", got `" << g << "`";
      throw std::runtime_error(msg.str());
    }
    judgments.push_back({fields[0], fields[2], grade});
  }
  return judgments;
}

void write_collection(const Collection& coll, const std::string& path) {
  auto out = open_output(path);
  for (const auto& d : coll.documents()) out << d.id << '\t' << d.text << '\n';
}

void write_queries(const std::vector<Query>& queries, const std::string& path) {
  auto out = open_output(path);
  for (const auto& q : queries) out << q.id << '\t' << q.text << '\n';
}

void write_qrels(const std::vector<Judgment>& judgments,
                 const std::string& path) {
  auto out = open_output(path);
  for (const auto& j : judgments)
    out << j.query_id << " 0 " << j.doc_id << ' ' << j.grade << '\n';
}

TrainingSet make_training_set(const std::vector<Query>& queries,
                              const std::vector<Judgment>& judgments,
                              const Collection& coll) {
  TrainingSet ts;
  ts.queries = queries;
  std::set<std::string> known;
  for (const auto& q : queries) known.insert(q.id);
  for (const auto& j : judgments) {
    if (j.grade <= 0) continue;
    if (known.find(j.query_id) == known.end())
      throw std::invalid_argument("training set: judged query `" + j.query_id +
                                  "` is not in the query list");
    if (!coll.contains(j.doc_id))
      throw std::invalid_argument("training set: positive doc `" + j.doc_id +
                                  "` is not in the collection");
    ts.positives[j.query_id].insert(j.doc_id);
  }
  return ts;
}

namespace {

constexpr int kMinCoreSize = 4;
// Fraction of query tokens drawn from the positive document's theme (the
// rest come from anywhere in the topic core).
constexpr double kQueryThemeBias = 0.6;

std::string term_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "w%05d", index);
  return buf;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_topics < 1 || spec.docs_per_topic < 1 || spec.n_queries < 1 ||
      spec.vocab_size < 1)
    throw std::invalid_argument("generate_synthetic: all counts must be >= 1");
  if (!(spec.noise_rate >= 0.0 && spec.noise_rate < 1.0))
    throw std::invalid_argument(
        "generate_synthetic: noise_rate must be in [0, 1)");
  const int core_size = spec.vocab_size / spec.n_topics;
  if (core_size < kMinCoreSize)
    throw std::invalid_argument(
        "generate_synthetic: vocab_size smaller than n_topics x minimum core "
        "set size (" +
        std::to_string(spec.n_topics * kMinCoreSize) + ")");

  const int theme_size = std::max(2, core_size / 4);
  const int n_docs = spec.n_topics * spec.docs_per_topic;

  std::vector<Document> docs;
  docs.reserve(static_cast<std::size_t>(n_docs));
  // Core-slice tokens each document actually contains (with multiplicity);
  // queries sample from these so a positive is lexically reachable.
  std::vector<std::vector<int>> doc_core_tokens(static_cast<std::size_t>(n_docs));

  for (int d = 0; d < n_docs; ++d) {
    const int topic = d / spec.docs_per_topic;
    const int core_lo = topic * core_size;
    rng::SplitMix64 gen(rng::derive_seed(spec.seed, "doc", static_cast<std::uint64_t>(d)));

    // Distinct theme terms from this topic's core slice.
    std::vector<int> core(static_cast<std::size_t>(core_size));
    for (int i = 0; i < core_size; ++i) core[static_cast<std::size_t>(i)] = core_lo + i;
    rng::shuffle(core, gen);
    core.resize(static_cast<std::size_t>(theme_size));

    const int len = 30 + static_cast<int>(gen.below(41));
    std::string body;
    auto& core_tokens = doc_core_tokens[static_cast<std::size_t>(d)];
    for (int i = 0; i < len; ++i) {
      int term;
      if (gen.unit() < spec.noise_rate) {
        term = static_cast<int>(gen.below(static_cast<std::uint64_t>(spec.vocab_size)));
      } else {
        term = core[static_cast<std::size_t>(gen.below(core.size()))];
      }
      if (term >= core_lo && term < core_lo + core_size) core_tokens.push_back(term);
      if (!body.empty()) body.push_back(' ');
      body += term_name(term);
    }
    docs.push_back({"d" + std::to_string(d), std::move(body)});
  }

  SyntheticData data;
  data.collection = Collection(std::move(docs));

  for (int i = 0; i < spec.n_queries; ++i) {
    const int topic = i % spec.n_topics;
    rng::SplitMix64 gen(rng::derive_seed(spec.seed, "query", static_cast<std::uint64_t>(i)));
    const int pos = topic * spec.docs_per_topic +
                    static_cast<int>(gen.below(static_cast<std::uint64_t>(spec.docs_per_topic)));
    const auto& pos_tokens = doc_core_tokens[static_cast<std::size_t>(pos)];
    const int core_lo = topic * core_size;
    const int qlen = 3 + static_cast<int>(gen.below(4));
    std::string qtext;
    for (int t = 0; t < qlen; ++t) {
      int term;
      if (!pos_tokens.empty() && gen.unit() < kQueryThemeBias) {
        term = pos_tokens[static_cast<std::size_t>(gen.below(pos_tokens.size()))];
      } else {
        term = core_lo + static_cast<int>(gen.below(static_cast<std::uint64_t>(core_size)));
      }
      if (!qtext.empty()) qtext.push_back(' ');
      qtext += term_name(term);
    }
    const std::string qid = "q" + std::to_string(i);
    const std::string did = "d" + std::to_string(pos);
    data.queries.push_back({qid, std::move(qtext)});
    data.judgments.push_back({qid, did, 1});
  }

  data.training = make_training_set(data.queries, data.judgments, data.collection);
  return data;
}

}  // namespace ranklab::corpus
