#include <doctest.h>

#include <cstdlib>

#include "ranklab/checkpoint.hpp"
#include "ranklab/config.hpp"
#include "ranklab/manifest.hpp"
#include "ranklab/rng.hpp"
#include "test_util.hpp"

using namespace ranklab;

TEST_CASE("tensor containers round-trip bit-exactly") {
  testutil::TempDir tmp;
  rng::SplitMix64 gen(5);
  Eigen::MatrixXd m(7, 3);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = gen.range(-10.0, 10.0);
  m(0, 0) = 0.1;           // not exactly representable
  m(1, 0) = -1e-300;       // subnormal territory
  m(2, 0) = 12345678.875;  // exact binary fraction
  const std::vector<checkpoint::Tensor> tensors = {{"embedding", m}};
  const auto path = tmp.file("model.tsv");
  checkpoint::save_tensors(tensors, path);
  const auto loaded = checkpoint::load_tensors(path);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].name == "embedding");
  CHECK(loaded[0].data == m);
  // Save again: the bytes must be identical.
  const auto path2 = tmp.file("model2.tsv");
  checkpoint::save_tensors(loaded, path2);
  CHECK(testutil::read_file(path) == testutil::read_file(path2));
}

TEST_CASE("checkpoint kind detection") {
  testutil::TempDir tmp;
  const auto dense = retrievers::DenseModel::init(16, 4, 1);
  const auto lex = retrievers::LexModel::init(16);
  const auto rnk = ranker::RankerModel::init(10, 4, 1);
  checkpoint::save_dense(dense, tmp.file("d.tsv"));
  checkpoint::save_lex(lex, tmp.file("l.tsv"));
  checkpoint::save_ranker(rnk, tmp.file("r.tsv"));
  CHECK(checkpoint::detect_kind(tmp.file("d.tsv")) == checkpoint::ModelKind::dense);
  CHECK(checkpoint::detect_kind(tmp.file("l.tsv")) == checkpoint::ModelKind::lexicon);
  CHECK(checkpoint::detect_kind(tmp.file("r.tsv")) == checkpoint::ModelKind::ranker);
  const auto lex2 = checkpoint::load_lex(tmp.file("l.tsv"));
  CHECK(lex2.term_weight == lex.term_weight);
}

TEST_CASE("checkpoint loader rejects foreign files") {
  testutil::TempDir tmp;
  const auto path = tmp.file("junk.tsv");
  testutil::write_file(path, "not a checkpoint\n");
  CHECK_THROWS_AS(checkpoint::load_tensors(path), std::runtime_error);
}

TEST_CASE("config files parse, layer, and serialize deterministically") {
  testutil::TempDir tmp;
  const auto path = tmp.file("run.cfg");
  testutil::write_file(path,
                       "# comment\n"
                       "epochs = 3\n"
                       "learning_rate=0.5\n"
                       "\n"
                       "generator_set = bm25,den_hn\n");
  auto cfg = config::KeyValues::from_file(path);
  CHECK(cfg.get_int("epochs", 0) == 3);
  CHECK(cfg.get_double("learning_rate", 0.0) == 0.5);
  CHECK(cfg.get_or("generator_set", "") == "bm25,den_hn");

  config::KeyValues base;
  base.set("epochs", "9");
  base.set("threads", "2");
  base.merge_from(cfg);
  CHECK(base.get_int("epochs", 0) == 3);   // overlay wins
  CHECK(base.get_int("threads", 0) == 2);  // untouched

  const auto text = base.serialize();
  CHECK(text.find("epochs=3\n") != std::string::npos);
  CHECK(text == base.serialize());
}

TEST_CASE("config rejects malformed lines and bad numbers") {
  testutil::TempDir tmp;
  const auto path = tmp.file("bad.cfg");
  testutil::write_file(path, "no equals sign\n");
  CHECK_THROWS_AS(config::KeyValues::from_file(path), std::runtime_error);
  config::KeyValues kv;
  kv.set("epochs", "three");
  CHECK_THROWS_WITH_AS(kv.get_int("epochs", 0), doctest::Contains("epochs"),
                       std::runtime_error);
}

TEST_CASE("environment variables override present keys") {
  config::KeyValues kv;
  kv.set("learning_rate", "0.5");
  ::setenv("RANKLAB_LEARNING_RATE", "0.125", 1);
  kv.apply_env_overrides();
  ::unsetenv("RANKLAB_LEARNING_RATE");
  CHECK(kv.get_double("learning_rate", 0.0) == 0.125);
}

TEST_CASE("file checksums are stable and content-sensitive") {
  testutil::TempDir tmp;
  const auto a = tmp.file("a.txt");
  testutil::write_file(a, "hello\n");
  const auto c1 = manifest::file_checksum_hex(a);
  CHECK(c1 == manifest::file_checksum_hex(a));
  CHECK(c1.size() == 16);
  testutil::write_file(a, "hello!\n");
  CHECK(c1 != manifest::file_checksum_hex(a));
}

TEST_CASE("manifests save and load with sorted deterministic output") {
  testutil::TempDir tmp;
  const auto artifact = tmp.file("artifact.txt");
  testutil::write_file(artifact, "payload");
  manifest::RunManifest mf;
  mf.command = "synth";
  mf.seed = 64;
  mf.config["seed"] = "64";
  mf.add_output(artifact);
  const auto path = tmp.file("manifest.json");
  mf.save(path);
  const auto once = testutil::read_file(path);
  mf.save(path);
  CHECK(testutil::read_file(path) == once);
  const auto loaded = manifest::RunManifest::load(path);
  CHECK(loaded.command == "synth");
  CHECK(loaded.seed == 64);
  REQUIRE(loaded.outputs.size() == 1);
  CHECK(loaded.outputs[0].first == artifact);
  CHECK(loaded.outputs[0].second == manifest::file_checksum_hex(artifact));
}
