#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "gapbench/error.hpp"
#include "gapbench/serialize.hpp"
#include "gapbench/tasks.hpp"

using namespace gapbench;

namespace {

Grammar test_grammar(std::uint64_t seed = 8) {
  GrammarConfig cfg;
  cfg.num_observables = 4;
  cfg.ambiguity = 2;
  cfg.p_transition = 0.3;
  cfg.p_end = 0.01;
  cfg.seed = seed;
  return build_grammar(cfg);
}

Dataset noisy_dataset() {
  Grammar g = test_grammar();
  TaskConfig cfg;
  cfg.task = 2;
  cfg.num_sequences = 12;
  cfg.t_min = 2;
  cfg.t_max = 10;
  cfg.n_min = 0;
  cfg.n_max = 4;
  cfg.gamma = 0.2;
  cfg.seed = 77;
  return make_task2(g, cfg);
}

bool streams_equal(const Dataset& a, const Dataset& b) {
  if (a.streams.size() != b.streams.size()) return false;
  for (std::size_t i = 0; i < a.streams.size(); ++i) {
    if (a.streams[i].seed != b.streams[i].seed) return false;
    const auto& ta = a.streams[i].tokens;
    const auto& tb = b.streams[i].tokens;
    if (ta.size() != tb.size()) return false;
    for (std::size_t j = 0; j < ta.size(); ++j) {
      if (ta[j].tag != tb[j].tag || ta[j].id != tb[j].id || ta[j].target != tb[j].target)
        return false;
      if (ta[j].noise.size() != tb[j].noise.size()) return false;
      // Bit-exact payload comparison; equality on floats is the contract.
      if (!ta[j].noise.empty() &&
          std::memcmp(ta[j].noise.data(), tb[j].noise.data(),
                      ta[j].noise.size() * sizeof(float)) != 0)
        return false;
    }
  }
  return true;
}

std::filesystem::path fresh_dir(const char* name) {
  auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("grammar text round-trips byte for byte") {
  Grammar g = test_grammar();
  std::string text = serialize_grammar(g);
  Grammar back = parse_grammar(text);
  CHECK(serialize_grammar(back) == text);
  CHECK(grammar_hash(back) == grammar_hash(g));
  CHECK(grammar_hash_hex(g).size() == 16);

  CHECK(back.latent_count == g.latent_count);
  CHECK(back.initial_set == g.initial_set);
  for (std::uint32_t z = 0; z < g.latent_count; ++z) {
    REQUIRE(back.edges[z].size() == g.edges[z].size());
    CHECK(back.end_prob[z] == g.end_prob[z]);
    for (std::size_t e = 0; e < g.edges[z].size(); ++e) {
      CHECK(back.edges[z][e].dst == g.edges[z][e].dst);
      CHECK(back.edges[z][e].prob == g.edges[z][e].prob);
    }
  }
}

TEST_CASE("grammar parsing rejects malformed text") {
  CHECK_THROWS_AS(parse_grammar(""), Error);
  CHECK_THROWS_AS(parse_grammar("not a grammar"), Error);
  Grammar g = test_grammar();
  std::string text = serialize_grammar(g);
  CHECK_THROWS_AS(parse_grammar(text.substr(0, text.size() / 2)), Error);
}

TEST_CASE("jsonl records round-trip byte for byte") {
  Dataset ds = noisy_dataset();
  std::uint64_t h = 0x1234abcd5678ull;
  std::string text = serialize_dataset_jsonl(ds, h);
  LoadedDataset back = parse_dataset_jsonl(text);
  CHECK(back.grammar_hash == h);
  CHECK(streams_equal(back.dataset, ds));
  CHECK(serialize_dataset_jsonl(back.dataset, back.grammar_hash) == text);
}

TEST_CASE("binary records round-trip to the same bytes") {
  Dataset ds = noisy_dataset();
  std::uint64_t h = 99;
  std::vector<std::uint8_t> bytes = serialize_dataset_binary(ds, h);
  REQUIRE(bytes.size() > 4);
  CHECK(std::memcmp(bytes.data(), "GBD1", 4) == 0);
  LoadedDataset back = parse_dataset_binary(bytes);
  CHECK(back.grammar_hash == h);
  CHECK(streams_equal(back.dataset, ds));
  CHECK(serialize_dataset_binary(back.dataset, back.grammar_hash) == bytes);
}

TEST_CASE("text and binary forms decode to the same dataset") {
  Dataset ds = noisy_dataset();
  LoadedDataset via_text = parse_dataset_jsonl(serialize_dataset_jsonl(ds, 5));
  LoadedDataset via_binary = parse_dataset_binary(serialize_dataset_binary(ds, 5));
  CHECK(streams_equal(via_text.dataset, via_binary.dataset));
}

TEST_CASE("binary parsing rejects truncation and a bad magic") {
  Dataset ds = noisy_dataset();
  std::vector<std::uint8_t> bytes = serialize_dataset_binary(ds, 1);
  std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + std::ptrdiff_t(bytes.size() / 2));
  CHECK_THROWS_AS(parse_dataset_binary(cut), Error);
  bytes[0] = 'X';
  CHECK_THROWS_AS(parse_dataset_binary(bytes), Error);
}

TEST_CASE("jsonl parsing rejects garbage") {
  CHECK_THROWS_AS(parse_dataset_jsonl("{\"not\": \"a dataset\"}"), Error);
  CHECK_THROWS_AS(parse_dataset_jsonl("garbage\n"), Error);
}

TEST_CASE("write_dataset produces records plus a manifest that load back") {
  auto dir = fresh_dir("gb-serialize-roundtrip");
  Dataset ds = noisy_dataset();
  Grammar g = test_grammar();
  std::uint64_t h = grammar_hash(g);

  for (DataFormat format : {DataFormat::text, DataFormat::binary}) {
    std::string stem = format == DataFormat::text ? "split-text" : "split-bin";
    auto records = write_dataset(dir, stem, ds, h, format);
    CHECK(std::filesystem::exists(records));
    auto manifest_path = dir / (stem + ".manifest.json");
    REQUIRE(std::filesystem::exists(manifest_path));

    ManifestInfo info = parse_dataset_manifest(read_text_file(manifest_path));
    CHECK(info.task == ds.config.task);
    CHECK(info.split == ds.config.split);
    CHECK(info.grammar_hash == h);
    CHECK(info.num_sequences == ds.streams.size());
    CHECK(info.format == format);
    CHECK(info.records_file == records.filename().string());

    LoadedDataset back = load_dataset(manifest_path, h);
    CHECK(streams_equal(back.dataset, ds));
  }
}

TEST_CASE("load_dataset rejects a mismatched grammar hash") {
  auto dir = fresh_dir("gb-serialize-hash");
  Dataset ds = noisy_dataset();
  write_dataset(dir, "split", ds, 111, DataFormat::text);
  CHECK_THROWS_AS(load_dataset(dir / "split.manifest.json", 222), Error);
  try {
    load_dataset(dir / "split.manifest.json", 222);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::hash_mismatch);
  }
  // Zero means "no expectation".
  LoadedDataset back = load_dataset(dir / "split.manifest.json", 0);
  CHECK(back.grammar_hash == 111);
}

TEST_CASE("missing files surface as errors") {
  CHECK_THROWS_AS(read_text_file("/nonexistent/gapbench/file.txt"), Error);
  CHECK_THROWS_AS(load_dataset("/nonexistent/gapbench/m.json"), Error);
}
