#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "gapbench/error.hpp"
#include "gapbench/serialize.hpp"
#include "gapbench/tasks.hpp"
#include "support/stats.hpp"

using namespace gapbench;

namespace {

Grammar test_grammar(std::uint64_t seed = 8, double p_transition = 0.3) {
  GrammarConfig cfg;
  cfg.num_observables = 4;
  cfg.ambiguity = 2;
  cfg.p_transition = p_transition;
  cfg.seed = seed;
  return build_grammar(cfg);
}

TaskConfig base_config(int task, std::uint32_t n_seq) {
  TaskConfig cfg;
  cfg.task = task;
  cfg.num_sequences = n_seq;
  cfg.t_min = 3;
  cfg.t_max = 12;
  cfg.seed = 5;
  return cfg;
}

std::vector<Token> symbols_only(const TokenStream& stream) {
  std::vector<Token> out;
  for (const Token& t : stream.tokens)
    if (!t.is_gap()) out.push_back(t);
  return out;
}

}  // namespace

TEST_CASE("plain streams carry symbols whose ids match their latents") {
  Grammar g = test_grammar();
  Dataset ds = make_task1(g, base_config(1, 40));
  REQUIRE(ds.streams.size() == 40);
  for (const TokenStream& stream : ds.streams) {
    REQUIRE(!stream.tokens.empty());
    std::size_t symbols = 0;
    for (const Token& tok : stream.tokens) {
      if (tok.tag == TokenTag::Terminal) {
        CHECK(tok.id == g.terminal_observable());
        CHECK(tok.target == g.terminal_latent());
        CHECK(&tok == &stream.tokens.back());
      } else {
        REQUIRE(tok.tag == TokenTag::Symbol);
        CHECK(tok.target < g.latent_count);
        CHECK(tok.id == g.observable_of(tok.target));
        ++symbols;
      }
      CHECK(tok.noise.empty());
    }
    CHECK(symbols >= 1);
    CHECK(stream.tokens.size() <= 12);
    CHECK(stream.tokens.size() >= 3);
  }
}

TEST_CASE("generation is deterministic and independent of the job count") {
  Grammar g = test_grammar();
  TaskConfig cfg = base_config(2, 30);
  cfg.n_min = 1;
  cfg.n_max = 4;
  std::string one = serialize_dataset_jsonl(make_task2(g, cfg, 1), grammar_hash(g));
  std::string four = serialize_dataset_jsonl(make_task2(g, cfg, 4), grammar_hash(g));
  CHECK(one == four);
  CHECK(one == serialize_dataset_jsonl(make_task2(g, cfg, 1), grammar_hash(g)));
}

TEST_CASE("train and test corpora differ, as do different tasks") {
  Grammar g = test_grammar();
  TaskConfig cfg = base_config(1, 10);
  Dataset train = make_task1(g, cfg);
  cfg.split = Split::test;
  Dataset test = make_task1(g, cfg);
  CHECK(serialize_dataset_jsonl(train, 0) != serialize_dataset_jsonl(test, 0));
  CHECK(corpus_master(5, Split::train, 1) != corpus_master(5, Split::train, 2));
}

TEST_CASE("fixed-length noise gaps follow every symbol") {
  Grammar g = test_grammar();
  TaskConfig cfg = base_config(2, 25);
  cfg.split = Split::test;
  cfg.gap_test = 3;
  cfg.gamma = 0.2;
  Dataset ds = make_task2(g, cfg);
  for (const TokenStream& stream : ds.streams) {
    for (std::size_t i = 0; i < stream.tokens.size(); ++i) {
      const Token& tok = stream.tokens[i];
      if (tok.tag == TokenTag::Symbol) {
        for (std::size_t j = 1; j <= 3; ++j) {
          REQUIRE(i + j < stream.tokens.size());
          const Token& gap = stream.tokens[i + j];
          CHECK(gap.tag == TokenTag::NoiseGap);
          CHECK(gap.target == tok.target);
        }
      }
      if (tok.tag == TokenTag::Terminal) CHECK(&tok == &stream.tokens.back());
    }
  }
}

TEST_CASE("noise payloads stay inside [0, gamma] with the vocabulary size") {
  Grammar g = test_grammar();
  TaskConfig cfg = base_config(2, 30);
  cfg.n_min = 0;
  cfg.n_max = 5;
  cfg.gamma = 0.2;
  Dataset ds = make_task2(g, cfg);
  std::size_t gaps = 0;
  for (const TokenStream& stream : ds.streams)
    for (const Token& tok : stream.tokens)
      if (tok.tag == TokenTag::NoiseGap) {
        ++gaps;
        REQUIRE(tok.noise.size() == g.vocab_size());
        for (float x : tok.noise) {
          CHECK(x >= 0.0f);
          CHECK(double(x) <= 0.2);
        }
      }
  CHECK(gaps > 0);
}

TEST_CASE("train-mode gap runs are uniform over the configured range") {
  Grammar g = test_grammar();
  TaskConfig cfg = base_config(2, 400);
  cfg.t_min = 8;
  cfg.t_max = 8;
  cfg.n_min = 0;
  cfg.n_max = 3;
  Dataset ds = make_task2(g, cfg);

  std::array<int, 4> hist{};
  for (const TokenStream& stream : ds.streams) {
    std::size_t i = 0;
    while (i < stream.tokens.size()) {
      if (stream.tokens[i].tag != TokenTag::Symbol) {
        ++i;
        continue;
      }
      std::size_t run = 0;
      while (i + 1 + run < stream.tokens.size() &&
             stream.tokens[i + 1 + run].tag == TokenTag::NoiseGap)
        ++run;
      REQUIRE(run <= 3);
      hist[run]++;
      i += 1 + run;
    }
  }
  int total = hist[0] + hist[1] + hist[2] + hist[3];
  REQUIRE(total == 400 * 8);
  double chi2 = 0.0, expected = total / 4.0;
  for (int c : hist) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < gbtest::chi2_critical(3, 0.999));
}

TEST_CASE("distractor gaps appear per symbol with probability p_gap") {
  // Sparse rows keep every latent's distractor set non-empty.
  Grammar g = test_grammar(8, 0.1);
  TaskConfig cfg = base_config(3, 40);

  SUBCASE("p_gap zero inserts nothing") {
    cfg.p_gap = 0.0;
    Dataset ds = make_task3(g, cfg);
    for (const TokenStream& stream : ds.streams)
      for (const Token& tok : stream.tokens) CHECK_FALSE(tok.is_gap());
  }

  SUBCASE("p_gap one inserts exactly one gap after every symbol") {
    cfg.p_gap = 1.0;
    Dataset ds = make_task3(g, cfg);
    for (const TokenStream& stream : ds.streams) {
      std::size_t symbols = 0, gaps = 0;
      for (std::size_t i = 0; i < stream.tokens.size(); ++i) {
        const Token& tok = stream.tokens[i];
        if (tok.tag == TokenTag::Symbol) {
          ++symbols;
          REQUIRE(i + 1 < stream.tokens.size());
          CHECK(stream.tokens[i + 1].tag == TokenTag::NonGrammaticalGap);
        } else if (tok.tag == TokenTag::NonGrammaticalGap) {
          ++gaps;
          REQUIRE(i > 0);
          const Token& prev = stream.tokens[i - 1];
          CHECK(prev.tag == TokenTag::Symbol);
          CHECK(tok.target == prev.target);
          auto sbar = non_reachable_observables(g, prev.target);
          CHECK(std::find(sbar.begin(), sbar.end(), tok.id) != sbar.end());
        }
      }
      CHECK(gaps == symbols);
    }
  }
}

TEST_CASE("a latent reaching every observable rejects distractor insertion") {
  Grammar g;
  g.config.num_observables = 2;
  g.config.ambiguity = 1;
  g.latent_count = 2;
  g.edges = {{{0, 0.5}, {1, 0.5}}, {{0, 1.0}}};
  g.end_prob = {0.0, 0.0};
  g.initial_set = {0, 1};

  TokenStream stream;
  Token tok;
  tok.tag = TokenTag::Symbol;
  tok.id = 0;
  tok.target = 0;  // reaches both observables; no distractor exists
  stream.tokens.push_back(tok);
  TokenStream before = stream;

  RngStream rng(1);
  try {
    insert_nongrammatical_gaps(stream, g, 1.0, rng);
    FAIL("expected empty_distractor_set");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::empty_distractor_set);
    CHECK(std::string(e.what()).find("latent 0") != std::string::npos);
  }
  REQUIRE(stream.tokens.size() == before.tokens.size());
  CHECK(stream.tokens[0].tag == before.tokens[0].tag);
}

TEST_CASE("the gap-length family shares symbol content across lengths") {
  Grammar g = test_grammar();
  TaskConfig cfg = base_config(4, 15);
  cfg.split = Split::test;
  std::vector<std::uint32_t> lengths = {0, 4, 9};
  auto family = make_length_gen_eval(g, cfg, lengths);
  REQUIRE(family.size() == 3);

  // Length zero is the plain corpus.
  for (const TokenStream& stream : family[0].streams)
    for (const Token& tok : stream.tokens) CHECK_FALSE(tok.is_gap());

  for (std::size_t fi = 1; fi < family.size(); ++fi) {
    REQUIRE(family[fi].streams.size() == family[0].streams.size());
    CHECK(family[fi].config.gap_test == lengths[fi]);
    for (std::size_t s = 0; s < family[fi].streams.size(); ++s) {
      auto plain = symbols_only(family[0].streams[s]);
      auto stripped = symbols_only(family[fi].streams[s]);
      REQUIRE(plain.size() == stripped.size());
      for (std::size_t i = 0; i < plain.size(); ++i) {
        CHECK(plain[i].id == stripped[i].id);
        CHECK(plain[i].target == stripped[i].target);
      }
      // Every symbol is followed by exactly the configured run.
      const TokenStream& stream = family[fi].streams[s];
      for (std::size_t i = 0; i < stream.tokens.size(); ++i) {
        if (stream.tokens[i].tag != TokenTag::Symbol) continue;
        std::size_t run = 0;
        while (i + 1 + run < stream.tokens.size() &&
               stream.tokens[i + 1 + run].tag == TokenTag::NoiseGap)
          ++run;
        CHECK(run == lengths[fi]);
      }
    }
  }
}

TEST_CASE("encode produces one-hot rows and verbatim payloads") {
  Token sym;
  sym.tag = TokenTag::Symbol;
  sym.id = 2;
  std::vector<double> row;
  encode_token(sym, 5, row);
  CHECK(row == std::vector<double>{0, 0, 1, 0, 0});

  Token term;
  term.tag = TokenTag::Terminal;
  term.id = 4;
  encode_token(term, 5, row);
  CHECK(row == std::vector<double>{0, 0, 0, 0, 1});

  Token noise;
  noise.tag = TokenTag::NoiseGap;
  noise.noise = {0.1f, 0.0f, 0.05f, 0.2f, 0.15f};
  encode_token(noise, 5, row);
  REQUIRE(row.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(row[i] == double(noise.noise[i]));

  Token bad;
  bad.tag = TokenTag::Symbol;
  bad.id = 9;
  CHECK_THROWS_AS(encode_token(bad, 5, row), Error);

  Token short_noise;
  short_noise.tag = TokenTag::NoiseGap;
  short_noise.noise = {0.1f};
  CHECK_THROWS_AS(encode_token(short_noise, 5, row), Error);
}

TEST_CASE("accuracy counts positions by scope") {
  TokenStream stream;
  auto add = [&](TokenTag tag, std::uint32_t target) {
    Token t;
    t.tag = tag;
    t.target = target;
    if (tag == TokenTag::NoiseGap) t.noise = {0.0f};
    stream.tokens.push_back(t);
  };
  add(TokenTag::Symbol, 3);
  add(TokenTag::NoiseGap, 3);
  add(TokenTag::Symbol, 5);
  add(TokenTag::NonGrammaticalGap, 5);
  add(TokenTag::Symbol, 7);

  std::vector<std::uint32_t> pred = {3, 0, 5, 5, 1};
  CHECK(accuracy(pred, stream, AccuracyScope::symbols_only) == doctest::Approx(2.0 / 3.0));
  CHECK(accuracy(pred, stream, AccuracyScope::all_positions) == doctest::Approx(3.0 / 5.0));

  std::vector<std::uint32_t> wrong_len = {1, 2};
  CHECK_THROWS_AS(accuracy(wrong_len, stream, AccuracyScope::symbols_only), Error);
}

TEST_CASE("task config validation rejects inverted bounds") {
  Grammar g = test_grammar();
  TaskConfig cfg = base_config(1, 5);
  cfg.t_min = 5;
  cfg.t_max = 2;
  CHECK_THROWS_AS(make_task1(g, cfg), Error);
  cfg = base_config(2, 5);
  cfg.n_min = 4;
  cfg.n_max = 1;
  CHECK_THROWS_AS(make_task2(g, cfg), Error);
  cfg = base_config(3, 5);
  cfg.p_gap = 1.5;
  CHECK_THROWS_AS(make_task3(g, cfg), Error);
}
