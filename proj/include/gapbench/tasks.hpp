#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gapbench/grammar.hpp"
#include "gapbench/rng.hpp"

namespace gapbench {

enum class TokenTag : std::uint8_t { Symbol, NoiseGap, NonGrammaticalGap, Terminal };

struct Token {
  TokenTag tag = TokenTag::Symbol;
  std::uint32_t id = 0;      // one-hot index (Symbol / NonGrammaticalGap / Terminal)
  std::uint32_t target = 0;  // latent to predict at this position
  // Dense payload, NoiseGap only; float so the 9-significant-digit text form
  // reloads bit-exactly.
  std::vector<float> noise;

  bool is_gap() const { return tag == TokenTag::NoiseGap || tag == TokenTag::NonGrammaticalGap; }
};

struct TokenStream {
  std::uint64_t seed = 0;  // derived per-sequence seed, recorded for reruns
  std::vector<Token> tokens;
};

enum class Split : std::uint8_t { train, test };

struct TaskConfig {
  int task = 1;
  std::uint32_t num_sequences = 0;
  std::uint32_t t_min = 1;  // trajectory length bounds, inclusive
  std::uint32_t t_max = 1;
  std::uint32_t n_min = 0;   // noise-gap run bounds (train mode)
  std::uint32_t n_max = 0;
  std::uint32_t gap_test = 0;  // fixed noise-gap run (test mode)
  double gamma = 0.2;          // noise amplitude
  double p_gap = 0.0;          // distractor probability per symbol (task 3)
  Split split = Split::train;
  std::uint64_t seed = 0;
};

struct Dataset {
  TaskConfig config;
  std::vector<TokenStream> streams;
};

enum class NoiseGapMode : std::uint8_t { train_range, test_fixed };

enum class AccuracyScope : std::uint8_t { symbols_only, all_positions };

// Per-sequence master for a (seed, split, task) corpus; phase streams derive
// from it so trajectory sampling and gap insertion stay independent.
std::uint64_t corpus_master(std::uint64_t seed, Split split, int task);

// Plain latent-symbol streams: one Symbol token per emitted latent, plus a
// Terminal token when the walk ends at the terminal state. jobs > 1 runs
// sequences in parallel; output is independent of jobs.
Dataset make_task1(const Grammar& g, const TaskConfig& config, int jobs = 1);

// After each Symbol, insert a run of dense noise tokens: n drawn from
// [n_min, n_max] in train_range mode, n = n_fixed in test_fixed mode (n_min /
// n_max ignored). Payload components are uniform in [0, gamma]; targets repeat
// the preceding symbol's latent. Terminal tokens get no gaps.
void insert_noise_gaps(TokenStream& stream, std::uint32_t vocab, std::uint32_t n_min,
                       std::uint32_t n_max, std::uint32_t n_fixed, double gamma, NoiseGapMode mode,
                       RngStream& rng);

// After each Symbol with latent z, with probability p_gap insert one one-hot
// token whose observable is drawn uniformly from the non-reachable set of z.
// Throws empty_distractor_set (naming the latent) if any on-stream latent can
// reach every observable; the stream is left unmodified in that case.
void insert_nongrammatical_gaps(TokenStream& stream, const Grammar& g, double p_gap,
                                RngStream& rng);

Dataset make_task2(const Grammar& g, const TaskConfig& config, int jobs = 1);
Dataset make_task3(const Grammar& g, const TaskConfig& config, int jobs = 1);

// Gap-length sweep sharing one set of underlying symbol streams; entry i
// fixes every noise-gap run at gap_lengths[i]. Length 0 reproduces the plain
// streams.
std::vector<Dataset> make_length_gen_eval(const Grammar& g, const TaskConfig& base,
                                          std::span<const std::uint32_t> gap_lengths,
                                          int jobs = 1);

// Model view of a stream: one-hot rows for id-bearing tokens, the dense
// payload verbatim for noise tokens.
std::vector<std::vector<double>> encode(const TokenStream& stream, std::uint32_t vocab);
void encode_token(const Token& token, std::uint32_t vocab, std::vector<double>& out);

double accuracy(std::span<const std::uint32_t> predictions, const TokenStream& stream,
                AccuracyScope scope);

}  // namespace gapbench
