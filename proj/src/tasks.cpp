#include "gapbench/tasks.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "gapbench/error.hpp"
#include "gapbench/parallel.hpp"

namespace gapbench {

namespace {

void check_task_config(const TaskConfig& cfg) {
  if (cfg.t_min == 0 || cfg.t_max < cfg.t_min) {
    throw Error(Errc::invalid_config, "trajectory length bounds must satisfy 1 <= t_min <= t_max");
  }
  if (cfg.n_max < cfg.n_min) {
    throw Error(Errc::invalid_config, "noise gap bounds must satisfy n_min <= n_max");
  }
  if (!(cfg.gamma >= 0.0)) throw Error(Errc::invalid_config, "gamma must be non-negative");
  if (!(cfg.p_gap >= 0.0 && cfg.p_gap <= 1.0)) {
    throw Error(Errc::invalid_config, "p_gap must lie in [0, 1]");
  }
}

TokenStream sample_stream(const Grammar& g, const TaskConfig& cfg, std::uint64_t master,
                          std::uint64_t index) {
  TokenStream stream;
  stream.seed = derive_seed(master, Phase::trajectory, index);
  RngStream rng(stream.seed);
  std::uint32_t target_length = cfg.t_min + static_cast<std::uint32_t>(rng.uniform_below(
                                                cfg.t_max - cfg.t_min + std::uint64_t(1)));
  std::vector<std::uint32_t> traj = sample_trajectory(g, target_length, rng);
  stream.tokens.reserve(traj.size());
  for (std::uint32_t z : traj) {
    Token tok;
    tok.target = z;
    if (z == g.terminal_latent()) {
      tok.tag = TokenTag::Terminal;
      tok.id = g.terminal_observable();
    } else {
      tok.tag = TokenTag::Symbol;
      tok.id = z / g.config.ambiguity;
    }
    stream.tokens.push_back(std::move(tok));
  }
  return stream;
}

float noise_component(double gamma, RngStream& rng) {
  float v = static_cast<float>(rng.uniform01() * gamma);
  // Float rounding may land a hair above gamma; pull it back inside.
  if (static_cast<double>(v) > gamma) v = std::nextafterf(v, 0.0f);
  return v;
}

}  // namespace

std::uint64_t corpus_master(std::uint64_t seed, Split split, int task) {
  std::uint64_t salt = 0xc0500ull + 16u * static_cast<std::uint64_t>(task) +
                       static_cast<std::uint64_t>(split);
  return splitmix64(seed ^ splitmix64(salt));
}

Dataset make_task1(const Grammar& g, const TaskConfig& config, int jobs) {
  check_task_config(config);
  std::uint64_t master = corpus_master(config.seed, config.split, config.task);
  Dataset ds;
  ds.config = config;
  ds.streams.resize(config.num_sequences);
  parallel_for(config.num_sequences, jobs,
               [&](std::size_t i) { ds.streams[i] = sample_stream(g, config, master, i); });
  return ds;
}

void insert_noise_gaps(TokenStream& stream, std::uint32_t vocab, std::uint32_t n_min,
                       std::uint32_t n_max, std::uint32_t n_fixed, double gamma, NoiseGapMode mode,
                       RngStream& rng) {
  if (mode == NoiseGapMode::train_range && n_max < n_min) {
    throw Error(Errc::invalid_config, "noise gap bounds must satisfy n_min <= n_max");
  }
  std::vector<Token> out;
  out.reserve(stream.tokens.size());
  for (const Token& tok : stream.tokens) {
    out.push_back(tok);
    if (tok.tag != TokenTag::Symbol) continue;
    std::uint32_t n = mode == NoiseGapMode::train_range
                          ? n_min + static_cast<std::uint32_t>(
                                        rng.uniform_below(n_max - n_min + std::uint64_t(1)))
                          : n_fixed;
    for (std::uint32_t i = 0; i < n; ++i) {
      Token gap;
      gap.tag = TokenTag::NoiseGap;
      gap.target = tok.target;
      gap.noise.resize(vocab);
      for (std::uint32_t c = 0; c < vocab; ++c) gap.noise[c] = noise_component(gamma, rng);
      out.push_back(std::move(gap));
    }
  }
  stream.tokens = std::move(out);
}

void insert_nongrammatical_gaps(TokenStream& stream, const Grammar& g, double p_gap,
                                RngStream& rng) {
  if (!(p_gap >= 0.0 && p_gap <= 1.0)) {
    throw Error(Errc::invalid_config, "p_gap must lie in [0, 1]");
  }
  // Fail before mutating or consuming randomness: every on-stream latent must
  // have at least one unreachable observable to draw from.
  std::vector<std::vector<std::uint32_t>> sbar(g.latent_count);
  std::vector<bool> have(g.latent_count, false);
  for (const Token& tok : stream.tokens) {
    if (tok.tag != TokenTag::Symbol) continue;
    if (!have[tok.target]) {
      sbar[tok.target] = non_reachable_observables(g, tok.target);
      have[tok.target] = true;
      if (sbar[tok.target].empty()) {
        throw Error(Errc::empty_distractor_set,
                    "latent " + std::to_string(tok.target) +
                        " reaches every observable; no distractor available");
      }
    }
  }
  std::vector<Token> out;
  out.reserve(stream.tokens.size());
  for (const Token& tok : stream.tokens) {
    out.push_back(tok);
    if (tok.tag != TokenTag::Symbol) continue;
    if (!rng.bernoulli(p_gap)) continue;
    const auto& choices = sbar[tok.target];
    Token gap;
    gap.tag = TokenTag::NonGrammaticalGap;
    gap.id = choices[rng.uniform_below(choices.size())];
    gap.target = tok.target;
    out.push_back(std::move(gap));
  }
  stream.tokens = std::move(out);
}

Dataset make_task2(const Grammar& g, const TaskConfig& config, int jobs) {
  Dataset ds = make_task1(g, config, jobs);
  std::uint64_t master = corpus_master(config.seed, config.split, config.task);
  NoiseGapMode mode =
      config.split == Split::train ? NoiseGapMode::train_range : NoiseGapMode::test_fixed;
  parallel_for(ds.streams.size(), jobs, [&](std::size_t i) {
    RngStream rng(derive_seed(master, Phase::noise_gaps, i));
    insert_noise_gaps(ds.streams[i], g.vocab_size(), config.n_min, config.n_max, config.gap_test,
                      config.gamma, mode, rng);
  });
  return ds;
}

Dataset make_task3(const Grammar& g, const TaskConfig& config, int jobs) {
  Dataset ds = make_task1(g, config, jobs);
  std::uint64_t master = corpus_master(config.seed, config.split, config.task);
  parallel_for(ds.streams.size(), jobs, [&](std::size_t i) {
    RngStream rng(derive_seed(master, Phase::distractor_gaps, i));
    insert_nongrammatical_gaps(ds.streams[i], g, config.p_gap, rng);
  });
  return ds;
}

std::vector<Dataset> make_length_gen_eval(const Grammar& g, const TaskConfig& base,
                                          std::span<const std::uint32_t> gap_lengths, int jobs) {
  Dataset plain = make_task1(g, base, jobs);
  std::uint64_t master = corpus_master(base.seed, base.split, base.task);
  std::vector<Dataset> family;
  family.reserve(gap_lengths.size());
  for (std::uint32_t glen : gap_lengths) {
    Dataset ds;
    ds.config = base;
    ds.config.gap_test = glen;
    ds.streams = plain.streams;
    // Payload streams are salted by gap length; symbol content is shared.
    std::uint64_t gap_master = splitmix64(master ^ splitmix64(0x9a90000ull + glen));
    parallel_for(ds.streams.size(), jobs, [&](std::size_t i) {
      RngStream rng(derive_seed(gap_master, Phase::noise_gaps, i));
      insert_noise_gaps(ds.streams[i], g.vocab_size(), 0, 0, glen, base.gamma,
                        NoiseGapMode::test_fixed, rng);
    });
    family.push_back(std::move(ds));
  }
  return family;
}

void encode_token(const Token& token, std::uint32_t vocab, std::vector<double>& out) {
  out.assign(vocab, 0.0);
  if (token.tag == TokenTag::NoiseGap) {
    if (token.noise.size() != vocab) {
      throw Error(Errc::length_mismatch,
                  "noise payload has " + std::to_string(token.noise.size()) +
                      " components, vocabulary needs " + std::to_string(vocab));
    }
    for (std::uint32_t c = 0; c < vocab; ++c) out[c] = static_cast<double>(token.noise[c]);
    return;
  }
  if (token.id >= vocab) {
    throw Error(Errc::out_of_range_id, "token id " + std::to_string(token.id) +
                                           " outside vocabulary of size " + std::to_string(vocab));
  }
  out[token.id] = 1.0;
}

std::vector<std::vector<double>> encode(const TokenStream& stream, std::uint32_t vocab) {
  std::vector<std::vector<double>> out(stream.tokens.size());
  for (std::size_t i = 0; i < stream.tokens.size(); ++i) {
    encode_token(stream.tokens[i], vocab, out[i]);
  }
  return out;
}

double accuracy(std::span<const std::uint32_t> predictions, const TokenStream& stream,
                AccuracyScope scope) {
  if (predictions.size() != stream.tokens.size()) {
    throw Error(Errc::length_mismatch, "got " + std::to_string(predictions.size()) +
                                           " predictions for " +
                                           std::to_string(stream.tokens.size()) + " tokens");
  }
  std::size_t total = 0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < stream.tokens.size(); ++i) {
    if (scope == AccuracyScope::symbols_only && stream.tokens[i].is_gap()) continue;
    ++total;
    if (predictions[i] == stream.tokens[i].target) ++correct;
  }
  if (total == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace gapbench
