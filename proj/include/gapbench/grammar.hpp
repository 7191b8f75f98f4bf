#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gapbench/rng.hpp"

namespace gapbench {

struct GrammarConfig {
  std::uint32_t num_observables = 4;  // V; the terminal observable is extra
  std::uint32_t ambiguity = 2;        // A; latents per observable
  double p_transition = 0.25;         // candidate-edge probability per ordered latent pair
  double p_end = 0.0;                 // probability mass on each row's terminal edge
  std::uint64_t seed = 0;
  std::uint32_t max_resample_attempts = 16;
};

struct Edge {
  std::uint32_t dst = 0;
  double prob = 0.0;
};

// Partially observable Markov chain over latents 0..latent_count-1 plus a
// distinguished terminal state. Latents are partitioned contiguously:
// partition(s) = [s*A, (s+1)*A), so observable_of(z) = z / A. The terminal
// state uses ids latent_count (latent) and num_observables (observable).
struct Grammar {
  GrammarConfig config;
  std::uint32_t latent_count = 0;
  std::vector<std::vector<Edge>> edges;    // per latent; latent targets only, dst ascending
  std::vector<double> end_prob;            // per latent; mass on the edge to the terminal
  std::vector<std::uint32_t> initial_set;  // ascending; at most one latent per observable

  std::uint32_t terminal_latent() const { return latent_count; }
  std::uint32_t terminal_observable() const { return config.num_observables; }
  // One-hot vocabulary: all observables plus the terminal symbol.
  std::uint32_t vocab_size() const { return config.num_observables + 1; }

  std::uint32_t observable_of(std::uint32_t z) const;  // throws unknown_latent
  std::span<const std::uint32_t> partition_bounds() const = delete;
  std::uint32_t partition_begin(std::uint32_t s) const { return s * config.ambiguity; }
  std::uint32_t partition_end(std::uint32_t s) const { return (s + 1) * config.ambiguity; }

  double transition_prob(std::uint32_t src, std::uint32_t dst) const;  // dst may be terminal
};

struct ValidationIssue {
  enum class Kind {
    ambiguous_successor,  // latent has >1 positive-probability successor in one partition
    ambiguous_initial,    // initial_set has >1 member for one observable
  };
  Kind kind;
  std::uint32_t observable = 0;
  std::uint32_t latent = 0;  // offending source latent (ambiguous_successor) or member
  std::string describe() const;
};

struct ValidationReport {
  bool pass = true;
  std::vector<ValidationIssue> issues;
};

GrammarConfig validate_config(const GrammarConfig& config);  // throws invalid_config

// Samples candidate edges, prunes them to one successor per (source,
// observable), repairs empty rows, distributes probability, and picks the
// initial latents. Resamples with the next derived seed until
// validate_disambiguable passes (bounded by max_resample_attempts).
Grammar build_grammar(const GrammarConfig& config);

ValidationReport validate_disambiguable(const Grammar& g);

// Latent walk from a uniformly drawn initial latent. Stops at the terminal
// state or after target_length states, whichever comes first; the terminal
// id is included when reached.
std::vector<std::uint32_t> sample_trajectory(const Grammar& g, std::uint32_t target_length,
                                             RngStream& rng);

std::uint32_t observe(const Grammar& g, std::uint32_t z);

// The unique positive-probability successor of z inside partition(s), if any.
std::optional<std::uint32_t> successor_in_partition(const Grammar& g, std::uint32_t z,
                                                    std::uint32_t s);

// Observables (terminal excluded) that no positive-probability successor of z
// emits; ascending.
std::vector<std::uint32_t> non_reachable_observables(const Grammar& g, std::uint32_t z);

}  // namespace gapbench
