#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gapbench/grammar.hpp"
#include "gapbench/tasks.hpp"

namespace gapbench {

// Candidate latents consistent with the observed prefix. Validated grammars
// keep this a singleton from the first symbol on; set semantics are kept so
// hand-built grammars degrade gracefully (ties predict the lowest id).
struct BeliefState {
  std::vector<std::uint32_t> latents;  // ascending

  bool singleton() const { return latents.size() == 1; }
};

BeliefState oracle_init(const Grammar& g, std::uint32_t first_observable);

struct OracleStepResult {
  BeliefState belief;
  std::uint32_t prediction = 0;
};

// Consumes one encoded token (the exact model view). Classification is
// structural, never tag-based: an exact one-hot is a symbol, the terminal
// index, or an unreachable observable (treated as a gap: belief and
// prediction repeat); anything else is dense noise (same repeat semantics).
OracleStepResult oracle_step(const Grammar& g, const BeliefState& belief,
                             std::span<const double> encoded);

struct OracleMismatch {
  std::uint32_t sequence = 0;
  std::uint32_t position = 0;
  std::uint32_t predicted = 0;
  std::uint32_t target = 0;
};

struct OracleReport {
  std::size_t sequences = 0;
  std::size_t symbol_positions = 0;
  std::size_t symbol_correct = 0;
  std::size_t all_positions = 0;
  std::size_t all_correct = 0;
  bool accuracy_defined = false;  // false for empty datasets
  double accuracy_symbols = 0.0;
  double accuracy_all = 0.0;
  std::vector<std::pair<double, double>> per_sequence;  // (symbols-only, all-positions)
  std::size_t mismatch_count = 0;
  std::vector<OracleMismatch> mismatches;  // first few, generation order

  // Certification is exact: every position right, no tolerance.
  bool certified() const {
    return accuracy_defined && symbol_correct == symbol_positions && all_correct == all_positions;
  }
};

OracleReport oracle_eval(const Grammar& g, const Dataset& dataset, int jobs = 1);

}  // namespace gapbench
