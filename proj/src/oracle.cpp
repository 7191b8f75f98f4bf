#include "gapbench/oracle.hpp"

#include <algorithm>
#include <string>

#include "gapbench/error.hpp"
#include "gapbench/parallel.hpp"

namespace gapbench {

namespace {

constexpr std::size_t kMismatchKeep = 64;

// Index of the single 1.0 in an otherwise all-zero vector, or -1. Exact
// comparisons are intentional: one-hots encode exactly, and noise components
// live in [0, gamma] with gamma < 1, so the two never collide.
int one_hot_index(std::span<const double> v) {
  int idx = -1;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == 0.0) continue;
    if (v[i] != 1.0 || idx >= 0) return -1;
    idx = static_cast<int>(i);
  }
  return idx;
}

}  // namespace

BeliefState oracle_init(const Grammar& g, std::uint32_t first_observable) {
  if (first_observable >= g.config.num_observables) {
    throw Error(Errc::out_of_range_id,
                "first observable " + std::to_string(first_observable) + " out of range");
  }
  BeliefState belief;
  for (std::uint32_t z : g.initial_set) {
    if (z / g.config.ambiguity == first_observable) belief.latents.push_back(z);
  }
  if (belief.latents.empty()) {
    throw Error(Errc::empty_belief, "no initial latent emits observable " +
                                        std::to_string(first_observable));
  }
  return belief;
}

OracleStepResult oracle_step(const Grammar& g, const BeliefState& belief,
                             std::span<const double> encoded) {
  if (belief.latents.empty()) {
    throw Error(Errc::empty_belief, "oracle stepped with an empty belief");
  }
  if (encoded.size() != g.vocab_size()) {
    throw Error(Errc::length_mismatch, "encoded token has " + std::to_string(encoded.size()) +
                                           " components, expected " +
                                           std::to_string(g.vocab_size()));
  }

  OracleStepResult result;
  int idx = one_hot_index(encoded);
  if (idx < 0) {  // dense noise: hold state, repeat the current latent
    result.belief = belief;
    result.prediction = belief.latents.front();
    return result;
  }
  std::uint32_t s = static_cast<std::uint32_t>(idx);
  if (s == g.terminal_observable()) {
    result.belief = belief;
    result.prediction = g.terminal_latent();
    return result;
  }
  for (std::uint32_t z : belief.latents) {
    if (auto nxt = successor_in_partition(g, z, s)) {
      result.belief.latents.push_back(*nxt);
    }
  }
  if (result.belief.latents.empty()) {
    // No belief latent can reach this observable: a non-grammatical gap.
    result.belief = belief;
    result.prediction = belief.latents.front();
    return result;
  }
  std::sort(result.belief.latents.begin(), result.belief.latents.end());
  result.belief.latents.erase(
      std::unique(result.belief.latents.begin(), result.belief.latents.end()),
      result.belief.latents.end());
  result.prediction = result.belief.latents.front();
  return result;
}

OracleReport oracle_eval(const Grammar& g, const Dataset& dataset, int jobs) {
  struct SequenceResult {
    std::size_t symbol_positions = 0, symbol_correct = 0;
    std::size_t all_positions = 0, all_correct = 0;
    std::vector<OracleMismatch> mismatches;
    double acc_symbols = 0.0, acc_all = 0.0;
  };

  std::vector<SequenceResult> partial(dataset.streams.size());
  parallel_for(dataset.streams.size(), jobs, [&](std::size_t si) {
    const TokenStream& stream = dataset.streams[si];
    SequenceResult& r = partial[si];
    std::vector<double> view;
    BeliefState belief;
    for (std::size_t pos = 0; pos < stream.tokens.size(); ++pos) {
      const Token& tok = stream.tokens[pos];
      encode_token(tok, g.vocab_size(), view);
      std::uint32_t prediction;
      if (pos == 0) {
        int idx = one_hot_index(view);
        if (idx < 0 || static_cast<std::uint32_t>(idx) >= g.config.num_observables) {
          throw Error(Errc::empty_belief,
                      "sequence " + std::to_string(si) + " does not start with a symbol");
        }
        belief = oracle_init(g, static_cast<std::uint32_t>(idx));
        prediction = belief.latents.front();
      } else {
        OracleStepResult step = oracle_step(g, belief, view);
        belief = std::move(step.belief);
        prediction = step.prediction;
      }
      bool correct = prediction == tok.target;
      ++r.all_positions;
      r.all_correct += correct;
      if (!tok.is_gap()) {
        ++r.symbol_positions;
        r.symbol_correct += correct;
      }
      if (!correct && r.mismatches.size() < kMismatchKeep) {
        r.mismatches.push_back({static_cast<std::uint32_t>(si), static_cast<std::uint32_t>(pos),
                                prediction, tok.target});
      }
    }
    r.acc_symbols = r.symbol_positions
                        ? static_cast<double>(r.symbol_correct) / r.symbol_positions
                        : 1.0;
    r.acc_all = r.all_positions ? static_cast<double>(r.all_correct) / r.all_positions : 1.0;
  });

  OracleReport report;
  report.sequences = dataset.streams.size();
  report.per_sequence.reserve(partial.size());
  for (const SequenceResult& r : partial) {
    report.symbol_positions += r.symbol_positions;
    report.symbol_correct += r.symbol_correct;
    report.all_positions += r.all_positions;
    report.all_correct += r.all_correct;
    report.per_sequence.emplace_back(r.acc_symbols, r.acc_all);
    for (const OracleMismatch& m : r.mismatches) {
      if (report.mismatches.size() < kMismatchKeep) report.mismatches.push_back(m);
    }
  }
  report.mismatch_count = report.all_positions - report.all_correct;
  report.accuracy_defined = report.all_positions > 0;
  if (report.accuracy_defined) {
    report.accuracy_symbols =
        static_cast<double>(report.symbol_correct) / static_cast<double>(report.symbol_positions);
    report.accuracy_all =
        static_cast<double>(report.all_correct) / static_cast<double>(report.all_positions);
  }
  return report;
}

}  // namespace gapbench
