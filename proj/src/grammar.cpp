#include "gapbench/grammar.hpp"

#include <algorithm>
#include <cmath>

#include "gapbench/error.hpp"

namespace gapbench {

std::uint32_t Grammar::observable_of(std::uint32_t z) const {
  if (z == latent_count) return terminal_observable();
  if (z > latent_count) {
    throw Error(Errc::unknown_latent, "latent id " + std::to_string(z) + " out of range (|Z| = " +
                                          std::to_string(latent_count) + ")");
  }
  return z / config.ambiguity;
}

double Grammar::transition_prob(std::uint32_t src, std::uint32_t dst) const {
  if (src >= latent_count) {
    throw Error(Errc::unknown_latent, "source latent " + std::to_string(src) + " out of range");
  }
  if (dst == terminal_latent()) return end_prob[src];
  for (const Edge& e : edges[src]) {
    if (e.dst == dst) return e.prob;
  }
  return 0.0;
}

std::string ValidationIssue::describe() const {
  switch (kind) {
    case Kind::ambiguous_successor:
      return "observable " + std::to_string(observable) + ": latent " + std::to_string(latent) +
             " has multiple positive-probability successors in its partition";
    case Kind::ambiguous_initial:
      return "observable " + std::to_string(observable) + ": initial set has multiple members (" +
             std::to_string(latent) + " among them)";
  }
  return "unknown issue";
}

GrammarConfig validate_config(const GrammarConfig& config) {
  if (config.num_observables == 0) {
    throw Error(Errc::invalid_config, "num_observables must be positive");
  }
  if (config.ambiguity == 0) throw Error(Errc::invalid_config, "ambiguity must be positive");
  if (!(config.p_transition >= 0.0 && config.p_transition <= 1.0)) {
    throw Error(Errc::invalid_config, "p_transition must lie in [0, 1]");
  }
  if (!(config.p_end >= 0.0 && config.p_end <= 1.0)) {
    throw Error(Errc::invalid_config, "p_end must lie in [0, 1]");
  }
  if (config.max_resample_attempts == 0) {
    throw Error(Errc::invalid_config, "max_resample_attempts must be positive");
  }
  std::uint64_t z = std::uint64_t(config.num_observables) * config.ambiguity;
  if (z > (1u << 24)) throw Error(Errc::invalid_config, "latent space too large");
  return config;
}

namespace {

// One construction pass. Draw order is part of the reproducibility contract:
// per source row ascending, (1) a candidate coin per destination ascending,
// (2) one pick per observable with >= 2 surviving candidates, ascending; then
// one pick per empty row ascending; then one initial pick per observable
// ascending.
Grammar build_once(const GrammarConfig& cfg, RngStream& rng) {
  const std::uint32_t a = cfg.ambiguity;
  const std::uint32_t v = cfg.num_observables;
  const std::uint32_t z_count = v * a;

  Grammar g;
  g.config = cfg;
  g.latent_count = z_count;
  g.edges.assign(z_count, {});
  g.end_prob.assign(z_count, cfg.p_end);

  std::vector<std::uint32_t> candidates;
  for (std::uint32_t src = 0; src < z_count; ++src) {
    candidates.clear();
    for (std::uint32_t dst = 0; dst < z_count; ++dst) {
      if (rng.bernoulli(cfg.p_transition)) candidates.push_back(dst);
    }
    // Candidates are sorted, and partitions are contiguous id blocks, so one
    // linear sweep groups them by observable. Keeping one candidate per
    // observable enforces exact disambiguation by construction.
    auto& row = g.edges[src];
    std::size_t i = 0;
    while (i < candidates.size()) {
      std::uint32_t obs = candidates[i] / a;
      std::size_t j = i;
      while (j < candidates.size() && candidates[j] / a == obs) ++j;
      std::size_t kept = i;
      if (j - i >= 2) kept = i + rng.uniform_below(j - i);
      row.push_back({candidates[kept], 0.0});
      i = j;
    }
  }

  // Every latent must stay productive; an isolated row gets one uniform edge
  // (a single edge can never violate disambiguation).
  for (std::uint32_t src = 0; src < z_count; ++src) {
    if (g.edges[src].empty()) {
      g.edges[src].push_back({static_cast<std::uint32_t>(rng.uniform_below(z_count)), 0.0});
    }
  }

  // The terminal edge carries mass p_end on every row; latent edges share the
  // rest uniformly.
  for (std::uint32_t src = 0; src < z_count; ++src) {
    double share = (1.0 - cfg.p_end) / static_cast<double>(g.edges[src].size());
    for (Edge& e : g.edges[src]) e.prob = share;
  }

  for (std::uint32_t s = 0; s < v; ++s) {
    // All members have outgoing edges after repair, so each observable
    // contributes exactly one initial latent.
    std::uint32_t member = s * a + static_cast<std::uint32_t>(rng.uniform_below(a));
    g.initial_set.push_back(member);
  }
  return g;
}

}  // namespace

Grammar build_grammar(const GrammarConfig& config) {
  GrammarConfig cfg = validate_config(config);
  for (std::uint32_t attempt = 0; attempt < cfg.max_resample_attempts; ++attempt) {
    RngStream rng(derive_seed(cfg.seed, Phase::grammar_build, attempt));
    Grammar g = build_once(cfg, rng);
    if (validate_disambiguable(g).pass) return g;
  }
  throw Error(Errc::construction_failure,
              "no disambiguable grammar after " + std::to_string(cfg.max_resample_attempts) +
                  " attempts (seed " + std::to_string(cfg.seed) + ")");
}

ValidationReport validate_disambiguable(const Grammar& g) {
  ValidationReport report;
  const std::uint32_t a = g.config.ambiguity;
  for (std::uint32_t src = 0; src < g.latent_count; ++src) {
    std::uint32_t run_obs = 0;
    std::uint32_t run_len = 0;
    for (const Edge& e : g.edges[src]) {
      if (e.prob <= 0.0) continue;
      std::uint32_t obs = e.dst / a;
      if (run_len > 0 && obs == run_obs) {
        if (run_len == 1) {  // report each (src, observable) pair once
          report.issues.push_back(
              {ValidationIssue::Kind::ambiguous_successor, obs, src});
        }
        ++run_len;
      } else {
        run_obs = obs;
        run_len = 1;
      }
    }
  }
  std::vector<std::uint32_t> seen(g.config.num_observables, 0);
  for (std::uint32_t z : g.initial_set) {
    std::uint32_t obs = z / a;
    if (++seen[obs] == 2) {
      report.issues.push_back({ValidationIssue::Kind::ambiguous_initial, obs, z});
    }
  }
  report.pass = report.issues.empty();
  return report;
}

std::vector<std::uint32_t> sample_trajectory(const Grammar& g, std::uint32_t target_length,
                                             RngStream& rng) {
  if (target_length == 0) {
    throw Error(Errc::invalid_config, "target_length must be positive");
  }
  if (g.initial_set.empty()) {
    throw Error(Errc::empty_belief, "grammar has an empty initial set");
  }
  std::vector<std::uint32_t> out;
  out.reserve(target_length);
  out.push_back(g.initial_set[rng.uniform_below(g.initial_set.size())]);
  while (out.size() < target_length) {
    std::uint32_t z = out.back();
    double u = rng.uniform01();
    double acc = 0.0;
    const Edge* chosen = nullptr;
    for (const Edge& e : g.edges[z]) {
      acc += e.prob;
      if (u < acc) {
        chosen = &e;
        break;
      }
    }
    if (chosen != nullptr) {
      out.push_back(chosen->dst);
      continue;
    }
    if (g.end_prob[z] > 0.0) {
      out.push_back(g.terminal_latent());
      break;
    }
    // Rounding dust can leave u marginally past the accumulated latent mass
    // when p_end = 0; the final edge takes it.
    out.push_back(g.edges[z].back().dst);
  }
  return out;
}

std::uint32_t observe(const Grammar& g, std::uint32_t z) { return g.observable_of(z); }

std::optional<std::uint32_t> successor_in_partition(const Grammar& g, std::uint32_t z,
                                                    std::uint32_t s) {
  if (z >= g.latent_count) {
    throw Error(Errc::unknown_latent, "latent id " + std::to_string(z) + " out of range");
  }
  if (s >= g.config.num_observables) {
    throw Error(Errc::out_of_range_id, "observable id " + std::to_string(s) + " out of range");
  }
  const std::uint32_t lo = g.partition_begin(s);
  const std::uint32_t hi = g.partition_end(s);
  for (const Edge& e : g.edges[z]) {
    if (e.dst >= hi) break;
    if (e.dst >= lo && e.prob > 0.0) return e.dst;
  }
  return std::nullopt;
}

std::vector<std::uint32_t> non_reachable_observables(const Grammar& g, std::uint32_t z) {
  if (z >= g.latent_count) {
    throw Error(Errc::unknown_latent, "latent id " + std::to_string(z) + " out of range");
  }
  std::vector<bool> reachable(g.config.num_observables, false);
  for (const Edge& e : g.edges[z]) {
    if (e.prob > 0.0) reachable[e.dst / g.config.ambiguity] = true;
  }
  std::vector<std::uint32_t> out;
  for (std::uint32_t s = 0; s < g.config.num_observables; ++s) {
    if (!reachable[s]) out.push_back(s);
  }
  return out;
}

}  // namespace gapbench
