#include "support/string_count.hpp"

#include <cmath>
#include <cstdint>
#include <unordered_map>

namespace gbtest {

std::vector<double> admissible_string_counts(const gapbench::Grammar& g, int n_max) {
  const std::uint32_t L = g.latent_count;
  const std::uint32_t V = g.config.num_observables;
  if (L > 64 || n_max < 1) return {};

  // succ[z][o]: bitmask of positive-probability successors of z emitting o.
  std::vector<std::vector<std::uint64_t>> succ(L, std::vector<std::uint64_t>(V, 0));
  for (std::uint32_t z = 0; z < L; ++z)
    for (const gapbench::Edge& e : g.edges[z])
      if (e.prob > 0.0) succ[z][g.observable_of(e.dst)] |= std::uint64_t(1) << e.dst;

  // Distinct strings reaching the same belief mask are pooled; extending two
  // distinct strings by the same observable keeps them distinct.
  std::unordered_map<std::uint64_t, double> cur;
  for (std::uint32_t s = 0; s < V; ++s) {
    std::uint64_t m = 0;
    for (std::uint32_t z = g.partition_begin(s); z < g.partition_end(s); ++z)
      m |= std::uint64_t(1) << z;
    if (m) cur[m] += 1.0;
  }

  std::vector<double> counts;
  counts.reserve(std::size_t(n_max));
  auto total = [&] {
    double t = 0.0;
    for (const auto& [m, c] : cur) t += c;
    return t;
  };
  counts.push_back(total());

  std::unordered_map<std::uint64_t, double> next;
  for (int n = 2; n <= n_max; ++n) {
    next.clear();
    for (const auto& [m, c] : cur) {
      for (std::uint32_t o = 0; o < V; ++o) {
        std::uint64_t m2 = 0;
        std::uint64_t bits = m;
        while (bits) {
          std::uint32_t z = std::uint32_t(__builtin_ctzll(bits));
          bits &= bits - 1;
          m2 |= succ[z][o];
        }
        if (m2) next[m2] += c;
      }
    }
    cur.swap(next);
    counts.push_back(total());
    if (cur.empty()) break;  // dead graph; remaining lengths count zero
  }
  while (int(counts.size()) < n_max) counts.push_back(0.0);
  return counts;
}

bool stabilized_growth_rate(const std::vector<double>& counts, double tol, int window,
                            double* rate) {
  if (int(counts.size()) < window + 1) return false;
  std::vector<double> lr;
  for (std::size_t i = counts.size() - std::size_t(window); i < counts.size(); ++i) {
    if (counts[i] <= 0.0 || counts[i - 1] <= 0.0) return false;
    lr.push_back(std::log(counts[i] / counts[i - 1]));
  }
  for (double r : lr)
    if (std::abs(r - lr.back()) > tol) return false;
  *rate = lr.back();
  return true;
}

}  // namespace gbtest
