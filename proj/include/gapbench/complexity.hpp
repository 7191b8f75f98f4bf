#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gapbench/grammar.hpp"

namespace gapbench {

struct BoolMatrix {
  std::size_t n = 0;
  std::vector<std::uint8_t> a;  // row-major

  static BoolMatrix zeros(std::size_t n) { return {n, std::vector<std::uint8_t>(n * n, 0)}; }
  std::uint8_t get(std::size_t i, std::size_t j) const { return a[i * n + j]; }
  void set(std::size_t i, std::size_t j, std::uint8_t v) { a[i * n + j] = v; }
};

// Adjacency of positive-probability latent transitions; the terminal state is
// excluded (it carries no growth).
BoolMatrix boolean_transition(const Grammar& g);

struct PowerIterationOptions {
  double tol = 1e-10;
  std::size_t max_iters = 1000000;
};

// Perron root by power iteration from the all-ones vector. Returns 0 when the
// iterate vanishes (nilpotent matrix); throws non_convergence with the final
// residual when the tolerance is not met within max_iters.
double spectral_radius(const BoolMatrix& m, const PowerIterationOptions& opts = {});

// Natural log of the Perron root, clamped at 0 so degenerate grammars never
// report negative complexity.
double topological_entropy(const Grammar& g, const PowerIterationOptions& opts = {});

}  // namespace gapbench
