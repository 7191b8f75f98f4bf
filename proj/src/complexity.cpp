#include "gapbench/complexity.hpp"

#include <cmath>
#include <string>

#include "gapbench/error.hpp"

namespace gapbench {

BoolMatrix boolean_transition(const Grammar& g) {
  BoolMatrix m = BoolMatrix::zeros(g.latent_count);
  for (std::uint32_t src = 0; src < g.latent_count; ++src) {
    for (const Edge& e : g.edges[src]) {
      if (e.prob > 0.0) m.set(src, e.dst, 1);
    }
  }
  return m;
}

double spectral_radius(const BoolMatrix& m, const PowerIterationOptions& opts) {
  const std::size_t n = m.n;
  if (n == 0) return 0.0;

  std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> y(n, 0.0);
  double lambda = 0.0;
  double residual = 0.0;

  for (std::size_t iter = 0; iter < opts.max_iters; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      const std::uint8_t* row = &m.a[i * n];
      for (std::size_t j = 0; j < n; ++j) {
        if (row[j]) acc += x[j];
      }
      y[i] = acc;
    }
    double norm2 = 0.0;
    for (double v : y) norm2 += v * v;
    if (norm2 == 0.0) return 0.0;  // iterate vanished: nilpotent

    // x is unit, so the Rayleigh quotient is x . y.
    lambda = 0.0;
    for (std::size_t i = 0; i < n; ++i) lambda += x[i] * y[i];
    double res2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = y[i] - lambda * x[i];
      res2 += d * d;
    }
    residual = std::sqrt(res2);
    if (residual <= opts.tol * std::max(lambda, 1.0)) return lambda;

    double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] * inv;
  }
  throw Error(Errc::non_convergence,
              "power iteration did not converge after " + std::to_string(opts.max_iters) +
                  " iterations (last estimate " + std::to_string(lambda) + ", residual " +
                  std::to_string(residual) + ")");
}

double topological_entropy(const Grammar& g, const PowerIterationOptions& opts) {
  double lambda = spectral_radius(boolean_transition(g), opts);
  if (lambda <= 1.0) return 0.0;
  return std::log(lambda);
}

}  // namespace gapbench
