#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace gapbench::lrm {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softplus(double x) {
  if (x > 30.0) return x;
  return std::log1p(std::exp(x));
}

// ln(sigmoid(x)) without underflow: -softplus(-x).
inline double log_sigmoid(double x) { return -softplus(-x); }

// ln(softplus(x)); for x << 0, softplus(x) ~= e^x.
inline double log_softplus(double x) {
  if (x < -30.0) return x;
  return std::log(softplus(x));
}

// GLA per-key-dim decay sigmoid(g)^(1/tau), computed via logs so the
// sequential and chunked paths agree bit-for-bit.
inline double gla_log_decay(double g, double tau) { return log_sigmoid(g) / tau; }
inline double gla_decay(double g, double tau) { return std::exp(gla_log_decay(g, tau)); }

// Gated delta scalar decay a * softplus(alpha), and its log.
inline double gated_decay(double a, double alpha) { return a * softplus(alpha); }
inline double gated_log_decay(double a, double alpha) {
  return std::log(a) + log_softplus(alpha);
}

// In-place unit normalization with a floor that keeps zero keys finite.
inline void normalize_key(double* k, std::size_t n) {
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss += k[i] * k[i];
  double inv = 1.0 / std::max(std::sqrt(ss), 1e-8);
  for (std::size_t i = 0; i < n; ++i) k[i] *= inv;
}

}  // namespace gapbench::lrm
