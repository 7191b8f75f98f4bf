#pragma once

#include <cstddef>

namespace gapbench::lrm::kern {

// Hot inner loops of the recurrence kernels. Scalar versions are the
// reference; vector variants must match them within rounding (FMA contraction
// is the only allowed divergence) and are selected once at startup.
struct Ops {
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double a, const double* x, double* y, std::size_t n);  // y += a * x
  void (*scal)(double a, double* x, std::size_t n);                   // x *= a
  void (*vmul)(const double* x, double* y, std::size_t n);            // y *= x, elementwise
  void (*vadd_scalar)(double a, double* y, std::size_t n);            // y += a
};

const Ops& scalar_ops();

// True when AVX2+FMA code was compiled in and the CPU reports support.
bool avx2_available();
const Ops& avx2_ops();  // call only when avx2_available()

// Resolution order: forced override, GAPBENCH_SIMD env (scalar|avx2|auto),
// then CPU detection.
const Ops& active_ops();

// Test hook; nullptr restores automatic resolution.
void force_ops(const Ops* ops);

}  // namespace gapbench::lrm::kern
