#include <atomic>
#include <cstdlib>
#include <cstring>

#include "gapbench/lrm/simd.hpp"

namespace gapbench::lrm::kern {

bool avx2_compiled();  // defined in kernels_avx2.cpp

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
  return avx2_compiled() && __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

const Ops* resolve() {
  if (const char* env = std::getenv("GAPBENCH_SIMD")) {
    if (std::strcmp(env, "scalar") == 0) return &scalar_ops();
    if (std::strcmp(env, "avx2") == 0 && avx2_available()) return &avx2_ops();
  }
  return avx2_available() ? &avx2_ops() : &scalar_ops();
}

std::atomic<const Ops*> forced{nullptr};

}  // namespace

const Ops& active_ops() {
  if (const Ops* f = forced.load(std::memory_order_acquire)) return *f;
  static const Ops* resolved = resolve();
  return *resolved;
}

void force_ops(const Ops* ops) { forced.store(ops, std::memory_order_release); }

}  // namespace gapbench::lrm::kern
