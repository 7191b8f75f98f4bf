#include <cmath>
#include <cstddef>
#include <vector>

#include "doctest.h"
#include "gapbench/lrm/simd.hpp"
#include "gapbench/rng.hpp"

using namespace gapbench;
using namespace gapbench::lrm;

namespace {

std::vector<double> random_vec(std::size_t n, RngStream& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform_real(-2.0, 2.0);
  return v;
}

// Scalar and vector paths may differ only by FMA contraction.
void check_close(double a, double b, double scale) {
  CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, scale));
}

struct ForcedOps {
  explicit ForcedOps(const kern::Ops* ops) { kern::force_ops(ops); }
  ~ForcedOps() { kern::force_ops(nullptr); }
};

}  // namespace

TEST_CASE("vector kernels match the scalar reference at every tail length") {
  if (!kern::avx2_available()) {
    MESSAGE("avx2 unavailable; scalar-only platform");
    return;
  }
  const kern::Ops& s = kern::scalar_ops();
  const kern::Ops& v = kern::avx2_ops();
  RngStream rng(2024);

  std::vector<std::size_t> sizes = {1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 64, 255, 1000, 1001};
  for (std::size_t n : sizes) {
    auto x = random_vec(n, rng);
    auto y = random_vec(n, rng);
    double sum_scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum_scale += std::abs(x[i] * y[i]);
    check_close(s.dot(x.data(), y.data(), n), v.dot(x.data(), y.data(), n), sum_scale);

    auto ys = y, yv = y;
    s.axpy(0.37, x.data(), ys.data(), n);
    v.axpy(0.37, x.data(), yv.data(), n);
    for (std::size_t i = 0; i < n; ++i) check_close(ys[i], yv[i], std::abs(ys[i]));

    ys = y;
    yv = y;
    s.scal(-1.7, ys.data(), n);
    v.scal(-1.7, yv.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(ys[i] == yv[i]);

    ys = y;
    yv = y;
    s.vmul(x.data(), ys.data(), n);
    v.vmul(x.data(), yv.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(ys[i] == yv[i]);

    ys = y;
    yv = y;
    s.vadd_scalar(0.25, ys.data(), n);
    v.vadd_scalar(0.25, yv.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(ys[i] == yv[i]);
  }
}

TEST_CASE("scalar kernels compute what they claim") {
  const kern::Ops& s = kern::scalar_ops();
  std::vector<double> x = {1.0, 2.0, 3.0};
  std::vector<double> y = {4.0, 5.0, 6.0};
  CHECK(s.dot(x.data(), y.data(), 3) == 32.0);
  s.axpy(2.0, x.data(), y.data(), 3);
  CHECK(y == std::vector<double>{6.0, 9.0, 12.0});
  s.scal(0.5, y.data(), 3);
  CHECK(y == std::vector<double>{3.0, 4.5, 6.0});
  s.vmul(x.data(), y.data(), 3);
  CHECK(y == std::vector<double>{3.0, 9.0, 18.0});
  s.vadd_scalar(1.0, y.data(), 3);
  CHECK(y == std::vector<double>{4.0, 10.0, 19.0});
  CHECK(s.dot(x.data(), y.data(), 0) == 0.0);
}

TEST_CASE("force_ops overrides resolution and nullptr restores it") {
  const kern::Ops& def = kern::active_ops();
  {
    ForcedOps forced(&kern::scalar_ops());
    CHECK(&kern::active_ops() == &kern::scalar_ops());
  }
  if (kern::avx2_available()) {
    ForcedOps forced(&kern::avx2_ops());
    CHECK(&kern::active_ops() == &kern::avx2_ops());
  }
  CHECK(&kern::active_ops() == &def);
}

TEST_CASE("ops structs are fully populated and named") {
  for (const kern::Ops* ops : {&kern::scalar_ops(), kern::avx2_available() ? &kern::avx2_ops()
                                                                           : &kern::scalar_ops()}) {
    CHECK(ops->name != nullptr);
    CHECK(ops->dot != nullptr);
    CHECK(ops->axpy != nullptr);
    CHECK(ops->scal != nullptr);
    CHECK(ops->vmul != nullptr);
    CHECK(ops->vadd_scalar != nullptr);
  }
}
