#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "gapbench/error.hpp"
#include "gapbench/lrm/attention.hpp"
#include "gapbench/lrm/gates.hpp"
#include "gapbench/lrm/model.hpp"
#include "gapbench/rng.hpp"
#include "support/dense_oracle.hpp"

using namespace gapbench;
using namespace gapbench::lrm;

namespace {

ModelSpec small_spec(ModelKind kind) {
  ModelSpec spec;
  spec.kind = kind;
  spec.d = 32;
  spec.n_heads = 4;
  spec.d_state = 16;
  spec.n_householder = 3;
  return spec;
}

// One head's inputs with every field the kind might read populated.
HeadInputs filled_inputs(const ModelSpec& spec, std::uint64_t seed) {
  RngStream rng(seed);
  HeadInputs in;
  auto fill = [&](std::vector<double>& v, std::size_t n) {
    v.resize(n);
    for (double& x : v) x = rng.uniform_real(-1.0, 1.0);
  };
  fill(in.k, spec.key_dim());
  fill(in.q, spec.key_dim());
  fill(in.v, spec.value_dim());
  in.g = rng.uniform_real(-1.0, 1.0);
  in.alpha = rng.uniform_real(-1.0, 1.0);
  in.a = rng.uniform_real(0.5, 1.5);
  if (spec.kind == ModelKind::GLA) fill(in.g_vec, spec.key_dim());
  if (spec.kind == ModelKind::Mamba) {
    fill(in.g_vec, spec.value_dim());
    fill(in.b_in, spec.key_dim());
  }
  if (spec.kind == ModelKind::S4D || spec.kind == ModelKind::Mamba) {
    in.a_matrix.resize(std::size_t(spec.value_dim()) * spec.key_dim());
    for (double& x : in.a_matrix) x = rng.uniform_real(0.05, 1.0);
  }
  if (spec.kind == ModelKind::GatedDeltaProduct) {
    in.k_multi.resize(spec.n_householder);
    in.g_multi.resize(spec.n_householder);
    for (std::uint32_t f = 0; f < spec.n_householder; ++f) {
      fill(in.k_multi[f], spec.key_dim());
      in.g_multi[f] = rng.uniform_real(-1.0, 1.0);
    }
  }
  return in;
}

StepInputs filled_step(const ModelSpec& spec, std::uint64_t seed) {
  StepInputs in;
  for (std::uint32_t h = 0; h < spec.head_count(); ++h)
    in.heads.push_back(filled_inputs(spec, seed * 1000 + h));
  return in;
}

std::vector<std::vector<double>> random_tokens(std::uint32_t d, std::size_t t,
                                               std::uint64_t seed) {
  std::vector<std::vector<double>> tokens(t, std::vector<double>(d));
  for (std::size_t i = 0; i < t; ++i) {
    RngStream rng(derive_seed(seed, Phase::inputs, i));
    for (double& x : tokens[i]) x = rng.uniform_real(-1.0, 1.0);
  }
  return tokens;
}

double max_rel_error(const std::vector<std::vector<double>>& a,
                     const std::vector<std::vector<double>>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, relative_error(a[i], b[i]));
  return worst;
}

}  // namespace

TEST_CASE("a linear-attention step from zero state reads (k . q) v") {
  ModelSpec spec = small_spec(ModelKind::LinearAttention);
  RecurrentState state = RecurrentState::zeros(spec);
  StepInputs in = filled_step(spec, 3);
  std::vector<double> y;
  step(spec, state, in, y);
  REQUIRE(y.size() == spec.output_dim());
  for (std::uint32_t h = 0; h < spec.head_count(); ++h) {
    const HeadInputs& hi = in.heads[h];
    double kq = 0.0;
    for (std::size_t j = 0; j < hi.k.size(); ++j) kq += hi.k[j] * hi.q[j];
    for (std::uint32_t i = 0; i < spec.value_dim(); ++i)
      CHECK(y[h * spec.value_dim() + i] ==
            doctest::Approx(kq * hi.v[i]).epsilon(1e-12));
  }
}

TEST_CASE("single-step readouts match their closed forms") {
  SUBCASE("channel-state decay kind sums the query") {
    ModelSpec spec = small_spec(ModelKind::S4D);
    RecurrentState state = RecurrentState::zeros(spec);
    StepInputs in = filled_step(spec, 4);
    std::vector<double> y;
    step(spec, state, in, y);
    const HeadInputs& hi = in.heads[0];
    double qs = 0.0;
    for (double q : hi.q) qs += q;
    for (std::uint32_t i = 0; i < spec.value_dim(); ++i)
      CHECK(y[i] == doctest::Approx(hi.v[i] * qs).epsilon(1e-12));
  }
  SUBCASE("per-key gated kind still writes v k^T") {
    ModelSpec spec = small_spec(ModelKind::GLA);
    RecurrentState state = RecurrentState::zeros(spec);
    StepInputs in = filled_step(spec, 5);
    std::vector<double> y;
    step(spec, state, in, y);
    const HeadInputs& hi = in.heads[0];
    double kq = 0.0;
    for (std::size_t j = 0; j < hi.k.size(); ++j) kq += hi.k[j] * hi.q[j];
    for (std::uint32_t i = 0; i < spec.value_dim(); ++i)
      CHECK(y[i] == doctest::Approx(kq * hi.v[i]).epsilon(1e-12));
  }
  SUBCASE("scalar-decay kind scales the write by softplus of the gate") {
    ModelSpec spec = small_spec(ModelKind::Mamba2);
    RecurrentState state = RecurrentState::zeros(spec);
    StepInputs in = filled_step(spec, 6);
    std::vector<double> y;
    step(spec, state, in, y);
    const HeadInputs& hi = in.heads[0];
    double kq = 0.0;
    for (std::size_t j = 0; j < hi.k.size(); ++j) kq += hi.k[j] * hi.q[j];
    for (std::uint32_t i = 0; i < spec.value_dim(); ++i)
      CHECK(y[i] == doctest::Approx(softplus(hi.g) * kq * hi.v[i]).epsilon(1e-12));
  }
  SUBCASE("input-coupled kind writes through b_in") {
    ModelSpec spec = small_spec(ModelKind::Mamba);
    RecurrentState state = RecurrentState::zeros(spec);
    StepInputs in = filled_step(spec, 7);
    std::vector<double> y;
    step(spec, state, in, y);
    const HeadInputs& hi = in.heads[0];
    double bq = 0.0;
    for (std::size_t j = 0; j < hi.b_in.size(); ++j) bq += hi.b_in[j] * hi.q[j];
    for (std::uint32_t i = 0; i < spec.value_dim(); ++i)
      CHECK(y[i] ==
            doctest::Approx(softplus(hi.g_vec[i]) * hi.v[i] * bq).epsilon(1e-12));
  }
  SUBCASE("delta kinds write beta v along the unit key") {
    for (ModelKind kind : {ModelKind::DeltaNet, ModelKind::GatedDeltaNet}) {
      ModelSpec spec = small_spec(kind);
      RecurrentState state = RecurrentState::zeros(spec);
      StepInputs in = filled_step(spec, 8);
      std::vector<double> y;
      step(spec, state, in, y);
      const HeadInputs& hi = in.heads[0];
      std::vector<double> kn = hi.k;
      normalize_key(kn.data(), kn.size());
      double kq = 0.0;
      for (std::size_t j = 0; j < kn.size(); ++j) kq += kn[j] * hi.q[j];
      for (std::uint32_t i = 0; i < spec.value_dim(); ++i)
        CHECK(y[i] ==
              doctest::Approx(sigmoid(hi.g) * kq * hi.v[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("a saturated delta gate replaces the stored value at the key") {
  ModelSpec spec = small_spec(ModelKind::DeltaNet);
  RecurrentState state = RecurrentState::zeros(spec);
  std::vector<double> y;
  step(spec, state, filled_step(spec, 11), y);  // arbitrary prior content

  StepInputs in = filled_step(spec, 12);
  for (auto& h : in.heads) h.g = 40.0;  // sigmoid saturates to 1
  step(spec, state, in, y);

  for (std::uint32_t h = 0; h < spec.head_count(); ++h) {
    std::vector<double> kn = in.heads[h].k;
    normalize_key(kn.data(), kn.size());
    const std::size_t kd = spec.key_dim();
    for (std::uint32_t i = 0; i < spec.value_dim(); ++i) {
      double along = 0.0;
      for (std::size_t j = 0; j < kd; ++j) along += state.s[h][i * kd + j] * kn[j];
      CHECK(along == doctest::Approx(in.heads[h].v[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("every recurrent kind tracks the dense unrolled reference") {
  for (ModelKind kind : all_model_kinds()) {
    if (kind == ModelKind::SoftmaxAttention) continue;
    CAPTURE(model_name(kind));
    ModelSpec spec = small_spec(kind);
    ModelWeights w = init_weights(spec, 321);
    auto tokens = random_tokens(spec.d, 64, 654);
    auto got = sequential_scan(w, tokens);
    auto want = gbtest::dense_scan(w, tokens);
    REQUIRE(got.size() == want.size());
    CHECK(max_rel_error(got, want) < 1e-9);
  }
}

TEST_CASE("softmax attention matches the dense reference too") {
  ModelSpec spec = small_spec(ModelKind::SoftmaxAttention);
  ModelWeights w = init_weights(spec, 900);
  auto tokens = random_tokens(spec.d, 32, 901);
  auto got = sequential_scan(w, tokens);
  auto want = gbtest::dense_scan(w, tokens);
  CHECK(max_rel_error(got, want) < 1e-9);
}

TEST_CASE("state superposition is linear for the recurrent kinds") {
  for (ModelKind kind : all_model_kinds()) {
    if (!is_recurrent(kind)) continue;
    CAPTURE(model_name(kind));
    ModelSpec spec = small_spec(kind);
    StepInputs in = filled_step(spec, 21);

    RngStream rng(22);
    RecurrentState s1 = RecurrentState::zeros(spec);
    RecurrentState s2 = RecurrentState::zeros(spec);
    RecurrentState sum = RecurrentState::zeros(spec);
    for (std::uint32_t h = 0; h < spec.head_count(); ++h)
      for (std::size_t i = 0; i < s1.s[h].size(); ++i) {
        s1.s[h][i] = rng.uniform_real(-1.0, 1.0);
        s2.s[h][i] = rng.uniform_real(-1.0, 1.0);
        sum.s[h][i] = s1.s[h][i] + s2.s[h][i];
      }

    // The update is affine in the state: step(s1 + s2) + step(0) equals
    // step(s1) + step(s2), readout included.
    RecurrentState zero = RecurrentState::zeros(spec);
    std::vector<double> y1, y2, ysum, y0;
    step(spec, s1, in, y1);
    step(spec, s2, in, y2);
    step(spec, sum, in, ysum);
    step(spec, zero, in, y0);
    for (std::size_t i = 0; i < ysum.size(); ++i)
      CHECK(std::abs(ysum[i] + y0[i] - y1[i] - y2[i]) < 1e-9);
  }
}

TEST_CASE("step rejects malformed and non-finite inputs") {
  ModelSpec spec = small_spec(ModelKind::DeltaNet);
  RecurrentState state = RecurrentState::zeros(spec);
  std::vector<double> y;

  StepInputs bad_k = filled_step(spec, 31);
  bad_k.heads[1].k.pop_back();
  CHECK_THROWS_AS(step(spec, state, bad_k, y), Error);

  StepInputs bad_head_count = filled_step(spec, 32);
  bad_head_count.heads.pop_back();
  CHECK_THROWS_AS(step(spec, state, bad_head_count, y), Error);

  StepInputs nan_v = filled_step(spec, 33);
  nan_v.heads[2].v[0] = std::nan("");
  try {
    step(spec, state, nan_v, y);
    FAIL("expected non_finite_value");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::non_finite_value);
    CHECK(std::string(e.what()).find("head 2") != std::string::npos);
    CHECK(std::string(e.what()).find("v[0]") != std::string::npos);
  }
}

TEST_CASE("spec validation enforces the divisibility rules") {
  ModelSpec spec = small_spec(ModelKind::LinearAttention);
  spec.n_heads = 5;  // 32 % 5 != 0
  CHECK_THROWS_AS(validate_spec(spec), Error);

  spec = small_spec(ModelKind::GLA);
  spec.d = 36;
  spec.n_heads = 2;  // head dim 18 halves evenly: fine
  validate_spec(spec);
  spec.n_heads = 6;  // head dim 6 halves evenly: fine
  validate_spec(spec);
  spec.n_heads = 4;  // head dim 9 is odd
  CHECK_THROWS_AS(validate_spec(spec), Error);

  spec = small_spec(ModelKind::Mamba);
  spec.d = 36;  // 2d = 72 not divisible by 16
  CHECK_THROWS_AS(validate_spec(spec), Error);

  spec = small_spec(ModelKind::S4D);
  spec.d_state = 0;
  CHECK_THROWS_AS(validate_spec(spec), Error);
}

TEST_CASE("softmax attention with one step returns the value vectors") {
  ModelSpec spec = small_spec(ModelKind::SoftmaxAttention);
  RecurrentState state = RecurrentState::zeros(spec);
  StepInputs in = filled_step(spec, 41);
  std::vector<double> y;
  step(spec, state, in, y);
  for (std::uint32_t h = 0; h < spec.head_count(); ++h)
    for (std::uint32_t i = 0; i < spec.value_dim(); ++i)
      CHECK(y[h * spec.value_dim() + i] == doctest::Approx(in.heads[h].v[i]).epsilon(1e-12));
  CHECK(state.cached_steps == 1);
}

TEST_CASE("softmax attention with equal keys averages the values") {
  ModelSpec spec = small_spec(ModelKind::SoftmaxAttention);
  RecurrentState state = RecurrentState::zeros(spec);
  std::vector<double> mean(spec.output_dim(), 0.0);
  const int steps = 5;
  std::vector<double> y;
  for (int t = 0; t < steps; ++t) {
    StepInputs in = filled_step(spec, 50);  // keys repeat across steps
    for (std::uint32_t h = 0; h < spec.head_count(); ++h) {
      HeadInputs& hi = in.heads[h];
      for (std::uint32_t i = 0; i < spec.value_dim(); ++i) {
        hi.v[i] = double(t) + 0.1 * i + h;
        mean[h * spec.value_dim() + i] += hi.v[i] / steps;
      }
    }
    step(spec, state, in, y);
  }
  for (std::size_t i = 0; i < y.size(); ++i)
    CHECK(y[i] == doctest::Approx(mean[i]).epsilon(1e-12));
}

TEST_CASE("the attention cache grows linearly while recurrent state stays fixed") {
  ModelSpec spec = small_spec(ModelKind::SoftmaxAttention);
  ModelWeights w = init_weights(spec, 60);
  auto tokens = random_tokens(spec.d, 10, 61);
  AttentionTrace trace = softmax_attention_forward(w, tokens);
  REQUIRE(trace.outputs.size() == 10);
  REQUIRE(trace.cache_scalars.size() == 10);
  for (std::size_t t = 0; t < 10; ++t)
    CHECK(trace.cache_scalars[t] == 2 * (t + 1) * spec.d_head() * spec.n_heads);

  for (ModelKind kind : all_model_kinds()) {
    if (!is_recurrent(kind)) continue;
    ModelSpec rspec = small_spec(kind);
    RecurrentState state = RecurrentState::zeros(rspec);
    std::size_t fixed = state.state_scalars();
    std::vector<double> y;
    for (int t = 0; t < 4; ++t) {
      step(rspec, state, filled_step(rspec, 70 + std::uint64_t(t)), y);
      CHECK(state.state_scalars() == fixed);
    }
  }
}
