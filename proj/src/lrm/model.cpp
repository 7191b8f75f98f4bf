#include "gapbench/lrm/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gapbench/error.hpp"
#include "gapbench/lrm/simd.hpp"
#include "gapbench/rng.hpp"

namespace gapbench::lrm {

namespace {

struct KindName {
  ModelKind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {ModelKind::LinearAttention, "linear-attention"},
    {ModelKind::S4D, "s4d"},
    {ModelKind::DeltaNet, "deltanet"},
    {ModelKind::GLA, "gla"},
    {ModelKind::Mamba, "mamba"},
    {ModelKind::Mamba2, "mamba2"},
    {ModelKind::GatedDeltaNet, "gated-deltanet"},
    {ModelKind::GatedDeltaProduct, "gated-deltaproduct"},
    {ModelKind::SoftmaxAttention, "softmax-attention"},
};

constexpr ModelKind kAllKinds[] = {
    ModelKind::LinearAttention, ModelKind::S4D,
    ModelKind::DeltaNet,        ModelKind::GLA,
    ModelKind::Mamba,           ModelKind::Mamba2,
    ModelKind::GatedDeltaNet,   ModelKind::GatedDeltaProduct,
    ModelKind::SoftmaxAttention,
};

}  // namespace

ModelKind model_kind_from_name(std::string_view name) {
  for (const auto& kn : kKindNames)
    if (kn.name == name) return kn.kind;
  throw Error(Errc::unknown_model_name, "unknown model name: " + std::string(name));
}

std::string_view model_name(ModelKind kind) {
  for (const auto& kn : kKindNames)
    if (kn.kind == kind) return kn.name;
  throw Error(Errc::unknown_model_name, "unmapped model kind");
}

std::span<const ModelKind> all_model_kinds() { return kAllKinds; }

bool is_delta_family(ModelKind kind) {
  return kind == ModelKind::DeltaNet || kind == ModelKind::GatedDeltaNet ||
         kind == ModelKind::GatedDeltaProduct;
}

bool is_recurrent(ModelKind kind) { return kind != ModelKind::SoftmaxAttention; }

std::uint32_t ModelSpec::head_count() const {
  if (kind == ModelKind::S4D || kind == ModelKind::Mamba) return 1;
  return n_heads;
}

std::uint32_t ModelSpec::key_dim() const {
  switch (kind) {
    case ModelKind::S4D:
    case ModelKind::Mamba:
    case ModelKind::Mamba2:
      return d_state;
    case ModelKind::GLA:
      return d_head() / 2;
    default:
      return d_head();
  }
}

std::uint32_t ModelSpec::value_dim() const {
  switch (kind) {
    case ModelKind::S4D:
      return d;
    case ModelKind::Mamba:
      return 2 * d;
    case ModelKind::Mamba2:
    case ModelKind::GatedDeltaNet:
    case ModelKind::GatedDeltaProduct:
      return 2 * d_head();
    default:
      return d_head();
  }
}

void validate_spec(const ModelSpec& spec) {
  auto fail = [](const std::string& what) { throw Error(Errc::shape_mismatch, what); };
  if (spec.d == 0) fail("model dimension d must be positive");
  if (spec.n_heads == 0) fail("n_heads must be positive");
  if (spec.d % spec.n_heads != 0) fail("d must be divisible by n_heads");
  if (spec.n_householder == 0) fail("n_householder must be at least 1");
  switch (spec.kind) {
    case ModelKind::S4D:
    case ModelKind::Mamba:
    case ModelKind::Mamba2:
      if (spec.d_state == 0) fail("d_state must be positive");
      break;
    case ModelKind::GLA:
      if (spec.d_head() % 2 != 0) fail("GLA needs an even head dimension");
      if (!(spec.gla_tau > 0.0)) fail("gla_tau must be positive");
      break;
    default:
      break;
  }
  if (spec.kind == ModelKind::Mamba && (2 * spec.d) % 16 != 0)
    fail("Mamba two-stage gate needs 2d divisible by 16");
  if (spec.key_dim() == 0) fail("key dimension must be positive");
}

RecurrentState RecurrentState::zeros(const ModelSpec& spec) {
  RecurrentState st;
  if (spec.kind == ModelKind::SoftmaxAttention) {
    st.cached_k.resize(spec.head_count());
    st.cached_v.resize(spec.head_count());
  } else {
    st.s.assign(spec.head_count(),
                std::vector<double>(std::size_t(spec.value_dim()) * spec.key_dim(), 0.0));
  }
  return st;
}

std::size_t RecurrentState::state_scalars() const {
  std::size_t n = 0;
  for (const auto& m : s) n += m.size();
  for (const auto& c : cached_k) n += c.size();
  for (const auto& c : cached_v) n += c.size();
  return n;
}

double relative_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw Error(Errc::length_mismatch, "relative_error: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a[i] - b[i]));
    den = std::max(den, std::abs(b[i]));
  }
  return num / std::max(den, 1e-8);
}

namespace {

// rows x in, row-major. out must not alias x.
void matvec(const double* w, std::size_t rows, std::size_t in, const double* x,
            double* out) {
  const kern::Ops& ops = kern::active_ops();
  for (std::size_t r = 0; r < rows; ++r) out[r] = ops.dot(w + r * in, x, in);
}

void matvec(const std::vector<double>& w, std::size_t rows, std::size_t in,
            const double* x, double* out) {
  matvec(w.data(), rows, in, x, out);
}

std::vector<double> gaussian_block(RngStream& rng, std::size_t n, double stddev) {
  std::vector<double> w(n);
  for (double& x : w) x = rng.normal() * stddev;
  return w;
}

std::vector<double> uniform_block(RngStream& rng, std::size_t n, double lo, double hi) {
  std::vector<double> w(n);
  for (double& x : w) x = rng.uniform_real(lo, hi);
  return w;
}

struct Shapes {
  std::size_t k_rows = 0, q_rows = 0, v_rows = 0;
  std::size_t g_rows = 0, g_in = 0;          // scalar gates
  std::size_t alpha_rows = 0;                 // from x
  std::size_t g1_rows = 0, g1_in = 0;         // two-stage gates
  std::size_t g2_rows = 0, g2_in = 0;
  std::size_t b_rows = 0, b_in = 0;           // Mamba input coupling
  std::size_t a_count = 0;                    // base_a per head
  std::size_t amat = 0;                       // positive decay matrix
  std::size_t k_multi_rows = 0, g_multi_rows = 0;  // per Householder factor
};

Shapes shapes_for(const ModelSpec& s) {
  Shapes sh;
  const std::size_t d = s.d, H = s.head_count(), kd = s.key_dim(), vd = s.value_dim();
  switch (s.kind) {
    case ModelKind::LinearAttention:
    case ModelKind::SoftmaxAttention:
      sh.k_rows = sh.q_rows = sh.v_rows = d;
      break;
    case ModelKind::S4D:
      sh.q_rows = kd;
      sh.v_rows = d;
      sh.amat = std::size_t(vd) * kd;
      break;
    case ModelKind::DeltaNet:
      sh.k_rows = sh.q_rows = sh.v_rows = d;
      sh.g_rows = H, sh.g_in = d;
      break;
    case ModelKind::GLA:
      sh.k_rows = sh.q_rows = H * kd;
      sh.v_rows = d;
      sh.g1_rows = 16, sh.g1_in = d;
      sh.g2_rows = kd, sh.g2_in = 16;  // one gate vector shared by every head
      break;
    case ModelKind::Mamba:
      sh.q_rows = kd;
      sh.v_rows = vd;  // 2d, the expanded input
      sh.g1_rows = vd / 16, sh.g1_in = vd;
      sh.g2_rows = vd, sh.g2_in = vd / 16;
      sh.b_rows = kd, sh.b_in = vd;
      sh.amat = std::size_t(vd) * kd;
      break;
    case ModelKind::Mamba2:
      sh.k_rows = sh.q_rows = H * kd;
      sh.v_rows = H * vd;  // 2d
      sh.g_rows = H, sh.g_in = H * vd;  // gate reads the expanded input
      sh.a_count = H;
      break;
    case ModelKind::GatedDeltaNet:
      sh.k_rows = sh.q_rows = d;
      sh.v_rows = H * vd;  // 2d
      sh.g_rows = H, sh.g_in = d;
      sh.alpha_rows = H;
      sh.a_count = H;
      break;
    case ModelKind::GatedDeltaProduct:
      sh.q_rows = d;  // every key projection lives in the per-factor blocks
      sh.v_rows = H * vd;
      sh.alpha_rows = H;
      sh.a_count = H;
      sh.k_multi_rows = d;  // per factor
      sh.g_multi_rows = H;  // per factor
      break;
  }
  return sh;
}

}  // namespace

ModelWeights init_weights(const ModelSpec& spec, std::uint64_t seed) {
  validate_spec(spec);
  ModelWeights w;
  w.spec = spec;
  RngStream rng(derive_seed(seed, Phase::weights, 0));
  const double stddev = 1.0 / std::sqrt(double(spec.d));
  const Shapes sh = shapes_for(spec);
  const std::size_t d = spec.d;

  // Draw order is fixed; changing it changes every seeded result.
  if (sh.k_rows) w.w_k = gaussian_block(rng, sh.k_rows * d, stddev);
  if (sh.q_rows) w.w_q = gaussian_block(rng, sh.q_rows * d, stddev);
  if (sh.v_rows) w.w_v = gaussian_block(rng, sh.v_rows * d, stddev);
  if (sh.g_rows) w.w_g = gaussian_block(rng, sh.g_rows * sh.g_in, stddev);
  if (sh.alpha_rows) w.w_alpha = gaussian_block(rng, sh.alpha_rows * d, stddev);
  if (sh.g1_rows) w.w_g1 = gaussian_block(rng, sh.g1_rows * sh.g1_in, stddev);
  if (sh.g2_rows) w.w_g2 = gaussian_block(rng, sh.g2_rows * sh.g2_in, stddev);
  if (sh.b_rows) w.w_b = gaussian_block(rng, sh.b_rows * sh.b_in, stddev);
  if (sh.k_multi_rows)
    w.w_k_multi = gaussian_block(rng, spec.n_householder * sh.k_multi_rows * d, stddev);
  if (sh.g_multi_rows)
    w.w_g_multi = gaussian_block(rng, spec.n_householder * sh.g_multi_rows * d, stddev);
  if (sh.a_count) w.base_a = uniform_block(rng, sh.a_count, 0.5, 1.5);
  if (sh.amat) w.a_matrix = uniform_block(rng, sh.amat, 0.5, 1.5);
  return w;
}

StepInputs project_inputs(const ModelWeights& w, std::span<const double> x) {
  const ModelSpec& spec = w.spec;
  if (x.size() != spec.d)
    throw Error(Errc::shape_mismatch, "token width " + std::to_string(x.size()) +
                                          ", expected " + std::to_string(spec.d));
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i]))
      throw Error(Errc::non_finite_value,
                  "non-finite token component at index " + std::to_string(i));

  const std::size_t H = spec.head_count(), kd = spec.key_dim(), vd = spec.value_dim();
  const Shapes sh = shapes_for(spec);
  const std::size_t d = spec.d;

  std::vector<double> k(sh.k_rows), q(sh.q_rows), v(sh.v_rows);
  if (sh.k_rows) matvec(w.w_k, sh.k_rows, d, x.data(), k.data());
  if (sh.q_rows) matvec(w.w_q, sh.q_rows, d, x.data(), q.data());
  if (sh.v_rows) matvec(w.w_v, sh.v_rows, d, x.data(), v.data());

  StepInputs in;
  in.heads.resize(H);
  auto slice = [](const std::vector<double>& src, std::size_t off, std::size_t n) {
    return std::vector<double>(src.begin() + off, src.begin() + off + n);
  };

  for (std::size_t h = 0; h < H; ++h) {
    HeadInputs& hi = in.heads[h];
    if (sh.k_rows) hi.k = slice(k, h * kd, kd);
    if (sh.q_rows) hi.q = slice(q, h * kd, kd);
    hi.v = slice(v, h * vd, vd);
  }

  switch (spec.kind) {
    case ModelKind::LinearAttention:
    case ModelKind::SoftmaxAttention:
      break;
    case ModelKind::S4D:
      in.heads[0].a_matrix = w.a_matrix;
      break;
    case ModelKind::DeltaNet: {
      std::vector<double> g(H);
      matvec(w.w_g, H, d, x.data(), g.data());
      for (std::size_t h = 0; h < H; ++h) in.heads[h].g = g[h];
      break;
    }
    case ModelKind::GLA: {
      std::vector<double> mid(16), gate(kd);
      matvec(w.w_g1, 16, d, x.data(), mid.data());
      matvec(w.w_g2, kd, 16, mid.data(), gate.data());
      for (std::size_t h = 0; h < H; ++h) in.heads[h].g_vec = gate;
      break;
    }
    case ModelKind::Mamba: {
      HeadInputs& hi = in.heads[0];
      std::vector<double> mid(sh.g1_rows), gate(vd);
      matvec(w.w_g1, sh.g1_rows, vd, hi.v.data(), mid.data());
      matvec(w.w_g2, vd, sh.g1_rows, mid.data(), gate.data());
      hi.g_vec = std::move(gate);
      hi.b_in.resize(kd);
      matvec(w.w_b, kd, vd, hi.v.data(), hi.b_in.data());
      hi.a_matrix = w.a_matrix;
      break;
    }
    case ModelKind::Mamba2: {
      std::vector<double> g(H);
      matvec(w.w_g, H, sh.g_in, v.data(), g.data());
      for (std::size_t h = 0; h < H; ++h) {
        in.heads[h].g = g[h];
        in.heads[h].a = w.base_a[h];
      }
      break;
    }
    case ModelKind::GatedDeltaNet: {
      std::vector<double> g(H), alpha(H);
      matvec(w.w_g, H, d, x.data(), g.data());
      matvec(w.w_alpha, H, d, x.data(), alpha.data());
      for (std::size_t h = 0; h < H; ++h) {
        in.heads[h].g = g[h];
        in.heads[h].alpha = alpha[h];
        in.heads[h].a = w.base_a[h];
      }
      break;
    }
    case ModelKind::GatedDeltaProduct: {
      const std::size_t nh = spec.n_householder;
      std::vector<double> alpha(H);
      matvec(w.w_alpha, H, d, x.data(), alpha.data());
      for (std::size_t h = 0; h < H; ++h) {
        in.heads[h].alpha = alpha[h];
        in.heads[h].a = w.base_a[h];
        in.heads[h].k_multi.resize(nh);
        in.heads[h].g_multi.resize(nh);
      }
      std::vector<double> kf(d), gf(H);
      for (std::size_t f = 0; f < nh; ++f) {
        matvec(w.w_k_multi.data() + f * d * d, d, d, x.data(), kf.data());
        matvec(w.w_g_multi.data() + f * H * d, H, d, x.data(), gf.data());
        for (std::size_t h = 0; h < H; ++h) {
          in.heads[h].k_multi[f] = slice(kf, h * kd, kd);
          in.heads[h].g_multi[f] = gf[h];
        }
      }
      break;
    }
  }
  return in;
}

std::vector<std::vector<double>> sequential_scan(
    const ModelWeights& w, std::span<const std::vector<double>> tokens) {
  RecurrentState st = RecurrentState::zeros(w.spec);
  std::vector<std::vector<double>> ys;
  ys.reserve(tokens.size());
  std::vector<double> y;
  for (const auto& x : tokens) {
    StepInputs in = project_inputs(w, x);
    step(w.spec, st, in, y);
    ys.push_back(y);
  }
  return ys;
}

}  // namespace gapbench::lrm
