#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "gapbench/error.hpp"
#include "gapbench/lrm/gates.hpp"
#include "gapbench/lrm/model.hpp"
#include "gapbench/lrm/simd.hpp"

namespace gapbench::lrm {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(Errc::shape_mismatch, what);
}

void check_finite(const std::vector<double>& v, const char* label, std::size_t head) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i]))
      throw Error(Errc::non_finite_value, "head " + std::to_string(head) + " " + label +
                                              "[" + std::to_string(i) + "] is not finite");
}

void check_finite(double x, const char* label, std::size_t head) {
  if (!std::isfinite(x))
    throw Error(Errc::non_finite_value,
                "head " + std::to_string(head) + " " + label + " is not finite");
}

void check_inputs(const ModelSpec& spec, const RecurrentState& state,
                  const StepInputs& in) {
  require(in.heads.size() == spec.head_count(), "head count mismatch");
  const std::size_t kd = spec.key_dim(), vd = spec.value_dim();
  const bool softmax = spec.kind == ModelKind::SoftmaxAttention;
  if (!softmax) require(state.s.size() == spec.head_count(), "state head count mismatch");
  for (std::size_t h = 0; h < in.heads.size(); ++h) {
    const HeadInputs& hi = in.heads[h];
    require(hi.v.size() == vd, "value vector size mismatch");
    check_finite(hi.v, "v", h);
    check_finite(hi.g, "g", h);
    check_finite(hi.alpha, "alpha", h);
    check_finite(hi.a, "a", h);
    if (spec.kind != ModelKind::S4D && spec.kind != ModelKind::Mamba &&
        spec.kind != ModelKind::GatedDeltaProduct) {
      require(hi.k.size() == kd, "key vector size mismatch");
      check_finite(hi.k, "k", h);
    }
    require(hi.q.size() == kd, "query vector size mismatch");
    check_finite(hi.q, "q", h);
    if (!softmax)
      require(state.s[h].size() == std::size_t(vd) * kd, "state matrix size mismatch");
    switch (spec.kind) {
      case ModelKind::S4D:
        require(hi.a_matrix.size() == std::size_t(vd) * kd, "decay matrix size mismatch");
        break;
      case ModelKind::GLA:
        require(hi.g_vec.size() == kd, "gate vector size mismatch");
        check_finite(hi.g_vec, "g_vec", h);
        break;
      case ModelKind::Mamba:
        require(hi.g_vec.size() == vd, "gate vector size mismatch");
        require(hi.b_in.size() == kd, "input coupling size mismatch");
        require(hi.a_matrix.size() == std::size_t(vd) * kd, "decay matrix size mismatch");
        check_finite(hi.g_vec, "g_vec", h);
        check_finite(hi.b_in, "b_in", h);
        break;
      case ModelKind::GatedDeltaProduct:
        require(hi.k_multi.size() == spec.n_householder, "factor key count mismatch");
        require(hi.g_multi.size() == spec.n_householder, "factor gate count mismatch");
        for (std::size_t f = 0; f < hi.k_multi.size(); ++f) {
          require(hi.k_multi[f].size() == kd, "factor key size mismatch");
          check_finite(hi.k_multi[f], "k_multi", h);
          check_finite(hi.g_multi[f], "g_multi", h);
        }
        break;
      default:
        break;
    }
  }
}

// S <- S (I - beta k k^T) + beta v k^T, with k already unit-normalized.
void delta_write(std::vector<double>& s, std::size_t vd, std::size_t kd,
                 const double* k, double beta, const double* v) {
  const kern::Ops& ops = kern::active_ops();
  for (std::size_t i = 0; i < vd; ++i) {
    double* row = s.data() + i * kd;
    double along = ops.dot(row, k, kd);
    ops.axpy(beta * (v[i] - along), k, row, kd);
  }
}

void readout(const std::vector<double>& s, std::size_t vd, std::size_t kd,
             const double* q, double* y) {
  const kern::Ops& ops = kern::active_ops();
  for (std::size_t i = 0; i < vd; ++i) y[i] = ops.dot(s.data() + i * kd, q, kd);
}

void softmax_step(const ModelSpec& spec, RecurrentState& st, const StepInputs& in,
                  std::vector<double>& y) {
  const std::size_t kd = spec.key_dim(), vd = spec.value_dim();
  const kern::Ops& ops = kern::active_ops();
  const double scale = 1.0 / std::sqrt(double(kd));
  if (st.cached_k.size() != spec.head_count()) {
    st.cached_k.resize(spec.head_count());
    st.cached_v.resize(spec.head_count());
  }
  for (std::size_t h = 0; h < spec.head_count(); ++h) {
    const HeadInputs& hi = in.heads[h];
    auto& ks = st.cached_k[h];
    auto& vs = st.cached_v[h];
    ks.insert(ks.end(), hi.k.begin(), hi.k.end());
    vs.insert(vs.end(), hi.v.begin(), hi.v.end());
    const std::size_t t = ks.size() / kd;
    std::vector<double> score(t);
    for (std::size_t j = 0; j < t; ++j)
      score[j] = ops.dot(ks.data() + j * kd, hi.q.data(), kd) * scale;
    double m = score[0];
    for (double sc : score) m = std::max(m, sc);
    double z = 0.0;
    for (double& sc : score) {
      sc = std::exp(sc - m);
      z += sc;
    }
    double* yh = y.data() + h * vd;
    for (std::size_t j = 0; j < t; ++j)
      ops.axpy(score[j] / z, vs.data() + j * kd, yh, vd);
  }
  st.cached_steps += 1;
}

}  // namespace

void step(const ModelSpec& spec, RecurrentState& state, const StepInputs& in,
          std::vector<double>& y) {
  check_inputs(spec, state, in);
  const std::size_t H = spec.head_count(), kd = spec.key_dim(), vd = spec.value_dim();
  const kern::Ops& ops = kern::active_ops();
  y.assign(std::size_t(H) * vd, 0.0);

  if (spec.kind == ModelKind::SoftmaxAttention) {
    softmax_step(spec, state, in, y);
    return;
  }

  std::vector<double> scratch;
  for (std::size_t h = 0; h < H; ++h) {
    const HeadInputs& hi = in.heads[h];
    std::vector<double>& s = state.s[h];
    double* yh = y.data() + h * vd;

    switch (spec.kind) {
      case ModelKind::LinearAttention:
        for (std::size_t i = 0; i < vd; ++i)
          ops.axpy(hi.v[i], hi.k.data(), s.data() + i * kd, kd);
        break;

      case ModelKind::S4D:
        scratch.resize(kd);
        for (std::size_t i = 0; i < vd; ++i) {
          const double* arow = hi.a_matrix.data() + i * kd;
          double* row = s.data() + i * kd;
          for (std::size_t n = 0; n < kd; ++n) scratch[n] = std::exp(-arow[n]);
          ops.vmul(scratch.data(), row, kd);
          ops.vadd_scalar(hi.v[i], row, kd);  // B is the all-ones coupling
        }
        break;

      case ModelKind::DeltaNet: {
        scratch = hi.k;
        normalize_key(scratch.data(), kd);
        delta_write(s, vd, kd, scratch.data(), sigmoid(hi.g), hi.v.data());
        break;
      }

      case ModelKind::GLA: {
        scratch.resize(kd);
        for (std::size_t n = 0; n < kd; ++n)
          scratch[n] = gla_decay(hi.g_vec[n], spec.gla_tau);
        for (std::size_t i = 0; i < vd; ++i) {
          double* row = s.data() + i * kd;
          ops.vmul(scratch.data(), row, kd);
          ops.axpy(hi.v[i], hi.k.data(), row, kd);  // the write ignores the gate
        }
        break;
      }

      case ModelKind::Mamba: {
        scratch.resize(kd);
        for (std::size_t i = 0; i < vd; ++i) {
          const double zi = softplus(hi.g_vec[i]);
          const double* arow = hi.a_matrix.data() + i * kd;
          double* row = s.data() + i * kd;
          for (std::size_t n = 0; n < kd; ++n) scratch[n] = std::exp(-arow[n] * zi);
          ops.vmul(scratch.data(), row, kd);
          ops.axpy(zi * hi.v[i], hi.b_in.data(), row, kd);
        }
        break;
      }

      case ModelKind::Mamba2: {
        const double zi = softplus(hi.g);
        ops.scal(std::exp(-hi.a * zi), s.data(), s.size());
        for (std::size_t i = 0; i < vd; ++i)
          ops.axpy(zi * hi.v[i], hi.k.data(), s.data() + i * kd, kd);
        break;
      }

      case ModelKind::GatedDeltaNet: {
        ops.scal(gated_decay(hi.a, hi.alpha), s.data(), s.size());
        scratch = hi.k;
        normalize_key(scratch.data(), kd);
        delta_write(s, vd, kd, scratch.data(), sigmoid(hi.g), hi.v.data());
        break;
      }

      case ModelKind::GatedDeltaProduct: {
        ops.scal(gated_decay(hi.a, hi.alpha), s.data(), s.size());
        for (std::size_t f = 0; f < spec.n_householder; ++f) {
          scratch = hi.k_multi[f];
          normalize_key(scratch.data(), kd);
          delta_write(s, vd, kd, scratch.data(), sigmoid(hi.g_multi[f]), hi.v.data());
        }
        break;
      }

      case ModelKind::SoftmaxAttention:
        break;  // handled above
    }
    readout(s, vd, kd, hi.q.data(), yh);
  }
}

}  // namespace gapbench::lrm
