#include <cmath>
#include <cstddef>
#include <vector>

#include "gapbench/error.hpp"
#include "gapbench/lrm/gates.hpp"
#include "gapbench/lrm/model.hpp"
#include "gapbench/lrm/simd.hpp"

namespace gapbench::lrm {

namespace {

// Log-decay layout per step: one scalar, one key-length vector broadcast over
// rows, or a full value x key matrix.
enum class DecayRep { scalar, keyvec, matrix };

DecayRep decay_rep(ModelKind kind) {
  switch (kind) {
    case ModelKind::GLA:
      return DecayRep::keyvec;
    case ModelKind::S4D:
    case ModelKind::Mamba:
      return DecayRep::matrix;
    default:
      return DecayRep::scalar;
  }
}

struct ElementwiseStep {
  double log_scalar = 0.0;
  std::vector<double> log_vec;  // keyvec: kd, matrix: vd*kd
  std::vector<double> write;    // vd x kd
};

ElementwiseStep make_elementwise(const ModelSpec& spec, const HeadInputs& hi) {
  const std::size_t kd = spec.key_dim(), vd = spec.value_dim();
  ElementwiseStep st;
  st.write.assign(std::size_t(vd) * kd, 0.0);
  switch (spec.kind) {
    case ModelKind::LinearAttention:
      for (std::size_t i = 0; i < vd; ++i)
        for (std::size_t n = 0; n < kd; ++n) st.write[i * kd + n] = hi.v[i] * hi.k[n];
      break;
    case ModelKind::S4D:
      st.log_vec.resize(std::size_t(vd) * kd);
      for (std::size_t e = 0; e < st.log_vec.size(); ++e)
        st.log_vec[e] = -hi.a_matrix[e];
      for (std::size_t i = 0; i < vd; ++i)
        for (std::size_t n = 0; n < kd; ++n) st.write[i * kd + n] = hi.v[i];
      break;
    case ModelKind::GLA:
      st.log_vec.resize(kd);
      for (std::size_t n = 0; n < kd; ++n)
        st.log_vec[n] = gla_log_decay(hi.g_vec[n], spec.gla_tau);
      for (std::size_t i = 0; i < vd; ++i)
        for (std::size_t n = 0; n < kd; ++n) st.write[i * kd + n] = hi.v[i] * hi.k[n];
      break;
    case ModelKind::Mamba: {
      st.log_vec.resize(std::size_t(vd) * kd);
      for (std::size_t i = 0; i < vd; ++i) {
        const double zi = softplus(hi.g_vec[i]);
        for (std::size_t n = 0; n < kd; ++n) {
          st.log_vec[i * kd + n] = -hi.a_matrix[i * kd + n] * zi;
          st.write[i * kd + n] = zi * hi.v[i] * hi.b_in[n];
        }
      }
      break;
    }
    case ModelKind::Mamba2: {
      const double zi = softplus(hi.g);
      st.log_scalar = -hi.a * zi;
      for (std::size_t i = 0; i < vd; ++i)
        for (std::size_t n = 0; n < kd; ++n)
          st.write[i * kd + n] = zi * hi.v[i] * hi.k[n];
      break;
    }
    default:
      throw Error(Errc::shape_mismatch, "not an elementwise-decay kind");
  }
  return st;
}

// Outputs for one chunk of an elementwise-decay head; s is the carried state
// and holds the chunk-end state on return. Prefix log-decays keep every
// rescaling factor as exp of a non-positive difference.
void elementwise_chunk(const ModelSpec& spec, std::vector<double>& s,
                       const std::vector<const HeadInputs*>& heads,
                       std::vector<std::vector<double>>& ys, std::size_t y_off,
                       std::size_t t0) {
  const std::size_t kd = spec.key_dim(), vd = spec.value_dim();
  const std::size_t m = heads.size();
  const DecayRep rep = decay_rep(spec.kind);
  const kern::Ops& ops = kern::active_ops();

  std::vector<ElementwiseStep> steps;
  steps.reserve(m);
  for (const HeadInputs* hi : heads) steps.push_back(make_elementwise(spec, *hi));

  // Inclusive prefix of log decays.
  std::vector<double> cum_scalar(m, 0.0);
  std::vector<std::vector<double>> cum_vec;
  if (rep != DecayRep::scalar) {
    cum_vec.assign(m, std::vector<double>(steps[0].log_vec.size(), 0.0));
    for (std::size_t t = 0; t < m; ++t) {
      if (t > 0) cum_vec[t] = cum_vec[t - 1];
      const auto& lv = steps[t].log_vec;
      for (std::size_t e = 0; e < lv.size(); ++e) cum_vec[t][e] += lv[e];
    }
  } else {
    for (std::size_t t = 0; t < m; ++t)
      cum_scalar[t] = (t > 0 ? cum_scalar[t - 1] : 0.0) + steps[t].log_scalar;
  }

  std::vector<double> scratch(std::size_t(vd) * kd), tmp(kd), factor(kd);
  for (std::size_t t = 0; t < m; ++t) {
    // Carried state, decayed by the whole prefix.
    scratch = s;
    switch (rep) {
      case DecayRep::scalar:
        ops.scal(std::exp(cum_scalar[t]), scratch.data(), scratch.size());
        break;
      case DecayRep::keyvec:
        for (std::size_t n = 0; n < kd; ++n) factor[n] = std::exp(cum_vec[t][n]);
        for (std::size_t i = 0; i < vd; ++i)
          ops.vmul(factor.data(), scratch.data() + i * kd, kd);
        break;
      case DecayRep::matrix:
        for (std::size_t e = 0; e < scratch.size(); ++e)
          scratch[e] *= std::exp(cum_vec[t][e]);
        break;
    }
    // Writes, each decayed by the suffix it has lived through.
    for (std::size_t tau = 0; tau <= t; ++tau) {
      const auto& wm = steps[tau].write;
      if (tau == t) {
        for (std::size_t e = 0; e < scratch.size(); ++e) scratch[e] += wm[e];
        continue;
      }
      switch (rep) {
        case DecayRep::scalar:
          ops.axpy(std::exp(cum_scalar[t] - cum_scalar[tau]), wm.data(), scratch.data(),
                   scratch.size());
          break;
        case DecayRep::keyvec:
          for (std::size_t n = 0; n < kd; ++n)
            factor[n] = std::exp(cum_vec[t][n] - cum_vec[tau][n]);
          for (std::size_t i = 0; i < vd; ++i) {
            std::copy(wm.begin() + i * kd, wm.begin() + (i + 1) * kd, tmp.begin());
            ops.vmul(factor.data(), tmp.data(), kd);
            ops.axpy(1.0, tmp.data(), scratch.data() + i * kd, kd);
          }
          break;
        case DecayRep::matrix:
          for (std::size_t e = 0; e < scratch.size(); ++e)
            scratch[e] += wm[e] * std::exp(cum_vec[t][e] - cum_vec[tau][e]);
          break;
      }
    }
    const double* q = heads[t]->q.data();
    double* yh = ys[t0 + t].data() + y_off;
    for (std::size_t i = 0; i < vd; ++i) yh[i] = ops.dot(scratch.data() + i * kd, q, kd);
  }
  s = scratch;  // chunk-end state
}

struct DeltaFactor {
  std::vector<double> k;  // unit-normalized
  double beta = 0.0;
};

struct DeltaStep {
  double log_c = 0.0;  // ln of the scalar decay applied to the carried state
  std::vector<DeltaFactor> factors;
  const std::vector<double>* v = nullptr;
};

DeltaStep make_delta(const ModelSpec& spec, const HeadInputs& hi) {
  DeltaStep st;
  st.v = &hi.v;
  if (spec.kind != ModelKind::DeltaNet)
    st.log_c = gated_log_decay(hi.a, hi.alpha);
  if (spec.kind == ModelKind::GatedDeltaProduct) {
    st.factors.resize(spec.n_householder);
    for (std::size_t f = 0; f < spec.n_householder; ++f) {
      st.factors[f].k = hi.k_multi[f];
      normalize_key(st.factors[f].k.data(), st.factors[f].k.size());
      st.factors[f].beta = sigmoid(hi.g_multi[f]);
    }
  } else {
    st.factors.resize(1);
    st.factors[0].k = hi.k;
    normalize_key(st.factors[0].k.data(), st.factors[0].k.size());
    st.factors[0].beta = sigmoid(hi.g);
  }
  return st;
}

// Outputs for one chunk of a delta-family head. Each y_t pulls the query
// backward through the Householder chain, so the factor products are
// reassociated onto the query side instead of the state.
void delta_chunk(const ModelSpec& spec, std::vector<double>& s,
                 const std::vector<const HeadInputs*>& heads,
                 std::vector<std::vector<double>>& ys, std::size_t y_off,
                 std::size_t t0) {
  const std::size_t kd = spec.key_dim(), vd = spec.value_dim();
  const std::size_t m = heads.size();
  const kern::Ops& ops = kern::active_ops();

  std::vector<DeltaStep> steps;
  steps.reserve(m);
  for (const HeadInputs* hi : heads) steps.push_back(make_delta(spec, *hi));

  std::vector<double> gamma(m, 0.0);  // inclusive prefix of log_c
  for (std::size_t t = 0; t < m; ++t)
    gamma[t] = (t > 0 ? gamma[t - 1] : 0.0) + steps[t].log_c;

  std::vector<double> w(kd);
  for (std::size_t t = 0; t < m; ++t) {
    double* yh = ys[t0 + t].data() + y_off;
    std::copy(heads[t]->q.begin(), heads[t]->q.end(), w.begin());
    for (std::size_t tau = t + 1; tau-- > 0;) {
      const DeltaStep& st = steps[tau];
      const double scale = std::exp(gamma[t] - gamma[tau]);
      for (std::size_t f = st.factors.size(); f-- > 0;) {
        const DeltaFactor& fac = st.factors[f];
        const double along = ops.dot(fac.k.data(), w.data(), kd);
        ops.axpy(fac.beta * along * scale, st.v->data(), yh, vd);
        ops.axpy(-fac.beta * along, fac.k.data(), w.data(), kd);
      }
    }
    const double carried = std::exp(gamma[t]);
    for (std::size_t i = 0; i < vd; ++i)
      yh[i] += carried * ops.dot(s.data() + i * kd, w.data(), kd);
  }

  // Chunk-end state, applied in step order.
  for (const DeltaStep& st : steps) {
    ops.scal(std::exp(st.log_c), s.data(), s.size());
    for (const DeltaFactor& fac : st.factors) {
      for (std::size_t i = 0; i < vd; ++i) {
        double* row = s.data() + i * kd;
        double along = ops.dot(row, fac.k.data(), kd);
        ops.axpy(fac.beta * ((*st.v)[i] - along), fac.k.data(), row, kd);
      }
    }
  }
}

}  // namespace

std::vector<std::vector<double>> chunked_scan(const ModelWeights& w,
                                              std::span<const std::vector<double>> tokens,
                                              std::size_t chunk_size) {
  const ModelSpec& spec = w.spec;
  validate_spec(spec);
  if (tokens.empty())
    throw Error(Errc::invalid_config, "chunked_scan needs at least one token");
  if (chunk_size <= 1 || spec.kind == ModelKind::SoftmaxAttention)
    return sequential_scan(w, tokens);

  const std::size_t T = tokens.size();
  const std::size_t H = spec.head_count(), vd = spec.value_dim();

  std::vector<StepInputs> inputs;
  inputs.reserve(T);
  for (const auto& x : tokens) inputs.push_back(project_inputs(w, x));

  RecurrentState state = RecurrentState::zeros(spec);
  std::vector<std::vector<double>> ys(T, std::vector<double>(std::size_t(H) * vd, 0.0));

  std::vector<const HeadInputs*> chunk_heads;
  for (std::size_t t0 = 0; t0 < T; t0 += chunk_size) {
    const std::size_t t1 = std::min(t0 + chunk_size, T);
    for (std::size_t h = 0; h < H; ++h) {
      chunk_heads.clear();
      for (std::size_t t = t0; t < t1; ++t) chunk_heads.push_back(&inputs[t].heads[h]);
      if (is_delta_family(spec.kind))
        delta_chunk(spec, state.s[h], chunk_heads, ys, h * vd, t0);
      else
        elementwise_chunk(spec, state.s[h], chunk_heads, ys, h * vd, t0);
    }
  }
  return ys;
}

}  // namespace gapbench::lrm
