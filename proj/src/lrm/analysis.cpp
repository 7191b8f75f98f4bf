#include "gapbench/lrm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gapbench/error.hpp"
#include "gapbench/lrm/gates.hpp"
#include "gapbench/lrm/simd.hpp"
#include "gapbench/rng.hpp"

namespace gapbench::lrm {

ModelSpec reference_config(ModelKind kind) {
  ModelSpec spec;
  spec.kind = kind;
  spec.d = 1296;
  spec.n_heads = 16;
  spec.d_state = kind == ModelKind::Mamba2 ? 128 : 64;
  spec.n_householder = 4;
  return spec;
}

namespace {

// Table formulas hold for any head-divisible width, including ones whose
// per-head layout is not runnable (odd GLA head splits).
void validate_dims(const ModelSpec& spec) {
  if (spec.d == 0 || spec.n_heads == 0 || spec.d % spec.n_heads != 0 ||
      spec.n_householder == 0)
    throw Error(Errc::shape_mismatch, "bad model dimensions");
}

}  // namespace

std::uint64_t count_gate_params(const ModelSpec& spec) {
  validate_dims(spec);
  const std::uint64_t d = spec.d, H = spec.n_heads, ds = spec.d_state;
  switch (spec.kind) {
    case ModelKind::LinearAttention:
    case ModelKind::SoftmaxAttention:
      return 0;
    case ModelKind::S4D:
      return d * ds;
    case ModelKind::DeltaNet:
      return d * H + d * d;
    case ModelKind::GLA:
      return d * 16 + (16 * d) / (2 * H);
    case ModelKind::Mamba:
      return 2 * d * ds + 8 * d * d / 16;
    case ModelKind::Mamba2:
      return 2 * d * H;
    case ModelKind::GatedDeltaNet:
      return 2 * d * H + d * d;
    case ModelKind::GatedDeltaProduct:
      return std::uint64_t(spec.n_householder) * (d * H + d * d);
  }
  return 0;
}

std::uint64_t state_size(const ModelSpec& spec) {
  validate_dims(spec);
  const std::uint64_t d = spec.d, H = spec.n_heads, ds = spec.d_state;
  switch (spec.kind) {
    case ModelKind::LinearAttention:
    case ModelKind::DeltaNet:
      return d * d / H;
    case ModelKind::S4D:
      return d * ds;
    case ModelKind::GLA:
      return d * d / (2 * H);
    case ModelKind::Mamba:
    case ModelKind::Mamba2:
      return 2 * d * ds;
    case ModelKind::GatedDeltaNet:
    case ModelKind::GatedDeltaProduct:
      return 2 * d * d / H;
    case ModelKind::SoftmaxAttention:
      throw Error(Errc::shape_mismatch, "softmax attention state grows with t");
  }
  return 0;
}

std::string display_round(std::uint64_t n) {
  char buf[32];
  if (n < 1000) {
    std::snprintf(buf, sizeof buf, "%llu", (unsigned long long)n);
  } else if (n < 1000000) {
    std::snprintf(buf, sizeof buf, "%.0fk", double(n) / 1000.0);
  } else {
    double m = double(n) / 1e6;
    double rounded = std::round(m * 10.0) / 10.0;
    if (std::abs(rounded - std::round(rounded)) < 1e-9)
      std::snprintf(buf, sizeof buf, "%.0fM", rounded);
    else
      std::snprintf(buf, sizeof buf, "%.1fM", rounded);
  }
  return buf;
}

TaxonomyRow taxonomy(ModelKind kind) {
  TaxonomyRow row;
  switch (kind) {
    case ModelKind::LinearAttention:
    case ModelKind::S4D:
    case ModelKind::SoftmaxAttention:
      break;  // non-selective
    case ModelKind::DeltaNet:
      row.selective = true;
      row.weak_selectivity = true;
      row.complementary_gating = true;
      row.channel_mixing = true;
      break;
    case ModelKind::GLA:
      row.selective = true;
      break;
    case ModelKind::Mamba:
    case ModelKind::Mamba2:
      row.selective = true;
      row.complementary_gating = true;
      break;
    case ModelKind::GatedDeltaNet:
    case ModelKind::GatedDeltaProduct:
      row.selective = true;
      row.complementary_gating = true;
      row.channel_mixing = true;
      break;
  }
  return row;
}

namespace {

std::vector<double> normalized(const std::vector<double>& k) {
  std::vector<double> out = k;
  normalize_key(out.data(), out.size());
  return out;
}

// Right-multiplication form of one delta-family step: S_new = S R + v b^T,
// R = c * F_1 ... F_n with F_i = I - beta_i k_i k_i^T.
struct ComposedDelta {
  std::vector<double> r;  // kd x kd, row-major
  std::vector<double> b;  // kd
};

ComposedDelta compose_delta(const ModelSpec& spec, const HeadInputs& hi) {
  const std::size_t kd = spec.key_dim();
  const kern::Ops& ops = kern::active_ops();

  std::vector<std::vector<double>> keys;
  std::vector<double> betas;
  double c = 1.0;
  if (spec.kind == ModelKind::DeltaNet) {
    keys.push_back(normalized(hi.k));
    betas.push_back(sigmoid(hi.g));
  } else if (spec.kind == ModelKind::GatedDeltaNet) {
    keys.push_back(normalized(hi.k));
    betas.push_back(sigmoid(hi.g));
    c = gated_decay(hi.a, hi.alpha);
  } else if (spec.kind == ModelKind::GatedDeltaProduct) {
    for (std::size_t f = 0; f < hi.k_multi.size(); ++f) {
      keys.push_back(normalized(hi.k_multi[f]));
      betas.push_back(sigmoid(hi.g_multi[f]));
    }
    c = gated_decay(hi.a, hi.alpha);
  } else {
    throw Error(Errc::shape_mismatch, "not a delta-family kind");
  }

  ComposedDelta out;
  out.r.assign(kd * kd, 0.0);
  for (std::size_t n = 0; n < kd; ++n) out.r[n * kd + n] = 1.0;
  out.b.assign(kd, 0.0);
  for (std::size_t f = 0; f < keys.size(); ++f) {
    const double* k = keys[f].data();
    const double beta = betas[f];
    // R <- R (I - beta k k^T): per row, subtract beta (row . k) k.
    for (std::size_t n = 0; n < kd; ++n) {
      double* row = out.r.data() + n * kd;
      double along = ops.dot(row, k, kd);
      ops.axpy(-beta * along, k, row, kd);
    }
    // b <- F_f b + beta_f k_f (earlier writes pass through later factors).
    double along = ops.dot(out.b.data(), k, kd);
    ops.axpy(-beta * along, k, out.b.data(), kd);
    ops.axpy(beta, k, out.b.data(), kd);
  }
  ops.scal(c, out.r.data(), out.r.size());
  return out;
}

// Cyclic Jacobi on a symmetric matrix; returns eigenvalues unsorted.
std::vector<double> jacobi_eigenvalues(std::vector<double> a, std::size_t n) {
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        const double app = a[p * n + p], aqq = a[q * n + q];
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double cs = 1.0 / std::sqrt(t * t + 1.0), sn = t * cs;
        for (std::size_t i = 0; i < n; ++i) {
          const double aip = a[i * n + p], aiq = a[i * n + q];
          a[i * n + p] = cs * aip - sn * aiq;
          a[i * n + q] = sn * aip + cs * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double api = a[p * n + i], aqi = a[q * n + i];
          a[p * n + i] = cs * api - sn * aqi;
          a[q * n + i] = sn * api + cs * aqi;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a[i * n + i];
  return eig;
}

}  // namespace

std::vector<double> transition_spectrum(const ModelSpec& spec, const HeadInputs& in) {
  validate_spec(spec);
  const std::size_t kd = spec.key_dim(), vd = spec.value_dim();
  std::vector<double> out;
  switch (spec.kind) {
    case ModelKind::LinearAttention:
      out.assign(kd, 1.0);
      break;
    case ModelKind::DeltaNet:
      out.assign(kd, 1.0);
      out[0] = 1.0 - sigmoid(in.g);
      break;
    case ModelKind::GatedDeltaNet: {
      const double c = gated_decay(in.a, in.alpha);
      out.assign(kd, c);
      out[0] = c * (1.0 - sigmoid(in.g));
      break;
    }
    case ModelKind::GatedDeltaProduct: {
      // Singular values of the composed (generally non-symmetric) product.
      ComposedDelta cd = compose_delta(spec, in);
      std::vector<double> gram(kd * kd, 0.0);
      for (std::size_t i = 0; i < kd; ++i)
        for (std::size_t j = 0; j < kd; ++j) {
          double acc = 0.0;
          for (std::size_t m = 0; m < kd; ++m) acc += cd.r[m * kd + i] * cd.r[m * kd + j];
          gram[i * kd + j] = acc;
        }
      out = jacobi_eigenvalues(std::move(gram), kd);
      for (double& x : out) x = std::sqrt(std::max(x, 0.0));
      break;
    }
    case ModelKind::Mamba2:
      out.push_back(std::exp(-in.a * softplus(in.g)));
      break;
    case ModelKind::GLA:
      out.resize(kd);
      for (std::size_t n = 0; n < kd; ++n)
        out[n] = gla_decay(in.g_vec.at(n), spec.gla_tau);
      break;
    case ModelKind::S4D:
      out.resize(std::size_t(vd) * kd);
      for (std::size_t e = 0; e < out.size(); ++e)
        out[e] = std::exp(-in.a_matrix.at(e));
      break;
    case ModelKind::Mamba:
      out.resize(std::size_t(vd) * kd);
      for (std::size_t i = 0; i < vd; ++i) {
        const double zi = softplus(in.g_vec.at(i));
        for (std::size_t n = 0; n < kd; ++n)
          out[i * kd + n] = std::exp(-in.a_matrix.at(i * kd + n) * zi);
      }
      break;
    case ModelKind::SoftmaxAttention:
      throw Error(Errc::shape_mismatch, "softmax attention has no transition operator");
  }
  std::sort(out.begin(), out.end());
  return out;
}

GatingSweepReport complementary_gating_check(const ModelSpec& spec,
                                             const HeadInputs& proto, double g_lo,
                                             double g_hi, std::size_t points) {
  validate_spec(spec);
  if (points < 2) throw Error(Errc::invalid_config, "sweep needs at least 2 points");
  GatingSweepReport rep;
  rep.grid.resize(points);
  rep.a_measure.resize(points);
  rep.b_measure.resize(points);

  auto norm2 = [](const std::vector<double>& v) {
    double ss = 0.0;
    for (double x : v) ss += x * x;
    return std::sqrt(ss);
  };

  for (std::size_t i = 0; i < points; ++i) {
    const double g = g_lo + (g_hi - g_lo) * double(i) / double(points - 1);
    rep.grid[i] = g;
    double am = 0.0, bm = 0.0;
    switch (spec.kind) {
      case ModelKind::Mamba: {
        const double zi = softplus(g);
        double amin = proto.a_matrix.at(0);
        for (double a : proto.a_matrix) amin = std::min(amin, a);
        am = std::exp(-amin * zi);  // slowest-decaying component
        bm = zi * norm2(proto.b_in);
        break;
      }
      case ModelKind::Mamba2: {
        const double zi = softplus(g);
        am = std::exp(-proto.a * zi);
        bm = zi * norm2(proto.k);
        break;
      }
      case ModelKind::DeltaNet:
        am = 1.0 - sigmoid(g);
        bm = sigmoid(g);  // write magnitude along the unit key
        break;
      case ModelKind::GatedDeltaNet:
        am = gated_decay(proto.a, proto.alpha) * (1.0 - sigmoid(g));
        bm = sigmoid(g);
        break;
      case ModelKind::GatedDeltaProduct: {
        HeadInputs hi = proto;
        hi.k_multi.assign(spec.n_householder, proto.k);
        hi.g_multi.assign(spec.n_householder, g);
        ComposedDelta cd = compose_delta(spec, hi);
        // Retention along the shared key direction.
        std::vector<double> k = normalized(proto.k);
        const std::size_t kd = spec.key_dim();
        double along = 0.0;
        for (std::size_t r = 0; r < kd; ++r) {
          double rk = 0.0;
          for (std::size_t c2 = 0; c2 < kd; ++c2) rk += cd.r[r * kd + c2] * k[c2];
          along += k[r] * rk;
        }
        am = along;
        bm = norm2(cd.b);
        break;
      }
      case ModelKind::GLA:
        am = gla_decay(g, spec.gla_tau);
        bm = norm2(proto.k);  // the write never sees the gate
        break;
      default:
        throw Error(Errc::shape_mismatch, "gating sweep needs a gated kind");
    }
    rep.a_measure[i] = am;
    rep.b_measure[i] = bm;
  }

  rep.a_non_increasing = rep.b_non_decreasing = true;
  rep.a_strictly_decreasing = rep.b_strictly_increasing = rep.b_constant = true;
  for (std::size_t i = 1; i < points; ++i) {
    if (rep.a_measure[i] > rep.a_measure[i - 1]) rep.a_non_increasing = false;
    if (rep.b_measure[i] < rep.b_measure[i - 1]) rep.b_non_decreasing = false;
    if (rep.a_measure[i] >= rep.a_measure[i - 1]) rep.a_strictly_decreasing = false;
    if (rep.b_measure[i] <= rep.b_measure[i - 1]) rep.b_strictly_increasing = false;
    if (rep.b_measure[i] != rep.b_measure[0]) rep.b_constant = false;
  }
  rep.complementary = rep.a_non_increasing && rep.b_non_decreasing && !rep.b_constant;
  return rep;
}

CompositionCheck deltaproduct_composition_check(const ModelSpec& spec,
                                                const StepInputs& in,
                                                std::uint64_t state_seed,
                                                double tolerance) {
  validate_spec(spec);
  if (spec.kind != ModelKind::GatedDeltaProduct)
    throw Error(Errc::shape_mismatch, "composition check needs the multi-factor kind");
  const std::size_t kd = spec.key_dim(), vd = spec.value_dim();
  const kern::Ops& ops = kern::active_ops();

  RecurrentState seq = RecurrentState::zeros(spec);
  RngStream rng(derive_seed(state_seed, Phase::weights, 1));
  for (auto& s : seq.s)
    for (double& x : s) x = rng.normal();
  RecurrentState composed = seq;

  std::vector<double> y_seq;
  step(spec, seq, in, y_seq);

  CompositionCheck out;
  std::vector<double> snew(std::size_t(vd) * kd), y_comp(in.heads.size() * vd);
  for (std::size_t h = 0; h < in.heads.size(); ++h) {
    const HeadInputs& hi = in.heads[h];
    ComposedDelta cd = compose_delta(spec, hi);
    const std::vector<double>& s0 = composed.s[h];
    for (std::size_t i = 0; i < vd; ++i) {
      double* row = snew.data() + i * kd;
      std::fill(row, row + kd, 0.0);
      for (std::size_t n = 0; n < kd; ++n)
        ops.axpy(s0[i * kd + n], cd.r.data() + n * kd, row, kd);
      ops.axpy(hi.v[i], cd.b.data(), row, kd);
      y_comp[h * vd + i] = ops.dot(row, hi.q.data(), kd);
    }
    out.max_rel_error =
        std::max(out.max_rel_error, relative_error(snew, seq.s[h]));
  }
  out.max_rel_error = std::max(out.max_rel_error, relative_error(y_comp, y_seq));
  out.ok = out.max_rel_error <= tolerance;
  return out;
}

}  // namespace gapbench::lrm
