#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace gapbench::lrm {

enum class ModelKind : std::uint8_t {
  LinearAttention,
  S4D,
  DeltaNet,
  GLA,
  Mamba,
  Mamba2,
  GatedDeltaNet,
  GatedDeltaProduct,
  SoftmaxAttention,
};

ModelKind model_kind_from_name(std::string_view name);  // throws unknown_model_name
std::string_view model_name(ModelKind kind);
std::span<const ModelKind> all_model_kinds();

bool is_delta_family(ModelKind kind);  // Householder-transition kinds
bool is_recurrent(ModelKind kind);     // everything except SoftmaxAttention

// Per-head state is a value_dim x key_dim matrix S, updated as
// S <- A(S) + B ox I and read out as y = S q. The transition A is elementwise
// (possibly constant) for the decay kinds and a Householder product for the
// delta family.
struct ModelSpec {
  ModelKind kind = ModelKind::LinearAttention;
  std::uint32_t d = 64;            // model width
  std::uint32_t n_heads = 4;
  std::uint32_t d_state = 16;      // S4D / Mamba / Mamba2 state modes
  std::uint32_t n_householder = 1;  // GatedDeltaProduct factors
  double gla_tau = 16.0;

  std::uint32_t d_head() const { return d / n_heads; }
  std::uint32_t head_count() const;  // 1 for the channel-state kinds (S4D, Mamba)
  std::uint32_t key_dim() const;     // state columns per head
  std::uint32_t value_dim() const;   // state rows per head
  std::uint32_t output_dim() const { return head_count() * value_dim(); }
};

void validate_spec(const ModelSpec& spec);  // throws shape_mismatch

// Everything a single update step consumes, already projected. step() is a
// pure function of (spec, state, inputs); projections live in ModelWeights.
struct HeadInputs {
  std::vector<double> k;  // key_dim; unit-normalized by the delta kinds
  std::vector<double> q;  // key_dim (readout)
  std::vector<double> v;  // value_dim (input)
  double g = 0.0;         // scalar gate pre-activation
  double alpha = 0.0;     // decay gate pre-activation (gated delta kinds)
  double a = 1.0;         // learned base decay scalar (Mamba2 / gated delta kinds)
  std::vector<double> g_vec;     // per-dim gates: GLA key_dim, Mamba value_dim
  std::vector<double> a_matrix;  // S4D / Mamba: value_dim x key_dim, positive
  std::vector<double> b_in;      // Mamba: projected input coupling, key_dim
  std::vector<std::vector<double>> k_multi;  // GatedDeltaProduct keys, n_householder
  std::vector<double> g_multi;               // GatedDeltaProduct gate scalars
};

struct StepInputs {
  std::vector<HeadInputs> heads;  // size head_count
};

struct RecurrentState {
  std::vector<std::vector<double>> s;  // per head, value_dim x key_dim, row-major
  // SoftmaxAttention: unbounded KV cache, flattened t x dim per head.
  std::vector<std::vector<double>> cached_k, cached_v;
  std::size_t cached_steps = 0;

  static RecurrentState zeros(const ModelSpec& spec);
  std::size_t state_scalars() const;
};

// Applies one update; y (size output_dim) receives the readout.
void step(const ModelSpec& spec, RecurrentState& state, const StepInputs& in,
          std::vector<double>& y);

struct ModelWeights {
  ModelSpec spec;
  // Row-major [rows x in] projections, heads packed along rows.
  std::vector<double> w_k, w_q, w_v;
  std::vector<double> w_g;              // scalar gates; input is x, or v for Mamba2
  std::vector<double> w_alpha;          // gated delta kinds
  std::vector<double> base_a;           // per head
  std::vector<double> a_matrix;         // S4D / Mamba, positive entries
  std::vector<double> w_g1, w_g2;       // two-stage gates (GLA from x, Mamba from v)
  std::vector<double> w_b;              // Mamba input coupling, key_dim x value_dim
  std::vector<double> w_k_multi, w_g_multi;  // GatedDeltaProduct, factor-major
};

ModelWeights init_weights(const ModelSpec& spec, std::uint64_t seed);
StepInputs project_inputs(const ModelWeights& w, std::span<const double> x);

// Reference evaluation: project + step, token by token.
std::vector<std::vector<double>> sequential_scan(const ModelWeights& w,
                                                 std::span<const std::vector<double>> tokens);

// Within-chunk prefix composition of transitions; exact up to floating-point
// reassociation. chunk_size <= 1 delegates to the sequential loop.
std::vector<std::vector<double>> chunked_scan(const ModelWeights& w,
                                              std::span<const std::vector<double>> tokens,
                                              std::size_t chunk_size);

// max_i |a_i - b_i| / max(max_i |b_i|, 1e-8)
double relative_error(std::span<const double> a, std::span<const double> b);

}  // namespace gapbench::lrm
