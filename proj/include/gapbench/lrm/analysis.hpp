#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gapbench/lrm/model.hpp"

namespace gapbench::lrm {

// Largest published configuration: d=1296 over 16 heads, 4 Householder
// factors, state modes 64 (128 for the wider scalar-decay variant).
ModelSpec reference_config(ModelKind kind);

// Parameter count of the state-transition gate path, including the key
// projections that feed data-dependent transitions.
std::uint64_t count_gate_params(const ModelSpec& spec);

// Scalars held in recurrent state across all heads.
std::uint64_t state_size(const ModelSpec& spec);

// "0", "21k", "105k", "1.7M": thousands round to an integer, millions keep
// one decimal with a trailing ".0" dropped.
std::string display_round(std::uint64_t n);

struct TaxonomyRow {
  bool selective = false;          // data-dependent transition
  bool weak_selectivity = false;   // spectrum bounded away from zero
  bool complementary_gating = false;
  bool channel_mixing = false;     // transition mixes state channels
};
TaxonomyRow taxonomy(ModelKind kind);

// Eigenvalues (singular values for the multi-factor Householder product) of
// the transition operator the inputs induce, sorted ascending. Elementwise
// kinds report their diagonal decay entries; SoftmaxAttention has none.
std::vector<double> transition_spectrum(const ModelSpec& spec, const HeadInputs& in);

struct GatingSweepReport {
  std::vector<double> grid;       // gate pre-activations swept
  std::vector<double> a_measure;  // retention per grid point
  std::vector<double> b_measure;  // write magnitude per grid point
  bool a_non_increasing = false;
  bool b_non_decreasing = false;
  bool a_strictly_decreasing = false;
  bool b_strictly_increasing = false;
  bool b_constant = false;
  bool complementary = false;  // retention falls exactly when writes rise
};

// Sweeps the shared gate pre-activation with everything else held at the
// prototype values. The prototype's alpha/a/k/a_matrix/b_in fix the
// non-swept inputs.
GatingSweepReport complementary_gating_check(const ModelSpec& spec,
                                             const HeadInputs& proto, double g_lo,
                                             double g_hi, std::size_t points);

struct CompositionCheck {
  bool ok = false;
  double max_rel_error = 0.0;
};

// Applies the n_householder rank-1 updates one by one, then compares against
// the single composed (A_t, B_t) step. state_seed fills the starting state.
CompositionCheck deltaproduct_composition_check(const ModelSpec& spec,
                                                const StepInputs& in,
                                                std::uint64_t state_seed,
                                                double tolerance = 1e-6);

}  // namespace gapbench::lrm
