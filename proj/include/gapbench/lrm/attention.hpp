#pragma once

#include <span>
#include <vector>

#include "gapbench/lrm/model.hpp"

namespace gapbench::lrm {

struct AttentionTrace {
  std::vector<std::vector<double>> outputs;
  std::vector<std::size_t> cache_scalars;  // per step: 2 * t * d_head * n_heads
};

// Causal softmax attention over the full history, tracking how the key/value
// cache grows with t.
AttentionTrace softmax_attention_forward(const ModelWeights& w,
                                         std::span<const std::vector<double>> tokens);

}  // namespace gapbench::lrm
