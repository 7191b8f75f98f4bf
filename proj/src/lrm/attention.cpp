#include "gapbench/lrm/attention.hpp"

#include "gapbench/error.hpp"

namespace gapbench::lrm {

AttentionTrace softmax_attention_forward(const ModelWeights& w,
                                         std::span<const std::vector<double>> tokens) {
  if (w.spec.kind != ModelKind::SoftmaxAttention)
    throw Error(Errc::shape_mismatch, "softmax_attention_forward needs that kind");
  if (tokens.empty())
    throw Error(Errc::invalid_config, "softmax_attention_forward needs tokens");
  AttentionTrace trace;
  trace.outputs.reserve(tokens.size());
  trace.cache_scalars.reserve(tokens.size());
  RecurrentState st = RecurrentState::zeros(w.spec);
  std::vector<double> y;
  for (const auto& x : tokens) {
    StepInputs in = project_inputs(w, x);
    step(w.spec, st, in, y);
    trace.outputs.push_back(y);
    trace.cache_scalars.push_back(st.state_scalars());
  }
  return trace;
}

}  // namespace gapbench::lrm
