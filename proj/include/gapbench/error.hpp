#pragma once

#include <stdexcept>
#include <string>

namespace gapbench {

enum class Errc {
  invalid_config,
  construction_failure,
  empty_belief,
  unknown_latent,
  empty_distractor_set,
  length_mismatch,
  out_of_range_id,
  shape_mismatch,
  non_finite_value,
  non_convergence,
  hash_mismatch,
  unknown_model_name,
  unknown_profile,
  parse_error,
  io_error,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace gapbench
