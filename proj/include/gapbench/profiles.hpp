#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gapbench/grammar.hpp"
#include "gapbench/tasks.hpp"

namespace gapbench {

// One generation run: a grammar plus the split pair of one task.
struct RunConfig {
  GrammarConfig grammar;
  int task = 1;
  std::uint32_t num_train = 200;
  std::uint32_t num_test = 50;
  std::uint32_t t_min = 1, t_max = 20;
  std::uint32_t n_min = 0, n_max = 0;  // noise-gap run bounds (train)
  std::uint32_t gap_test = 0;          // fixed noise-gap run (test)
  double gamma = 0.2;
  double p_gap_train = 0.0, p_gap_test = 0.0;
  std::vector<std::uint32_t> gap_lengths;  // gap-length sweep evaluation family
  std::uint64_t seed = 1;                  // dataset seed

  TaskConfig task_config(Split split) const;
};

std::vector<std::string> profile_names();
RunConfig profile_config(const std::string& name);  // throws unknown_profile

// Applies the keys present in a JSON object on top of cfg; unknown keys are
// parse errors so typos fail loudly.
void apply_config_json(RunConfig& cfg, const std::string& json_text);

std::string run_config_json(const RunConfig& cfg);

}  // namespace gapbench
