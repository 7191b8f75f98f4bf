#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "gapbench/serialize.hpp"

namespace gapbench::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // validation / certification failure
inline constexpr int kExitUsage = 2;

struct CommonArgs {
  std::string config_path;  // JSON overrides, applied after the profile
  std::string profile;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;  // overrides both grammar and dataset seeds
  int jobs = 1;
  DataFormat format = DataFormat::text;
};

int cmd_gen_grammar(const CommonArgs& args);
int cmd_gen_dataset(const CommonArgs& args, const std::string& grammar_path);
int cmd_analyze(const std::string& grammar_path);
int cmd_oracle_eval(const std::string& manifest_path, const std::string& grammar_path,
                    int jobs);
int cmd_kernel_check(const std::string& model_selection);  // name or "all"
int cmd_param_report();

}  // namespace gapbench::cli
