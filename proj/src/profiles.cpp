#include "gapbench/profiles.hpp"

#include <nlohmann/json.hpp>

#include "gapbench/error.hpp"

namespace gapbench {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

TaskConfig RunConfig::task_config(Split split) const {
  TaskConfig tc;
  tc.task = task;
  tc.num_sequences = split == Split::train ? num_train : num_test;
  tc.t_min = t_min;
  tc.t_max = t_max;
  tc.n_min = n_min;
  tc.n_max = n_max;
  tc.gap_test = gap_test;
  tc.gamma = gamma;
  tc.p_gap = split == Split::train ? p_gap_train : p_gap_test;
  tc.split = split;
  tc.seed = seed;
  return tc;
}

namespace {

RunConfig tiny_profile() {
  RunConfig c;
  c.grammar.num_observables = 4;
  c.grammar.ambiguity = 2;
  c.grammar.p_transition = 0.1;
  c.grammar.p_end = 0.05;
  c.grammar.seed = 1;
  c.task = 1;
  c.num_train = 100;
  c.num_test = 20;
  c.t_min = 1;
  c.t_max = 20;
  c.seed = 1;
  return c;
}

// Published experimental configuration: 40 observables at ambiguity 40,
// topology coin 0.001, lengths 1..200, 200k/1k split sizes.
RunConfig paper_main() {
  RunConfig c;
  c.grammar.num_observables = 40;
  c.grammar.ambiguity = 40;
  c.grammar.p_transition = 0.001;
  c.grammar.p_end = 0.0;
  c.grammar.seed = 1;
  c.task = 1;
  c.num_train = 200000;
  c.num_test = 1000;
  c.t_min = 1;
  c.t_max = 200;
  c.seed = 1;
  return c;
}

RunConfig task2_paper() {
  RunConfig c = paper_main();
  c.task = 2;
  c.n_min = 0;
  c.n_max = 10;
  c.gap_test = 10;
  c.gamma = 0.2;
  return c;
}

RunConfig task3_paper() {
  RunConfig c = paper_main();
  c.task = 3;
  c.p_gap_train = 0.1;
  c.p_gap_test = 1.0;
  return c;
}

RunConfig task4_sweep() {
  RunConfig c = task2_paper();
  c.task = 4;
  c.gap_lengths = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  return c;
}

}  // namespace

std::vector<std::string> profile_names() {
  return {"tiny", "paper-main", "task2-paper", "task3-paper", "task4-sweep"};
}

RunConfig profile_config(const std::string& name) {
  if (name == "tiny") return tiny_profile();
  if (name == "paper-main") return paper_main();
  if (name == "task2-paper") return task2_paper();
  if (name == "task3-paper") return task3_paper();
  if (name == "task4-sweep") return task4_sweep();
  std::string msg = "unknown profile '" + name + "'; available:";
  for (const auto& p : profile_names()) msg += " " + p;
  throw Error(Errc::unknown_profile, msg);
}

void apply_config_json(RunConfig& cfg, const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("config JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(Errc::parse_error, "config JSON must be an object");

  try {
    for (auto& [key, val] : j.items()) {
      if (key == "grammar") {
        if (!val.is_object()) throw Error(Errc::parse_error, "grammar must be an object");
        for (auto& [gk, gv] : val.items()) {
          if (gk == "num_observables") cfg.grammar.num_observables = gv.get<std::uint32_t>();
          else if (gk == "ambiguity") cfg.grammar.ambiguity = gv.get<std::uint32_t>();
          else if (gk == "p_transition") cfg.grammar.p_transition = gv.get<double>();
          else if (gk == "p_end") cfg.grammar.p_end = gv.get<double>();
          else if (gk == "seed") cfg.grammar.seed = gv.get<std::uint64_t>();
          else if (gk == "max_resample_attempts")
            cfg.grammar.max_resample_attempts = gv.get<std::uint32_t>();
          else throw Error(Errc::parse_error, "unknown grammar config key '" + gk + "'");
        }
      } else if (key == "task") cfg.task = val.get<int>();
      else if (key == "num_train") cfg.num_train = val.get<std::uint32_t>();
      else if (key == "num_test") cfg.num_test = val.get<std::uint32_t>();
      else if (key == "t_min") cfg.t_min = val.get<std::uint32_t>();
      else if (key == "t_max") cfg.t_max = val.get<std::uint32_t>();
      else if (key == "n_min") cfg.n_min = val.get<std::uint32_t>();
      else if (key == "n_max") cfg.n_max = val.get<std::uint32_t>();
      else if (key == "gap_test") cfg.gap_test = val.get<std::uint32_t>();
      else if (key == "gamma") cfg.gamma = val.get<double>();
      else if (key == "p_gap_train") cfg.p_gap_train = val.get<double>();
      else if (key == "p_gap_test") cfg.p_gap_test = val.get<double>();
      else if (key == "gap_lengths") cfg.gap_lengths = val.get<std::vector<std::uint32_t>>();
      else if (key == "seed") cfg.seed = val.get<std::uint64_t>();
      else throw Error(Errc::parse_error, "unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("config JSON: ") + e.what());
  }
}

std::string run_config_json(const RunConfig& cfg) {
  ordered j;
  j["grammar"] = {{"num_observables", cfg.grammar.num_observables},
                  {"ambiguity", cfg.grammar.ambiguity},
                  {"p_transition", cfg.grammar.p_transition},
                  {"p_end", cfg.grammar.p_end},
                  {"seed", cfg.grammar.seed},
                  {"max_resample_attempts", cfg.grammar.max_resample_attempts}};
  j["task"] = cfg.task;
  j["num_train"] = cfg.num_train;
  j["num_test"] = cfg.num_test;
  j["t_min"] = cfg.t_min;
  j["t_max"] = cfg.t_max;
  j["n_min"] = cfg.n_min;
  j["n_max"] = cfg.n_max;
  j["gap_test"] = cfg.gap_test;
  j["gamma"] = cfg.gamma;
  j["p_gap_train"] = cfg.p_gap_train;
  j["p_gap_test"] = cfg.p_gap_test;
  j["gap_lengths"] = cfg.gap_lengths;
  j["seed"] = cfg.seed;
  return j.dump(2) + "\n";
}

}  // namespace gapbench
