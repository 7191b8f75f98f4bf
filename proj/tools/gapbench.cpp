#include <CLI11.hpp>
#include <cstdio>
#include <string>

#include "gapbench/commands.hpp"
#include "gapbench/error.hpp"

namespace {

void add_common(CLI::App* sub, gapbench::cli::CommonArgs& args, std::string& format) {
  sub->add_option("--config", args.config_path, "JSON file overriding profile fields");
  sub->add_option("--profile", args.profile,
                  "built-in profile: tiny, paper-main, task2-paper, task3-paper, "
                  "task4-sweep");
  sub->add_option("--seed", args.seed, "override grammar and dataset seeds");
  sub->add_option("--out", args.out_dir, "output directory")
      ->capture_default_str();
  sub->add_option("--jobs", args.jobs, "worker threads for generation/evaluation")
      ->check(CLI::PositiveNumber);
  sub->add_option("--format", format, "dataset record format")
      ->check(CLI::IsMember({"text", "binary"}));
}

}  // namespace

int main(int argc, char** argv) {
  using namespace gapbench::cli;
  CLI::App app{
      "Ambiguous-grammar benchmark toolkit: builds observation-deterministic "
      "grammars, generates gap-task datasets, certifies them with an exact "
      "belief oracle, and verifies recurrent-memory kernels."};
  app.require_subcommand(1);

  CommonArgs gg_args, gd_args;
  std::string gg_format = "text", gd_format = "text";
  std::string gd_grammar, an_grammar, oe_manifest, oe_grammar;
  int oe_jobs = 1;
  std::string kc_model = "all";

  CLI::App* gg = app.add_subcommand("gen-grammar",
                                    "build a grammar and write it with its report");
  add_common(gg, gg_args, gg_format);

  CLI::App* gd = app.add_subcommand("gen-dataset",
                                    "generate train/test datasets for a grammar");
  gd->add_option("grammar", gd_grammar, "grammar file")->required();
  add_common(gd, gd_args, gd_format);

  CLI::App* an = app.add_subcommand("analyze", "validation and complexity report");
  an->add_option("grammar", an_grammar, "grammar file")->required();

  CLI::App* oe = app.add_subcommand("oracle-eval",
                                    "replay a dataset through the exact belief oracle");
  oe->add_option("manifest", oe_manifest, "dataset manifest file")->required();
  oe->add_option("grammar", oe_grammar, "grammar file")->required();
  oe->add_option("--jobs", oe_jobs, "worker threads")->check(CLI::PositiveNumber);

  CLI::App* kc = app.add_subcommand("kernel-check",
                                    "run the recurrence property suite");
  kc->add_option("model", kc_model, "model name or 'all'")->capture_default_str();

  app.add_subcommand("param-report",
                     "gate-parameter and state-size table reproduction");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gg->parsed()) {
      gg_args.format = gg_format == "binary" ? gapbench::DataFormat::binary
                                             : gapbench::DataFormat::text;
      return cmd_gen_grammar(gg_args);
    }
    if (gd->parsed()) {
      gd_args.format = gd_format == "binary" ? gapbench::DataFormat::binary
                                             : gapbench::DataFormat::text;
      return cmd_gen_dataset(gd_args, gd_grammar);
    }
    if (an->parsed()) return cmd_analyze(an_grammar);
    if (oe->parsed()) return cmd_oracle_eval(oe_manifest, oe_grammar, oe_jobs);
    if (kc->parsed()) return cmd_kernel_check(kc_model);
    return cmd_param_report();
  } catch (const gapbench::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    const bool usage = e.code() == gapbench::Errc::unknown_profile ||
                       e.code() == gapbench::Errc::unknown_model_name;
    return usage ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
}
