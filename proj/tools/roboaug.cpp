// SPDX-License-Identifier: Apache-2.0
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "roboaug/pipeline.hpp"

using roboaug::PipelineConfig;

namespace {

struct CommonOpts {
  std::string config_path;
  int ratio = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void add_common(CLI::App* sub, CommonOpts& opts) {
  sub->add_option("--config", opts.config_path, "pipeline config (JSON)")
      ->required();
  sub->add_option("--ratio", opts.ratio,
                  "override augmentation ratio from the config");
  sub->add_option("--seed", opts.seed, "override the root seed")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
}

PipelineConfig load_config(const CommonOpts& opts) {
  PipelineConfig cfg = PipelineConfig::from_file(opts.config_path);
  if (opts.ratio >= 0) cfg.augment_ratio = opts.ratio;
  if (opts.seed_set) cfg.seed = opts.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"roboaug: one-shot region extraction, semantic augmentation, "
               "and region-contrastive policy training"};
  app.require_subcommand(1);

  CommonOpts opts;
  struct SubDef {
    const char* name;
    const char* help;
    int (*fn)(const PipelineConfig&);
  };
  const SubDef subs[] = {
      {"synth", "generate the synthetic expert dataset", roboaug::cmd_synth},
      {"extract", "one-shot region extraction and mask propagation",
       roboaug::cmd_extract},
      {"augment", "mask-composited background augmentation", roboaug::cmd_augment},
      {"train", "behavior cloning with optional RCL", roboaug::cmd_train},
      {"eval", "closed-loop OOD evaluation of a trained policy", roboaug::cmd_eval},
      {"sweep", "augmentation-ratio sweep", roboaug::cmd_sweep},
      {"eval-detect", "detection mAP@0.5 evaluation", roboaug::cmd_eval_detect},
  };
  for (const auto& def : subs) add_common(app.add_subcommand(def.name, def.help), opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    // CLI11's own codes cover --help (0); everything else is a usage error.
    return rc == 0 ? roboaug::kExitOk : roboaug::kExitUsage;
  }

  try {
    PipelineConfig cfg = load_config(opts);
    for (const auto& def : subs)
      if (app.get_subcommand(def.name)->parsed()) return def.fn(cfg);
    return roboaug::kExitUsage;
  } catch (const roboaug::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == roboaug::ErrorCode::ConfigError ||
                   e.code() == roboaug::ErrorCode::MissingFile
               ? roboaug::kExitUsage
               : roboaug::kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return roboaug::kExitFailure;
  }
}
