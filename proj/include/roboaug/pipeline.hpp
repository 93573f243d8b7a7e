// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "roboaug/policy.hpp"
#include "roboaug/region_match.hpp"

namespace roboaug {

// Exit code convention shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitPartial = 3;

struct PipelineConfig {
  std::string dataset_root = "data";
  std::string output_root = "out";
  std::uint64_t seed = 0;

  // Backends.
  std::string detector = "oracle";
  std::string embedder = "synthetic-meancolor";
  std::string tracker = "translation-oracle";
  std::string provider = "procedural";

  MatchThresholds thresholds;

  int augment_ratio = 5;
  RCLConfig rcl;
  TrainConfig train;
  SyntheticSceneConfig scene;
  int n_expert = 2;
  int eval_episodes = 40;

  std::vector<int> sweep_ratios = {0, 1, 3, 5, 8, 15, 20};
  std::vector<std::uint64_t> sweep_seeds = {1, 2, 3};

  // detect-eval file mode; when empty, the synthetic fixture mode runs.
  std::string gt_file;
  std::string det_file;

  static PipelineConfig from_file(const std::string& path);
  std::string to_json() const;
  std::uint64_t content_hash() const;
};

// Subcommands. Each writes a reproducibility record (config snapshot, seeds)
// into output_root and is a no-op when its outputs already match.
int cmd_synth(const PipelineConfig& cfg);
int cmd_extract(const PipelineConfig& cfg);
int cmd_augment(const PipelineConfig& cfg);
int cmd_train(const PipelineConfig& cfg);
int cmd_eval(const PipelineConfig& cfg);
int cmd_sweep(const PipelineConfig& cfg);
int cmd_eval_detect(const PipelineConfig& cfg);

// FNV-1a over the sorted relative paths and contents of a directory tree.
std::uint64_t tree_hash(const std::string& root);

}  // namespace roboaug
