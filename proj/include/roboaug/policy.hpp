// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "roboaug/augment.hpp"
#include "roboaug/dataset.hpp"
#include "roboaug/rcl.hpp"

namespace roboaug {

// --- Synthetic reach benchmark ----------------------------------------------
// A colored agent square moves toward a visible goal marker over a procedural
// texture. Actions are ground-truth normalized displacements; masks are the
// exact rendered silhouettes. Train and test texture ids are disjoint.

struct SyntheticSceneConfig {
  int height = 64;
  int width = 64;
  int episode_length = 20;
  std::uint64_t seed = 0;
  std::vector<int> train_textures = {0, 1};
  std::vector<int> test_textures = {100, 101, 102, 103};
  int agent_size = 8;
  int goal_size = 6;
  double step_pixels = 3.0;
  double goal_radius = 3.0;
  // Distractor overlays drawn only during evaluation episodes; training
  // scenes stay clean so they are a genuine out-of-distribution condition.
  int eval_distractors = 0;
  int distractor_size = 7;

  void validate() const;
};

struct SceneState {
  double agent_x = 0, agent_y = 0;
  double goal_x = 0, goal_y = 0;
  int texture_id = 0;
  std::vector<std::array<double, 2>> distractors;  // centers
  std::vector<int> distractor_colors;              // palette indices
};

Image render_scene(const SyntheticSceneConfig& cfg, const SceneState& state);
Mask render_agent_mask(const SyntheticSceneConfig& cfg, const SceneState& state);
Mask render_goal_mask(const SyntheticSceneConfig& cfg, const SceneState& state);
std::vector<double> expert_action(const SceneState& state);

std::vector<Trajectory> generate_reach_dataset(const SyntheticSceneConfig& cfg,
                                               int n_trajectories);

// --- Toy visuomotor policy --------------------------------------------------
// Three stride-2 3x3 convolutions (3 -> 16 -> 32 -> 32) emit the feature map
// consumed by the contrastive branch; a linear head maps pooled features plus
// proprioception to the action.

struct ConvLayer {
  int in_channels = 0, out_channels = 0;
  std::vector<double> weight;  // out x in x 3 x 3
  std::vector<double> bias;
};

struct ToyPolicy {
  ConvLayer conv1, conv2, conv3;
  std::vector<double> head_weight;  // action_dim x (feat + proprio)
  std::vector<double> head_bias;
  AttentionParams attention;
  int proprio_dim = 2;
  int action_dim = 2;

  static ToyPolicy init(int proprio_dim, int action_dim, Rng& rng);

  // Deterministic forward pass; also exposes the pre-pooling feature map for
  // the contrastive branch.
  std::vector<double> forward(const Image& image,
                              const std::vector<double>& proprio) const;
  FeatureMap encode(const Image& image) const;

  void save(const std::string& path) const;
  static ToyPolicy load(const std::string& path);
};

struct TrainConfig {
  int steps = 2000;
  int batch_size = 8;
  double learning_rate = 1e-4;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;
  RCLConfig rcl;
};

struct TrainLogEntry {
  int step = 0;
  double l2 = 0;
  double rcl = 0;
  double total = 0;
  int rcl_singletons = 0;
};

struct TrainResult {
  ToyPolicy policy;
  std::vector<TrainLogEntry> log;
};

// Behavior cloning with the combined L2 + RCL objective over in-memory
// trajectories. Single-threaded and bitwise deterministic per (seed, config).
TrainResult train_policy(const std::vector<Trajectory>& dataset,
                         const TrainConfig& cfg);

// Loads trajectory payloads from a manifest on disk, then trains.
TrainResult train_policy(const std::string& dataset_root,
                         const DatasetManifest& manifest,
                         const TrainConfig& cfg);

void write_train_log(const std::vector<TrainLogEntry>& log,
                     const std::string& path);

// --- Evaluation -------------------------------------------------------------

// Full episode state is visible to oracle policies; learned policies must
// only read (image, proprio).
using PolicyFn = std::function<std::vector<double>(
    const Image& image, const std::vector<double>& proprio,
    const SceneState& state)>;

struct EvalMetrics {
  double action_mse = 0;
  double success_rate = 0;
  int episodes = 0;
};

EvalMetrics evaluate_ood(const PolicyFn& policy, const SyntheticSceneConfig& cfg,
                         int n_episodes, std::uint64_t eval_seed = 1);

PolicyFn as_policy_fn(const ToyPolicy& policy);
PolicyFn scripted_expert_policy();
PolicyFn zero_action_policy();

// --- Augmentation-ratio sweep -----------------------------------------------

struct SweepCell {
  int ratio = 0;
  std::uint64_t seed = 0;
  double ood_mse = 0;
  double ood_success = 0;
  double id_mse = 0;
  double wallclock_s = 0;
  bool failed = false;
  std::string error;
};

struct SweepConfig {
  SyntheticSceneConfig scene;
  TrainConfig train;
  int n_expert = 4;
  int eval_episodes = 40;
  std::string provider = "procedural";
};

struct SweepResult {
  std::vector<SweepCell> cells;
};

SweepResult ratio_sweep(const std::vector<int>& ratios,
                        const std::vector<std::uint64_t>& seeds,
                        const SweepConfig& cfg);

void write_sweep_csv(const SweepResult& result, const std::string& path);
void write_sweep_plot(const SweepResult& result, const std::string& path);

// Builds the in-memory augmented dataset for one ratio: analytic masks feed
// the compositing stage directly.
std::vector<Trajectory> augment_reach_dataset(
    const std::vector<Trajectory>& expert, int ratio, std::uint64_t seed,
    const std::string& provider_name);

}  // namespace roboaug
