// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "roboaug/dataset.hpp"
#include "roboaug/mask_prop.hpp"

namespace roboaug {

enum class MaterialCategory { wood, stone, composite };

const char* to_string(MaterialCategory c);
MaterialCategory material_from_string(const std::string& s);

struct PromptTemplate {
  std::string id;
  std::string text;
  MaterialCategory category = MaterialCategory::wood;
};

struct PromptLibrary {
  std::vector<PromptTemplate> templates;
  std::map<MaterialCategory, double> weights;

  void validate() const;
};

// 500 templates split wood 58% / stone 35% / composite 7%.
PromptLibrary default_prompt_library();

PromptLibrary load_prompt_library(const std::string& path);
void save_prompt_library(const PromptLibrary& lib, const std::string& path);

const PromptTemplate& sample_prompt(const PromptLibrary& library, Rng& rng);

class BackgroundProvider {
 public:
  virtual ~BackgroundProvider() = default;
  virtual Image generate(const std::string& prompt, int width, int height,
                         std::uint64_t seed) = 0;
  virtual int max_concurrency() const { return 0; }  // 0 = unbounded
};

// Seeded multi-octave value noise shaded with a material palette inferred
// from the prompt text. Deterministic in (prompt, seed).
class ProceduralBackgroundProvider : public BackgroundProvider {
 public:
  Image generate(const std::string& prompt, int width, int height,
                 std::uint64_t seed) override;
};

// Constant checkerboard, handy as an analytically known background.
class CheckerboardProvider : public BackgroundProvider {
 public:
  explicit CheckerboardProvider(int cell = 8) : cell_(cell) {}
  Image generate(const std::string& prompt, int width, int height,
                 std::uint64_t seed) override;

 private:
  int cell_;
};

std::unique_ptr<BackgroundProvider> make_provider(const std::string& name);

struct AugmentationPlan {
  int ratio = 5;  // augmented copies per expert trajectory
  std::uint64_t prompt_seed = 0;
  std::string provider = "procedural";
  bool per_frame_background = false;  // ablation flag; default one bg per copy
};

// Foreground/background blend: out = mask * image + (1 - mask) * background.
// Binary-mask overload is bit-exact pixel selection; the soft overload
// computes per channel in doubles and rounds half to even.
Image composite(const Image& image, const Mask& mask, const Image& background);
Image composite(const Image& image, const std::vector<double>& soft_mask,
                const Image& background);

std::vector<Trajectory> augment_trajectory(const Trajectory& traj,
                                           const PropagationResult& masks,
                                           const AugmentationPlan& plan,
                                           BackgroundProvider& provider,
                                           const PromptLibrary& library);

DatasetManifest build_final_dataset(const std::vector<Trajectory>& expert,
                                    const std::vector<Trajectory>& augmented,
                                    const std::vector<std::string>& categories);

}  // namespace roboaug
