// SPDX-License-Identifier: Apache-2.0
#include "roboaug/augment.hpp"

#include "roboaug/noise.hpp"

#include <algorithm>
#include <cctype>
#include <cfenv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace roboaug {

const char* to_string(MaterialCategory c) {
  switch (c) {
    case MaterialCategory::wood: return "wood";
    case MaterialCategory::stone: return "stone";
    case MaterialCategory::composite: return "composite";
  }
  return "wood";
}

MaterialCategory material_from_string(const std::string& s) {
  if (s == "wood") return MaterialCategory::wood;
  if (s == "stone") return MaterialCategory::stone;
  if (s == "composite") return MaterialCategory::composite;
  fail(ErrorCode::SchemaViolation, "unknown material category: " + s);
}

void PromptLibrary::validate() const {
  if (templates.empty()) fail(ErrorCode::EmptyLibrary, "prompt library is empty");
  double total = 0;
  for (const auto& [cat, w] : weights) {
    if (w < 0) fail(ErrorCode::ConfigError, "negative prompt weight");
    total += w;
    if (w > 0) {
      bool any = false;
      for (const auto& t : templates) any |= t.category == cat;
      if (!any)
        fail(ErrorCode::ConfigError,
             std::string("weighted category \"") + to_string(cat) + "\" has no templates");
    }
  }
  if (std::abs(total - 1.0) > 1e-9)
    fail(ErrorCode::ConfigError, "prompt weights must sum to 1");
  for (const auto& t : templates)
    if (t.text.empty()) fail(ErrorCode::ConfigError, "empty prompt text: " + t.id);
}

PromptLibrary default_prompt_library() {
  static const char* kWoodSpecies[] = {
      "light oak",     "dark walnut", "weathered pine", "polished maple",
      "rustic birch",  "bamboo",      "cherry wood",    "mahogany",
      "reclaimed barn wood", "ash wood"};
  static const char* kWoodFinish[] = {
      "with visible grain",    "with a matte finish", "with a glossy varnish",
      "with fine scratches",   "with knots and streaks"};
  static const char* kWoodSetting[] = {
      "tabletop", "workbench surface", "kitchen counter",
      "plank table", "desk surface", "dining table"};
  static const char* kStoneTypes[] = {
      "gray granite", "white marble", "dark slate", "beige limestone",
      "polished concrete", "rough sandstone", "terrazzo"};
  static const char* kStoneFinish[] = {
      "with subtle veining", "with a honed finish", "with speckled texture",
      "with a polished sheen", "with natural pitting"};
  static const char* kStoneSetting[] = {
      "countertop", "tabletop", "workbench slab", "kitchen island surface",
      "lab bench"};
  static const char* kCompositeTypes[] = {
      "laminate", "epoxy resin", "brushed metal composite",
      "carbon fiber panel", "acrylic sheet", "linoleum", "cork board"};
  static const char* kCompositeFinish[] = {
      "in a neutral tone", "with a woven pattern", "with a speckled finish",
      "with a satin surface", "with a subtle grid texture"};

  PromptLibrary lib;
  lib.weights = {{MaterialCategory::wood, 0.58},
                 {MaterialCategory::stone, 0.35},
                 {MaterialCategory::composite, 0.07}};
  auto add = [&lib](MaterialCategory cat, int n, const std::string& text) {
    char id[32];
    std::snprintf(id, sizeof(id), "%s-%03d", to_string(cat), n);
    lib.templates.push_back({id, text, cat});
  };
  // 290 / 175 / 35 of 500, matching the 58/35/7 weight split.
  for (int i = 0; i < 290; ++i) {
    std::string text = std::string("a ") + kWoodSetting[i / 50] + " of " +
                       kWoodSpecies[i % 10] + " " + kWoodFinish[(i / 10) % 5] +
                       ", top-down view, evenly lit";
    add(MaterialCategory::wood, i, text);
  }
  for (int i = 0; i < 175; ++i) {
    std::string text = std::string("a ") + kStoneSetting[i / 35] + " of " +
                       kStoneTypes[i % 7] + " " + kStoneFinish[(i / 7) % 5] +
                       ", top-down view, evenly lit";
    add(MaterialCategory::stone, i, text);
  }
  for (int i = 0; i < 35; ++i) {
    std::string text = std::string("a tabletop of ") + kCompositeTypes[i % 7] +
                       " " + kCompositeFinish[i / 7] +
                       ", top-down view, evenly lit";
    add(MaterialCategory::composite, i, text);
  }
  lib.validate();
  return lib;
}

PromptLibrary load_prompt_library(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::MissingFile, "cannot read prompt library: " + path);
  PromptLibrary lib;
  lib.weights = {{MaterialCategory::wood, 0.58},
                 {MaterialCategory::stone, 0.35},
                 {MaterialCategory::composite, 0.07}};
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    // id <TAB> category <TAB> text
    std::stringstream ls(line);
    PromptTemplate t;
    std::string cat;
    if (!std::getline(ls, t.id, '\t') || !std::getline(ls, cat, '\t') ||
        !std::getline(ls, t.text))
      fail(ErrorCode::SchemaViolation, "bad prompt record: " + line);
    t.category = material_from_string(cat);
    lib.templates.push_back(std::move(t));
  }
  lib.validate();
  return lib;
}

void save_prompt_library(const PromptLibrary& lib, const std::string& path) {
  lib.validate();
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::MissingFile, "cannot write prompt library: " + path);
  f << "# id\tcategory\ttext\n";
  for (const auto& t : lib.templates)
    f << t.id << "\t" << to_string(t.category) << "\t" << t.text << "\n";
}

const PromptTemplate& sample_prompt(const PromptLibrary& library, Rng& rng) {
  library.validate();
  // Category by weight, then uniform within category.
  double u = rng.uniform();
  MaterialCategory chosen = MaterialCategory::wood;
  double acc = 0;
  for (const auto& [cat, w] : library.weights) {
    acc += w;
    chosen = cat;
    if (u < acc) break;
  }
  std::vector<const PromptTemplate*> pool;
  for (const auto& t : library.templates)
    if (t.category == chosen) pool.push_back(&t);
  return *pool[rng.uniform_int(pool.size())];
}

// --- Procedural backgrounds -------------------------------------------------

namespace {

struct Palette {
  double base[3];
  double accent[3];
};

Palette palette_for(const std::string& prompt) {
  std::string p = prompt;
  for (char& c : p) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (p.find("marble") != std::string::npos || p.find("stone") != std::string::npos ||
      p.find("granite") != std::string::npos || p.find("slate") != std::string::npos ||
      p.find("concrete") != std::string::npos || p.find("limestone") != std::string::npos ||
      p.find("sandstone") != std::string::npos || p.find("terrazzo") != std::string::npos)
    return {{150, 150, 155}, {90, 90, 100}};
  if (p.find("laminate") != std::string::npos || p.find("resin") != std::string::npos ||
      p.find("metal") != std::string::npos || p.find("carbon") != std::string::npos ||
      p.find("acrylic") != std::string::npos || p.find("linoleum") != std::string::npos ||
      p.find("cork") != std::string::npos)
    return {{120, 130, 125}, {180, 170, 140}};
  return {{140, 100, 60}, {90, 60, 30}};  // wood
}

}  // namespace

Image ProceduralBackgroundProvider::generate(const std::string& prompt,
                                             int width, int height,
                                             std::uint64_t seed) {
  if (width <= 0 || height <= 0)
    fail(ErrorCode::ProviderFailure, "bad background dimensions");
  std::uint64_t s = fnv1a(prompt) ^ seed;
  Palette pal = palette_for(prompt);
  bool streaks = prompt.find("wood") != std::string::npos ||
                 prompt.find("oak") != std::string::npos ||
                 prompt.find("walnut") != std::string::npos ||
                 prompt.find("pine") != std::string::npos;
  Image img(height, width);
  double inv = 8.0 / std::max(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double n = fbm_noise(s, x * inv, y * inv, 4);
      if (streaks) {
        // Grain: warp a horizontal band pattern with low-frequency noise.
        double warp = fbm_noise(s + 7, x * inv * 0.5, y * inv * 0.5, 2);
        n = 0.5 * n + 0.5 * (0.5 + 0.5 * std::sin((y * inv + 3.0 * warp) * 7.0));
      }
      for (int c = 0; c < 3; ++c) {
        double v = pal.base[c] + (pal.accent[c] - pal.base[c]) * n;
        img.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
      }
    }
  }
  return img;
}

Image CheckerboardProvider::generate(const std::string&, int width, int height,
                                     std::uint64_t) {
  Image img(height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      std::uint8_t v = ((x / cell_ + y / cell_) % 2) ? 200 : 55;
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = v;
    }
  return img;
}

std::unique_ptr<BackgroundProvider> make_provider(const std::string& name) {
  if (name == "procedural") return std::make_unique<ProceduralBackgroundProvider>();
  if (name == "checkerboard") return std::make_unique<CheckerboardProvider>();
  fail(ErrorCode::ConfigError, "unknown background provider: " + name);
}

// --- Compositing ------------------------------------------------------------

Image composite(const Image& image, const Mask& mask, const Image& background) {
  if (!image.same_shape(background) || mask.height != image.height ||
      mask.width != image.width)
    fail(ErrorCode::DimMismatch, "composite: dimension mismatch");
  for (auto v : mask.data)
    if (v > 1) fail(ErrorCode::MaskRangeError, "composite: mask value outside {0,1}");
  Image out(image.height, image.width);
  for (std::size_t i = 0; i < mask.data.size(); ++i) {
    const Image& src = mask.data[i] ? image : background;
    out.data[i * 3] = src.data[i * 3];
    out.data[i * 3 + 1] = src.data[i * 3 + 1];
    out.data[i * 3 + 2] = src.data[i * 3 + 2];
  }
  return out;
}

Image composite(const Image& image, const std::vector<double>& soft_mask,
                const Image& background) {
  if (!image.same_shape(background))
    fail(ErrorCode::DimMismatch, "composite: image/background mismatch");
  if (soft_mask.size() != static_cast<std::size_t>(image.height) * image.width)
    fail(ErrorCode::DimMismatch, "composite: mask size mismatch");
  for (double m : soft_mask)
    if (!(m >= 0.0 && m <= 1.0))
      fail(ErrorCode::MaskRangeError, "composite: mask value outside [0,1]");
  Image out(image.height, image.width);
  // nearbyint under the default FE_TONEAREST mode rounds half to even.
  for (std::size_t i = 0; i < soft_mask.size(); ++i) {
    double m = soft_mask[i];
    for (int c = 0; c < 3; ++c) {
      double v = m * image.data[i * 3 + c] + (1.0 - m) * background.data[i * 3 + c];
      out.data[i * 3 + c] =
          static_cast<std::uint8_t>(std::nearbyint(std::clamp(v, 0.0, 255.0)));
    }
  }
  return out;
}

std::vector<Trajectory> augment_trajectory(const Trajectory& traj,
                                           const PropagationResult& masks,
                                           const AugmentationPlan& plan,
                                           BackgroundProvider& provider,
                                           const PromptLibrary& library) {
  if (traj.source != TrajectorySource::expert)
    fail(ErrorCode::SchemaViolation,
         "augment_trajectory: " + traj.id + " is not an expert trajectory");
  if (masks.frames.size() != traj.frames.size())
    fail(ErrorCode::MissingMasks,
         "augment_trajectory: masks cover " + std::to_string(masks.frames.size()) +
             " of " + std::to_string(traj.frames.size()) + " frames");
  if (plan.ratio < 1)
    fail(ErrorCode::ConfigError, "augmentation ratio must be >= 1");

  const Image& first = traj.frames.front().image;
  std::vector<Trajectory> out;
  for (int copy = 0; copy < plan.ratio; ++copy) {
    char suffix[32];
    std::snprintf(suffix, sizeof(suffix), "-aug%03d", copy);
    Rng rng = Rng::derived(plan.prompt_seed, traj.id + suffix);
    try {
      const PromptTemplate& prompt = sample_prompt(library, rng);
      std::uint64_t bg_seed = rng.next_u64();
      Image background =
          provider.generate(prompt.text, first.width, first.height, bg_seed);

      Trajectory aug;
      aug.id = traj.id + suffix;
      aug.instruction = traj.instruction;
      aug.source = TrajectorySource::augmented;
      aug.parent_id = traj.id;
      for (std::size_t t = 0; t < traj.frames.size(); ++t) {
        const Frame& src = traj.frames[t];
        if (plan.per_frame_background)
          background = provider.generate(prompt.text, first.width, first.height,
                                         bg_seed + t + 1);
        Frame f;
        f.index = src.index;
        f.proprio = src.proprio;
        f.action = src.action;
        Mask u;
        std::vector<RegionAnnotation> frame_anns;
        for (const auto& [cat, m] : masks.frames[t]) {
          if (m.empty_mask()) continue;
          RegionAnnotation ann;
          ann.category = cat;
          ann.mask = m;
          ann.bbox = tight_bbox(m);
          frame_anns.push_back(std::move(ann));
        }
        u = union_mask(frame_anns);
        if (u.width == 0) u = Mask(src.image.height, src.image.width);
        f.image = composite(src.image, u, background);
        f.annotations = std::move(frame_anns);
        aug.frames.push_back(std::move(f));
      }
      check_augmentation_invariants(aug, traj);
      out.push_back(std::move(aug));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ProviderFailure) {
        std::cerr << "augment: provider failed for " << traj.id << suffix << ": "
                  << e.what() << "\n";
        continue;  // abort this copy only
      }
      throw;
    }
  }
  return out;
}

DatasetManifest build_final_dataset(const std::vector<Trajectory>& expert,
                                    const std::vector<Trajectory>& augmented,
                                    const std::vector<std::string>& categories) {
  DatasetManifest m;
  m.category_registry = categories;
  auto add = [&m](const Trajectory& t) {
    TrajectoryEntry e;
    e.id = t.id;
    e.path = "trajectories/" + t.id;
    e.source = t.source;
    e.parent_id = t.parent_id;
    e.frame_count = static_cast<int>(t.frames.size());
    e.instruction = t.instruction;
    m.trajectories.push_back(std::move(e));
  };
  for (const auto& t : expert) add(t);
  for (const auto& t : augmented) add(t);
  m.validate();
  return m;
}

}  // namespace roboaug
