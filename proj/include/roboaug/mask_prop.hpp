// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "roboaug/dataset.hpp"

namespace roboaug {

// Stateful per-trajectory tracking session. init() seeds on the first frame
// and yields the frame-0 masks; step() advances one frame at a time.
class TrackerSession {
 public:
  virtual ~TrackerSession() = default;
  virtual std::map<std::string, Mask> step(const Image& next_frame) = 0;
};

class TrackerBackend {
 public:
  virtual ~TrackerBackend() = default;
  virtual std::unique_ptr<TrackerSession> init(
      const Image& first_frame, const std::vector<RegionAnnotation>& seeds,
      std::map<std::string, Mask>& first_masks) = 0;
};

struct PropagationResult {
  std::string trajectory_id;
  // frames[t][category] = mask (possibly empty when the object left view)
  std::vector<std::map<std::string, Mask>> frames;
  std::map<std::string, double> coverage;  // fraction of frames with non-empty mask
  std::vector<std::string> warnings;

  // Per-frame annotations with tight bboxes; empty masks are dropped.
  std::vector<std::vector<RegionAnnotation>> to_annotations() const;
};

PropagationResult propagate(const Trajectory& trajectory,
                            const std::vector<RegionAnnotation>& seeds,
                            TrackerBackend& backend,
                            double coverage_warn_threshold = 0.7);

double mask_iou(const Mask& a, const Mask& b);
Mask union_mask(const std::vector<RegionAnnotation>& annotations);

// Copies the frame-0 mask to every frame. Baseline for static scenes.
class StaticTracker : public TrackerBackend {
 public:
  std::unique_ptr<TrackerSession> init(
      const Image& first_frame, const std::vector<RegionAnnotation>& seeds,
      std::map<std::string, Mask>& first_masks) override;
};

// Tracks each seeded region by exhaustive integer-shift search: per frame it
// finds the translation of the template (frame-0 pixels under the seed mask)
// that minimizes color distance. Exact on rigidly translating scenes.
class TranslationTracker : public TrackerBackend {
 public:
  explicit TranslationTracker(int search_radius = 6)
      : search_radius_(search_radius) {}
  std::unique_ptr<TrackerSession> init(
      const Image& first_frame, const std::vector<RegionAnnotation>& seeds,
      std::map<std::string, Mask>& first_masks) override;

 private:
  int search_radius_;
};

std::unique_ptr<TrackerBackend> make_tracker(const std::string& name);

}  // namespace roboaug
