// SPDX-License-Identifier: Apache-2.0
#include "roboaug/mask_prop.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace roboaug {
namespace {

// Seed mask: the provided mask when present, otherwise the filled seed bbox.
Mask seed_mask(const RegionAnnotation& seed, int height, int width) {
  if (seed.has_mask()) return seed.mask;
  Mask m(height, width);
  int x0 = std::max(0, static_cast<int>(std::floor(seed.bbox.x_min)));
  int y0 = std::max(0, static_cast<int>(std::floor(seed.bbox.y_min)));
  int x1 = std::min(width, static_cast<int>(std::ceil(seed.bbox.x_max)));
  int y1 = std::min(height, static_cast<int>(std::ceil(seed.bbox.y_max)));
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) m.at(y, x) = 1;
  return m;
}

void check_seed(const RegionAnnotation& seed, int height, int width) {
  const Box& b = seed.bbox;
  if (!b.valid() || b.x_max <= 0 || b.y_max <= 0 || b.x_min >= width ||
      b.y_min >= height)
    fail(ErrorCode::SeedOutOfBounds,
         "seed for " + seed.category + " outside image bounds");
}

class StaticSession : public TrackerSession {
 public:
  explicit StaticSession(std::map<std::string, Mask> masks)
      : masks_(std::move(masks)) {}
  std::map<std::string, Mask> step(const Image&) override { return masks_; }

 private:
  std::map<std::string, Mask> masks_;
};

struct Template {
  Mask mask;                 // frame-0 silhouette
  Image reference;           // frame-0 image
  int last_dx = 0, last_dy = 0;
};

class TranslationSession : public TrackerSession {
 public:
  TranslationSession(const Image& first, std::map<std::string, Mask> masks,
                     int radius)
      : radius_(radius) {
    for (auto& [cat, m] : masks) templates_[cat] = Template{std::move(m), first};
  }

  std::map<std::string, Mask> step(const Image& frame) override {
    std::map<std::string, Mask> out;
    for (auto& [cat, tpl] : templates_) out[cat] = track_one(tpl, frame);
    return out;
  }

 private:
  Mask track_one(Template& tpl, const Image& frame) {
    if (tpl.mask.empty_mask()) return Mask(frame.height, frame.width);
    // Search integer shifts around the last known offset; cost is the sum of
    // absolute color differences over the template's foreground pixels.
    long best_cost = -1;
    int best_dx = tpl.last_dx, best_dy = tpl.last_dy;
    for (int dy = tpl.last_dy - radius_; dy <= tpl.last_dy + radius_; ++dy) {
      for (int dx = tpl.last_dx - radius_; dx <= tpl.last_dx + radius_; ++dx) {
        long cost = 0;
        long count = 0;
        for (int y = 0; y < tpl.mask.height; ++y) {
          for (int x = 0; x < tpl.mask.width; ++x) {
            if (!tpl.mask.at(y, x)) continue;
            int ty = y + dy, tx = x + dx;
            if (ty < 0 || tx < 0 || ty >= frame.height || tx >= frame.width) {
              cost += 3 * 255;  // off-image pixels are maximally wrong
              continue;
            }
            ++count;
            for (int c = 0; c < 3; ++c)
              cost += std::abs(static_cast<int>(frame.at(ty, tx, c)) -
                               static_cast<int>(tpl.reference.at(y, x, c)));
          }
        }
        if (count == 0) cost = -1;  // fully off-image shift is not a candidate
        if (cost >= 0 && (best_cost < 0 || cost < best_cost)) {
          best_cost = cost;
          best_dx = dx;
          best_dy = dy;
        }
      }
    }
    tpl.last_dx = best_dx;
    tpl.last_dy = best_dy;
    Mask out(frame.height, frame.width);
    for (int y = 0; y < tpl.mask.height; ++y)
      for (int x = 0; x < tpl.mask.width; ++x)
        if (tpl.mask.at(y, x)) {
          int ty = y + best_dy, tx = x + best_dx;
          if (ty >= 0 && tx >= 0 && ty < frame.height && tx < frame.width)
            out.at(ty, tx) = 1;
        }
    return out;
  }

  std::map<std::string, Template> templates_;
  int radius_;
};

}  // namespace

std::unique_ptr<TrackerSession> StaticTracker::init(
    const Image& first_frame, const std::vector<RegionAnnotation>& seeds,
    std::map<std::string, Mask>& first_masks) {
  first_masks.clear();
  for (const auto& s : seeds)
    first_masks[s.category] = seed_mask(s, first_frame.height, first_frame.width);
  return std::make_unique<StaticSession>(first_masks);
}

std::unique_ptr<TrackerSession> TranslationTracker::init(
    const Image& first_frame, const std::vector<RegionAnnotation>& seeds,
    std::map<std::string, Mask>& first_masks) {
  first_masks.clear();
  for (const auto& s : seeds)
    first_masks[s.category] = seed_mask(s, first_frame.height, first_frame.width);
  return std::make_unique<TranslationSession>(first_frame, first_masks,
                                              search_radius_);
}

PropagationResult propagate(const Trajectory& trajectory,
                            const std::vector<RegionAnnotation>& seeds,
                            TrackerBackend& backend,
                            double coverage_warn_threshold) {
  if (trajectory.frames.empty())
    fail(ErrorCode::SchemaViolation, "propagate: empty trajectory");
  if (seeds.empty()) fail(ErrorCode::SchemaViolation, "propagate: no seeds");
  const Image& first = trajectory.frames.front().image;
  std::set<std::string> cats;
  for (const auto& s : seeds) {
    check_seed(s, first.height, first.width);
    if (!cats.insert(s.category).second)
      fail(ErrorCode::SchemaViolation, "propagate: duplicate seed category " + s.category);
  }

  PropagationResult result;
  result.trajectory_id = trajectory.id;
  std::map<std::string, Mask> first_masks;
  std::unique_ptr<TrackerSession> session =
      backend.init(first, seeds, first_masks);
  if (!session) fail(ErrorCode::BackendFailure, "tracker init failed");

  // Sanity link between the seed box and the produced frame-0 mask.
  for (const auto& s : seeds) {
    const Mask& m = first_masks.at(s.category);
    Mask box_fill = seed_mask(RegionAnnotation{s.category, s.bbox, {}, 1.0},
                              first.height, first.width);
    std::size_t inside = 0;
    for (std::size_t i = 0; i < m.data.size(); ++i)
      inside += m.data[i] & box_fill.data[i];
    if (inside * 2 < box_fill.area())
      fail(ErrorCode::BackendFailure,
           "frame-0 mask for " + s.category + " covers <50% of its seed box");
  }

  result.frames.push_back(first_masks);
  for (std::size_t t = 1; t < trajectory.frames.size(); ++t) {
    std::map<std::string, Mask> masks = session->step(trajectory.frames[t].image);
    for (const auto& c : cats) {
      auto it = masks.find(c);
      if (it == masks.end())
        fail(ErrorCode::BackendFailure, "tracker dropped category " + c);
      if (it->second.height != first.height || it->second.width != first.width)
        fail(ErrorCode::BackendFailure, "tracker mask dimension mismatch");
    }
    result.frames.push_back(std::move(masks));
  }

  std::size_t n_frames = result.frames.size();
  for (const auto& c : cats) {
    std::size_t nonempty = 0;
    for (const auto& fm : result.frames) nonempty += !fm.at(c).empty_mask();
    double cov = static_cast<double>(nonempty) / static_cast<double>(n_frames);
    result.coverage[c] = cov;
    if (cov < coverage_warn_threshold)
      result.warnings.push_back("category " + c + " empty in " +
                                std::to_string(n_frames - nonempty) + "/" +
                                std::to_string(n_frames) + " frames");
  }
  return result;
}

std::vector<std::vector<RegionAnnotation>> PropagationResult::to_annotations()
    const {
  std::vector<std::vector<RegionAnnotation>> out;
  out.reserve(frames.size());
  for (const auto& fm : frames) {
    std::vector<RegionAnnotation> anns;
    for (const auto& [cat, mask] : fm) {
      if (mask.empty_mask()) continue;
      RegionAnnotation ann;
      ann.category = cat;
      ann.mask = mask;
      ann.bbox = tight_bbox(mask);
      anns.push_back(std::move(ann));
    }
    out.push_back(std::move(anns));
  }
  return out;
}

double mask_iou(const Mask& a, const Mask& b) {
  if (!a.same_shape(b)) fail(ErrorCode::DimMismatch, "mask_iou: shape mismatch");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    inter += a.data[i] & b.data[i];
    uni += a.data[i] | b.data[i];
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

Mask union_mask(const std::vector<RegionAnnotation>& annotations) {
  Mask out;
  for (const auto& ann : annotations) {
    if (!ann.has_mask()) continue;
    if (out.width == 0) {
      out = ann.mask;
      continue;
    }
    if (!out.same_shape(ann.mask))
      fail(ErrorCode::DimMismatch, "union_mask: shape mismatch");
    for (std::size_t i = 0; i < out.data.size(); ++i)
      out.data[i] |= ann.mask.data[i];
  }
  return out;
}

std::unique_ptr<TrackerBackend> make_tracker(const std::string& name) {
  if (name == "static") return std::make_unique<StaticTracker>();
  if (name == "translation-oracle") return std::make_unique<TranslationTracker>();
  fail(ErrorCode::ConfigError, "unknown tracker backend: " + name);
}

}  // namespace roboaug
