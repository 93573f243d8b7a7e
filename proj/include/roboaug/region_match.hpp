// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "roboaug/dataset.hpp"

namespace roboaug {

// One-shot reference embeddings: category -> unit vector, all built from a
// single manually boxed frame.
struct ReferenceSet {
  struct Entry {
    std::string category;
    std::vector<double> embedding;  // unit norm
  };
  std::vector<Entry> entries;
  int dim = 0;
  std::string source_trajectory;
  int source_frame = 0;

  void validate() const;
};

struct Proposal {
  Box bbox;
  double score = 0.0;  // detector confidence
  std::optional<std::string> detector_label;
  std::vector<double> embedding;  // filled by the caller before matching
};

enum class MatchRoute { confidence_shortcut, similarity_argmax, rejected };

struct Assignment {
  Proposal proposal;
  std::string category;  // empty when rejected
  double similarity = 0.0;
  MatchRoute route = MatchRoute::rejected;
};

class EmbedderBackend {
 public:
  virtual ~EmbedderBackend() = default;
  virtual int dim() const = 0;
  virtual std::vector<double> embed(const Image& crop) = 0;
  virtual bool concurrent_safe() const { return true; }
};

class DetectorBackend {
 public:
  virtual ~DetectorBackend() = default;
  virtual std::vector<Proposal> detect(const Image& image,
                                       const std::vector<std::string>& prompts,
                                       double box_threshold,
                                       double text_threshold) = 0;
};

struct MatchThresholds {
  double box_threshold = 0.15;
  double text_threshold = 0.15;
  double delta_threshold = 0.7;   // confidence shortcut
  double similarity_floor = 0.3;  // reject below this
  int crop_size = 224;
};

// Crop bbox out of the image, pad to square with edge replication, and
// bilinearly resize to size x size.
Image crop_resize(const Image& image, const Box& bbox, int size);

double cosine_similarity(const std::vector<double>& a,
                         const std::vector<double>& b);

ReferenceSet build_reference_set(
    const Frame& frame,
    const std::vector<std::pair<std::string, Box>>& boxes,
    EmbedderBackend& embedder, int crop_size = 224);

std::vector<Assignment> match_candidates(const std::vector<Proposal>& proposals,
                                         const ReferenceSet& refs,
                                         double delta_threshold = 0.7,
                                         double similarity_floor = 0.3);

// Runs the detector on the trajectory's first frame, embeds each proposal
// crop, matches against the reference set, and keeps at most one winner per
// category. Masks are left empty for mask propagation to fill.
std::vector<RegionAnnotation> extract_anchor_annotations(
    const Trajectory& trajectory, const ReferenceSet& refs,
    DetectorBackend& detector, EmbedderBackend& embedder,
    const MatchThresholds& thresholds = {});

// ReferenceSet file format: text header "dim K\ncat_0..cat_{K-1}\n" followed
// by a row-major float32 embedding matrix.
void save_reference_set(const ReferenceSet& refs, const std::string& path);
ReferenceSet load_reference_set(const std::string& path);

// --- Synthetic backends -----------------------------------------------------

// Maps the crop's mean RGB onto the first three axes of an orthonormal basis
// and L2-normalizes. Analytically predictable: a pure red crop embeds to
// (1, 0, 0, ...).
class MeanColorEmbedder : public EmbedderBackend {
 public:
  explicit MeanColorEmbedder(int dim = 8);
  int dim() const override { return dim_; }
  std::vector<double> embed(const Image& crop) override;

 private:
  int dim_;
};

// Oracle detector: returns ground-truth boxes supplied at construction,
// with optional deterministic jitter. Keyed by an image content hash so one
// instance can serve a whole dataset.
class OracleDetector : public DetectorBackend {
 public:
  struct GtBox {
    std::string label;
    Box bbox;
    double score = 0.5;
  };

  OracleDetector() = default;
  void add(const Image& image, std::vector<GtBox> boxes);
  void add_by_key(std::uint64_t key, std::vector<GtBox> boxes);
  void set_jitter(double pixels, std::uint64_t seed);

  std::vector<Proposal> detect(const Image& image,
                               const std::vector<std::string>& prompts,
                               double box_threshold,
                               double text_threshold) override;

  static std::uint64_t image_key(const Image& image);

 private:
  std::map<std::uint64_t, std::vector<GtBox>> boxes_;
  double jitter_ = 0.0;
  std::uint64_t jitter_seed_ = 0;
};

std::unique_ptr<EmbedderBackend> make_embedder(const std::string& name);

}  // namespace roboaug
