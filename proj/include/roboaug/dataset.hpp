// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "roboaug/image.hpp"

namespace roboaug {

// Per-frame, per-category annotation. The mask carries the task-relevant
// region for one category; the bbox is tight around the mask whenever a
// mask is present.
struct RegionAnnotation {
  std::string category;
  Box bbox;
  Mask mask;  // may be empty (width==0) before propagation fills it
  double confidence = 1.0;

  bool has_mask() const { return mask.width > 0; }
};

struct Frame {
  int index = 0;
  Image image;
  std::vector<double> proprio;
  std::vector<double> action;
  std::vector<RegionAnnotation> annotations;
};

enum class TrajectorySource { expert, augmented };

struct Trajectory {
  std::string id;
  std::string instruction;
  std::vector<Frame> frames;
  TrajectorySource source = TrajectorySource::expert;
  std::optional<std::string> parent_id;

  void validate() const;
};

struct TrajectoryEntry {
  std::string id;
  std::string path;  // relative to dataset root
  TrajectorySource source = TrajectorySource::expert;
  std::optional<std::string> parent_id;
  int frame_count = 0;
  std::string instruction;
};

struct TaskDescriptor {
  std::string name;
  std::string instruction;
};

struct DatasetManifest {
  std::string version = "1";
  std::vector<TaskDescriptor> tasks;
  std::vector<TrajectoryEntry> trajectories;
  std::vector<std::string> category_registry;

  const TrajectoryEntry* find(const std::string& id) const;
  std::size_t count(TrajectorySource source) const;
  void validate() const;
};

const char* to_string(TrajectorySource s);
TrajectorySource source_from_string(const std::string& s);

// Manifest IO. Serialization is canonical: sorted keys, stable number
// formatting, so load -> save -> load is a fixed point and save output is
// byte-stable across runs.
DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& m, const std::string& path);
std::string manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const std::string& text);

// Trajectory payload IO against the directory layout:
//   <root>/<entry.path>/frames/%06d.ppm
//   <root>/<entry.path>/masks/<category>/%06d.pgm
//   <root>/<entry.path>/states.csv
Trajectory load_trajectory(const std::string& dataset_root,
                           const TrajectoryEntry& entry);
void save_trajectory(const std::string& dataset_root, const Trajectory& traj,
                     const std::string& rel_path);

// Checks that an augmented trajectory is pixel-only relative to its parent:
// same frame count, identical proprio and action sequences.
void check_augmentation_invariants(const Trajectory& augmented,
                                   const Trajectory& parent);

std::string frame_filename(int index);  // "000000.ppm"
std::string mask_filename(int index);   // "000000.pgm"

}  // namespace roboaug
