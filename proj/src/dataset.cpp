// SPDX-License-Identifier: Apache-2.0
#include "roboaug/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;  // std::map-backed: object keys serialize sorted

namespace roboaug {

const char* to_string(TrajectorySource s) {
  return s == TrajectorySource::expert ? "expert" : "augmented";
}

TrajectorySource source_from_string(const std::string& s) {
  if (s == "expert") return TrajectorySource::expert;
  if (s == "augmented") return TrajectorySource::augmented;
  fail(ErrorCode::SchemaViolation, "unknown trajectory source: " + s);
}

void Trajectory::validate() const {
  if (frames.empty())
    fail(ErrorCode::SchemaViolation, "trajectory " + id + ": no frames");
  const Image& first = frames.front().image;
  std::size_t pdim = frames.front().proprio.size();
  std::size_t adim = frames.front().action.size();
  int prev = -1;
  for (const Frame& f : frames) {
    if (f.index <= prev)
      fail(ErrorCode::SchemaViolation,
           "trajectory " + id + ": frame indices not strictly increasing");
    prev = f.index;
    if (!f.image.same_shape(first))
      fail(ErrorCode::SchemaViolation,
           "trajectory " + id + ": inconsistent image dimensions");
    if (f.proprio.size() != pdim || f.action.size() != adim)
      fail(ErrorCode::SchemaViolation,
           "trajectory " + id + ": inconsistent proprio/action dims");
  }
  if (source == TrajectorySource::augmented && !parent_id)
    fail(ErrorCode::SchemaViolation,
         "trajectory " + id + ": augmented without parent_id");
}

const TrajectoryEntry* DatasetManifest::find(const std::string& tid) const {
  for (const auto& t : trajectories)
    if (t.id == tid) return &t;
  return nullptr;
}

std::size_t DatasetManifest::count(TrajectorySource source) const {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.source == source;
  return n;
}

void DatasetManifest::validate() const {
  std::set<std::string> ids;
  for (const auto& t : trajectories) {
    if (!ids.insert(t.id).second)
      fail(ErrorCode::SchemaViolation, "duplicate trajectory id: " + t.id);
    if (t.frame_count <= 0)
      fail(ErrorCode::SchemaViolation,
           "trajectory " + t.id + ": frame_count must be positive");
    if (t.source == TrajectorySource::augmented && !t.parent_id)
      fail(ErrorCode::SchemaViolation,
           "trajectory " + t.id + ": augmented entry missing parent_id");
  }
  for (const auto& t : trajectories) {
    if (!t.parent_id) continue;
    const TrajectoryEntry* parent = find(*t.parent_id);
    if (!parent)
      fail(ErrorCode::DanglingParent,
           "trajectory " + t.id + ": parent \"" + *t.parent_id + "\" not in manifest");
    if (parent->source != TrajectorySource::expert)
      fail(ErrorCode::SchemaViolation,
           "trajectory " + t.id + ": parent is not an expert trajectory");
  }
}

std::string manifest_to_json(const DatasetManifest& m) {
  json j;
  j["version"] = m.version;
  j["tasks"] = json::array();
  for (const auto& t : m.tasks)
    j["tasks"].push_back({{"instruction", t.instruction}, {"name", t.name}});
  j["trajectories"] = json::array();
  for (const auto& t : m.trajectories) {
    json e = {{"frame_count", t.frame_count},
              {"id", t.id},
              {"instruction", t.instruction},
              {"path", t.path},
              {"source", to_string(t.source)}};
    if (t.parent_id) e["parent_id"] = *t.parent_id;
    j["trajectories"].push_back(e);
  }
  j["category_registry"] = m.category_registry;
  return j.dump(2) + "\n";
}

namespace {

std::string require_string(const json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_string())
    fail(ErrorCode::SchemaViolation,
         std::string("manifest: missing or non-string field \"") + field + "\"");
  return j[field].get<std::string>();
}

}  // namespace

DatasetManifest manifest_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded())
    fail(ErrorCode::SchemaViolation, "manifest: not valid JSON");
  DatasetManifest m;
  m.version = require_string(j, "version");
  if (j.contains("tasks")) {
    for (const auto& t : j["tasks"])
      m.tasks.push_back({require_string(t, "name"), require_string(t, "instruction")});
  }
  if (!j.contains("trajectories") || !j["trajectories"].is_array())
    fail(ErrorCode::SchemaViolation, "manifest: missing field \"trajectories\"");
  for (const auto& t : j["trajectories"]) {
    TrajectoryEntry e;
    e.id = require_string(t, "id");
    e.path = require_string(t, "path");
    e.source = source_from_string(require_string(t, "source"));
    e.instruction = require_string(t, "instruction");
    if (!t.contains("frame_count") || !t["frame_count"].is_number_integer())
      fail(ErrorCode::SchemaViolation,
           "manifest: trajectory " + e.id + " missing integer \"frame_count\"");
    e.frame_count = t["frame_count"].get<int>();
    if (t.contains("parent_id")) e.parent_id = t["parent_id"].get<std::string>();
    m.trajectories.push_back(std::move(e));
  }
  if (j.contains("category_registry"))
    m.category_registry = j["category_registry"].get<std::vector<std::string>>();
  m.validate();
  return m;
}

DatasetManifest load_manifest(const std::string& path) {
  if (!fs::exists(path)) fail(ErrorCode::MissingFile, "no manifest at " + path);
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return manifest_from_json(ss.str());
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
  m.validate();
  std::string text = manifest_to_json(m);
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::MissingFile, "cannot write manifest: " + path);
  f << text;
}

std::string frame_filename(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06d.ppm", index);
  return buf;
}

std::string mask_filename(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06d.pgm", index);
  return buf;
}

namespace {

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Trajectory load_trajectory(const std::string& dataset_root,
                           const TrajectoryEntry& entry) {
  fs::path dir = fs::path(dataset_root) / entry.path;
  Trajectory traj;
  traj.id = entry.id;
  traj.instruction = entry.instruction;
  traj.source = entry.source;
  traj.parent_id = entry.parent_id;

  // states.csv: index, proprio_*, action_*
  fs::path states = dir / "states.csv";
  if (!fs::exists(states))
    fail(ErrorCode::MissingFile, "no states table: " + states.string());
  std::ifstream sf(states);
  std::string header;
  std::getline(sf, header);
  int pdim = 0, adim = 0;
  {
    std::stringstream hs(header);
    std::string col;
    while (std::getline(hs, col, ',')) {
      if (col.rfind("proprio_", 0) == 0) ++pdim;
      if (col.rfind("action_", 0) == 0) ++adim;
    }
  }
  std::string line;
  while (std::getline(sf, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    Frame f;
    std::getline(ls, cell, ',');
    f.index = std::stoi(cell);
    for (int i = 0; i < pdim; ++i) {
      std::getline(ls, cell, ',');
      f.proprio.push_back(std::stod(cell));
    }
    for (int i = 0; i < adim; ++i) {
      std::getline(ls, cell, ',');
      f.action.push_back(std::stod(cell));
    }
    traj.frames.push_back(std::move(f));
  }
  if (static_cast<int>(traj.frames.size()) != entry.frame_count)
    fail(ErrorCode::SchemaViolation,
         "trajectory " + entry.id + ": states row count " +
             std::to_string(traj.frames.size()) + " != frame_count " +
             std::to_string(entry.frame_count));

  for (Frame& f : traj.frames) {
    fs::path fp = dir / "frames" / frame_filename(f.index);
    f.image = decode_ppm(read_file(fp.string()));
  }

  // Masks: one directory per category, numbered per frame. All-zero mask
  // files mean the category left the view; no annotation is emitted there.
  fs::path masks_dir = dir / "masks";
  if (fs::exists(masks_dir)) {
    std::vector<std::string> categories;
    for (const auto& e : fs::directory_iterator(masks_dir))
      if (e.is_directory()) categories.push_back(e.path().filename().string());
    std::sort(categories.begin(), categories.end());
    for (const auto& cat : categories) {
      for (Frame& f : traj.frames) {
        fs::path mp = masks_dir / cat / mask_filename(f.index);
        if (!fs::exists(mp)) continue;
        Mask m = decode_mask(read_file(mp.string()));
        if (m.empty_mask()) continue;
        RegionAnnotation ann;
        ann.category = cat;
        ann.mask = std::move(m);
        ann.bbox = tight_bbox(ann.mask);
        f.annotations.push_back(std::move(ann));
      }
    }
  }
  traj.validate();
  return traj;
}

void save_trajectory(const std::string& dataset_root, const Trajectory& traj,
                     const std::string& rel_path) {
  traj.validate();
  fs::path dir = fs::path(dataset_root) / rel_path;
  fs::create_directories(dir / "frames");

  std::ofstream sf(dir / "states.csv", std::ios::binary);
  sf << "index";
  for (std::size_t i = 0; i < traj.frames.front().proprio.size(); ++i)
    sf << ",proprio_" << i;
  for (std::size_t i = 0; i < traj.frames.front().action.size(); ++i)
    sf << ",action_" << i;
  sf << "\n";
  for (const Frame& f : traj.frames) {
    sf << f.index;
    for (double v : f.proprio) sf << "," << format_value(v);
    for (double v : f.action) sf << "," << format_value(v);
    sf << "\n";
  }

  for (const Frame& f : traj.frames)
    write_file((dir / "frames" / frame_filename(f.index)).string(),
               encode_ppm(f.image));

  for (const Frame& f : traj.frames) {
    for (const RegionAnnotation& ann : f.annotations) {
      if (!ann.has_mask()) continue;
      fs::path cat_dir = dir / "masks" / ann.category;
      fs::create_directories(cat_dir);
      write_file((cat_dir / mask_filename(f.index)).string(),
                 encode_mask(ann.mask));
    }
  }
}

void check_augmentation_invariants(const Trajectory& augmented,
                                   const Trajectory& parent) {
  if (augmented.frames.size() != parent.frames.size())
    fail(ErrorCode::SchemaViolation,
         "augmented " + augmented.id + ": frame count differs from parent");
  for (std::size_t t = 0; t < parent.frames.size(); ++t) {
    if (augmented.frames[t].action != parent.frames[t].action ||
        augmented.frames[t].proprio != parent.frames[t].proprio)
      fail(ErrorCode::SchemaViolation,
           "augmented " + augmented.id + ": state mismatch at frame " +
               std::to_string(t));
  }
}

}  // namespace roboaug
