// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "roboaug/dataset.hpp"

using namespace roboaug;
namespace fs = std::filesystem;

namespace {

Image random_image(int h, int w, Rng& rng) {
  Image img(h, w);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.uniform_int(256));
  return img;
}

Mask random_mask(int h, int w, Rng& rng) {
  Mask m(h, w);
  for (auto& v : m.data) v = rng.uniform() < 0.4 ? 1 : 0;
  return m;
}

fs::path temp_dir(const char* name) {
  fs::path p = fs::temp_directory_path() / "roboaug-test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

DatasetManifest small_manifest() {
  DatasetManifest m;
  m.category_registry = {"agent", "goal"};
  m.tasks.push_back({"reach", "move the red block to the green marker"});
  m.trajectories.push_back({"e-0", "trajectories/e-0", TrajectorySource::expert,
                            std::nullopt, 4, "go"});
  m.trajectories.push_back({"a-0", "trajectories/a-0",
                            TrajectorySource::augmented, std::string("e-0"), 4,
                            "go"});
  return m;
}

}  // namespace

TEST_CASE("ppm roundtrip is lossless") {
  Rng rng(11);
  for (int i = 0; i < 20; ++i) {
    int h = 1 + static_cast<int>(rng.uniform_int(40));
    int w = 1 + static_cast<int>(rng.uniform_int(40));
    Image img = random_image(h, w, rng);
    CHECK(decode_ppm(encode_ppm(img)) == img);
  }
}

TEST_CASE("pgm mask roundtrip and threshold") {
  Rng rng(12);
  Mask m = random_mask(9, 13, rng);
  auto bytes = encode_mask(m);
  CHECK(decode_mask(bytes) == m);

  // decode thresholds at 128: patch one background byte to 127 / 128.
  auto grey = bytes;
  std::size_t pixel0 = bytes.size() - static_cast<std::size_t>(9) * 13;
  grey[pixel0] = 127;
  CHECK(decode_mask(grey).at(0, 0) == 0);
  grey[pixel0] = 128;
  CHECK(decode_mask(grey).at(0, 0) == 1);
}

TEST_CASE("invalid pnm bytes throw CodecError") {
  std::vector<std::uint8_t> junk = {'P', '9', '\n'};
  CHECK_THROWS_AS(decode_ppm(junk), Error);
  CHECK_THROWS_AS(decode_mask(junk), Error);
}

TEST_CASE("tight_bbox matches foreground extent") {
  Mask m(8, 8);
  m.at(2, 3) = 1;
  m.at(5, 6) = 1;
  Box b = tight_bbox(m);
  CHECK(b.x_min == 3);
  CHECK(b.y_min == 2);
  CHECK(b.x_max == 7);
  CHECK(b.y_max == 6);
  CHECK_THROWS_AS(tight_bbox(Mask(4, 4)), Error);
}

TEST_CASE("manifest serialization is canonical and a fixed point") {
  DatasetManifest m = small_manifest();
  std::string once = manifest_to_json(m);
  CHECK(once == manifest_to_json(m));
  DatasetManifest back = manifest_from_json(once);
  CHECK(manifest_to_json(back) == once);
  CHECK(back.trajectories.size() == 2);
  CHECK(back.trajectories[1].parent_id == std::string("e-0"));
  CHECK(back.trajectories[1].source == TrajectorySource::augmented);
}

TEST_CASE("manifest validation catches schema violations") {
  SUBCASE("duplicate trajectory id") {
    DatasetManifest m = small_manifest();
    m.trajectories.push_back(m.trajectories[0]);
    CHECK_THROWS_AS(m.validate(), Error);
  }
  SUBCASE("augmented without parent_id") {
    DatasetManifest m = small_manifest();
    m.trajectories[1].parent_id.reset();
    CHECK_THROWS_AS(m.validate(), Error);
  }
  SUBCASE("dangling parent") {
    DatasetManifest m = small_manifest();
    m.trajectories[1].parent_id = "missing";
    try {
      m.validate();
      CHECK(false);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DanglingParent);
    }
  }
  SUBCASE("augmented parent must be expert") {
    DatasetManifest m = small_manifest();
    m.trajectories.push_back({"a-1", "trajectories/a-1",
                              TrajectorySource::augmented, std::string("a-0"),
                              4, "go"});
    CHECK_THROWS_AS(m.validate(), Error);
  }
}

TEST_CASE("trajectory payload roundtrip with masks") {
  fs::path root = temp_dir("traj-roundtrip");
  Rng rng(3);

  Trajectory traj;
  traj.id = "e-0";
  traj.instruction = "go";
  for (int t = 0; t < 3; ++t) {
    Frame f;
    f.index = t;
    f.image = random_image(16, 16, rng);
    f.proprio = {0.25 * t, 1.0 / 3.0};
    f.action = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    RegionAnnotation ann;
    ann.category = "agent";
    ann.mask = Mask(16, 16);
    ann.mask.at(4 + t, 5) = 1;
    ann.bbox = tight_bbox(ann.mask);
    f.annotations.push_back(std::move(ann));
    traj.frames.push_back(std::move(f));
  }
  save_trajectory(root.string(), traj, "trajectories/e-0");

  TrajectoryEntry entry{"e-0", "trajectories/e-0", TrajectorySource::expert,
                        std::nullopt, 3, "go"};
  Trajectory back = load_trajectory(root.string(), entry);
  REQUIRE(back.frames.size() == 3);
  for (int t = 0; t < 3; ++t) {
    CHECK(back.frames[t].image == traj.frames[t].image);
    CHECK(back.frames[t].proprio == traj.frames[t].proprio);
    CHECK(back.frames[t].action == traj.frames[t].action);
    REQUIRE(back.frames[t].annotations.size() == 1);
    CHECK(back.frames[t].annotations[0].mask == traj.frames[t].annotations[0].mask);
    CHECK(back.frames[t].annotations[0].bbox == traj.frames[t].annotations[0].bbox);
  }
}

TEST_CASE("all-zero mask files are skipped on load") {
  fs::path root = temp_dir("traj-empty-mask");
  Trajectory traj;
  traj.id = "e-0";
  Frame f;
  f.index = 0;
  f.image = Image(8, 8, 100);
  f.proprio = {0, 0};
  f.action = {0, 0};
  traj.frames.push_back(f);
  save_trajectory(root.string(), traj, "trajectories/e-0");
  fs::create_directories(root / "trajectories/e-0/masks/goal");
  write_file((root / "trajectories/e-0/masks/goal" / mask_filename(0)).string(),
             encode_mask(Mask(8, 8)));

  TrajectoryEntry entry{"e-0", "trajectories/e-0", TrajectorySource::expert,
                        std::nullopt, 1, ""};
  Trajectory back = load_trajectory(root.string(), entry);
  CHECK(back.frames[0].annotations.empty());
}

TEST_CASE("augmentation invariants: pixel-only changes pass, state edits fail") {
  Rng rng(5);
  Trajectory parent;
  parent.id = "e-0";
  for (int t = 0; t < 2; ++t) {
    Frame f;
    f.index = t;
    f.image = random_image(8, 8, rng);
    f.proprio = {0.1, 0.2};
    f.action = {0.3, -0.4};
    parent.frames.push_back(std::move(f));
  }
  Trajectory aug = parent;
  aug.id = "a-0";
  aug.source = TrajectorySource::augmented;
  aug.parent_id = "e-0";
  aug.frames[0].image = random_image(8, 8, rng);
  CHECK_NOTHROW(check_augmentation_invariants(aug, parent));

  Trajectory bad = aug;
  bad.frames[1].action[0] += 1e-9;
  CHECK_THROWS_AS(check_augmentation_invariants(bad, parent), Error);

  Trajectory short_copy = aug;
  short_copy.frames.pop_back();
  CHECK_THROWS_AS(check_augmentation_invariants(short_copy, parent), Error);
}

TEST_CASE("filename helpers are zero padded") {
  CHECK(frame_filename(0) == "000000.ppm");
  CHECK(frame_filename(42) == "000042.ppm");
  CHECK(mask_filename(123456) == "123456.pgm");
}

TEST_CASE("missing manifest file raises MissingFile") {
  try {
    load_manifest("/nonexistent/manifest.json");
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingFile);
  }
}
