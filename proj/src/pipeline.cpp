// SPDX-License-Identifier: Apache-2.0
#include "roboaug/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "roboaug/detect_eval.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace roboaug {
namespace {

constexpr const char* kVersion = "roboaug 0.1.0";

json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::MissingFile, "cannot read: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  json j = json::parse(ss.str(), nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::ConfigError, "not valid JSON: " + path);
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::MissingFile, "cannot write: " + path);
  f << text;
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j[key].get<T>();
}

}  // namespace

PipelineConfig PipelineConfig::from_file(const std::string& path) {
  json j = read_json_file(path);
  PipelineConfig cfg;
  maybe(j, "dataset_root", cfg.dataset_root);
  maybe(j, "output_root", cfg.output_root);
  maybe(j, "seed", cfg.seed);
  if (j.contains("backends")) {
    const json& b = j["backends"];
    maybe(b, "detector", cfg.detector);
    maybe(b, "embedder", cfg.embedder);
    maybe(b, "tracker", cfg.tracker);
    maybe(b, "provider", cfg.provider);
  }
  if (j.contains("thresholds")) {
    const json& t = j["thresholds"];
    maybe(t, "box", cfg.thresholds.box_threshold);
    maybe(t, "text", cfg.thresholds.text_threshold);
    maybe(t, "delta", cfg.thresholds.delta_threshold);
    maybe(t, "floor", cfg.thresholds.similarity_floor);
    maybe(t, "crop_size", cfg.thresholds.crop_size);
  }
  if (j.contains("augment")) maybe(j["augment"], "ratio", cfg.augment_ratio);
  if (j.contains("rcl")) {
    const json& r = j["rcl"];
    maybe(r, "enabled", cfg.rcl.enabled);
    maybe(r, "temperature", cfg.rcl.temperature);
    maybe(r, "weight", cfg.rcl.loss_weight);
  }
  if (j.contains("train")) {
    const json& t = j["train"];
    maybe(t, "steps", cfg.train.steps);
    maybe(t, "batch_size", cfg.train.batch_size);
    maybe(t, "learning_rate", cfg.train.learning_rate);
    maybe(t, "weight_decay", cfg.train.weight_decay);
  }
  if (j.contains("scene")) {
    const json& s = j["scene"];
    maybe(s, "height", cfg.scene.height);
    maybe(s, "width", cfg.scene.width);
    maybe(s, "episode_length", cfg.scene.episode_length);
    maybe(s, "train_textures", cfg.scene.train_textures);
    maybe(s, "test_textures", cfg.scene.test_textures);
    maybe(s, "agent_size", cfg.scene.agent_size);
    maybe(s, "goal_size", cfg.scene.goal_size);
    maybe(s, "step_pixels", cfg.scene.step_pixels);
    maybe(s, "goal_radius", cfg.scene.goal_radius);
    maybe(s, "eval_distractors", cfg.scene.eval_distractors);
    maybe(s, "distractor_size", cfg.scene.distractor_size);
    maybe(s, "n_expert", cfg.n_expert);
  }
  maybe(j, "eval_episodes", cfg.eval_episodes);
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    maybe(s, "ratios", cfg.sweep_ratios);
    maybe(s, "seeds", cfg.sweep_seeds);
  }
  if (j.contains("detect_eval")) {
    const json& d = j["detect_eval"];
    maybe(d, "gt_file", cfg.gt_file);
    maybe(d, "det_file", cfg.det_file);
  }
  if (cfg.thresholds.delta_threshold < 0 || cfg.thresholds.delta_threshold > 1 ||
      cfg.thresholds.similarity_floor < -1 || cfg.thresholds.similarity_floor > 1)
    fail(ErrorCode::ConfigError, "thresholds out of range");
  if (cfg.augment_ratio < 0) fail(ErrorCode::ConfigError, "augment.ratio < 0");
  return cfg;
}

std::string PipelineConfig::to_json() const {
  json j;
  j["dataset_root"] = dataset_root;
  j["output_root"] = output_root;
  j["seed"] = seed;
  j["backends"] = {{"detector", detector},
                   {"embedder", embedder},
                   {"tracker", tracker},
                   {"provider", provider}};
  j["thresholds"] = {{"box", thresholds.box_threshold},
                     {"text", thresholds.text_threshold},
                     {"delta", thresholds.delta_threshold},
                     {"floor", thresholds.similarity_floor},
                     {"crop_size", thresholds.crop_size}};
  j["augment"] = {{"ratio", augment_ratio}};
  j["rcl"] = {{"enabled", rcl.enabled},
              {"temperature", rcl.temperature},
              {"weight", rcl.loss_weight}};
  j["train"] = {{"steps", train.steps},
                {"batch_size", train.batch_size},
                {"learning_rate", train.learning_rate},
                {"weight_decay", train.weight_decay}};
  j["scene"] = {{"height", scene.height},
                {"width", scene.width},
                {"episode_length", scene.episode_length},
                {"train_textures", scene.train_textures},
                {"test_textures", scene.test_textures},
                {"agent_size", scene.agent_size},
                {"goal_size", scene.goal_size},
                {"step_pixels", scene.step_pixels},
                {"goal_radius", scene.goal_radius},
                {"eval_distractors", scene.eval_distractors},
                {"distractor_size", scene.distractor_size},
                {"n_expert", n_expert}};
  j["eval_episodes"] = eval_episodes;
  j["sweep"] = {{"ratios", sweep_ratios}, {"seeds", sweep_seeds}};
  j["detect_eval"] = {{"gt_file", gt_file}, {"det_file", det_file}};
  j["version"] = kVersion;
  return j.dump(2) + "\n";
}

std::uint64_t PipelineConfig::content_hash() const { return fnv1a(to_json()); }

std::uint64_t tree_hash(const std::string& root) {
  if (!fs::exists(root)) return 0;
  std::vector<std::string> paths;
  if (fs::is_directory(root)) {
    for (const auto& e : fs::recursive_directory_iterator(root))
      if (e.is_regular_file()) paths.push_back(e.path().string());
  } else {
    paths.push_back(root);
  }
  std::sort(paths.begin(), paths.end());
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& p : paths) {
    std::string rel = fs::relative(p, fs::path(root).parent_path()).string();
    h = fnv1a(rel, h);
    auto bytes = read_file(p);
    h = fnv1a_bytes(bytes.data(), bytes.size(), h);
  }
  return h;
}

namespace {

// --- Run records: config snapshot at start, output hashes at completion. ----

std::string record_path(const PipelineConfig& cfg, const std::string& cmd) {
  return cfg.output_root + "/run_" + cmd + ".json";
}

bool outputs_up_to_date(const PipelineConfig& cfg, const std::string& cmd,
                        const std::vector<std::string>& outputs) {
  std::string path = record_path(cfg, cmd);
  if (!fs::exists(path)) return false;
  json rec = read_json_file(path);
  if (!rec.contains("config_hash") ||
      rec["config_hash"].get<std::uint64_t>() != cfg.content_hash())
    return false;
  if (!rec.contains("outputs")) return false;
  for (const auto& out : outputs) {
    if (!rec["outputs"].contains(out)) return false;
    if (tree_hash(out) != rec["outputs"][out].get<std::uint64_t>()) return false;
  }
  return true;
}

void write_record(const PipelineConfig& cfg, const std::string& cmd,
                  const std::vector<std::string>& outputs) {
  json rec;
  rec["command"] = cmd;
  rec["version"] = kVersion;
  rec["config_hash"] = cfg.content_hash();
  rec["config"] = json::parse(cfg.to_json());
  rec["outputs"] = json::object();
  for (const auto& out : outputs) rec["outputs"][out] = tree_hash(out);
  write_text(record_path(cfg, cmd), rec.dump(2) + "\n");
}

void snapshot_config(const PipelineConfig& cfg, const std::string& cmd) {
  write_text(cfg.output_root + "/config_" + cmd + ".json", cfg.to_json());
}

std::string reference_labels_path(const PipelineConfig& cfg) {
  return cfg.dataset_root + "/reference_labels.json";
}

std::string oracle_boxes_path(const PipelineConfig& cfg) {
  return cfg.dataset_root + "/oracle_boxes.json";
}

json box_to_json(const Box& b) {
  return json::array({b.x_min, b.y_min, b.x_max, b.y_max});
}

Box box_from_json(const json& j) {
  return Box{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
             j[3].get<double>()};
}

}  // namespace

int cmd_synth(const PipelineConfig& cfg) {
  std::vector<std::string> outputs = {cfg.dataset_root};
  if (outputs_up_to_date(cfg, "synth", outputs)) {
    std::cout << "synth: outputs up to date, nothing to do\n";
    return kExitOk;
  }
  snapshot_config(cfg, "synth");

  SyntheticSceneConfig scene = cfg.scene;
  scene.seed = cfg.seed;
  std::vector<Trajectory> trajectories =
      generate_reach_dataset(scene, cfg.n_expert);

  fs::create_directories(cfg.dataset_root);

  // Reference labels: one manually boxed frame (trajectory 0, frame 0).
  json ref;
  ref["trajectory_id"] = trajectories.front().id;
  ref["frame_index"] = 0;
  ref["boxes"] = json::array();
  for (const auto& ann : trajectories.front().frames.front().annotations)
    ref["boxes"].push_back({{"category", ann.category}, {"bbox", box_to_json(ann.bbox)}});
  write_text(reference_labels_path(cfg), ref.dump(2) + "\n");

  // Anchor-frame ground truth consumed by the oracle detector. The agent box
  // gets a high score (confidence-shortcut route); the goal a low one
  // (similarity route), so both matching paths run end to end.
  json oracle = json::object();
  for (const auto& traj : trajectories) {
    json boxes = json::array();
    for (const auto& ann : traj.frames.front().annotations) {
      double score = ann.category == "agent" ? 0.9 : 0.5;
      boxes.push_back({{"label", ann.category},
                       {"bbox", box_to_json(ann.bbox)},
                       {"score", score}});
    }
    oracle[traj.id] = boxes;
  }
  write_text(oracle_boxes_path(cfg), oracle.dump(2) + "\n");

  // Payloads go out without masks; extraction recovers them.
  DatasetManifest manifest;
  manifest.category_registry = {"agent", "goal"};
  manifest.tasks.push_back({"reach", trajectories.front().instruction});
  for (auto traj : trajectories) {
    for (auto& f : traj.frames) f.annotations.clear();
    save_trajectory(cfg.dataset_root, traj, "trajectories/" + traj.id);
    TrajectoryEntry e;
    e.id = traj.id;
    e.path = "trajectories/" + traj.id;
    e.source = traj.source;
    e.frame_count = static_cast<int>(traj.frames.size());
    e.instruction = traj.instruction;
    manifest.trajectories.push_back(std::move(e));
  }
  save_manifest(manifest, cfg.dataset_root + "/manifest.json");

  write_record(cfg, "synth", outputs);
  std::cout << "synth: wrote " << trajectories.size() << " expert trajectories to "
            << cfg.dataset_root << "\n";
  return kExitOk;
}

int cmd_extract(const PipelineConfig& cfg) {
  if (!fs::exists(cfg.dataset_root + "/manifest.json") ||
      !fs::exists(reference_labels_path(cfg))) {
    std::cerr << "extract: missing manifest or reference labels under "
              << cfg.dataset_root << "\n";
    return kExitUsage;
  }
  std::vector<std::string> outputs = {cfg.dataset_root,
                                      cfg.output_root + "/reference_set.bin"};
  if (outputs_up_to_date(cfg, "extract", outputs)) {
    std::cout << "extract: outputs up to date, nothing to do\n";
    return kExitOk;
  }
  snapshot_config(cfg, "extract");

  DatasetManifest manifest = load_manifest(cfg.dataset_root + "/manifest.json");
  json ref_labels = read_json_file(reference_labels_path(cfg));

  std::unique_ptr<EmbedderBackend> embedder = make_embedder(cfg.embedder);
  std::unique_ptr<TrackerBackend> tracker = make_tracker(cfg.tracker);

  OracleDetector oracle;
  std::unique_ptr<DetectorBackend> detector;
  if (cfg.detector == "oracle") {
    json boxes = read_json_file(oracle_boxes_path(cfg));
    for (const auto& entry : manifest.trajectories) {
      if (!boxes.contains(entry.id)) continue;
      Trajectory traj = load_trajectory(cfg.dataset_root, entry);
      std::vector<OracleDetector::GtBox> gt;
      for (const auto& b : boxes[entry.id])
        gt.push_back({b["label"].get<std::string>(), box_from_json(b["bbox"]),
                      b["score"].get<double>()});
      oracle.add(traj.frames.front().image, std::move(gt));
    }
  } else {
    fail(ErrorCode::ConfigError, "unknown detector backend: " + cfg.detector);
  }

  // Reference set from the single labeled frame.
  const std::string ref_traj_id = ref_labels["trajectory_id"].get<std::string>();
  const TrajectoryEntry* ref_entry = manifest.find(ref_traj_id);
  if (!ref_entry)
    fail(ErrorCode::SchemaViolation, "reference trajectory not in manifest");
  Trajectory ref_traj = load_trajectory(cfg.dataset_root, *ref_entry);
  std::vector<std::pair<std::string, Box>> ref_boxes;
  for (const auto& b : ref_labels["boxes"])
    ref_boxes.emplace_back(b["category"].get<std::string>(),
                           box_from_json(b["bbox"]));
  ReferenceSet refs =
      build_reference_set(ref_traj.frames[ref_labels["frame_index"].get<int>()],
                          ref_boxes, *embedder, cfg.thresholds.crop_size);
  refs.source_trajectory = ref_traj_id;
  fs::create_directories(cfg.output_root);
  save_reference_set(refs, cfg.output_root + "/reference_set.bin");

  std::vector<std::string> review;
  for (const auto& entry : manifest.trajectories) {
    if (entry.source != TrajectorySource::expert) continue;
    Trajectory traj = load_trajectory(cfg.dataset_root, entry);
    try {
      std::vector<RegionAnnotation> seeds = extract_anchor_annotations(
          traj, refs, oracle, *embedder, cfg.thresholds);
      PropagationResult prop = propagate(traj, seeds, *tracker);
      for (const auto& w : prop.warnings)
        std::cerr << "extract: " << entry.id << ": " << w << "\n";
      // Write masks back into the dataset layout.
      for (std::size_t t = 0; t < prop.frames.size(); ++t) {
        for (const auto& [cat, mask] : prop.frames[t]) {
          fs::path dir = fs::path(cfg.dataset_root) / entry.path / "masks" / cat;
          fs::create_directories(dir);
          write_file((dir / mask_filename(static_cast<int>(t))).string(),
                     encode_mask(mask));
        }
      }
      std::cout << "extract: " << entry.id << " coverage";
      for (const auto& [cat, cov] : prop.coverage)
        std::cout << " " << cat << "=" << cov;
      std::cout << "\n";
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NoMatches) {
        review.push_back(entry.id);
        continue;
      }
      throw;
    }
  }

  write_record(cfg, "extract", outputs);
  if (!review.empty()) {
    std::cerr << "extract: trajectories needing manual review:\n";
    for (const auto& id : review) std::cerr << "  " << id << "\n";
    return kExitPartial;
  }
  return kExitOk;
}

int cmd_augment(const PipelineConfig& cfg) {
  std::string manifest_path = cfg.dataset_root + "/manifest.json";
  if (!fs::exists(manifest_path)) {
    std::cerr << "augment: no manifest at " << manifest_path << "\n";
    return kExitUsage;
  }
  std::vector<std::string> outputs = {cfg.dataset_root + "/manifest_final.json",
                                      cfg.dataset_root + "/trajectories"};
  if (outputs_up_to_date(cfg, "augment", outputs)) {
    std::cout << "augment: outputs up to date, nothing to do\n";
    return kExitOk;
  }
  snapshot_config(cfg, "augment");

  DatasetManifest manifest = load_manifest(manifest_path);
  std::unique_ptr<BackgroundProvider> provider = make_provider(cfg.provider);
  PromptLibrary library = default_prompt_library();

  std::vector<Trajectory> expert, augmented;
  int expected_copies = 0, produced_copies = 0;
  for (const auto& entry : manifest.trajectories) {
    if (entry.source != TrajectorySource::expert) continue;
    Trajectory traj = load_trajectory(cfg.dataset_root, entry);
    if (cfg.augment_ratio > 0) {
      bool any_mask = false;
      PropagationResult masks;
      masks.trajectory_id = traj.id;
      for (const auto& f : traj.frames) {
        std::map<std::string, Mask> fm;
        for (const auto& a : f.annotations)
          if (a.has_mask()) {
            fm[a.category] = a.mask;
            any_mask = true;
          }
        masks.frames.push_back(std::move(fm));
      }
      if (!any_mask)
        fail(ErrorCode::MissingMasks,
             "augment: trajectory " + traj.id + " has no masks; run extract first");
      AugmentationPlan plan;
      plan.ratio = cfg.augment_ratio;
      plan.prompt_seed = Rng::derived(cfg.seed, "augment").next_u64();
      plan.provider = cfg.provider;
      std::vector<Trajectory> copies =
          augment_trajectory(traj, masks, plan, *provider, library);
      expected_copies += cfg.augment_ratio;
      produced_copies += static_cast<int>(copies.size());
      for (auto& c : copies) {
        save_trajectory(cfg.dataset_root, c, "trajectories/" + c.id);
        augmented.push_back(std::move(c));
      }
    }
    expert.push_back(std::move(traj));
  }

  DatasetManifest final_manifest =
      build_final_dataset(expert, augmented, manifest.category_registry);
  final_manifest.tasks = manifest.tasks;
  save_manifest(final_manifest, cfg.dataset_root + "/manifest_final.json");

  write_record(cfg, "augment", outputs);
  std::cout << "augment: " << expert.size() << " expert + " << augmented.size()
            << " augmented trajectories in manifest_final.json\n";
  return produced_copies == expected_copies ? kExitOk : kExitPartial;
}

int cmd_train(const PipelineConfig& cfg) {
  std::string manifest_path = cfg.dataset_root + "/manifest_final.json";
  if (!fs::exists(manifest_path))
    manifest_path = cfg.dataset_root + "/manifest.json";
  if (!fs::exists(manifest_path)) {
    std::cerr << "train: no manifest under " << cfg.dataset_root << "\n";
    return kExitUsage;
  }
  std::vector<std::string> outputs = {cfg.output_root + "/policy.bin",
                                      cfg.output_root + "/train_log.jsonl"};
  if (outputs_up_to_date(cfg, "train", outputs)) {
    std::cout << "train: outputs up to date, nothing to do\n";
    return kExitOk;
  }
  snapshot_config(cfg, "train");

  DatasetManifest manifest = load_manifest(manifest_path);
  TrainConfig train = cfg.train;
  train.seed = Rng::derived(cfg.seed, "train").next_u64();
  train.rcl = cfg.rcl;
  TrainResult result = train_policy(cfg.dataset_root, manifest, train);

  fs::create_directories(cfg.output_root);
  result.policy.save(cfg.output_root + "/policy.bin");
  write_train_log(result.log, cfg.output_root + "/train_log.jsonl");
  write_record(cfg, "train", outputs);
  std::cout << "train: " << result.log.size() << " steps, final total loss "
            << result.log.back().total << "\n";
  return kExitOk;
}

int cmd_eval(const PipelineConfig& cfg) {
  std::string policy_path = cfg.output_root + "/policy.bin";
  if (!fs::exists(policy_path)) {
    std::cerr << "eval: no trained policy at " << policy_path << "\n";
    return kExitUsage;
  }
  snapshot_config(cfg, "eval");
  ToyPolicy policy = ToyPolicy::load(policy_path);
  SyntheticSceneConfig scene = cfg.scene;
  scene.seed = cfg.seed;
  EvalMetrics m = evaluate_ood(as_policy_fn(policy), scene, cfg.eval_episodes,
                               Rng::derived(cfg.seed, "eval").next_u64());
  json out = {{"action_mse", m.action_mse},
              {"success_rate", m.success_rate},
              {"episodes", m.episodes}};
  write_text(cfg.output_root + "/metrics.json", out.dump(2) + "\n");
  write_record(cfg, "eval", {cfg.output_root + "/metrics.json"});
  std::cout << "eval: ood_mse=" << m.action_mse
            << " success=" << m.success_rate << " over " << m.episodes
            << " episodes\n";
  return kExitOk;
}

int cmd_sweep(const PipelineConfig& cfg) {
  std::vector<std::string> outputs = {cfg.output_root + "/sweep.csv",
                                      cfg.output_root + "/sweep.ppm"};
  if (outputs_up_to_date(cfg, "sweep", outputs)) {
    std::cout << "sweep: outputs up to date, nothing to do\n";
    return kExitOk;
  }
  snapshot_config(cfg, "sweep");

  SweepConfig sweep;
  sweep.scene = cfg.scene;
  sweep.train = cfg.train;
  sweep.train.rcl = cfg.rcl;
  sweep.n_expert = cfg.n_expert;
  sweep.eval_episodes = cfg.eval_episodes;
  sweep.provider = cfg.provider;
  SweepResult result = ratio_sweep(cfg.sweep_ratios, cfg.sweep_seeds, sweep);

  fs::create_directories(cfg.output_root);
  write_sweep_csv(result, cfg.output_root + "/sweep.csv");
  write_sweep_plot(result, cfg.output_root + "/sweep.ppm");
  write_record(cfg, "sweep", outputs);

  bool any_failed = false;
  for (const auto& c : result.cells) {
    any_failed |= c.failed;
    if (c.failed)
      std::cerr << "sweep: cell ratio=" << c.ratio << " seed=" << c.seed
                << " failed: " << c.error << "\n";
  }
  std::cout << "sweep: " << result.cells.size() << " cells -> "
            << cfg.output_root << "/sweep.csv\n";
  return any_failed ? kExitPartial : kExitOk;
}

int cmd_eval_detect(const PipelineConfig& cfg) {
  snapshot_config(cfg, "eval_detect");
  EvalReport report;
  if (!cfg.gt_file.empty()) {
    if (cfg.det_file.empty()) {
      std::cerr << "eval-detect: gt_file given without det_file\n";
      return kExitUsage;
    }
    GroundTruthSet gts = load_ground_truth(cfg.gt_file);
    DetectionSet dets = load_detections(cfg.det_file);
    report = map50(dets, gts);
    report.method = "files";
  } else {
    // Synthetic fixture: analytic scenes, oracle detector with five prompt
    // phrasings per category, then one-shot re-classification.
    SyntheticSceneConfig scene = cfg.scene;
    scene.seed = cfg.seed;
    std::vector<Trajectory> trajectories =
        generate_reach_dataset(scene, std::max(cfg.n_expert, 2));

    GroundTruthSet gts;
    gts.categories = {"agent", "goal"};
    OracleDetector detector;
    std::map<std::string, Image> images;
    for (const auto& traj : trajectories) {
      const Frame& frame = traj.frames.front();
      std::string image_id = traj.id + "/0";
      images[image_id] = frame.image;
      std::vector<OracleDetector::GtBox> gt;
      for (const auto& ann : frame.annotations) {
        gts.images[image_id].push_back({ann.category, ann.bbox});
        gt.push_back({ann.category, ann.bbox, 0.95});
      }
      detector.add(frame.image, std::move(gt));
    }

    std::map<std::string, std::vector<std::string>> prompts = {
        {"agent", {"agent", "red block", "red square", "the agent", "moving block"}},
        {"goal", {"goal", "green marker", "green square", "the goal", "target pad"}}};

    std::unique_ptr<EmbedderBackend> embedder = make_embedder(cfg.embedder);
    const Frame& ref_frame = trajectories.front().frames.front();
    std::vector<std::pair<std::string, Box>> ref_boxes;
    for (const auto& ann : ref_frame.annotations)
      ref_boxes.emplace_back(ann.category, ann.bbox);
    ReferenceSet refs = build_reference_set(ref_frame, ref_boxes, *embedder,
                                            cfg.thresholds.crop_size);

    DetectionSet pooled;
    for (const auto& traj : trajectories) {
      std::string image_id = traj.id + "/0";
      DetectionSet per_image = ensemble_prompts(
          detector, images[image_id], image_id, prompts,
          cfg.thresholds.box_threshold, cfg.thresholds.text_threshold, 0.5);
      for (auto& d : per_image.detections)
        pooled.detections.push_back(std::move(d));
    }
    DetectionSet reclassified = reclassify_with_matching(
        pooled, refs, *embedder, images, cfg.thresholds.delta_threshold,
        cfg.thresholds.similarity_floor);
    report = map50(reclassified, gts);
    report.method = "synthetic+matching";
  }

  fs::create_directories(cfg.output_root);
  write_report_csv(report, cfg.output_root + "/detect_report.csv");
  write_report_chart(report, cfg.output_root + "/detect_report.ppm");
  write_record(cfg, "eval_detect", {cfg.output_root + "/detect_report.csv"});
  std::cout << "eval-detect: mAP@0.5 = " << report.map50 << " ("
            << report.method << ")\n";
  return kExitOk;
}

}  // namespace roboaug
