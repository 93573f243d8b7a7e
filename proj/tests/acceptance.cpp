// SPDX-License-Identifier: Apache-2.0
// Acceptance gate: one pass/fail line per criterion, nonzero exit if any
// criterion fails. Tolerances and budgets are pinned here on purpose; do not
// loosen them to make a failure go away.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "roboaug/augment.hpp"
#include "roboaug/detect_eval.hpp"
#include "roboaug/mask_prop.hpp"
#include "roboaug/noise.hpp"
#include "roboaug/pipeline.hpp"
#include "roboaug/policy.hpp"
#include "roboaug/rcl.hpp"

using namespace roboaug;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

struct Criterion {
  int id;
  const char* name;
  std::function<bool(std::string&)> run;
};

double now_s() {
  using clk = std::chrono::steady_clock;
  return std::chrono::duration<double>(clk::now().time_since_epoch()).count();
}

std::vector<double> random_unit(int dim, Rng& rng) {
  std::vector<double> v(dim);
  double n2 = 0;
  for (auto& x : v) {
    x = rng.normal();
    n2 += x * x;
  }
  double inv = 1.0 / std::sqrt(n2);
  for (auto& x : v) x *= inv;
  return v;
}

Image random_image(int h, int w, Rng& rng) {
  Image img(h, w);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.uniform_int(256));
  return img;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / "roboaug-acceptance" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// ---------------------------------------------------------------------------

bool criterion_compositing(std::string& detail) {
  double t0 = now_s();
  Rng rng(101);
  for (int i = 0; i < 1000; ++i) {
    int h = 1 + static_cast<int>(rng.uniform_int(48));
    int w = 1 + static_cast<int>(rng.uniform_int(48));
    Image img = random_image(h, w, rng);
    Image bg = random_image(h, w, rng);
    Mask m(h, w);
    for (auto& v : m.data) v = rng.uniform() < 0.5 ? 1 : 0;
    Image out = composite(img, m, bg);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c) {
          std::uint8_t want = m.at(y, x) ? img.at(y, x, c) : bg.at(y, x, c);
          if (out.at(y, x, c) != want) {
            detail = "pixel mismatch in triple " + std::to_string(i);
            return false;
          }
        }
  }
  double dt = now_s() - t0;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "1000 triples bit-exact in %.2fs", dt);
  detail = buf;
  return dt < 10.0;
}

bool criterion_loss_oracle(std::string& detail) {
  double t0 = now_s();
  Rng rng(102);
  double worst = 0;
  for (int n = 2; n <= 8; ++n) {
    for (int rep = 0; rep < 200; ++rep) {
      ContrastiveBatch b;
      b.temperature = 0.07;
      int dim = 2 + static_cast<int>(rng.uniform_int(7));
      int n_labels = 1 + static_cast<int>(rng.uniform_int(3));
      for (int i = 0; i < n; ++i) {
        b.embeddings.push_back(random_unit(dim, rng));
        b.labels.push_back(static_cast<int>(rng.uniform_int(n_labels)));
      }
      double got = region_contrastive_loss(b).loss;
      double want = oracles::reference_rcl_loss(b.embeddings, b.labels, 0.07);
      double rel = std::abs(got - want) / std::max(1.0, std::abs(want));
      worst = std::max(worst, rel);
      if (rel > 1e-6) {
        detail = "relative error " + std::to_string(rel);
        return false;
      }
    }
  }
  double dt = now_s() - t0;
  char buf[96];
  std::snprintf(buf, sizeof(buf), "1400 batches, worst rel err %.2e, %.2fs", worst, dt);
  detail = buf;
  return dt < 30.0;
}

bool criterion_gradient(std::string& detail) {
  double t0 = now_s();
  Rng rng(103);
  const double h = 1e-5;
  double worst = 0;
  for (int rep = 0; rep < 120; ++rep) {
    int n = 2 + static_cast<int>(rng.uniform_int(5));
    int dim = 2 + static_cast<int>(rng.uniform_int(4));
    ContrastiveBatch b;
    b.temperature = 0.07;
    for (int i = 0; i < n; ++i) {
      b.embeddings.push_back(random_unit(dim, rng));
      b.labels.push_back(static_cast<int>(rng.uniform_int(2)));
    }
    auto grad = rcl_gradient(b);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < dim; ++k) {
        auto zp = b.embeddings, zm = b.embeddings;
        zp[i][k] += h;
        zm[i][k] -= h;
        double fd = (oracles::reference_rcl_loss(zp, b.labels, 0.07) -
                     oracles::reference_rcl_loss(zm, b.labels, 0.07)) /
                    (2 * h);
        double rel = std::abs(grad[i][k] - fd) /
                     std::max({1.0, std::abs(fd), std::abs(grad[i][k])});
        worst = std::max(worst, rel);
        if (rel > 1e-4) {
          detail = "component rel err " + std::to_string(rel);
          return false;
        }
      }
    }
  }
  double dt = now_s() - t0;
  char buf[96];
  std::snprintf(buf, sizeof(buf), "120 batches, worst rel err %.2e, %.2fs", worst, dt);
  detail = buf;
  return dt < 120.0;
}

bool criterion_attention(std::string& detail) {
  Rng rng(104);
  double worst = 0;
  for (int rep = 0; rep < 200; ++rep) {
    int C = 1 + static_cast<int>(rng.uniform_int(8));
    int H = 1 + static_cast<int>(rng.uniform_int(8));
    int W = 1 + static_cast<int>(rng.uniform_int(8));
    FeatureMap z(C, H, W), z_obj(C, H, W);
    for (auto& v : z.values) v = rng.normal();
    for (auto& v : z_obj.values) v = rng.normal();
    AttentionParams params(C);
    for (auto& v : params.weight) v = rng.normal();
    for (auto& v : params.bias) v = rng.normal();
    FeatureMap out = attentive_features(z, z_obj, params);
    auto want = oracles::reference_attentive(C, H, W, z.values, z_obj.values,
                                             params.weight, params.bias);
    for (std::size_t i = 0; i < want.size(); ++i) {
      double err = std::abs(out.values[i] - want[i]);
      worst = std::max(worst, err);
      if (err > 1e-12) {
        detail = "abs err " + std::to_string(err);
        return false;
      }
    }
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "200 shapes, worst abs err %.2e", worst);
  detail = buf;
  return true;
}

bool criterion_matching(std::string& detail) {
  Rng rng(105);
  int cases = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    int dim = 3 + static_cast<int>(rng.uniform_int(6));
    int k = 1 + static_cast<int>(rng.uniform_int(5));
    ReferenceSet refs;
    refs.dim = dim;
    for (int i = 0; i < k; ++i)
      refs.entries.push_back({"cat-" + std::to_string(i), random_unit(dim, rng)});

    std::vector<Proposal> proposals;
    int np = 1 + static_cast<int>(rng.uniform_int(5));
    for (int i = 0; i < np; ++i) {
      Proposal p;
      p.bbox = {0, 0, 4, 4};
      p.score = rng.uniform();
      if (rng.uniform() < 0.5)
        p.detector_label = rng.uniform() < 0.7
                               ? refs.entries[rng.uniform_int(k)].category
                               : std::string("other");
      // Constructed tie every 10th trial: copy a reference embedding so two
      // symmetric references score identically.
      if (trial % 10 == 0 && k >= 2) {
        p.embedding.assign(dim, 0.0);
        for (int d = 0; d < dim; ++d)
          p.embedding[d] = refs.entries[0].embedding[d] + refs.entries[1].embedding[d];
        double n2 = 0;
        for (double v : p.embedding) n2 += v * v;
        if (n2 < 1e-12) p.embedding = random_unit(dim, rng);
        else {
          double inv = 1.0 / std::sqrt(n2);
          for (double& v : p.embedding) v *= inv;
        }
      } else {
        p.embedding = random_unit(dim, rng);
      }
      proposals.push_back(std::move(p));
    }

    auto got = match_candidates(proposals, refs, 0.7, 0.3);
    for (std::size_t i = 0; i < proposals.size(); ++i) {
      std::vector<std::pair<std::string, std::vector<double>>> oref;
      for (const auto& e : refs.entries) oref.emplace_back(e.category, e.embedding);
      auto want = oracles::brute_force_match(
          proposals[i].embedding, proposals[i].score,
          proposals[i].detector_label ? &*proposals[i].detector_label : nullptr,
          oref, 0.7, 0.3);
      if (got[i].category != want.category) {
        detail = "case " + std::to_string(trial) + ": got '" + got[i].category +
                 "' want '" + want.category + "'";
        return false;
      }
      ++cases;
    }
  }
  detail = std::to_string(cases) + " proposals across 1000 cases agree";
  return true;
}

bool criterion_propagation(std::string& detail) {
  // 50-frame trajectory: an 8x8 block translating diagonally over noise.
  const int n = 50, hgt = 80, wid = 80;
  Trajectory traj;
  traj.id = "fixture";
  for (int t = 0; t < n; ++t) {
    Frame f;
    f.index = t;
    f.image = Image(hgt, wid);
    for (int y = 0; y < hgt; ++y)
      for (int x = 0; x < wid; ++x) {
        double v = fbm_noise(9, x * 0.13, y * 0.13, 3);
        f.image.at(y, x, 0) = static_cast<std::uint8_t>(70 + 70 * v);
        f.image.at(y, x, 1) = static_cast<std::uint8_t>(80 + 60 * v);
        f.image.at(y, x, 2) = static_cast<std::uint8_t>(60 + 80 * v);
      }
    int ox = 5 + t, oy = 8 + (t % 2 ? t : t - 1) / 1;  // diagonal-ish path
    oy = 8 + t / 2;
    for (int y = oy; y < oy + 8; ++y)
      for (int x = ox; x < ox + 8; ++x) {
        f.image.at(y, x, 0) = 235;
        f.image.at(y, x, 1) = 25;
        f.image.at(y, x, 2) = 25;
      }
    f.proprio = {0, 0};
    f.action = {0, 0};
    traj.frames.push_back(std::move(f));
  }
  RegionAnnotation seed;
  seed.category = "agent";
  seed.bbox = {5, 8, 13, 16};
  TranslationTracker tracker(3);
  PropagationResult r = propagate(traj, {seed}, tracker);
  double worst = 1.0;
  for (int t = 0; t < n; ++t) {
    Mask want(hgt, wid);
    int ox = 5 + t, oy = 8 + t / 2;
    for (int y = oy; y < oy + 8; ++y)
      for (int x = ox; x < ox + 8; ++x) want.at(y, x) = 1;
    double iou = mask_iou(r.frames[t].at("agent"), want);
    worst = std::min(worst, iou);
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "worst per-frame IoU %.4f over 50 frames", worst);
  detail = buf;
  return worst >= 0.99;
}

bool criterion_map(std::string& detail) {
  GroundTruthSet gts;
  gts.categories = {"mug"};
  gts.images["img0"].push_back({"mug", {0, 0, 10, 10}});
  gts.images["img0"].push_back({"mug", {20, 20, 30, 30}});

  DetectionSet perfect;
  perfect.detections = {{"img0", "mug", {0, 0, 10, 10}, 0.9},
                        {"img0", "mug", {20, 20, 30, 30}, 0.8}};
  if (std::abs(average_precision(perfect, gts, "mug") - 1.0) > 1e-12) {
    detail = "perfect fixture AP != 1.0";
    return false;
  }

  DetectionSet staircase;
  staircase.detections = {{"img0", "mug", {0, 0, 10, 10}, 0.9},
                          {"img0", "mug", {40, 40, 50, 50}, 0.8},
                          {"img0", "mug", {20, 20, 30, 30}, 0.7}};
  double ap = average_precision(staircase, gts, "mug");
  if (std::abs(ap - 5.0 / 6.0) > 1e-12) {
    detail = "staircase fixture AP " + std::to_string(ap) + " != 5/6";
    return false;
  }

  DetectionSet noisy;
  Rng rng(107);
  for (int i = 0; i < 60; ++i) {
    double x = rng.uniform(0, 60);
    noisy.detections.push_back({"img0", "mug",
                                {x, x, x + rng.uniform(3, 12), x + rng.uniform(3, 12)},
                                rng.uniform()});
  }
  DetectionSet once = nms(noisy, 0.5);
  DetectionSet twice = nms(once, 0.5);
  if (once.detections.size() != twice.detections.size()) {
    detail = "nms not idempotent";
    return false;
  }
  for (std::size_t i = 0; i < once.detections.size(); ++i)
    if (once.detections[i].score != twice.detections[i].score ||
        !(once.detections[i].bbox == twice.detections[i].bbox)) {
      detail = "nms not idempotent (element mismatch)";
      return false;
    }
  detail = "fixture APs exact (1.0, 5/6); nms idempotent on 60 boxes";
  return true;
}

PipelineConfig e2e_config(const fs::path& root) {
  PipelineConfig cfg;
  cfg.dataset_root = (root / "data").string();
  cfg.output_root = (root / "out").string();
  cfg.seed = 11;
  cfg.augment_ratio = 5;
  cfg.train.steps = 2000;
  cfg.train.batch_size = 8;
  cfg.train.learning_rate = 3e-4;
  cfg.scene.episode_length = 20;
  cfg.n_expert = 2;
  cfg.eval_episodes = 20;
  return cfg;
}

bool criterion_e2e_determinism(std::string& detail) {
  double t0 = now_s();
  std::uint64_t hashes[2][2];
  for (int run = 0; run < 2; ++run) {
    fs::path root = fresh_dir("e2e-" + std::to_string(run));
    PipelineConfig cfg = e2e_config(root);
    if (cmd_synth(cfg) != kExitOk || cmd_extract(cfg) != kExitOk ||
        cmd_augment(cfg) != kExitOk || cmd_train(cfg) != kExitOk ||
        cmd_eval(cfg) != kExitOk) {
      detail = "pipeline stage failed on run " + std::to_string(run);
      return false;
    }
    hashes[run][0] = tree_hash(cfg.dataset_root);
    // Output tree: hash everything except the volatile run records, which
    // embed the absolute paths of this run's scratch directory.
    std::uint64_t h = 0xcbf29ce484222325ull;
    h = fnv1a_bytes(read_file(cfg.output_root + "/policy.bin").data(),
                    read_file(cfg.output_root + "/policy.bin").size(), h);
    h = fnv1a_bytes(read_file(cfg.output_root + "/train_log.jsonl").data(),
                    read_file(cfg.output_root + "/train_log.jsonl").size(), h);
    h = fnv1a_bytes(read_file(cfg.output_root + "/metrics.json").data(),
                    read_file(cfg.output_root + "/metrics.json").size(), h);
    h = fnv1a_bytes(read_file(cfg.output_root + "/reference_set.bin").data(),
                    read_file(cfg.output_root + "/reference_set.bin").size(), h);
    hashes[run][1] = h;
  }
  double dt = now_s() - t0;
  if (hashes[0][0] != hashes[1][0]) {
    detail = "dataset tree hashes differ between runs";
    return false;
  }
  if (hashes[0][1] != hashes[1][1]) {
    detail = "output hashes differ between runs";
    return false;
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf),
                "two extract->augment(5)->train(2k)->eval runs identical, %.1fs total", dt);
  detail = buf;
  return dt < 900.0;
}

SweepConfig sweep_config() {
  SweepConfig cfg;
  cfg.scene.episode_length = 20;
  cfg.train.steps = 1200;
  cfg.train.batch_size = 8;
  cfg.train.learning_rate = 3e-4;
  cfg.train.rcl.enabled = false;
  cfg.n_expert = 4;
  cfg.eval_episodes = 40;
  return cfg;
}

bool criterion_augmentation_gain(std::string& detail) {
  const std::vector<int> ratios = {0, 1, 3, 5, 8, 15, 20};
  const std::vector<std::uint64_t> seeds = {1, 2, 3};
  SweepResult r = ratio_sweep(ratios, seeds, sweep_config());

  fs::path dir = fresh_dir("sweep");
  write_sweep_csv(r, (dir / "sweep.csv").string());

  // CSV must cover the whole grid with successful cells.
  std::map<int, std::vector<double>> by_ratio;
  for (const auto& c : r.cells) {
    if (c.failed) {
      detail = "cell ratio=" + std::to_string(c.ratio) + " failed: " + c.error;
      return false;
    }
    by_ratio[c.ratio].push_back(c.ood_mse);
  }
  for (int ratio : ratios)
    if (by_ratio[ratio].size() != seeds.size()) {
      detail = "missing cells at ratio " + std::to_string(ratio);
      return false;
    }

  double base = median(by_ratio[0]);
  double best = base;
  int best_ratio = 0;
  for (int ratio : {1, 3, 5, 8}) {
    double m = median(by_ratio[ratio]);
    if (m < best) {
      best = m;
      best_ratio = ratio;
    }
  }
  double gain = 1.0 - best / base;
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "median OOD MSE %.4f @r=0 vs %.4f @r=%d (gain %.1f%%)", base,
                best, best_ratio, 100 * gain);
  detail = buf;
  return gain >= 0.20;
}

bool criterion_rcl_gain(std::string& detail) {
  // Singleton handling: samples without positives must log an exactly zero
  // contrastive term, batch-level and per-sample.
  {
    Rng rng(108);
    ContrastiveBatch b;
    b.temperature = 0.07;
    for (int i = 0; i < 5; ++i) {
      b.embeddings.push_back(random_unit(4, rng));
      b.labels.push_back(i);  // all distinct: every sample is a singleton
    }
    ContrastiveLossResult lr = region_contrastive_loss(b);
    if (lr.loss != 0.0 || lr.singleton_count != 5) {
      detail = "all-singleton batch did not log exactly 0";
      return false;
    }
    b.labels = {0, 0, 1, 2, 3};  // mixed: three singletons
    lr = region_contrastive_loss(b);
    if (lr.singleton_count != 3 || lr.per_sample[2] != 0.0 ||
        lr.per_sample[3] != 0.0 || lr.per_sample[4] != 0.0) {
      detail = "singleton samples contributed a nonzero term";
      return false;
    }
  }

  // Seven seeds: training-outcome variance between seeds is large relative to
  // the RCL effect, so a wider paired comparison keeps the median stable.
  const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7};
  SweepConfig base = sweep_config();
  std::vector<double> with_rcl, without_rcl;
  long singleton_batches = 0;
  bool log_consistent = true;

  for (std::uint64_t seed : seeds) {
    SyntheticSceneConfig scene = base.scene;
    scene.seed = seed;
    std::vector<Trajectory> expert = generate_reach_dataset(scene, base.n_expert);
    std::vector<Trajectory> augmented =
        augment_reach_dataset(expert, 5, seed * 7919 + 5, "procedural");
    std::vector<Trajectory> all = expert;
    for (auto& a : augmented) all.push_back(std::move(a));

    for (bool rcl : {false, true}) {
      TrainConfig train = base.train;
      train.seed = seed;
      train.rcl.enabled = rcl;
      train.rcl.loss_weight = 0.5;
      TrainResult tr = train_policy(all, train);
      EvalMetrics m = evaluate_ood(as_policy_fn(tr.policy), scene,
                                   base.eval_episodes, seed + 17);
      (rcl ? with_rcl : without_rcl).push_back(m.action_mse);
      if (rcl)
        for (const auto& e : tr.log) {
          if (e.rcl_singletons > 0) ++singleton_batches;
          if (!std::isfinite(e.rcl) ||
              std::abs(e.total - (e.l2 + 0.5 * e.rcl)) > 1e-12)
            log_consistent = false;
        }
    }
  }
  double mw = median(with_rcl), mo = median(without_rcl);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "median OOD MSE rcl=%.4f vs none=%.4f; %ld batches had "
                "singletons (terms zeroed)",
                mw, mo, singleton_batches);
  detail = buf;
  return mw <= mo && log_consistent;
}

bool criterion_prompt_stats(std::string& detail) {
  PromptLibrary lib = default_prompt_library();
  Rng rng(20240601);
  const int n = 100000;
  std::map<MaterialCategory, int> counts;
  for (int i = 0; i < n; ++i) counts[sample_prompt(lib, rng).category]++;
  double wood = counts[MaterialCategory::wood] / double(n);
  double stone = counts[MaterialCategory::stone] / double(n);
  double comp = counts[MaterialCategory::composite] / double(n);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "wood %.4f stone %.4f composite %.4f", wood,
                stone, comp);
  detail = buf;
  return std::abs(wood - 0.58) <= 0.01 && std::abs(stone - 0.35) <= 0.01 &&
         std::abs(comp - 0.07) <= 0.01;
}

}  // namespace

int main() {
  std::vector<Criterion> criteria = {
      {1, "compositing exactness (1000 random triples, bit-exact, <10s)",
       criterion_compositing},
      {2, "contrastive loss oracle equivalence (<=1e-6 rel, batches 2-8 x 200, <30s)",
       criterion_loss_oracle},
      {3, "analytic gradient vs central differences (<=1e-4 rel, 120 batches, <2min)",
       criterion_gradient},
      {4, "attentive gating oracle equivalence (<=1e-12, up to C=8, 8x8)",
       criterion_attention},
      {5, "matching agrees with brute-force argmax (1000 cases incl. ties)",
       criterion_matching},
      {6, "propagation fidelity (50-frame fixture, per-frame IoU >= 0.99)",
       criterion_propagation},
      {7, "mAP fixtures exact and NMS idempotent", criterion_map},
      {8, "end-to-end determinism (two seeded runs, identical hashes, <15min)",
       criterion_e2e_determinism},
      {9, "augmentation gain (>=20% median OOD MSE reduction at best ratio)",
       criterion_augmentation_gain},
      {10, "rcl gain at ratio 5 (median OOD MSE <= baseline; 0 singleton terms)",
       criterion_rcl_gain},
      {11, "prompt library stats (100k draws within 1% of 58/35/7)",
       criterion_prompt_stats},
  };

  for (auto& c : criteria) {
    std::string detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] criterion %2d: %s%s%s\n", ok ? "PASS" : "FAIL", c.id,
                c.name, detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
  }
  if (g_failures) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all 11 criteria passed\n");
  return 0;
}
