// SPDX-License-Identifier: Apache-2.0
#include "roboaug/detect_eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "roboaug/plot.hpp"

namespace roboaug {

void GroundTruthSet::validate() const {
  for (const auto& [image_id, boxes] : images)
    for (const auto& g : boxes) {
      if (!g.bbox.valid())
        fail(ErrorCode::InvalidBox, "ground truth box invalid in " + image_id);
      if (std::find(categories.begin(), categories.end(), g.category) ==
          categories.end())
        fail(ErrorCode::UnknownCategory,
             "ground truth category not in registry: " + g.category);
    }
}

double box_iou(const Box& a, const Box& b) {
  if (!a.valid() || !b.valid())
    fail(ErrorCode::InvalidBox, "box_iou: invalid box");
  double ix0 = std::max(a.x_min, b.x_min), iy0 = std::max(a.y_min, b.y_min);
  double ix1 = std::min(a.x_max, b.x_max), iy1 = std::min(a.y_max, b.y_max);
  double iw = ix1 - ix0, ih = iy1 - iy0;
  if (iw <= 0 || ih <= 0) return 0.0;
  double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

namespace {

struct MatchedDetection {
  double score;
  bool tp;
  std::size_t order;  // original input order, for tie stability
};

// Greedy matching per image: detections in score-descending order (ties by
// input order), each claiming the highest-IoU unmatched GT above threshold.
std::vector<MatchedDetection> match_category(const DetectionSet& dets,
                                             const GroundTruthSet& gts,
                                             const std::string& category,
                                             double iou_thresh,
                                             std::size_t* total_gt) {
  *total_gt = 0;
  std::map<std::string, std::vector<const GtInstance*>> gt_by_image;
  for (const auto& [image_id, boxes] : gts.images)
    for (const auto& g : boxes)
      if (g.category == category) {
        gt_by_image[image_id].push_back(&g);
        ++*total_gt;
      }

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < dets.detections.size(); ++i)
    if (dets.detections[i].category == category) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets.detections[a].score > dets.detections[b].score;
  });

  std::map<std::string, std::vector<bool>> used;
  for (auto& [image_id, boxes] : gt_by_image)
    used[image_id].assign(boxes.size(), false);

  std::vector<MatchedDetection> out;
  for (std::size_t idx : order) {
    const Detection& d = dets.detections[idx];
    MatchedDetection m{d.score, false, idx};
    auto it = gt_by_image.find(d.image_id);
    if (it != gt_by_image.end()) {
      double best_iou = 0;
      int best_gt = -1;
      for (std::size_t g = 0; g < it->second.size(); ++g) {
        if (used[d.image_id][g]) continue;
        double iou = box_iou(d.bbox, it->second[g]->bbox);
        if (iou >= iou_thresh && iou > best_iou) {
          best_iou = iou;
          best_gt = static_cast<int>(g);
        }
      }
      if (best_gt >= 0) {
        used[d.image_id][best_gt] = true;
        m.tp = true;
      }
    }
    out.push_back(m);
  }
  return out;
}

// Area under the all-point interpolated precision-recall curve.
double ap_from_matches(const std::vector<MatchedDetection>& matches,
                       std::size_t total_gt) {
  if (total_gt == 0) return 0.0;
  if (matches.empty()) return 0.0;
  std::vector<double> precision, recall;
  std::size_t tp = 0, fp = 0;
  for (const auto& m : matches) {
    if (m.tp) ++tp; else ++fp;
    precision.push_back(static_cast<double>(tp) / (tp + fp));
    recall.push_back(static_cast<double>(tp) / total_gt);
  }
  // Precision envelope (monotone non-increasing from the right).
  for (int i = static_cast<int>(precision.size()) - 2; i >= 0; --i)
    precision[i] = std::max(precision[i], precision[i + 1]);
  double ap = 0, prev_recall = 0;
  for (std::size_t i = 0; i < recall.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

}  // namespace

double average_precision(const DetectionSet& dets, const GroundTruthSet& gts,
                         const std::string& category, double iou_thresh) {
  if (iou_thresh <= 0 || iou_thresh > 1)
    fail(ErrorCode::ConfigError, "average_precision: iou_thresh outside (0,1]");
  if (std::find(gts.categories.begin(), gts.categories.end(), category) ==
      gts.categories.end())
    fail(ErrorCode::UnknownCategory, "average_precision: unknown category " + category);
  std::size_t total_gt = 0;
  auto matches = match_category(dets, gts, category, iou_thresh, &total_gt);
  return ap_from_matches(matches, total_gt);
}

EvalReport map50(const DetectionSet& dets, const GroundTruthSet& gts,
                 double iou_thresh) {
  gts.validate();
  bool any_gt = false;
  for (const auto& [id, boxes] : gts.images) any_gt |= !boxes.empty();
  if (!any_gt) fail(ErrorCode::EmptyGroundTruth, "map50: no ground truth boxes");

  EvalReport report;
  double sum = 0;
  int counted = 0;
  for (const auto& category : gts.categories) {
    std::size_t total_gt = 0;
    auto matches = match_category(dets, gts, category, iou_thresh, &total_gt);
    if (total_gt == 0) continue;  // undefined AP; excluded from the mean
    double ap = ap_from_matches(matches, total_gt);
    report.per_category_ap[category] = ap;
    sum += ap;
    ++counted;

    // Counts at the best-F1 prefix of the score-sorted detections.
    CategoryCounts best{0, 0, static_cast<int>(total_gt)};
    double best_f1 = 0;
    int tp = 0, fp = 0;
    for (const auto& m : matches) {
      if (m.tp) ++tp; else ++fp;
      double prec = static_cast<double>(tp) / (tp + fp);
      double rec = static_cast<double>(tp) / total_gt;
      double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0;
      if (f1 > best_f1) {
        best_f1 = f1;
        best = {tp, fp, static_cast<int>(total_gt) - tp};
      }
    }
    report.counts[category] = best;
  }
  report.map50 = counted ? sum / counted : 0.0;
  return report;
}

DetectionSet nms(const DetectionSet& dets, double iou_thresh) {
  std::vector<std::size_t> order(dets.detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets.detections[a].score > dets.detections[b].score;
  });
  std::vector<bool> suppressed(dets.detections.size(), false);
  DetectionSet out;
  for (std::size_t oi = 0; oi < order.size(); ++oi) {
    std::size_t i = order[oi];
    if (suppressed[i]) continue;
    const Detection& keep = dets.detections[i];
    out.detections.push_back(keep);
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      std::size_t j = order[oj];
      if (suppressed[j]) continue;
      const Detection& other = dets.detections[j];
      if (other.image_id != keep.image_id || other.category != keep.category)
        continue;
      if (box_iou(keep.bbox, other.bbox) >= iou_thresh) suppressed[j] = true;
    }
  }
  return out;
}

DetectionSet ensemble_prompts(
    DetectorBackend& detector, const Image& image, const std::string& image_id,
    const std::map<std::string, std::vector<std::string>>& prompts_by_category,
    double box_threshold, double text_threshold, double nms_iou) {
  DetectionSet pooled;
  for (const auto& [category, prompts] : prompts_by_category) {
    if (prompts.empty())
      fail(ErrorCode::ConfigError,
           "ensemble_prompts: no prompts for category " + category);
    for (const auto& prompt : prompts) {
      std::vector<Proposal> props =
          detector.detect(image, {prompt}, box_threshold, text_threshold);
      for (const auto& p : props) {
        Detection d;
        d.image_id = image_id;
        d.category = category;
        d.bbox = p.bbox;
        d.score = p.score;
        pooled.detections.push_back(std::move(d));
      }
    }
  }
  return nms(pooled, nms_iou);
}

DetectionSet reclassify_with_matching(
    const DetectionSet& dets, const ReferenceSet& refs,
    EmbedderBackend& embedder, const std::map<std::string, Image>& images,
    double delta_threshold, double similarity_floor) {
  DetectionSet out;
  for (const Detection& d : dets.detections) {
    auto img_it = images.find(d.image_id);
    if (img_it == images.end())
      fail(ErrorCode::MissingFile, "reclassify: no image for " + d.image_id);
    Proposal p;
    p.bbox = d.bbox;
    p.score = d.score;
    p.detector_label = d.category;
    p.embedding = embedder.embed(crop_resize(img_it->second, d.bbox, 224));
    std::vector<Assignment> assignments =
        match_candidates({p}, refs, delta_threshold, similarity_floor);
    const Assignment& a = assignments.front();
    if (a.route == MatchRoute::rejected) continue;
    Detection nd = d;
    nd.category = a.category;
    out.detections.push_back(std::move(nd));
  }
  return out;
}

GroundTruthSet load_ground_truth(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::MissingFile, "cannot read ground truth: " + path);
  GroundTruthSet gts;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ls(line);
    std::string image_id;
    GtInstance g;
    if (!(ls >> image_id >> g.category >> g.bbox.x_min >> g.bbox.y_min >>
          g.bbox.x_max >> g.bbox.y_max))
      fail(ErrorCode::SchemaViolation, "bad ground truth record: " + line);
    if (!g.bbox.valid())
      fail(ErrorCode::InvalidBox, "degenerate ground truth box: " + line);
    if (std::find(gts.categories.begin(), gts.categories.end(), g.category) ==
        gts.categories.end())
      gts.categories.push_back(g.category);
    gts.images[image_id].push_back(std::move(g));
  }
  gts.validate();
  return gts;
}

DetectionSet load_detections(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::MissingFile, "cannot read detections: " + path);
  DetectionSet dets;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ls(line);
    Detection d;
    if (!(ls >> d.image_id >> d.category >> d.bbox.x_min >> d.bbox.y_min >>
          d.bbox.x_max >> d.bbox.y_max >> d.score))
      fail(ErrorCode::SchemaViolation, "bad detection record: " + line);
    if (!d.bbox.valid())
      fail(ErrorCode::InvalidBox, "degenerate detection box: " + line);
    if (d.score < 0 || d.score > 1)
      fail(ErrorCode::SchemaViolation, "detection score outside [0,1]: " + line);
    dets.detections.push_back(std::move(d));
  }
  return dets;
}

void save_detections(const DetectionSet& dets, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::MissingFile, "cannot write detections: " + path);
  for (const auto& d : dets.detections) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s %s %.17g %.17g %.17g %.17g %.17g\n",
                  d.image_id.c_str(), d.category.c_str(), d.bbox.x_min,
                  d.bbox.y_min, d.bbox.x_max, d.bbox.y_max, d.score);
    f << buf;
  }
}

void write_report_csv(const EvalReport& report, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::MissingFile, "cannot write report: " + path);
  f << "category,ap50,tp,fp,fn\n";
  for (const auto& [category, ap] : report.per_category_ap) {
    auto it = report.counts.find(category);
    CategoryCounts c = it != report.counts.end() ? it->second : CategoryCounts{};
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s,%.10g,%d,%d,%d\n", category.c_str(), ap,
                  c.tp, c.fp, c.fn);
    f << buf;
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "mAP,%.10g,,,\n", report.map50);
  f << buf;
}

void write_report_chart(const EvalReport& report, const std::string& path) {
  std::vector<std::pair<std::string, double>> bars;
  for (const auto& [category, ap] : report.per_category_ap)
    bars.emplace_back(category, ap);
  bars.emplace_back("MAP", report.map50);
  write_bar_chart(path, "AP AT IOU 0.5 PER CATEGORY", bars, 1.0);
}

}  // namespace roboaug
