// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "roboaug/region_match.hpp"

namespace roboaug {

struct GtInstance {
  std::string category;
  Box bbox;
};

struct GroundTruthSet {
  std::map<std::string, std::vector<GtInstance>> images;  // image_id -> boxes
  std::vector<std::string> categories;

  void validate() const;
};

struct Detection {
  std::string image_id;
  std::string category;
  Box bbox;
  double score = 0.0;
};

struct DetectionSet {
  std::vector<Detection> detections;
};

struct CategoryCounts {
  int tp = 0, fp = 0, fn = 0;
};

struct EvalReport {
  std::map<std::string, double> per_category_ap;
  std::map<std::string, CategoryCounts> counts;  // at the best-F1 operating point
  double map50 = 0.0;
  std::string method;
};

double box_iou(const Box& a, const Box& b);

// All-point interpolated AP (COCO-style) at a single IoU threshold, with
// score-descending greedy matching; ties broken by higher IoU then input order.
double average_precision(const DetectionSet& dets, const GroundTruthSet& gts,
                         const std::string& category, double iou_thresh = 0.5);

EvalReport map50(const DetectionSet& dets, const GroundTruthSet& gts,
                 double iou_thresh = 0.5);

// Class-wise greedy NMS keeping the max-score box per cluster.
DetectionSet nms(const DetectionSet& dets, double iou_thresh = 0.5);

// Runs the detector once per prompt, pools per-category detections, then NMS.
DetectionSet ensemble_prompts(
    DetectorBackend& detector, const Image& image, const std::string& image_id,
    const std::map<std::string, std::vector<std::string>>& prompts_by_category,
    double box_threshold = 0.15, double text_threshold = 0.15,
    double nms_iou = 0.5);

// Replaces each detection's category by the one-shot matching result;
// rejected detections are dropped.
DetectionSet reclassify_with_matching(
    const DetectionSet& dets, const ReferenceSet& refs,
    EmbedderBackend& embedder, const std::map<std::string, Image>& images,
    double delta_threshold = 0.7, double similarity_floor = 0.3);

// Line-delimited records: image_id category x_min y_min x_max y_max [score]
GroundTruthSet load_ground_truth(const std::string& path);
DetectionSet load_detections(const std::string& path);
void save_detections(const DetectionSet& dets, const std::string& path);

void write_report_csv(const EvalReport& report, const std::string& path);
void write_report_chart(const EvalReport& report, const std::string& path);

}  // namespace roboaug
