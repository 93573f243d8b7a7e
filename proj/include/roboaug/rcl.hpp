// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "roboaug/image.hpp"

namespace roboaug {

enum class FeatureSource { full_image, object_image, attended };

// Dense C x H x W feature map, channel-major.
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> values;
  FeatureSource source = FeatureSource::full_image;

  FeatureMap() = default;
  FeatureMap(int c, int h, int w, FeatureSource s = FeatureSource::full_image)
      : channels(c), height(h), width(w),
        values(static_cast<std::size_t>(c) * h * w, 0.0), source(s) {}

  double& at(int c, int y, int x) {
    return values[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const {
    return values[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  bool same_shape(const FeatureMap& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

// Channel-mixing linear map applied at every spatial position; the learnable
// attention module of the gating step.
struct AttentionParams {
  int channels = 0;
  std::vector<double> weight;  // channels x channels, row-major
  std::vector<double> bias;    // channels

  AttentionParams() = default;
  explicit AttentionParams(int c)
      : channels(c), weight(static_cast<std::size_t>(c) * c, 0.0), bias(c, 0.0) {}

  double w(int out, int in) const {
    return weight[static_cast<std::size_t>(out) * channels + in];
  }
};

struct ContrastiveBatch {
  std::vector<std::vector<double>> embeddings;  // unit norm
  std::vector<int> labels;
  double temperature = 0.07;

  void validate() const;
};

struct RCLConfig {
  bool enabled = true;
  double temperature = 0.07;
  double loss_weight = 0.5;
};

struct ContrastiveLossResult {
  double loss = 0.0;
  std::vector<double> per_sample;
  std::vector<bool> singleton;  // true where the sample had no positives
  int singleton_count = 0;
};

// I_obj = mask * I, channelwise.
Image extract_object_image(const Image& image, const Mask& mask);

// gate = sigmoid(A(z) * z), elementwise; returns gate * z_obj.
FeatureMap attentive_features(const FeatureMap& z, const FeatureMap& z_obj,
                              const AttentionParams& params);

// Spatial mean per channel, then L2 normalization.
std::vector<double> pool_embedding(const FeatureMap& z_att);

// Supervised region-contrastive loss with max-subtraction stabilization.
// Samples without positives contribute zero and are flagged.
ContrastiveLossResult region_contrastive_loss(const ContrastiveBatch& batch);

// Analytic gradient of the loss w.r.t. each embedding (unconstrained form,
// before any normalization projection).
std::vector<std::vector<double>> rcl_gradient(const ContrastiveBatch& batch);

double mean_squared_error(const std::vector<double>& pred,
                          const std::vector<double>& truth);

// L2 action error + loss_weight * L_RC.
double combined_loss(const std::vector<double>& action_pred,
                     const std::vector<double>& action_true,
                     const ContrastiveBatch& batch, const RCLConfig& cfg);

}  // namespace roboaug
