// SPDX-License-Identifier: Apache-2.0
#include "roboaug/rcl.hpp"

#include <algorithm>
#include <cmath>

namespace roboaug {

void ContrastiveBatch::validate() const {
  if (embeddings.size() != labels.size())
    fail(ErrorCode::ShapeMismatch, "batch: embeddings/labels size mismatch");
  if (embeddings.size() < 2)
    fail(ErrorCode::DegenerateBatch, "batch needs at least 2 samples");
  if (temperature <= 0)
    fail(ErrorCode::ConfigError, "temperature must be positive");
  std::size_t dim = embeddings.front().size();
  for (const auto& e : embeddings) {
    if (e.size() != dim) fail(ErrorCode::ShapeMismatch, "batch: mixed dims");
    double n2 = 0;
    for (double v : e) n2 += v * v;
    if (std::abs(std::sqrt(n2) - 1.0) > 1e-6)
      fail(ErrorCode::NonUnitEmbedding, "batch: embedding not unit norm");
  }
}

Image extract_object_image(const Image& image, const Mask& mask) {
  if (mask.height != image.height || mask.width != image.width)
    fail(ErrorCode::DimMismatch, "extract_object_image: dimension mismatch");
  Image out(image.height, image.width);
  for (std::size_t i = 0; i < mask.data.size(); ++i) {
    if (mask.data[i] > 1)
      fail(ErrorCode::MaskRangeError, "extract_object_image: non-binary mask");
    if (mask.data[i])
      for (int c = 0; c < 3; ++c) out.data[i * 3 + c] = image.data[i * 3 + c];
  }
  return out;
}

FeatureMap attentive_features(const FeatureMap& z, const FeatureMap& z_obj,
                              const AttentionParams& params) {
  if (!z.same_shape(z_obj))
    fail(ErrorCode::ShapeMismatch, "attentive_features: z/z_obj shape mismatch");
  if (params.channels != z.channels)
    fail(ErrorCode::ShapeMismatch, "attentive_features: params channel mismatch");
  FeatureMap out(z.channels, z.height, z.width, FeatureSource::attended);
  for (int y = 0; y < z.height; ++y) {
    for (int x = 0; x < z.width; ++x) {
      for (int c = 0; c < z.channels; ++c) {
        double mixed = params.bias[c];
        for (int k = 0; k < z.channels; ++k) mixed += params.w(c, k) * z.at(k, y, x);
        double gate = 1.0 / (1.0 + std::exp(-(mixed * z.at(c, y, x))));
        out.at(c, y, x) = gate * z_obj.at(c, y, x);
      }
    }
  }
  return out;
}

std::vector<double> pool_embedding(const FeatureMap& z_att) {
  std::vector<double> out(z_att.channels, 0.0);
  double inv_hw = 1.0 / (static_cast<double>(z_att.height) * z_att.width);
  for (int c = 0; c < z_att.channels; ++c) {
    double sum = 0;
    for (int y = 0; y < z_att.height; ++y)
      for (int x = 0; x < z_att.width; ++x) sum += z_att.at(c, y, x);
    out[c] = sum * inv_hw;
  }
  double n2 = 0;
  for (double v : out) n2 += v * v;
  if (n2 == 0)
    fail(ErrorCode::ZeroFeature, "pool_embedding: all-zero feature map");
  double inv = 1.0 / std::sqrt(n2);
  for (double& v : out) v *= inv;
  return out;
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

ContrastiveLossResult region_contrastive_loss(const ContrastiveBatch& batch) {
  batch.validate();
  const std::size_t n = batch.embeddings.size();
  const double inv_d = 1.0 / batch.temperature;

  ContrastiveLossResult result;
  result.per_sample.assign(n, 0.0);
  result.singleton.assign(n, false);

  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> positives;
    for (std::size_t p = 0; p < n; ++p)
      if (p != i && batch.labels[p] == batch.labels[i]) positives.push_back(p);
    if (positives.empty()) {
      result.singleton[i] = true;
      ++result.singleton_count;
      continue;
    }
    // log-sum-exp over S(i) = all j != i, stabilized by the max logit.
    double max_logit = -INFINITY;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      max_logit = std::max(max_logit, dot(batch.embeddings[i], batch.embeddings[j]) * inv_d);
    }
    double denom = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      denom += std::exp(dot(batch.embeddings[i], batch.embeddings[j]) * inv_d - max_logit);
    }
    double log_denom = std::log(denom) + max_logit;
    double term = 0;
    for (std::size_t p : positives)
      term += dot(batch.embeddings[i], batch.embeddings[p]) * inv_d - log_denom;
    double sample_loss = -term / static_cast<double>(positives.size());
    result.per_sample[i] = sample_loss;
    result.loss += sample_loss;
  }
  return result;
}

std::vector<std::vector<double>> rcl_gradient(const ContrastiveBatch& batch) {
  batch.validate();
  const std::size_t n = batch.embeddings.size();
  const std::size_t dim = batch.embeddings.front().size();
  const double inv_d = 1.0 / batch.temperature;

  std::vector<std::vector<double>> grad(n, std::vector<double>(dim, 0.0));

  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> positives;
    for (std::size_t p = 0; p < n; ++p)
      if (p != i && batch.labels[p] == batch.labels[i]) positives.push_back(p);
    if (positives.empty()) continue;
    double inv_np = 1.0 / static_cast<double>(positives.size());

    // Softmax over S(i).
    double max_logit = -INFINITY;
    std::vector<double> logits(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      logits[j] = dot(batch.embeddings[i], batch.embeddings[j]) * inv_d;
      max_logit = std::max(max_logit, logits[j]);
    }
    double denom = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) denom += std::exp(logits[j] - max_logit);

    // d/dz_i: (1/d) [ sum_j s_ij z_j - (1/|P|) sum_p z_p ]
    // d/dz_q (q != i): (1/d) [ s_iq - 1[q in P(i)]/|P| ] z_i
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double s_ij = std::exp(logits[j] - max_logit) / denom;
      bool is_pos = batch.labels[j] == batch.labels[i];
      double coef = inv_d * (s_ij - (is_pos ? inv_np : 0.0));
      for (std::size_t k = 0; k < dim; ++k) {
        grad[i][k] += coef * batch.embeddings[j][k];
        grad[j][k] += coef * batch.embeddings[i][k];
      }
    }
  }
  return grad;
}

double mean_squared_error(const std::vector<double>& pred,
                          const std::vector<double>& truth) {
  if (pred.size() != truth.size() || pred.empty())
    fail(ErrorCode::ShapeMismatch, "mean_squared_error: shape mismatch");
  double s = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double d = pred[i] - truth[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

double combined_loss(const std::vector<double>& action_pred,
                     const std::vector<double>& action_true,
                     const ContrastiveBatch& batch, const RCLConfig& cfg) {
  double l2 = mean_squared_error(action_pred, action_true);
  if (!cfg.enabled || cfg.loss_weight == 0.0) return l2;
  ContrastiveBatch b = batch;
  b.temperature = cfg.temperature;
  return l2 + cfg.loss_weight * region_contrastive_loss(b).loss;
}

}  // namespace roboaug
