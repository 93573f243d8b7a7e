// SPDX-License-Identifier: Apache-2.0
// Independent reference implementations used to cross-check the library.
// Everything here is written straight from the definitions, favoring clarity
// over speed, and deliberately shares no code with src/.
#pragma once

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "roboaug/image.hpp"

namespace oracles {

// out = M * I + (1 - M) * I_bg, per pixel, binary mask.
inline roboaug::Image naive_composite(const roboaug::Image& img,
                                      const roboaug::Mask& mask,
                                      const roboaug::Image& bg) {
  roboaug::Image out(img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        out.at(y, x, c) = mask.at(y, x) ? img.at(y, x, c) : bg.at(y, x, c);
  return out;
}

inline roboaug::Image naive_composite_soft(const roboaug::Image& img,
                                           const std::vector<double>& m,
                                           const roboaug::Image& bg) {
  roboaug::Image out(img.height, img.width);
  std::fesetround(FE_TONEAREST);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double a = m[static_cast<std::size_t>(y) * img.width + x];
      for (int c = 0; c < 3; ++c) {
        double v = a * img.at(y, x, c) + (1.0 - a) * bg.at(y, x, c);
        out.at(y, x, c) =
            static_cast<std::uint8_t>(std::nearbyint(std::clamp(v, 0.0, 255.0)));
      }
    }
  return out;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

// One matching decision, written straight from the two-route rule:
// high-confidence detections keep their (registered) label; everything else
// goes to the cosine argmax over references, rejected below the floor.
// Returns the assigned category or "" for rejected.
struct MatchDecision {
  std::string category;
  bool shortcut = false;
};

inline std::string normalize(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  std::string out = s.substr(b, e - b + 1);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline MatchDecision brute_force_match(
    const std::vector<double>& embedding, double score,
    const std::string* detector_label,
    const std::vector<std::pair<std::string, std::vector<double>>>& refs,
    double delta, double floor) {
  if (score > delta && detector_label) {
    for (const auto& [cat, emb] : refs)
      if (normalize(cat) == normalize(*detector_label)) return {cat, true};
  }
  // Exhaustive argmax; ties to the lexicographically smallest category.
  std::string best_cat;
  double best = -2.0;
  for (const auto& [cat, emb] : refs) {
    double s = cosine(embedding, emb);
    if (s > best || (s == best && cat < best_cat)) {
      best = s;
      best_cat = cat;
    }
  }
  if (best < floor) return {"", false};
  return {best_cat, false};
}

// Supervised contrastive loss, direct double loop over the definition:
// L = sum_i -1/|P(i)| sum_{p in P(i)} log( exp(z_i.z_p/d) / sum_{s in S(i)} exp(z_i.z_s/d) )
inline double reference_rcl_loss(const std::vector<std::vector<double>>& z,
                                 const std::vector<int>& labels, double d,
                                 std::vector<double>* per_sample = nullptr) {
  std::size_t n = z.size();
  double total = 0;
  if (per_sample) per_sample->assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> positives;
    for (std::size_t p = 0; p < n; ++p)
      if (p != i && labels[p] == labels[i]) positives.push_back(p);
    if (positives.empty()) continue;  // singleton: contributes zero
    double li = 0;
    for (std::size_t p : positives) {
      double dot_ip = 0;
      for (std::size_t k = 0; k < z[i].size(); ++k) dot_ip += z[i][k] * z[p][k];
      double denom = 0;
      for (std::size_t s = 0; s < n; ++s) {
        if (s == i) continue;
        double dot_is = 0;
        for (std::size_t k = 0; k < z[i].size(); ++k) dot_is += z[i][k] * z[s][k];
        denom += std::exp(dot_is / d);
      }
      li += -std::log(std::exp(dot_ip / d) / denom);
    }
    li /= static_cast<double>(positives.size());
    if (per_sample) (*per_sample)[i] = li;
    total += li;
  }
  return total;
}

// Attentive gating, elementwise: a = sigmoid((W z + b) * z); out = a * z_obj.
inline std::vector<double> reference_attentive(
    int C, int H, int W, const std::vector<double>& z,
    const std::vector<double>& z_obj, const std::vector<double>& weight,
    const std::vector<double>& bias) {
  std::vector<double> out(z.size());
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < C; ++c) {
        double mixed = bias[c];
        for (int k = 0; k < C; ++k)
          mixed += weight[static_cast<std::size_t>(c) * C + k] *
                   z[(static_cast<std::size_t>(k) * H + y) * W + x];
        std::size_t idx = (static_cast<std::size_t>(c) * H + y) * W + x;
        double gate = 1.0 / (1.0 + std::exp(-mixed * z[idx]));
        out[idx] = gate * z_obj[idx];
      }
  return out;
}

}  // namespace oracles
