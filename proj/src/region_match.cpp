// SPDX-License-Identifier: Apache-2.0
#include "roboaug/region_match.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace roboaug {

void ReferenceSet::validate() const {
  if (entries.empty())
    fail(ErrorCode::EmptyReferenceSet, "reference set has no entries");
  std::vector<std::string> seen;
  for (const auto& e : entries) {
    if (static_cast<int>(e.embedding.size()) != dim)
      fail(ErrorCode::DimMismatch,
           "reference " + e.category + ": dim " +
               std::to_string(e.embedding.size()) + " != " + std::to_string(dim));
    double n2 = 0;
    for (double v : e.embedding) n2 += v * v;
    if (std::abs(std::sqrt(n2) - 1.0) > 1e-6)
      fail(ErrorCode::NonUnitEmbedding,
           "reference " + e.category + ": not unit norm");
    if (std::find(seen.begin(), seen.end(), e.category) != seen.end())
      fail(ErrorCode::SchemaViolation, "duplicate reference category: " + e.category);
    seen.push_back(e.category);
  }
}

Image crop_resize(const Image& image, const Box& bbox, int size) {
  int x0 = static_cast<int>(std::floor(bbox.x_min));
  int y0 = static_cast<int>(std::floor(bbox.y_min));
  int x1 = static_cast<int>(std::ceil(bbox.x_max));
  int y1 = static_cast<int>(std::ceil(bbox.y_max));
  x0 = std::clamp(x0, 0, image.width);
  x1 = std::clamp(x1, 0, image.width);
  y0 = std::clamp(y0, 0, image.height);
  y1 = std::clamp(y1, 0, image.height);
  int cw = x1 - x0, ch = y1 - y0;
  if (cw <= 0 || ch <= 0)
    fail(ErrorCode::DegenerateBox, "crop_resize: zero-area box");

  // Pad to square with edge replication, centering the crop.
  int side = std::max(cw, ch);
  int pad_x = (side - cw) / 2;
  int pad_y = (side - ch) / 2;
  Image square(side, side);
  for (int y = 0; y < side; ++y) {
    int sy = std::clamp(y - pad_y, 0, ch - 1) + y0;
    for (int x = 0; x < side; ++x) {
      int sx = std::clamp(x - pad_x, 0, cw - 1) + x0;
      for (int c = 0; c < 3; ++c) square.at(y, x, c) = image.at(sy, sx, c);
    }
  }

  // Bilinear resample to size x size.
  Image out(size, size);
  double scale = static_cast<double>(side) / size;
  for (int y = 0; y < size; ++y) {
    double fy = (y + 0.5) * scale - 0.5;
    int iy = static_cast<int>(std::floor(fy));
    double wy = fy - iy;
    int y_lo = std::clamp(iy, 0, side - 1);
    int y_hi = std::clamp(iy + 1, 0, side - 1);
    for (int x = 0; x < size; ++x) {
      double fx = (x + 0.5) * scale - 0.5;
      int ix = static_cast<int>(std::floor(fx));
      double wx = fx - ix;
      int x_lo = std::clamp(ix, 0, side - 1);
      int x_hi = std::clamp(ix + 1, 0, side - 1);
      for (int c = 0; c < 3; ++c) {
        double top = (1 - wx) * square.at(y_lo, x_lo, c) + wx * square.at(y_lo, x_hi, c);
        double bot = (1 - wx) * square.at(y_hi, x_lo, c) + wx * square.at(y_hi, x_hi, c);
        double v = (1 - wy) * top + wy * bot;
        out.at(y, x, c) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return out;
}

double cosine_similarity(const std::vector<double>& a,
                         const std::vector<double>& b) {
  if (a.size() != b.size())
    fail(ErrorCode::DimMismatch, "cosine_similarity: dim mismatch");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0)
    fail(ErrorCode::ZeroVector, "cosine_similarity: zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

ReferenceSet build_reference_set(
    const Frame& frame, const std::vector<std::pair<std::string, Box>>& boxes,
    EmbedderBackend& embedder, int crop_size) {
  if (boxes.empty())
    fail(ErrorCode::EmptyReferenceSet, "build_reference_set: no boxes");
  ReferenceSet refs;
  refs.dim = embedder.dim();
  refs.source_frame = frame.index;
  for (const auto& [category, bbox] : boxes) {
    if (bbox.area() <= 0)
      fail(ErrorCode::DegenerateBox, "reference box for " + category + " has zero area");
    Image crop = crop_resize(frame.image, bbox, crop_size);
    std::vector<double> emb = embedder.embed(crop);
    if (static_cast<int>(emb.size()) != refs.dim)
      fail(ErrorCode::BackendFailure, "embedder returned wrong dimension");
    double n2 = 0;
    for (double v : emb) n2 += v * v;
    if (n2 == 0) fail(ErrorCode::BackendFailure, "embedder returned zero vector");
    double inv = 1.0 / std::sqrt(n2);
    for (double& v : emb) v *= inv;
    refs.entries.push_back({category, std::move(emb)});
  }
  refs.validate();
  return refs;
}

namespace {

std::string normalize_label(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  std::string out = s.substr(b, e - b + 1);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::vector<Assignment> match_candidates(const std::vector<Proposal>& proposals,
                                         const ReferenceSet& refs,
                                         double delta_threshold,
                                         double similarity_floor) {
  refs.validate();
  std::vector<Assignment> out;
  out.reserve(proposals.size());
  for (const Proposal& p : proposals) {
    Assignment a;
    a.proposal = p;

    // Confidence shortcut: accept the detector's own label when it maps to
    // a registered category.
    if (p.score > delta_threshold && p.detector_label) {
      std::string want = normalize_label(*p.detector_label);
      const ReferenceSet::Entry* hit = nullptr;
      for (const auto& e : refs.entries)
        if (normalize_label(e.category) == want) {
          hit = &e;
          break;
        }
      if (hit) {
        a.category = hit->category;
        a.route = MatchRoute::confidence_shortcut;
        a.similarity = p.embedding.empty()
                           ? 1.0
                           : cosine_similarity(p.embedding, hit->embedding);
        out.push_back(std::move(a));
        continue;
      }
    }

    if (p.embedding.empty())
      fail(ErrorCode::BackendFailure,
           "match_candidates: proposal has no embedding for similarity routing");

    // Argmax over reference similarities; ties go to the lexicographically
    // smallest category name.
    double best = -2.0;
    const ReferenceSet::Entry* best_entry = nullptr;
    for (const auto& e : refs.entries) {
      double sim = cosine_similarity(p.embedding, e.embedding);
      if (sim > best || (sim == best && best_entry && e.category < best_entry->category)) {
        best = sim;
        best_entry = &e;
      }
    }
    if (best < similarity_floor) {
      a.route = MatchRoute::rejected;
      a.similarity = best;
    } else {
      a.route = MatchRoute::similarity_argmax;
      a.category = best_entry->category;
      a.similarity = best;
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<RegionAnnotation> extract_anchor_annotations(
    const Trajectory& trajectory, const ReferenceSet& refs,
    DetectorBackend& detector, EmbedderBackend& embedder,
    const MatchThresholds& th) {
  if (trajectory.frames.empty())
    fail(ErrorCode::SchemaViolation, "extract_anchor_annotations: empty trajectory");
  const Frame& anchor = trajectory.frames.front();

  std::vector<std::string> prompts;
  for (const auto& e : refs.entries) prompts.push_back(e.category);

  std::vector<Proposal> proposals =
      detector.detect(anchor.image, prompts, th.box_threshold, th.text_threshold);
  for (Proposal& p : proposals) {
    if (p.bbox.area() <= 0) continue;
    Image crop = crop_resize(anchor.image, p.bbox, th.crop_size);
    p.embedding = embedder.embed(crop);
  }
  std::erase_if(proposals, [](const Proposal& p) { return p.bbox.area() <= 0; });

  std::vector<Assignment> assignments =
      match_candidates(proposals, refs, th.delta_threshold, th.similarity_floor);

  // One annotation per category: shortcut beats argmax, then higher score
  // (shortcut) or higher similarity (argmax).
  std::map<std::string, const Assignment*> winners;
  auto rank = [](const Assignment& a) {
    double base = a.route == MatchRoute::confidence_shortcut ? 2.0 : 0.0;
    double key = a.route == MatchRoute::confidence_shortcut ? a.proposal.score
                                                            : a.similarity;
    return base + key;
  };
  for (const Assignment& a : assignments) {
    if (a.route == MatchRoute::rejected) continue;
    auto it = winners.find(a.category);
    if (it == winners.end() || rank(a) > rank(*it->second)) winners[a.category] = &a;
  }
  if (winners.empty())
    fail(ErrorCode::NoMatches,
         "trajectory " + trajectory.id + ": no proposals matched any category");

  std::vector<RegionAnnotation> out;
  for (const auto& [category, a] : winners) {
    RegionAnnotation ann;
    ann.category = category;
    ann.bbox = a->proposal.bbox;
    ann.confidence = a->proposal.score;
    out.push_back(std::move(ann));
  }
  return out;
}

void save_reference_set(const ReferenceSet& refs, const std::string& path) {
  refs.validate();
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::MissingFile, "cannot write reference set: " + path);
  f << refs.dim << " " << refs.entries.size() << "\n";
  for (const auto& e : refs.entries) f << e.category << "\n";
  for (const auto& e : refs.entries) {
    std::vector<float> row(e.embedding.begin(), e.embedding.end());
    f.write(reinterpret_cast<const char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
}

ReferenceSet load_reference_set(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::MissingFile, "cannot read reference set: " + path);
  ReferenceSet refs;
  std::size_t k = 0;
  f >> refs.dim >> k;
  f.ignore(1);
  for (std::size_t i = 0; i < k; ++i) {
    ReferenceSet::Entry e;
    std::getline(f, e.category);
    refs.entries.push_back(std::move(e));
  }
  for (auto& e : refs.entries) {
    std::vector<float> row(refs.dim);
    f.read(reinterpret_cast<char*>(row.data()),
           static_cast<std::streamsize>(row.size() * sizeof(float)));
    e.embedding.assign(row.begin(), row.end());
    // Renormalize: float32 storage loses a few bits.
    double n2 = 0;
    for (double v : e.embedding) n2 += v * v;
    if (n2 == 0) fail(ErrorCode::SchemaViolation, "zero embedding in reference file");
    double inv = 1.0 / std::sqrt(n2);
    for (double& v : e.embedding) v *= inv;
  }
  if (!f) fail(ErrorCode::SchemaViolation, "truncated reference set: " + path);
  refs.validate();
  return refs;
}

MeanColorEmbedder::MeanColorEmbedder(int dim) : dim_(dim) {
  if (dim < 3) fail(ErrorCode::ConfigError, "MeanColorEmbedder needs dim >= 3");
}

std::vector<double> MeanColorEmbedder::embed(const Image& crop) {
  double sum[3] = {0, 0, 0};
  for (int y = 0; y < crop.height; ++y)
    for (int x = 0; x < crop.width; ++x)
      for (int c = 0; c < 3; ++c) sum[c] += crop.at(y, x, c);
  double n = static_cast<double>(crop.height) * crop.width * 255.0;
  std::vector<double> out(dim_, 0.0);
  for (int c = 0; c < 3; ++c) out[c] = sum[c] / n;
  double n2 = 0;
  for (double v : out) n2 += v * v;
  if (n2 == 0) out[dim_ - 1] = 1.0;  // all-black crop still embeds somewhere
  else {
    double inv = 1.0 / std::sqrt(n2);
    for (double& v : out) v *= inv;
  }
  return out;
}

std::uint64_t OracleDetector::image_key(const Image& image) {
  return fnv1a_bytes(image.data.data(), image.data.size());
}

void OracleDetector::add(const Image& image, std::vector<GtBox> boxes) {
  boxes_[image_key(image)] = std::move(boxes);
}

void OracleDetector::add_by_key(std::uint64_t key, std::vector<GtBox> boxes) {
  boxes_[key] = std::move(boxes);
}

void OracleDetector::set_jitter(double pixels, std::uint64_t seed) {
  jitter_ = pixels;
  jitter_seed_ = seed;
}

std::vector<Proposal> OracleDetector::detect(
    const Image& image, const std::vector<std::string>& prompts,
    double box_threshold, double /*text_threshold*/) {
  std::vector<Proposal> out;
  auto it = boxes_.find(image_key(image));
  if (it == boxes_.end()) return out;
  Rng rng(jitter_seed_ ^ image_key(image));
  for (const GtBox& gt : it->second) {
    if (gt.score < box_threshold) continue;
    // Only boxes whose label matches some prompt are returned, mirroring an
    // open-set detector queried with category-name prompts.
    bool prompted = prompts.empty();
    for (const auto& p : prompts)
      if (normalize_label(p) == normalize_label(gt.label)) prompted = true;
    if (!prompted) continue;
    Proposal prop;
    prop.bbox = gt.bbox;
    if (jitter_ > 0) {
      double dx = rng.uniform(-jitter_, jitter_);
      double dy = rng.uniform(-jitter_, jitter_);
      prop.bbox.x_min = std::clamp(prop.bbox.x_min + dx, 0.0, image.width - 1.0);
      prop.bbox.x_max = std::clamp(prop.bbox.x_max + dx, prop.bbox.x_min + 1.0,
                                   static_cast<double>(image.width));
      prop.bbox.y_min = std::clamp(prop.bbox.y_min + dy, 0.0, image.height - 1.0);
      prop.bbox.y_max = std::clamp(prop.bbox.y_max + dy, prop.bbox.y_min + 1.0,
                                   static_cast<double>(image.height));
    }
    prop.score = gt.score;
    prop.detector_label = gt.label;
    out.push_back(std::move(prop));
  }
  return out;
}

std::unique_ptr<EmbedderBackend> make_embedder(const std::string& name) {
  if (name == "synthetic-meancolor") return std::make_unique<MeanColorEmbedder>();
  fail(ErrorCode::ConfigError, "unknown embedder backend: " + name);
}

}  // namespace roboaug
