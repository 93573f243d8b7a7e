// SPDX-License-Identifier: Apache-2.0
#include "roboaug/policy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>

#include "roboaug/noise.hpp"
#include "roboaug/plot.hpp"

namespace roboaug {

// --- Scene rendering ----------------------------------------------------------

void SyntheticSceneConfig::validate() const {
  if (height < 16 || width < 16)
    fail(ErrorCode::ConfigError, "scene: image too small");
  if (episode_length < 2)
    fail(ErrorCode::ConfigError, "scene: episode_length must be >= 2");
  if (train_textures.empty() || test_textures.empty())
    fail(ErrorCode::ConfigError, "scene: texture banks must be non-empty");
  for (int t : train_textures)
    for (int u : test_textures)
      if (t == u)
        fail(ErrorCode::ConfigError,
             "scene: train/test texture banks must be disjoint");
  if (eval_distractors < 0 || distractor_size < 1)
    fail(ErrorCode::ConfigError, "scene: invalid distractor settings");
}

namespace {

constexpr std::uint8_t kAgentColor[3] = {230, 30, 30};
constexpr std::uint8_t kGoalColor[3] = {30, 230, 30};
// Saturated palette distinct from agent red and goal green.
constexpr std::uint8_t kDistractorPalette[4][3] = {
    {40, 80, 230}, {235, 220, 60}, {200, 60, 200}, {60, 200, 210}};

struct Square {
  int x0, y0, x1, y1;  // half-open pixel extents
};

Square square_at(double cx, double cy, int size, int height, int width) {
  int x0 = static_cast<int>(std::lround(cx)) - size / 2;
  int y0 = static_cast<int>(std::lround(cy)) - size / 2;
  Square s{x0, y0, x0 + size, y0 + size};
  s.x0 = std::clamp(s.x0, 0, width);
  s.x1 = std::clamp(s.x1, 0, width);
  s.y0 = std::clamp(s.y0, 0, height);
  s.y1 = std::clamp(s.y1, 0, height);
  return s;
}

// Texture palette keyed by texture id; channels stay in the mid range so the
// saturated agent/goal colors remain unambiguous.
void texture_pixel(int texture_id, int x, int y, std::uint8_t* out) {
  std::uint64_t s = fnv1a("scene-texture") ^ (static_cast<std::uint64_t>(texture_id) * 0x9e3779b97f4a7c15ull);
  double base[3], accent[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = 60.0 + static_cast<double>((s >> (c * 8)) & 0x7F);
    accent[c] = 60.0 + static_cast<double>((s >> (24 + c * 8)) & 0x7F);
  }
  double n = fbm_noise(s, x * 0.11, y * 0.11, 3);
  for (int c = 0; c < 3; ++c) {
    double v = base[c] + (accent[c] - base[c]) * n;
    out[c] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
  }
}

}  // namespace

Image render_scene(const SyntheticSceneConfig& cfg, const SceneState& state) {
  Image img(cfg.height, cfg.width);
  for (int y = 0; y < cfg.height; ++y)
    for (int x = 0; x < cfg.width; ++x)
      texture_pixel(state.texture_id, x, y, &img.data[(static_cast<std::size_t>(y) * cfg.width + x) * 3]);
  for (std::size_t i = 0; i < state.distractors.size(); ++i) {
    Square d = square_at(state.distractors[i][0], state.distractors[i][1],
                         cfg.distractor_size, cfg.height, cfg.width);
    const std::uint8_t* col =
        kDistractorPalette[state.distractor_colors[i] % 4];
    for (int y = d.y0; y < d.y1; ++y)
      for (int x = d.x0; x < d.x1; ++x)
        for (int c = 0; c < 3; ++c) img.at(y, x, c) = col[c];
  }
  Square goal = square_at(state.goal_x, state.goal_y, cfg.goal_size, cfg.height, cfg.width);
  for (int y = goal.y0; y < goal.y1; ++y)
    for (int x = goal.x0; x < goal.x1; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = kGoalColor[c];
  Square agent = square_at(state.agent_x, state.agent_y, cfg.agent_size, cfg.height, cfg.width);
  for (int y = agent.y0; y < agent.y1; ++y)
    for (int x = agent.x0; x < agent.x1; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = kAgentColor[c];
  return img;
}

Mask render_agent_mask(const SyntheticSceneConfig& cfg, const SceneState& state) {
  Mask m(cfg.height, cfg.width);
  Square s = square_at(state.agent_x, state.agent_y, cfg.agent_size, cfg.height, cfg.width);
  for (int y = s.y0; y < s.y1; ++y)
    for (int x = s.x0; x < s.x1; ++x) m.at(y, x) = 1;
  return m;
}

Mask render_goal_mask(const SyntheticSceneConfig& cfg, const SceneState& state) {
  Mask m(cfg.height, cfg.width);
  Square g = square_at(state.goal_x, state.goal_y, cfg.goal_size, cfg.height, cfg.width);
  Square a = square_at(state.agent_x, state.agent_y, cfg.agent_size, cfg.height, cfg.width);
  for (int y = g.y0; y < g.y1; ++y)
    for (int x = g.x0; x < g.x1; ++x) {
      bool occluded = y >= a.y0 && y < a.y1 && x >= a.x0 && x < a.x1;
      if (!occluded) m.at(y, x) = 1;
    }
  return m;
}

std::vector<double> expert_action(const SceneState& state) {
  double dx = state.goal_x - state.agent_x;
  double dy = state.goal_y - state.agent_y;
  double n = std::sqrt(dx * dx + dy * dy);
  double denom = std::max(n, 1e-9);
  return {dx / denom, dy / denom};
}

namespace {

SceneState sample_episode(const SyntheticSceneConfig& cfg,
                          const std::vector<int>& textures, Rng& rng) {
  SceneState st;
  st.texture_id = textures[rng.uniform_int(textures.size())];
  double margin = cfg.agent_size;
  double min_dist = std::min(cfg.width, cfg.height) * 0.3;
  for (int attempt = 0; attempt < 100; ++attempt) {
    st.agent_x = rng.uniform(margin, cfg.width - margin);
    st.agent_y = rng.uniform(margin, cfg.height - margin);
    st.goal_x = rng.uniform(margin, cfg.width - margin);
    st.goal_y = rng.uniform(margin, cfg.height - margin);
    double dx = st.goal_x - st.agent_x, dy = st.goal_y - st.agent_y;
    if (std::sqrt(dx * dx + dy * dy) >= min_dist) break;
  }
  return st;
}

void advance(const SyntheticSceneConfig& cfg, SceneState& st,
             const std::vector<double>& action) {
  double ax = action[0], ay = action[1];
  double n = std::sqrt(ax * ax + ay * ay);
  if (n > 1.0) {  // actions are unit-bounded directions
    ax /= n;
    ay /= n;
    n = 1.0;
  }
  st.agent_x = std::clamp(st.agent_x + ax * cfg.step_pixels, 0.0, cfg.width - 1.0);
  st.agent_y = std::clamp(st.agent_y + ay * cfg.step_pixels, 0.0, cfg.height - 1.0);
}

}  // namespace

std::vector<Trajectory> generate_reach_dataset(const SyntheticSceneConfig& cfg,
                                               int n_trajectories) {
  cfg.validate();
  std::vector<Trajectory> out;
  for (int i = 0; i < n_trajectories; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "reach-%03d", i);
    Rng rng = Rng::derived(cfg.seed, std::string("traj/") + name);
    SceneState st = sample_episode(cfg, cfg.train_textures, rng);

    Trajectory traj;
    traj.id = name;
    traj.instruction = "move the red block to the green marker";
    traj.source = TrajectorySource::expert;
    for (int t = 0; t < cfg.episode_length; ++t) {
      Frame f;
      f.index = t;
      f.image = render_scene(cfg, st);
      f.proprio = {st.agent_x / cfg.width, st.agent_y / cfg.height};
      f.action = expert_action(st);

      RegionAnnotation agent;
      agent.category = "agent";
      agent.mask = render_agent_mask(cfg, st);
      if (!agent.mask.empty_mask()) {
        agent.bbox = tight_bbox(agent.mask);
        f.annotations.push_back(std::move(agent));
      }
      RegionAnnotation goal;
      goal.category = "goal";
      goal.mask = render_goal_mask(cfg, st);
      if (!goal.mask.empty_mask()) {
        goal.bbox = tight_bbox(goal.mask);
        f.annotations.push_back(std::move(goal));
      }
      traj.frames.push_back(std::move(f));

      // Expert steps toward the goal, never overshooting it.
      double dx = st.goal_x - st.agent_x, dy = st.goal_y - st.agent_y;
      double n = std::sqrt(dx * dx + dy * dy);
      if (n > 1e-9) {
        double step = std::min(cfg.step_pixels, n);
        st.agent_x += dx / n * step;
        st.agent_y += dy / n * step;
      }
    }
    traj.validate();
    out.push_back(std::move(traj));
  }
  return out;
}

// --- Toy policy ---------------------------------------------------------------

namespace {

constexpr int kFeatChannels = 32;

// RGB plus two coordinate channels. Mean pooling alone is translation
// invariant, so without coordinates the pooled feature could not encode
// where anything is in the scene.
constexpr int kInputChannels = 5;

FeatureMap image_to_features(const Image& img) {
  FeatureMap f(kInputChannels, img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c)
        f.at(c, y, x) = img.at(y, x, c) / 255.0 - 0.5;
      f.at(3, y, x) = img.width > 1 ? static_cast<double>(x) / (img.width - 1) - 0.5 : 0.0;
      f.at(4, y, x) = img.height > 1 ? static_cast<double>(y) / (img.height - 1) - 0.5 : 0.0;
    }
  return f;
}

int conv_out_dim(int in) { return (in + 2 - 3) / 2 + 1; }  // k=3 s=2 p=1

void conv_forward(const FeatureMap& in, const ConvLayer& L, FeatureMap& out) {
  int oh = conv_out_dim(in.height), ow = conv_out_dim(in.width);
  out = FeatureMap(L.out_channels, oh, ow);
  for (int oc = 0; oc < L.out_channels; ++oc) {
    const double* wbase = &L.weight[static_cast<std::size_t>(oc) * L.in_channels * 9];
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double acc = L.bias[oc];
        int iy0 = oy * 2 - 1, ix0 = ox * 2 - 1;
        for (int ic = 0; ic < L.in_channels; ++ic) {
          const double* w = wbase + static_cast<std::size_t>(ic) * 9;
          for (int ky = 0; ky < 3; ++ky) {
            int iy = iy0 + ky;
            if (iy < 0 || iy >= in.height) continue;
            for (int kx = 0; kx < 3; ++kx) {
              int ix = ix0 + kx;
              if (ix < 0 || ix >= in.width) continue;
              acc += w[ky * 3 + kx] * in.at(ic, iy, ix);
            }
          }
        }
        out.at(oc, oy, ox) = acc;
      }
    }
  }
}

void conv_backward(const FeatureMap& in, const ConvLayer& L,
                   const FeatureMap& dout, FeatureMap& din,
                   std::vector<double>& dweight, std::vector<double>& dbias) {
  din = FeatureMap(in.channels, in.height, in.width);
  for (int oc = 0; oc < L.out_channels; ++oc) {
    const double* wbase = &L.weight[static_cast<std::size_t>(oc) * L.in_channels * 9];
    double* dwbase = &dweight[static_cast<std::size_t>(oc) * L.in_channels * 9];
    for (int oy = 0; oy < dout.height; ++oy) {
      for (int ox = 0; ox < dout.width; ++ox) {
        double g = dout.at(oc, oy, ox);
        if (g == 0.0) continue;
        dbias[oc] += g;
        int iy0 = oy * 2 - 1, ix0 = ox * 2 - 1;
        for (int ic = 0; ic < L.in_channels; ++ic) {
          const double* w = wbase + static_cast<std::size_t>(ic) * 9;
          double* dw = dwbase + static_cast<std::size_t>(ic) * 9;
          for (int ky = 0; ky < 3; ++ky) {
            int iy = iy0 + ky;
            if (iy < 0 || iy >= in.height) continue;
            for (int kx = 0; kx < 3; ++kx) {
              int ix = ix0 + kx;
              if (ix < 0 || ix >= in.width) continue;
              dw[ky * 3 + kx] += g * in.at(ic, iy, ix);
              din.at(ic, iy, ix) += g * w[ky * 3 + kx];
            }
          }
        }
      }
    }
  }
}

void relu_inplace(FeatureMap& f) {
  for (double& v : f.values) v = v > 0 ? v : 0;
}

void relu_backward(const FeatureMap& activated, FeatureMap& grad) {
  for (std::size_t i = 0; i < grad.values.size(); ++i)
    if (activated.values[i] <= 0) grad.values[i] = 0;
}

struct EncoderCache {
  FeatureMap x0, h1, h2, z;
};

ConvLayer init_conv(int in_c, int out_c, Rng& rng) {
  ConvLayer L;
  L.in_channels = in_c;
  L.out_channels = out_c;
  L.weight.resize(static_cast<std::size_t>(out_c) * in_c * 9);
  L.bias.assign(out_c, 0.0);
  double scale = std::sqrt(2.0 / (in_c * 9));
  for (double& w : L.weight) w = rng.normal() * scale;
  return L;
}

}  // namespace

ToyPolicy ToyPolicy::init(int proprio_dim, int action_dim, Rng& rng) {
  ToyPolicy p;
  p.proprio_dim = proprio_dim;
  p.action_dim = action_dim;
  p.conv1 = init_conv(kInputChannels, 16, rng);
  p.conv2 = init_conv(16, kFeatChannels, rng);
  p.conv3 = init_conv(kFeatChannels, kFeatChannels, rng);
  int head_in = kFeatChannels + proprio_dim;
  p.head_weight.resize(static_cast<std::size_t>(action_dim) * head_in);
  p.head_bias.assign(action_dim, 0.0);
  double scale = std::sqrt(1.0 / head_in);
  for (double& w : p.head_weight) w = rng.normal() * scale;
  p.attention = AttentionParams(kFeatChannels);
  return p;
}

namespace {

EncoderCache encode_cached(const ToyPolicy& p, const Image& image) {
  EncoderCache c;
  c.x0 = image_to_features(image);
  conv_forward(c.x0, p.conv1, c.h1);
  relu_inplace(c.h1);
  conv_forward(c.h1, p.conv2, c.h2);
  relu_inplace(c.h2);
  conv_forward(c.h2, p.conv3, c.z);
  return c;
}

std::vector<double> mean_pool(const FeatureMap& z) {
  std::vector<double> out(z.channels, 0.0);
  double inv = 1.0 / (static_cast<double>(z.height) * z.width);
  for (int c = 0; c < z.channels; ++c) {
    double s = 0;
    for (int y = 0; y < z.height; ++y)
      for (int x = 0; x < z.width; ++x) s += z.at(c, y, x);
    out[c] = s * inv;
  }
  return out;
}

std::vector<double> head_forward(const ToyPolicy& p,
                                 const std::vector<double>& pooled,
                                 const std::vector<double>& proprio) {
  int head_in = kFeatChannels + p.proprio_dim;
  std::vector<double> in(head_in);
  std::copy(pooled.begin(), pooled.end(), in.begin());
  std::copy(proprio.begin(), proprio.end(), in.begin() + kFeatChannels);
  std::vector<double> out(p.action_dim, 0.0);
  for (int a = 0; a < p.action_dim; ++a) {
    double acc = p.head_bias[a];
    for (int k = 0; k < head_in; ++k)
      acc += p.head_weight[static_cast<std::size_t>(a) * head_in + k] * in[k];
    out[a] = acc;
  }
  return out;
}

}  // namespace

FeatureMap ToyPolicy::encode(const Image& image) const {
  return encode_cached(*this, image).z;
}

std::vector<double> ToyPolicy::forward(const Image& image,
                                       const std::vector<double>& proprio) const {
  EncoderCache c = encode_cached(*this, image);
  return head_forward(*this, mean_pool(c.z), proprio);
}

void ToyPolicy::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::MissingFile, "cannot write policy: " + path);
  auto dump = [&f](const std::vector<double>& v) {
    std::uint64_t n = v.size();
    f.write(reinterpret_cast<const char*>(&n), sizeof(n));
    f.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
  };
  f.write("RAPO", 4);
  std::int32_t dims[2] = {proprio_dim, action_dim};
  f.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  dump(conv1.weight); dump(conv1.bias);
  dump(conv2.weight); dump(conv2.bias);
  dump(conv3.weight); dump(conv3.bias);
  dump(head_weight);  dump(head_bias);
  dump(attention.weight); dump(attention.bias);
}

ToyPolicy ToyPolicy::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::MissingFile, "cannot read policy: " + path);
  char magic[4];
  f.read(magic, 4);
  if (std::memcmp(magic, "RAPO", 4) != 0)
    fail(ErrorCode::SchemaViolation, "bad policy file: " + path);
  std::int32_t dims[2];
  f.read(reinterpret_cast<char*>(dims), sizeof(dims));
  Rng dummy(0);
  ToyPolicy p = ToyPolicy::init(dims[0], dims[1], dummy);
  auto slurp = [&f, &path](std::vector<double>& v) {
    std::uint64_t n = 0;
    f.read(reinterpret_cast<char*>(&n), sizeof(n));
    v.resize(n);
    f.read(reinterpret_cast<char*>(v.data()),
           static_cast<std::streamsize>(n * sizeof(double)));
    if (!f) fail(ErrorCode::SchemaViolation, "truncated policy file: " + path);
  };
  slurp(p.conv1.weight); slurp(p.conv1.bias);
  slurp(p.conv2.weight); slurp(p.conv2.bias);
  slurp(p.conv3.weight); slurp(p.conv3.bias);
  slurp(p.head_weight);  slurp(p.head_bias);
  slurp(p.attention.weight); slurp(p.attention.bias);
  return p;
}

// --- Training -----------------------------------------------------------------

namespace {

struct AdamState {
  std::vector<double> m, v;
};

struct ParamSlot {
  std::vector<double>* value;
  std::vector<double>* grad;
  AdamState state;
  bool decay = true;
};

struct PolicyGrads {
  std::vector<double> c1w, c1b, c2w, c2b, c3w, c3b, hw, hb, aw, ab;

  void zero() {
    for (auto* g : {&c1w, &c1b, &c2w, &c2b, &c3w, &c3b, &hw, &hb, &aw, &ab})
      std::fill(g->begin(), g->end(), 0.0);
  }
};

std::vector<ParamSlot> make_slots(ToyPolicy& p, PolicyGrads& g) {
  g.c1w.resize(p.conv1.weight.size()); g.c1b.resize(p.conv1.bias.size());
  g.c2w.resize(p.conv2.weight.size()); g.c2b.resize(p.conv2.bias.size());
  g.c3w.resize(p.conv3.weight.size()); g.c3b.resize(p.conv3.bias.size());
  g.hw.resize(p.head_weight.size());   g.hb.resize(p.head_bias.size());
  g.aw.resize(p.attention.weight.size()); g.ab.resize(p.attention.bias.size());
  std::vector<ParamSlot> slots;
  auto add = [&slots](std::vector<double>& v, std::vector<double>& gr, bool decay) {
    ParamSlot s;
    s.value = &v;
    s.grad = &gr;
    s.state.m.assign(v.size(), 0.0);
    s.state.v.assign(v.size(), 0.0);
    s.decay = decay;
    slots.push_back(std::move(s));
  };
  add(p.conv1.weight, g.c1w, true);  add(p.conv1.bias, g.c1b, false);
  add(p.conv2.weight, g.c2w, true);  add(p.conv2.bias, g.c2b, false);
  add(p.conv3.weight, g.c3w, true);  add(p.conv3.bias, g.c3b, false);
  add(p.head_weight, g.hw, true);    add(p.head_bias, g.hb, false);
  add(p.attention.weight, g.aw, true); add(p.attention.bias, g.ab, false);
  return slots;
}

// Decoupled weight decay (AdamW).
void adamw_step(std::vector<ParamSlot>& slots, double lr, double wd, int t) {
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double bc1 = 1.0 - std::pow(b1, t);
  double bc2 = 1.0 - std::pow(b2, t);
  for (auto& s : slots) {
    for (std::size_t i = 0; i < s.value->size(); ++i) {
      double g = (*s.grad)[i];
      s.state.m[i] = b1 * s.state.m[i] + (1 - b1) * g;
      s.state.v[i] = b2 * s.state.v[i] + (1 - b2) * g * g;
      double mhat = s.state.m[i] / bc1;
      double vhat = s.state.v[i] / bc2;
      double upd = mhat / (std::sqrt(vhat) + eps);
      if (s.decay) upd += wd * (*s.value)[i];
      (*s.value)[i] -= lr * upd;
    }
  }
}

void encoder_backward(const ToyPolicy& p, const EncoderCache& c,
                      const FeatureMap& dz, PolicyGrads& g) {
  FeatureMap dh2, dh1, dx0;
  conv_backward(c.h2, p.conv3, dz, dh2, g.c3w, g.c3b);
  relu_backward(c.h2, dh2);
  conv_backward(c.h1, p.conv2, dh2, dh1, g.c2w, g.c2b);
  relu_backward(c.h1, dh1);
  conv_backward(c.x0, p.conv1, dh1, dx0, g.c1w, g.c1b);
}

struct SampleRef {
  std::size_t traj;
  std::size_t frame;
};

}  // namespace

TrainResult train_policy(const std::vector<Trajectory>& dataset,
                         const TrainConfig& cfg) {
  if (dataset.empty()) fail(ErrorCode::ConfigError, "train: empty dataset");
  std::vector<SampleRef> samples;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    for (std::size_t t = 0; t < dataset[i].frames.size(); ++t)
      samples.push_back({i, t});

  // Category registry for contrastive labels.
  std::set<std::string> cat_set;
  for (const auto& tr : dataset)
    for (const auto& f : tr.frames)
      for (const auto& a : f.annotations) cat_set.insert(a.category);
  std::vector<std::string> categories(cat_set.begin(), cat_set.end());
  if (cfg.rcl.enabled && categories.empty())
    fail(ErrorCode::MissingMasks,
         "train: rcl enabled but dataset carries no annotations");

  int proprio_dim = static_cast<int>(dataset.front().frames.front().proprio.size());
  int action_dim = static_cast<int>(dataset.front().frames.front().action.size());

  Rng init_rng = Rng::derived(cfg.seed, "policy-init");
  Rng batch_rng = Rng::derived(cfg.seed, "batches");
  // Separate stream so enabling RCL does not perturb the batch sequence.
  Rng ann_rng = Rng::derived(cfg.seed, "rcl-annotations");
  ToyPolicy policy = ToyPolicy::init(proprio_dim, action_dim, init_rng);
  PolicyGrads grads;
  std::vector<ParamSlot> slots = make_slots(policy, grads);

  const int head_in = kFeatChannels + proprio_dim;
  TrainResult result;

  for (int step = 1; step <= cfg.steps; ++step) {
    grads.zero();
    double l2_sum = 0;

    struct RclSample {
      EncoderCache full;          // shared z cache
      EncoderCache obj;           // object-image cache
      FeatureMap z_att;
      std::vector<double> pooled_raw;  // pre-normalization mean
      std::vector<double> emb;
      double norm = 0;
      int label = 0;
      bool valid = false;
      FeatureMap dz_extra;  // gradient into z from the contrastive branch
    };
    std::vector<RclSample> rcl_samples(cfg.batch_size);
    std::vector<EncoderCache> caches(cfg.batch_size);
    std::vector<const Frame*> frames(cfg.batch_size);

    // Forward + L2 backward per sample.
    for (int b = 0; b < cfg.batch_size; ++b) {
      const SampleRef& ref = samples[batch_rng.uniform_int(samples.size())];
      const Frame& frame = dataset[ref.traj].frames[ref.frame];
      frames[b] = &frame;
      caches[b] = encode_cached(policy, frame.image);
      const FeatureMap& z = caches[b].z;
      std::vector<double> pooled = mean_pool(z);
      std::vector<double> pred = head_forward(policy, pooled, frame.proprio);

      l2_sum += mean_squared_error(pred, frame.action);

      // d mse/d pred, averaged over batch.
      std::vector<double> dpred(pred.size());
      double scale = 2.0 / (static_cast<double>(pred.size()) * cfg.batch_size);
      for (std::size_t a = 0; a < pred.size(); ++a)
        dpred[a] = scale * (pred[a] - frame.action[a]);

      std::vector<double> in(head_in);
      std::copy(pooled.begin(), pooled.end(), in.begin());
      std::copy(frame.proprio.begin(), frame.proprio.end(), in.begin() + kFeatChannels);
      std::vector<double> dpooled(kFeatChannels, 0.0);
      for (int a = 0; a < action_dim; ++a) {
        grads.hb[a] += dpred[a];
        for (int k = 0; k < head_in; ++k)
          grads.hw[static_cast<std::size_t>(a) * head_in + k] += dpred[a] * in[k];
        for (int k = 0; k < kFeatChannels; ++k)
          dpooled[k] += dpred[a] * policy.head_weight[static_cast<std::size_t>(a) * head_in + k];
      }
      FeatureMap dz(z.channels, z.height, z.width);
      double inv_hw = 1.0 / (static_cast<double>(z.height) * z.width);
      for (int c = 0; c < z.channels; ++c) {
        double v = dpooled[c] * inv_hw;
        for (int y = 0; y < z.height; ++y)
          for (int x = 0; x < z.width; ++x) dz.at(c, y, x) = v;
      }
      // Defer encoder backward until the contrastive branch has added its
      // share of dz, so each image is backpropagated once.
      rcl_samples[b].dz_extra = std::move(dz);
    }

    // Contrastive branch.
    double rcl_loss = 0;
    int singletons = 0;
    if (cfg.rcl.enabled && cfg.rcl.loss_weight > 0) {
      for (int b = 0; b < cfg.batch_size; ++b) {
        const Frame& frame = *frames[b];
        if (frame.annotations.empty()) continue;
        const RegionAnnotation& ann =
            frame.annotations[ann_rng.uniform_int(frame.annotations.size())];
        if (!ann.has_mask() || ann.mask.empty_mask()) continue;
        RclSample& s = rcl_samples[b];
        Image obj_img = extract_object_image(frame.image, ann.mask);
        s.obj = encode_cached(policy, obj_img);
        s.z_att = attentive_features(caches[b].z, s.obj.z, policy.attention);
        s.pooled_raw = mean_pool(s.z_att);
        double n2 = 0;
        for (double v : s.pooled_raw) n2 += v * v;
        if (n2 < 1e-24) continue;  // degenerate feature; drop from the batch
        s.norm = std::sqrt(n2);
        s.emb.resize(s.pooled_raw.size());
        for (std::size_t k = 0; k < s.emb.size(); ++k)
          s.emb[k] = s.pooled_raw[k] / s.norm;
        auto it = std::find(categories.begin(), categories.end(), ann.category);
        s.label = static_cast<int>(it - categories.begin());
        s.valid = true;
      }

      ContrastiveBatch batch;
      batch.temperature = cfg.rcl.temperature;
      std::vector<int> owner;
      for (int b = 0; b < cfg.batch_size; ++b)
        if (rcl_samples[b].valid) {
          batch.embeddings.push_back(rcl_samples[b].emb);
          batch.labels.push_back(rcl_samples[b].label);
          owner.push_back(b);
        }
      if (batch.embeddings.size() >= 2) {
        ContrastiveLossResult lr = region_contrastive_loss(batch);
        rcl_loss = lr.loss;
        singletons = lr.singleton_count;
        std::vector<std::vector<double>> demb = rcl_gradient(batch);
        for (std::size_t bi = 0; bi < owner.size(); ++bi) {
          RclSample& s = rcl_samples[owner[bi]];
          // Through L2 normalization: dm = (I - e e^T) de / ||m||.
          std::vector<double> de = demb[bi];
          for (double& v : de) v *= cfg.rcl.loss_weight;
          double e_dot = 0;
          for (std::size_t k = 0; k < de.size(); ++k) e_dot += s.emb[k] * de[k];
          std::vector<double> dm(de.size());
          for (std::size_t k = 0; k < de.size(); ++k)
            dm[k] = (de[k] - s.emb[k] * e_dot) / s.norm;

          const FeatureMap& z = caches[owner[bi]].z;
          const FeatureMap& z_obj = s.obj.z;
          double inv_hw = 1.0 / (static_cast<double>(z.height) * z.width);
          FeatureMap dz_obj(z.channels, z.height, z.width);
          FeatureMap& dz = s.dz_extra;  // accumulate onto the L2 path's dz
          for (int y = 0; y < z.height; ++y) {
            for (int x = 0; x < z.width; ++x) {
              for (int c = 0; c < z.channels; ++c) {
                double dz_att = dm[c] * inv_hw;
                double mixed = policy.attention.bias[c];
                for (int k = 0; k < z.channels; ++k)
                  mixed += policy.attention.w(c, k) * z.at(k, y, x);
                double sarg = mixed * z.at(c, y, x);
                double gate = 1.0 / (1.0 + std::exp(-sarg));
                dz_obj.at(c, y, x) += gate * dz_att;
                double dgate = z_obj.at(c, y, x) * dz_att;
                double ds = gate * (1.0 - gate) * dgate;
                double dmixed = z.at(c, y, x) * ds;
                dz.at(c, y, x) += mixed * ds;  // gate's direct z dependence
                grads.ab[c] += dmixed;
                for (int k = 0; k < z.channels; ++k) {
                  grads.aw[static_cast<std::size_t>(c) * z.channels + k] +=
                      dmixed * z.at(k, y, x);
                  dz.at(k, y, x) += policy.attention.w(c, k) * dmixed;
                }
              }
            }
          }
          encoder_backward(policy, s.obj, dz_obj, grads);
        }
      }
    }

    for (int b = 0; b < cfg.batch_size; ++b)
      encoder_backward(policy, caches[b], rcl_samples[b].dz_extra, grads);

    adamw_step(slots, cfg.learning_rate, cfg.weight_decay, step);

    double l2 = l2_sum / cfg.batch_size;
    TrainLogEntry entry;
    entry.step = step;
    entry.l2 = l2;
    entry.rcl = rcl_loss;
    entry.total = l2 + cfg.rcl.loss_weight * rcl_loss;
    entry.rcl_singletons = singletons;
    result.log.push_back(entry);
  }

  result.policy = std::move(policy);
  return result;
}

TrainResult train_policy(const std::string& dataset_root,
                         const DatasetManifest& manifest,
                         const TrainConfig& cfg) {
  std::vector<Trajectory> dataset;
  for (const auto& entry : manifest.trajectories)
    dataset.push_back(load_trajectory(dataset_root, entry));
  return train_policy(dataset, cfg);
}

void write_train_log(const std::vector<TrainLogEntry>& log,
                     const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::MissingFile, "cannot write train log: " + path);
  for (const auto& e : log) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "{\"step\":%d,\"l2\":%.10g,\"rcl\":%.10g,\"total\":%.10g,"
                  "\"rcl_singletons\":%d}\n",
                  e.step, e.l2, e.rcl, e.total, e.rcl_singletons);
    f << buf;
  }
}

// --- Evaluation ---------------------------------------------------------------

EvalMetrics evaluate_ood(const PolicyFn& policy, const SyntheticSceneConfig& cfg,
                         int n_episodes, std::uint64_t eval_seed) {
  cfg.validate();
  EvalMetrics metrics;
  metrics.episodes = n_episodes;
  double mse_sum = 0;
  std::size_t mse_count = 0;
  int successes = 0;
  for (int e = 0; e < n_episodes; ++e) {
    Rng rng = Rng::derived(eval_seed, "eval-episode/" + std::to_string(e));
    SceneState start = sample_episode(cfg, cfg.test_textures, rng);
    for (int k = 0; k < cfg.eval_distractors; ++k) {
      // Keep clear of the goal so the task signal is never occluded.
      double min_clear = 0.5 * (cfg.goal_size + cfg.distractor_size) + 1.0;
      for (int attempt = 0; attempt < 100; ++attempt) {
        double x = rng.uniform(0.0, cfg.width - 1.0);
        double y = rng.uniform(0.0, cfg.height - 1.0);
        double dgx = x - start.goal_x, dgy = y - start.goal_y;
        if (std::sqrt(dgx * dgx + dgy * dgy) < min_clear && attempt < 99)
          continue;
        start.distractors.push_back({x, y});
        start.distractor_colors.push_back(static_cast<int>(rng.uniform_int(4)));
        break;
      }
    }

    // Action MSE: open loop along the expert rollout, so the metric scores
    // perception on the demonstrated state distribution rather than
    // compounding control drift. Predictions are clamped to the unit disc,
    // matching what the scene would execute.
    SceneState st = start;
    for (int t = 0; t < cfg.episode_length; ++t) {
      Image img = render_scene(cfg, st);
      std::vector<double> proprio = {st.agent_x / cfg.width,
                                     st.agent_y / cfg.height};
      std::vector<double> action = policy(img, proprio, st);
      double an = std::sqrt(action[0] * action[0] + action[1] * action[1]);
      if (an > 1.0)
        for (double& a : action) a /= an;
      std::vector<double> expert = expert_action(st);
      for (std::size_t k = 0; k < expert.size(); ++k) {
        double d = action[k] - expert[k];
        mse_sum += d * d;
        ++mse_count;
      }
      // Expert dynamics as in the generator: never overshoot the goal.
      double gx = st.goal_x - st.agent_x, gy = st.goal_y - st.agent_y;
      double dist = std::sqrt(gx * gx + gy * gy);
      if (dist > 1e-9) {
        double step = std::min(cfg.step_pixels, dist);
        st.agent_x += gx / dist * step;
        st.agent_y += gy / dist * step;
      }
    }

    // Success rate: closed loop under the policy's own actions.
    st = start;
    for (int t = 0; t < cfg.episode_length; ++t) {
      Image img = render_scene(cfg, st);
      std::vector<double> proprio = {st.agent_x / cfg.width,
                                     st.agent_y / cfg.height};
      advance(cfg, st, policy(img, proprio, st));
    }
    double dx = st.goal_x - st.agent_x, dy = st.goal_y - st.agent_y;
    if (std::sqrt(dx * dx + dy * dy) <= cfg.goal_radius) ++successes;
  }
  metrics.action_mse = mse_count ? mse_sum / static_cast<double>(mse_count) : 0.0;
  metrics.success_rate = static_cast<double>(successes) / n_episodes;
  return metrics;
}

PolicyFn as_policy_fn(const ToyPolicy& policy) {
  return [&policy](const Image& img, const std::vector<double>& proprio,
                   const SceneState&) { return policy.forward(img, proprio); };
}

PolicyFn scripted_expert_policy() {
  return [](const Image&, const std::vector<double>&, const SceneState& st) {
    return expert_action(st);
  };
}

PolicyFn zero_action_policy() {
  return [](const Image&, const std::vector<double>&, const SceneState&) {
    return std::vector<double>{0.0, 0.0};
  };
}

// --- Sweep ----------------------------------------------------------------------

std::vector<Trajectory> augment_reach_dataset(
    const std::vector<Trajectory>& expert, int ratio, std::uint64_t seed,
    const std::string& provider_name) {
  if (ratio <= 0) return {};
  std::unique_ptr<BackgroundProvider> provider = make_provider(provider_name);
  PromptLibrary library = default_prompt_library();
  std::vector<Trajectory> augmented;
  for (const auto& traj : expert) {
    PropagationResult masks;
    masks.trajectory_id = traj.id;
    for (const auto& f : traj.frames) {
      std::map<std::string, Mask> fm;
      for (const auto& a : f.annotations)
        if (a.has_mask()) fm[a.category] = a.mask;
      masks.frames.push_back(std::move(fm));
    }
    AugmentationPlan plan;
    plan.ratio = ratio;
    plan.prompt_seed = seed;
    plan.provider = provider_name;
    std::vector<Trajectory> copies =
        augment_trajectory(traj, masks, plan, *provider, library);
    for (auto& c : copies) augmented.push_back(std::move(c));
  }
  return augmented;
}

SweepResult ratio_sweep(const std::vector<int>& ratios,
                        const std::vector<std::uint64_t>& seeds,
                        const SweepConfig& cfg) {
  if (std::find(ratios.begin(), ratios.end(), 0) == ratios.end())
    fail(ErrorCode::ConfigError, "sweep: ratios must include 0");
  SweepResult result;
  for (int ratio : ratios) {
    for (std::uint64_t seed : seeds) {
      SweepCell cell;
      cell.ratio = ratio;
      cell.seed = seed;
      auto start = std::chrono::steady_clock::now();
      try {
        SyntheticSceneConfig scene = cfg.scene;
        scene.seed = seed;
        std::vector<Trajectory> expert =
            generate_reach_dataset(scene, cfg.n_expert);
        std::vector<Trajectory> augmented =
            augment_reach_dataset(expert, ratio, seed * 7919 + ratio, cfg.provider);
        std::vector<Trajectory> all = expert;
        for (auto& a : augmented) all.push_back(std::move(a));

        TrainConfig train = cfg.train;
        train.seed = seed;
        TrainResult tr = train_policy(all, train);

        EvalMetrics ood = evaluate_ood(as_policy_fn(tr.policy), scene,
                                       cfg.eval_episodes, seed + 17);
        SyntheticSceneConfig id_scene = scene;
        id_scene.test_textures = scene.train_textures;
        id_scene.train_textures = {-1};  // unused by evaluation
        EvalMetrics id_metrics = evaluate_ood(as_policy_fn(tr.policy), id_scene,
                                              cfg.eval_episodes, seed + 31);
        cell.ood_mse = ood.action_mse;
        cell.ood_success = ood.success_rate;
        cell.id_mse = id_metrics.action_mse;
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
      }
      cell.wallclock_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
              .count();
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

void write_sweep_csv(const SweepResult& result, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::MissingFile, "cannot write sweep csv: " + path);
  f << "ratio,seed,ood_mse,ood_success,id_mse,wallclock_s\n";
  for (const auto& c : result.cells) {
    if (c.failed) {
      f << c.ratio << "," << c.seed << ",nan,nan,nan," << c.wallclock_s << "\n";
      continue;
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d,%llu,%.10g,%.10g,%.10g,%.3f\n", c.ratio,
                  static_cast<unsigned long long>(c.seed), c.ood_mse,
                  c.ood_success, c.id_mse, c.wallclock_s);
    f << buf;
  }
}

void write_sweep_plot(const SweepResult& result, const std::string& path) {
  // Median OOD metrics per ratio.
  std::map<int, std::vector<double>> mse_by_ratio, success_by_ratio;
  for (const auto& c : result.cells) {
    if (c.failed) continue;
    mse_by_ratio[c.ratio].push_back(c.ood_mse);
    success_by_ratio[c.ratio].push_back(c.ood_success);
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  Series mse{"OOD MSE", {}, {}}, success{"OOD SUCCESS", {}, {}};
  for (auto& [ratio, vals] : mse_by_ratio) {
    mse.xs.push_back(ratio);
    mse.ys.push_back(median(vals));
  }
  for (auto& [ratio, vals] : success_by_ratio) {
    success.xs.push_back(ratio);
    success.ys.push_back(median(vals));
  }
  write_line_chart(path, "AUGMENTATION RATIO SWEEP", {mse, success},
                   "RATIO", "METRIC");
}

}  // namespace roboaug
