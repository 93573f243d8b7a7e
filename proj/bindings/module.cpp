// SPDX-License-Identifier: Apache-2.0
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "roboaug/augment.hpp"
#include "roboaug/detect_eval.hpp"
#include "roboaug/mask_prop.hpp"
#include "roboaug/policy.hpp"
#include "roboaug/rcl.hpp"
#include "roboaug/region_match.hpp"

namespace py = pybind11;
using namespace roboaug;

namespace {

Image image_from_array(py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> arr) {
  if (arr.ndim() != 3 || arr.shape(2) != 3)
    throw py::value_error("image must be HxWx3 uint8");
  Image img(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
  std::memcpy(img.data.data(), arr.data(), img.data.size());
  return img;
}

py::array_t<std::uint8_t> image_to_array(const Image& img) {
  py::array_t<std::uint8_t> arr({img.height, img.width, 3});
  std::memcpy(arr.mutable_data(), img.data.data(), img.data.size());
  return arr;
}

Mask mask_from_array(py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> arr) {
  if (arr.ndim() != 2) throw py::value_error("mask must be HxW uint8");
  Mask m(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
  std::memcpy(m.data.data(), arr.data(), m.data.size());
  return m;
}

py::array_t<std::uint8_t> mask_to_array(const Mask& m) {
  py::array_t<std::uint8_t> arr({m.height, m.width});
  std::memcpy(arr.mutable_data(), m.data.data(), m.data.size());
  return arr;
}

ContrastiveBatch batch_from_args(
    const std::vector<std::vector<double>>& embeddings,
    const std::vector<int>& labels, double temperature) {
  ContrastiveBatch b;
  b.embeddings = embeddings;
  b.labels = labels;
  b.temperature = temperature;
  return b;
}

FeatureMap fmap_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> arr) {
  if (arr.ndim() != 3) throw py::value_error("feature map must be CxHxW float64");
  FeatureMap z(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)),
               static_cast<int>(arr.shape(2)));
  std::memcpy(z.values.data(), arr.data(), z.values.size() * sizeof(double));
  return z;
}

py::array_t<double> fmap_to_array(const FeatureMap& z) {
  py::array_t<double> arr({z.channels, z.height, z.width});
  std::memcpy(arr.mutable_data(), z.values.data(), z.values.size() * sizeof(double));
  return arr;
}

}  // namespace

PYBIND11_MODULE(_roboaug, m) {
  m.doc() = "roboaug core operations";

  py::register_exception<Error>(m, "RoboaugError");

  m.def(
      "composite",
      [](py::array_t<std::uint8_t> image, py::array_t<std::uint8_t> mask,
         py::array_t<std::uint8_t> background) {
        return image_to_array(composite(image_from_array(image),
                                        mask_from_array(mask),
                                        image_from_array(background)));
      },
      py::arg("image"), py::arg("mask"), py::arg("background"),
      "Binary mask compositing: mask*image + (1-mask)*background.");

  m.def(
      "composite_soft",
      [](py::array_t<std::uint8_t> image,
         py::array_t<double, py::array::c_style | py::array::forcecast> mask,
         py::array_t<std::uint8_t> background) {
        std::vector<double> soft(mask.data(), mask.data() + mask.size());
        return image_to_array(composite(image_from_array(image), soft,
                                        image_from_array(background)));
      },
      py::arg("image"), py::arg("mask"), py::arg("background"));

  m.def("cosine_similarity", &cosine_similarity, py::arg("a"), py::arg("b"));

  m.def(
      "mask_iou",
      [](py::array_t<std::uint8_t> a, py::array_t<std::uint8_t> b) {
        return mask_iou(mask_from_array(a), mask_from_array(b));
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "box_iou",
      [](std::array<double, 4> a, std::array<double, 4> b) {
        return box_iou(Box{a[0], a[1], a[2], a[3]}, Box{b[0], b[1], b[2], b[3]});
      },
      py::arg("a"), py::arg("b"), "IoU of [x_min, y_min, x_max, y_max] boxes.");

  m.def(
      "region_contrastive_loss",
      [](const std::vector<std::vector<double>>& embeddings,
         const std::vector<int>& labels, double temperature) {
        ContrastiveLossResult r = region_contrastive_loss(
            batch_from_args(embeddings, labels, temperature));
        return py::make_tuple(r.loss, r.per_sample, r.singleton_count);
      },
      py::arg("embeddings"), py::arg("labels"), py::arg("temperature") = 0.07,
      "Returns (loss, per_sample, singleton_count).");

  m.def(
      "rcl_gradient",
      [](const std::vector<std::vector<double>>& embeddings,
         const std::vector<int>& labels, double temperature) {
        return rcl_gradient(batch_from_args(embeddings, labels, temperature));
      },
      py::arg("embeddings"), py::arg("labels"), py::arg("temperature") = 0.07);

  m.def(
      "attentive_features",
      [](py::array_t<double> z, py::array_t<double> z_obj,
         py::array_t<double, py::array::c_style | py::array::forcecast> weight,
         const std::vector<double>& bias) {
        FeatureMap fz = fmap_from_array(z);
        AttentionParams params(fz.channels);
        if (static_cast<std::size_t>(weight.size()) != params.weight.size() ||
            bias.size() != params.bias.size())
          throw py::value_error("attention parameter shape mismatch");
        std::memcpy(params.weight.data(), weight.data(),
                    params.weight.size() * sizeof(double));
        params.bias = bias;
        return fmap_to_array(attentive_features(fz, fmap_from_array(z_obj), params));
      },
      py::arg("z"), py::arg("z_obj"), py::arg("weight"), py::arg("bias"));

  m.def(
      "pool_embedding",
      [](py::array_t<double> z) { return pool_embedding(fmap_from_array(z)); },
      py::arg("z"));

  m.def(
      "match_candidates",
      [](const std::vector<py::dict>& proposals,
         const std::vector<std::pair<std::string, std::vector<double>>>& refs,
         double delta_threshold, double similarity_floor) {
        std::vector<Proposal> props;
        for (const auto& d : proposals) {
          Proposal p;
          auto b = d["bbox"].cast<std::array<double, 4>>();
          p.bbox = Box{b[0], b[1], b[2], b[3]};
          p.score = d["score"].cast<double>();
          if (d.contains("label"))
            p.detector_label = d["label"].cast<std::string>();
          p.embedding = d["embedding"].cast<std::vector<double>>();
          props.push_back(std::move(p));
        }
        ReferenceSet rset;
        for (const auto& [cat, emb] : refs) {
          rset.entries.push_back({cat, emb});
          rset.dim = static_cast<int>(emb.size());
        }
        std::vector<py::dict> out;
        for (const auto& a :
             match_candidates(props, rset, delta_threshold, similarity_floor)) {
          py::dict d;
          d["category"] = a.category;
          d["similarity"] = a.similarity;
          d["route"] = a.route == MatchRoute::confidence_shortcut ? "shortcut"
                       : a.route == MatchRoute::similarity_argmax ? "argmax"
                                                                  : "rejected";
          out.push_back(std::move(d));
        }
        return out;
      },
      py::arg("proposals"), py::arg("references"),
      py::arg("delta_threshold") = 0.7, py::arg("similarity_floor") = 0.3,
      "proposals: dicts with bbox, score, embedding, optional label.");

  m.def(
      "average_precision",
      [](const std::vector<py::dict>& detections,
         const std::vector<py::dict>& ground_truth, const std::string& category,
         double iou_thresh) {
        DetectionSet dets;
        for (const auto& d : detections) {
          auto b = d["bbox"].cast<std::array<double, 4>>();
          dets.detections.push_back({d["image_id"].cast<std::string>(),
                                     d["category"].cast<std::string>(),
                                     Box{b[0], b[1], b[2], b[3]},
                                     d["score"].cast<double>()});
        }
        GroundTruthSet gts;
        for (const auto& g : ground_truth) {
          auto b = g["bbox"].cast<std::array<double, 4>>();
          std::string cat = g["category"].cast<std::string>();
          gts.images[g["image_id"].cast<std::string>()].push_back(
              {cat, Box{b[0], b[1], b[2], b[3]}});
          if (std::find(gts.categories.begin(), gts.categories.end(), cat) ==
              gts.categories.end())
            gts.categories.push_back(cat);
        }
        return average_precision(dets, gts, category, iou_thresh);
      },
      py::arg("detections"), py::arg("ground_truth"), py::arg("category"),
      py::arg("iou_thresh") = 0.5);

  m.def(
      "sample_prompt_categories",
      [](int n, std::uint64_t seed) {
        PromptLibrary lib = default_prompt_library();
        Rng rng(seed);
        std::map<std::string, int> counts;
        for (int i = 0; i < n; ++i)
          counts[to_string(sample_prompt(lib, rng).category)]++;
        return counts;
      },
      py::arg("n"), py::arg("seed") = 0,
      "Material-category counts over n prompt draws.");
}
