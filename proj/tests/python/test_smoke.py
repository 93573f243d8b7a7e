# SPDX-License-Identifier: Apache-2.0
import math

import numpy as np
import pytest

import roboaug


def test_composite_selects_per_pixel():
    img = np.full((4, 4, 3), 200, dtype=np.uint8)
    bg = np.full((4, 4, 3), 10, dtype=np.uint8)
    mask = np.zeros((4, 4), dtype=np.uint8)
    mask[1, 2] = 1
    out = roboaug.composite(img, mask, bg)
    assert out[1, 2].tolist() == [200, 200, 200]
    assert out[0, 0].tolist() == [10, 10, 10]


def test_composite_soft_blends():
    img = np.full((2, 2, 3), 255, dtype=np.uint8)
    bg = np.zeros((2, 2, 3), dtype=np.uint8)
    out = roboaug.composite_soft(img, np.full((2, 2), 0.5), bg)
    # 0.5 * 255 = 127.5 rounds half-to-even to 128
    assert out[0, 0, 0] == 128


def test_cosine_and_ious():
    assert roboaug.cosine_similarity([1, 0], [0, 1]) == pytest.approx(0.0)
    a = np.zeros((4, 4), dtype=np.uint8)
    b = np.zeros((4, 4), dtype=np.uint8)
    a[:2, :] = 1
    b[1:3, :] = 1
    assert roboaug.mask_iou(a, b) == pytest.approx(4 / 12)
    assert roboaug.box_iou([0, 0, 10, 10], [5, 0, 15, 10]) == pytest.approx(1 / 3)


def test_rcl_loss_and_gradient():
    rng = np.random.default_rng(0)
    z = rng.normal(size=(6, 4))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    labels = [0, 0, 1, 1, 2, 2]
    loss, per_sample, singletons = roboaug.region_contrastive_loss(
        z.tolist(), labels, 0.07
    )
    assert math.isfinite(loss)
    assert len(per_sample) == 6
    assert singletons == 0
    grad = roboaug.rcl_gradient(z.tolist(), labels, 0.07)
    assert len(grad) == 6 and len(grad[0]) == 4

    # singletons contribute exactly zero
    loss0, _, s0 = roboaug.region_contrastive_loss(z.tolist(), list(range(6)), 0.07)
    assert loss0 == 0.0
    assert s0 == 6


def test_match_candidates_routes():
    refs = [("agent", [1.0, 0.0]), ("goal", [0.0, 1.0])]
    proposals = [
        {"bbox": [0, 0, 5, 5], "score": 0.9, "label": "agent", "embedding": [0.0, 1.0]},
        {"bbox": [0, 0, 5, 5], "score": 0.2, "embedding": [0.0, 1.0]},
        {"bbox": [0, 0, 5, 5], "score": 0.2, "embedding": [0.1, -0.9]},
    ]
    out = roboaug.match_candidates(proposals, refs)
    assert out[0]["category"] == "agent" and out[0]["route"] == "shortcut"
    assert out[1]["category"] == "goal" and out[1]["route"] == "argmax"
    assert out[2]["route"] == "rejected"


def test_average_precision_fixture():
    gt = [
        {"image_id": "i", "category": "mug", "bbox": [0, 0, 10, 10]},
        {"image_id": "i", "category": "mug", "bbox": [20, 20, 30, 30]},
    ]
    dets = [
        {"image_id": "i", "category": "mug", "bbox": [0, 0, 10, 10], "score": 0.9},
        {"image_id": "i", "category": "mug", "bbox": [40, 40, 50, 50], "score": 0.8},
        {"image_id": "i", "category": "mug", "bbox": [20, 20, 30, 30], "score": 0.7},
    ]
    assert roboaug.average_precision(dets, gt, "mug") == pytest.approx(5 / 6)


def test_prompt_category_frequencies():
    counts = roboaug.sample_prompt_categories(20000, seed=1)
    total = sum(counts.values())
    assert total == 20000
    fracs = sorted(c / total for c in counts.values())
    assert fracs == pytest.approx([0.07, 0.35, 0.58], abs=0.02)


def test_error_type_raised():
    with pytest.raises(roboaug.RoboaugError):
        roboaug.cosine_similarity([1.0], [])
