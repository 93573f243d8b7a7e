# SPDX-License-Identifier: Apache-2.0
"""Python bindings for the roboaug C++ core."""

from roboaug._roboaug import (
    RoboaugError,
    attentive_features,
    average_precision,
    box_iou,
    composite,
    composite_soft,
    cosine_similarity,
    mask_iou,
    match_candidates,
    pool_embedding,
    rcl_gradient,
    region_contrastive_loss,
    sample_prompt_categories,
)

__all__ = [
    "RoboaugError",
    "attentive_features",
    "average_precision",
    "box_iou",
    "composite",
    "composite_soft",
    "cosine_similarity",
    "mask_iou",
    "match_candidates",
    "pool_embedding",
    "rcl_gradient",
    "region_contrastive_loss",
    "sample_prompt_categories",
]
