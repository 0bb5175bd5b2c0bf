"""Scene statistics used by the ablation scripts and acceptance checks."""
from __future__ import annotations

import numpy as np

from .pipeline import build_shapes
from .raster import outer_shell
from .sampler import GenConfig, sample_scene


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    union = np.count_nonzero(a | b)
    if union == 0:
        return 1.0
    return np.count_nonzero(a & b) / union


def pairwise_iou(masks: list[np.ndarray]) -> np.ndarray:
    """IoU of every pair i < j, flattened; pairs with an empty union are skipped."""
    if len(masks) < 2:
        return np.zeros(0)
    flat = np.stack([m.ravel() for m in masks]).astype(np.float32)
    inter = flat @ flat.T
    area = np.diag(inter)
    union = area[:, None] + area[None, :] - inter
    i, j = np.triu_indices(len(masks), k=1)
    keep = union[i, j] > 0
    return (inter[i, j][keep] / union[i, j][keep]).astype(np.float64)


def shell_overlap(config: GenConfig, image_index: int) -> np.ndarray:
    """Pairwise IoU of the outer shells in one scene."""
    scene = sample_scene(config, image_index)
    shapes = build_shapes(config, scene)
    shells = [outer_shell(s, config.width, config.height, p.line_width) for p, s in zip(scene.instances, shapes)]
    return pairwise_iou(shells)
