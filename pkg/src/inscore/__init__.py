"""Synthetic instance-segmentation data from nested formula-driven contours."""
from .geometry import ContourShape, InstanceParams, base_ring, build_contour, expand_ring
from .pipeline import RenderedScene, generate_dataset, render_scene
from .raster import (
    LabelMap,
    build_label_map,
    draw_polylines,
    fill_polygon,
    hollow_mask,
    outer_shell,
    resolve_visibility,
)
from .rng import PerlinNoise1D, SeedTree, derive_stream, perlin_sample
from .sampler import GenConfig, SceneSpec, apply_occlusion_rate, assign_category, sample_scene

__version__ = "0.1.0"
