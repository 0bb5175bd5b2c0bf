"""Nested contour rings: a regular base polygon grown outward ring by ring."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import PerlinNoise1D

__all__ = ["InstanceParams", "ContourShape", "base_ring", "expand_ring", "build_contour", "radial_profile"]


@dataclass(frozen=True)
class InstanceParams:
    num_rings: int
    num_vertices: int
    radius: float
    line_width: float
    aspect: tuple[float, float] = (1.0, 1.0)
    noise_scale: tuple[float, float] = (0.0, 0.0)
    center: tuple[float, float] = (0.0, 0.0)
    category: int = 1
    depth_index: int = 1

    def __post_init__(self):
        problems = []
        if self.num_rings < 1:
            problems.append(f"num_rings={self.num_rings} < 1")
        if self.num_vertices < 3:
            problems.append(f"num_vertices={self.num_vertices} < 3")
        if not self.radius > 0:
            problems.append(f"radius={self.radius} must be > 0")
        if not self.line_width > 0:
            problems.append(f"line_width={self.line_width} must be > 0")
        if min(self.aspect) <= 0:
            problems.append(f"aspect={self.aspect} must be positive")
        if min(self.noise_scale) < 0:
            problems.append(f"noise_scale={self.noise_scale} must be non-negative")
        elif not self.line_width - max(self.noise_scale) > 0:
            problems.append(f"line_width={self.line_width} must exceed max(noise_scale)={max(self.noise_scale)}")
        if self.category < 1:
            problems.append(f"category={self.category} < 1")
        if problems:
            raise ValueError("invalid InstanceParams: " + "; ".join(problems))

    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.num_vertices + 1) / self.num_vertices


@dataclass(frozen=True, eq=False)
class ContourShape:
    """``rings[p]`` is an (n + 1, 2) array of canvas points, closed (last == first)."""

    rings: tuple[np.ndarray, ...]

    @property
    def inner(self) -> np.ndarray:
        return self.rings[0]

    @property
    def outer(self) -> np.ndarray:
        return self.rings[-1]

    def __len__(self):
        return len(self.rings)


def base_ring(params: InstanceParams) -> np.ndarray:
    theta = params.angles()
    ox, oy = params.aspect
    ring = np.empty((params.num_vertices + 1, 2))
    ring[:, 0] = params.radius * ox * np.cos(theta) + params.center[0]
    ring[:, 1] = params.radius * oy * np.sin(theta) + params.center[1]
    ring[-1] = ring[0]
    return ring


def expand_ring(prev: np.ndarray, params: InstanceParams, ring_index: int, noise: PerlinNoise1D) -> np.ndarray:
    """Grow ring ``ring_index - 1`` into ring ``ring_index`` (1-based, >= 2)."""
    if ring_index < 2:
        raise ValueError(f"ring_index must be >= 2, got {ring_index}")
    n = params.num_vertices
    if prev.shape != (n + 1, 2):
        raise ValueError(f"expected ring of shape {(n + 1, 2)}, got {prev.shape}")
    theta = params.angles()
    eps = noise(noise.ring_coordinates(n, ring_index - 1))
    lx, ly = params.noise_scale
    ring = np.empty_like(prev)
    ring[:, 0] = prev[:, 0] + (params.line_width + lx * eps) * np.cos(theta)
    ring[:, 1] = prev[:, 1] + (params.line_width + ly * eps) * np.sin(theta)
    # the noise at j = n generally differs from j = 0; keep the ring closed
    ring[-1] = ring[0]
    return ring


def build_contour(params: InstanceParams, noise: PerlinNoise1D) -> ContourShape:
    # all steps at once; cumsum adds in ring order, so this matches chained expand_ring calls exactly
    n, N = params.num_vertices, params.num_rings
    theta = params.angles()
    ring_ids = np.arange(1, N)[:, None]
    eps = noise((np.arange(n + 1) + n * ring_ids) / noise.frequency)
    lx, ly = params.noise_scale
    steps = np.empty((N, n + 1, 2))
    steps[0] = base_ring(params)
    steps[1:, :, 0] = (params.line_width + lx * eps) * np.cos(theta)
    steps[1:, :, 1] = (params.line_width + ly * eps) * np.sin(theta)
    steps[1:, -1] = steps[1:, 0]
    rings = list(np.cumsum(steps, axis=0))
    for ring in rings:
        ring.setflags(write=False)
    return ContourShape(tuple(rings))


def radial_profile(shape: ContourShape, params: InstanceParams) -> np.ndarray:
    """Per-vertex radial coordinate of each ring, shape (N, n + 1).

    Offsets are projected on the unit direction of vertex j before any
    aspect scaling, which is the coordinate in which rings grow.
    """
    theta = params.angles()
    direction = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    center = np.asarray(params.center, dtype=np.float64)
    return np.stack([((ring - center) * direction).sum(axis=1) for ring in shape.rings])
