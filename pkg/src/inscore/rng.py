"""Splittable seeding and 1-D gradient noise.

Every random draw in the generator comes from a stream derived from a
``SeedTree`` path, so any image (or instance inside an image) can be
regenerated without replaying the draws that precede it.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

__all__ = ["SeedTree", "derive_stream", "PerlinNoise1D", "perlin_sample", "smootherstep"]

_MASK64 = (1 << 64) - 1


def _tag_key(tag: str) -> int:
    # builtin hash() is salted per process, so use a fixed digest
    return int.from_bytes(hashlib.blake2b(tag.encode("utf-8"), digest_size=4).digest(), "little")


@dataclass(frozen=True)
class SeedTree:
    master_seed: int
    path: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        if not 0 <= self.master_seed <= _MASK64:
            raise ValueError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        for tag, index in self.path:
            if index < 0:
                raise ValueError(f"negative index {index} for tag {tag!r}")

    def child(self, tag: str, index: int) -> "SeedTree":
        return SeedTree(self.master_seed, self.path + ((tag, int(index)),))

    def spawn_key(self) -> tuple[int, ...]:
        key: list[int] = []
        for tag, index in self.path:
            key.extend((_tag_key(tag), index))
        return tuple(key)

    def stream(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.master_seed, spawn_key=self.spawn_key())
        return np.random.Generator(np.random.Philox(seq))


def derive_stream(tree: SeedTree, tag: str, index: int) -> np.random.Generator:
    """Independent, reproducible generator for ``tree / (tag, index)``."""
    if index < 0:
        raise ValueError(f"index must be non-negative, got {index}")
    return tree.child(tag, index).stream()


def smootherstep(u):
    return u * u * u * (u * (u * 6.0 - 15.0) + 10.0)


@dataclass(frozen=True, eq=False)
class PerlinNoise1D:
    """Single-octave 1-D gradient noise.

    ``gradients`` holds one scalar slope in [-1, 1] per lattice point; the
    table wraps, so the noise is periodic with period ``len(gradients)``.
    ``frequency`` is the number of samples per lattice cell used when the
    noise is indexed by (vertex, ring), see :meth:`ring_coordinates`.
    """

    gradients: np.ndarray
    frequency: float = 8.0

    @classmethod
    def from_stream(cls, rng: np.random.Generator, size: int = 256, frequency: float = 8.0) -> "PerlinNoise1D":
        grads = rng.uniform(-1.0, 1.0, size)
        grads.setflags(write=False)
        return cls(grads, float(frequency))

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        cell = np.floor(t)
        u = t - cell
        i0 = cell.astype(np.int64) % len(self.gradients)
        i1 = (i0 + 1) % len(self.gradients)
        left = self.gradients[i0] * u
        right = self.gradients[i1] * (u - 1.0)
        s = smootherstep(u)
        # unit slopes peak at |0.5| mid-cell; rescale onto [-1, 1]
        out = 2.0 * (left + s * (right - left))
        return np.clip(out, -1.0, 1.0)

    def ring_coordinates(self, n: int, ring: int) -> np.ndarray:
        """Sample coordinates for vertices j = 0..n of ring index ``ring`` (0-based)."""
        j = np.arange(n + 1, dtype=np.float64)
        return (j + n * ring) / self.frequency


def perlin_sample(noise: PerlinNoise1D, t: float) -> float:
    if not np.isfinite(t):
        raise ValueError(f"noise coordinate must be finite, got {t}")
    return float(noise(t))
