"""COCO records: run-length encoding, annotation offsets and dataset files."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

__all__ = [
    "AnnotationRecord",
    "DatasetManifest",
    "encode_rle",
    "decode_rle",
    "compress_counts",
    "decompress_counts",
    "rle_to_coco",
    "coco_to_mask",
    "offset_annotation",
    "offset_direction",
    "emit_record",
    "category_list",
    "write_dataset",
    "read_json",
    "sha256_file",
    "pixel_digest",
]

GENERATOR_VERSION = "inscore-gen/0.1.0"
ANNOTATION_DIR = "annotations"
IMAGE_DIR = "images"
MANIFEST_NAME = "manifest.json"


def encode_rle(mask: np.ndarray) -> list[int]:
    """Column-major run lengths, alternating background/foreground, background first."""
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2 or 0 in mask.shape:
        raise ValueError(f"mask must be a non-empty 2-D array, got shape {mask.shape}")
    flat = mask.ravel(order="F")
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate([[0], change, [flat.size]])
    counts = np.diff(bounds).tolist()
    if flat[0]:
        counts.insert(0, 0)
    return counts


def decode_rle(counts: Sequence[int], height: int, width: int) -> np.ndarray:
    counts = np.asarray(counts, dtype=np.int64)
    if (counts < 0).any() or counts.sum() != height * width:
        raise ValueError(f"run lengths sum to {counts.sum()}, expected {height * width}")
    values = np.arange(len(counts)) % 2 == 1
    flat = np.repeat(values, counts)
    return flat.reshape((width, height)).T.copy()


def compress_counts(counts: Sequence[int]) -> str:
    """COCO compressed-counts string (5-bit groups, deltas from index 3 on)."""
    out = []
    for i, c in enumerate(counts):
        x = int(c)
        if i > 2:
            x -= int(counts[i - 2])
        more = True
        while more:
            ch = x & 0x1F
            x >>= 5
            more = (x != -1) if (ch & 0x10) else (x != 0)
            if more:
                ch |= 0x20
            out.append(chr(ch + 48))
    return "".join(out)


def decompress_counts(s: str) -> list[int]:
    counts: list[int] = []
    pos = 0
    while pos < len(s):
        x = 0
        k = 0
        more = True
        while more:
            ch = ord(s[pos]) - 48
            x |= (ch & 0x1F) << (5 * k)
            more = bool(ch & 0x20)
            pos += 1
            k += 1
            if not more and (ch & 0x10):
                x |= -1 << (5 * k)
        if len(counts) > 2:
            x += counts[-2]
        counts.append(x)
    return counts


def rle_to_coco(mask: np.ndarray) -> dict[str, Any]:
    h, w = mask.shape
    return {"size": [int(h), int(w)], "counts": compress_counts(encode_rle(mask))}


def coco_to_mask(segmentation: dict[str, Any]) -> np.ndarray:
    h, w = segmentation["size"]
    counts = segmentation["counts"]
    if isinstance(counts, str):
        counts = decompress_counts(counts)
    return decode_rle(counts, h, w)


def offset_direction(rng: np.random.Generator) -> tuple[float, float]:
    angle = rng.uniform(0.0, 2.0 * math.pi)
    return math.cos(angle), math.sin(angle)


def offset_annotation(mask: np.ndarray, distance: float, direction: tuple[float, float]) -> np.ndarray:
    """Translate ``mask`` by ``round(distance * direction)`` pixels, clipping at the borders."""
    if distance < 0:
        raise ValueError(f"offset distance must be >= 0, got {distance}")
    dx = int(round(distance * direction[0]))
    dy = int(round(distance * direction[1]))
    if dx == 0 and dy == 0:
        return mask.copy()
    h, w = mask.shape
    out = np.zeros_like(mask)
    if abs(dx) >= w or abs(dy) >= h:
        return out
    out[max(dy, 0):h + min(dy, 0), max(dx, 0):w + min(dx, 0)] = \
        mask[max(-dy, 0):h - max(dy, 0), max(-dx, 0):w - max(dx, 0)]
    return out


def tight_bbox(mask: np.ndarray) -> list[int]:
    cols = np.flatnonzero(mask.any(axis=0))
    rows = np.flatnonzero(mask.any(axis=1))
    if cols.size == 0:
        return [0, 0, 0, 0]
    return [int(cols[0]), int(rows[0]), int(cols[-1] - cols[0] + 1), int(rows[-1] - rows[0] + 1)]


@dataclass
class AnnotationRecord:
    image_id: int
    category_id: int
    segmentation: dict[str, Any]
    bbox: list[int]
    area: int
    id: int = 0
    iscrowd: int = 0
    # extras outside the COCO core: render slot and whether V_k is a strict subset of S_k
    slot: int = 0
    occluded: int = 0

    def to_json(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "image_id": self.image_id,
            "category_id": self.category_id,
            "segmentation": self.segmentation,
            "bbox": self.bbox,
            "area": self.area,
            "iscrowd": self.iscrowd,
            "slot": self.slot,
            "occluded": self.occluded,
        }


def emit_record(slot: int, visible: np.ndarray, category: int, image_id: int,
                occluded: bool = False) -> AnnotationRecord | None:
    """COCO record for one visible mask; ``None`` for an empty (fully hidden) instance."""
    area = int(np.count_nonzero(visible))
    if area == 0:
        return None
    return AnnotationRecord(
        image_id=image_id,
        category_id=int(category),
        segmentation=rle_to_coco(visible),
        bbox=tight_bbox(visible),
        area=area,
        slot=slot,
        occluded=int(bool(occluded)),
    )


def category_list(num_classes: int) -> list[dict[str, Any]]:
    width = max(4, len(str(num_classes)))
    return [{"id": c, "name": f"class_{c:0{width}d}", "supercategory": "contour"}
            for c in range(1, num_classes + 1)]


def image_file_name(index: int) -> str:
    return f"{index:06d}.png"


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def pixel_digest(image: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(repr((image.shape, str(image.dtype))).encode())
    h.update(np.ascontiguousarray(image).tobytes())
    return h.hexdigest()


def read_json(path: str | Path) -> Any:
    with open(path) as f:
        return json.load(f)


def _dump_json(obj: Any, path: Path) -> None:
    # fixed key order and separators keep the bytes a pure function of the content
    path.write_text(json.dumps(obj, separators=(",", ":"), sort_keys=False) + "\n")


@dataclass
class DatasetManifest:
    config: dict[str, Any]
    image_count: int
    splits: dict[str, dict[str, Any]] = field(default_factory=dict)
    annotation_digests: dict[str, str] = field(default_factory=dict)
    image_digests: list[str] = field(default_factory=list)
    generator_version: str = GENERATOR_VERSION
    status: str = "complete"
    notes: dict[str, str] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {
            "generator_version": self.generator_version,
            "status": self.status,
            "image_count": self.image_count,
            "config": self.config,
            "splits": self.splits,
            "annotation_digests": self.annotation_digests,
            "image_pixel_digests": self.image_digests,
            "notes": self.notes,
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> "DatasetManifest":
        return cls(
            config=data["config"],
            image_count=data["image_count"],
            splits=data["splits"],
            annotation_digests=data["annotation_digests"],
            image_digests=data.get("image_pixel_digests", []),
            generator_version=data.get("generator_version", ""),
            status=data.get("status", ""),
            notes=data.get("notes", {}),
        )


def annotation_file(split: str) -> str:
    return f"{ANNOTATION_DIR}/instances_{split}.json"


def write_dataset(images: Iterable[dict[str, Any]], records: Iterable[AnnotationRecord],
                  manifest: DatasetManifest, out_dir: str | Path, split: str = "train") -> DatasetManifest:
    """Assemble the annotation file and manifest for images already written under ``out_dir``.

    ``images`` are COCO image entries ordered by id; ``records`` are ordered by
    (image id, slot) and receive consecutive ids starting at 1.
    """
    out = Path(out_dir)
    (out / ANNOTATION_DIR).mkdir(parents=True, exist_ok=True)
    images = list(images)
    annotations = []
    for i, rec in enumerate(records, start=1):
        rec.id = i
        annotations.append(rec.to_json())
    coco = {
        "info": {"description": "formula-driven hollow contour instances", "version": manifest.generator_version},
        "licenses": [],
        "images": images,
        "annotations": annotations,
        "categories": category_list(int(manifest.config["num_classes"])),
    }
    ann_rel = annotation_file(split)
    _dump_json(coco, out / ann_rel)
    manifest.splits[split] = {
        "annotation_file": ann_rel,
        "images": [img["file_name"] for img in images],
    }
    manifest.annotation_digests[ann_rel] = sha256_file(out / ann_rel)
    manifest.image_count = len(images)
    (out / MANIFEST_NAME).write_text(json.dumps(manifest.to_json(), indent=2) + "\n")
    return manifest
