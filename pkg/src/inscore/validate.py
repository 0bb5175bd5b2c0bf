"""Invariant checks over a dataset written by :func:`inscore.pipeline.generate_dataset`."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
from PIL import Image

from .annotate import MANIFEST_NAME, coco_to_mask, decompress_counts, encode_rle, compress_counts, pixel_digest, \
    sha256_file, tight_bbox

__all__ = ["Violation", "DatasetFormatError", "load_dataset", "validate_dataset"]


class DatasetFormatError(ValueError):
    def __init__(self, path: Path | str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = str(path)


@dataclass(frozen=True)
class Violation:
    invariant: str
    message: str
    image_id: int | None = None
    annotation_id: int | None = None

    def __str__(self):
        where = []
        if self.image_id is not None:
            where.append(f"image {self.image_id}")
        if self.annotation_id is not None:
            where.append(f"annotation {self.annotation_id}")
        loc = f" [{', '.join(where)}]" if where else ""
        return f"{self.invariant}{loc}: {self.message}"


def _load_json(path: Path) -> Any:
    try:
        with open(path) as f:
            return json.load(f)
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(path, f"malformed JSON ({exc})") from exc
    except UnicodeDecodeError as exc:
        raise DatasetFormatError(path, f"not valid UTF-8 ({exc})") from exc


def load_dataset(root: str | Path, split: str = "train") -> tuple[dict[str, Any], dict[str, Any]]:
    """Return (manifest, coco) for ``split``; raises DatasetFormatError or OSError."""
    root = Path(root)
    manifest = _load_json(root / MANIFEST_NAME)
    if not isinstance(manifest, dict) or "splits" not in manifest:
        raise DatasetFormatError(root / MANIFEST_NAME, "missing 'splits'")
    try:
        ann_rel = manifest["splits"][split]["annotation_file"]
    except (KeyError, TypeError) as exc:
        raise DatasetFormatError(root / MANIFEST_NAME, f"no annotation file for split {split!r}") from exc
    coco = _load_json(root / ann_rel)
    for key in ("images", "annotations", "categories"):
        if not isinstance(coco, dict) or not isinstance(coco.get(key), list):
            raise DatasetFormatError(root / ann_rel, f"missing top-level array {key!r}")
    return manifest, coco


def validate_dataset(root: str | Path, split: str = "train", check_pixels: bool = True) -> list[Violation]:
    root = Path(root)
    out: list[Violation] = []
    try:
        manifest = _load_json(root / MANIFEST_NAME)
    except (OSError, DatasetFormatError) as exc:
        return [Violation("manifest", str(exc))]
    if manifest.get("status") != "complete":
        out.append(Violation("manifest", f"status is {manifest.get('status')!r}, expected 'complete'"))
    for rel, digest in manifest.get("annotation_digests", {}).items():
        path = root / rel
        if not path.exists():
            out.append(Violation("file", f"missing annotation file {path}"))
        elif sha256_file(path) != digest:
            out.append(Violation("digest", f"{path} sha256 does not match the manifest"))
    try:
        _, coco = load_dataset(root, split)
    except (OSError, DatasetFormatError) as exc:
        out.append(Violation("format", str(exc)))
        return out

    config = manifest.get("config", {})
    num_classes = int(config.get("num_classes", 0))
    check_disjoint = int(config.get("mask_offset", 0)) == 0

    images = {}
    for img in coco["images"]:
        missing = {"id", "file_name", "width", "height"} - set(img)
        if missing:
            out.append(Violation("schema", f"image entry lacks {sorted(missing)}", img.get("id")))
            continue
        if img["id"] in images:
            out.append(Violation("schema", "duplicate image id", img["id"]))
        images[img["id"]] = img
    if len(images) != manifest.get("image_count"):
        out.append(Violation("manifest", f"{len(images)} images listed, manifest says {manifest.get('image_count')}"))

    pixel_digests = manifest.get("image_pixel_digests", [])
    if check_pixels:
        for pos, img in enumerate(coco["images"]):
            path = root / img["file_name"]
            try:
                with Image.open(path) as im:
                    arr = np.asarray(im.convert("RGB"))
            except OSError as exc:
                out.append(Violation("file", f"cannot read {path}: {exc}", img["id"]))
                continue
            if arr.shape[:2] != (img["height"], img["width"]):
                out.append(Violation("image", f"{path} is {arr.shape[1]}x{arr.shape[0]}", img["id"]))
            if pos < len(pixel_digests) and pixel_digest(arr) != pixel_digests[pos]:
                out.append(Violation("digest", f"{path} pixels do not match the manifest", img["id"]))

    seen_ids = set()
    owner_image = None
    owner = None
    ordered = sorted(coco["annotations"], key=lambda a: (str(type(a.get("image_id"))), a.get("image_id") or 0))
    for ann in ordered:
        aid = ann.get("id")
        iid = ann.get("image_id")
        missing = {"id", "image_id", "category_id", "segmentation", "bbox", "area", "iscrowd"} - set(ann)
        if missing:
            out.append(Violation("schema", f"annotation lacks {sorted(missing)}", iid, aid))
            continue
        if aid in seen_ids:
            out.append(Violation("schema", "duplicate annotation id", iid, aid))
        seen_ids.add(aid)
        if iid not in images:
            out.append(Violation("reference", "image_id does not exist", iid, aid))
            continue
        img = images[iid]
        if not 1 <= ann["category_id"] <= num_classes:
            out.append(Violation("category", f"category_id {ann['category_id']} outside [1, {num_classes}]", iid, aid))
        seg = ann["segmentation"]
        if not isinstance(seg, dict) or seg.get("size") != [img["height"], img["width"]]:
            out.append(Violation("rle", f"segmentation size {seg.get('size') if isinstance(seg, dict) else seg} "
                                        f"does not match image", iid, aid))
            continue
        try:
            mask = coco_to_mask(seg)
        except (ValueError, TypeError, IndexError) as exc:
            out.append(Violation("rle", f"cannot decode: {exc}", iid, aid))
            continue
        counts = decompress_counts(seg["counts"]) if isinstance(seg["counts"], str) else list(seg["counts"])
        recoded = encode_rle(mask)
        if recoded != counts or (isinstance(seg["counts"], str) and compress_counts(recoded) != seg["counts"]):
            out.append(Violation("rle", "round-trip does not reproduce the stored counts", iid, aid))
        area = int(mask.sum())
        if area < 1:
            out.append(Violation("area", "empty segmentation", iid, aid))
        if ann["area"] != area:
            out.append(Violation("area", f"area {ann['area']} != decoded pixel count {area}", iid, aid))
        if list(ann["bbox"]) != tight_bbox(mask):
            out.append(Violation("bbox", f"bbox {ann['bbox']} != tight box {tight_bbox(mask)}", iid, aid))
        x, y, w, h = ann["bbox"]
        if x < 0 or y < 0 or x + w > img["width"] or y + h > img["height"]:
            out.append(Violation("bbox", f"bbox {ann['bbox']} leaves the image", iid, aid))
        if check_disjoint:
            if owner_image != iid or owner is None or owner.shape != mask.shape:
                owner_image = iid
                owner = np.zeros(mask.shape, dtype=np.int64)
            clash = np.unique(owner[mask & (owner != 0)])
            if clash.size:
                out.append(Violation("disjointness", f"overlaps annotation(s) {clash.tolist()}", iid, aid))
            owner[mask & (owner == 0)] = aid if aid != 0 else -1
    return out
