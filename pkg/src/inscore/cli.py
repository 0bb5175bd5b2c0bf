"""Command line: ``inscore generate | stats | preview | validate``.

Logs and progress go to stderr; stdout carries only JSON results.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from collections import Counter
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from .annotate import coco_to_mask
from .pipeline import DatasetIOError, generate_dataset
from .sampler import ConfigError, GenConfig, load_config
from .validate import DatasetFormatError, load_dataset, validate_dataset

log = logging.getLogger("inscore")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2

# CLI flag dest -> GenConfig field
_OVERRIDES = {
    "seed": "master_seed",
    "width": "width",
    "height": "height",
    "kmax": "max_instances",
    "classes": "num_classes",
    "occlusion_rate": "occlusion_rate",
    "mask_offset": "mask_offset",
    "label_mode": "label_mode",
    "antialias": "antialias",
}


def build_config(args: argparse.Namespace) -> GenConfig:
    overrides = {field: getattr(args, dest) for dest, field in _OVERRIDES.items()}
    if args.config:
        return load_config(args.config, **overrides)
    return GenConfig.from_dict({k: v for k, v in overrides.items() if v is not None})


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")
    sys.stdout.flush()


def cmd_generate(args: argparse.Namespace) -> int:
    try:
        config = build_config(args)
    except ConfigError as exc:
        log.error("invalid config: %s", exc)
        return EXIT_INVALID
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_IO
    if args.count < 0 or args.workers < 1:
        log.error("--count must be >= 0 and --workers >= 1")
        return EXIT_INVALID

    start = time.perf_counter()
    step = max(1, args.count // 20)

    def progress(done, total):
        if done % step == 0 or done == total:
            log.info("rendered %d/%d images (%.1f img/s)", done, total, done / (time.perf_counter() - start))

    try:
        manifest = generate_dataset(config, args.count, args.out, workers=args.workers, progress=progress)
    except DatasetIOError as exc:
        log.error("%s", exc)
        return EXIT_IO
    _emit({
        "out": str(args.out),
        "image_count": manifest.image_count,
        "annotation_digests": manifest.annotation_digests,
        "seconds": round(time.perf_counter() - start, 3),
    })
    return EXIT_OK


def dataset_stats(root: str | Path) -> dict:
    manifest, coco = load_dataset(root)
    per_image = Counter(a["image_id"] for a in coco["annotations"])
    ann_hist = Counter(per_image.get(img["id"], 0) for img in coco["images"])
    # rendered instances, including fully hidden ones that carry no annotation
    hist = Counter(img.get("num_instances", per_image.get(img["id"], 0)) for img in coco["images"])
    areas = np.array([a["area"] for a in coco["annotations"]], dtype=np.float64)
    classes = Counter(a["category_id"] for a in coco["annotations"])
    n_ann = len(coco["annotations"])
    occluded = sum(int(a.get("occluded", 0)) for a in coco["annotations"])
    if areas.size:
        q = np.quantile(areas, [0.0, 0.25, 0.5, 0.75, 1.0])
        area = {"mean": float(areas.mean()), "min": float(q[0]), "p25": float(q[1]), "median": float(q[2]),
                "p75": float(q[3]), "max": float(q[4])}
    else:
        area = {"mean": 0.0, "min": 0.0, "p25": 0.0, "median": 0.0, "p75": 0.0, "max": 0.0}
    return {
        "image_count": len(coco["images"]),
        "annotation_count": n_ann,
        "instances_per_image": {str(k): hist[k] for k in sorted(hist)},
        "annotations_per_image": {str(k): ann_hist[k] for k in sorted(ann_hist)},
        "area": area,
        "occluded_fraction": occluded / n_ann if n_ann else 0.0,
        "class_histogram": {str(k): classes[k] for k in sorted(classes)},
        "config": manifest.get("config", {}),
    }


def cmd_stats(args: argparse.Namespace) -> int:
    try:
        report = dataset_stats(args.dataset)
    except DatasetFormatError as exc:
        log.error("malformed dataset: %s", exc)
        return EXIT_INVALID
    except OSError as exc:
        log.error("cannot read dataset: %s", exc)
        return EXIT_IO
    _emit(report)
    return EXIT_OK


def instance_color(slot: int) -> tuple[int, int, int]:
    # golden-ratio hue walk; every channel >= 40 so colors are never black
    hue = (slot * 0.618033988749895) % 1.0
    rgb = np.array([abs(hue * 6 - 3) - 1, 2 - abs(hue * 6 - 2), 2 - abs(hue * 6 - 4)])
    return tuple(int(40 + 215 * c) for c in np.clip(rgb, 0, 1))


def render_preview(root: str | Path, image_id: int, coco: dict) -> tuple[np.ndarray, np.ndarray]:
    """Return (composite, overlay) for ``image_id``; composite is raw | overlay side by side."""
    images = {img["id"]: img for img in coco["images"]}
    if image_id not in images:
        raise KeyError(image_id)
    img = images[image_id]
    with Image.open(Path(root) / img["file_name"]) as im:
        raw = np.asarray(im.convert("RGB"))
    overlay = np.zeros_like(raw)
    for ann in coco["annotations"]:
        if ann["image_id"] == image_id:
            overlay[coco_to_mask(ann["segmentation"])] = instance_color(ann.get("slot", ann["id"]))
    gap = np.full((raw.shape[0], 4, 3), 128, dtype=np.uint8)
    return np.concatenate([raw, gap, overlay], axis=1), overlay


def cmd_preview(args: argparse.Namespace) -> int:
    try:
        _, coco = load_dataset(args.dataset)
    except DatasetFormatError as exc:
        log.error("malformed dataset: %s", exc)
        return EXIT_INVALID
    except OSError as exc:
        log.error("cannot read dataset: %s", exc)
        return EXIT_IO
    known = {img["id"] for img in coco["images"]}
    unknown = [i for i in args.ids if i not in known]
    if unknown:
        log.error("unknown image id(s): %s", ", ".join(map(str, unknown)))
        return EXIT_INVALID
    out_dir = Path(args.out) if args.out else Path(args.dataset) / "preview"
    written = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for image_id in args.ids:
            composite, _ = render_preview(args.dataset, image_id, coco)
            path = out_dir / f"preview_{image_id:06d}.png"
            Image.fromarray(composite).save(path)
            written.append(str(path))
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    _emit({"written": written})
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    violations = validate_dataset(args.dataset, check_pixels=not args.skip_pixels)
    for v in violations[: args.max_report]:
        log.error("%s", v)
    if len(violations) > args.max_report:
        log.error("... %d more violation(s)", len(violations) - args.max_report)
    _emit({"valid": not violations, "violations": len(violations),
           "by_invariant": dict(Counter(v.invariant for v in violations))})
    return EXIT_OK if not violations else EXIT_INVALID


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="inscore", description="Formula-driven hollow-contour instance segmentation data.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="render a dataset")
    g.add_argument("--count", type=int, default=100)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", required=True)
    g.add_argument("--config", help="YAML/JSON file with GenConfig fields; flags override it")
    g.add_argument("--width", type=int)
    g.add_argument("--height", type=int)
    g.add_argument("--kmax", type=int)
    g.add_argument("--classes", type=int)
    g.add_argument("--occlusion-rate", type=float)
    g.add_argument("--mask-offset", type=int)
    g.add_argument("--label-mode", choices=["uniform", "param-binned"])
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--antialias", action="store_true", default=None)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("stats", help="summarize a dataset as JSON")
    s.add_argument("dataset")
    s.set_defaults(func=cmd_stats)

    p = sub.add_parser("preview", help="write raw | mask composites")
    p.add_argument("dataset")
    p.add_argument("ids", type=int, nargs="+")
    p.add_argument("--out")
    p.set_defaults(func=cmd_preview)

    v = sub.add_parser("validate", help="check every dataset invariant")
    v.add_argument("dataset")
    v.add_argument("--skip-pixels", action="store_true", help="do not decode images against the manifest digests")
    v.add_argument("--max-report", type=int, default=50)
    v.set_defaults(func=cmd_validate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
