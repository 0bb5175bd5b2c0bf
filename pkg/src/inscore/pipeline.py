"""End-to-end rendering of one image and parallel dataset generation."""
from __future__ import annotations

import multiprocessing as mp
import shutil
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np
from PIL import Image

from .annotate import (
    AnnotationRecord,
    DatasetManifest,
    IMAGE_DIR,
    MANIFEST_NAME,
    emit_record,
    image_file_name,
    offset_annotation,
    offset_direction,
    pixel_digest,
    write_dataset,
)
from .geometry import ContourShape, build_contour
from .raster import (
    LabelMap,
    build_label_map,
    draw_polylines,
    hollow_mask,
    outer_shell,
    resolve_visibility,
)
from .rng import PerlinNoise1D
from .sampler import GenConfig, SceneSpec, instance_tree, sample_scene

__all__ = ["RenderedScene", "instance_noise", "build_shapes", "render_scene", "generate_dataset", "DatasetIOError"]


class DatasetIOError(OSError):
    pass


@dataclass(eq=False)
class RenderedScene:
    scene: SceneSpec
    shapes: list[ContourShape]
    image: np.ndarray
    outer: list[np.ndarray]
    hollow: list[np.ndarray]
    visible: list[np.ndarray]
    label_map: LabelMap
    annotated: list[np.ndarray]
    records: list[AnnotationRecord]


def instance_noise(config: GenConfig, image_index: int, slot: int) -> PerlinNoise1D:
    tree = instance_tree(config, image_index, slot).child("noise", 0)
    return PerlinNoise1D.from_stream(tree.stream(), frequency=config.noise_frequency)


def build_shapes(config: GenConfig, scene: SceneSpec) -> list[ContourShape]:
    return [build_contour(p, instance_noise(config, scene.image_index, k))
            for k, p in enumerate(scene.instances)]


def render_scene(config: GenConfig, image_index: int) -> RenderedScene:
    W, H = config.width, config.height
    scene = sample_scene(config, image_index)
    shapes = build_shapes(config, scene)

    # strokes are gray-level, so draw one channel and copy it to RGB
    gray = np.zeros((H, W), dtype=np.uint8)
    for params, shape in zip(scene.instances, shapes):
        draw_polylines(gray, shape, params.line_width, antialias=config.antialias)
    image = np.repeat(gray[..., None], 3, axis=2)

    outer = [outer_shell(s, W, H, p.line_width) for p, s in zip(scene.instances, shapes)]
    hollow = [hollow_mask(s, W, H, p.line_width) for p, s in zip(scene.instances, shapes)]
    visible = resolve_visibility(hollow, outer)
    categories = [p.category for p in scene.instances]
    label_map = build_label_map(visible, categories, (H, W))

    annotated = []
    records = []
    for k, (params, v, s) in enumerate(zip(scene.instances, visible, hollow)):
        if config.mask_offset:
            rng = instance_tree(config, image_index, k).child("offset", 0).stream()
            v_ann = offset_annotation(v, config.mask_offset, offset_direction(rng))
        else:
            v_ann = v
        annotated.append(v_ann)
        # occlusion is judged on the true mask, before any offset
        rec = emit_record(k + 1, v_ann, params.category, image_index, occluded=not np.array_equal(v, s))
        if rec is not None:
            records.append(rec)
    return RenderedScene(scene, shapes, image, outer, hollow, visible, label_map, annotated, records)


def _write_png(image: np.ndarray, path: Path) -> None:
    Image.fromarray(image, mode="RGB").save(path, format="PNG", optimize=False, compress_level=6)


def _image_job(args: tuple[GenConfig, int, str]) -> tuple[int, int, str, list[AnnotationRecord]]:
    config, index, out_dir = args
    result = render_scene(config, index)
    _write_png(result.image, Path(out_dir) / IMAGE_DIR / image_file_name(index))
    return index, len(result.scene), pixel_digest(result.image), result.records


def generate_dataset(config: GenConfig, count: int, out_dir: str | Path, workers: int = 1,
                     progress: Callable[[int, int], None] | None = None) -> DatasetManifest:
    """Render ``count`` images into ``out_dir``; the output does not depend on ``workers``."""
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    out = Path(out_dir)
    if out.exists() and any(out.iterdir()):
        raise DatasetIOError(f"output directory is not empty: {out}")
    created = not out.exists()
    try:
        (out / IMAGE_DIR).mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DatasetIOError(f"cannot create {out / IMAGE_DIR}: {exc}") from exc

    try:
        images: list[dict[str, Any]] = []
        records: list[AnnotationRecord] = []
        digests: list[str] = []
        jobs = [(config, i, str(out)) for i in range(count)]
        if workers == 1 or count <= 1:
            results = map(_image_job, jobs)
            pool = None
        else:
            pool = mp.get_context("spawn").Pool(workers)
            results = pool.imap(_image_job, jobs, chunksize=max(1, min(16, count // (4 * workers))))
        try:
            # imap yields in submission order, so records stay sorted by (image, slot)
            for done, (index, rendered, digest, recs) in enumerate(results, start=1):
                images.append({"id": index, "file_name": f"{IMAGE_DIR}/{image_file_name(index)}",
                               "width": config.width, "height": config.height, "num_instances": rendered})
                records.extend(recs)
                digests.append(digest)
                if progress is not None:
                    progress(done, count)
        finally:
            if pool is not None:
                pool.close()
                pool.join()

        manifest = DatasetManifest(config=config.resolved().to_dict(), image_count=count, image_digests=digests)
        manifest.notes = {
            "mask_offset": "every annotation is translated by mask_offset pixels along a per-instance random "
                           "direction; images are not shifted" if config.mask_offset else "none",
            "occlusion_rate": "radius range scaled by occlusion_rate / 100",
        }
        return write_dataset(images, records, manifest, out)
    except BaseException as exc:
        _discard_partial(out, created)
        if isinstance(exc, OSError) and not isinstance(exc, DatasetIOError):
            raise DatasetIOError(f"{getattr(exc, 'filename', None) or out}: {exc}") from exc
        raise


def _discard_partial(out: Path, created: bool) -> None:
    if created:
        shutil.rmtree(out, ignore_errors=True)
        return
    for child in (out / IMAGE_DIR, out / "annotations", out / MANIFEST_NAME):
        if child.is_dir():
            shutil.rmtree(child, ignore_errors=True)
        elif child.exists():
            child.unlink()
