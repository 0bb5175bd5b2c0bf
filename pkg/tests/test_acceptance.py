"""Exit criteria for the generator. Each test prints one PASS/FAIL line in the terminal summary."""
import time

import numpy as np
import pytest
from PIL import Image
from scipy import stats

from coco_schema import coco_problems
from conftest import run_cli
from inscore import GenConfig, build_contour, fill_polygon, render_scene, sample_scene
from inscore.geometry import InstanceParams
from inscore.metrics import mask_iou, shell_overlap
from inscore.pipeline import instance_noise
from inscore.raster import stroke_mask
from inscore.rng import SeedTree
from oracles import brute_fill_fast, painter_labels

pytestmark = pytest.mark.slow


def test_1_paper_parameter_fidelity(criterion):
    start = time.perf_counter()
    config = GenConfig()
    assert (config.width, config.height, config.max_instances, config.num_classes) == (512, 512, 32, 256)
    assert config.ring_range == (1, 50) and config.vertex_range == (3, 502)
    K, N, n, cat = [], [], [], []
    for i in range(10_000):
        scene = sample_scene(config, i)
        K.append(len(scene))
        for p in scene.instances:
            N.append(p.num_rings)
            n.append(p.num_vertices)
            cat.append(p.category)
    K, N, n, cat = map(np.asarray, (K, N, n, cat))
    expected = {"K": (K, 1, 32), "N": (N, 1, 50), "n": (n, 3, 502), "category": (cat, 1, 256)}
    lines = []
    for name, (x, lo, hi) in expected.items():
        mean = (lo + hi) / 2
        assert x.min() >= lo and x.max() <= hi
        assert abs(x.mean() - mean) <= 0.02 * mean, (name, x.mean(), mean)
        lines.append(f"{name} mean {x.mean():.2f}/{mean}")
    p_K = stats.chisquare(np.bincount(K, minlength=33)[1:]).pvalue
    p_cat = stats.chisquare(np.bincount(cat, minlength=257)[1:]).pvalue
    elapsed = time.perf_counter() - start
    criterion.detail(f"{', '.join(lines)}; chi2 p(K)={p_K:.3f} p(cat)={p_cat:.3f}; {elapsed:.0f}s")
    assert p_K > 0.01 and p_cat > 0.01
    assert elapsed < 600


def test_2_oracle_equivalence(criterion):
    config = GenConfig(width=64, height=64, max_instances=8, master_seed=2024)
    fills = 0
    for index in range(200):
        result = render_scene(config, index)
        shapes, params = result.shapes, result.scene.instances
        for shape in shapes:
            for ring in {id(shape.inner): shape.inner, id(shape.outer): shape.outer}.values():
                assert np.array_equal(fill_polygon(ring, 64, 64), brute_fill_fast(ring, 64, 64))
                fills += 1
        bands = [stroke_mask([s.outer], p.line_width, 64, 64) if len(s) == 1 else None
                 for p, s in zip(params, shapes)]
        oracle = painter_labels([s.inner for s in shapes], [s.outer for s in shapes], bands, 64, 64)
        assert np.array_equal(result.label_map.labels, oracle), f"scene {index}"
    criterion.detail(f"200 scenes, 0 differing pixels; {fills} ring fills match point-in-polygon")


def test_3_geometry_closed_form(criterion):
    rng = SeedTree(77).stream()
    worst = 0.0
    for draw in range(1000):
        p = InstanceParams(
            num_rings=int(rng.integers(1, 51)), num_vertices=int(rng.integers(3, 503)),
            radius=float(rng.uniform(8, 86)), line_width=float(rng.uniform(2, 12)),
            center=(float(rng.uniform(0, 512)), float(rng.uniform(0, 512))),
        )
        shape = build_contour(p, instance_noise(GenConfig(), draw, 0))
        for ring_no, ring in enumerate(shape.rings):
            dist = np.hypot(ring[:, 0] - p.center[0], ring[:, 1] - p.center[1])
            worst = max(worst, np.abs(dist - (p.radius + ring_no * p.line_width)).max())
    criterion.detail(f"max radius error {worst:.2e} px over 1000 draws")
    assert worst <= 1e-9


def test_4_partition_invariants(criterion):
    config = GenConfig(master_seed=11)
    violations = 0
    for index in range(1000):
        r = render_scene(config, index)
        V = np.stack(r.visible)
        violations += int((V.sum(axis=0, dtype=np.int32) > 1).any())
        violations += int(not np.array_equal(r.visible[-1], r.hollow[-1]))
        for v, s, o in zip(r.visible, r.hollow, r.outer):
            violations += int((v & ~s).any()) + int((s & ~o).any())
        violations += int(sum(rec.area for rec in r.records) != np.count_nonzero(r.label_map.labels))
    criterion.detail(f"1000 scenes at 512x512, {violations} violations")
    assert violations == 0


def read_pixels(root, names):
    return [np.asarray(Image.open(root / name)) for name in names]


def test_5_determinism(seed42_runs, criterion):
    ann = "annotations/instances_train.json"
    first, second, parallel = (seed42_runs[k] for k in ("first", "second", "parallel"))
    a = (first / ann).read_bytes()
    assert a == (second / ann).read_bytes()
    assert a == (parallel / ann).read_bytes()
    names = [f"images/{i:06d}.png" for i in range(1000)]
    for name in names:
        pa = np.asarray(Image.open(first / name))
        assert np.array_equal(pa, np.asarray(Image.open(second / name))), name
        assert np.array_equal(pa, np.asarray(Image.open(parallel / name))), name
    criterion.detail("1000 images: annotation bytes and pixels identical across 2 runs and 1 vs 8 workers")


def test_6_ablation_knobs(criterion):
    overlap = {}
    for rate in (50, 100, 200):
        config = GenConfig(occlusion_rate=rate, master_seed=6)
        overlap[rate] = float(np.concatenate([shell_overlap(config, i) for i in range(1000)]).mean())
    assert overlap[50] < overlap[100] < overlap[200]

    base = GenConfig(master_seed=6)
    picks = []
    index = 0
    while len(picks) < 100:
        r = render_scene(base, index)
        picks += [(index, k) for k, v in enumerate(r.visible) if v.any()]
        index += 1
    picks = picks[:100]
    images = sorted({i for i, _ in picks})
    iou = {}
    for d in (0, 10, 20, 30):
        config = base.replace(mask_offset=d)
        scenes = {i: render_scene(config, i) for i in images}
        iou[d] = float(np.mean([mask_iou(scenes[i].annotated[k], scenes[i].visible[k]) for i, k in picks]))
    criterion.detail("overlap " + ", ".join(f"{k}%:{v:.4f}" for k, v in overlap.items())
                     + "; IoU " + ", ".join(f"{k}px:{v:.4f}" for k, v in iou.items()))
    assert iou[0] == 1.0
    assert iou[0] > iou[10] > iou[20] > iou[30]


def test_7_format_validity(seed42_runs, criterion):
    root = seed42_runs["first"]
    problems = coco_problems(root / "annotations/instances_train.json")
    assert problems == [], problems[:5]
    proc = run_cli("validate", root, check=False)
    criterion.detail(f"COCO schema + pycocotools: 0 problems; validate exit {proc.returncode}")
    assert proc.returncode == 0, proc.stderr


def test_8_throughput(seed42_runs, criterion):
    report = seed42_runs["first_report"]
    rate = report["image_count"] / report["seconds"]
    criterion.detail(f"{rate:.1f} images/s on one worker (1000 images, 512x512, PNG writes included)")
    assert rate >= 5.0
