import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from inscore import GenConfig
from inscore.rng import SeedTree
from inscore.sampler import ConfigError, apply_occlusion_rate, assign_category, load_config, sample_scene


def test_kmax_one_gives_single_instance():
    config = GenConfig(max_instances=1)
    assert all(len(sample_scene(config, i)) == 1 for i in range(50))


def test_scene_is_deterministic():
    config = GenConfig(master_seed=5)
    assert sample_scene(config, 17) == sample_scene(config, 17)
    assert sample_scene(config, 17) != sample_scene(config, 18)
    assert sample_scene(config, 17) != sample_scene(config.replace(master_seed=6), 17)


def test_scene_independent_of_other_images():
    config = GenConfig(master_seed=5)
    alone = sample_scene(config, 40)
    for i in range(40):
        sample_scene(config, i)
    assert sample_scene(config, 40) == alone


def test_instance_count_mean():
    config = GenConfig()
    counts = np.array([len(sample_scene(config, i)) for i in range(10_000)])
    assert 16.0 <= counts.mean() <= 17.0
    assert counts.min() == 1 and counts.max() == 32


@given(st.integers(0, 10**6), st.sampled_from(["uniform", "param-binned"]), st.floats(20, 300))
def test_sampled_params_are_valid(index, mode, rate):
    config = GenConfig(width=200, height=150, label_mode=mode, occlusion_rate=rate, master_seed=index % 7)
    scene = sample_scene(config, index)
    assert 1 <= len(scene) <= config.max_instances
    r_lo, r_hi = apply_occlusion_rate(config)
    for k, p in enumerate(scene.instances, start=1):
        assert p.depth_index == k
        assert 0 <= p.center[0] < 200 and 0 <= p.center[1] < 150
        assert 1 <= p.num_rings <= 50 and 3 <= p.num_vertices <= 502
        assert r_lo <= p.radius <= r_hi
        assert 2 <= p.line_width <= 12
        assert all(0.5 <= o <= 2.0 for o in p.aspect)
        assert max(p.noise_scale) <= 0.9 * p.line_width < p.line_width
        assert 1 <= p.category <= 256


def test_occlusion_rate_scales_radius_bounds():
    base = GenConfig()
    assert apply_occlusion_rate(base) == (512 / 64, 512 / 6)
    assert apply_occlusion_rate(base.replace(occlusion_rate=200)) == (2 * 512 / 64, 2 * 512 / 6)
    assert apply_occlusion_rate(base.replace(occlusion_rate=50)) == (0.5 * 512 / 64, 0.5 * 512 / 6)


def test_occlusion_rate_100_is_default():
    explicit = GenConfig(occlusion_rate=100.0, master_seed=9)
    implicit = GenConfig(master_seed=9)
    assert all(sample_scene(explicit, i) == sample_scene(implicit, i) for i in range(20))


def test_single_class_always_one():
    config = GenConfig(num_classes=1)
    rng = SeedTree(0).stream()
    assert {assign_category(5, 10, config, rng) for _ in range(200)} == {1}


def test_uniform_categories_balanced():
    config = GenConfig()
    rng = SeedTree(123).stream()
    draws = np.array([assign_category(1, 3, config, rng) for _ in range(100_000)])
    freq = np.bincount(draws, minlength=257)[1:]
    p = 1 / 256
    sigma = np.sqrt(p * (1 - p) / draws.size)
    assert np.all(np.abs(freq / draws.size - p) <= 5 * sigma)
    assert stats.chisquare(freq).pvalue > 0.01


def test_param_binned_is_deterministic():
    config = GenConfig(label_mode="param-binned")
    a = assign_category(17, 230, config, SeedTree(1).stream())
    b = assign_category(17, 230, config, SeedTree(2).stream())
    assert a == b


def test_param_binned_covers_grid():
    config = GenConfig(label_mode="param-binned")
    cats = {assign_category(N, n, config, None) for N in range(1, 51) for n in range(3, 503)}
    assert cats == set(range(1, 257))
    assert assign_category(1, 3, config, None) == 1
    assert assign_category(50, 502, config, None) == 256


def test_param_binned_folds_onto_fewer_classes():
    config = GenConfig(label_mode="param-binned", num_classes=10)
    cats = {assign_category(N, n, config, None) for N in range(1, 51) for n in range(3, 503, 7)}
    assert cats == set(range(1, 11))


@pytest.mark.parametrize("bad, field", [
    (dict(width=0), "width"),
    (dict(max_instances=0), "max_instances"),
    (dict(ring_range=(5, 2)), "ring_range"),
    (dict(vertex_range=(2, 10)), "vertex_range"),
    (dict(occlusion_rate=0), "occlusion_rate"),
    (dict(mask_offset=-1), "mask_offset"),
    (dict(label_mode="other"), "label_mode"),
    (dict(noise_scale_range=(5.0, 6.0)), "noise_scale_range"),
    (dict(radius_range=(0.0, 3.0)), "radius_range"),
])
def test_invalid_config_names_field(bad, field):
    with pytest.raises(ConfigError) as err:
        GenConfig(**bad)
    assert err.value.field == field


def test_config_file_round_trip(tmp_path):
    path = tmp_path / "gen.yaml"
    path.write_text("width: 128\nheight: 96\nring_range: [2, 9]\nlabel_mode: param-binned\n")
    config = load_config(path, max_instances=4)
    assert (config.width, config.height, config.ring_range, config.max_instances) == (128, 96, (2, 9), 4)
    assert config.label_mode == "param-binned"
    resolved = config.resolved().to_dict()
    assert resolved["radius_range"] == [96 / 64, 96 / 6]
    assert GenConfig.from_dict(resolved).resolved() == config.resolved()


def test_config_file_unknown_field(tmp_path):
    path = tmp_path / "gen.yaml"
    path.write_text("widht: 128\n")
    with pytest.raises(ConfigError) as err:
        load_config(path)
    assert err.value.field == "widht"
