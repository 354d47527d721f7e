import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rrcap.errors import DegenerateCloud
from rrcap.pointcloud_io import PointCloud
from rrcap.projection import AXES, ProjectionView, RenderParams, render_views, splat_offsets, to_grayscale

from oracles import luma_direct

TINY = RenderParams(resolution=64, splat_radius=0)


def _same(a, b):
    return all(np.array_equal(va.rgb, vb.rgb) and np.array_equal(va.mask, vb.mask) for va, vb in zip(a, b))


def test_unit_cube_corners_hit_four_pixels(cube_corners):
    views = render_views(cube_corners, TINY)
    assert [v.axis_label for v in views] == list(AXES)
    for v in views:
        assert v.resolution == (64, 64)
        assert v.mask.sum() == 4, v.axis_label


def test_z_buffer_nearest_wins():
    pc = PointCloud([[0, 0, 1], [0, 0, 0]], [[255, 0, 0], [0, 0, 255]])
    views = render_views(pc, TINY)
    front = views["+Z"].rgb[views["+Z"].mask]
    back = views["-Z"].rgb[views["-Z"].mask]
    assert front.tolist() == [[255, 0, 0]]
    assert back.tolist() == [[0, 0, 255]]


def test_equal_depth_lower_index_wins():
    # points 0 and 1 coincide; point 2 only gives the box some extent
    pc = PointCloud([[0, 0, 0], [0, 0, 0], [1, 1, 1]], [[10, 10, 10], [200, 200, 200], [0, 0, 0]])
    for v in render_views(pc, TINY):
        colors = {tuple(c) for c in v.rgb[v.mask].tolist()}
        assert (200, 200, 200) not in colors


def test_deterministic(small_cube):
    a = render_views(small_cube, RenderParams(resolution=128))
    b = render_views(small_cube, RenderParams(resolution=128))
    assert _same(a, b)


def test_threads_do_not_change_output(small_cube):
    p = RenderParams(resolution=128)
    assert _same(render_views(small_cube, p, threads=1), render_views(small_cube, p, threads=4))


def test_background_outside_mask(small_torus):
    for v in render_views(small_torus, RenderParams(resolution=128, background=37)):
        assert (v.rgb[~v.mask] == 37).all()
        assert v.rgb.shape[:2] == v.mask.shape


def test_single_point_is_degenerate():
    with pytest.raises(DegenerateCloud):
        render_views(PointCloud([[1, 2, 3]], [[0, 0, 0]]), TINY)


def test_splat_disc_shapes():
    assert len(splat_offsets(0)) == 1
    assert len(splat_offsets(1)) == 9  # full 3x3
    assert len(splat_offsets(2)) == 21


def _dyadic_cloud(seed, n=300):
    r = np.random.default_rng(seed)
    xyz = r.integers(-512, 512, (n, 3)) / 64.0
    return xyz, r.integers(0, 256, (n, 3))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000), st.integers(-50, 50), st.sampled_from([0.25, 0.5, 2.0, 8.0]))
def test_translation_and_scale_invariance(seed, shift, factor):
    xyz, rgb = _dyadic_cloud(seed)
    p = RenderParams(resolution=64, splat_radius=1)
    base = render_views(PointCloud(xyz, rgb), p)
    assert _same(base, render_views(PointCloud(xyz + shift, rgb), p))
    assert _same(base, render_views(PointCloud(xyz * factor, rgb), p))


def test_swap_without_ties_is_invariant(rng):
    xyz = rng.random((500, 3))
    rgb = rng.integers(0, 256, (500, 3))
    perm = rng.permutation(500)
    p = RenderParams(resolution=64)
    assert _same(render_views(PointCloud(xyz, rgb), p), render_views(PointCloud(xyz[perm], rgb[perm]), p))


def test_occupied_pixels_bounded(small_torus):
    for radius in (0, 1, 2):
        p = RenderParams(resolution=256, splat_radius=radius)
        area = len(splat_offsets(radius))
        for v in render_views(small_torus, p):
            assert v.mask.sum() <= small_torus.count * area


def _view(rgb):
    rgb = np.asarray(rgb, dtype=np.uint8)
    return ProjectionView("+Z", rgb, np.ones(rgb.shape[:2], bool))


def test_grayscale_white_and_red():
    assert to_grayscale(_view([[[255, 255, 255]]]))[0, 0] == pytest.approx(1.0, abs=1e-15)
    assert to_grayscale(_view([[[255, 0, 0]]]))[0, 0] == pytest.approx(0.299, abs=1e-15)


def test_grayscale_matches_oracle(rng):
    rgb = rng.integers(0, 256, (4, 4, 3))
    gray = to_grayscale(_view(rgb))
    for i in range(4):
        for j in range(4):
            assert gray[i, j] == pytest.approx(luma_direct(*map(int, rgb[i, j])), abs=1e-15)


@pytest.mark.parametrize("kw", [dict(resolution=32), dict(splat_radius=-1), dict(background=256), dict(padding_fraction=0.5)])
def test_render_params_validation(kw):
    with pytest.raises(ValueError):
        RenderParams(**kw)


def test_scale_compatibility():
    RenderParams(resolution=512).check_scale(16)
    with pytest.raises(ValueError):
        RenderParams(resolution=100).check_scale(16)
