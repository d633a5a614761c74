import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pih.complex import FilteredComplex, barycentric_subdivision
from pih.datasets import (
    circle_whisker_complex,
    sample_pinched_torus,
    sample_triangle_whisker,
    wedge_circles_complex,
)
from pih.stratify import (
    DescriptorField,
    Stratification,
    build_stratification,
    curvature,
    density,
    detect_outliers,
    local_dimension,
    nearest_neighbors,
    pratt_fit,
    smooth_field,
    subdivide_stratification,
    trivial_stratification,
)


def rotation(gen, D):
    Q, R = np.linalg.qr(gen.standard_normal((D, D)))
    return Q * np.sign(np.diag(R))


# ---------------------------------------------------------------- neighbours

def test_nearest_neighbors_breaks_ties_by_index():
    pts = np.arange(6, dtype=float).reshape(-1, 1)
    nn = nearest_neighbors(pts, 2)
    assert nn[2].tolist() == [1, 3]
    assert nn[0].tolist() == [1, 2]
    withself = nearest_neighbors(pts, 2, include_self=True)
    assert withself[:, 0].tolist() == list(range(6))
    assert withself[2].tolist() == [2, 1]


def test_nearest_neighbors_blocks_agree(gen):
    pts = gen.standard_normal((300, 3))
    assert np.array_equal(nearest_neighbors(pts, 7, block=17), nearest_neighbors(pts, 7, block=1000))


# ---------------------------------------------------------------- local dimension

def test_local_dimension_line_and_plane():
    t = np.linspace(0, 1, 100)
    line = np.column_stack([t, 2 * t, -t]) + 0.3
    assert np.all(local_dimension(line, 10).values == 1)
    # sunflower layout: evenly spread disk points, so every patch is isotropic
    i = np.arange(200)
    rad = np.sqrt((i + 0.5) / 200)
    u = i * np.pi * (3 - np.sqrt(5))
    disk = np.column_stack([rad * np.cos(u), rad * np.sin(u), np.zeros(200)])
    inner = rad < 0.7
    assert np.all(local_dimension(disk, 15).values[inner] == 2)


def test_local_dimension_degenerate_patch():
    pts = np.zeros((5, 3))
    assert np.all(local_dimension(pts, 3).values == 0)


def test_local_dimension_patch_size():
    with pytest.raises(ValueError, match="patch larger than cloud"):
        local_dimension(np.zeros((5, 3)), 5)
    with pytest.raises(ValueError):
        local_dimension(np.zeros((5, 3)), 1)


def test_local_dimension_rigid_motion_invariant(gen):
    pts = gen.standard_normal((150, 3)) * [3.0, 1.0, 0.05]
    moved = pts @ rotation(gen, 3).T + [5.0, -2.0, 1.0]
    assert np.array_equal(local_dimension(pts, 12).values, local_dimension(moved, 12).values)


def test_local_dimension_lower_on_whisker():
    cloud = sample_triangle_whisker(300, 60, seed=0)
    raw = local_dimension(cloud, 30).values
    tri, whisker = raw[:300], raw[300:]
    assert np.all(whisker == 1)
    assert whisker.mean() < tri.mean()
    smooth = smooth_field(local_dimension(cloud, 30), cloud, 10, 3).values
    junction = np.linalg.norm(cloud.points, axis=1) < 0.1
    far_tri = np.zeros(len(cloud), bool)
    far_tri[:300] = np.linalg.norm(cloud.points[:300] - [1 / 3, 1 / 3, 0], axis=1) < 0.2
    assert smooth[junction].mean() < smooth[far_tri].mean()
    assert smooth[300:].mean() < smooth[far_tri].mean()


# ---------------------------------------------------------------- smoothing

def test_smoothing_identity_and_constant(gen):
    pts = gen.standard_normal((40, 2))
    f = DescriptorField(gen.standard_normal(40), "density")
    assert np.array_equal(smooth_field(f, pts, 5, 0).values, f.values)
    const = DescriptorField(np.full(40, 2.5), "density")
    assert np.allclose(smooth_field(const, pts, 5, 4).values, 2.5)


def test_smoothing_alternating_field_contracts():
    pts = np.arange(10, dtype=float).reshape(-1, 1)
    f = DescriptorField(np.array([(-1.0) ** i for i in range(10)]), "local-dimension")
    out = smooth_field(f, pts, 2, 1).values
    assert np.abs(out).max() < np.abs(f.values).max()


def test_smoothing_rejects_negative_iterations():
    with pytest.raises(ValueError):
        smooth_field(DescriptorField(np.zeros(4), "density"), np.zeros((4, 1)) + np.arange(4)[:, None], 2, -1)


# ---------------------------------------------------------------- density

def test_density_small_cases():
    assert density(np.array([[0.0, 0.0]]), 1.0).values.tolist() == [0.0]
    h = 0.7
    two = np.array([[0.0], [h]])
    assert density(two, h).values == pytest.approx([math.exp(-h / 2)] * 2, abs=1e-12)
    far = np.array([[0.0], [h * 1.01]])
    assert density(far, h).values.tolist() == [0.0, 0.0]
    assert density(two, h, bandwidth_squared=True).values == pytest.approx([math.exp(-0.5)] * 2, abs=1e-12)


def test_density_hand_computed_five_points():
    pts = np.array([[0.0, 0.0], [0.3, 0.0], [0.0, 0.4], [0.3, 0.4], [2.0, 2.0]])
    h = 0.45
    # pairwise squared distances 0.09, 0.16, 0.25; 0.25 > h^2 = 0.2025 is truncated
    e9, e16 = math.exp(-0.09 / 0.9), math.exp(-0.16 / 0.9)
    expected = [e9 + e16, e9 + e16, e16 + e9, e16 + e9, 0.0]
    assert density(pts, h).values == pytest.approx(expected, abs=1e-12)
    e9s, e16s = math.exp(-0.09 / (2 * h * h)), math.exp(-0.16 / (2 * h * h))
    assert density(pts, h, bandwidth_squared=True).values == pytest.approx([e9s + e16s] * 4 + [0.0], abs=1e-12)


def test_density_contributions_symmetric(gen):
    pts = gen.uniform(0, 1, (30, 2))
    h = 0.3
    total = density(pts, h).values.sum()
    d2 = ((pts[:, None] - pts[None]) ** 2).sum(-1)
    K = np.where((d2 <= h * h) & ~np.eye(30, dtype=bool), np.exp(-d2 / (2 * h)), 0.0)
    assert np.allclose(K, K.T)
    assert total == pytest.approx(K.sum(), rel=1e-12)


def test_density_requires_positive_bandwidth():
    with pytest.raises(ValueError):
        density(np.zeros((3, 2)), 0.0)


# ---------------------------------------------------------------- curvature

@pytest.mark.parametrize("r", [0.5, 1.0, 2.0, 5.0])
@pytest.mark.parametrize("D", [2, 3, 4])
def test_pratt_fit_exact_spheres(r, D, gen):
    v = gen.standard_normal((30, D))
    centre = gen.uniform(-3, 3, D)
    pts = centre + r * v / np.linalg.norm(v, axis=1, keepdims=True)
    c, rad = pratt_fit(pts)
    assert 1 / rad == pytest.approx(1 / r, abs=1e-6)
    assert np.allclose(c, centre, atol=1e-6)
    # a patch: curvature of points near one pole
    cap = pts[np.argsort(np.linalg.norm(pts - pts[0], axis=1))[: D + 3]]
    assert 1 / pratt_fit(cap)[1] == pytest.approx(1 / r, abs=1e-6)


def test_curvature_field_on_circle():
    t = np.linspace(0, 2 * np.pi, 200, endpoint=False)
    pts = 2.0 * np.column_stack([np.cos(t), np.sin(t)])
    assert np.allclose(curvature(pts, 8).values, 0.5, atol=1e-6)


def test_curvature_flat_patch_is_zero():
    t = np.linspace(0, 1, 30)
    assert np.all(curvature(np.column_stack([t, 3 * t]), 6).values == 0)
    plane = np.column_stack([np.repeat(np.arange(6.0), 6), np.tile(np.arange(6.0), 6), np.zeros(36)])
    assert np.all(curvature(plane, 9).values == 0)


def test_curvature_underdetermined():
    with pytest.raises(ValueError, match="underdetermined sphere fit"):
        curvature(np.random.default_rng(0).standard_normal((20, 3)), 3)


def test_pinched_torus_curvature_outliers_near_pinch():
    cloud, theta = sample_pinched_torus(1500, seed=0, return_angles=True)
    found = detect_outliers(curvature(cloud, 20), "high", 3.0)
    dist = np.minimum(theta, 2 * np.pi - theta)[found]
    assert len(found) > 0
    assert dist.max() < 0.7
    assert np.mean(dist < 0.5) > 0.85
    assert len(detect_outliers(curvature(cloud, 20), "low", 3.0)) == 0


@pytest.mark.xfail(strict=True, reason="a few flagged points sit just beyond |theta| = 0.5; see the decisions ledger")
def test_pinched_torus_curvature_outliers_all_within_half_radian():
    cloud, theta = sample_pinched_torus(1500, seed=0, return_angles=True)
    found = detect_outliers(curvature(cloud, 20), "high", 3.0)
    assert np.all(np.minimum(theta, 2 * np.pi - theta)[found] < 0.5)


# ---------------------------------------------------------------- outliers

def test_outliers_constant_field_empty():
    assert detect_outliers(np.full(10, 3.0), "two-sided", 3.0).size == 0


def test_outliers_shipped_fixture():
    values = np.array([1, 2, 3, 4, 5, 6, 7, 8, 9, 100], dtype=float)
    # median 5.5; absolute deviations sorted .5 .5 1.5 1.5 2.5 2.5 3.5 3.5 4.5 94.5, MAD 2.5
    threshold = 5.5 + 3.0 * 1.4826 * 2.5
    assert threshold == pytest.approx(16.6195)
    assert detect_outliers(values, "high", 3.0).tolist() == [9]
    assert detect_outliers(values, "low", 3.0).tolist() == []
    assert detect_outliers(values, "two-sided", 3.0).tolist() == [9]


def test_outliers_zero_mad_fallback():
    values = np.array([0.0] * 9 + [100.0])
    assert detect_outliers(values, "high", 3.0).tolist() == [9]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(-1000, 1000), min_size=3, max_size=40),
       st.sampled_from([0.25, 0.5, 2.0, 8.0]), st.integers(-500, 500))
def test_outliers_affine_invariant(values, a, b):
    # integer data and power-of-two scales keep the rescaling exact in floating point
    v = np.array(values, dtype=float)
    for direction in ("low", "high", "two-sided"):
        base = detect_outliers(v, direction, 3.0)
        assert np.array_equal(base, detect_outliers(a * v + b, direction, 3.0))
    assert np.array_equal(detect_outliers(v, "high", 3.0), detect_outliers(-v, "low", 3.0))


def test_outliers_bad_arguments():
    with pytest.raises(ValueError):
        detect_outliers(np.array([]), "high", 3.0)
    with pytest.raises(ValueError):
        detect_outliers(np.arange(5.0), "sideways", 3.0)
    with pytest.raises(ValueError):
        detect_outliers(np.arange(5.0), "high", 0.0)


# ---------------------------------------------------------------- stratifications

def test_build_stratification_examples():
    K = circle_whisker_complex()
    strat = build_stratification(K, [0], 1)
    assert strat[0] == {(0,)} and strat[1] is K and strat[-1] == frozenset()
    W = wedge_circles_complex()
    assert build_stratification(W, [0], 1)[0] == {(0,)}
    empty = build_stratification(K, [], 2)
    assert empty[0] == empty[1] == frozenset() and empty[2] is K and empty.is_trivial()
    with pytest.raises(ValueError, match="unknown vertex"):
        build_stratification(K, [7], 1)
    with pytest.raises(ValueError):
        build_stratification(K, [0], 0)


def test_stratification_validation():
    K = FilteredComplex.from_simplices([(0, 1, 2)])
    with pytest.raises(ValueError, match="not closed"):
        Stratification(K, [[], [(0, 1)]])
    with pytest.raises(ValueError, match="nested"):
        Stratification(K, [[(0,)], [(1,)]])
    with pytest.raises(ValueError):
        Stratification(K, [[(0, 1), (0,), (1,)]])
    with pytest.raises(ValueError):
        Stratification(K, [[(5,)]])
    ok = Stratification(K, [[(0,)], [(0,), (1,), (0, 1)]])
    assert ok.stratum(1) == {(1,), (0, 1)}
    assert ok.stratum(2) == set(K.simplices) - {(0,), (1,), (0, 1)}


def test_subdivided_stratification():
    K = circle_whisker_complex()
    sd = barycentric_subdivision(K)
    strat = subdivide_stratification(build_stratification(K, [0], 1), sd)
    assert strat[0] == {(K.index[(0,)],)}
    triv = subdivide_stratification(trivial_stratification(K, 2), sd)
    assert triv.is_trivial() and triv.depth == 2
