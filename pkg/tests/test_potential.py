"""Geometry and evaluation tests for sparse bump potentials."""
import numpy as np
import pytest

from scatterlab.potential import (
    Bump,
    SparsePotential,
    choose_truncation_N,
    eval_potential,
    gen_sparse_centers,
    split_sqrt,
)


def _uniform_potential(centers, dim, profile="ball", amplitude=1.0, radius=1.0,
                       C=1.0, gamma=None, big_r=None, trunc_N=None):
    gamma = gamma if gamma is not None else (2.0 if dim == 3 else 2.5)
    bumps = tuple(Bump(profile, amplitude, radius) for _ in range(len(centers)))
    return SparsePotential(dim, bumps, np.asarray(centers, dtype=float),
                           C, gamma, big_r if big_r is not None else radius,
                           trunc_N=trunc_N)


# ---------------------------------------------------------------------------
# center generation
# ---------------------------------------------------------------------------

def test_gen_centers_growth_law_d3():
    pts = gen_sparse_centers(3, 1.0, 2.0, 8, seed=0)
    assert pts.shape == (8, 3)
    for n in range(1, 9):
        others = np.delete(pts, n - 1, axis=0)
        nearest = np.min(np.linalg.norm(others - pts[n - 1], axis=1))
        assert nearest >= n ** 2, (n, nearest)


def test_gen_centers_single_point():
    pts = gen_sparse_centers(3, 1.0, 2.0, 1, seed=5)
    np.testing.assert_array_equal(pts, np.zeros((1, 3)))


def test_gen_centers_deterministic_in_seed():
    a = gen_sparse_centers(2, 0.5, 2.5, 12, seed=42)
    b = gen_sparse_centers(2, 0.5, 2.5, 12, seed=42)
    c = gen_sparse_centers(2, 0.5, 2.5, 12, seed=43)
    np.testing.assert_array_equal(a, b)
    assert np.any(a != c)


def test_gen_centers_rejects_critical_gamma():
    with pytest.raises(ValueError):
        gen_sparse_centers(3, 1.0, 1.0, 4, seed=0)  # 2/(d-1) = 1 exactly
    with pytest.raises(ValueError):
        gen_sparse_centers(2, 1.0, 2.0, 4, seed=0)
    with pytest.raises(ValueError):
        gen_sparse_centers(3, 1.0, 2.0, 0, seed=0)


def test_gen_centers_various_dims_counts():
    for d, gamma in ((2, 2.2), (3, 1.5)):
        pts = gen_sparse_centers(d, 0.7, gamma, 16, seed=9)
        dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
        np.fill_diagonal(dist, np.inf)
        need = 0.7 * np.arange(1, 17) ** gamma
        assert np.all(dist.min(axis=1) >= need)


# ---------------------------------------------------------------------------
# potential construction and truncation
# ---------------------------------------------------------------------------

def test_truncation_all_sparse_gives_one():
    # center gaps beyond 4R guarantee support gaps beyond 2R for radius-R bumps
    pts = gen_sparse_centers(3, 5.0, 2.0, 6, seed=1)
    p = _uniform_potential(pts, 3, radius=1.0, C=5.0)
    assert choose_truncation_N(p) == 1
    assert p.trunc_N == 1
    assert p.dropped_indices == ()


def test_truncation_two_overlapping_supports():
    # supports 1 and 2 overlap; dropping index 1 already cleans the window,
    # so the least admissible start is 2
    centers = np.array([
        [0.0, 0.0, 0.0],
        [1.5, 0.0, 0.0],
        [40.0, 0.0, 0.0],
        [0.0, 60.0, 0.0],
    ])
    bumps = tuple(Bump("ball", 1.0, 1.0) for _ in range(4))
    # C small enough that the growth law holds despite the tight pair
    p = SparsePotential(3, bumps, centers, 0.1, 2.0, 1.0, trunc_N=2)
    assert choose_truncation_N(p) == 2
    assert p.dropped_indices == (1,)
    auto = SparsePotential(3, bumps, centers, 0.1, 2.0, 1.0)
    assert auto.trunc_N == 2
    # an explicit larger start is accepted, only a smaller one is rejected
    SparsePotential(3, bumps, centers, 0.1, 2.0, 1.0, trunc_N=4)


def test_truncation_overlap_inside_tail_forces_three():
    # the offending pair is (2, 3): windows starting at 1 or 2 contain it,
    # the window starting at 3 does not
    centers = np.array([
        [0.0, 0.0, 0.0],
        [30.0, 0.0, 0.0],
        [31.5, 0.0, 0.0],
        [0.0, 70.0, 0.0],
    ])
    bumps = tuple(Bump("ball", 1.0, 1.0) for _ in range(4))
    p = SparsePotential(3, bumps, centers, 0.1, 2.0, 1.0)
    assert choose_truncation_N(p) == 3
    assert p.trunc_N == 3
    assert p.dropped_indices == (1, 2)


def test_truncation_rejects_window_start_too_small():
    centers = np.array([[0.0, 0.0, 0.0], [1.5, 0.0, 0.0], [40.0, 0.0, 0.0]])
    bumps = tuple(Bump("ball", 1.0, 1.0) for _ in range(3))
    with pytest.raises(ValueError):
        SparsePotential(3, bumps, centers, 0.1, 2.0, 1.0, trunc_N=1)


def test_growth_law_enforced_at_construction():
    centers = np.array([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]])  # needs gap >= 4
    bumps = (Bump("ball", 1.0, 0.5), Bump("ball", 1.0, 0.5))
    with pytest.raises(ValueError):
        SparsePotential(3, bumps, centers, 1.0, 2.0, 0.5)


def test_bump_radius_cannot_exceed_global():
    centers = gen_sparse_centers(3, 3.0, 2.0, 2, seed=0)
    bumps = (Bump("ball", 1.0, 1.0), Bump("ball", 1.0, 2.0))
    with pytest.raises(ValueError):
        SparsePotential(3, bumps, centers, 3.0, 2.0, 1.5)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def test_eval_outside_supports_is_zero():
    pts = gen_sparse_centers(3, 5.0, 2.0, 5, seed=2)
    p = _uniform_potential(pts, 3, C=5.0)
    far = pts[2] + np.array([0.0, 0.0, 3.0])  # 3 > radius, clear of others
    assert eval_potential(p, far) == 0.0
    assert eval_potential(p, np.array([1e6, 0.0, 0.0])) == 0.0


def test_eval_at_center_constant_profile():
    pts = gen_sparse_centers(3, 5.0, 2.0, 5, seed=3)
    p = _uniform_potential(pts, 3, amplitude=-2.5)
    for _, _, c in p.retained:
        assert eval_potential(p, c) == -2.5


def test_eval_equals_single_bump_on_each_support():
    # retained supports never overlap, so V restricted to one support is
    # exactly that bump
    pts = gen_sparse_centers(3, 5.0, 2.0, 6, seed=4)
    p = _uniform_potential(pts, 3, profile="smooth", amplitude=3.0)
    rng = np.random.default_rng(11)
    for n, bump, center in p.retained:
        for _ in range(20):
            offset = rng.standard_normal(3)
            offset *= rng.uniform(0, bump.radius) / np.linalg.norm(offset)
            x = center + offset
            want = bump.value_at(np.linalg.norm(offset))
            # abs tolerance covers coordinate absorption in x - center
            assert eval_potential(p, x) == pytest.approx(want, rel=1e-9, abs=1e-9)


def test_eval_skips_dropped_bumps():
    centers = np.array([[0.0, 0.0, 0.0], [1.5, 0.0, 0.0], [40.0, 0.0, 0.0],
                        [0.0, 60.0, 0.0]])
    bumps = tuple(Bump("ball", 1.0, 1.0) for _ in range(4))
    p = SparsePotential(3, bumps, centers, 0.1, 2.0, 1.0, trunc_N=3)
    assert eval_potential(p, centers[0]) == 0.0
    assert eval_potential(p, centers[2]) == 1.0


def test_eval_batch_shape():
    pts = gen_sparse_centers(2, 5.0, 2.5, 4, seed=7)
    p = _uniform_potential(pts, 2)
    batch = np.vstack([pts[0], pts[1], pts[1] + np.array([50.0, 0.0])])
    out = eval_potential(p, batch)
    assert out.shape == (3,)
    np.testing.assert_allclose(out, [1.0, 1.0, 0.0])


def test_split_sqrt_values():
    pts = gen_sparse_centers(3, 5.0, 2.0, 3, seed=8)
    p4 = _uniform_potential(pts, 3, amplitude=4.0)
    m4 = _uniform_potential(pts, 3, amplitude=-4.0)
    origin = pts[0]
    assert split_sqrt(p4, origin) == (2.0, 2.0)
    assert split_sqrt(m4, origin) == (2.0, -2.0)
    far = np.array([1e5, 1e5, 1e5])
    assert split_sqrt(p4, far) == (0.0, 0.0)


def test_split_sqrt_factorization_property():
    pts = gen_sparse_centers(3, 5.0, 2.0, 6, seed=12)
    p = _uniform_potential(pts, 3, profile="well", amplitude=-3.0)
    rng = np.random.default_rng(13)
    xs = rng.uniform(-5, 5, size=(200, 3)) + pts[rng.integers(0, 6, 200)]
    absroot, signedroot = split_sqrt(p, xs)
    np.testing.assert_allclose(absroot * signedroot, eval_potential(p, xs),
                               rtol=0, atol=1e-13)
    assert np.all(absroot >= 0.0)


# ---------------------------------------------------------------------------
# window geometry properties
# ---------------------------------------------------------------------------

def _support_samples(bump, center, rng, m=40):
    u = rng.standard_normal((m, center.size))
    u /= np.linalg.norm(u, axis=1)[:, None]
    return center + u * rng.uniform(0, bump.radius, m)[:, None]


def test_retained_supports_separated_beyond_2R():
    pts = gen_sparse_centers(3, 5.0, 2.0, 6, seed=14)
    p = _uniform_potential(pts, 3)
    rng = np.random.default_rng(15)
    items = p.retained
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            xs = _support_samples(items[i][1], items[i][2], rng)
            ys = _support_samples(items[j][1], items[j][2], rng)
            gap = np.min(np.linalg.norm(xs[:, None, :] - ys[None, :, :], axis=-1))
            assert gap > 2.0 * p.big_r


def test_support_point_distance_tracks_center_distance():
    # |x - y| differs from |x_m - x_n| by at most both radii (<= 2R)
    pts = gen_sparse_centers(3, 5.0, 2.0, 5, seed=16)
    p = _uniform_potential(pts, 3)
    rng = np.random.default_rng(17)
    items = p.retained
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            cd = np.linalg.norm(items[i][2] - items[j][2])
            xs = _support_samples(items[i][1], items[i][2], rng)
            ys = _support_samples(items[j][1], items[j][2], rng)
            d = np.linalg.norm(xs[:, None, :] - ys[None, :, :], axis=-1)
            assert np.max(np.abs(d - cd)) <= 2.0 * p.big_r + 1e-12


def test_sup_bound_dominates_samples():
    pts = gen_sparse_centers(2, 5.0, 2.5, 5, seed=18)
    for profile in ("ball", "smooth", "well"):
        p = _uniform_potential(pts, 2, profile=profile, amplitude=-1.7)
        rng = np.random.default_rng(19)
        xs = pts[rng.integers(0, 5, 500)] + rng.uniform(-1.2, 1.2, (500, 2))
        vals = eval_potential(p, xs)
        assert np.max(np.abs(vals)) <= p.sup_bound + 1e-15
        assert p.sup_bound == 1.7


# ---------------------------------------------------------------------------
# bump profiles
# ---------------------------------------------------------------------------

def test_profile_shapes():
    b = Bump("ball", 2.0, 1.0)
    assert b.value_at(0.0) == 2.0 and b.value_at(1.0) == 2.0 and b.value_at(1.001) == 0.0
    s = Bump("smooth", 2.0, 1.0)
    assert s.value_at(0.0) == 2.0
    assert 0.0 < s.value_at(0.5) < 2.0
    assert s.value_at(0.999) < 1e-8
    assert s.value_at(1.0) == 0.0
    w = Bump("well", -4.0, 1.0)
    assert w.value_at(0.3) == -4.0 and w.value_at(0.8) == -2.0 and w.value_at(1.2) == 0.0


def test_profile_smooth_is_radially_decreasing_in_magnitude():
    s = Bump("smooth", -3.0, 0.7)
    r = np.linspace(0.0, 0.699, 200)
    v = np.abs(s.value_at(r))
    assert np.all(np.diff(v) <= 1e-12)


def test_bump_validation():
    with pytest.raises(ValueError):
        Bump("cone", 1.0, 1.0)
    with pytest.raises(ValueError):
        Bump("ball", 1.0, 0.0)
    # amplitude 0 stays legal: it models a switched-off bump
    assert Bump("ball", 0.0, 1.0).value_at(0.5) == 0.0
