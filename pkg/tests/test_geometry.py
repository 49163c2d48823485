import math

import numpy as np
import pytest

import orlext as ox
from orlext import (GRID_METRIC_SLACK, UnreachableError, check_eps_delta,
                    check_quasi_convex, domain_radius, intrinsic_path)


def test_path_straight_line_in_convex(disk_32):
    c = intrinsic_path(disk_32, (-0.5, 0.0), (0.5, 0.0))
    assert c.length == pytest.approx(1.0, rel=1e-6)


def test_path_diagonal_bias_bound(disk_32, rng):
    # the 8-connected metric overestimates by at most sec(pi/8)
    for _ in range(20):
        a = rng.uniform(-0.6, 0.6, 2)
        b = rng.uniform(-0.6, 0.6, 2)
        if np.linalg.norm(a - b) < 4 * disk_32.h:
            continue
        c = intrinsic_path(disk_32, a, b)
        d = np.linalg.norm(c.vertices[0] - c.vertices[-1])
        assert c.length <= GRID_METRIC_SLACK * d * (1 + 0.1)
        assert c.length >= d * (1 - 1e-9)


def test_path_identical_points(disk_32):
    c = intrinsic_path(disk_32, (0.1, 0.1), (0.1, 0.1))
    assert c.length == 0.0


def test_path_vertices_stay_inside(dumbbell_01):
    c = intrinsic_path(dumbbell_01, (-2.0, 5.0), (2.0, 5.0))
    assert dumbbell_01.contains(c.vertices).all()


def test_path_routes_through_the_bar(dumbbell_01):
    # crossing between strips forces a descent below y = 0 and back up
    c = intrinsic_path(dumbbell_01, (-2.0, 10.0), (2.0, 10.0))
    assert c.length >= 20.0
    assert c.vertices[:, 1].min() < 0.0


def test_path_symmetry(dumbbell_01):
    a, b = (-2.0, 3.0), (2.0, 1.0)
    assert intrinsic_path(dumbbell_01, a, b).length == pytest.approx(
        intrinsic_path(dumbbell_01, b, a).length, rel=1e-9)


def test_path_triangle_inequality(disk_32):
    a, b, c = (-0.5, 0.0), (0.3, 0.4), (0.5, -0.3)
    ab = intrinsic_path(disk_32, a, b).length
    bc = intrinsic_path(disk_32, b, c).length
    ac = intrinsic_path(disk_32, a, c).length
    assert ac <= (ab + bc) * (1 + 1e-9)


def test_path_unreachable_components():
    two = ox.two_disks_domain(1 / 16)
    with pytest.raises(UnreachableError):
        intrinsic_path(two, (-1.5, 0.0), (1.5, 0.0))


def test_curve_point_at():
    c = ox.Curve(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]))
    assert c.length == pytest.approx(2.0)
    np.testing.assert_allclose(c.point_at(1.5), [1.0, 0.5])
    np.testing.assert_allclose(c.point_at(99.0), [1.0, 1.0])


# ---------------------------------------------------------------------------
# quasi-convexity

def test_disk_quasi_convex(disk_32, rng):
    rep = check_quasi_convex(disk_32, 1.1, 2.0, n_pairs=128, rng=rng)
    assert rep.verdict


def test_dumbbell_quasi_convex_at_sqrt2(dumbbell_005):
    rep = check_quasi_convex(dumbbell_005, math.sqrt(2) * 1.1, 1.0,
                             n_pairs=256, rng=np.random.default_rng(0))
    assert rep.verdict


def test_dumbbell_not_quasi_convex_at_large_delta(dumbbell_005):
    rep = check_quasi_convex(dumbbell_005, math.sqrt(2), 30.0,
                             n_pairs=128, rng=np.random.default_rng(0))
    assert not rep.verdict
    w = rep.witnesses[0]
    # the witness pair straddles the two strips high above the bar
    assert w.lhs > w.rhs
    assert (w.x[0] < -1) != (w.y[0] < -1)


def test_quasi_convex_corner_pairs(dumbbell_005):
    # pairs hugging the reentrant corners are the worst case
    pairs = np.array([
        [[-1.075, 0.075], [-0.925, -0.075]],
        [[1.075, 0.075], [0.925, -0.075]],
        [[-1.025, 0.225], [-0.875, -0.025]],
    ])
    rep = check_quasi_convex(dumbbell_005, math.sqrt(2) * 1.1, 1.0, pairs=pairs)
    assert rep.verdict


# ---------------------------------------------------------------------------
# curve condition of uniform domains

def test_unit_square_eps_delta(rng):
    sq = ox.square_domain(1 / 50)
    rep = check_eps_delta(sq, 0.4, 0.5, n_pairs=48, rng=rng)
    assert rep.verdict


def test_disk_eps_delta_near_boundary_pairs():
    # near-boundary chords need the inward bulge: the masked search finds it
    disk = ox.disk_domain(0.02)
    theta = np.linspace(0.1, 0.3, 4)
    a = 0.985 * np.column_stack([np.cos(theta), np.sin(theta)])
    b = 0.985 * np.column_stack([np.cos(theta + 0.45), np.sin(theta + 0.45)])
    pairs = np.stack([a, b], axis=1)
    rep = check_eps_delta(disk, 0.4, 0.5, pairs=pairs)
    assert rep.verdict


def test_identical_pairs_vacuous(disk_32):
    pairs = np.array([[[0.1, 0.1], [0.1, 0.1]]])
    rep = check_eps_delta(disk_32, 0.4, 0.5, pairs=pairs)
    assert rep.verdict
    assert rep.samples["pairs"] == 0


def cusp_tip_pair(eps):
    """A tip window of the cusp domain scaled so the raster resolves the
    failing configuration: endpoints at abscissa ~ eps/8 violate the
    clearance ring at |x - z| ~ eps/2 along every inside curve."""
    h = 2 * (0.1 * eps) ** 2
    dom = ox.cusp_domain(h, extent=1.5 * eps)
    pts = dom.inside_points
    near_axis = pts[np.abs(pts[:, 1]) < h]
    x = near_axis[np.argmin(near_axis[:, 0])]
    right = near_axis[near_axis[:, 0] > 1.3 * eps]
    y = right[np.argmin(np.abs(right[:, 1]))]
    return dom, np.array([[x, y]])


@pytest.mark.parametrize("eps", [0.5, 0.1])
def test_cusp_fails_eps_delta(eps):
    dom, pairs = cusp_tip_pair(eps)
    rep = check_eps_delta(dom, eps, 1.0, pairs=pairs)
    assert not rep.verdict
    assert "disconnect" in rep.witnesses[0].detail


def test_eps_delta_pass_implies_quasi_convex(rng):
    # every pair passing at eps admits a path within |x-y|/eps, so the
    # shortest path passes the (1/eps, delta) comparison on the same pairs
    disk = ox.disk_domain(0.02)
    pairs = ox.sample_pairs(disk, 32, rng, max_dist=0.5)
    rep = check_eps_delta(disk, 0.4, 0.5, pairs=pairs)
    assert rep.verdict
    rep_qc = check_quasi_convex(disk, 1 / 0.4, 0.5, pairs=pairs)
    assert rep_qc.verdict


# ---------------------------------------------------------------------------
# radius

def test_disk_radius(disk_32):
    assert domain_radius(disk_32) == pytest.approx(1.0, abs=2 * disk_32.h)


def test_two_disks_radius():
    two = ox.two_disks_domain(1 / 32, radius=1.0)
    assert domain_radius(two) == pytest.approx(1.0, abs=2 / 32)


def test_unit_square_radius():
    sq = ox.square_domain(1 / 64)
    # the center's farthest corner sits at distance sqrt(2)/2
    assert domain_radius(sq) == pytest.approx(math.sqrt(2) / 2, abs=2 / 64)


def test_refinement_stability_of_verdicts():
    # verdicts on the calibration corpus are unchanged between h and h/2
    rng = np.random.default_rng(5)
    for build, kwargs, K in [
        (ox.disk_domain, {}, 1.15),
        (ox.square_domain, {}, 1.15),
        (ox.l_shape_domain, {}, 1.6),
    ]:
        verdicts = []
        for h in (1 / 16, 1 / 32):
            dom = build(h, **kwargs)
            pairs = ox.sample_pairs(dom, 64, np.random.default_rng(5), max_dist=0.5)
            verdicts.append(check_quasi_convex(dom, K, 0.5, pairs=pairs).verdict)
        assert verdicts[0] == verdicts[1], build.__name__
