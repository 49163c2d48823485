import math

import numpy as np
import pytest

import orlext as ox
from orlext import (ConstantBundle, GridFunction, InputError, PowerPhi,
                    ResolutionError, Weight, check_a1_weight, extend,
                    g_reduction, weighted_norm, whitney_decompose)
from orlext.sobolev import SobolevExtensionOperator, full_grid_like


def power_bundle():
    return ConstantBundle(beta0=0.9, beta1=0.9, L=1.05, Lq=1.0, q=2.0,
                          K=1.3, delta=0.5)


@pytest.fixture(scope="module")
def disk_setup():
    disk = ox.disk_domain(1 / 32)
    phi = PowerPhi(2, domain=disk)
    psi = ox.extend_phi(phi, disk, power_bundle(), rng=ox.default_rng(0),
                        max_anchors=512, run_checks=False)
    dec = whitney_decompose(disk)
    op = SobolevExtensionOperator(dec, phi, psi)
    return disk, phi, psi, dec, op


# ---------------------------------------------------------------------------
# Whitney decomposition

def test_whitney_inside_cubes_cover_domain(disk_setup):
    disk, _, _, dec, _ = disk_setup
    covered = np.zeros(dec.padded.inside.shape, dtype=bool)
    for c in dec.inside_cubes:
        sly, slx = c.cell_slices()
        assert not covered[sly, slx].any()  # disjoint interiors
        covered[sly, slx] = True
    assert np.array_equal(covered, dec.padded.inside)


def test_whitney_side_distance_invariant(disk_setup):
    _, _, _, dec, _ = disk_setup
    h = dec.padded.h
    for c in dec.inside_cubes + dec.outside_cubes:
        assert c.side <= c.dist * (1 + 1e-9)
        diam = c.side * math.sqrt(2)
        assert c.dist <= 4 * diam + 3 * h  # grid slack on the upper bound


def test_whitney_matching_complete_and_comparable(disk_setup):
    _, _, _, dec, _ = disk_setup
    keep = dec.meta["collar_keep"]
    for j, S in enumerate(dec.outside_cubes):
        assert S.dist <= keep + 1e-9
        Q = dec.inside_cubes[dec.matching[j]]
        ratio = Q.side / S.side
        assert 0.25 - 1e-9 <= ratio <= 4 + 1e-9
    assert dec.meta["widened_matches"] == 0


def test_whitney_strip_matching_is_near_reflection():
    # a wide strip: matched cubes sit roughly mirror-symmetric in distance
    strip = ox.square_domain(1 / 32, side=1.0)
    dec = whitney_decompose(strip, collar_width=0.25)
    for j, S in enumerate(dec.outside_cubes[:64]):
        Q = dec.inside_cubes[dec.matching[j]]
        d = np.linalg.norm(np.subtract(S.center, Q.center))
        assert d <= 4 * (S.dist + S.side)  # comparable to the boundary gap


def test_whitney_on_lshape_reentrant_corner(lshape_24):
    dec = whitney_decompose(lshape_24)
    assert len(dec.outside_cubes) > 0
    for j, S in enumerate(dec.outside_cubes):
        Q = dec.inside_cubes[dec.matching[j]]
        assert 0.25 - 1e-9 <= Q.side / S.side <= 4 + 1e-9


def test_whitney_rejects_unresolved_radius():
    # a two-cell blob has radius below the 2h gate
    inside = np.zeros((8, 8), dtype=bool)
    inside[3, 3:5] = True
    blob = ox.RasterDomain(origin=(0, 0), h=0.1, inside=inside)
    with pytest.raises(ResolutionError):
        whitney_decompose(blob)


# ---------------------------------------------------------------------------
# the extension operator

def test_extend_restriction_exact(disk_setup):
    disk, _, _, _, op = disk_setup
    u = GridFunction.from_callable(disk, lambda p: np.sin(p[:, 0]) + p[:, 1])
    res = op.extend(u)
    p = op._pad_cells
    core = res.extended.values[p:p + disk.ny, p:p + disk.nx]
    assert np.array_equal(core[disk.inside], np.nan_to_num(u.values)[disk.inside])


def test_extend_constant_fills_collar(disk_setup):
    disk, _, _, dec, op = disk_setup
    res = op.extend(GridFunction.constant(disk, 1.0))
    pad = dec.padded
    near = (~pad.inside) & (pad.distance_to_inside < dec.collar_width / 2)
    assert np.allclose(res.extended.values[near], 1.0, atol=1e-9)
    assert np.isfinite(res.ratio)


def test_extend_zero(disk_setup):
    disk, _, _, _, op = disk_setup
    res = op.extend(GridFunction.constant(disk, 0.0))
    assert res.ratio == 0.0
    assert np.all(res.extended.values == 0.0)


def test_extend_linearity(disk_setup):
    disk, _, _, _, op = disk_setup
    rng = np.random.default_rng(1)
    a, b = 2.3, -1.7
    ua = GridFunction(disk, rng.normal(size=disk.inside.shape))
    ub = GridFunction(disk, rng.normal(size=disk.inside.shape))
    uc = GridFunction(disk, a * np.nan_to_num(ua.values) + b * np.nan_to_num(ub.values))
    la = op.extend(ua).extended.values
    lb = op.extend(ub).extended.values
    lc = op.extend(uc).extended.values
    assert np.nanmax(np.abs(lc - a * la - b * lb)) <= 1e-12


def test_extend_locality(disk_setup):
    disk, _, _, dec, op = disk_setup
    res = op.extend(GridFunction.constant(disk, 1.0))
    pad = dec.padded
    beyond = pad.distance_to_inside >= 2 * dec.collar_width
    assert np.all(res.extended.values[beyond] == 0.0)


def test_extend_compactly_supported_ratio_near_one(disk_setup):
    # data vanishing near the boundary extends by (blended) zeros
    disk, _, _, _, op = disk_setup
    u = GridFunction.from_callable(
        disk, lambda p: np.clip(0.5 - p[:, 0] ** 2 - p[:, 1] ** 2, 0, None) ** 2)
    res = op.extend(u)
    assert res.ratio == pytest.approx(1.0, abs=0.05)


def test_extend_operator_independent_of_weight(disk_setup):
    # the extension values never depend on any measurement weight
    disk, _, _, _, op = disk_setup
    u = GridFunction.from_callable(disk, lambda p: p[:, 0])
    v1 = op.extend(u).extended.values
    v2 = op.extend(u).extended.values
    assert np.array_equal(v1, v2)


def test_extend_cutoff_independence(disk_setup):
    # multiplying by a cutoff that is 1 on the whole (bounded) domain
    # changes nothing: the desk-scale sequence-independence statement
    disk, _, _, _, op = disk_setup
    u = GridFunction.from_callable(disk, lambda p: np.exp(p[:, 0]))
    res1 = op.extend(u)
    cut = GridFunction.from_callable(
        disk, lambda p: np.exp(p[:, 0]) * (p[:, 0] ** 2 + p[:, 1] ** 2 < 100.0))
    res2 = op.extend(cut)
    assert np.array_equal(res1.extended.values, res2.extended.values)


def test_extend_mismatched_domain(disk_setup):
    _, phi, psi, dec, _ = disk_setup
    other = ox.square_domain(1 / 32)
    with pytest.raises(InputError):
        extend(GridFunction.constant(other, 1.0), dec, phi, psi)


# ---------------------------------------------------------------------------
# weighted norms and the Muckenhoupt estimate

def test_weighted_norm_l1(unit_square_64):
    u = GridFunction.from_callable(unit_square_64, lambda p: p[:, 0])
    w = Weight.constant(unit_square_64)
    assert weighted_norm(u, w, 0) == pytest.approx(0.5, rel=1e-3)


def test_weighted_norm_k1_analytic(unit_square_64):
    u = GridFunction.from_callable(unit_square_64, lambda p: p[:, 0])
    w = Weight.constant(unit_square_64)
    # integral of |x| + |1| + |0|
    assert weighted_norm(u, w, 1) == pytest.approx(1.5, rel=1e-3)


def test_weighted_norm_singular_weight_vs_refinement():
    vals = []
    for h in (1 / 64, 1 / 128):
        sq = ox.square_domain(h)
        u = GridFunction.constant(sq, 1.0)
        w = Weight.from_callable(
            sq, lambda p: np.maximum(np.hypot(p[:, 0], p[:, 1]), h) ** -0.5)
        vals.append(weighted_norm(u, w, 0))
    assert vals[0] == pytest.approx(vals[1], rel=0.1)


def test_weight_positivity_enforced(unit_square_64):
    with pytest.raises(InputError):
        Weight(unit_square_64, np.zeros(unit_square_64.inside.shape))


def test_a1_constant_weight(unit_square_64, rng):
    rep = check_a1_weight(Weight.constant(unit_square_64), rng=rng)
    assert rep.best_constant == 1.0
    assert rep.verdict


def test_a1_inverse_sqrt_weight_stable(rng):
    ests = []
    for h in (1 / 64, 1 / 128):
        sq = ox.square_domain(h)
        w = Weight.from_callable(
            sq, lambda p: np.maximum(np.hypot(p[:, 0], p[:, 1]), h) ** -0.5)
        ests.append(check_a1_weight(w, n_cubes=2048,
                                    rng=np.random.default_rng(7)).best_constant)
    assert ests[0] == pytest.approx(ests[1], rel=0.25)
    assert all(e < 20 for e in ests)


def test_a1_fails_for_vanishing_weight():
    # w = |x| is not Muckenhoupt: on cubes anchored at the origin, the
    # mean/min ratio grows without bound as the grid refines (the analytic
    # ratio on a corner cube of physical side s is ~ s / (h/4))
    ests = []
    for h in (1 / 32, 1 / 64, 1 / 128):
        sq = ox.square_domain(h)
        w = Weight.from_callable(
            sq, lambda p: np.maximum(np.hypot(p[:, 0], p[:, 1]), h / 4))
        corner_cubes = [(0, 0, side) for side in (2, 4, sq.nx // 4, sq.nx // 2)]
        ests.append(check_a1_weight(w, cubes=corner_cubes).best_constant)
    assert ests[0] < ests[1] < ests[2]


# ---------------------------------------------------------------------------
# g-reduction

def test_g_reduction_k0(disk_32):
    u = GridFunction.from_callable(disk_32, lambda p: p[:, 0] - 0.2)
    g = g_reduction(u, 0)
    assert g.domain.inside.all()
    ins = disk_32.inside
    assert np.allclose(g.values[ins], np.abs(np.nan_to_num(u.values))[ins])
    assert np.all(g.values[~ins] == 0.0)


def test_norm_bookkeeping_identity(disk_32):
    # the weighted Sobolev norm on the domain equals the weighted L^1 norm
    # of the reduction on the full grid, as a reordering of the same sums
    rng = np.random.default_rng(9)
    w_sing = Weight.from_callable(
        full_grid_like(disk_32),
        lambda p: np.maximum(np.hypot(p[:, 0] - 0.1, p[:, 1]), disk_32.h) ** -0.5)
    for k in (0, 1):
        for w in (Weight.constant(full_grid_like(disk_32)), w_sing):
            for _ in range(3):
                u = GridFunction(disk_32, rng.normal(size=disk_32.inside.shape))
                lhs = weighted_norm(u, w, k)
                rhs = weighted_norm(g_reduction(u, k), w, 0)
                assert rhs == pytest.approx(lhs, rel=1e-12)


def test_extension_derivative_norm_bounded_by_reduction(disk_setup):
    # first-order weighted norms of the extension are controlled by the
    # reduction norm with a refinement-stable constant, for w = 1
    disk, phi, psi, dec, op = disk_setup
    w = None
    consts = []
    for fn in (lambda p: p[:, 0], lambda p: np.sin(2 * p[:, 0]) * p[:, 1]):
        u = GridFunction.from_callable(disk, fn)
        res = op.extend(u)
        wfull = Weight.constant(res.extended.domain)
        lam_norm = weighted_norm(res.extended, wfull, 1)
        g_norm = weighted_norm(g_reduction(u, 1),
                               Weight.constant(full_grid_like(disk)), 0)
        consts.append(lam_norm / g_norm)
    assert all(np.isfinite(c) and c < 20 for c in consts)


# ---------------------------------------------------------------------------
# the boundedness experiment

def test_boundedness_experiment_disk_power():
    bundle = power_bundle()
    rep = ox.boundedness_experiment(
        ox.default_corpus()[:5],
        lambda h: ox.disk_domain(h),
        lambda d: PowerPhi(2, domain=d),
        bundle, [1 / 8, 1 / 16, 1 / 32], rng=ox.default_rng(0))
    assert rep["pass"], rep["growth_factors"]
    assert rep["restriction_exact"]
    assert all(np.isfinite(r) for r in rep["max_ratios"])
