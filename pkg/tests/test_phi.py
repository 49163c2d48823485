import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import orlext as ox
from orlext import (BracketError, DoublePhasePhi, DumbbellPhi, GridFunction,
                    InputError, OrliczPhi, OutsideDomainError, PowerPhi,
                    TabulatedPhi, VariableExponentPhi, check_equivalence,
                    eval_phi, left_inverse, luxemburg_norm, modular,
                    sobolev_norm)

ORIGIN = (0.0, 0.0)


# ---------------------------------------------------------------------------
# pointwise evaluation

def test_power_eval():
    assert eval_phi(PowerPhi(2), ORIGIN, 3.0) == 9.0


def test_dumbbell_eval_slow_branch():
    # t/y in the branch x > 1, y > 1
    assert eval_phi(DumbbellPhi(), (2.0, 4.0), 8.0) == 2.0
    assert eval_phi(DumbbellPhi(), (-2.0, 4.0), 8.0) == 8.0


def test_double_phase_eval():
    assert eval_phi(DoublePhasePhi(2, 3, 1.0), (0.3, 0.7), 2.0) == 12.0


def test_eval_rejects_negative_t():
    with pytest.raises(InputError):
        eval_phi(PowerPhi(2), ORIGIN, -1.0)


def test_eval_outside_domain(disk_32):
    phi = PowerPhi(2, domain=disk_32)
    with pytest.raises(OutsideDomainError):
        eval_phi(phi, (5.0, 5.0), 1.0)


def test_dumbbell_outside_domain():
    with pytest.raises(OutsideDomainError):
        eval_phi(DumbbellPhi(), (0.0, 5.0), 1.0)


# ---------------------------------------------------------------------------
# left-inverse

def test_power_inverse_closed_form():
    assert left_inverse(PowerPhi(2), ORIGIN, 9.0) == 3.0


def test_dumbbell_inverse_is_y_times_tau():
    assert left_inverse(DumbbellPhi(), (2.0, 3.5), 1.0) == 3.5
    assert left_inverse(DumbbellPhi(), (-2.0, 3.5), 1.0) == 1.0


def test_double_phase_inverse_bisection():
    # root of t^2 + t^3 = 12 is exactly 2; verified by forward evaluation
    t = left_inverse(DoublePhasePhi(2, 3, 1.0), ORIGIN, 12.0)
    assert t == pytest.approx(2.0, rel=1e-9)
    assert t ** 2 + t ** 3 == pytest.approx(12.0, rel=1e-8)


def test_inverse_at_zero_level():
    assert left_inverse(DoublePhasePhi(2, 3, 1.0), ORIGIN, 0.0) == 0.0
    assert left_inverse(PowerPhi(3), ORIGIN, 0.0) == 0.0


def test_inverse_unreachable_level_overflows():
    # a bounded profile never reaches level 2
    phi = OrliczPhi(lambda t: np.minimum(t, 1.0))
    with pytest.raises(BracketError):
        left_inverse(phi, ORIGIN, 2.0)


def test_inverse_monotone_in_level():
    phi = OrliczPhi("t^2 * log(e + t)")
    taus = np.geomspace(1e-4, 1e6, 40)
    pts = np.zeros((40, 2))
    inv = phi.inverse(pts, taus)
    assert np.all(np.diff(inv) >= -1e-12 * inv[:-1])


def test_inf_characterization_sampled():
    # for t below the inverse the value stays under the level, above it at or over
    phi = DoublePhasePhi(1.5, 4, 0.7)
    for tau in (0.3, 1.0, 17.0, 4e3):
        t_star = left_inverse(phi, ORIGIN, tau, tol=1e-12)
        assert eval_phi(phi, ORIGIN, t_star * (1 - 1e-8)) < tau
        assert eval_phi(phi, ORIGIN, t_star * (1 + 1e-8)) >= tau * (1 - 1e-10)


def test_round_trip_strictly_increasing_families():
    for phi in (PowerPhi(2.7), DoublePhasePhi(2, 3, 0.5),
                VariableExponentPhi(lambda p: 2 + 0.3 * np.cos(p[:, 0]))):
        for tau in (0.2, 1.0, 42.0):
            t_star = left_inverse(phi, (0.4, -0.2), tau, tol=1e-12)
            assert eval_phi(phi, (0.4, -0.2), t_star) == pytest.approx(tau, rel=1e-8)


@given(st.floats(0.5, 6.0), st.floats(1e-6, 1e6), st.floats(1e-6, 1e6))
@settings(max_examples=200, deadline=None)
def test_inverse_order_preserved(p, tau1, tau2):
    lo, hi = sorted((tau1, tau2))
    phi = PowerPhi(p)
    assert left_inverse(phi, ORIGIN, lo) <= left_inverse(phi, ORIGIN, hi) * (1 + 1e-12)


# ---------------------------------------------------------------------------
# tabulated profiles

def test_tabulated_interpolation_and_left_inverse():
    # flat segment at level 2 between t = 1 and t = 3
    phi = TabulatedPhi([0.5, 1.0, 3.0, 4.0], [1.0, 2.0, 2.0, 5.0])
    assert eval_phi(phi, ORIGIN, 2.0) == 2.0
    assert eval_phi(phi, ORIGIN, 0.0) == 0.0
    # left-inverse of the flat level is its left endpoint
    assert left_inverse(phi, ORIGIN, 2.0) == pytest.approx(1.0, rel=1e-8)
    # beyond the last knot the profile keeps growing
    assert eval_phi(phi, ORIGIN, 10.0) > 5.0


def test_tabulated_per_cell(unit_square_64):
    k = 8
    knots = np.geomspace(0.1, 10, k)
    X, _ = unit_square_64.cell_centers()
    scale = 1.0 + X[..., None]
    phi = TabulatedPhi(knots, scale * knots[None, None, :], domain=unit_square_64)
    v = eval_phi(phi, (0.25, 0.5), 1.0)
    assert v == pytest.approx((1 + 0.25) * 1.0, rel=0.1)


# ---------------------------------------------------------------------------
# modular

def test_modular_constant_one(unit_square_64):
    u = GridFunction.constant(unit_square_64, 1.0)
    assert modular(PowerPhi(1), u) == pytest.approx(1.0, abs=1e-12)


def test_modular_zero(unit_square_64):
    u = GridFunction.constant(unit_square_64, 0.0)
    assert modular(DoublePhasePhi(2, 3, 1.0), u) == 0.0


def test_modular_linear_integrand(unit_square_64):
    # integral of x1^2 over the unit square is 1/3
    u = GridFunction.from_callable(unit_square_64, lambda p: p[:, 0])
    assert modular(PowerPhi(2), u) == pytest.approx(1 / 3, rel=2e-4)


def test_modular_infinite_value(unit_square_64):
    phi = TabulatedPhi([1.0, 2.0], [1.0, np.inf])
    u = GridFunction.constant(unit_square_64, 5.0)
    assert modular(phi, u) == math.inf


def test_modular_domain_mismatch(unit_square_64, disk_32):
    phi = PowerPhi(2, domain=disk_32)
    u = GridFunction.constant(unit_square_64, 1.0)
    with pytest.raises(InputError):
        modular(phi, u)


def test_quadrature_convergence_on_disk():
    # midpoint rule with inside-only cells: error contracts by at least 0.75
    # per halving on a smooth integrand over a curved domain
    exact = math.pi / 4
    errs = []
    for h in (1 / 16, 1 / 32, 1 / 64, 1 / 128):
        d = ox.disk_domain(h)
        u = GridFunction.from_callable(d, lambda p: p[:, 0])
        errs.append(abs(modular(PowerPhi(2), u) - exact))
    ratios = [errs[i + 1] / errs[i] for i in range(3)]
    assert all(r <= 0.75 for r in ratios), ratios


# ---------------------------------------------------------------------------
# Luxemburg norm

def test_luxemburg_constant(unit_square_64):
    u = GridFunction.constant(unit_square_64, 3.0)
    assert luxemburg_norm(PowerPhi(2), u) == pytest.approx(3.0, rel=1e-7)


def test_luxemburg_zero(unit_square_64):
    assert luxemburg_norm(PowerPhi(2), GridFunction.constant(unit_square_64, 0.0)) == 0.0


def test_luxemburg_analytic_oracle(unit_square_64):
    # solve modular(u/lam) = 1 analytically: lam^3 = integral of x1^3 = 1/4
    u = GridFunction.from_callable(unit_square_64, lambda p: p[:, 0])
    expected = 0.25 ** (1 / 3)
    assert luxemburg_norm(PowerPhi(3), u) == pytest.approx(expected, rel=2e-4)


def test_luxemburg_homogeneity(unit_square_64):
    u = GridFunction.from_callable(unit_square_64, lambda p: p[:, 0] + 0.2)
    phi = DoublePhasePhi(2, 3, 0.5)
    base = luxemburg_norm(phi, u)
    for c in (0.5, 2.0, 10.0):
        assert luxemburg_norm(phi, u.scaled(c)) == pytest.approx(c * base, rel=1e-6)


def test_unit_ball_property(unit_square_64):
    u = GridFunction.from_callable(unit_square_64, lambda p: np.exp(p[:, 0]))
    phi = OrliczPhi("t^2 * log(e + t)")
    lam = luxemburg_norm(phi, u, tol=1e-10)
    pts = unit_square_64.inside_points
    vals = np.abs(u.inside_values())
    hn = unit_square_64.h ** 2

    def rho(l):
        return math.fsum(phi.value(pts, vals / l)) * hn

    assert rho(lam * (1 + 1e-6)) <= 1.0
    assert rho(lam * (1 - 1e-6)) > 1.0


# ---------------------------------------------------------------------------
# equivalence

def test_equivalence_scaling(rng):
    phi = PowerPhi(2)
    psi = OrliczPhi(lambda t: (2.0 * np.asarray(t)) ** 2)
    pts = rng.uniform(-1, 1, size=(16, 2))
    rep = check_equivalence(phi, psi, 2.0, pts)
    assert rep.verdict


def test_equivalence_identity(rng):
    phi = DoublePhasePhi(2, 3, 1.0)
    pts = rng.uniform(-1, 1, size=(8, 2))
    rep = check_equivalence(phi, phi, 1.0, pts)
    assert rep.verdict


def test_equivalence_different_powers_fails(rng):
    pts = rng.uniform(-1, 1, size=(8, 2))
    rep = check_equivalence(PowerPhi(2), PowerPhi(3), 4.0, pts)
    assert not rep.verdict
    assert rep.witnesses
    w = rep.witnesses[0]
    # the witness violates its inequality when re-evaluated directly
    assert w.lhs > w.rhs


def test_equivalent_functions_give_comparable_norms(unit_square_64, rng):
    phi = PowerPhi(2)
    psi = OrliczPhi(lambda t: (1.5 * np.asarray(t)) ** 2)
    L = 1.5
    rep = check_equivalence(phi, psi, L, rng.uniform(0, 1, size=(8, 2)))
    assert rep.verdict
    for fn in (lambda p: p[:, 0], lambda p: np.sin(3 * p[:, 0]) + 1.1):
        u = GridFunction.from_callable(unit_square_64, fn)
        n_phi = luxemburg_norm(phi, u)
        n_psi = luxemburg_norm(psi, u)
        assert n_phi <= L * n_psi * (1 + 1e-6)
        assert n_psi <= L * n_phi * (1 + 1e-6)


# ---------------------------------------------------------------------------
# Sobolev norm

def test_sobolev_norm_k0_is_luxemburg(unit_square_64):
    u = GridFunction.from_callable(unit_square_64, lambda p: p[:, 0] * p[:, 1])
    phi = PowerPhi(2)
    assert sobolev_norm(phi, u, 0) == pytest.approx(luxemburg_norm(phi, u), rel=1e-10)


def test_sobolev_norm_analytic(unit_square_64):
    # |x1|_2 + |d1 x1|_2 + |d2 x1|_2 = (1/3)^{1/2} + 1 + 0
    u = GridFunction.from_callable(unit_square_64, lambda p: p[:, 0])
    expected = (1 / 3) ** 0.5 + 1.0
    assert sobolev_norm(PowerPhi(2), u, 1) == pytest.approx(expected, rel=2e-4)


def test_sobolev_norm_zero(unit_square_64):
    u = GridFunction.constant(unit_square_64, 0.0)
    assert sobolev_norm(PowerPhi(2), u, 1) == 0.0


def test_sobolev_norm_k2(unit_square_64):
    u = GridFunction.from_callable(unit_square_64, lambda p: p[:, 0] ** 2)
    # terms: |x^2|_2 = 1/sqrt(5), |2x|_2 = 2/sqrt(3), |2|_2 = 2, mixed/others 0;
    # one-sided second differences are O(1) off on the boundary band of
    # width h, an O(sqrt(h)) dent in the L^2 term
    expected = 5 ** -0.5 + 2 / 3 ** 0.5 + 2.0
    got = sobolev_norm(PowerPhi(2), u, 2)
    assert got == pytest.approx(expected, rel=2.5 * unit_square_64.h ** 0.5)
    # the bulk (away from two boundary columns) is exact
    dxx = u.derivative((2, 0))
    interior = unit_square_64.inside.copy()
    interior[:, :2] = interior[:, -2:] = False
    assert np.allclose(dxx[interior], 2.0, atol=1e-9)


def test_sobolev_norm_rejects_large_k(unit_square_64):
    u = GridFunction.constant(unit_square_64, 1.0)
    with pytest.raises(InputError):
        sobolev_norm(PowerPhi(2), u, 3)


# ---------------------------------------------------------------------------
# weak-growth axioms

def test_weak_axioms_pass_for_families(rng):
    pts = rng.uniform(-1, 1, size=(4, 2))
    for phi in (PowerPhi(2), DoublePhasePhi(2, 3, 1.0), OrliczPhi("t^2 * log(e + t)"),
                VariableExponentPhi(lambda p: 2 + 0.3 * np.sin(p[:, 0]))):
        assert phi.check_weak_axioms(pts) == []


def test_weak_axioms_flag_monotonicity_violation(rng):
    bad = OrliczPhi(lambda t: np.where(np.asarray(t) < 1, np.asarray(t), 1 / np.asarray(t)))
    problems = bad.check_weak_axioms(rng.uniform(-1, 1, size=(2, 2)))
    assert problems
