"""Growth-function calculus.

A weak growth function ``phi(x, t)`` is non-decreasing in ``t`` with
``phi(x, 0) = 0``, ``phi(x, t) -> inf``, and ``t -> phi(x, t)/t``
L-almost increasing.  Values live in ``[0, inf]``; ``+inf`` is represented
by the IEEE infinity, which absorbs under max and addition and compares
totally, so no wrapper type is needed.

Families implemented: constant exponent ``t^p``, Orlicz profiles
``phi(t)``, variable exponent ``t^p(x)``, double phase ``t^p + a(x) t^q``,
per-cell tabulated profiles, and the two-strip dumbbell profile used by
the counterexample tooling.

The left-inverse is ``phi^{-1}(x, tau) = inf{t >= 0 : phi(x, t) >= tau}``;
closed forms are used where available and a bracketed geometric bisection
otherwise (monotonicity makes this robust for arbitrary weak growth
functions).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BracketError, InputError, OutsideDomainError
from .expressions import Expression, compile_expression
from .grid import GridFunction, RasterDomain, dumbbell_contains, multi_indices_up_to
from .report import ConditionReport, Witness

BRACKET_CAP = 1e18
_LO_FLOOR = 1e-300


# ---------------------------------------------------------------------------
# spatial coefficient fields

class Field:
    """A scalar coefficient on the plane: constant, expression, per-cell
    grid, or plain callable."""

    def __init__(self, source):
        if isinstance(source, str):
            source = compile_expression(source, ("x1", "x2"))
        self.source = source

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        src = self.source
        if isinstance(src, (int, float)):
            return np.full(pts.shape[0], float(src))
        if isinstance(src, Expression):
            out = src(x1=pts[:, 0], x2=pts[:, 1])
            return np.broadcast_to(np.asarray(out, dtype=float), (pts.shape[0],)).copy()
        if isinstance(src, GridFunction):
            iy, ix = src.domain.cell_of(pts)
            return np.nan_to_num(src.values)[iy, ix]
        return np.asarray(src(pts), dtype=float)

    def describe(self):
        src = self.source
        if isinstance(src, (int, float)):
            return float(src)
        if isinstance(src, Expression):
            return src.text
        return type(src).__name__


def as_field(obj) -> Field:
    return obj if isinstance(obj, Field) else Field(obj)


# ---------------------------------------------------------------------------
# generic bracketed inversion

def bisect_left_inverse(value_fn, tau, *, rtol: float = 1e-10, t_start: float = 1.0,
                        cap: float = BRACKET_CAP, iters: int = 64) -> np.ndarray:
    """Vectorized left-inverse of a monotone ``value_fn`` at levels ``tau``.

    Geometric bracket expansion from ``t_start`` (factor 4), then geometric
    bisection; ``value_fn(t) = inf`` counts as ``>= tau``.  Raises
    :class:`BracketError` if a level is unreachable below ``cap``.
    """
    tau = np.asarray(tau, dtype=float)
    scalar = tau.ndim == 0
    tau = np.atleast_1d(tau).astype(float)
    if np.any(tau < 0):
        raise InputError("tau must be non-negative")
    out = np.zeros_like(tau)
    active = tau > 0
    if not active.any():
        return float(out[0]) if scalar else out

    lo = np.full(tau.shape, t_start)
    hi = np.full(tau.shape, t_start)
    f0 = np.asarray(value_fn(hi), dtype=float)
    go_up = active & (f0 < tau)
    go_dn = active & ~go_up

    up = go_up.copy()
    for _ in range(64):
        if not up.any():
            break
        hi[up] *= 4.0
        over = up & (hi > cap)
        if over.any():
            vals = np.asarray(value_fn(np.where(over, cap, hi)), dtype=float)
            bad = over & (vals < tau)
            if bad.any():
                raise BracketError(
                    f"level {tau[bad].max():g} not reached below bracket cap {cap:g}"
                )
            hi[over] = cap
            up &= ~over
        vals = np.asarray(value_fn(hi), dtype=float)
        done = up & (vals >= tau)
        up &= ~done
    lo[go_up] = hi[go_up] / 4.0

    dn = go_dn.copy()
    for _ in range(600):
        if not dn.any():
            break
        lo[dn] /= 4.0
        vals = np.asarray(value_fn(lo), dtype=float)
        done = dn & (vals < tau)
        dn &= ~done
        floor_hit = dn & (lo < _LO_FLOOR)
        # value stays >= tau arbitrarily close to 0: the left-inverse is 0
        out[floor_hit] = 0.0
        active &= ~floor_hit
        dn &= ~floor_hit
    hi[go_dn] = lo[go_dn] * 4.0

    work = active.copy()
    for _ in range(iters):
        if not work.any():
            break
        mid = np.sqrt(lo * hi)
        vals = np.asarray(value_fn(np.where(work, mid, hi)), dtype=float)
        ge = work & (vals >= tau)
        hi[ge] = mid[ge]
        lt = work & ~ge
        lo[lt] = mid[lt]
        work &= (hi - lo) > rtol * hi
    out[active] = np.sqrt(lo * hi)[active]
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# growth-function families

@dataclass
class GrowthFlags:
    """Declared regularity: convexity, left-continuity, and the growth
    envelope ``(p_lo, q_hi)`` with almost-monotonicity constants."""

    convex: bool | None = None
    left_continuous: bool | None = None
    p_lo: float | None = None
    q_hi: float | None = None
    L_p: float = 1.0
    L_q: float = 1.0

    def to_dict(self):
        return {k: getattr(self, k) for k in
                ("convex", "left_continuous", "p_lo", "q_hi", "L_p", "L_q")}


class PhiFunction:
    """Base class; subclasses provide vectorized ``value`` and, where a
    closed form exists, ``inverse``."""

    family = "abstract"

    def __init__(self, domain=None, flags: GrowthFlags | None = None):
        self.domain = domain  # None (global), RasterDomain, or .contains provider
        self.flags = flags or GrowthFlags()

    # -- geometry ---------------------------------------------------------
    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.domain is None:
            return np.ones(pts.shape[0], dtype=bool)
        return self.domain.contains(pts)

    # -- evaluation ---------------------------------------------------------
    def value(self, points, t) -> np.ndarray:
        raise NotImplementedError

    def inverse(self, points, tau, *, rtol: float = 1e-10) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        tau = np.broadcast_to(np.asarray(tau, dtype=float), (pts.shape[0],))
        return bisect_left_inverse(lambda t: self.value(pts, t), tau, rtol=rtol)

    # -- sampled weak-growth axioms ------------------------------------------
    def check_weak_axioms(self, points, t_max: float = 1e6, n_t: int = 64,
                          L: float | None = None) -> list[str]:
        """Sampled verification of the weak-growth axioms; returns a list of
        violation descriptions (empty when all checks pass)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        ts = np.geomspace(1e-6, t_max, n_t)
        problems = []
        L = L if L is not None else max(self.flags.L_p, 1.0)
        for i, p in enumerate(pts):
            batch = np.repeat(p[None, :], n_t, axis=0)
            vals = np.asarray(self.value(batch, ts), dtype=float)
            zero = float(self.value(p[None, :], np.array([0.0]))[0])
            if zero != 0.0:
                problems.append(f"phi(x,0) = {zero} != 0 at x={p.tolist()}")
            if np.any(np.diff(vals) < -1e-12 * np.maximum(vals[:-1], 1.0)):
                problems.append(f"not non-decreasing in t at x={p.tolist()}")
            if not (vals[-1] > 1.0 or np.isinf(vals[-1])):
                problems.append(f"phi(x,{t_max:g}) = {vals[-1]:g} not large at x={p.tolist()}")
            ratio = vals / ts
            finite = np.isfinite(ratio)
            r = ratio[finite]
            if r.size >= 2:
                running = np.maximum.accumulate(r)
                if np.any(running[:-1] > L * r[1:] * (1 + 1e-9)):
                    problems.append(f"phi(x,t)/t not {L}-almost increasing at x={p.tolist()}")
        return problems


class PowerPhi(PhiFunction):
    """phi(x, t) = t^p."""

    family = "power"

    def __init__(self, p: float, domain=None):
        if p <= 0:
            raise InputError("exponent p must be positive")
        super().__init__(domain, GrowthFlags(convex=p >= 1, left_continuous=True,
                                             p_lo=p, q_hi=p))
        self.p = float(p)

    def value(self, points, t):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        t = np.broadcast_to(np.asarray(t, dtype=float), (pts.shape[0],))
        return t ** self.p

    def inverse(self, points, tau, *, rtol=1e-10):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        tau = np.broadcast_to(np.asarray(tau, dtype=float), (pts.shape[0],))
        return tau ** (1.0 / self.p)

    def params(self):
        return {"p": self.p}


class OrliczPhi(PhiFunction):
    """x-independent profile phi(t), from an expression in t or a callable."""

    family = "orlicz"

    def __init__(self, profile, domain=None, flags: GrowthFlags | None = None):
        super().__init__(domain, flags)
        if isinstance(profile, str):
            profile = compile_expression(profile, ("t",))
        self.profile = profile

    def _profile(self, t):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if isinstance(self.profile, Expression):
                out = np.asarray(self.profile(t=t), dtype=float)
            else:
                out = np.asarray(self.profile(t), dtype=float)
        return np.where(np.asarray(t) == 0.0, 0.0, out)

    def value(self, points, t):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        t = np.broadcast_to(np.asarray(t, dtype=float), (pts.shape[0],))
        return self._profile(t)

    def inverse(self, points, tau, *, rtol=1e-10):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        tau = np.broadcast_to(np.asarray(tau, dtype=float), (pts.shape[0],))
        return bisect_left_inverse(self._profile, tau, rtol=rtol)

    def params(self):
        text = self.profile.text if isinstance(self.profile, Expression) else "<callable>"
        return {"profile": text}


class VariableExponentPhi(PhiFunction):
    """phi(x, t) = t^p(x)."""

    family = "variable_exponent"

    def __init__(self, p_field, domain=None, p_bounds: tuple[float, float] | None = None):
        self.p_field = as_field(p_field)
        flags = GrowthFlags(convex=True, left_continuous=True)
        if p_bounds is not None:
            flags.p_lo, flags.q_hi = p_bounds
        super().__init__(domain, flags)

    def value(self, points, t):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        t = np.broadcast_to(np.asarray(t, dtype=float), (pts.shape[0],))
        return t ** self.p_field(pts)

    def inverse(self, points, tau, *, rtol=1e-10):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        tau = np.broadcast_to(np.asarray(tau, dtype=float), (pts.shape[0],))
        return tau ** (1.0 / self.p_field(pts))

    def params(self):
        return {"p": self.p_field.describe()}


class DoublePhasePhi(PhiFunction):
    """phi(x, t) = t^p + a(x) t^q with a >= 0."""

    family = "double_phase"

    def __init__(self, p: float, q: float, a_field, domain=None):
        if not (0 < p <= q):
            raise InputError("double phase requires 0 < p <= q")
        super().__init__(domain, GrowthFlags(convex=p >= 1, left_continuous=True,
                                             p_lo=p, q_hi=q))
        self.p, self.q = float(p), float(q)
        self.a_field = as_field(a_field)

    def value(self, points, t):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        t = np.broadcast_to(np.asarray(t, dtype=float), (pts.shape[0],))
        a = self.a_field(pts)
        if np.any(a < 0):
            raise InputError("double phase coefficient a(x) must be non-negative")
        return t ** self.p + a * t ** self.q

    def inverse(self, points, tau, *, rtol=1e-10):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        tau = np.broadcast_to(np.asarray(tau, dtype=float), (pts.shape[0],))
        a = self.a_field(pts)
        return bisect_left_inverse(lambda t: t ** self.p + a * t ** self.q, tau, rtol=rtol)

    def params(self):
        return {"p": self.p, "q": self.q, "a": self.a_field.describe()}


class TabulatedPhi(PhiFunction):
    """Monotone interpolation of per-cell t-samples.

    ``values`` is either shape (k,) for an x-independent table or
    (ny, nx, k) aligned with a raster domain.  Beyond the last knot the
    profile continues linearly with the final slope.
    """

    family = "tabulated"

    def __init__(self, t_knots, values, domain=None):
        super().__init__(domain, GrowthFlags(left_continuous=True))
        self.t_knots = np.asarray(t_knots, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.t_knots.ndim != 1 or self.t_knots.size < 2:
            raise InputError("need at least two t knots")
        if np.any(np.diff(self.t_knots) <= 0) or self.t_knots[0] < 0:
            raise InputError("t knots must be strictly increasing and non-negative")
        if self.values.ndim == 3 and not isinstance(domain, RasterDomain):
            raise InputError("per-cell tables need a raster domain")
        finite = self.values[np.isfinite(self.values)]
        if finite.size and np.any(finite < 0):
            raise InputError("table values must be non-negative")

    def _rows(self, pts: np.ndarray) -> np.ndarray:
        if self.values.ndim == 1:
            return np.broadcast_to(self.values, (pts.shape[0], self.values.size))
        iy, ix = self.domain.cell_of(pts)
        return self.values[iy, ix]

    def value(self, points, t):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        t = np.broadcast_to(np.asarray(t, dtype=float), (pts.shape[0],)).astype(float)
        rows = self._rows(pts)
        knots, k = self.t_knots, self.t_knots.size
        j = np.searchsorted(knots, t, side="right") - 1
        out = np.empty_like(t)
        below = j < 0  # t below the first knot: interpolate from (0, 0)
        out[below] = np.where(knots[0] > 0,
                              rows[below, 0] * (t[below] / max(knots[0], 1e-300)),
                              rows[below, 0])
        last = j >= k - 1
        slope_end = (rows[:, -1] - rows[:, -2]) / (knots[-1] - knots[-2])
        out[last] = rows[last, -1] + slope_end[last] * (t[last] - knots[-1])
        mid = ~below & ~last
        jm = j[mid]
        t0, t1 = knots[jm], knots[jm + 1]
        v0 = rows[mid, jm]
        v1 = rows[mid, jm + 1]
        frac = (t[mid] - t0) / (t1 - t0)
        with np.errstate(invalid="ignore"):
            interp = v0 + frac * (v1 - v0)
        interp = np.where(np.isinf(v1) & (frac == 0.0), v0, interp)
        out[mid] = interp
        return np.where(t == 0.0, 0.0, out)

    def inverse(self, points, tau, *, rtol=1e-10):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        tau = np.broadcast_to(np.asarray(tau, dtype=float), (pts.shape[0],))
        return bisect_left_inverse(lambda t: self.value(pts, t), tau, rtol=rtol)

    def params(self):
        return {"t_knots": self.t_knots.tolist(), "per_cell": self.values.ndim == 3}


class _DumbbellRegion:
    def contains(self, points):
        return dumbbell_contains(points)


class DumbbellPhi(PhiFunction):
    """The two-strip counterexample profile: phi((x, y), t) = t where
    x <= 1 or y <= 1, and t/y where x > 1 and y > 1.  Its left-inverse is
    t in the first region and y*t in the second.  Defined on the unbounded
    dumbbell (two vertical half-strips joined by a bar)."""

    family = "dumbbell"

    def __init__(self):
        super().__init__(_DumbbellRegion(),
                         GrowthFlags(convex=True, left_continuous=True, p_lo=1.0, q_hi=1.0))

    @staticmethod
    def _slow(points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return (pts[:, 0] > 1) & (pts[:, 1] > 1)

    def value(self, points, t):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        t = np.broadcast_to(np.asarray(t, dtype=float), (pts.shape[0],))
        slow = self._slow(pts)
        return np.where(slow, t / np.where(slow, pts[:, 1], 1.0), t)

    def inverse(self, points, tau, *, rtol=1e-10):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        tau = np.broadcast_to(np.asarray(tau, dtype=float), (pts.shape[0],))
        slow = self._slow(pts)
        return np.where(slow, pts[:, 1] * tau, tau)

    def params(self):
        return {}


# ---------------------------------------------------------------------------
# operations

def eval_phi(phi: PhiFunction, x, t: float) -> float:
    """phi(x, t) with precondition checks; may return +inf."""
    t = float(t)
    if t < 0:
        raise InputError("t must be non-negative")
    pt = np.atleast_2d(np.asarray(x, dtype=float))
    if not phi.contains(pt).all():
        raise OutsideDomainError(f"point {np.asarray(x).tolist()} is outside the domain")
    return float(phi.value(pt, np.array([t]))[0])


def left_inverse(phi: PhiFunction, x, tau: float, tol: float = 1e-10) -> float:
    """inf{t >= 0 : phi(x, t) >= tau}; closed form when the family has one."""
    if tau < 0:
        raise InputError("tau must be non-negative")
    if tol <= 0:
        raise InputError("tol must be positive")
    pt = np.atleast_2d(np.asarray(x, dtype=float))
    if not phi.contains(pt).all():
        raise OutsideDomainError(f"point {np.asarray(x).tolist()} is outside the domain")
    return float(phi.inverse(pt, np.array([float(tau)]), rtol=tol)[0])


def _check_u_on_domain(phi: PhiFunction, u: GridFunction) -> None:
    if isinstance(phi.domain, RasterDomain) and phi.domain is not u.domain:
        same = (phi.domain.inside.shape == u.domain.inside.shape
                and phi.domain.h == u.domain.h
                and phi.domain.origin == u.domain.origin
                and np.array_equal(phi.domain.inside, u.domain.inside))
        if not same:
            raise InputError("grid function and growth function live on different domains")
    elif phi.domain is not None and not isinstance(phi.domain, RasterDomain):
        if not phi.contains(u.domain.inside_points).all():
            raise InputError("grid function has cells outside the growth function's domain")


def modular(phi: PhiFunction, u: GridFunction) -> float:
    """Midpoint-rule energy: sum over inside cells of phi(x_c, |u(x_c)|) h^n.

    Cells straddling the boundary are excluded by construction (the raster
    carries inside cells only).  Returns +inf when any cell evaluates to
    +inf.  The reduction uses compensated summation, so it is independent
    of cell order.
    """
    _check_u_on_domain(phi, u)
    pts = u.domain.inside_points
    vals = np.abs(u.inside_values())
    out = np.asarray(phi.value(pts, vals), dtype=float)
    if np.any(np.isinf(out)):
        return float("inf")
    return math.fsum(out) * u.domain.h ** u.domain.n


def luxemburg_norm(phi: PhiFunction, u: GridFunction, tol: float = 1e-8) -> float:
    """inf{lam > 0 : modular(u / lam) <= 1} by geometric bisection on lam."""
    if tol <= 0:
        raise InputError("tol must be positive")
    _check_u_on_domain(phi, u)
    if u.is_zero():
        return 0.0
    pts = u.domain.inside_points
    vals = np.abs(u.inside_values())
    hn = u.domain.h ** u.domain.n

    def rho(lam: float) -> float:
        out = np.asarray(phi.value(pts, vals / lam), dtype=float)
        if np.any(np.isinf(out)):
            return float("inf")
        return math.fsum(out) * hn

    lam = 1.0
    r = rho(lam)
    if r <= 1.0:
        hi = lam
        lo = lam
        for _ in range(600):
            lo /= 4.0
            if rho(lo) > 1.0:
                break
            hi = lo
            if lo < 1e-18:
                return 0.0  # modular stays <= 1 arbitrarily close to 0
        else:
            raise BracketError("no lower bracket for the Luxemburg norm")
    else:
        lo = lam
        hi = lam
        for _ in range(64):
            hi *= 4.0
            if hi > BRACKET_CAP:
                raise BracketError("no upper bracket for the Luxemburg norm below cap")
            if rho(hi) <= 1.0:
                break
            lo = hi
    # invariant: rho(lo) > 1 >= rho(hi)
    while hi - lo > tol * hi:
        mid = math.sqrt(lo * hi)
        if rho(mid) <= 1.0:
            hi = mid
        else:
            lo = mid
    return math.sqrt(lo * hi)


def sobolev_norm(phi: PhiFunction, u: GridFunction, k: int, tol: float = 1e-8) -> float:
    """sum over |alpha| <= k of the Luxemburg norm of d_alpha u (the
    |alpha| = 0 term is u itself).  Missing derivative slots are filled by
    finite differences, one-sided at boundary-adjacent cells."""
    if k not in (0, 1, 2):
        raise InputError("norms are supported for k in {0, 1, 2}")
    total = 0.0
    for alpha in multi_indices_up_to(2, k):
        dvals = u.derivative(alpha.entries)
        term = GridFunction(u.domain, np.nan_to_num(dvals))
        total += luxemburg_norm(phi, term, tol=tol)
    return total


def check_equivalence(phi: PhiFunction, psi: PhiFunction, L: float,
                      points, t_grid=None) -> ConditionReport:
    """Sampled check of psi(x, t/L) <= phi(x, t) <= psi(x, L t)."""
    if L < 1:
        raise InputError("equivalence constant L must be >= 1")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if t_grid is None:
        t_grid = np.geomspace(1e-6, 1e6, 64)
    t_grid = np.asarray(t_grid, dtype=float)

    witnesses = []
    n_checked = 0
    cand = np.geomspace(L, 16 * L, 25)
    cand_ok = np.ones(cand.size, dtype=bool)
    for t in t_grid:
        tv = np.full(pts.shape[0], float(t))
        mid = np.asarray(phi.value(pts, tv), dtype=float)
        low = np.asarray(psi.value(pts, tv / L), dtype=float)
        high = np.asarray(psi.value(pts, tv * L), dtype=float)
        n_checked += pts.shape[0]
        bad_low = low > mid * (1 + 1e-12)
        bad_high = mid > high * (1 + 1e-12)
        for i in np.flatnonzero(bad_low)[:3]:
            witnesses.append(Witness(x=pts[i].tolist(), t=float(t),
                                     lhs=float(low[i]), rhs=float(mid[i]),
                                     detail="psi(x, t/L) > phi(x, t)"))
        for i in np.flatnonzero(bad_high)[:3]:
            witnesses.append(Witness(x=pts[i].tolist(), t=float(t),
                                     lhs=float(mid[i]), rhs=float(high[i]),
                                     detail="phi(x, t) > psi(x, L t)"))
        for j in np.flatnonzero(cand_ok):
            cl = float(cand[j])
            lo_j = np.asarray(psi.value(pts, tv / cl), dtype=float)
            hi_j = np.asarray(psi.value(pts, tv * cl), dtype=float)
            if np.any(lo_j > mid * (1 + 1e-12)) or np.any(mid > hi_j * (1 + 1e-12)):
                cand_ok[j] = False
    passing = cand[cand_ok]
    best = float(passing.min()) if passing.size else float("inf")
    return ConditionReport(
        condition="equivalence",
        verdict=not witnesses,
        best_constant=best,
        witnesses=witnesses,
        samples={"points": int(pts.shape[0]), "t_values": int(t_grid.size),
                 "checked": n_checked},
        parameters={"L": float(L)},
    )


# ---------------------------------------------------------------------------
# growth-function spec files (JSON)

def phi_to_dict(phi: PhiFunction) -> dict:
    return {"family": phi.family, "params": phi.params(),
            "flags": phi.flags.to_dict()}


def phi_from_dict(spec: dict, domain=None) -> PhiFunction:
    family = spec.get("family")
    params = spec.get("params", {})
    if family == "power":
        phi = PowerPhi(params["p"], domain=domain)
    elif family == "orlicz":
        phi = OrliczPhi(params["profile"], domain=domain)
    elif family == "variable_exponent":
        src = params["p"]
        phi = VariableExponentPhi(src, domain=domain,
                                  p_bounds=tuple(params["p_bounds"]) if "p_bounds" in params else None)
    elif family == "double_phase":
        phi = DoublePhasePhi(params["p"], params["q"], params.get("a", 0.0), domain=domain)
    elif family == "tabulated":
        phi = TabulatedPhi(params["t_knots"], params["values"], domain=domain)
    elif family == "dumbbell":
        phi = DumbbellPhi()
    else:
        raise InputError(f"unknown growth-function family {family!r}")
    flags = spec.get("flags") or {}
    for key, val in flags.items():
        if val is not None and hasattr(phi.flags, key):
            setattr(phi.flags, key, val)
    return phi


def load_phi(path, domain=None) -> PhiFunction:
    """Load a growth-function spec file.  ``domain_ref`` in the file is
    resolved relative to the file's directory unless a domain is passed."""
    path = Path(path)
    spec = json.loads(path.read_text())
    if domain is None and spec.get("domain_ref"):
        domain = RasterDomain.from_file(path.parent / spec["domain_ref"])
    return phi_from_dict(spec, domain=domain)
