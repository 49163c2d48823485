"""Structural condition checks and explicit constant constructions.

The conditions audited here control a growth function's left-inverse:

* (A0)    beta <= phi^{-1}(x, 1) <= 1/beta uniformly in x.
* (A1)    beta phi^{-1}(x, t) <= phi^{-1}(y, t) across every ball B with
          |B| <= 1, for t in [1, 1/|B|].
* (A1)_O  beta^(|x-y| t^{1/n} + 1) phi^{-1}(x, t) <= phi^{-1}(y, t) for
          all x, y in the domain and t >= 1.
* (A2)    beta phi^{-1}(x, t) <= phi^{-1}(y, t) for t in [h(x)+h(y), s].
* (aInc)_p / (aDec)_q   phi(x, t)/t^p almost increasing / decreasing.

All "true" verdicts are certified only on the recorded sample set: the
conditions quantify over uncountable families, so reports always carry
sample counts and the sampling parameters.

The constant constructions mirror the chaining arguments that transfer
constants between (A1) and (A1)_O on quasi-convex domains; see
:func:`a1omega_to_a1_constant`, :func:`compute_beta_prime`, and
:func:`a1_to_a1omega_constant`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .grid import RasterDomain
from .phi import PhiFunction, as_field
from .report import ConditionReport, Witness
from .sampling import default_rng, sample_balls

_RTOL = 1e-12


def omega_n(n: int) -> float:
    """Lebesgue measure of the unit ball in n dimensions."""
    if n < 1 or int(n) != n:
        raise InputError("dimension n must be a positive integer")
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


@dataclass
class ConstantBundle:
    """Constants feeding the (A1) -> (A1)_O transfer.

    beta0: (A0) constant; beta1: (A1) constant; L: the constant with which
    the left-inverse is almost-decreasing of order 1 and almost-increasing
    of order 1/q; Lq: the (aDec)_q constant of phi itself; K, delta:
    quasi-convexity constants of the domain.
    """

    beta0: float
    beta1: float
    L: float
    Lq: float
    q: float
    K: float
    delta: float
    n: int = 2

    def __post_init__(self):
        if not (0 < self.beta0 < 1 and 0 < self.beta1 < 1):
            raise InputError("beta0 and beta1 must lie in (0, 1)")
        if min(self.L, self.Lq, self.K) < 1:
            raise InputError("L, Lq and K must be >= 1")
        if self.q < 1:
            raise InputError("q must be >= 1")
        if self.delta <= 0:
            raise InputError("delta must be positive")
        if self.n < 1:
            raise InputError("n must be >= 1")

    @property
    def omega_n(self) -> float:
        return omega_n(self.n)


# ---------------------------------------------------------------------------
# condition checks

def check_a0(phi: PhiFunction, points, beta: float, *, rtol: float = 1e-9) -> ConditionReport:
    """(A0): beta <= phi^{-1}(x, 1) <= 1/beta at every sample point.

    Cross-checks the equivalent direct form phi(x, beta) <= 1 <= phi(x, 1/beta)
    and records any disagreement as a numerical warning.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] == 0:
        raise InputError("empty sample set")
    if not (0 < beta < 1):
        raise InputError("beta must lie in (0, 1)")
    inv1 = np.asarray(phi.inverse(pts, np.ones(pts.shape[0])), dtype=float)
    with np.errstate(divide="ignore"):
        per_point = np.minimum(inv1, np.where(inv1 > 0, 1.0 / inv1, 0.0))
    best = float(per_point.min())
    ok = (inv1 >= beta * (1 - rtol)) & (inv1 <= (1 + rtol) / beta)
    witnesses = []
    for i in np.flatnonzero(~ok)[:8]:
        if inv1[i] < beta:
            witnesses.append(Witness(x=pts[i].tolist(), t=1.0, lhs=float(beta),
                                     rhs=float(inv1[i]), detail="beta > phi^{-1}(x, 1)"))
        else:
            witnesses.append(Witness(x=pts[i].tolist(), t=1.0, lhs=float(inv1[i]),
                                     rhs=float(1 / beta), detail="phi^{-1}(x, 1) > 1/beta"))
    # equivalent form via direct evaluation
    lo = np.asarray(phi.value(pts, np.full(pts.shape[0], beta)), dtype=float)
    hi = np.asarray(phi.value(pts, np.full(pts.shape[0], 1.0 / beta)), dtype=float)
    ok_direct = (lo <= 1 + rtol) & (hi >= 1 - rtol)
    warnings = []
    disagree = ok != ok_direct
    if disagree.any():
        i = int(np.flatnonzero(disagree)[0])
        warnings.append(
            f"inverse form and direct form disagree at {disagree.sum()} points "
            f"(first at x={pts[i].tolist()}): the function has flats or jumps near "
            f"level 1 at the numerical tolerance"
        )
    return ConditionReport(
        condition="A0",
        verdict=bool(ok.all()),
        best_constant=min(best, 1.0),
        witnesses=witnesses,
        samples={"points": int(pts.shape[0])},
        parameters={"beta": float(beta)},
        warnings=warnings,
    )


def _ratio_stats(inv_ref: np.ndarray, inv_other: np.ndarray):
    """min/max-based worst ratio inv_other/inv_ref with inf/0 handling."""
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = inv_other / inv_ref
    both_zero = (inv_ref == 0) & (inv_other == 0)
    both_inf = np.isinf(inv_ref) & np.isinf(inv_other)
    ratio = np.where(both_zero | both_inf, 1.0, ratio)
    return ratio


def check_a1(phi: PhiFunction, domain: RasterDomain | None = None, beta: float = 0.5, *,
             balls=None, n_balls: int = 256, n_t: int = 64, max_points: int = 64,
             rng=None, rtol: float = 1e-9) -> ConditionReport:
    """(A1): across each sampled ball B with |B| <= 1, the inverse at level
    t in [1, 1/|B|] varies by at most the factor beta.

    Balls are sampled from ``domain`` (centers at inside cells, radii
    log-uniform in [h, (1/pi)^{1/2}]) unless an explicit list of
    ``(radius, points)`` pairs is given.
    """
    if not (0 < beta < 1):
        raise InputError("beta must lie in (0, 1)")
    rng = default_rng(rng)
    if balls is None:
        if domain is None:
            raise InputError("need a domain to sample balls from")
        balls = sample_balls(domain, n_balls, rng, max_points=max_points)
    if not balls:
        raise InputError("no sampled ball intersects the domain in >= 2 cells")

    spatial = getattr(phi, "family", "") not in ("power", "orlicz")
    best = 1.0
    worst_witness = None
    checked = 0
    caps = []
    for r, _ in balls:
        measure = omega_n(2) * r ** 2
        if measure > 1 + 1e-12:
            raise InputError(f"ball of radius {r:g} has measure {measure:g} > 1")
        caps.append(max(1.0 / measure, 1.0 + 1e-9))
    # shared level grid across balls (lets extensions reuse anchor tables)
    t_global = np.geomspace(1.0, max(caps), n_t)
    for (r, pts), cap in zip(balls, caps):
        ts = t_global[t_global <= cap * (1 + 1e-12)]
        if ts.size == 0 or ts[-1] < cap * (1 - 1e-12):
            ts = np.append(ts, cap)
        if not spatial:
            checked += len(ts)
            continue  # the inverse does not depend on x: every ratio is 1
        k = pts.shape[0]
        inv = np.asarray(phi.inverse(np.tile(pts, (ts.size, 1)), np.repeat(ts, k)),
                         dtype=float).reshape(ts.size, k)
        checked += inv.size
        imax = np.argmax(inv, axis=1)
        imin = np.argmin(inv, axis=1)
        rows = np.arange(ts.size)
        ratios = _ratio_stats(inv[rows, imax], inv[rows, imin])
        j = int(np.argmin(ratios))
        if ratios[j] < best:
            best = float(ratios[j])
            worst_witness = Witness(
                x=pts[imax[j]].tolist(), y=pts[imin[j]].tolist(), t=float(ts[j]),
                lhs=float(beta * inv[j, imax[j]]), rhs=float(inv[j, imin[j]]),
                detail=f"ratio {ratios[j]:.6g} inside a ball of radius {r:.6g}")
    verdict = beta <= best * (1 + rtol)
    witnesses = []
    if not verdict and worst_witness is not None:
        witnesses.append(worst_witness)
    report = ConditionReport(
        condition="A1",
        verdict=bool(verdict),
        best_constant=best,
        witnesses=witnesses,
        samples={"balls": len(balls), "t_values": n_t, "evaluations": checked},
        parameters={"beta": float(beta)},
    )
    if not spatial:
        report.notes["x_independent"] = "inverse does not depend on x; ratios are 1"
    return report


def derive_balls_from_pairs(pairs: np.ndarray, r_min: float = 1e-9):
    """Minimal enclosing balls of point pairs (segment midpoint and half
    length); pairs wider than the unit-measure diameter are dropped."""
    pairs = np.asarray(pairs, dtype=float)
    r_cap = 1.0 / math.sqrt(math.pi)
    balls = []
    for x, y in pairs:
        r = max(float(np.linalg.norm(x - y)) / 2.0, r_min)
        if r > r_cap:
            continue
        balls.append((r, np.stack([x, y])))
    return balls


def check_a1_omega(phi: PhiFunction, pairs, beta: float, *, t_max: float = 1e6,
                   n_t: int = 64, n: int = 2, rtol: float = 1e-9) -> ConditionReport:
    """(A1)_O: beta^(|x-y| t^{1/n} + 1) phi^{-1}(x, t) <= phi^{-1}(y, t)
    for the given point pairs (checked in both orders) and t >= 1.

    ``best_constant`` is the largest beta that passes on the samples,
    computed as exp(min over samples of log(ratio)/exponent).
    """
    if not (0 < beta < 1):
        raise InputError("beta must lie in (0, 1)")
    pairs = np.asarray(pairs, dtype=float)
    if pairs.ndim != 3 or pairs.shape[1:] != (2, 2):
        raise InputError("pairs must have shape (m, 2, 2)")
    ts = np.geomspace(1.0, max(t_max, 1.0 + 1e-12), n_t)
    ts[0] = 1.0
    m = len(pairs)
    dists = np.linalg.norm(pairs[:, 0] - pairs[:, 1], axis=1)

    flat_t = np.repeat(ts, m)
    inv_x = np.asarray(phi.inverse(np.tile(pairs[:, 0], (n_t, 1)), flat_t),
                       dtype=float).reshape(n_t, m)
    inv_y = np.asarray(phi.inverse(np.tile(pairs[:, 1], (n_t, 1)), flat_t),
                       dtype=float).reshape(n_t, m)
    expo = dists[None, :] * ts[:, None] ** (1.0 / n) + 1.0
    checked = 2 * n_t * m

    log_best = 0.0
    worst = None
    for a, b, tag in ((inv_x, inv_y, (0, 1)), (inv_y, inv_x, (1, 0))):
        ratio = _ratio_stats(a, b)
        with np.errstate(divide="ignore"):
            log_cap = np.minimum(0.0, np.log(ratio)) / expo
        log_cap = np.where(np.isnan(log_cap), -np.inf, log_cap)
        jt, i = np.unravel_index(int(np.argmin(log_cap)), log_cap.shape)
        if log_cap[jt, i] < log_best:
            log_best = float(log_cap[jt, i])
            worst = Witness(
                x=pairs[i, tag[0]].tolist(), y=pairs[i, tag[1]].tolist(), t=float(ts[jt]),
                lhs=float(beta ** expo[jt, i] * a[jt, i]), rhs=float(b[jt, i]),
                detail=f"exponent {expo[jt, i]:.6g}, inverse ratio {ratio[jt, i]:.6g}")
    best = float(math.exp(log_best)) if np.isfinite(log_best) else 0.0
    verdict = beta <= best * (1 + rtol) and best > 0
    witnesses = [worst] if (not verdict and worst is not None) else []
    if not verdict and not witnesses:  # pragma: no cover - defensive
        witnesses.append(Witness(x=pairs[0, 0].tolist(), y=pairs[0, 1].tolist(),
                                 t=1.0, lhs=beta, rhs=best, detail="degenerate"))
    return ConditionReport(
        condition="A1Omega",
        verdict=bool(verdict),
        best_constant=min(best, 1.0),
        witnesses=witnesses,
        samples={"pairs": int(len(pairs)), "t_values": int(n_t), "evaluations": checked},
        parameters={"beta": float(beta), "t_max": float(t_max), "n": n},
    )


def check_a2(phi: PhiFunction, s: float, h_function, beta: float, pairs, *,
             n_t: int = 48, rtol: float = 1e-9) -> ConditionReport:
    """(A2) at a fixed horizon: beta phi^{-1}(x, t) <= phi^{-1}(y, t) for
    t in [h(x) + h(y), s].  Pairs with an empty interval are skipped.

    The perturbation h is supplied by the caller (constant, expression, or
    grid); no attempt is made to synthesize one.
    """
    if s <= 0:
        raise InputError("horizon s must be positive")
    if not (0 < beta <= 1):
        raise InputError("beta must lie in (0, 1]")
    field = as_field(h_function if h_function is not None else 0.0)
    pairs = np.asarray(pairs, dtype=float)
    if pairs.ndim != 3 or pairs.shape[1:] != (2, 2):
        raise InputError("pairs must have shape (m, 2, 2)")
    hx = field(pairs[:, 0])
    hy = field(pairs[:, 1])
    if np.any(hx < 0) or np.any(hy < 0):
        raise InputError("the perturbation h must be non-negative")
    lo = hx + hy
    keep = lo <= s
    skipped = int((~keep).sum())
    pairs = pairs[keep]
    lo = lo[keep]
    if len(pairs) == 0:
        return ConditionReport(
            condition="A2", verdict=True, best_constant=1.0, witnesses=[],
            samples={"pairs": 0, "skipped": skipped},
            parameters={"beta": float(beta), "s": float(s)},
            notes={"vacuous": "every sampled pair had an empty t-interval"})

    m = len(pairs)
    fracs = np.geomspace(1e-9, 1.0, n_t)
    tmat = np.maximum(lo[None, :], fracs[:, None] * s)  # (n_t, m)
    flat_t = tmat.ravel()
    inv_x = np.asarray(phi.inverse(np.tile(pairs[:, 0], (n_t, 1)), flat_t),
                       dtype=float).reshape(n_t, m)
    inv_y = np.asarray(phi.inverse(np.tile(pairs[:, 1], (n_t, 1)), flat_t),
                       dtype=float).reshape(n_t, m)
    checked = 2 * n_t * m

    best = 1.0
    worst = None
    for a, b, tag in ((inv_x, inv_y, (0, 1)), (inv_y, inv_x, (1, 0))):
        ratio = _ratio_stats(a, b)
        jt, i = np.unravel_index(int(np.argmin(ratio)), ratio.shape)
        if ratio[jt, i] < best:
            best = float(ratio[jt, i])
            worst = Witness(x=pairs[i, tag[0]].tolist(), y=pairs[i, tag[1]].tolist(),
                            t=float(tmat[jt, i]), lhs=float(beta * a[jt, i]),
                            rhs=float(b[jt, i]),
                            detail=f"inverse ratio {ratio[jt, i]:.6g}")
    verdict = beta <= best * (1 + rtol)
    witnesses = [worst] if (not verdict and worst is not None) else []
    return ConditionReport(
        condition="A2",
        verdict=bool(verdict),
        best_constant=best,
        witnesses=witnesses,
        samples={"pairs": int(len(pairs)), "skipped": skipped,
                 "t_values": int(n_t), "evaluations": checked},
        parameters={"beta": float(beta), "s": float(s), "h": field.describe()},
    )


def check_ainc_adec(phi: PhiFunction, exponent: float, mode: str, L: float, points, *,
                    t_range=(1e-6, 1e6), n_t: int = 96, rtol: float = 1e-9) -> ConditionReport:
    """(aInc)_p / (aDec)_q: phi(x, t)/t^exponent is L-almost increasing
    (mode 'inc') or L-almost decreasing (mode 'dec') along a log-spaced
    t grid, at every sample point."""
    if mode not in ("inc", "dec"):
        raise InputError("mode must be 'inc' or 'dec'")
    if exponent <= 0:
        raise InputError("exponent must be positive")
    if L < 1:
        raise InputError("L must be >= 1")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    ts = np.geomspace(t_range[0], t_range[1], n_t)
    m = pts.shape[0]
    vals = np.asarray(phi.value(np.repeat(pts, n_t, axis=0), np.tile(ts, m)),
                      dtype=float).reshape(m, n_t)
    g = vals / ts[None, :] ** exponent
    if mode == "inc":
        ref = np.maximum.accumulate(g, axis=1)[:, :-1]  # sup over earlier samples
        cur = g[:, 1:]
    else:
        ref = g[:, 1:]
        cur = np.minimum.accumulate(g, axis=1)[:, :-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        need = ref / cur
    need = np.where(np.isnan(need), 1.0, need)  # inf/inf or 0/0: vacuous
    ip, it = np.unravel_index(int(np.argmax(need)), need.shape)
    best = max(1.0, float(need[ip, it]))
    worst = None
    if need[ip, it] > 1.0:
        worst = Witness(
            x=pts[ip].tolist(), t=float(ts[it + 1]),
            lhs=float(ref[ip, it]),
            rhs=float(L * cur[ip, it]) if np.isfinite(cur[ip, it]) else float("inf"),
            detail=f"needs L >= {need[ip, it]:.6g} (mode {mode}, exponent {exponent:g})")
    verdict = best <= L * (1 + rtol)
    witnesses = [worst] if (not verdict and worst is not None) else []
    return ConditionReport(
        condition=f"a{'Inc' if mode == 'inc' else 'Dec'}({exponent:g})",
        verdict=bool(verdict),
        best_constant=best,
        witnesses=witnesses,
        samples={"points": int(pts.shape[0]), "t_values": int(n_t)},
        parameters={"L": float(L), "exponent": float(exponent), "mode": mode},
    )


# ---------------------------------------------------------------------------
# constant constructions

def a1omega_to_a1_constant(beta: float, n: int) -> float:
    """The (A1) constant beta^(2 omega_n^{-1/n} + 1) obtained from an
    (A1)_O constant beta: inside a ball of measure at most one,
    |x - y| t^{1/n} <= 2 omega_n^{-1/n} for t <= 1/|B|."""
    if not (0 < beta < 1):
        raise InputError("beta must lie in (0, 1)")
    return beta ** (2.0 * omega_n(n) ** (-1.0 / n) + 1.0)


def _min_chain_slope(delta: float, n: int) -> float:
    """m = min over t in (1, inf) of (delta t^{1/n} + 1)/ln t.

    The function is continuous with +inf limits at both ends, so the
    minimum is interior; a coarse log-grid scan brackets it and a
    golden-section refinement on log t pins it down.
    """
    u_lo, u_hi = math.log(1.0 + 1e-9), math.log(1e12)

    def f(u: float) -> float:
        return (delta * math.exp(u / n) + 1.0) / u

    grid = np.linspace(u_lo, u_hi, 4096)
    vals = np.array([f(u) for u in grid])
    i = int(np.argmin(vals))
    if i == 0 or i == len(grid) - 1:
        raise AssertionError("interior minimum expected; endpoint growth guard hit")
    a, b = grid[i - 1], grid[i + 1]
    inv_phi = (math.sqrt(5) - 1) / 2
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > 1e-12 * max(1.0, abs(b)):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    return f((a + b) / 2)


def compute_beta_prime(delta: float, C: float, q: float, beta0: float, n: int) -> float:
    """The threshold beta' below which beta^(delta t^{1/n} + 1) C^2 t < t^{1/q}
    holds for every t > 1/beta0.

    Solves m = (1-q)/(q ln b) - 2 ln C / (ln(1/beta0) ln b) for b, where m is
    the interior minimum of (delta t^{1/n} + 1)/ln t; returns
    exp(((1-q)/q - 2 ln C/ln(1/beta0)) / m).  The degenerate case q = 1,
    C = 1 returns the sentinel just below 1: every beta in (0, 1) works.
    """
    if delta <= 0:
        raise InputError("delta must be positive")
    if C < 1 or q < 1:
        raise InputError("C and q must be >= 1")
    if not (0 < beta0 < 1):
        raise InputError("beta0 must lie in (0, 1)")
    A = (1.0 - q) / q - 2.0 * math.log(C) / math.log(1.0 / beta0)
    if A == 0.0:
        return math.nextafter(1.0, 0.0)
    m = _min_chain_slope(delta, n)
    beta_prime = math.exp(A / m)
    return min(max(beta_prime, 5e-324), math.nextafter(1.0, 0.0))


def a1_to_a1omega_constant(bundle: ConstantBundle) -> float:
    """The (A1)_O constant produced from (A0), (A1), (aDec)_q on a
    (K, delta)-quasi-convex domain: half the minimum of the three
    case-constants (ball chaining, bounded t, large t), strictly inside
    the open interval the chaining argument requires.  The result depends
    only on the bundle, never on x, y, or t."""
    w = bundle.omega_n
    M = max(bundle.K, 1.0 / w)
    chain = bundle.beta1 ** (2.0 * M * w ** (1.0 / bundle.n))
    small_t = bundle.beta0 ** 3 / bundle.L
    large_t = compute_beta_prime(bundle.delta, bundle.L / bundle.beta0, bundle.q,
                                 bundle.beta0, bundle.n)
    return 0.5 * min(chain, small_t, large_t)


def chain_points(curve, t: float, bundle: ConstantBundle) -> np.ndarray:
    """Points x_0 .. x_N along the curve at arc-length steps len/N, where N
    is the unique integer in (M |x-y| / r, M |x-y| / r + 1] and
    r = (omega_n t)^{-1/n}.  Consecutive gaps are at most r, so
    consecutive points share a ball of measure 1/t."""
    if t < 1:
        raise InputError("t must be >= 1")
    verts = np.asarray(curve.vertices, dtype=float)
    x, y = verts[0], verts[-1]
    length = curve.length
    if length == 0.0:
        return np.stack([x, y])
    w = bundle.omega_n
    M = max(bundle.K, 1.0 / w)
    r = (w * t) ** (-1.0 / bundle.n)
    a = M * float(np.linalg.norm(x - y)) / r
    N = math.floor(a) + 1
    return np.stack([curve.point_at(i * length / N) for i in range(N + 1)])


def estimate_inverse_growth_constant(phi: PhiFunction, points, q: float, *,
                                     t_max: float = 1e9, n_t: int = 128) -> float:
    """Measured constant L with which the left-inverse is almost decreasing
    of order 1 and almost increasing of order 1/q on [1, t_max], over the
    sample points.  Always >= 1."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    ts = np.geomspace(1.0, t_max, n_t)
    m = pts.shape[0]
    inv = np.asarray(phi.inverse(np.repeat(pts, n_t, axis=0), np.tile(ts, m)),
                     dtype=float).reshape(m, n_t)
    g_dec = inv / ts[None, :]
    g_inc = inv / ts[None, :] ** (1.0 / q)
    with np.errstate(divide="ignore", invalid="ignore"):
        need_dec = g_dec[:, 1:] / np.minimum.accumulate(g_dec, axis=1)[:, :-1]
        need_inc = np.maximum.accumulate(g_inc, axis=1)[:, :-1] / g_inc[:, 1:]
    worst = 1.0
    for need in (need_dec, need_inc):
        finite = need[np.isfinite(need)]
        if finite.size:
            worst = max(worst, float(finite.max()))
    return worst
