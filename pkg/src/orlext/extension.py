"""Extension of a growth function beyond its domain.

Given phi on Omega satisfying (A0), (A1), (A2) and (aDec)_q on a
(K, delta)-quasi-convex domain, :func:`extend_phi` produces a global
function psi with psi = phi on Omega (exact delegation) whose inverse,
outside Omega, is the McShane-type envelope over a finite anchor set
Y inside Omega::

    psi^{-1}(x, t) = min( inf_{y in Y} beta^{-(|x-y| max(t,1)^{1/n} + 1)} phi^{-1}(y, t),
                          (L / beta0) * max(t, t^{1/q}) )

with beta from :func:`orlext.conditions.a1_to_a1omega_constant`.  The
``beta^{-(...)}`` weights are non-decreasing in t (the modulus freezes
below level 1, where the modulus condition imposes nothing), so each term
is non-decreasing and the envelope is a genuine inverse; by the triangle
inequality in the exponent the envelope satisfies the modulus inequality
at every global pair for t >= 1.  The cap (L/beta0) max(t, t^{1/q}) is
the uniform upper bound that (A0) together with the inverse-side growth
constants already impose on phi^{-1} itself, so the far field stays
pinched in [ (beta0/L) t^{1/q}, (L/beta0) max(t, t^{1/q}) ], which
preserves (A0) and (A2) with constants derived from the bundle.  psi
itself is recovered as the generalized inverse by monotone bisection.

Forward values on Omega delegate bit-for-bit to phi.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .conditions import (ConstantBundle, a1omega_to_a1_constant,
                         a1_to_a1omega_constant, check_a0, check_a1,
                         check_a1_omega, check_a2, check_ainc_adec)
from .errors import InputError, OrlextError
from .geometry import GRID_METRIC_SLACK, check_quasi_convex
from .grid import RasterDomain
from .phi import PhiFunction, as_field, bisect_left_inverse, phi_to_dict
from .report import SCHEMA_VERSION, ConditionReport
from .sampling import default_rng, sample_inside_points, sample_pairs


class PreconditionFailure(OrlextError):
    """A gate check failed; carries the offending report."""

    def __init__(self, report: ConditionReport):
        super().__init__(f"precondition {report.condition} failed "
                         f"(best constant {report.best_constant:g})")
        self.report = report


# shared level grid for precompiled inverse tables (8 knots per decade)
FORWARD_GRID = np.geomspace(1e-12, 1e12, 193)
_LOG_FORWARD_GRID = np.log(FORWARD_GRID)


def forward_rows(table: np.ndarray, log_table: np.ndarray, log_t: np.ndarray,
                 rows: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Generalized inverse of tabulated rows: given table[r] = f_r(t_grid)
    strictly increasing, return sup{t : f_r(t) <= s} for each (rows[i],
    s[i]) query by log-log interpolation, extrapolating with the end
    slopes.  Per-row binary search with flat gathers keeps the cost at
    O(m log ncol) regardless of the table width."""
    s = np.asarray(s, dtype=float)
    out = np.zeros(len(s))
    pos = s > 0
    if not pos.any():
        return out
    ncol = table.shape[1]
    flat = table.ravel()
    lflat = log_table.ravel()
    base = rows[pos] * ncol
    sv = s[pos]
    ln_s = np.log(sv)

    j = np.full(sv.shape, -1, dtype=np.int64)
    step = 1 << (ncol - 1).bit_length()
    while step:
        cand = j + step
        valid = cand <= ncol - 1
        probe = flat[base + np.where(valid, cand, 0)]
        ok = valid & (probe <= sv)
        j = np.where(ok, cand, j)
        step >>= 1

    res = np.empty(sv.shape)
    below = j < 0
    if below.any():
        b = base[below]
        slope = (lflat[b + 1] - lflat[b]) / (log_t[1] - log_t[0])
        res[below] = np.exp(log_t[0] + (ln_s[below] - lflat[b]) / slope)
    above = j >= ncol - 1
    if above.any():
        b = base[above]
        slope = (lflat[b + ncol - 1] - lflat[b + ncol - 2]) / (log_t[-1] - log_t[-2])
        res[above] = np.exp(log_t[-1] + (ln_s[above] - lflat[b + ncol - 1]) / slope)
    mid = ~below & ~above
    if mid.any():
        idx = base[mid] + j[mid]
        l0 = lflat[idx]
        l1 = lflat[idx + 1]
        t0 = log_t[j[mid]]
        t1 = log_t[j[mid] + 1]
        res[mid] = np.exp(t0 + (ln_s[mid] - l0) * (t1 - t0) / (l1 - l0))
    out[pos] = res
    return out


def forward_from_table(table: np.ndarray, log_t: np.ndarray, s: np.ndarray,
                       log_table: np.ndarray | None = None) -> np.ndarray:
    """Row-aligned convenience wrapper: query i uses table row i."""
    table = np.asarray(table, dtype=float)
    if log_table is None:
        with np.errstate(divide="ignore"):
            log_table = np.log(table)
    rows = np.arange(table.shape[0])
    return forward_rows(table, log_table, log_t, rows, s)


def farthest_point_subsample(points: np.ndarray, k: int, rng) -> tuple[np.ndarray, float]:
    """Greedy farthest-point subsample; returns (indices, covering radius)."""
    pts = np.asarray(points, dtype=float)
    m = pts.shape[0]
    if k >= m:
        return np.arange(m), 0.0
    rng = default_rng(rng)
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = int(rng.integers(0, m))
    dist = np.linalg.norm(pts - pts[chosen[0]], axis=1)
    for i in range(1, k):
        chosen[i] = int(np.argmax(dist))
        dist = np.minimum(dist, np.linalg.norm(pts - pts[chosen[i]], axis=1))
    return chosen, float(dist.max())


@dataclass
class ExtendedPhi(PhiFunction):
    """Global extension of a growth function; behaves as a PhiFunction."""

    base: PhiFunction = None
    omega: RasterDomain = None
    beta: float = 0.0
    anchors: np.ndarray = None
    envelope_coef: float = 1.0  # L / beta0
    q: float = 1.0              # (aDec)_q order, shapes the small-t cap
    covering_radius: float = 0.0
    anchor_seed: int | None = None
    n: int = 2

    family = "extended"

    def __post_init__(self):
        self.domain = None  # psi is defined on all of R^n
        from .phi import GrowthFlags
        self.flags = GrowthFlags(p_lo=self.base.flags.p_lo, q_hi=self.base.flags.q_hi,
                                 L_p=self.base.flags.L_p, L_q=self.base.flags.L_q)
        self._anchor_tree = cKDTree(self.anchors)
        self._log_ibeta = math.log(1.0 / self.beta)
        self._base_spatial = self.base.family not in ("power", "orlicz")
        # memo of anchor log-inverses per level; concurrent inserts are
        # idempotent, so the cache is safe to share
        self._anchor_inv_cache: dict[float, np.ndarray | float] = {}

    # -- inverse ------------------------------------------------------------
    def envelope(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.envelope_coef * np.maximum(t, t ** (1.0 / self.q))

    def _anchor_log_inverse(self, t: float) -> np.ndarray | float:
        cached = self._anchor_inv_cache.get(t)
        if cached is not None:
            return cached
        if self._base_spatial:
            inv = np.asarray(self.base.inverse(
                self.anchors, np.full(len(self.anchors), t)), dtype=float)
            with np.errstate(divide="ignore"):
                out = np.log(inv)
        else:
            inv = float(self.base.inverse(self.anchors[:1], np.array([t]))[0])
            out = math.log(inv) if inv > 0 else -math.inf
        self._anchor_inv_cache[t] = out
        return out

    def _log_core(self, pts: np.ndarray, d_min: np.ndarray, t: float) -> np.ndarray:
        """log of the anchor part min_z beta^{-(|x-z| a + 1)} phi^{-1}(z, t).

        The full minimum is evaluated only where the cheap lower bound
        d_min * a + min_z log phi^{-1}(z, t) can undercut the far-field
        cap; elsewhere the cap wins anyway, so a lower bound suffices.
        """
        lb = self._log_ibeta
        a = max(t, 1.0) ** (1.0 / self.n) * lb  # modulus frozen below level 1
        log_inv = self._anchor_log_inverse(t)
        if not self._base_spatial:
            return d_min * a + lb + log_inv
        li = np.asarray(log_inv)
        cheap = d_min * a + lb + li.min()
        log_env = float(np.log(self.envelope(t)))
        out = np.maximum(cheap, log_env)  # placeholder where the cap wins
        shell = cheap < log_env
        if shell.any():
            sub = pts[shell]
            diff = sub[:, None, :] - self.anchors[None, :, :]
            D = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
            out[shell] = (D * a + li[None, :]).min(axis=1) + lb
        return out

    def _outside_inverse_unit(self, pts: np.ndarray, t: float,
                              d_min: np.ndarray | None = None) -> np.ndarray:
        """Envelope value at a single level t > 0 for many outside points."""
        if d_min is None:
            d_min, _ = self._anchor_tree.query(pts)
        with np.errstate(divide="ignore"):
            log_env = np.log(self.envelope(t))
        return np.exp(np.minimum(self._log_core(pts, d_min, t), log_env))

    def _outside_inverse(self, pts: np.ndarray, tau: np.ndarray) -> np.ndarray:
        out = np.zeros(len(pts))
        pos = tau > 0
        if pos.any():
            d_min, _ = self._anchor_tree.query(pts)
            # group identical levels (grids and bisections reuse many)
            levels, inverse_idx = np.unique(tau[pos], return_inverse=True)
            idx_pos = np.flatnonzero(pos)
            for k, t in enumerate(levels):
                sel = idx_pos[inverse_idx == k]
                out[sel] = self._outside_inverse_unit(pts[sel], float(t), d_min[sel])
        return out

    def inverse(self, points, tau, *, rtol: float = 1e-10):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        tau = np.broadcast_to(np.asarray(tau, dtype=float), (pts.shape[0],)).astype(float)
        inside = self.omega.contains(pts)
        out = np.empty(pts.shape[0])
        if inside.any():
            out[inside] = self.base.inverse(pts[inside], tau[inside], rtol=rtol)
        if (~inside).any():
            out[~inside] = self._outside_inverse(pts[~inside], tau[~inside])
        return out

    # -- forward ------------------------------------------------------------
    def value(self, points, t, *, method: str = "table"):
        """psi(x, s): exact delegation on the domain; outside, the
        generalized inverse of the envelope, by log-log interpolation of
        per-point inverse tables (default) or by bisection."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        t = np.broadcast_to(np.asarray(t, dtype=float), (pts.shape[0],)).astype(float)
        inside = self.omega.contains(pts)
        out = np.empty(pts.shape[0])
        if inside.any():
            out[inside] = np.asarray(self.base.value(pts[inside], t[inside]), dtype=float)
        rest = ~inside
        if rest.any():
            pr = pts[rest]
            if method == "table":
                rows = self.inverse_table(pr, FORWARD_GRID)
                out[rest] = forward_from_table(rows, _LOG_FORWARD_GRID, t[rest])
            else:
                out[rest] = bisect_left_inverse(
                    lambda tau: self._outside_inverse(pr, np.asarray(tau, dtype=float)),
                    t[rest], rtol=1e-12)
        return out

    def contains(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.ones(pts.shape[0], dtype=bool)

    def inverse_table(self, points: np.ndarray, t_grid: np.ndarray,
                      chunk: int = 2_000_000) -> np.ndarray:
        """psi^{-1} at many outside points over a shared level grid,
        shape (m, len(t_grid)); used to precompile fast forward lookups."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        t_grid = np.asarray(t_grid, dtype=float)
        m, na = pts.shape[0], len(self.anchors)
        lb = self._log_ibeta
        log_env = np.log(self.envelope(t_grid))
        if not self._base_spatial:
            d_min, _ = self._anchor_tree.query(pts)
            table = np.empty((m, t_grid.size))
            for j, t in enumerate(t_grid):
                li = self._anchor_log_inverse(float(t))
                log_core = d_min * (max(t, 1.0) ** (1.0 / self.n) * lb) + lb + li
                table[:, j] = np.exp(np.minimum(log_core, log_env[j]))
            return table
        rows_per_chunk = max(1, int(chunk // max(na, 1)))
        table = np.empty((m, t_grid.size))
        for start in range(0, m, rows_per_chunk):
            stop = min(m, start + rows_per_chunk)
            diff = pts[start:stop, None, :] - self.anchors[None, :, :]
            D = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
            for j, t in enumerate(t_grid):
                li = self._anchor_log_inverse(float(t))
                a = max(t, 1.0) ** (1.0 / self.n) * lb
                log_core = (D * a + li[None, :]).min(axis=1) + lb
                table[start:stop, j] = np.exp(np.minimum(log_core, log_env[j]))
        return table

    def params(self):
        return {"base_family": self.base.family, "beta": self.beta,
                "anchors": len(self.anchors), "covering_radius": self.covering_radius}


# ---------------------------------------------------------------------------

def _default_gates(phi, domain, bundle, rng, budgets):
    pts = sample_inside_points(domain, budgets["points"], rng)
    gates = []
    gates.append(check_a0(phi, pts, bundle.beta0))
    gates.append(check_a1(phi, domain, bundle.beta1, n_balls=budgets["balls"], rng=rng))
    pairs = sample_pairs(domain, budgets["pairs"], rng)
    gates.append(check_a2(phi, s=1.0, h_function=budgets["a2_h"],
                          beta=budgets["a2_beta"], pairs=pairs))
    gates.append(check_ainc_adec(phi, bundle.q, "dec", bundle.Lq, pts[:budgets["growth_points"]]))
    gates.append(check_quasi_convex(domain, bundle.K, bundle.delta,
                                    n_pairs=budgets["geo_pairs"], rng=rng,
                                    slack=GRID_METRIC_SLACK))
    return gates


def extend_phi(phi: PhiFunction, domain: RasterDomain, bundle: ConstantBundle, *,
               max_anchors: int = 1024, rng=None, run_checks: bool = True,
               a2_h=0.2, a2_beta: float = 0.5, sample_budget: int = 256,
               seed_note: int | None = None) -> ExtendedPhi:
    """Build the global extension of phi.

    With ``run_checks`` the gates (A0 at beta0, (A1) at beta1, (A2) at the
    supplied plan, (aDec)_q at Lq, quasi-convexity at (K, delta)) run
    first and a failure raises :class:`PreconditionFailure` carrying the
    failing report.
    """
    rng = default_rng(rng)
    if run_checks:
        budgets = {"points": max(sample_budget, 64), "balls": max(sample_budget // 2, 32),
                   "pairs": max(sample_budget, 64), "growth_points": 64,
                   "geo_pairs": max(sample_budget // 2, 32),
                   "a2_h": a2_h, "a2_beta": a2_beta}
        for rep in _default_gates(phi, domain, bundle, rng, budgets):
            if not rep.verdict:
                raise PreconditionFailure(rep)
    pts = domain.inside_points
    idx, cover = (np.arange(len(pts)), 0.0)
    if len(pts) > max_anchors:
        idx, cover = farthest_point_subsample(pts, max_anchors, rng)
    beta = a1_to_a1omega_constant(bundle)
    return ExtendedPhi(base=phi, omega=domain, beta=beta, anchors=pts[idx],
                       envelope_coef=bundle.L / bundle.beta0, q=bundle.q,
                       covering_radius=cover, n=bundle.n,
                       anchor_seed=seed_note)


def _box_balls(lo, hi, count, rng, r_min=0.02, points_per_ball=12):
    """Synthetic balls with |B| <= 1 anywhere in the box [lo, hi]^2."""
    r_max = 1.0 / math.sqrt(math.pi)
    balls = []
    for _ in range(count):
        r = float(np.exp(rng.uniform(np.log(r_min), np.log(r_max))))
        c = rng.uniform(lo, hi, size=2)
        ang = rng.uniform(0, 2 * math.pi, size=points_per_ball)
        rad = r * np.sqrt(rng.uniform(0, 1, size=points_per_ball))
        pts = c + np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
        balls.append((r, pts))
    return balls


def verify_extension(ext: ExtendedPhi, bundle: ConstantBundle, *,
                     box_factor: float = 3.0, n_points: int = 256,
                     n_balls: int = 96, n_pairs: int = 192,
                     a2_s: float = 1.0, a2_h=0.2, rng=None,
                     adec_slack: float = 4.0) -> list[ConditionReport]:
    """Run the four preserved-condition checks on the extension over a box
    ``box_factor`` times the domain diameter.

    Targets are derived from the bundle rather than re-measured: A0 at
    beta0/L; (A1) at the ball-transfer constant of the construction beta;
    (A2) at the envelope pinch (beta0/L)^2 min(1, t_floor^{1 - 1/q}) where
    t_floor is the smallest level the perturbation admits for pairs with
    an inside endpoint (the perturbation is reused extended by zero, so a
    positive h matters for spatially varying families); and (aDec)_q at
    max(Lq, L^q) * adec_slack (the slack covers generalized-inverse and
    discretization losses).  Any False verdict means the construction is
    broken for this input, so callers should fail loudly.
    """
    rng = default_rng(rng)
    dom = ext.omega
    pts_in = dom.inside_points
    center = pts_in.mean(axis=0)
    half = box_factor * dom.diameter() / 2.0
    lo, hi = center - half, center + half

    box_pts = rng.uniform(lo, hi, size=(n_points, 2))
    mix = np.concatenate([box_pts, sample_inside_points(dom, n_points // 2, rng)])

    reports = []
    a0_target = bundle.beta0 / bundle.L * (1 - 1e-9)
    reports.append(check_a0(ext, mix, min(a0_target, 1 - 1e-12)))

    a1_target = a1omega_to_a1_constant(ext.beta, ext.n) * (1 - 1e-6)
    balls = _box_balls(lo, hi, n_balls, rng)
    reports.append(check_a1(ext, beta=a1_target, balls=balls))

    if a2_h is None:
        h_ext = 0.0
        t_floor = a2_s * 1e-9
    else:
        base_field = as_field(a2_h)
        t_floor = max(float(np.min(base_field(pts_in[:256]))), a2_s * 1e-9)

        def h_ext(points):  # h extended by zero outside the domain
            p = np.atleast_2d(np.asarray(points, dtype=float))
            vals = base_field(p)
            return np.where(dom.contains(p), vals, 0.0)

    pairs = np.stack([mix[rng.integers(0, len(mix), n_pairs)],
                      mix[rng.integers(0, len(mix), n_pairs)]], axis=1)
    pinch = min(1.0, t_floor ** (1.0 - 1.0 / bundle.q),
                a2_s ** (1.0 / bundle.q - 1.0))
    a2_target = (bundle.beta0 / bundle.L) ** 2 * pinch
    reports.append(check_a2(ext, s=a2_s, h_function=h_ext,
                            beta=a2_target * (1 - 1e-9), pairs=pairs))

    adec_target = max(bundle.Lq, bundle.L ** bundle.q) * adec_slack
    reports.append(check_ainc_adec(ext, bundle.q, "dec", adec_target,
                                   mix[rng.integers(0, len(mix), 48)],
                                   t_range=(1e-4, 1e4), n_t=48))
    return reports


def extension_record(ext: ExtendedPhi, reports: list[ConditionReport]) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "family": ext.base.family,
        "base": phi_to_dict(ext.base),
        "beta": ext.beta,
        "anchors": int(len(ext.anchors)),
        "anchor_seed": ext.anchor_seed,
        "covering_radius": ext.covering_radius,
        "envelope_coef": ext.envelope_coef,
        "verification": [r.to_dict() for r in reports],
    }


def write_extension_record(path, ext: ExtendedPhi, reports) -> None:
    Path(path).write_text(json.dumps(extension_record(ext, reports),
                                     sort_keys=True, indent=2) + "\n")
