"""Discrete Whitney/Jones-type first-order extension operator.

The operator covers the domain and a collar of its complement with dyadic
cubes whose side is comparable to the boundary distance, matches every
outside cube to a reflected inside cube of comparable scale, and sets the
outside value to the mean of u over the matched cube, blended by a C^1
partition of unity on 1.5-dilated cubes and tapered to zero beyond the
collar.  The construction is linear in u, restricts to u on the domain
exactly, and does not depend on any weight used for measurement.

Degree-0 polynomial fitting (cube means) is all that first-order norms
need; higher-order extension is out of scope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .errors import InputError, ResolutionError
from .extension import FORWARD_GRID, ExtendedPhi, forward_rows
from .geometry import domain_radius
from .grid import GridFunction, RasterDomain, multi_indices_up_to
from .phi import PhiFunction, luxemburg_norm, sobolev_norm
from .report import ConditionReport, Witness
from .sampling import default_rng

COLLAR_CAP = 1.0  # absolute cap on the collar half-width (cost control)


# ---------------------------------------------------------------------------
# Whitney decomposition

@dataclass(frozen=True)
class DyadicCube:
    """A dyadic cube over the padded grid: cells [iy0, iy0+2^level) x
    [ix0, ix0+2^level), side = h * 2^level."""

    level: int
    iy0: int
    ix0: int
    side: float
    center: tuple[float, float]
    dist: float  # grid proxy for dist(Q, boundary)

    @property
    def ncells(self) -> int:
        return 1 << self.level

    def cell_slices(self):
        n = self.ncells
        return slice(self.iy0, self.iy0 + n), slice(self.ix0, self.ix0 + n)


@dataclass
class WhitneyDecomposition:
    domain: RasterDomain                  # the original domain
    padded: RasterDomain                  # domain embedded in a padded grid
    inside_cubes: list[DyadicCube]
    outside_cubes: list[DyadicCube]
    matching: dict[int, int]              # outside cube index -> inside cube index
    collar_width: float
    meta: dict = dc_field(default_factory=dict)


def _pad_domain(domain: RasterDomain, pad_cells: int) -> RasterDomain:
    ny, nx = domain.inside.shape
    inside = np.zeros((ny + 2 * pad_cells, nx + 2 * pad_cells), dtype=bool)
    inside[pad_cells:pad_cells + ny, pad_cells:pad_cells + nx] = domain.inside
    origin = (domain.origin[0] - pad_cells * domain.h,
              domain.origin[1] - pad_cells * domain.h)
    return RasterDomain(origin=origin, h=domain.h, inside=inside)


def full_grid_like(domain: RasterDomain) -> RasterDomain:
    """The same grid with every cell marked inside."""
    return RasterDomain(origin=domain.origin, h=domain.h,
                        inside=np.ones(domain.inside.shape, dtype=bool))


def _min_pyramid(arr: np.ndarray, levels: int, fill: float) -> list[np.ndarray]:
    out = [arr]
    cur = arr
    for _ in range(levels):
        s = cur.shape[0]
        if s % 2:
            cur = np.pad(cur, ((0, 1), (0, 1)), constant_values=fill)
            s += 1
        cur = np.minimum.reduce([cur[0::2, 0::2], cur[0::2, 1::2],
                                 cur[1::2, 0::2], cur[1::2, 1::2]])
        out.append(cur)
    return out


def _all_pyramid(mask: np.ndarray, levels: int) -> list[np.ndarray]:
    out = [mask]
    cur = mask
    for _ in range(levels):
        s = cur.shape[0]
        if s % 2:
            cur = np.pad(cur, ((0, 1), (0, 1)), constant_values=False)
        cur = cur[0::2, 0::2] & cur[0::2, 1::2] & cur[1::2, 0::2] & cur[1::2, 1::2]
        out.append(cur)
    return out


def default_collar_width(domain: RasterDomain) -> float:
    rad = domain_radius(domain)
    return min(rad, domain.diameter(), 2 * COLLAR_CAP) / 2.0


def whitney_decompose(domain: RasterDomain, collar_width: float | None = None) -> WhitneyDecomposition:
    """Dyadic cube covers of the domain and of a collar of its complement.

    Inside cubes satisfy side <= dist(Q, boundary) (grid proxy: the minimum
    cell-center distance transform over the cube); outside cubes the same
    with respect to the domain, kept up to distance 2 * collar_width.
    Matching picks, for each outside cube, the nearest inside cube with
    side ratio in [1/4, 4] (ties broken by lexicographic center).
    """
    h = domain.h
    rad = domain_radius(domain)
    if rad < 2 * h:
        raise ResolutionError(
            f"domain radius {rad:g} is below 2h = {2 * h:g}; refine the raster")
    W = collar_width if collar_width is not None else default_collar_width(domain)
    if W <= 0:
        raise InputError("collar width must be positive")
    keep = 2.0 * W
    pad_cells = int(math.ceil(keep / h)) + 4
    padded = _pad_domain(domain, pad_cells)

    size = 1 << int(math.ceil(math.log2(max(padded.nx, padded.ny))))
    ins = np.zeros((size, size), dtype=bool)
    ins[:padded.ny, :padded.nx] = padded.inside
    edt_in = ndimage.distance_transform_edt(ins, sampling=h)
    edt_out = ndimage.distance_transform_edt(~ins, sampling=h)

    levels = int(math.log2(size))
    all_in = _all_pyramid(ins, levels)
    all_out = _all_pyramid(~ins, levels)
    min_in = _min_pyramid(np.where(ins, edt_in, 0.0), levels, fill=0.0)
    min_out = _min_pyramid(np.where(ins, np.inf, edt_out), levels, fill=np.inf)

    inside_cubes: list[DyadicCube] = []
    outside_cubes: list[DyadicCube] = []
    ox, oy = padded.origin
    stack = [(levels, 0, 0)]
    while stack:
        lvl, jy, jx = stack.pop()
        side = h * (1 << lvl)
        if all_out[lvl][jy, jx] and min_out[lvl][jy, jx] > keep:
            continue  # entirely beyond the collar
        cy0, cx0 = jy << lvl, jx << lvl
        center = (ox + (cx0 + (1 << lvl) / 2.0) * h, oy + (cy0 + (1 << lvl) / 2.0) * h)
        if all_in[lvl][jy, jx] and side <= min_in[lvl][jy, jx] * (1 + 1e-12):
            inside_cubes.append(DyadicCube(lvl, cy0, cx0, side, center,
                                           float(min_in[lvl][jy, jx])))
            continue
        if all_out[lvl][jy, jx] and side <= min_out[lvl][jy, jx] * (1 + 1e-12):
            outside_cubes.append(DyadicCube(lvl, cy0, cx0, side, center,
                                            float(min_out[lvl][jy, jx])))
            continue
        if lvl == 0:
            # single cells always satisfy side = h <= distance transform
            if ins[cy0, cx0]:
                inside_cubes.append(DyadicCube(0, cy0, cx0, h, center, float(edt_in[cy0, cx0])))
            elif edt_out[cy0, cx0] <= keep:
                outside_cubes.append(DyadicCube(0, cy0, cx0, h, center, float(edt_out[cy0, cx0])))
            continue
        for dy in (0, 1):
            for dx in (0, 1):
                stack.append((lvl - 1, 2 * jy + dy, 2 * jx + dx))

    matching, widened = _match_cubes(inside_cubes, outside_cubes)
    meta = {"h": h, "pad_cells": pad_cells, "collar_keep": keep,
            "rad": rad, "widened_matches": widened}
    return WhitneyDecomposition(domain=domain, padded=padded,
                                inside_cubes=inside_cubes, outside_cubes=outside_cubes,
                                matching=matching, collar_width=W, meta=meta)


def _match_cubes(inside_cubes, outside_cubes):
    by_level: dict[int, tuple[np.ndarray, cKDTree]] = {}
    for lvl in {c.level for c in inside_cubes}:
        idx = np.array([i for i, c in enumerate(inside_cubes) if c.level == lvl])
        centers = np.array([inside_cubes[i].center for i in idx])
        by_level[lvl] = (idx, cKDTree(centers))
    matching: dict[int, int] = {}
    widened = 0
    levels_avail = sorted(by_level)
    for j, S in enumerate(outside_cubes):
        cand: list[tuple[float, float, float, int]] = []
        for spread in (2, 4, 64):
            lvls = [l for l in levels_avail if abs(l - S.level) <= spread]
            for lvl in lvls:
                idx, tree = by_level[lvl]
                k = min(4, len(idx))
                dist, which = tree.query(S.center, k=k)
                dist = np.atleast_1d(dist)
                which = np.atleast_1d(which)
                for d, w in zip(dist, which):
                    i = int(idx[int(w)])
                    c = inside_cubes[i].center
                    cand.append((float(d), c[0], c[1], i))
            if cand:
                if spread > 2:
                    widened += 1
                break
        cand.sort()
        matching[j] = cand[0][3]
    return matching, widened


# ---------------------------------------------------------------------------
# the extension operator

def _bump(s: np.ndarray) -> np.ndarray:
    s = np.clip(s, 0.0, 1.0)
    return s * s * (3.0 - 2.0 * s)


def _axis_weights(centers: np.ndarray, c: float, side: float) -> np.ndarray:
    # plateau 1 on the cube, C^1 decay to 0 at the 1.5-dilated edge
    return _bump((0.75 * side - np.abs(centers - c)) / (0.25 * side))


class TabulatedGlobalPhi(PhiFunction):
    """Fast forward evaluation of an :class:`ExtendedPhi` on a fixed grid:
    exact delegation on the domain, precompiled inverse tables on the
    collar, and the far-field envelope inverted in closed form beyond."""

    family = "extended-tabulated"

    def __init__(self, ext: ExtendedPhi, grid: RasterDomain, reach: float):
        super().__init__(domain=None)
        self.ext = ext
        self.grid = grid
        self.flags = ext.flags
        X, Y = grid.cell_centers()
        centers = np.column_stack([X.ravel(), Y.ravel()])
        in_omega = ext.omega.contains(centers).reshape(grid.inside.shape)
        dist_out = ndimage.distance_transform_edt(~in_omega, sampling=grid.h)
        tab_mask = ~in_omega & (dist_out <= reach)
        self.in_omega = in_omega
        self.tab_mask = tab_mask
        self.tab_row = np.full(grid.inside.shape, -1, dtype=np.int64)
        self.tab_row[tab_mask] = np.arange(int(tab_mask.sum()))
        pts_tab = centers[tab_mask.ravel()]
        self.table = (ext.inverse_table(pts_tab, FORWARD_GRID)
                      if len(pts_tab) else np.empty((0, FORWARD_GRID.size)))
        with np.errstate(divide="ignore"):
            self.log_table = np.log(self.table)
        self.log_t = np.log(FORWARD_GRID)
        self._classified: tuple | None = None  # memo keyed on the points array

    def _classify(self, pts: np.ndarray):
        # quadrature loops evaluate on the same point array many times
        memo = self._classified
        if memo is not None and memo[0] is pts:
            return memo[1]
        iy, ix = self.grid.cell_of(pts)
        m_in = self.in_omega[iy, ix]
        m_tab = self.tab_mask[iy, ix] & ~m_in
        m_far = ~m_in & ~m_tab
        rows = self.tab_row[iy[m_tab], ix[m_tab]]
        out = (m_in, m_tab, m_far, rows)
        self._classified = (pts, out)
        return out

    def value(self, points, t):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        t = np.broadcast_to(np.asarray(t, dtype=float), (pts.shape[0],)).astype(float)
        m_in, m_tab, m_far, rows = self._classify(pts)
        out = np.empty(pts.shape[0])
        if m_in.any():
            out[m_in] = np.asarray(self.ext.base.value(pts[m_in], t[m_in]), dtype=float)
        if m_tab.any():
            out[m_tab] = forward_rows(self.table, self.log_table, self.log_t,
                                      rows, t[m_tab])
        if m_far.any():
            # invert the far-field cap E(t) = coef * max(t, t^{1/q})
            s = t[m_far] / self.ext.envelope_coef
            out[m_far] = np.where(s >= 1.0, s, s ** self.ext.q)
        return out

    def inverse(self, points, tau, *, rtol: float = 1e-10):
        return self.ext.inverse(points, tau, rtol=rtol)

    def params(self):
        return {"rows": int(self.table.shape[0])}


@dataclass
class ExtensionResult:
    extended: GridFunction
    ratio: float
    metadata: dict


class SobolevExtensionOperator:
    """Precompiled extension operator for one (decomposition, phi, psi)
    triple; apply to many grid functions on the same domain."""

    def __init__(self, decomposition: WhitneyDecomposition, phi: PhiFunction,
                 psi: ExtendedPhi):
        self.dec = decomposition
        self.phi = phi
        self.psi = psi
        dom, pad = decomposition.domain, decomposition.padded
        self.full = full_grid_like(pad)
        W = decomposition.collar_width
        self._taper = self._taper_field()
        self._blend_entries = self._compile_blend()
        reach = 2 * W + 4 * pad.h
        self.psi_fast = TabulatedGlobalPhi(psi, pad, reach)
        self._pad_cells = decomposition.meta["pad_cells"]

    def _taper_field(self) -> np.ndarray:
        pad = self.dec.padded
        W = self.dec.collar_width
        d = pad.distance_to_inside
        t = np.ones(pad.inside.shape)
        band = (d > W) & (d < 2 * W)
        t[band] = _bump((2 * W - d[band]) / W)
        t[d >= 2 * W] = 0.0
        return t

    def _compile_blend(self):
        pad = self.dec.padded
        h = pad.h
        ox, oy = pad.origin
        xs = ox + (np.arange(pad.nx) + 0.5) * h
        ys = oy + (np.arange(pad.ny) + 0.5) * h
        entries = []
        for j, S in enumerate(self.dec.outside_cubes):
            cx, cy = S.center
            half = 0.75 * S.side
            ix0 = max(0, int(math.floor((cx - half - ox) / h - 0.5)))
            ix1 = min(pad.nx - 1, int(math.ceil((cx + half - ox) / h - 0.5)))
            iy0 = max(0, int(math.floor((cy - half - oy) / h - 0.5)))
            iy1 = min(pad.ny - 1, int(math.ceil((cy + half - oy) / h - 0.5)))
            if ix1 < ix0 or iy1 < iy0:
                continue
            wx = _axis_weights(xs[ix0:ix1 + 1], cx, S.side)
            wy = _axis_weights(ys[iy0:iy1 + 1], cy, S.side)
            w2d = np.outer(wy, wx)
            if w2d.max() <= 0:
                continue
            src = self.dec.inside_cubes[self.dec.matching[j]]
            entries.append((slice(iy0, iy1 + 1), slice(ix0, ix1 + 1), w2d,
                            src.cell_slices()))
        return entries

    def _embed(self, u: GridFunction) -> np.ndarray:
        p = self._pad_cells
        pad = self.dec.padded
        out = np.zeros(pad.inside.shape)
        out[p:p + u.domain.ny, p:p + u.domain.nx] = np.nan_to_num(u.values)
        return out

    def extend(self, u: GridFunction, *, norm_tol: float = 1e-6) -> ExtensionResult:
        if u.domain is not self.dec.domain:
            if u.domain.inside.shape != self.dec.domain.inside.shape or \
               not np.array_equal(u.domain.inside, self.dec.domain.inside):
                raise InputError("grid function does not live on the decomposed domain")
        pad = self.dec.padded
        u_pad = self._embed(u)
        acc_v = np.zeros(pad.inside.shape)
        acc_w = np.zeros(pad.inside.shape)
        for sly, slx, w2d, src in self._blend_entries:
            v = float(u_pad[src].mean())
            acc_v[sly, slx] += w2d * v
            acc_w[sly, slx] += w2d
        blend = np.divide(acc_v, acc_w, out=np.zeros_like(acc_v), where=acc_w > 0)
        lam = np.where(pad.inside, u_pad, blend * self._taper)
        extended = GridFunction(self.full, lam)
        if u.is_zero():
            return ExtensionResult(extended, 0.0, {"h": pad.h, "zero": True})
        norm_u = sobolev_norm(self.phi, u, 1, tol=norm_tol)
        norm_ext = sobolev_norm(self.psi_fast, extended, 1, tol=norm_tol)
        ratio = norm_ext / norm_u if norm_u > 0 else float("inf")
        meta = {"h": pad.h, "collar_width": self.dec.collar_width,
                "norm_domain": norm_u, "norm_extension": norm_ext,
                "outside_cubes": len(self.dec.outside_cubes),
                "inside_cubes": len(self.dec.inside_cubes)}
        return ExtensionResult(extended, float(ratio), meta)


def extend(u: GridFunction, decomposition: WhitneyDecomposition,
           phi: PhiFunction, psi: ExtendedPhi) -> ExtensionResult:
    """One-shot extension; the compiled operator is cached on the
    decomposition so repeated calls stay cheap."""
    op = getattr(decomposition, "_operator", None)
    if op is None or op.phi is not phi or op.psi is not psi:
        op = SobolevExtensionOperator(decomposition, phi, psi)
        decomposition._operator = op
    return op.extend(u)


# ---------------------------------------------------------------------------
# weighted norms and Muckenhoupt estimation

@dataclass
class Weight:
    """A positive per-cell weight."""

    domain: RasterDomain
    values: np.ndarray
    a1_estimate: float | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.domain.inside.shape:
            raise InputError("weight shape must match its grid")
        if np.any(self.values <= 0):
            raise InputError("weights must be positive everywhere")

    @classmethod
    def constant(cls, domain: RasterDomain, c: float = 1.0) -> "Weight":
        if c <= 0:
            raise InputError("weights must be positive")
        return cls(domain, np.full(domain.inside.shape, float(c)), a1_estimate=1.0)

    @classmethod
    def from_callable(cls, domain: RasterDomain, fn) -> "Weight":
        X, Y = domain.cell_centers()
        pts = np.column_stack([X.ravel(), Y.ravel()])
        vals = np.asarray(fn(pts), dtype=float).reshape(domain.inside.shape)
        return cls(domain, vals)


def _weight_values_on(w: Weight, domain: RasterDomain) -> np.ndarray:
    if w.values.shape == domain.inside.shape and w.domain.origin == domain.origin:
        return w.values
    X, Y = domain.cell_centers()
    iy, ix = w.domain.cell_of(np.column_stack([X.ravel(), Y.ravel()]))
    return w.values[iy, ix].reshape(domain.inside.shape)


def weighted_norm(u: GridFunction, w: Weight, k: int) -> float:
    """sum over |alpha| <= k of the weighted L^1 norm of d_alpha u."""
    if k not in (0, 1, 2):
        raise InputError("weighted norms are supported for k in {0, 1, 2}")
    wv = _weight_values_on(w, u.domain)
    ins = u.domain.inside
    hn = u.domain.h ** u.domain.n
    total = 0.0
    for alpha in multi_indices_up_to(2, k):
        dv = np.nan_to_num(u.derivative(alpha.entries))
        total += math.fsum((np.abs(dv) * wv)[ins]) * hn
    return total


def check_a1_weight(w: Weight, *, n_cubes: int = 512, rng=None,
                    bound: float | None = None, cubes=None) -> ConditionReport:
    """Estimate the Muckenhoupt constant: the largest sampled ratio of a
    cube mean of w to its cube minimum (the discrete essential infimum).

    Cubes are sampled at random positions with log-uniform sides unless an
    explicit list of (iy, ix, side_cells) is given."""
    rng = default_rng(rng)
    ny, nx = w.values.shape
    if cubes is None:
        cubes = []
        for _ in range(n_cubes):
            side_max = max(2, min(nx, ny) // 2)
            side = int(round(math.exp(rng.uniform(0.0, math.log(side_max)))))
            side = max(1, min(side, side_max))
            iy = int(rng.integers(0, ny - side + 1))
            ix = int(rng.integers(0, nx - side + 1))
            cubes.append((iy, ix, side))
    else:
        n_cubes = len(cubes)
    worst = 1.0
    worst_cube = None
    for iy, ix, side in cubes:
        block = w.values[iy:iy + side, ix:ix + side]
        ratio = float(block.mean() / block.min())
        if ratio > worst:
            worst = ratio
            worst_cube = (iy, ix, side)
    w.a1_estimate = worst
    verdict = True if bound is None else worst <= bound
    witnesses = []
    if not verdict and worst_cube is not None:
        iy, ix, side = worst_cube
        cx = w.domain.origin[0] + (ix + side / 2) * w.domain.h
        cy = w.domain.origin[1] + (iy + side / 2) * w.domain.h
        witnesses.append(Witness(x=[cx, cy], lhs=worst, rhs=float(bound),
                                 detail=f"cube of {side} cells"))
    return ConditionReport(
        condition="A1_weight", verdict=bool(verdict), best_constant=worst,
        witnesses=witnesses, samples={"cubes": n_cubes},
        parameters={"bound": bound})


def g_reduction(u: GridFunction, k: int) -> GridFunction:
    """The scalar reduction g = sum over |alpha| <= k of |d_alpha u| on the
    domain, extended by zero to the full grid."""
    if k not in (0, 1, 2):
        raise InputError("g-reduction supported for k in {0, 1, 2}")
    ins = u.domain.inside
    total = np.zeros(ins.shape)
    for alpha in multi_indices_up_to(2, k):
        total += np.where(ins, np.abs(np.nan_to_num(u.derivative(alpha.entries))), 0.0)
    return GridFunction(full_grid_like(u.domain), total)


# ---------------------------------------------------------------------------
# the empirical boundedness experiment

def default_corpus():
    """Ten smooth test functions: polynomials, a Gaussian, oscillatory and
    rational profiles."""
    return [
        ("const", lambda p: np.ones(len(p))),
        ("linear_x", lambda p: p[:, 0]),
        ("linear_y", lambda p: p[:, 1]),
        ("bilinear", lambda p: p[:, 0] * p[:, 1]),
        ("saddle", lambda p: p[:, 0] ** 2 - p[:, 1] ** 2),
        ("gaussian", lambda p: np.exp(-2.0 * (p[:, 0] ** 2 + p[:, 1] ** 2))),
        ("wave", lambda p: np.sin(3.0 * p[:, 0]) * np.cos(3.0 * p[:, 1])),
        ("exp_tilt", lambda p: np.exp(p[:, 0] / 2.0)),
        ("bump", lambda p: 1.0 / (1.0 + p[:, 0] ** 2 + p[:, 1] ** 2)),
        ("harmonic3", lambda p: p[:, 0] ** 3 - 3.0 * p[:, 0] * p[:, 1] ** 2),
    ]


def boundedness_experiment(corpus, domain_factory, phi_factory, bundle, h_values, *,
                           rng=None, growth_tol: float = 1.1,
                           max_anchors: int = 768,
                           collar_width: float | None = None) -> dict:
    """Measure Sobolev-norm ratios of the extension across grid refinements.

    For each h: rebuild the domain, the growth function, its global
    extension, and the Whitney operator; record the norm ratio for every
    corpus function.  PASS means the max ratio grows by at most
    ``growth_tol`` per grid halving (the abstract operator-norm constant
    is not constructive, so refinement stability is the testable claim).
    """
    from .extension import extend_phi

    rng = default_rng(rng)
    ratios: dict[float, dict[str, float]] = {}
    restriction_exact = True
    for h in h_values:
        domain = domain_factory(h)
        phi = phi_factory(domain)
        psi = extend_phi(phi, domain, bundle, max_anchors=max_anchors,
                         rng=rng, run_checks=False)
        dec = whitney_decompose(domain, collar_width=collar_width)
        op = SobolevExtensionOperator(dec, phi, psi)
        row: dict[str, float] = {}
        for name, fn in corpus:
            u = GridFunction.from_callable(domain, fn)
            res = op.extend(u)
            row[name] = res.ratio
            p = op._pad_cells
            core = res.extended.values[p:p + domain.ny, p:p + domain.nx]
            if not np.array_equal(core[domain.inside],
                                  np.nan_to_num(u.values)[domain.inside]):
                restriction_exact = False
        ratios[h] = row
    hs = list(h_values)
    max_ratios = [max(ratios[h].values()) for h in hs]
    growth = [max_ratios[i + 1] / max_ratios[i] for i in range(len(hs) - 1)]
    passed = all(g <= growth_tol for g in growth) and all(np.isfinite(max_ratios))
    return {
        "schema_version": 1,
        "h_values": hs,
        "ratios": {repr(h): ratios[h] for h in hs},
        "max_ratios": max_ratios,
        "growth_factors": growth,
        "growth_tol": growth_tol,
        "restriction_exact": restriction_exact,
        "pass": bool(passed),
    }
