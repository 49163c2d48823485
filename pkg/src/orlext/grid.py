"""Raster domains and grid functions.

An open set in the plane is represented by a uniform cell grid with an
inside/outside mark per cell.  ``inside[iy, ix]`` refers to the cell whose
center is ``(origin[0] + (ix + 0.5) h, origin[1] + (iy + 0.5) h)``; the
first array axis is y, the second is x.

Domain file format (text)::

    ORLICZ-DOMAIN v1
    nx ny h ox oy
    <ny rows of nx characters from {#, .}; first row is the TOP row>

``#`` marks an inside cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .errors import InputError

# 8-connectivity for component labeling, matching the path metric
_STRUCTURE8 = np.ones((3, 3), dtype=bool)


@dataclass(eq=False)
class RasterDomain:
    """An open planar set as a uniform cell grid."""

    origin: tuple[float, float]
    h: float
    inside: np.ndarray  # bool, shape (ny, nx)

    def __post_init__(self):
        self.inside = np.asarray(self.inside, dtype=bool)
        if self.inside.ndim != 2:
            raise InputError("inside mask must be 2-D")
        if not self.inside.any():
            raise InputError("domain has no inside cells")
        if self.h <= 0:
            raise InputError("cell size h must be positive")
        self.origin = (float(self.origin[0]), float(self.origin[1]))

    # ---- basic geometry -------------------------------------------------
    @property
    def n(self) -> int:
        return 2

    @property
    def ny(self) -> int:
        return self.inside.shape[0]

    @property
    def nx(self) -> int:
        return self.inside.shape[1]

    @property
    def n_inside(self) -> int:
        return int(self.inside.sum())

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid arrays (X, Y) of all cell centers, shape (ny, nx)."""
        xs = self.origin[0] + (np.arange(self.nx) + 0.5) * self.h
        ys = self.origin[1] + (np.arange(self.ny) + 0.5) * self.h
        return np.meshgrid(xs, ys)

    @cached_property
    def inside_points(self) -> np.ndarray:
        """Centers of inside cells, shape (m, 2)."""
        X, Y = self.cell_centers()
        return np.column_stack([X[self.inside], Y[self.inside]])

    @cached_property
    def inside_kdtree(self) -> cKDTree:
        return cKDTree(self.inside_points)

    @cached_property
    def inside_index(self) -> np.ndarray:
        """Maps (iy, ix) to a running inside-cell index; -1 outside."""
        idx = np.full(self.inside.shape, -1, dtype=np.int64)
        idx[self.inside] = np.arange(self.n_inside)
        return idx

    def cell_of(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Cell indices (iy, ix) containing each point; clipped to the grid."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        ix = np.clip(((pts[:, 0] - self.origin[0]) / self.h).astype(int), 0, self.nx - 1)
        iy = np.clip(((pts[:, 1] - self.origin[1]) / self.h).astype(int), 0, self.ny - 1)
        return iy, ix

    def contains(self, points: np.ndarray) -> np.ndarray:
        """True where the point falls in an inside cell of the raster."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        x_ok = (pts[:, 0] >= self.origin[0]) & (pts[:, 0] < self.origin[0] + self.nx * self.h)
        y_ok = (pts[:, 1] >= self.origin[1]) & (pts[:, 1] < self.origin[1] + self.ny * self.h)
        iy, ix = self.cell_of(pts)
        out = self.inside[iy, ix] & x_ok & y_ok
        return out

    # ---- derived masks ---------------------------------------------------
    @cached_property
    def boundary_cells(self) -> np.ndarray:
        """Inside cells with at least one outside 4-neighbor (grid edge counts)."""
        ins = self.inside
        padded = np.pad(ins, 1, constant_values=False)
        has_outside = (
            ~padded[:-2, 1:-1] | ~padded[2:, 1:-1] | ~padded[1:-1, :-2] | ~padded[1:-1, 2:]
        )
        return ins & has_outside

    @cached_property
    def component_labels(self) -> np.ndarray:
        labels, _ = ndimage.label(self.inside, structure=_STRUCTURE8)
        return labels

    @property
    def n_components(self) -> int:
        return int(self.component_labels.max())

    @cached_property
    def distance_to_outside(self) -> np.ndarray:
        """Euclidean distance from each cell center to the nearest outside
        cell center, in length units. Zero on outside cells."""
        padded = np.pad(self.inside, 1, constant_values=False)
        d = ndimage.distance_transform_edt(padded, sampling=self.h)
        return d[1:-1, 1:-1]

    @cached_property
    def distance_to_inside(self) -> np.ndarray:
        """Distance from outside cell centers to the nearest inside cell center."""
        return ndimage.distance_transform_edt(~self.inside, sampling=self.h)

    def diameter(self) -> float:
        pts = self.inside_points
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    # ---- I/O --------------------------------------------------------------
    def to_file(self, path) -> None:
        lines = ["ORLICZ-DOMAIN v1",
                 f"{self.nx} {self.ny} {self.h!r} {self.origin[0]!r} {self.origin[1]!r}"]
        for iy in range(self.ny - 1, -1, -1):
            lines.append("".join("#" if v else "." for v in self.inside[iy]))
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_file(cls, path) -> "RasterDomain":
        text = Path(path).read_text().splitlines()
        if not text or text[0].strip() != "ORLICZ-DOMAIN v1":
            raise InputError(f"{path}: missing 'ORLICZ-DOMAIN v1' header")
        fields = text[1].split()
        if len(fields) != 5:
            raise InputError(f"{path}: header line must be 'nx ny h ox oy'")
        nx, ny = int(fields[0]), int(fields[1])
        h, ox, oy = (float(v) for v in fields[2:])
        rows = text[2:2 + ny]
        if len(rows) != ny:
            raise InputError(f"{path}: expected {ny} raster rows, found {len(rows)}")
        inside = np.zeros((ny, nx), dtype=bool)
        for k, row in enumerate(rows):
            if len(row) != nx:
                raise InputError(f"{path}: row {k} has {len(row)} characters, wanted {nx}")
            inside[ny - 1 - k] = np.frombuffer(row.encode(), dtype="S1") == b"#"
        return cls(origin=(ox, oy), h=h, inside=inside)


# ---- builders --------------------------------------------------------------

def from_indicator(indicator, bbox, h: float) -> RasterDomain:
    """Rasterize ``{x : indicator(x)}`` on ``bbox = (x0, x1, y0, y1)``."""
    x0, x1, y0, y1 = bbox
    nx = max(1, int(round((x1 - x0) / h)))
    ny = max(1, int(round((y1 - y0) / h)))
    dom = RasterDomain.__new__(RasterDomain)
    xs = x0 + (np.arange(nx) + 0.5) * h
    ys = y0 + (np.arange(ny) + 0.5) * h
    X, Y = np.meshgrid(xs, ys)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    inside = np.asarray(indicator(pts), dtype=bool).reshape(ny, nx)
    return RasterDomain(origin=(x0, y0), h=h, inside=inside)


def disk_domain(h: float, radius: float = 1.0, center=(0.0, 0.0)) -> RasterDomain:
    cx, cy = center
    r = radius

    def ind(p):
        return (p[:, 0] - cx) ** 2 + (p[:, 1] - cy) ** 2 < r ** 2

    pad = 2 * h
    return from_indicator(ind, (cx - r - pad, cx + r + pad, cy - r - pad, cy + r + pad), h)


def square_domain(h: float, side: float = 1.0, corner=(0.0, 0.0)) -> RasterDomain:
    """Axis-aligned open square; the raster tiles it exactly when side/h is integral."""
    x0, y0 = corner
    nx = max(1, int(round(side / h)))
    inside = np.ones((nx, nx), dtype=bool)
    return RasterDomain(origin=(x0, y0), h=h, inside=inside)


def l_shape_domain(h: float, size: float = 2.0) -> RasterDomain:
    """L-shape: [0,size]^2 minus the closed upper-right quadrant."""
    s, half = size, size / 2

    def ind(p):
        in_square = (p[:, 0] > 0) & (p[:, 0] < s) & (p[:, 1] > 0) & (p[:, 1] < s)
        in_notch = (p[:, 0] > half) & (p[:, 1] > half)
        return in_square & ~in_notch

    return from_indicator(ind, (0, s, 0, s), h)


def dumbbell_contains(points: np.ndarray) -> np.ndarray:
    """Membership in the unbounded dumbbell: two vertical half-strips
    U = (-3,-1) x (-1, inf), V = (1,3) x (-1, inf), joined by the bar
    W = [-1,1] x (-1,0)."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    x, y = p[:, 0], p[:, 1]
    in_u = (-3 < x) & (x < -1) & (y > -1)
    in_v = (1 < x) & (x < 3) & (y > -1)
    in_w = (-1 <= x) & (x <= 1) & (-1 < y) & (y < 0)
    return in_u | in_v | in_w


def dumbbell_domain(h: float = 0.05, y_top: float = 12.0) -> RasterDomain:
    """Raster window of the dumbbell on [-3,3] x [-1, y_top]."""
    return from_indicator(dumbbell_contains, (-3.0, 3.0, -1.0, y_top), h)


def cusp_domain(h: float, extent: float = 1.0) -> RasterDomain:
    """Outward-cusp region {0 < x < extent, |y| < x^2}, tip at the origin."""

    def ind(p):
        return (p[:, 0] > 0) & (p[:, 0] < extent) & (np.abs(p[:, 1]) < p[:, 0] ** 2)

    e2 = extent ** 2
    dom = from_indicator(ind, (0.0, extent, -e2 - h, e2 + h), h)
    return dom


def coarsen_domain(domain: RasterDomain, factor: int = 2) -> RasterDomain:
    """Block-coarsen: a coarse cell is inside when its whole block is.
    Trailing rows/columns that do not fill a block are dropped."""
    ny = (domain.ny // factor) * factor
    nx = (domain.nx // factor) * factor
    ins = domain.inside[:ny, :nx]
    blocks = ins.reshape(ny // factor, factor, nx // factor, factor)
    coarse = blocks.all(axis=(1, 3))
    return RasterDomain(origin=domain.origin, h=domain.h * factor, inside=coarse)


def two_disks_domain(h: float, radius: float = 1.0, gap: float = 1.0) -> RasterDomain:
    """Two disjoint disks of the given radius, centers 2*radius+gap apart."""
    d = 2 * radius + gap
    c1, c2 = (-d / 2, 0.0), (d / 2, 0.0)

    def ind(p):
        in1 = (p[:, 0] - c1[0]) ** 2 + p[:, 1] ** 2 < radius ** 2
        in2 = (p[:, 0] - c2[0]) ** 2 + p[:, 1] ** 2 < radius ** 2
        return in1 | in2

    pad = 2 * h
    return from_indicator(ind, (-d / 2 - radius - pad, d / 2 + radius + pad,
                                -radius - pad, radius + pad), h)


# ---- multi-indices ----------------------------------------------------------

@dataclass(frozen=True)
class MultiIndex:
    """A multi-index (a_1, ..., a_n) of non-negative integers."""

    entries: tuple[int, ...]

    def __post_init__(self):
        if any(a < 0 or int(a) != a for a in self.entries):
            raise InputError("multi-index entries must be non-negative integers")
        object.__setattr__(self, "entries", tuple(int(a) for a in self.entries))

    @property
    def length(self) -> int:
        return sum(self.entries)

    def __iter__(self):
        return iter(self.entries)


def multi_indices_up_to(n: int, k: int) -> list[MultiIndex]:
    """All multi-indices in n variables with length <= k, lexicographic."""
    if n == 1:
        return [MultiIndex((a,)) for a in range(k + 1)]
    out = []

    def rec(prefix, remaining, budget):
        if remaining == 1:
            for a in range(budget + 1):
                out.append(MultiIndex(prefix + (a,)))
            return
        for a in range(budget + 1):
            rec(prefix + (a,), remaining - 1, budget - a)

    rec((), n, k)
    out.sort(key=lambda m: (m.length, m.entries))
    return out


# ---- grid functions ---------------------------------------------------------

def _masked_diff(values: np.ndarray, inside: np.ndarray, h: float, axis: int) -> np.ndarray:
    """First difference along an axis: central where both neighbors are inside,
    one-sided next to the boundary, zero where no inside neighbor exists."""
    v = np.where(inside, values, 0.0)
    ins = inside
    fwd_ok = np.zeros_like(ins)
    bwd_ok = np.zeros_like(ins)
    vf = np.zeros_like(v)
    vb = np.zeros_like(v)
    if axis == 1:  # x1 varies along columns
        fwd_ok[:, :-1] = ins[:, 1:]
        bwd_ok[:, 1:] = ins[:, :-1]
        vf[:, :-1] = v[:, 1:]
        vb[:, 1:] = v[:, :-1]
    else:
        fwd_ok[:-1, :] = ins[1:, :]
        bwd_ok[1:, :] = ins[:-1, :]
        vf[:-1, :] = v[1:, :]
        vb[1:, :] = v[:-1, :]
    out = np.zeros_like(v)
    central = ins & fwd_ok & bwd_ok
    fwd = ins & fwd_ok & ~bwd_ok
    bwd = ins & ~fwd_ok & bwd_ok
    out[central] = (vf[central] - vb[central]) / (2 * h)
    out[fwd] = (vf[fwd] - v[fwd]) / h
    out[bwd] = (v[bwd] - vb[bwd]) / h
    return np.where(inside, out, np.nan)


@dataclass
class GridFunction:
    """Sampled values of a function (and optionally its derivatives) on the
    inside cells of a :class:`RasterDomain`.  Entries outside the domain are
    NaN and never enter any quadrature."""

    domain: RasterDomain
    values: np.ndarray
    derivs: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.domain.inside.shape:
            raise InputError("values shape must match the domain grid")
        self.values = np.where(self.domain.inside, self.values, np.nan)

    @classmethod
    def from_callable(cls, domain: RasterDomain, fn, derivatives: dict | None = None):
        """Sample ``fn(points) -> values`` at inside cell centers; optional
        ``derivatives`` maps multi-index tuples to callables."""
        X, Y = domain.cell_centers()
        pts = np.column_stack([X.ravel(), Y.ravel()])
        vals = np.asarray(fn(pts), dtype=float).reshape(domain.inside.shape)
        gf = cls(domain, vals)
        if derivatives:
            for alpha, dfn in derivatives.items():
                dv = np.asarray(dfn(pts), dtype=float).reshape(domain.inside.shape)
                gf.derivs[tuple(alpha)] = np.where(domain.inside, dv, np.nan)
        return gf

    @classmethod
    def constant(cls, domain: RasterDomain, value: float):
        return cls(domain, np.full(domain.inside.shape, float(value)))

    def inside_values(self) -> np.ndarray:
        return self.values[self.domain.inside]

    def is_zero(self) -> bool:
        v = self.inside_values()
        return bool(np.all(v == 0.0))

    def derivative(self, alpha) -> np.ndarray:
        """The grid of d_alpha u; finite differences fill missing slots
        (one-sided at cells adjacent to the boundary)."""
        alpha = tuple(int(a) for a in alpha)
        if alpha == (0, 0):
            return self.values
        if alpha in self.derivs:
            return self.derivs[alpha]
        a, b = alpha
        if a > 0:
            parent = self.derivative((a - 1, b))
        else:
            parent = self.derivative((a, b - 1))
        axis = 1 if a > 0 else 0
        out = _masked_diff(np.nan_to_num(parent), self.domain.inside, self.domain.h, axis)
        self.derivs[alpha] = out
        return out

    def scaled(self, c: float) -> "GridFunction":
        gf = GridFunction(self.domain, np.nan_to_num(self.values) * c)
        gf.derivs = {a: d * c for a, d in self.derivs.items()}
        return gf

    # -- field CSV I/O: header "nx ny h [ox oy]", then ny rows of nx values,
    #    first data row is the iy=0 (bottom) row.
    def to_csv(self, path) -> None:
        dom = self.domain
        lines = [f"{dom.nx} {dom.ny} {dom.h!r} {dom.origin[0]!r} {dom.origin[1]!r}"]
        vals = np.nan_to_num(self.values)
        for iy in range(dom.ny):
            lines.append(" ".join(repr(float(v)) for v in vals[iy]))
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path, domain: RasterDomain | None = None) -> "GridFunction":
        text = Path(path).read_text().splitlines()
        head = text[0].split()
        if len(head) not in (3, 5):
            raise InputError(f"{path}: header must be 'nx ny h [ox oy]'")
        nx, ny, h = int(head[0]), int(head[1]), float(head[2])
        origin = (float(head[3]), float(head[4])) if len(head) == 5 else (0.0, 0.0)
        rows = [np.fromstring(line, sep=" ") for line in text[1:1 + ny]]
        vals = np.vstack(rows)
        if vals.shape != (ny, nx):
            raise InputError(f"{path}: expected {ny}x{nx} values, got {vals.shape}")
        if domain is None:
            domain = RasterDomain(origin=origin, h=h, inside=np.ones((ny, nx), bool))
        elif (domain.nx, domain.ny) != (nx, ny):
            raise InputError(f"{path}: grid {nx}x{ny} does not match the domain "
                             f"{domain.nx}x{domain.ny}")
        return cls(domain, vals)
