"""Box counting, summability, box dimension and Whitney decompositions.

Dyadic k-cubes are closed: Q = prod [l_i 2^-k, (l_i + 1) 2^-k].  A set is
given either as a rasterized {0,1} GridFunction or as an exact geometric
object (points, segments, circles, boxes, polygons).  Every set type answers
``cubes_meeting(k)``: the integer bases of all closed k-cubes meeting it.

Open regions (disk, box, polygon) additionally know their boundary and can
classify grid cells, which is all the Whitney construction needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ConfigError, NumericalError, PreconditionError
from .grid import CubicalChain, Decomposition, DyadicFace, PartStats
from .sobolev import GridFunction

MAX_GRID_CELLS = 1 << 25


def _unique_rows(a: np.ndarray) -> np.ndarray:
    if a.size == 0:
        return a.reshape(0, a.shape[1] if a.ndim == 2 else 0)
    return np.unique(a, axis=0)


def _axis_range(lo: np.ndarray, hi: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Integer q range of closed cubes [qh, (q+1)h] meeting [lo, hi], per coordinate."""
    return np.ceil(lo / h).astype(np.int64) - 1, np.floor(hi / h).astype(np.int64)


def _expand_ranges(qlo: np.ndarray, qhi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """All integer points of the boxes [qlo_i, qhi_i] (rows), with the source row index."""
    n, d = qlo.shape
    counts = np.prod(qhi - qlo + 1, axis=1)
    owner = np.repeat(np.arange(n), counts)
    local = np.arange(owner.size) - np.repeat(np.cumsum(counts) - counts, counts)
    out = np.empty((owner.size, d), dtype=np.int64)
    for i in range(d - 1, -1, -1):
        span = (qhi[owner, i] - qlo[owner, i] + 1)
        out[:, i] = qlo[owner, i] + local % span
        local = local // span
    return out, owner


class OccupancySet:
    """Bounded set A in R^d queried through closed dyadic cubes."""

    d: int
    lo: np.ndarray
    hi: np.ndarray
    resolution: float = math.inf  # finest level at which counts are faithful

    def cubes_meeting(self, k: int) -> np.ndarray:
        raise NotImplementedError

    def meets(self, k: int, bases: np.ndarray) -> np.ndarray:
        """Exact test per cube; the default goes through cubes_meeting."""
        hit = self.cubes_meeting(k)
        bases = np.asarray(bases, dtype=np.int64).reshape(-1, self.d)
        if hit.shape[0] == 0:
            return np.zeros(bases.shape[0], dtype=bool)
        view = lambda a: np.ascontiguousarray(a).view([("", a.dtype)] * a.shape[1]).ravel()  # noqa: E731
        return np.isin(view(bases), view(hit))

    def _check_level(self, k: int) -> None:
        if k > self.resolution:
            raise PreconditionError(
                f"level {k} is finer than the resolution {self.resolution} of this set")


def _hierarchical(meets, lo: np.ndarray, hi: np.ndarray, k: int) -> np.ndarray:
    """Closed k-cubes meeting A, found by refining from level min(k, 0)."""
    start = min(k, 0)
    h = math.ldexp(1.0, -start)
    qlo, qhi = _axis_range(lo, hi, h)
    cand, _ = _expand_ranges(qlo[None, :], qhi[None, :])
    cand = cand[meets(start, cand)]
    d = lo.size
    kids = np.array(list(np.ndindex(*(2,) * d)), dtype=np.int64)
    for j in range(start + 1, k + 1):
        cand = (2 * cand[:, None, :] + kids[None, :, :]).reshape(-1, d)
        cand = cand[meets(j, cand)]
    return _unique_rows(cand)


# concrete closed sets ------------------------------------------------------

class PointSet(OccupancySet):
    def __init__(self, points) -> None:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[0] == 0:
            raise ConfigError("a point set needs at least one point")
        self.points = pts
        self.d = pts.shape[1]
        self.lo, self.hi = pts.min(0), pts.max(0)

    def cubes_meeting(self, k: int) -> np.ndarray:
        h = math.ldexp(1.0, -k)
        qlo, qhi = _axis_range(self.points, self.points, h)
        out, _ = _expand_ranges(qlo, qhi)
        return _unique_rows(out)


def _segments_meet_boxes(a: np.ndarray, b: np.ndarray, blo: np.ndarray, bhi: np.ndarray) -> np.ndarray:
    """Closed segment [a, b] meets closed box [blo, bhi] (slab clipping, rowwise)."""
    tmin = np.zeros(a.shape[0])
    tmax = np.ones(a.shape[0])
    ok = np.ones(a.shape[0], dtype=bool)
    v = b - a
    for i in range(a.shape[1]):
        flat = v[:, i] == 0.0
        ok &= ~flat | ((blo[:, i] <= a[:, i]) & (a[:, i] <= bhi[:, i]))
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (blo[:, i] - a[:, i]) / v[:, i]
            t2 = (bhi[:, i] - a[:, i]) / v[:, i]
        lo_t = np.where(flat, -np.inf, np.minimum(t1, t2))
        hi_t = np.where(flat, np.inf, np.maximum(t1, t2))
        tmin = np.maximum(tmin, lo_t)
        tmax = np.minimum(tmax, hi_t)
    return ok & (tmin <= tmax)


class SegmentSet(OccupancySet):
    """Finite union of closed segments (polylines, polygon boundaries)."""

    def __init__(self, a, b, resolution: float = math.inf) -> None:
        self.a = np.atleast_2d(np.asarray(a, dtype=float))
        self.b = np.atleast_2d(np.asarray(b, dtype=float))
        if self.a.shape != self.b.shape or self.a.shape[0] == 0:
            raise ConfigError("segment endpoints must be two nonempty arrays of equal shape")
        self.d = self.a.shape[1]
        self.lo = np.minimum(self.a, self.b).min(0)
        self.hi = np.maximum(self.a, self.b).max(0)
        self.resolution = resolution

    @classmethod
    def polyline(cls, points, closed: bool = False, resolution: float = math.inf) -> "SegmentSet":
        p = np.asarray(points, dtype=float)
        q = np.roll(p, -1, axis=0) if closed else p[1:]
        return cls(p if closed else p[:-1], q, resolution)

    def cubes_meeting(self, k: int) -> np.ndarray:
        self._check_level(k)
        h = math.ldexp(1.0, -k)
        # cut segments into pieces no longer than h; pieces only propose candidates,
        # the exact test always runs against the original segment
        length = np.linalg.norm(self.b - self.a, axis=1)
        npieces = np.maximum(1, np.ceil(length / h)).astype(np.int64)
        seg = np.repeat(np.arange(self.a.shape[0]), npieces)
        j = np.arange(seg.size) - np.repeat(np.cumsum(npieces) - npieces, npieces)
        t0 = (j / npieces[seg])[:, None]
        t1 = ((j + 1) / npieces[seg])[:, None]
        v = (self.b - self.a)[seg]
        p0 = self.a[seg] + t0 * v
        p1 = self.a[seg] + t1 * v
        pad = 1e-9 * h
        qlo, qhi = _axis_range(np.minimum(p0, p1) - pad, np.maximum(p0, p1) + pad, h)
        cand, owner = _expand_ranges(qlo, qhi)
        s = seg[owner]
        ok = _segments_meet_boxes(self.a[s], self.b[s], cand * h, (cand + 1) * h)
        return _unique_rows(cand[ok])


class CircleSet(OccupancySet):
    """Sphere |x - c| = r."""

    def __init__(self, center, r: float) -> None:
        self.center = np.asarray(center, dtype=float)
        self.r = float(r)
        self.d = self.center.size
        self.lo, self.hi = self.center - r, self.center + r

    def meets(self, k: int, bases: np.ndarray) -> np.ndarray:
        h = math.ldexp(1.0, -k)
        lo = bases * h - self.center
        hi = (bases + 1) * h - self.center
        near = np.where(lo > 0, lo, np.where(hi < 0, -hi, 0.0))
        far = np.maximum(np.abs(lo), np.abs(hi))
        r2 = self.r ** 2
        return (np.sum(near ** 2, axis=1) <= r2) & (r2 <= np.sum(far ** 2, axis=1))

    def cubes_meeting(self, k: int) -> np.ndarray:
        return _hierarchical(self.meets, self.lo, self.hi, k)


class BoxBoundarySet(OccupancySet):
    """Topological boundary of the box prod [lo_i, hi_i]."""

    def __init__(self, lo, hi) -> None:
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        self.d = self.lo.size

    def meets(self, k: int, bases: np.ndarray) -> np.ndarray:
        h = math.ldexp(1.0, -k)
        clo, chi = bases * h, (bases + 1) * h
        touches = np.all((clo <= self.hi) & (chi >= self.lo), axis=1)
        inside_open = np.all((clo > self.lo) & (chi < self.hi), axis=1)
        return touches & ~inside_open

    def cubes_meeting(self, k: int) -> np.ndarray:
        return _hierarchical(self.meets, self.lo, self.hi, k)


class CantorProduct(OccupancySet):
    """Product C^d of the middle Cantor set with ratio r, built to a finite depth."""

    def __init__(self, ratio: float, d: int = 2, depth: int | None = None) -> None:
        if not 0.0 < ratio < 0.5:
            raise ConfigError("the Cantor ratio must lie in (0, 1/2)")
        if depth is None:
            depth = int(math.ceil(14 / math.log2(1 / ratio)))
        self.ratio, self.depth, self.d = float(ratio), int(depth), int(d)
        left = np.zeros(1)
        for _ in range(self.depth):
            left = np.concatenate([ratio * left, (1 - ratio) + ratio * left])
        self.left = left
        self.width = ratio ** self.depth
        self.lo, self.hi = np.zeros(d), np.ones(d)
        self.resolution = math.floor(self.depth * math.log2(1 / ratio))

    def axis_cubes(self, k: int) -> np.ndarray:
        h = math.ldexp(1.0, -k)
        qlo, qhi = _axis_range(self.left, self.left + self.width, h)
        pts, _ = _expand_ranges(qlo[:, None], qhi[:, None])
        return np.unique(pts[:, 0])

    def cubes_meeting(self, k: int) -> np.ndarray:
        self._check_level(k)
        ax = self.axis_cubes(k)
        mesh = np.meshgrid(*([ax] * self.d), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


class RasterSet(OccupancySet):
    """Union of the closed level-L cells where a {0,1} GridFunction equals 1."""

    def __init__(self, u: GridFunction) -> None:
        vals = np.asarray(u.values)
        if not np.all((vals == 0) | (vals == 1)):
            raise ConfigError("a raster set needs {0,1} values")
        self.u = u
        self.d = u.d
        self.cells = np.argwhere(vals == 1).astype(np.int64) + np.asarray(u.lo, dtype=np.int64)
        if self.cells.shape[0] == 0:
            raise ConfigError("empty raster set")
        h = u.h
        self.lo = self.cells.min(0) * h
        self.hi = (self.cells.max(0) + 1) * h
        self.resolution = u.level

    def cubes_meeting(self, k: int) -> np.ndarray:
        self._check_level(k)
        f = 1 << (self.u.level - k)
        c = self.cells
        # closed cell [c, c+1] meets closed cube [qf, (q+1)f] iff qf - 1 <= c <= (q+1)f
        qlo = -((-c) // f) - 1
        qhi = (c + 1) // f
        out, _ = _expand_ranges(qlo, qhi)
        return _unique_rows(out)


# open regions --------------------------------------------------------------

class Region(OccupancySet):
    """Bounded open set U with an exact boundary and a membership oracle."""

    boundary: OccupancySet

    def contains(self, points) -> np.ndarray:
        raise NotImplementedError

    def cubes_meeting(self, k: int) -> np.ndarray:
        # closed cubes meeting the closure of U: inside cubes plus boundary cubes
        g = self.classify(k)
        return np.argwhere(g.status > 0) + g.origin

    def contains_grid(self, k: int, origin: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
        h = math.ldexp(1.0, -k)
        axes = [(np.arange(n) + o + 0.5) * h for o, n in zip(origin, shape)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        return self.contains(pts).reshape(shape)

    def grid_frame(self, k: int) -> tuple[np.ndarray, tuple[int, ...]]:
        h = math.ldexp(1.0, -k)
        origin = np.floor(self.lo / h).astype(np.int64) - 1
        top = np.ceil(self.hi / h).astype(np.int64) + 1
        shape = tuple(int(x) for x in top - origin)
        if int(np.prod(shape)) > MAX_GRID_CELLS:
            raise PreconditionError(f"level {k} grid for this region is too large")
        return origin, shape

    def classify(self, k: int) -> "CellClasses":
        """Status of every cube of the level-k frame: 2 inside U, 1 meets dU, 0 outside."""
        origin, shape = self.grid_frame(k)
        bnd = self.boundary.cubes_meeting(k) - origin
        bmask = np.zeros(shape, dtype=bool)
        if bnd.shape[0]:
            bmask[tuple(bnd.T)] = True
        inside = self.contains_grid(k, origin, shape)
        status = np.where(bmask, 1, np.where(inside, 2, 0)).astype(np.int8)
        return CellClasses(k, origin, status, int(bnd.shape[0]))

    def rasterize(self, k: int, rule: str = "center") -> GridFunction:
        """{0,1} raster on the level-k frame.  ``rule``: 'center' samples cell
        centers; 'all' and 'any' also sample the 2^d corners."""
        origin, shape = self.grid_frame(k)
        c = self.contains_grid(k, origin, shape)
        if rule == "center":
            vals = c
        elif rule in ("all", "any"):
            # corner (i) of cell q is the center of cell q - 1/2 + i at level k+1 shifted;
            # sample the corner lattice directly
            h = math.ldexp(1.0, -k)
            axes = [(np.arange(n + 1) + o) * h for o, n in zip(origin, shape)]
            mesh = np.meshgrid(*axes, indexing="ij")
            pts = np.stack([m.ravel() for m in mesh], axis=1)
            corners = self.contains(pts).reshape(tuple(n + 1 for n in shape))
            vals = c.copy()
            for off in np.ndindex(*(2,) * self.d):
                sl = tuple(slice(o, o + n) for o, n in zip(off, shape))
                vals = (vals & corners[sl]) if rule == "all" else (vals | corners[sl])
        else:
            raise ConfigError(f"unknown rasterization rule {rule!r}")
        return GridFunction(k, tuple(int(o) for o in origin), vals.astype(float))

    def measure(self, k: int) -> float:
        return float(self.rasterize(k).values.sum()) * math.ldexp(1.0, -k * self.d)


@dataclass
class CellClasses:
    level: int
    origin: np.ndarray
    status: np.ndarray
    boundary_count: int


class DiskRegion(Region):
    def __init__(self, center=(0.0, 0.0), r: float = 1.0) -> None:
        if r <= 0:
            raise ConfigError("the radius must be positive")
        self.center = np.asarray(center, dtype=float)
        self.r = float(r)
        self.d = self.center.size
        self.lo, self.hi = self.center - r, self.center + r
        self.boundary = CircleSet(self.center, r)

    def contains(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return np.sum((p - self.center) ** 2, axis=1) < self.r ** 2

    def exact_measure(self) -> float:
        return math.pi ** (self.d / 2) / math.gamma(self.d / 2 + 1) * self.r ** self.d


class BoxRegion(Region):
    def __init__(self, lo, hi) -> None:
        self.lo = np.atleast_1d(np.asarray(lo, dtype=float))
        self.hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if self.lo.shape != self.hi.shape or np.any(self.hi <= self.lo):
            raise ConfigError("box corners must satisfy lo < hi")
        self.d = self.lo.size
        self.boundary = BoxBoundarySet(self.lo, self.hi)

    def contains(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float).reshape(-1, self.d)
        return np.all((p > self.lo) & (p < self.hi), axis=1)

    def exact_measure(self) -> float:
        return float(np.prod(self.hi - self.lo))


class PolygonRegion(Region):
    """Interior of a simple closed polygon in the plane."""

    def __init__(self, vertices, resolution: float = math.inf) -> None:
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise ConfigError("a polygon needs at least three planar vertices")
        self.vertices = v
        self.d = 2
        self.lo, self.hi = v.min(0), v.max(0)
        self.resolution = resolution
        self.boundary = SegmentSet.polyline(v, closed=True, resolution=resolution)

    def exact_measure(self) -> float:
        x, y = self.vertices.T
        return abs(0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))

    def contains(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        a = self.vertices
        b = np.roll(a, -1, axis=0)
        inside = np.zeros(p.shape[0], dtype=bool)
        on_edge = np.zeros(p.shape[0], dtype=bool)
        for s in range(0, a.shape[0], 256):
            ax, ay = a[s:s + 256, 0][:, None], a[s:s + 256, 1][:, None]
            bx, by = b[s:s + 256, 0][:, None], b[s:s + 256, 1][:, None]
            px, py = p[:, 0][None, :], p[:, 1][None, :]
            crosses = (ay > py) != (by > py)
            with np.errstate(divide="ignore", invalid="ignore"):
                xint = ax + (py - ay) * (bx - ax) / (by - ay)
            inside ^= (np.count_nonzero(crosses & (px < xint), axis=0) % 2).astype(bool)
            cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
            within = ((np.minimum(ax, bx) <= px) & (px <= np.maximum(ax, bx))
                      & (np.minimum(ay, by) <= py) & (py <= np.maximum(ay, by)))
            on_edge |= np.any((cross == 0) & within, axis=0)
        return inside & ~on_edge

    def contains_grid(self, k: int, origin: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
        # scanline fill at the row centers; centers lying on an edge are resolved
        # by the exact point test afterwards
        h = math.ldexp(1.0, -k)
        a = self.vertices
        b = np.roll(a, -1, axis=0)
        ys = (np.arange(shape[1]) + origin[1] + 0.5) * h
        xs = (np.arange(shape[0]) + origin[0] + 0.5) * h
        ylo, yhi = np.minimum(a[:, 1], b[:, 1]), np.maximum(a[:, 1], b[:, 1])
        # rows j with ylo <= y_j < yhi (half-open rule counts each crossing once)
        jlo = np.ceil((ylo / h) - origin[1] - 0.5).astype(np.int64)
        jhi = np.ceil((yhi / h) - origin[1] - 0.5).astype(np.int64) - 1
        jlo = np.clip(jlo, 0, shape[1])
        jhi = np.clip(jhi, -1, shape[1] - 1)
        cnt = np.maximum(jhi - jlo + 1, 0)
        e = np.repeat(np.arange(a.shape[0]), cnt)
        rows = jlo[e] + np.arange(e.size) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        y = ys[rows]
        t = (y - a[e, 1]) / (b[e, 1] - a[e, 1])
        xc = a[e, 0] + t * (b[e, 0] - a[e, 0])
        order = np.lexsort((xc, rows))
        rows, xc = rows[order], xc[order]
        out = np.zeros(shape, dtype=bool)
        starts = np.searchsorted(rows, np.arange(shape[1]))
        ends = np.searchsorted(rows, np.arange(shape[1]), side="right")
        for j in range(shape[1]):
            xr = xc[starts[j]:ends[j]]
            if xr.size:
                out[:, j] = (np.searchsorted(xr, xs, side="right") % 2).astype(bool)
        exact = np.isin(xs[:, None], xc) if xc.size else np.zeros((shape[0], 1), dtype=bool)
        if np.any(exact):
            ii = np.flatnonzero(exact.any(axis=1))
            for i in ii:
                out[i, :] = self.contains(np.column_stack([np.full(shape[1], xs[i]), ys]))
        return out


# generators ----------------------------------------------------------------

def _koch_refine(p: np.ndarray, level: int, outward: float) -> np.ndarray:
    """One closed or open polyline refined ``level`` times by the Koch rule;
    ``outward`` = -1 puts the bumps on the right of the travel direction."""
    rot = np.array([[0.5, -outward * math.sqrt(3) / 2], [outward * math.sqrt(3) / 2, 0.5]])
    for _ in range(level):
        a, b = p[:-1], p[1:]
        v = (b - a) / 3.0
        q1 = a + v
        q3 = a + 2 * v
        q2 = q1 + v @ rot.T
        p = np.concatenate([np.stack([a, q1, q2, q3], axis=1).reshape(-1, 2), p[-1:]])
    return p


def koch_curve(level: int) -> SegmentSet:
    """Koch curve polyline from (0, 0) to (1, 0) after ``level`` refinements."""
    if level < 0:
        raise ConfigError("level must be nonnegative")
    p = _koch_refine(np.array([[0.0, 0.0], [1.0, 0.0]]), level, 1.0)
    return SegmentSet.polyline(p, resolution=math.floor(level * math.log2(3)))


def koch_snowflake(level: int, side: float = 1.0, center=(0.0, 0.0)) -> PolygonRegion:
    """Open region bounded by the level-``level`` Koch snowflake polygon.

    Level 0 is the equilateral triangle with the given side, centered at
    ``center`` (counterclockwise); each level replaces every edge by four."""
    if level < 0 or side <= 0:
        raise ConfigError("level must be nonnegative and side positive")
    ang = math.pi / 2 + np.arange(3) * 2 * math.pi / 3
    rad = side / math.sqrt(3)
    tri = np.column_stack([np.cos(ang), np.sin(ang)]) * rad + np.asarray(center, float)
    p = _koch_refine(np.vstack([tri, tri[:1]]), level, -1.0)
    return PolygonRegion(p[:-1], resolution=math.floor(level * math.log2(3) - math.log2(side)))


def disk(center=(0.0, 0.0), r: float = 1.0) -> DiskRegion:
    return DiskRegion(center, r)


def square(d: int = 2, lo: float = 0.0, side: float = 1.0) -> BoxRegion:
    """Open cube (lo, lo + side)^d."""
    return BoxRegion(np.full(d, float(lo)), np.full(d, float(lo + side)))


def cantor_product(ratio: float = 1 / 3, d: int = 2, depth: int | None = None) -> CantorProduct:
    return CantorProduct(ratio, d, depth)


def polygon(points) -> PolygonRegion:
    return PolygonRegion(points)


def star_domain(rng: np.random.Generator, n: int = 24, r_min: float = 0.3, r_max: float = 0.7,
                center=(0.5, 0.5)) -> PolygonRegion:
    """Random star-shaped polygon around ``center`` (radii uniform in [r_min, r_max])."""
    if not 0 < r_min <= r_max:
        raise ConfigError("need 0 < r_min <= r_max")
    ang = np.sort(rng.uniform(0, 2 * math.pi, n))
    rad = rng.uniform(r_min, r_max, n)
    return PolygonRegion(np.column_stack([np.cos(ang), np.sin(ang)]) * rad[:, None] + np.asarray(center))


# counting ------------------------------------------------------------------

def box_count(A: OccupancySet, k: int) -> int:
    """N_A(k): number of closed dyadic k-cubes meeting A."""
    A._check_level(k)
    return int(A.cubes_meeting(k).shape[0])


@dataclass
class SummabilityResult:
    exponent: float
    levels: list[int]
    terms: list[float]
    partial_sums: list[float]
    ratio: float
    tail: float
    verdict: str


def cauchy_verdict(terms, margin: float = 0.01) -> tuple[float, float, str]:
    """Geometric fit through the last three terms.

    Returns (ratio, tail estimate, verdict) where the verdict is 'converging'
    when the fitted ratio is below 1 - margin and 'diverging' otherwise."""
    t = [float(x) for x in terms]
    if len(t) < 3:
        raise PreconditionError("the convergence test needs at least three terms")
    a, _, c = t[-3:]
    if c == 0.0:
        return 0.0, 0.0, "converging"
    if a <= 0.0:
        return math.inf, math.inf, "diverging"
    r = math.sqrt(c / a)
    if r < 1.0 - margin:
        return r, c * r / (1.0 - r), "converging"
    return r, math.inf, "diverging"


def summability(A: OccupancySet, m: float, kmax: int, kmin: int = 0, margin: float = 0.01) -> SummabilityResult:
    """Partial sums of sum_k N_A(k) 2^(-k m) for kmin <= k <= kmax."""
    if m < 0:
        raise ConfigError("the summability exponent must be nonnegative")
    levels = list(range(kmin, kmax + 1))
    terms = [box_count(A, k) * 2.0 ** (-k * m) for k in levels]
    sums = list(np.cumsum(terms))
    r, tail, verdict = cauchy_verdict(terms, margin)
    return SummabilityResult(m, levels, terms, [float(s) for s in sums], r, tail, verdict)


def box_dimension(A: OccupancySet, krange) -> tuple[float, float]:
    """Least-squares slope of log N_A(k) against k log 2, and the RMS residual."""
    ks = np.asarray(list(krange), dtype=float)
    if ks.size < 3:
        raise PreconditionError("box dimension needs at least three levels")
    counts = np.array([box_count(A, int(k)) for k in ks], dtype=float)
    if np.any(counts == 0):
        raise PreconditionError("the set meets no cube at some level")
    y = np.log2(counts)
    slope, icpt = np.polyfit(ks, y, 1)
    res = float(np.sqrt(np.mean((y - (slope * ks + icpt)) ** 2)))
    return float(slope), res


# Whitney -------------------------------------------------------------------

@dataclass
class WhitneyResult:
    d: int
    k0: int
    kmax: int
    collections: dict[int, np.ndarray]
    counts: dict[int, int]
    boundary_counts: dict[int, int]
    domain_measure: float
    notes: dict = field(default_factory=dict)

    def faces(self, k: int) -> list[DyadicFace]:
        axes = tuple(range(self.d))
        return [DyadicFace(k, tuple(int(x) for x in b), axes) for b in self.collections.get(k, [])]

    def covered_measure(self) -> float:
        return math.fsum(n * math.ldexp(1.0, -k * self.d) for k, n in self.counts.items())

    def count_bound(self, k: int) -> int:
        """3^d 2^d N_dU(k - 1)."""
        return 3 ** self.d * 2 ** self.d * self.boundary_counts[k - 1]

    def part_stats(self, k: int) -> PartStats:
        """Closed-form bounds of the proof: F <= M = Card 2^(-kd), M(d) <= 2d Card 2^(-k(d-1))."""
        n, d = self.counts[k], self.d
        return PartStats(n * math.ldexp(1.0, -k * d), 2 * d * n * math.ldexp(1.0, -k * (d - 1)),
                         n * math.ldexp(1.0, -k * d))

    def cost_terms(self, alpha: float) -> list[float]:
        out = []
        for k in range(self.k0, self.kmax + 1):
            st = self.part_stats(k)
            out.append(st.normal ** (1 - alpha) * st.flat ** alpha if st.flat > 0 else 0.0)
        return out


def whitney(U: Region, kmax: int, check_bound: bool = True) -> WhitneyResult:
    """Whitney decomposition of the open set U up to level kmax.

    Q_k collects the closed k-cubes Q such that (A) Q and its 3^d - 1
    neighbours lie inside U and (B) Q is not inside a cube of an earlier
    collection.  k0 is the first level where (A) holds for some cube."""
    if not isinstance(U, Region):
        raise ConfigError("whitney needs an open region with a boundary oracle")
    U._check_level(kmax)
    d = U.d
    ball = np.ones((3,) * d, dtype=bool)
    collections: dict[int, np.ndarray] = {}
    counts: dict[int, int] = {}
    bcounts: dict[int, int] = {}
    covered = None
    prev_origin = None
    k0 = None
    for k in range(0, kmax + 1):
        cls = U.classify(k)
        bcounts[k] = cls.boundary_count
        inside = cls.status == 2
        good = ndimage.binary_erosion(inside, structure=ball, border_value=0)
        if covered is not None:
            idx = [(np.arange(n) + o) // 2 - po for n, o, po in zip(inside.shape, cls.origin, prev_origin)]
            covered = covered[np.ix_(*idx)]
            good &= ~covered
        if k0 is None and not good.any():
            continue
        if k0 is None:
            k0 = k
            covered = np.zeros_like(good)
        sel = np.argwhere(good) + cls.origin
        collections[k] = sel
        counts[k] = int(sel.shape[0])
        covered = covered | good
        prev_origin = cls.origin
    if k0 is None:
        raise PreconditionError(f"empty at resolution: no admissible cube up to level {kmax}")
    meas = U.exact_measure() if hasattr(U, "exact_measure") else U.measure(kmax)
    res = WhitneyResult(d, k0, kmax, collections, counts, bcounts, meas)
    if check_bound:
        for k in range(k0 + 1, kmax + 1):
            if counts[k] > res.count_bound(k):
                raise NumericalError(f"Card Q_{k} = {counts[k]} exceeds 3^d 2^d N(k-1) = {res.count_bound(k)}")
    return res


def whitney_chain(U: Region, alpha: float, kmax: int, exact: bool = False,
                  result: WhitneyResult | None = None) -> Decomposition:
    """Decomposition [[U]] ~ sum_k T_k with T_k the sum of the cubes of Q_k.

    The default stats are the closed-form bounds of the construction; with
    ``exact=True`` the masses are computed from the chains and the flat norm
    by linear programming (small instances only)."""
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha must lie in [0, 1], got {alpha}")
    w = result if result is not None else whitney(U, kmax)
    axes = tuple(range(w.d))
    parts, stats = [], []
    for k in range(w.k0, w.kmax + 1):
        terms = {(tuple(int(x) for x in b), axes): 1.0 for b in w.collections[k]}
        T = CubicalChain(w.d, w.d, k, terms, _trusted=True)
        parts.append(T)
        if exact:
            from .flatnorm import part_stats
            stats.append(part_stats(T) if len(T) else PartStats(0.0, 0.0, 0.0))
        else:
            stats.append(w.part_stats(k))
    dec = Decomposition(parts, alpha, stats)
    covered = w.covered_measure()
    r, tail, verdict = cauchy_verdict(dec.terms()) if len(parts) >= 3 else (math.nan, math.nan, "undetermined")
    dec.notes.update(k0=w.k0, counts=dict(w.counts), covered_measure=covered,
                     domain_measure=w.domain_measure, residual_mass=max(0.0, w.domain_measure - covered),
                     ratio=r, tail=tail, verdict=verdict, whitney=w)
    return dec
