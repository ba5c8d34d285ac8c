"""Pushforward of chains by Lipschitz and Hölder maps, top-dimensional
pushforward through the cone construction, and Brouwer degree fields.

A Hölder map f is pushed as the limit of f_n = f * Phi_{2^-n}: the chain is
refined, its vertices are mapped by f_n, and consecutive stages are compared
in flat norm after deforming both onto the level-(n+2) grid.  The linear
program runs on a band of cells around the two stage chains, wide enough to
contain the straight-line homotopy between them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .deform import deform
from .errors import ConfigError, PreconditionError
from .flatnorm import ComplexDomain, flat_norm
from .fractal import BoxRegion, DiskRegion, PolygonRegion, Region, SegmentSet, cauchy_verdict
from .grid import CubicalChain, Decomposition, SimplicialChain, as_simplicial, cone
from .holder import HolderFunction, MollifiedFunction, mollify
from .sobolev import GridFunction, gagliardo

EXTRA_REFINE = 2  # stage-n chains are refined to mesh 2^-(n + EXTRA_REFINE)
DEFORM_OFFSET = 2  # stage distances are measured on the level-(n + DEFORM_OFFSET) grid


def _evaluator(f):
    if hasattr(f, "evaluate"):
        return f.evaluate
    if callable(f):
        return lambda x: np.asarray(f(x), dtype=float)
    raise ConfigError("the map must be callable or provide evaluate()")


def lipschitz_pushforward(f, T) -> SimplicialChain:
    """f_# T for a map evaluated exactly at the vertices (cubical chains are
    triangulated by the Kuhn split first)."""
    if isinstance(T, Decomposition):
        T = T.total()
    S = as_simplicial(T)
    return S.map_vertices(_evaluator(f))


def subdivide(T, max_len: float) -> SimplicialChain:
    """Refine a simplicial chain of degree <= 2 until every edge is at most max_len.

    1-simplices are cut into equal pieces; 2-simplices are split into four by
    edge midpoints as often as needed.  Coefficients are inherited."""
    S = as_simplicial(T)
    if S.m == 0 or len(S) == 0:
        return S
    if S.m == 1:
        a, b = S.verts[:, 0], S.verts[:, 1]
        n = np.maximum(1, np.ceil(np.linalg.norm(b - a, axis=1) / max_len)).astype(np.int64)
        idx = np.repeat(np.arange(len(S)), n)
        j = np.arange(idx.size) - np.repeat(np.cumsum(n) - n, n)
        t0 = (j / n[idx])[:, None]
        t1 = ((j + 1) / n[idx])[:, None]
        v = b[idx] - a[idx]
        p0 = np.where(j[:, None] == 0, a[idx], a[idx] + t0 * v)
        p1 = np.where((j + 1)[:, None] == n[idx][:, None], b[idx], a[idx] + t1 * v)
        return SimplicialChain(S.d, 1, np.stack([p0, p1], axis=1), S.coeffs[idx])
    if S.m == 2:
        verts, coeffs = S.verts, S.coeffs
        while True:
            e = np.stack([verts[:, 1] - verts[:, 0], verts[:, 2] - verts[:, 1], verts[:, 0] - verts[:, 2]], 1)
            if np.linalg.norm(e, axis=2).max() <= max_len:
                break
            a, b, c = verts[:, 0], verts[:, 1], verts[:, 2]
            ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
            verts = np.concatenate([np.stack(t, 1) for t in ((a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca))])
            coeffs = np.tile(coeffs, 4)
        return SimplicialChain(S.d, 2, verts, coeffs)
    raise ConfigError("subdivision is implemented for chains of degree at most 2")


def exponent_beta(m: int, alpha: float, gamma: float) -> float:
    """beta with (m + alpha) / gamma = m + beta."""
    if not 0.0 < gamma <= 1.0:
        raise ConfigError(f"gamma must lie in (0, 1], got {gamma}")
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha must lie in [0, 1], got {alpha}")
    return (m + alpha) / gamma - m


@dataclass
class PushforwardRun:
    T: object
    f: HolderFunction
    alpha: float
    beta: float
    gamma: float
    stages: list[SimplicialChain]
    stage_levels: list[int]
    distances: list[float]
    deform_errors: list[float]
    ratio: float
    expected_ratio: float
    tail: float
    verdict: str
    notes: dict = field(default_factory=dict)

    @property
    def final(self) -> SimplicialChain:
        return self.stages[-1]


def _band_domain(P: CubicalChain, Q: CubicalChain, width: int) -> ComplexDomain:
    """Cells touched by either chain, dilated by ``width`` cells (Chebyshev)."""
    level = P.level
    bases = []
    for X in (P, Q):
        if len(X):
            b, axes, _ = X.to_arrays()
            bases.append(b)
    if not bases:
        return ComplexDomain(level, (0,) * P.d, (1,) * P.d)
    b = np.concatenate(bases)
    d = P.d
    lo = b.min(0) - width - 2
    hi = b.max(0) + width + 2
    shape = tuple(int(x) for x in hi - lo)
    mask = np.zeros(shape, dtype=bool)
    rel = b - lo
    # a face touches the cells base - e for e in {0,1}^d (restricted to off-axis shifts,
    # marking all 2^d is a harmless superset)
    for e in np.ndindex(*(2,) * d):
        mask[tuple((rel - np.asarray(e)).T)] = True
    if width > 0:
        mask = ndimage.binary_dilation(mask, structure=np.ones((3,) * d, bool), iterations=width)
    return ComplexDomain(level, tuple(int(x) for x in lo), tuple(int(x) for x in hi), mask)


def stage_chain(f, T, n: int, extra: int = EXTRA_REFINE):
    """(f_n)_# T with T refined to mesh 2^-(n + extra); returns the chain and f_n."""
    fn = mollify(f, 2.0 ** -n)
    Ts = subdivide(T, 2.0 ** -(n + extra))
    return Ts.map_vertices(fn.evaluate), fn


def stage_distance(A: SimplicialChain, B: SimplicialChain, level: int, sup_gap: float) -> tuple[float, float]:
    """F(B - A) measured after deforming both onto the level grid, and the
    deformation error bound M(R) + M(S) of the two deformations."""
    dA = deform(A, level=level)
    dB = deform(B, level=level)
    h = math.ldexp(1.0, -level)
    width = int(math.ceil(sup_gap / h)) + 1
    U = (dB.P - dA.P).cleaned(1e-12)
    if not len(U):
        return 0.0, dA.flat_bound + dB.flat_bound
    dom = _band_domain(dA.P, dB.P, width)
    res = flat_norm(U, dom, method="highs")
    return res.value, dA.flat_bound + dB.flat_bound


def holder_pushforward(f: HolderFunction, gamma: float, T, alpha: float = 0.0, n_max: int = 8,
                       tol: float = 1e-3, n_min: int = 2, monitor: bool = True) -> PushforwardRun:
    """Pushforward of T by the gamma-Hölder map f as the limit of (f_n)_# T.

    Requires (m + alpha) / gamma < m + 1, i.e. beta < 1.  Stage distances
    F(f_{n+1 #} T - f_{n #} T) are monitored; the run stops once the fitted
    geometric tail is below ``tol`` (after at least three distances) or at
    n_max."""
    if isinstance(T, Decomposition):
        T = T.total()
    m = T.m
    beta = exponent_beta(m, alpha, gamma)
    if not beta < 1.0:
        raise PreconditionError(
            f"(m + alpha) / gamma = {(m + alpha) / gamma:.6g} must be < m + 1 = {m + 1} (beta = {beta:.6g})")
    if f.gamma + 1e-12 < gamma:
        raise PreconditionError(f"the map is only declared {f.gamma}-Hölder, not {gamma}")
    if n_max < n_min:
        raise ConfigError("n_max must be at least n_min")
    stages, levels, dists, derr = [], [], [], []
    prev, prev_fn = stage_chain(f, T, n_min)
    stages.append(prev)
    levels.append(n_min)
    ratio, tail, verdict = math.nan, math.nan, "rate-not-establishable"
    for n in range(n_min, n_max):
        cur, cur_fn = stage_chain(f, T, n + 1)
        stages.append(cur)
        levels.append(n + 1)
        if monitor:
            # sup distance of the two stage maps on the vertices of the finer stage
            Ts = subdivide(T, 2.0 ** -(n + 1 + EXTRA_REFINE))
            pts = Ts.verts.reshape(-1, Ts.d)
            gap = float(np.max(np.linalg.norm(cur_fn.evaluate(pts) - prev_fn.evaluate(pts), axis=1)))
            dist, err = stage_distance(prev, cur, n + DEFORM_OFFSET, gap)
            dists.append(dist)
            derr.append(err)
            scale = max(max(dists), 1e-300)
            if len(dists) >= 3:
                if max(dists[-3:]) <= 1e-12 * max(1.0, scale):
                    ratio, tail, verdict = 0.0, 0.0, "converged(rate 0)"
                    break
                ratio, tail, v = cauchy_verdict(dists)
                if v == "converging":
                    verdict = f"converged(rate {ratio:.4g})"
                    if tail < tol:
                        break
                else:
                    verdict = "rate-not-establishable"
        prev, prev_fn = cur, cur_fn
    if monitor and ratio != 0.0:
        # regression over the stages whose distance is resolved (above round-off)
        dv = np.asarray(dists)
        ks = np.flatnonzero(dv > 1e-9 * dv.max()) if dv.size else dv
        if ks.size >= 3:
            ratio = float(2.0 ** np.polyfit(ks, np.log2(dv[ks]), 1)[0])
    expected = 2.0 ** (-gamma * (1.0 - beta))
    notes = {"n_min": n_min, "extra_refine": EXTRA_REFINE, "deform_offset": DEFORM_OFFSET,
             "relation_gap": abs((m + alpha) / gamma - (m + beta))}
    return PushforwardRun(T, f, alpha, beta, gamma, stages, levels, dists, derr, ratio, expected, tail,
                          verdict, notes)


# top-dimensional pushforward ---------------------------------------------------

def _row_crossings(a: np.ndarray, b: np.ndarray, ys: np.ndarray):
    """Crossings of segments a->b with horizontal lines y = ys[j] (half-open in y).

    Returns (row index, x coordinate, +1 upward / -1 downward, segment index);
    x is computed from the lexicographically ordered endpoints so that shared
    edges give bit-identical crossings."""
    swap = (a[:, 1] > b[:, 1]) | ((a[:, 1] == b[:, 1]) & (a[:, 0] > b[:, 0]))
    p = np.where(swap[:, None], b, a)
    q = np.where(swap[:, None], a, b)
    sign = np.where(swap, -1, 1)
    if ys.size == 0:
        z = np.zeros(0, np.int64)
        return z, np.zeros(0), z, z
    y0 = ys[0]
    dy = ys[1] - ys[0] if ys.size > 1 else 1.0
    jlo = np.ceil((p[:, 1] - y0) / dy).astype(np.int64)
    jhi = np.ceil((q[:, 1] - y0) / dy).astype(np.int64) - 1  # rows with p.y <= y < q.y
    jlo = np.clip(jlo, 0, ys.size)
    jhi = np.clip(jhi, -1, ys.size - 1)
    # guard the rounding of the row formulas with an exact check
    cnt = np.maximum(jhi - jlo + 3, 0)
    seg = np.repeat(np.arange(a.shape[0]), cnt)
    rows = jlo[seg] - 1 + np.arange(seg.size) - np.repeat(np.cumsum(cnt) - cnt, cnt)
    ok = (rows >= 0) & (rows < ys.size)
    seg, rows = seg[ok], rows[ok]
    y = ys[rows]
    ok = (p[seg, 1] <= y) & (y < q[seg, 1])
    seg, rows, y = seg[ok], rows[ok], y[ok]
    t = (y - p[seg, 1]) / (q[seg, 1] - p[seg, 1])
    x = p[seg, 0] + t * (q[seg, 0] - p[seg, 0])
    return rows, x, sign[seg], seg


def winding_grid(a: np.ndarray, b: np.ndarray, weights: np.ndarray, level: int, lo, shape) -> np.ndarray:
    """sum_i w_i * (signed crossings of segment i to the right of each cell center).

    For a closed polyline with unit weights this is the winding number around
    every cell center not on the polyline."""
    h = math.ldexp(1.0, -level)
    xs = (np.arange(shape[0]) + lo[0] + 0.5) * h
    ys = (np.arange(shape[1]) + lo[1] + 0.5) * h
    rows, x, sign, seg = _row_crossings(a, b, ys)
    w = sign * weights[seg]
    # crossing at x contributes to every center with xc < x
    col = np.searchsorted(xs, x, side="left")  # first center with xc >= x
    diff = np.zeros((shape[0] + 1, shape[1]))
    np.add.at(diff, (np.zeros_like(col), rows), w)
    np.add.at(diff, (col, rows), -w)
    return np.cumsum(diff, axis=0)[:-1]


def triangle_density(S: SimplicialChain, level: int, lo, shape) -> np.ndarray:
    """Density of a 2-chain of triangles in the plane at cell centers (scanline)."""
    if S.m != 2 or S.d != 2:
        raise ConfigError("triangle_density needs a 2-chain in the plane")
    v = S.verts
    det = ((v[:, 1, 0] - v[:, 0, 0]) * (v[:, 2, 1] - v[:, 0, 1])
           - (v[:, 1, 1] - v[:, 0, 1]) * (v[:, 2, 0] - v[:, 0, 0]))
    keep = det != 0
    v, c = v[keep], S.coeffs[keep]
    # c [[v0 v1 v2]] has density c sign(det) on the triangle, which is c times the
    # winding number of v0 -> v1 -> v2 -> v0; every row crossing of the triangle is
    # an interval [x_in, x_out) accumulated through its two edge crossings
    a = np.concatenate([v[:, 0], v[:, 1], v[:, 2]])
    b = np.concatenate([v[:, 1], v[:, 2], v[:, 0]])
    weights = np.concatenate([c, c, c])
    return winding_grid(a, b, weights, level, lo, shape)


@dataclass
class TopPushforward:
    chain: SimplicialChain  # cone over the pushed boundary
    boundary: SimplicialChain  # S = pushed boundary (a cycle)
    apex: np.ndarray
    run: PushforwardRun
    boundary_gap: float  # mass of d(chain) - S

    def density(self, level: int, lo=None, hi=None) -> GridFunction:
        """Density of the chain at the level-``level`` cell centers of [lo, hi)."""
        if lo is None:
            lo, hi = image_box(self.boundary, level)
        shape = tuple(int(b - a) for a, b in zip(lo, hi))
        vals = triangle_density(self.chain, level, lo, shape)
        return GridFunction(level, tuple(int(x) for x in lo), vals)


def image_box(S: SimplicialChain, level: int, pad: int = 2):
    bb = S.bbox_coords()
    if bb is None:
        raise ConfigError("empty chain")
    h = math.ldexp(1.0, -level)
    lo = np.floor(bb[0] / h).astype(int) - pad
    hi = np.ceil(bb[1] / h).astype(int) + pad
    return tuple(int(x) for x in lo), tuple(int(x) for x in hi)


def top_pushforward(f: HolderFunction, gamma: float, T, alpha: float = 0.0, n_max: int = 6,
                    tol: float = 1e-3, n_min: int = 2, monitor: bool = True) -> TopPushforward:
    """The d'-chain whose boundary is the Hölder pushforward of dT, built as a
    cone over it with apex at the image bounding-box barycenter."""
    if isinstance(T, Decomposition):
        T = T.total()
    dprime = f.dout
    if T.m != dprime:
        raise PreconditionError(f"the chain degree {T.m} must equal the codomain dimension {dprime}")
    if not (dprime - 1 + alpha) / gamma < dprime:
        raise PreconditionError(
            f"(d' - 1 + alpha) / gamma = {(dprime - 1 + alpha) / gamma:.6g} must be < d' = {dprime}")
    B = as_simplicial(T).boundary()
    run = holder_pushforward(f, gamma, B, alpha, n_max=n_max, tol=tol, n_min=n_min, monitor=monitor)
    S = run.final
    bb = S.bbox_coords()
    apex = (bb[0] + bb[1]) / 2
    C = cone(apex, S)
    gap = (C.boundary() - S).canonical(1e-12).mass()
    return TopPushforward(C, S, apex, run, gap)


# degree ------------------------------------------------------------------------

def boundary_polyline(U: Region, max_len: float) -> np.ndarray:
    """Counterclockwise closed polyline of dU with edges at most max_len (rows; last != first)."""
    if isinstance(U, DiskRegion):
        n = max(8, int(math.ceil(2 * math.pi * U.r / max_len)))
        t = 2 * math.pi * np.arange(n) / n
        return U.center + U.r * np.column_stack([np.cos(t), np.sin(t)])
    if isinstance(U, BoxRegion):
        lo, hi = U.lo, U.hi
        corners = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
    elif isinstance(U, PolygonRegion):
        corners = U.vertices
        x, y = corners.T
        if np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)) < 0:
            corners = corners[::-1]
    else:
        raise ConfigError("degree fields support disk, box and polygon regions")
    if U.d != 2:
        raise ConfigError("degree fields are planar")
    nxt = np.roll(corners, -1, axis=0)
    n = np.maximum(1, np.ceil(np.linalg.norm(nxt - corners, axis=1) / max_len)).astype(np.int64)
    out = []
    for a, b, k in zip(corners, nxt, n):
        t = np.arange(k)[:, None] / k
        out.append(a + t * (b - a))
    return np.concatenate(out)


@dataclass
class DegreeField:
    field: GridFunction  # winding number of f(dU) at cell centers
    flags: np.ndarray  # True where the center lies within tol of the image curve
    tol: float
    polyline_points: int

    def unflagged(self) -> np.ndarray:
        return ~self.flags

    def to_csv(self, path) -> None:
        u = self.field
        h = u.h
        idx = np.indices(u.shape).reshape(u.d, -1).T
        centers = (idx + np.asarray(u.lo) + 0.5) * h
        vals = u.values.reshape(-1)
        flags = self.flags.reshape(-1).astype(int)
        with open(path, "w") as fh:
            fh.write("y1,y2,degree,flag\n")
            for (y1, y2), v, fl in zip(centers, vals, flags):
                fh.write(f"{y1:.17g},{y2:.17g},{int(round(v))},{fl}\n")


def _lipschitz_on(f, pts: np.ndarray) -> float:
    J = f.jacobian(pts)
    return float(np.max(np.linalg.norm(J, ord=2, axis=(1, 2))))


def degree_field(f, gamma: float | None, U: Region, level: int, lo=None, hi=None,
                 tol_cells: float = 2.0, max_points: int = 4_000_000) -> DegreeField:
    """deg(f, U, y) at the centers y of the level grid, as the winding number
    of f(dU) around y.

    The boundary polyline is fine enough that f oscillates by at most tol / 2
    along each edge (from the Hölder bound), so the image polyline has the
    same winding as f(dU) around every center farther than tol = tol_cells
    cell diagonals; nearer centers are flagged."""
    if getattr(U, "d", 2) != 2 or getattr(f, "dout", 2) != 2:
        raise ConfigError("degree fields need a planar region and a planar map")
    h = math.ldexp(1.0, -level)
    tol = tol_cells * h * math.sqrt(2)
    if isinstance(f, MollifiedFunction):
        probe = boundary_polyline(U, 1e-2)
        g, C = 1.0, 2.0 * _lipschitz_on(f, probe) + 1e-12
    else:
        g = f.gamma if gamma is None else gamma
        C = f.holder_constant * max(f.diameter, 1.0) ** max(f.gamma - g, 0.0)
    max_len = (tol / (2 * C)) ** (1.0 / g) if C > 0 else 1.0
    perimeter = _perimeter(U)
    if perimeter / max_len > max_points:
        raise PreconditionError("boundary polyline would exceed the point budget")
    poly = boundary_polyline(U, max_len)
    img = f.evaluate(poly)
    a, b = img, np.roll(img, -1, axis=0)
    if lo is None:
        lo = np.floor(img.min(0) / h).astype(int) - 4
        hi = np.ceil(img.max(0) / h).astype(int) + 4
    lo = tuple(int(x) for x in lo)
    hi = tuple(int(x) for x in hi)
    shape = tuple(b_ - a_ for a_, b_ in zip(lo, hi))
    wind = winding_grid(a, b, np.ones(a.shape[0]), level, lo, shape)
    wind = np.rint(wind)
    # flag centers within tol of the image polyline: cells met by the polyline dilated
    hit = SegmentSet(a, b).cubes_meeting(level) - np.asarray(lo)
    ok = np.all((hit >= 0) & (hit < np.asarray(shape)), axis=1)
    flags = np.zeros(shape, dtype=bool)
    flags[tuple(hit[ok].T)] = True
    reach = int(math.ceil(tol / h))
    flags = ndimage.binary_dilation(flags, structure=np.ones((3, 3), bool), iterations=reach)
    return DegreeField(GridFunction(level, lo, wind), flags, tol, int(poly.shape[0]))


def _perimeter(U: Region) -> float:
    if isinstance(U, DiskRegion):
        return 2 * math.pi * U.r
    if isinstance(U, BoxRegion):
        return float(2 * np.sum(U.hi - U.lo))
    if isinstance(U, PolygonRegion):
        v = U.vertices
        return float(np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1).sum())
    raise ConfigError("unsupported region")


def degree_regularity(deg, beta: float) -> float:
    """W^{1-beta,1} Gagliardo seminorm of the degree field (alpha = beta)."""
    u = deg.field if isinstance(deg, DegreeField) else deg
    return gagliardo(u, beta).value


def compare_fields(density: GridFunction, deg: DegreeField) -> dict:
    """Agreement of a top-pushforward density with a degree field on unflagged cells
    of the degree grid (cells outside the density box count as density 0)."""
    u = deg.field
    if density.level != u.level:
        raise ConfigError("fields live on different levels")
    emb = np.zeros(u.shape)
    lo_u = np.asarray(u.lo)
    lo_d = np.asarray(density.lo)
    src = [slice(max(0, a - b), min(n, a - b + m)) for a, b, n, m in zip(lo_u, lo_d, density.shape, u.shape)]
    dst = [slice(s.start - (a - b), s.stop - (a - b)) for s, a, b in zip(src, lo_u, lo_d)]
    emb[tuple(dst)] = density.values[tuple(src)]
    mask = ~deg.flags
    agree = np.isclose(emb[mask], u.values[mask], atol=1e-9)
    return {"cells": int(mask.sum()), "agree": int(agree.sum()),
            "fraction": float(agree.mean()) if mask.any() else 1.0,
            "integer": bool(np.all(u.values[mask] == np.rint(u.values[mask])))}
