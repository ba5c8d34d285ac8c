"""Deformation of chains onto the dyadic eps-grid (cubical Federer-Fleming).

Pieces are first clipped to closed grid cells.  Then, for j = d, ..., m+1,
every piece lying in the relative interior of a j-face Q is radially
projected from a jittered center c_Q onto the boundary of Q.  The radial map
is a central projection on each pyramid (cone from c_Q over a facet), so
pieces are split along pyramid walls first and simplices map to simplices.

The boundary chain B = dT is transported by the same maps, with one extra
sweep j = m.  Writing psi for the projection on one face,

    X - psi X = d(c x X - c x psi X) + (c x dX - c x psi dX),

and the terms of dX on the face boundary cancel because psi fixes them.  So
T = P + dR + S exactly, with R collecting the cones over T-pieces and S the
cones over B-pieces.  After the last sweep T' lives on the m-skeleton and
P = T' - S_m has boundary on the (m-1)-skeleton, hence a constant density on
each m-face.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ConfigError, NumericalError
from .grid import CubicalChain, SimplicialChain, as_simplicial

TOL = 1e-12
JITTER_SHIFT = 8


@dataclass
class DeformResult:
    P: CubicalChain
    R: SimplicialChain
    S: SimplicialChain
    level: int
    ratios: dict = field(default_factory=dict)

    @property
    def eps(self) -> float:
        return math.ldexp(1.0, -self.level)

    @property
    def flat_bound(self) -> float:
        """M(R) + M(S), an upper bound for F(T - P)."""
        return self.R.mass() + self.S.mass()


def level_from_eps(eps) -> int:
    """Level k with eps = 2^-k; accepts floats, ints, Fractions and strings like '1/16'."""
    try:
        q = Fraction(eps) if not isinstance(eps, float) else Fraction(eps).limit_denominator(1 << 62)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"cannot parse eps={eps!r}") from exc
    if q <= 0:
        raise ConfigError("eps must be positive")
    num, den = q.numerator, q.denominator
    if num & (num - 1) or den & (den - 1):
        raise ConfigError(f"eps={eps} is not a dyadic power 2^-k")
    return den.bit_length() - num.bit_length()


def deform(T, eps=None, level: int | None = None) -> DeformResult:
    """Deform ``T`` onto the grid of spacing eps = 2^-level: T = P + dR + S."""
    if level is None:
        if eps is None:
            raise ConfigError("deform needs eps or level")
        level = level_from_eps(eps)
    elif eps is not None and level_from_eps(eps) != level:
        raise ConfigError("eps and level disagree")
    k = int(level)
    h = math.ldexp(1.0, -k)
    d, m = T.d, T.m
    if isinstance(T, CubicalChain) and T.level <= k:
        P = T.refine(k)
        return DeformResult(P, SimplicialChain.zero(d, min(m + 1, d)), SimplicialChain.zero(d, m), k,
                            _ratios(T, P, SimplicialChain.zero(d, min(m + 1, d)), SimplicialChain.zero(d, m), h))
    ST = as_simplicial(T).canonical()
    tv, tc = _drop_degenerate(ST.verts, ST.coeffs, h)
    tv, tc = _clip_to_grid(tv, tc, h)
    if m >= 1:
        B = ST.boundary()
        bv, bc = _clip_to_grid(B.verts, B.coeffs, h)
    r_parts: list[tuple[np.ndarray, np.ndarray]] = []
    s_parts: list[tuple[np.ndarray, np.ndarray]] = []
    s_last = (np.zeros((0, m + 1, d)), np.zeros(0))
    for j in range(d, m - 1, -1):
        if j > m:
            tv, tc, cv, cc = _sweep(tv, tc, j, h, k)
            r_parts.append((cv, cc))
            tv, tc = _drop_degenerate(tv, tc, h)
        if m >= 1 and j >= m:
            bv, bc, cv, cc = _sweep(bv, bc, j, h, k)
            s_parts.append((cv, cc))
            if j == m:
                s_last = (cv, cc)
    fd = _face_dim(tv, h)
    if np.any(fd > m):
        raise NumericalError("deformation left pieces off the m-skeleton")
    P = _densities(tv, tc, h, k, d, m)
    if m >= 1 and len(s_last[1]):
        P = (P - _densities(s_last[0], s_last[1], h, k, d, m)).cleaned(1e-10)
    R = _stack(r_parts, d, min(m + 1, d))
    S = _stack(s_parts, d, m)
    return DeformResult(P, R, S, k, _ratios(T, P, R, S, h))


def _ratios(T, P, R, S, h) -> dict:
    mT = T.mass()
    mbT = T.boundary().mass() if T.m >= 1 else 0.0
    mR, mS = R.mass(), S.mass()
    return {
        "mass_T": mT,
        "mass_P": P.mass(),
        "mass_R": mR,
        "mass_S": mS,
        "P_over_T": P.mass() / mT if mT > 0 else None,
        "R_over_epsT": mR / (h * mT) if mT > 0 else None,
        "S_over_epsdT": mS / (h * mbT) if mbT > 0 else None,
    }


def _stack(parts, d, deg) -> SimplicialChain:
    parts = [p for p in parts if len(p[1])]
    if not parts:
        return SimplicialChain.zero(d, deg)
    return SimplicialChain(d, deg, np.concatenate([p[0] for p in parts]),
                           np.concatenate([p[1] for p in parts])).canonical()


def _volumes(V: np.ndarray) -> np.ndarray:
    n, p, d = V.shape
    if p == 1:
        return np.ones(n)
    E = V[:, 1:, :] - V[:, :1, :]
    G = np.einsum("nik,njk->nij", E, E)
    return np.sqrt(np.maximum(np.linalg.det(G), 0.0)) / math.factorial(p - 1) if n else np.zeros(0)


def _drop_degenerate(V, C, h):
    if len(C) == 0 or V.shape[1] == 1:
        return V, C
    m = V.shape[1] - 1
    keep = _volumes(V) > 1e-13 * h ** m
    return V[keep], C[keep]


# splitting -----------------------------------------------------------------------

def _split_once(V, C, g, snap_axis=None, snap_val=None, tol=TOL):
    """Split simplices along the zero set of per-simplex affine values ``g`` (n, p)
    at their first strictly crossing edge.  Returns (V, C, any_split)."""
    n, p, d = V.shape
    pos = g > tol
    neg = g < -tol
    best_i = np.full(n, -1)
    best_j = np.full(n, -1)
    for i in range(p):
        for j in range(i + 1, p):
            cross = ((pos[:, i] & neg[:, j]) | (neg[:, i] & pos[:, j])) & (best_i < 0)
            best_i[cross] = i
            best_j[cross] = j
    hit = best_i >= 0
    if not np.any(hit):
        return V, C, False
    idx = np.flatnonzero(hit)
    Vi = V[idx, best_i[idx]]
    Vj = V[idx, best_j[idx]]
    gi = g[idx, best_i[idx]]
    gj = g[idx, best_j[idx]]
    t = gi / (gi - gj)
    pt = Vi + t[:, None] * (Vj - Vi)
    if snap_axis is not None:
        pt[np.arange(len(idx)), snap_axis[idx]] = snap_val[idx]
    A = V[idx].copy()
    Bv = V[idx].copy()
    A[np.arange(len(idx)), best_j[idx]] = pt
    Bv[np.arange(len(idx)), best_i[idx]] = pt
    rest = ~hit
    V2 = np.concatenate([V[rest], A, Bv])
    C2 = np.concatenate([C[rest], C[idx], C[idx]])
    return V2, C2, True


def _clip_to_grid(V, C, h):
    """Subdivide until every simplex lies in a closed grid cell."""
    if len(C) == 0:
        return V, C
    V = np.asarray(V, float)
    C = np.asarray(C, float)
    d = V.shape[2]
    for ax in range(d):
        done_V, done_C = [], []
        while len(C):
            x = V[:, :, ax]
            lo = x.min(axis=1)
            hi = x.max(axis=1)
            gline = (np.floor(lo / h) + 1.0) * h
            active = gline < hi
            done_V.append(V[~active])
            done_C.append(C[~active])
            V, C = V[active], C[active]
            if not len(C):
                break
            gl = gline[active]
            while True:
                g = V[:, :, ax] - gl[:, None]
                V2, C2, did = _split_once(V, C, g, np.full(len(C), ax), gl, tol=0.0)
                if not did:
                    break
                # keep the hyperplane attached to each simplex through the split
                V, C, gl = V2, C2, _split_bookkeeping(g, gl)
        V = np.concatenate(done_V) if done_V else V
        C = np.concatenate(done_C) if done_C else C
    return V, C


def _split_bookkeeping(g, gl):
    """Per-simplex hyperplane values carried through ``_split_once`` (same order)."""
    n, p = g.shape
    pos = g > 0.0
    neg = g < 0.0
    hit = np.zeros(n, bool)
    for i in range(p):
        for j in range(i + 1, p):
            hit |= (pos[:, i] & neg[:, j]) | (neg[:, i] & pos[:, j])
    return np.concatenate([gl[~hit], gl[hit], gl[hit]])


# faces ----------------------------------------------------------------------------

def _pinned(V, h):
    """(n, d) mask of axes on which all vertices sit on the same grid hyperplane."""
    x = V / h
    same = np.all(V == V[:, :1, :], axis=1)
    onplane = np.all(x == np.round(x), axis=1)
    return same & onplane


def _face_dim(V, h):
    if len(V) == 0:
        return np.zeros(0, int)
    return V.shape[2] - _pinned(V, h).sum(axis=1)


def _jitter_dir(free: tuple[int, ...], attempt: int) -> np.ndarray:
    base = np.sqrt(np.arange(1, len(free) + 1, dtype=float) + attempt)
    if attempt % 2 == 1:
        base[::2] *= -1.0
    return base / np.linalg.norm(base)


def _sweep(V, C, j, h, k):
    """Project pieces lying in open j-faces onto the face boundaries.

    Returns (new V, new C, cone vertices, cone coeffs)."""
    n, p, d = V.shape
    empty = (np.zeros((0, p + 1, d)), np.zeros(0))
    if n == 0 or j == 0:
        return V, C, *empty
    pin = _pinned(V, h)
    fdim = d - pin.sum(axis=1)
    sel = fdim == j
    if not np.any(sel):
        return V, C, *empty
    keepV, keepC = V[~sel], C[~sel]
    X, XC, Xpin = V[sel], C[sel], pin[sel]
    outV, outC, coneV, coneC = [keepV], [keepC], [], []
    patterns = np.unique(Xpin, axis=0)
    for pat in patterns:
        grp = np.all(Xpin == pat, axis=1)
        free = tuple(int(i) for i in np.flatnonzero(~pat))
        Xg, Cg = X[grp], XC[grp]
        cent = Xg.mean(axis=1)
        base = np.floor(cent / h)
        lo = base * h
        # pinned coordinates are exact grid values already
        center_plain = lo + 0.5 * h
        center_plain[:, list(np.flatnonzero(pat))] = Xg[:, 0, np.flatnonzero(pat)]
        faces, inv = np.unique(base[:, list(free)], axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        attempt = np.zeros(len(faces), dtype=int)
        todo = np.ones(len(Xg), dtype=bool)
        while np.any(todo):
            u = np.zeros((len(Xg), d))
            for a in np.unique(attempt[inv[todo]]):
                rows = todo & (attempt[inv] == a)
                u[np.ix_(rows, list(free))] = _jitter_dir(free, int(a))
            c = center_plain + math.ldexp(1.0, -(k + JITTER_SHIFT)) * u
            res = _project_group(Xg[todo], Cg[todo], c[todo], lo[todo], free, h)
            if res is None:
                raise NumericalError("pyramid splitting did not terminate")
            pv, pc, cv, cc, src, bad = res
            bad_faces = np.unique(inv[np.flatnonzero(todo)][src[bad]]) if np.any(bad) else np.zeros(0, int)
            if bad_faces.size:
                if np.any(attempt[bad_faces] >= 8):
                    raise NumericalError("could not find a projection center avoiding the chain")
                attempt[bad_faces] += 1
                good_piece = ~np.isin(inv[np.flatnonzero(todo)][src], bad_faces)
                pv, pc = pv[good_piece], pc[good_piece]
                gsrc = np.isin(inv[np.flatnonzero(todo)][src], bad_faces)
                cgood = ~np.repeat(gsrc, 2)
                cv, cc = cv[cgood], cc[cgood]
                newtodo = np.zeros_like(todo)
                newtodo[todo] = np.isin(inv[todo], bad_faces)
                outV.append(pv)
                outC.append(pc)
                coneV.append(cv)
                coneC.append(cc)
                todo = newtodo
            else:
                outV.append(pv)
                outC.append(pc)
                coneV.append(cv)
                coneC.append(cc)
                todo[:] = False
    newV = np.concatenate(outV)
    newC = np.concatenate(outC)
    cV = np.concatenate(coneV) if coneV else empty[0]
    cC = np.concatenate(coneC) if coneC else empty[1]
    return newV, newC, cV, cC


def _gauges(V, c, lo, free, h):
    """lambda values (n, p, 2j): (x_a - c_a)/(hi_a - c_a) and (c_a - x_a)/(c_a - lo_a)."""
    cols = []
    for a in free:
        hi_a = lo[:, a] + h
        cols.append((V[:, :, a] - c[:, None, a]) / (hi_a - c[:, a])[:, None])
        cols.append((c[:, None, a] - V[:, :, a]) / (c[:, a] - lo[:, a])[:, None])
    return np.stack(cols, axis=-1)


def _project_group(V, C, c, lo, free, h):
    n, p, d = V.shape
    src = np.arange(n)
    L = 2 * len(free)
    pairs = [(a, b) for a in range(L) for b in range(L) if a < b]
    for _ in range(200):
        lam = _gauges(V, c, lo, free, h)
        mx = lam.max(axis=-1, keepdims=True)
        inset = lam >= mx - TOL
        common = np.all(inset, axis=1)
        ok = np.any(common, axis=1)
        if np.all(ok):
            break
        present = np.any(inset, axis=1)
        gsel = np.zeros((n, p))
        chosen = np.zeros(n, bool)
        for a, b in pairs:
            gab = lam[..., a] - lam[..., b]
            crosses = (~ok) & (~chosen) & present[:, a] & present[:, b] \
                & (gab.max(axis=1) > TOL) & (gab.min(axis=1) < -TOL)
            gsel[crosses] = gab[crosses]
            chosen |= crosses
        if not np.any(chosen):
            # no wall strictly crosses: accept the best common label up to a looser tolerance
            break
        nrest = n - int(chosen.sum())
        rest_idx = np.flatnonzero(~chosen)
        ch_idx = np.flatnonzero(chosen)
        V2, C2, _ = _split_once(V[ch_idx], C[ch_idx], gsel[ch_idx])
        nch = len(ch_idx)
        # _split_once keeps unsplit rows first, then the two halves
        pos = gsel[ch_idx] > TOL
        neg = gsel[ch_idx] < -TOL
        hit = np.zeros(nch, bool)
        for i in range(p):
            for jj in range(i + 1, p):
                hit |= (pos[:, i] & neg[:, jj]) | (neg[:, i] & pos[:, jj])
        order = np.concatenate([ch_idx[~hit], ch_idx[hit], ch_idx[hit]])
        V = np.concatenate([V[rest_idx], V2])
        C = np.concatenate([C[rest_idx], C2])
        keep_meta = np.concatenate([rest_idx, order])
        c, lo, src = c[keep_meta], lo[keep_meta], src[keep_meta]
        n = len(C)
    else:
        return None
    lam = _gauges(V, c, lo, free, h)
    mx = lam.max(axis=-1, keepdims=True)
    score = np.min(lam - mx, axis=1)  # (n, L): worst deficit of each label over the vertices
    label = np.argmax(score, axis=1)
    lv = np.take_along_axis(lam, np.broadcast_to(label[:, None, None], (n, p, 1)), axis=2)[..., 0]
    bad = np.any(lv < 1e-9, axis=1)
    lv_safe = np.where(lv < 1e-9, 1.0, lv)
    img = c[:, None, :] + (V - c[:, None, :]) / lv_safe[..., None]
    ax = np.asarray(free)[label // 2]
    side_hi = label % 2 == 0
    snap = np.where(side_hi, lo[np.arange(n), ax] + h, lo[np.arange(n), ax])
    img[np.arange(n), :, ax] = snap[:, None]
    cv = np.concatenate([np.concatenate([c[:, None, :], V], axis=1),
                         np.concatenate([c[:, None, :], img], axis=1)])
    cc = np.concatenate([C, -C])
    # interleave so that the two cone pieces of one source piece stay adjacent
    cv = cv.reshape(2, n, p + 1, d).transpose(1, 0, 2, 3).reshape(2 * n, p + 1, d)
    cc = cc.reshape(2, n).T.reshape(-1)
    return img, C, cv, cc, src, bad


def _densities(V, C, h, k, d, m) -> CubicalChain:
    """Cubical chain with, on every m-face, the signed measure of the pieces it contains."""
    if len(C) == 0:
        return CubicalChain.zero(d, m, k)
    pin = _pinned(V, h)
    fdim = d - pin.sum(axis=1)
    sel = fdim == m
    V, C, pin = V[sel], C[sel], pin[sel]
    terms: dict = {}
    if m == 0:
        pts = np.round(V[:, 0, :] / h).astype(np.int64)
        for pt, c in zip(map(tuple, pts.tolist()), C):
            terms[(pt, ())] = terms.get((pt, ()), 0.0) + float(c)
        return CubicalChain(d, 0, k, terms, _trusted=True).cleaned(1e-12)
    cent = V.mean(axis=1)
    base = np.floor(cent / h).astype(np.int64)
    pinned_vals = np.round(V[:, 0, :] / h).astype(np.int64)
    base = np.where(pin, pinned_vals, base)
    acc: dict = {}
    for pat in np.unique(pin, axis=0):
        grp = np.all(pin == pat, axis=1)
        axes = tuple(int(i) for i in np.flatnonzero(~pat))
        E = V[grp][:, 1:, :][:, :, list(axes)] - V[grp][:, :1, :][:, :, list(axes)]
        sv = np.linalg.det(E) / math.factorial(m) * C[grp]
        for b, s in zip(map(tuple, base[grp].tolist()), sv):
            acc.setdefault((b, axes), []).append(float(s))
    vol = h ** m
    for key, vals in acc.items():
        terms[key] = math.fsum(vals) / vol
    return CubicalChain(d, m, k, terms, _trusted=True).cleaned(1e-12)
