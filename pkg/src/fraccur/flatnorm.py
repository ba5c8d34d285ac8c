"""Flat norm on a finite cubical complex, decomposition costs, and the
Littlewood-Paley constant.

The flat norm F_K(T) = min M(S) + M(T - dS) is solved as a linear program
over all (m+1)-faces S of a padded box K.  Each signed coefficient is split
into two nonnegative variables; objective weights are face volumes.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from . import lp
from .errors import ConfigError, NumericalError, PreconditionError
from .grid import CubicalChain, Decomposition, PartStats, SimplicialChain

DENSE_MAX_ROWS = 300
DENSE_MAX_COLS = 2000


@dataclass(frozen=True)
class ComplexDomain:
    """Box [lo, hi] (integer corners at ``level``) with an optional mask of
    admissible top cells; (m+1)-faces are admissible when they bound an
    admissible cell."""

    level: int
    lo: tuple[int, ...]
    hi: tuple[int, ...]
    cell_mask: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if len(self.lo) != len(self.hi) or any(h <= l for l, h in zip(self.lo, self.hi)):
            raise ConfigError(f"invalid domain box {self.lo}..{self.hi}")
        if self.cell_mask is not None and self.cell_mask.shape != self.shape:
            raise ConfigError("cell mask shape does not match the domain box")

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(h - l for l, h in zip(self.lo, self.hi))

    @classmethod
    def around(cls, chain: CubicalChain, pad: int = 1, level: int | None = None) -> "ComplexDomain":
        """Bounding box of ``chain`` padded by ``pad`` cells at ``level``."""
        if pad < 1:
            raise ConfigError("domain padding must be at least one cell")
        level = chain.level if level is None else level
        bb = chain.refine(level).bbox() if level >= chain.level else None
        if level < chain.level:
            raise ConfigError("domain level must not be coarser than the chain level")
        if bb is None:
            lo = (0,) * chain.d
            hi = (1,) * chain.d
        else:
            lo, hi = bb
        return cls(level, tuple(x - pad for x in lo), tuple(x + pad for x in hi))

    def contains(self, chain: CubicalChain) -> bool:
        bb = chain.refine(max(chain.level, self.level)).bbox()
        if bb is None:
            return True
        s = max(chain.level, self.level) - self.level
        lo = [x << s for x in self.lo]
        hi = [x << s for x in self.hi]
        return all(a >= l and b <= h for a, b, l, h in zip(bb[0], bb[1], lo, hi))

    def union(self, other: "ComplexDomain") -> "ComplexDomain":
        if self.level != other.level:
            raise ConfigError("domains at different levels")
        return ComplexDomain(
            self.level,
            tuple(min(a, b) for a, b in zip(self.lo, other.lo)),
            tuple(max(a, b) for a, b in zip(self.hi, other.hi)),
        )

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.ldexp(np.asarray(self.lo, float), -self.level), np.ldexp(np.asarray(self.hi, float), -self.level))


@dataclass
class FlatNormResult:
    value: float
    witness_S: CubicalChain | None
    residual: CubicalChain
    diagnostics: dict

    @property
    def lp_value(self) -> float:
        return self.diagnostics.get("lp_objective", self.value)


# face enumeration ---------------------------------------------------------------

class _Index:
    """Integer codes for faces of a box: code = axes_id * P + ravel(base - lo)."""

    def __init__(self, domain: ComplexDomain):
        self.domain = domain
        self.d = domain.d
        self.dims = tuple(n + 1 for n in domain.shape)
        self.P = int(np.prod(self.dims))
        self.axes_list = [a for m in range(self.d + 1) for a in itertools.combinations(range(self.d), m)]
        self.axes_id = {a: i for i, a in enumerate(self.axes_list)}

    def encode(self, bases: np.ndarray, axes: tuple[int, ...]) -> np.ndarray:
        rel = bases - np.asarray(self.domain.lo, dtype=np.int64)
        return self.axes_id[axes] * self.P + np.ravel_multi_index(rel.T, self.dims)

    def faces(self, m: int) -> list[tuple[tuple[int, ...], np.ndarray]]:
        """All admissible m-faces, grouped by axes: [(axes, bases (n,d))]."""
        out = []
        shape = self.domain.shape
        mask = self.domain.cell_mask
        cells = np.argwhere(mask).astype(np.int64) if mask is not None else None
        for axes in itertools.combinations(range(self.d), m):
            if cells is None:
                ext = [shape[i] if i in axes else shape[i] + 1 for i in range(self.d)]
                grid = np.indices(ext).reshape(self.d, -1).T
            else:
                # faces of admissible cells: base = cell + e with e_i in {0, 1} off the face axes
                free = [i for i in range(self.d) if i not in axes]
                shifts = []
                for eps in itertools.product((0, 1), repeat=len(free)):
                    e = np.zeros(self.d, dtype=np.int64)
                    e[free] = eps
                    shifts.append(cells + e)
                grid = np.unique(np.concatenate(shifts), axis=0) if cells.size else np.zeros((0, self.d), np.int64)
            out.append((axes, grid + np.asarray(self.domain.lo, dtype=np.int64)))
        return out


def _chain_codes(chain: CubicalChain, index: _Index) -> tuple[np.ndarray, np.ndarray]:
    bases, axes, coeffs = chain.to_arrays()
    codes = np.empty(len(coeffs), dtype=np.int64)
    for a in set(map(tuple, axes.tolist())):
        sel = np.all(axes == np.asarray(a, dtype=np.int64), axis=1) if chain.m else np.ones(len(coeffs), bool)
        codes[sel] = index.encode(bases[sel], a)
    return codes, coeffs


def _boundary_coo(index: _Index, groups) -> tuple[np.ndarray, np.ndarray, np.ndarray, list]:
    rows, cols, vals = [], [], []
    col_faces = []
    offset = 0
    for axes, bases in groups:
        n = bases.shape[0]
        colidx = np.arange(offset, offset + n)
        for j, i in enumerate(axes):
            sub = axes[:j] + axes[j + 1:]
            s = 1.0 if j % 2 == 0 else -1.0
            front = bases.copy()
            front[:, i] += 1
            rows += [index.encode(front, sub), index.encode(bases, sub)]
            cols += [colidx, colidx]
            vals += [np.full(n, s), np.full(n, -s)]
        col_faces.append((axes, bases))
        offset += n
    if not rows:
        return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0), col_faces
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), col_faces


def _assemble(T: CubicalChain, domain: ComplexDomain):
    index = _Index(domain)
    groups = index.faces(T.m + 1)
    rcode, ccol, cval, col_faces = _boundary_coo(index, groups)
    tcode, tval = _chain_codes(T, index)
    allcodes = np.unique(np.concatenate([rcode, tcode]))
    rows = np.searchsorted(allcodes, rcode)
    nS = sum(b.shape[0] for _, b in groups)
    B = sp.csr_matrix((cval, (rows, ccol)), shape=(allcodes.size, nS))
    t = np.zeros(allcodes.size)
    np.add.at(t, np.searchsorted(allcodes, tcode), tval)
    return B, t, col_faces, nS


def flat_norm(T: CubicalChain, domain: ComplexDomain | None = None, pad: int = 1,
              method: str = "auto") -> FlatNormResult:
    """Flat norm of ``T`` relative to the complex of ``domain``.

    ``method`` is "auto", "simplex" (dense Bland simplex) or "highs"
    (scipy's HiGHS, used for large complexes).
    """
    if isinstance(T, SimplicialChain):
        raise ConfigError("flat_norm needs a cubical chain; rasterize with deform() first")
    if domain is None:
        domain = ComplexDomain.around(T, pad)
    if domain.d != T.d:
        raise ConfigError("domain and chain live in different dimensions")
    if domain.level < T.level:
        raise ConfigError("domain level is coarser than the chain level")
    T = T.refine(domain.level)
    if not domain.contains(T):
        raise ConfigError("chain support escapes the flat norm domain")
    if not T:
        return FlatNormResult(0.0, CubicalChain.zero(T.d, min(T.m + 1, T.d), T.level) if T.m < T.d else None,
                              T, {"method": "trivial", "iterations": 0, "gap": 0.0, "lp_objective": 0.0})
    if T.m == T.d:
        v = T.mass()
        return FlatNormResult(v, None, T, {"method": "top-degree", "iterations": 0, "gap": 0.0, "lp_objective": v})
    B, t, col_faces, nS = _assemble(T, domain)
    nR = t.size
    k, m = domain.level, T.m
    wS = math.ldexp(1.0, -k * (m + 1))
    wR = math.ldexp(1.0, -k * m)
    if method == "auto":
        method = "simplex" if (nR <= DENSE_MAX_ROWS and 2 * (nS + nR) <= DENSE_MAX_COLS) else "highs"
    c = np.concatenate([np.full(2 * nS, wS), np.full(2 * nR, wR)])
    I = sp.identity(nR, format="csr")
    A = sp.hstack([B, -B, I, -I], format="csr")
    if method == "simplex":
        basis = [2 * nS + i if t[i] >= 0 else 2 * nS + nR + i for i in range(nR)]
        res = lp.simplex(c, A.toarray(), t, basis=basis)
        if res.status != "optimal":
            raise NumericalError(f"flat norm LP ended with status {res.status}")
        x, obj, iters, gap = res.x, res.objective, res.iterations, res.gap
    elif method == "highs":
        res = linprog(c, A_eq=A, b_eq=t, bounds=(0, None), method="highs")
        if res.status != 0:
            raise NumericalError(f"flat norm LP failed: {res.message}")
        x, obj = res.x, float(res.fun)
        iters = int(getattr(res, "nit", 0))
        dual = float(res.eqlin.marginals @ t) if res.eqlin is not None else obj
        gap = abs(obj - dual)
    else:
        raise ConfigError(f"unknown flat norm method {method!r}")
    s = x[:nS] - x[nS:2 * nS]
    scale = max(np.abs(t).max(), 1e-300)
    s[np.abs(s) <= 1e-12 * scale] = 0.0
    S = _chain_from_columns(T.d, m + 1, k, col_faces, s)
    residual = (T - S.boundary()).cleaned(1e-14)
    value = S.mass() + residual.mass()
    diag = {"method": method, "iterations": iters, "gap": gap, "lp_objective": obj,
            "rows": int(nR), "columns": int(2 * (nS + nR))}
    return FlatNormResult(value, S, residual, diag)


def _chain_from_columns(d, m, level, col_faces, s) -> CubicalChain:
    terms = {}
    off = 0
    for axes, bases in col_faces:
        n = bases.shape[0]
        vals = s[off:off + n]
        for r in np.flatnonzero(vals):
            terms[(tuple(int(v) for v in bases[r]), axes)] = float(vals[r])
        off += n
    return CubicalChain(d, m, level, terms, _trusted=True)


def flat_norm_bruteforce(T: CubicalChain, domain: ComplexDomain | None = None, pad: int = 1,
                         max_faces: int = 6) -> float:
    """Independent oracle: minimize the convex piecewise-linear objective over
    the vertices of its kink-hyperplane arrangement.

    Kinks are {s_j = 0} and {(T - dS)_i = 0}; the minimum of a convex PL
    function bounded below is attained at such a vertex.
    """
    if domain is None:
        domain = ComplexDomain.around(T, pad)
    T = T.refine(domain.level)
    if T.m == T.d:
        return T.mass()
    B, t, _, nS = _assemble(T, domain)
    if nS > max_faces:
        raise ConfigError(f"brute-force oracle limited to {max_faces} candidate faces, got {nS}")
    k, m = domain.level, T.m
    wS = math.ldexp(1.0, -k * (m + 1))
    wR = math.ldexp(1.0, -k * m)
    B = B.toarray()
    touched = np.flatnonzero(np.any(B != 0, axis=1))
    fixed = wR * np.abs(np.delete(t, touched)).sum()
    Bt = B[touched]
    tt = t[touched]
    # hyperplanes a @ s = rhs
    H = np.vstack([np.eye(nS), Bt])
    rhs = np.concatenate([np.zeros(nS), tt])
    if nS == 0:
        return float(fixed + wR * np.abs(tt).sum())
    best = np.inf
    combos = np.asarray(list(itertools.combinations(range(H.shape[0]), nS)))
    for chunk in np.array_split(combos, max(1, len(combos) // 20000)):
        M = H[chunk]
        r = rhs[chunk]
        det = np.linalg.det(M)
        ok = np.abs(det) > 1e-9
        if not np.any(ok):
            continue
        sol = np.linalg.solve(M[ok], r[ok][..., None])[..., 0]
        obj = wS * np.abs(sol).sum(axis=1) + wR * np.abs(tt[None, :] - sol @ Bt.T).sum(axis=1)
        best = min(best, float(obj.min()))
    return float(best + fixed)


# fractional costs ----------------------------------------------------------------

def _check_alpha(alpha: float) -> None:
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha must lie in [0, 1], got {alpha}")


def part_stats(part, domain: ComplexDomain | None = None, flat: bool = True) -> PartStats:
    m = part.mass()
    bm = part.boundary().mass() if part.m > 0 else 0.0
    if flat:
        if isinstance(part, SimplicialChain):
            raise ConfigError("flat norms of simplicial parts need rasterization first")
        f = flat_norm(part, domain).value
    else:
        f = m
    return PartStats(m, bm, f)


def shared_domain(parts, pad: int = 1) -> ComplexDomain:
    level = max(p.level for p in parts)
    dom = None
    for p in parts:
        if not p:
            continue
        dp = ComplexDomain.around(p, pad, level)
        dom = dp if dom is None else dom.union(dp)
    if dom is None:
        d = parts[0].d
        dom = ComplexDomain(level, (-pad,) * d, (pad,) * d)
    return dom


def make_decomposition(parts, alpha: float, domain: ComplexDomain | None = None, pad: int = 1,
                       flat: bool = True) -> Decomposition:
    """Decomposition with exact per-part (M, M(d), F) over one shared domain."""
    _check_alpha(alpha)
    parts = list(parts)
    if not parts:
        raise ConfigError("a decomposition needs at least one part")
    if domain is None and flat:
        domain = shared_domain(parts, pad)
    stats = [part_stats(p, domain, flat) for p in parts]
    box = domain.coords() if domain is not None else None
    return Decomposition(parts, alpha, stats, box=box)


def frac_cost(dec: Decomposition) -> float:
    """sum_k N(T_k)^(1-alpha) F(T_k)^alpha, an upper bound for F^alpha(sum T_k)."""
    _check_alpha(dec.alpha)
    return dec.cost


def frac_cost_tilde(dec: Decomposition) -> float:
    """sum_k M(dT_k)^(1-alpha) M(T_k)^alpha."""
    _check_alpha(dec.alpha)
    if any(p.m != p.d for p in dec.parts):
        warnings.warn("frac_cost_tilde is meant for top-dimensional parts", stacklevel=2)
    return dec.tilde_cost


def improve_decomposition(dec: Decomposition, domain: ComplexDomain | None = None,
                          max_rounds: int = 4) -> Decomposition:
    """Greedy search: merge neighbouring parts or split a part in two halves
    along its longest axis whenever the cost decreases."""
    parts = list(dec.parts)
    if domain is None:
        domain = shared_domain(parts)
    stats = list(dec.stats)
    a = dec.alpha

    def cost(st):
        return (st.normal ** (1 - a) if a < 1 else 1.0) * (st.flat ** a if a > 0 else 1.0)

    for _ in range(max_rounds):
        changed = False
        i = 0
        while i + 1 < len(parts):
            merged = parts[i] + parts[i + 1]
            st = part_stats(merged, domain)
            if cost(st) < cost(stats[i]) + cost(stats[i + 1]) - 1e-12:
                parts[i:i + 2] = [merged]
                stats[i:i + 2] = [st]
                changed = True
            else:
                i += 1
        for i in range(len(parts)):
            halves = _split_half(parts[i])
            if halves is None:
                continue
            sts = [part_stats(h, domain) for h in halves]
            if sum(cost(s) for s in sts) < cost(stats[i]) - 1e-12:
                parts[i:i + 1] = list(halves)
                stats[i:i + 1] = sts
                changed = True
                break
        if not changed:
            break
    return Decomposition(parts, a, stats, box=domain.coords(), notes={"improved": True})


def _split_half(T: CubicalChain):
    bb = T.bbox()
    if bb is None or len(T) < 2:
        return None
    lo, hi = bb
    ax = int(np.argmax(np.subtract(hi, lo)))
    mid = (lo[ax] + hi[ax]) // 2
    left = {k: v for k, v in T.terms.items() if k[0][ax] < mid}
    right = {k: v for k, v in T.terms.items() if k[0][ax] >= mid}
    if not left or not right:
        return None
    return (CubicalChain(T.d, T.m, T.level, left, _trusted=True),
            CubicalChain(T.d, T.m, T.level, right, _trusted=True))


# Littlewood-Paley constant -----------------------------------------------------

def lp_constant(alpha: float, beta: float) -> float:
    """Explicit C(alpha, beta) for the series bound |sum_n omega_n(T)| <= C kappa N^(1-alpha) F^alpha.

    Hypothesis: |omega_n(T)| <= kappa 2^(n(beta-alpha)) N^(1-beta) F^beta and
    |omega_n(T)| <= kappa 2^(-n alpha) N.  Choose the integer N0 >= 0 with
    2^-(N0+1) <= F/N <= 2^-N0.  With q = 2^(beta-alpha):

    * head n <= N0: sum q^n <= q^N0 q/(q-1) and q^N0 <= (N/F)^(beta-alpha);
    * tail n > N0: sum 2^(-n alpha) = 2^(-(N0+1) alpha)/(1-2^-alpha) <= (F/N)^alpha/(1-2^-alpha).

    Both pieces are then multiples of kappa N^(1-alpha) F^alpha.
    """
    if not 0.0 < alpha < beta <= 1.0:
        raise PreconditionError(f"lp_constant needs 0 < alpha < beta <= 1, got ({alpha}, {beta})")
    q = 2.0 ** (beta - alpha)
    return q / (q - 1.0) + 1.0 / (1.0 - 2.0 ** (-alpha))
