"""Dyadic cubical chains and weighted simplicial chains in R^d.

Faces are indexed by ``(base, axes)`` at a common level ``k``: the face is the
product of ``[base_i, base_i + 1] * 2**-k`` over ``i in axes`` and the single
point ``base_i * 2**-k`` on the remaining coordinates.  Axes are 0-based.
A face with axes ``(i_1 < ... < i_m)`` carries the orientation
``e_{i_1} ^ ... ^ e_{i_m}`` and its boundary is
``sum_j (-1)**j (front_j - back_j)`` with ``j`` counted from zero.
"""

from __future__ import annotations

import itertools
import json
import math
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from .errors import ConfigError, PreconditionError

CANON_RTOL = 1e-12

Key = tuple[tuple[int, ...], tuple[int, ...]]


@dataclass(frozen=True, order=True)
class DyadicFace:
    level: int
    base: tuple[int, ...]
    axes: tuple[int, ...]

    def __post_init__(self) -> None:
        d = len(self.base)
        if any(b <= a for a, b in zip(self.axes, self.axes[1:])):
            raise ConfigError(f"axes must be strictly increasing, got {self.axes}")
        if self.axes and (self.axes[0] < 0 or self.axes[-1] >= d):
            raise ConfigError(f"axes {self.axes} out of range for d={d}")

    @property
    def ambient(self) -> int:
        return len(self.base)

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def volume(self) -> float:
        return math.ldexp(1.0, -self.level * self.dim)

    def lower(self) -> np.ndarray:
        return np.ldexp(np.asarray(self.base, dtype=float), -self.level)

    def upper(self) -> np.ndarray:
        hi = list(self.base)
        for i in self.axes:
            hi[i] += 1
        return np.ldexp(np.asarray(hi, dtype=float), -self.level)

    def contains_face(self, other: "DyadicFace") -> bool:
        """True when ``other`` (same or finer level) lies inside this closed face."""
        if other.level < self.level:
            return False
        s = other.level - self.level
        for i in range(self.ambient):
            lo = self.base[i] << s
            hi = lo + ((1 << s) if i in self.axes else 0)
            olo = other.base[i]
            ohi = olo + (1 if i in other.axes else 0)
            if olo < lo or ohi > hi:
                return False
        return True


def _check_dims(d: int, m: int) -> None:
    if d < 1:
        raise ConfigError(f"ambient dimension must be >= 1, got {d}")
    if not 0 <= m <= d:
        raise ConfigError(f"degree must lie in [0, {d}], got {m}")


class CubicalChain:
    """Finite real combination of m-faces of the level-k dyadic grid in R^d.

    Values are immutable: every operation returns a new chain.
    """

    __slots__ = ("d", "m", "level", "_terms")

    def __init__(
        self,
        d: int,
        m: int,
        level: int,
        terms: Mapping[Key, float] | None = None,
        *,
        _trusted: bool = False,
    ) -> None:
        _check_dims(d, m)
        self.d = int(d)
        self.m = int(m)
        self.level = int(level)
        clean: dict[Key, float] = {}
        if terms:
            if _trusted:
                clean = {k: v for k, v in terms.items() if v != 0.0}
            else:
                for (base, axes), c in terms.items():
                    base = tuple(int(b) for b in base)
                    axes = tuple(int(a) for a in axes)
                    if len(base) != d or len(axes) != m:
                        raise ConfigError(f"face {(base, axes)} does not match d={d}, m={m}")
                    DyadicFace(level, base, axes)
                    c = float(c)
                    if not math.isfinite(c):
                        raise ConfigError("chain coefficients must be finite")
                    if c != 0.0:
                        clean[(base, axes)] = clean.get((base, axes), 0.0) + c
                clean = {k: v for k, v in clean.items() if v != 0.0}
        self._terms = clean

    # construction helpers -------------------------------------------------

    @classmethod
    def zero(cls, d: int, m: int, level: int = 0) -> "CubicalChain":
        return cls(d, m, level)

    @classmethod
    def from_faces(cls, faces: Iterable[tuple[DyadicFace, float]]) -> "CubicalChain":
        faces = list(faces)
        if not faces:
            raise ConfigError("from_faces needs at least one face (use CubicalChain.zero)")
        f0 = faces[0][0]
        terms: dict[Key, float] = {}
        for f, c in faces:
            if f.level != f0.level or f.dim != f0.dim or f.ambient != f0.ambient:
                raise ConfigError("all faces of a chain must share level, degree and ambient dimension")
            key = (f.base, f.axes)
            terms[key] = terms.get(key, 0.0) + float(c)
        return cls(f0.ambient, f0.dim, f0.level, terms)

    @classmethod
    def box(cls, lo: Iterable[int], hi: Iterable[int], level: int, coeff: float = 1.0) -> "CubicalChain":
        """Top-dimensional chain [[prod [lo_i, hi_i] 2^-level]] as a sum of level cells."""
        lo = tuple(int(x) for x in lo)
        hi = tuple(int(x) for x in hi)
        d = len(lo)
        axes = tuple(range(d))
        terms = {
            (tuple(b), axes): coeff
            for b in itertools.product(*(range(a, b) for a, b in zip(lo, hi)))
        }
        return cls(d, d, level, terms, _trusted=True)

    @classmethod
    def point(cls, x: Iterable[int], level: int, coeff: float = 1.0) -> "CubicalChain":
        x = tuple(int(v) for v in x)
        return cls(len(x), 0, level, {(x, ()): coeff}, _trusted=True)

    # container protocol ---------------------------------------------------

    @property
    def terms(self) -> Mapping[Key, float]:
        return MappingProxyType(self._terms)

    def faces(self) -> Iterator[tuple[DyadicFace, float]]:
        for (base, axes), c in self._terms.items():
            yield DyadicFace(self.level, base, axes), c

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __repr__(self) -> str:
        return f"CubicalChain(d={self.d}, m={self.m}, level={self.level}, nfaces={len(self)})"

    def coeff(self, base: Iterable[int], axes: Iterable[int]) -> float:
        return self._terms.get((tuple(base), tuple(axes)), 0.0)

    def max_abs(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    # linear structure -----------------------------------------------------

    def _aligned(self, other: "CubicalChain") -> tuple["CubicalChain", "CubicalChain"]:
        if (self.d, self.m) != (other.d, other.m):
            raise ConfigError("cannot combine chains of different ambient dimension or degree")
        lvl = max(self.level, other.level)
        return self.refine(lvl), other.refine(lvl)

    def __add__(self, other: "CubicalChain") -> "CubicalChain":
        if isinstance(other, SimplicialChain):
            return self.to_simplicial() + other
        if not isinstance(other, CubicalChain):
            return NotImplemented
        a, b = self._aligned(other)
        terms = dict(a._terms)
        for k, v in b._terms.items():
            terms[k] = terms.get(k, 0.0) + v
        return CubicalChain(a.d, a.m, a.level, terms, _trusted=True)

    def __neg__(self) -> "CubicalChain":
        return self.scale(-1.0)

    def __sub__(self, other: "CubicalChain") -> "CubicalChain":
        if not isinstance(other, (CubicalChain, SimplicialChain)):
            return NotImplemented
        return self + (-other)

    def scale(self, c: float) -> "CubicalChain":
        c = float(c)
        return CubicalChain(self.d, self.m, self.level, {k: c * v for k, v in self._terms.items()}, _trusted=True)

    def __mul__(self, c: float) -> "CubicalChain":
        return self.scale(c)

    __rmul__ = __mul__

    def cleaned(self, rtol: float = CANON_RTOL) -> "CubicalChain":
        tol = rtol * self.max_abs()
        return CubicalChain(
            self.d, self.m, self.level, {k: v for k, v in self._terms.items() if abs(v) > tol}, _trusted=True
        )

    def allclose(self, other: "CubicalChain", rtol: float = CANON_RTOL, atol: float = 0.0) -> bool:
        """Chain equality up to coefficients below ``rtol * max|coeff|`` (plus ``atol``)."""
        diff = self - other
        scale = max(self.max_abs(), other.max_abs())
        tol = rtol * scale + atol
        return all(abs(v) <= tol for v in diff._terms.values())

    # geometry -------------------------------------------------------------

    def bbox(self) -> tuple[tuple[int, ...], tuple[int, ...]] | None:
        """Integer corner pair (at ``self.level``) of the support, None for the zero chain."""
        if not self._terms:
            return None
        lo = [math.inf] * self.d
        hi = [-math.inf] * self.d
        for base, axes in self._terms:
            for i in range(self.d):
                b = base[i]
                if b < lo[i]:
                    lo[i] = b
                t = b + (1 if i in axes else 0)
                if t > hi[i]:
                    hi[i] = t
        return tuple(int(v) for v in lo), tuple(int(v) for v in hi)

    def bbox_coords(self) -> tuple[np.ndarray, np.ndarray] | None:
        bb = self.bbox()
        if bb is None:
            return None
        return (np.ldexp(np.asarray(bb[0], float), -self.level), np.ldexp(np.asarray(bb[1], float), -self.level))

    def mass(self) -> float:
        vol = math.ldexp(1.0, -self.level * self.m)
        return math.fsum(abs(c) for c in self._terms.values()) * vol

    def boundary(self) -> "CubicalChain":
        if self.m == 0:
            raise PreconditionError("boundary of a 0-chain is undefined (degree underflow)")
        out: dict[Key, float] = {}
        for (base, axes), c in self._terms.items():
            for j, i in enumerate(axes):
                sub = axes[:j] + axes[j + 1:]
                s = c if j % 2 == 0 else -c
                front = base[:i] + (base[i] + 1,) + base[i + 1:]
                kf = (front, sub)
                kb = (base, sub)
                out[kf] = out.get(kf, 0.0) + s
                out[kb] = out.get(kb, 0.0) - s
        return CubicalChain(self.d, self.m - 1, self.level, out, _trusted=True)

    def normal_mass(self) -> float:
        if self.m == 0:
            return self.mass()
        return self.mass() + self.boundary().mass()

    def refine(self, target_level: int) -> "CubicalChain":
        if target_level < self.level:
            raise ConfigError(f"cannot refine level {self.level} chain to coarser level {target_level}")
        s = target_level - self.level
        if s == 0:
            return self
        n = 1 << s
        out: dict[Key, float] = {}
        offs_cache: dict[tuple[int, ...], list[tuple[int, ...]]] = {}
        for (base, axes), c in self._terms.items():
            offs = offs_cache.get(axes)
            if offs is None:
                ranges = [range(n) if i in axes else range(1) for i in range(self.d)]
                offs = list(itertools.product(*ranges))
                offs_cache[axes] = offs
            sb = tuple(b << s for b in base)
            for o in offs:
                out[(tuple(x + y for x, y in zip(sb, o)), axes)] = c
        return CubicalChain(self.d, self.m, target_level, out, _trusted=True)

    def to_simplicial(self) -> "SimplicialChain":
        """Kuhn triangulation: m! simplices per face, vertex order along the permutation path."""
        if not self._terms:
            return SimplicialChain.zero(self.d, self.m)
        verts = []
        coeffs = []
        h = math.ldexp(1.0, -self.level)
        perm_cache: dict[int, list[tuple[tuple[int, ...], int]]] = {}
        for (base, axes), c in self._terms.items():
            perms = perm_cache.get(self.m)
            if perms is None:
                perms = [(p, _perm_sign(p)) for p in itertools.permutations(range(self.m))]
                perm_cache[self.m] = perms
            for p, sg in perms:
                cur = list(base)
                path = [tuple(cur)]
                for j in p:
                    cur[axes[j]] += 1
                    path.append(tuple(cur))
                verts.append(path)
                coeffs.append(c * sg)
        v = np.asarray(verts, dtype=float) * h
        return SimplicialChain(self.d, self.m, v, np.asarray(coeffs, dtype=float))

    def to_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(bases (n,d) int64, axes (n,m) int64, coeffs (n,)) in insertion order."""
        n = len(self._terms)
        bases = np.zeros((n, self.d), dtype=np.int64)
        axes = np.zeros((n, self.m), dtype=np.int64)
        coeffs = np.zeros(n)
        for r, ((b, a), c) in enumerate(self._terms.items()):
            bases[r] = b
            axes[r] = a
            coeffs[r] = c
        return bases, axes, coeffs

    # serialization --------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "d": self.d,
            "m": self.m,
            "level": self.level,
            "terms": [
                {"base": list(b), "axes": list(a), "coeff": c} for (b, a), c in sorted(self._terms.items())
            ],
        }

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> "CubicalChain":
        try:
            d, m, level = int(obj["d"]), int(obj["m"]), int(obj["level"])
            terms: dict[Key, float] = {}
            for t in obj["terms"]:
                key = (tuple(t["base"]), tuple(t["axes"]))
                terms[key] = terms.get(key, 0.0) + float(t["coeff"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed cubical chain JSON: {exc}") from exc
        return cls(d, m, level, terms)


def _perm_sign(p: Iterable[int]) -> int:
    p = list(p)
    inv = sum(1 for i in range(len(p)) for j in range(i + 1, len(p)) if p[i] > p[j])
    return -1 if inv % 2 else 1


class SimplicialChain:
    """Weighted oriented m-simplices in R^d.

    ``verts`` has shape (n, m+1, d); ``coeffs`` has shape (n,).  The raw list
    may contain repeats; ``canonical()`` sorts vertices lexicographically
    (folding the permutation sign into the coefficient), merges duplicates and
    drops negligible coefficients.
    """

    __slots__ = ("d", "m", "verts", "coeffs")

    def __init__(self, d: int, m: int, verts, coeffs) -> None:
        _check_dims(d, m)
        v = np.array(verts, dtype=float)
        c = np.array(coeffs, dtype=float).reshape(-1)
        if v.size == 0:
            v = np.zeros((0, m + 1, d))
        if v.ndim != 3 or v.shape[1:] != (m + 1, d) or v.shape[0] != c.shape[0]:
            raise ConfigError(f"simplex array shape {v.shape} / coeffs {c.shape} inconsistent with d={d}, m={m}")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(c))):
            raise ConfigError("simplicial chain data must be finite")
        self.d = int(d)
        self.m = int(m)
        self.verts = v
        self.coeffs = c
        self.verts.flags.writeable = False
        self.coeffs.flags.writeable = False

    @classmethod
    def zero(cls, d: int, m: int) -> "SimplicialChain":
        return cls(d, m, np.zeros((0, m + 1, d)), np.zeros(0))

    @classmethod
    def from_list(cls, simplices: Iterable[tuple[Iterable[Iterable[float]], float]], d: int | None = None,
                  m: int | None = None) -> "SimplicialChain":
        simplices = list(simplices)
        if not simplices:
            if d is None or m is None:
                raise ConfigError("empty simplex list needs explicit d and m")
            return cls.zero(d, m)
        v = np.asarray([s[0] for s in simplices], dtype=float)
        c = np.asarray([s[1] for s in simplices], dtype=float)
        if v.ndim != 3:
            raise ConfigError("simplices must all have the same number of vertices")
        return cls(v.shape[2], v.shape[1] - 1, v, c)

    def __len__(self) -> int:
        return int(self.coeffs.shape[0])

    def __repr__(self) -> str:
        return f"SimplicialChain(d={self.d}, m={self.m}, nsimplices={len(self)})"

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if len(self) else 0.0

    # linear structure -----------------------------------------------------

    def __add__(self, other: "SimplicialChain") -> "SimplicialChain":
        if isinstance(other, CubicalChain):
            other = other.to_simplicial()
        if not isinstance(other, SimplicialChain):
            return NotImplemented
        if (self.d, self.m) != (other.d, other.m):
            raise ConfigError("cannot combine chains of different ambient dimension or degree")
        return SimplicialChain(
            self.d, self.m, np.concatenate([self.verts, other.verts]), np.concatenate([self.coeffs, other.coeffs])
        )

    def __neg__(self) -> "SimplicialChain":
        return self.scale(-1.0)

    def __sub__(self, other: "SimplicialChain") -> "SimplicialChain":
        if isinstance(other, CubicalChain):
            other = other.to_simplicial()
        return self + (-other)

    def scale(self, c: float) -> "SimplicialChain":
        return SimplicialChain(self.d, self.m, self.verts, self.coeffs * float(c))

    def __mul__(self, c: float) -> "SimplicialChain":
        return self.scale(c)

    __rmul__ = __mul__

    def canonical(self, rtol: float = CANON_RTOL) -> "SimplicialChain":
        n, p, d = self.verts.shape
        if n == 0:
            return self
        v = self.verts + 0.0  # folds -0.0 into 0.0 so byte keys agree
        c = self.coeffs.copy()
        if p > 1:
            a = v[:, :, None, :]
            b = v[:, None, :, :]
            less = np.zeros((n, p, p), dtype=bool)
            for k in range(d - 1, -1, -1):
                less = (a[..., k] < b[..., k]) | ((a[..., k] == b[..., k]) & less)
            equal = np.all(a == b, axis=-1)
            dup = (equal.sum(axis=(1, 2)) > p)
            rank = less.sum(axis=1)  # number of vertices strictly smaller than vertex i
            order = np.argsort(rank, axis=1, kind="stable")
            v = np.take_along_axis(v, order[:, :, None], axis=1)
            inv = np.zeros(n, dtype=np.int64)
            for i in range(p):
                for j in range(i + 1, p):
                    inv += rank[:, i] > rank[:, j]
            c = np.where(inv % 2 == 1, -c, c)
            c[dup] = 0.0
        keys = np.ascontiguousarray(v.reshape(n, p * d)).view(np.dtype((np.void, 8 * p * d))).reshape(n)
        _, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
        summed = np.bincount(inverse.reshape(-1), weights=c, minlength=len(first))
        uv = v[first]
        scale = np.max(np.abs(summed)) if summed.size else 0.0
        keep = np.abs(summed) > rtol * scale
        keep &= summed != 0.0
        return SimplicialChain(self.d, self.m, uv[keep], summed[keep])

    def allclose(self, other: "SimplicialChain", rtol: float = CANON_RTOL, atol: float = 0.0) -> bool:
        if isinstance(other, CubicalChain):
            other = other.to_simplicial()
        a = self.canonical(0.0)
        b = other.canonical(0.0)
        scale = max(a.max_abs(), b.max_abs())
        diff = (a - b).canonical(0.0)
        return bool(np.all(np.abs(diff.coeffs) <= rtol * scale + atol))

    # geometry -------------------------------------------------------------

    def volumes(self) -> np.ndarray:
        """Unsigned m-volume of each simplex."""
        n = len(self)
        if self.m == 0:
            return np.ones(n)
        e = self.verts[:, 1:, :] - self.verts[:, :1, :]
        if self.m == self.d:
            vol = np.abs(np.linalg.det(e)) if n else np.zeros(0)
        else:
            g = np.einsum("nik,njk->nij", e, e)
            vol = np.sqrt(np.maximum(np.linalg.det(g), 0.0)) if n else np.zeros(0)
        return vol / math.factorial(self.m)

    def mass(self) -> float:
        ch = self.canonical()
        if len(ch) == 0:
            return 0.0
        return math.fsum(np.abs(ch.coeffs) * ch.volumes())

    def boundary(self) -> "SimplicialChain":
        if self.m == 0:
            raise PreconditionError("boundary of a 0-chain is undefined (degree underflow)")
        n, p, d = self.verts.shape
        parts_v = []
        parts_c = []
        for i in range(p):
            idx = [j for j in range(p) if j != i]
            parts_v.append(self.verts[:, idx, :])
            parts_c.append(self.coeffs * (1.0 if i % 2 == 0 else -1.0))
        return SimplicialChain(d, self.m - 1, np.concatenate(parts_v), np.concatenate(parts_c)).canonical()

    def normal_mass(self) -> float:
        if self.m == 0:
            return self.mass()
        return self.mass() + self.boundary().mass()

    def bbox_coords(self) -> tuple[np.ndarray, np.ndarray] | None:
        if len(self) == 0:
            return None
        flat = self.verts.reshape(-1, self.d)
        return flat.min(axis=0), flat.max(axis=0)

    def map_vertices(self, fn, dout: int | None = None) -> "SimplicialChain":
        """Apply ``fn`` (array (N,d) -> (N,d')) to every vertex; coefficients are kept."""
        n, p, d = self.verts.shape
        if n == 0:
            return SimplicialChain.zero(dout if dout is not None else d, self.m)
        img = np.asarray(fn(self.verts.reshape(n * p, d)), dtype=float)
        if img.ndim == 1:
            img = img[:, None]
        if img.shape[0] != n * p:
            raise ConfigError("vertex map returned the wrong number of points")
        if not np.all(np.isfinite(img)):
            raise ConfigError("vertex map produced non-finite values")
        dd = img.shape[1]
        return SimplicialChain(dd, self.m, img.reshape(n, p, dd), self.coeffs)

    # serialization --------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "d": self.d,
            "m": self.m,
            "simplices": [
                {"verts": self.verts[i].tolist(), "coeff": float(self.coeffs[i])} for i in range(len(self))
            ],
        }

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> "SimplicialChain":
        try:
            d, m = int(obj["d"]), int(obj["m"])
            sims = [(s["verts"], float(s["coeff"])) for s in obj["simplices"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed simplicial chain JSON: {exc}") from exc
        if not sims:
            return cls.zero(d, m)
        out = cls.from_list(sims)
        if (out.d, out.m) != (d, m):
            raise ConfigError("simplex vertex arrays disagree with declared d, m")
        return out


Chain = CubicalChain | SimplicialChain


# functional interface -----------------------------------------------------

def boundary(chain: Chain) -> Chain:
    return chain.boundary()


def mass(chain: Chain) -> float:
    return chain.mass()


def normal_mass(chain: Chain) -> float:
    return chain.normal_mass()


def refine(chain: CubicalChain, target_level: int) -> CubicalChain:
    if not isinstance(chain, CubicalChain):
        raise ConfigError("refine applies to cubical chains only")
    return chain.refine(target_level)


def cone(apex, chain: Chain) -> SimplicialChain:
    """Join with ``apex``: each simplex [v0..vm] becomes [apex, v0..vm].

    The boundary satisfies d(a x T) = T - a x dT for m >= 1 and
    d(a x T) = T - T(1)[[a]] for m = 0, where T(1) is the total weight.
    """
    if isinstance(chain, CubicalChain):
        chain = chain.to_simplicial()
    a = np.asarray(apex, dtype=float).reshape(-1)
    if a.shape[0] != chain.d:
        raise ConfigError(f"apex dimension {a.shape[0]} does not match chain ambient dimension {chain.d}")
    if chain.m + 1 > chain.d:
        raise ConfigError("cone of a top-dimensional chain would exceed the ambient dimension")
    n = len(chain)
    av = np.broadcast_to(a, (n, 1, chain.d))
    return SimplicialChain(chain.d, chain.m + 1, np.concatenate([av, chain.verts], axis=1), chain.coeffs)


def cone_mass_constant(m: int) -> float:
    """C in M(a x T) <= C diam(K) M(T) for an m-chain T: a cone over an m-simplex
    has volume dist(a, plane) * vol / (m + 1)."""
    return 1.0 / (m + 1)


def as_simplicial(chain: Chain) -> SimplicialChain:
    return chain.to_simplicial() if isinstance(chain, CubicalChain) else chain


def chain_from_json(obj: Mapping | str) -> Chain:
    if isinstance(obj, str):
        obj = json.loads(obj)
    if "terms" in obj:
        return CubicalChain.from_json_dict(obj)
    if "simplices" in obj:
        return SimplicialChain.from_json_dict(obj)
    raise ConfigError("chain JSON needs either 'terms' or 'simplices'")


def chain_to_json(chain: Chain) -> str:
    return json.dumps(chain.to_json_dict())


def load_chain(path) -> Chain:
    try:
        with open(path) as fh:
            return chain_from_json(json.load(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read chain file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"chain file {path} is not valid JSON: {exc}") from exc


def save_chain(chain: Chain, path) -> None:
    with open(path, "w") as fh:
        fh.write(chain_to_json(chain))
        fh.write("\n")


# decompositions -------------------------------------------------------------

@dataclass
class PartStats:
    mass: float
    boundary_mass: float
    flat: float

    @property
    def normal(self) -> float:
        return self.mass + self.boundary_mass


@dataclass
class Decomposition:
    """Witness T = sum_k T_k with cached (M, M(d), F) per part.

    ``cost`` is sum N^(1-alpha) F^alpha; ``tilde_cost`` is sum M(d)^(1-alpha) M^alpha.
    """

    parts: list
    alpha: float
    stats: list[PartStats]
    box: tuple[np.ndarray, np.ndarray] | None = None
    notes: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if len(self.parts) != len(self.stats):
            raise ConfigError("one stats record per part is required")
        if self.box is not None:
            lo, hi = (np.asarray(x, float) for x in self.box)
            for p in self.parts:
                bb = p.bbox_coords()
                if bb is not None and (np.any(bb[0] < lo - 1e-12) or np.any(bb[1] > hi + 1e-12)):
                    raise ConfigError("decomposition part escapes the declared common box")

    def terms(self) -> list[float]:
        a = self.alpha
        return [_pow(s.normal, 1 - a) * _pow(s.flat, a) for s in self.stats]

    def tilde_terms(self) -> list[float]:
        a = self.alpha
        return [_pow(s.boundary_mass, 1 - a) * _pow(s.mass, a) for s in self.stats]

    @property
    def cost(self) -> float:
        return math.fsum(self.terms())

    @property
    def tilde_cost(self) -> float:
        return math.fsum(self.tilde_terms())

    def total(self):
        """Sum of the parts as one chain."""
        if not self.parts:
            raise ConfigError("empty decomposition")
        out = self.parts[0]
        for p in self.parts[1:]:
            out = out + p
        return out


def _pow(x: float, e: float) -> float:
    # 0**0 is taken as 1 so that alpha in {0, 1} reproduces N and F exactly
    if e == 0.0:
        return 1.0
    return x ** e
