"""Forms paired with chains, Stokes checks, Young and Züst Riemann sums, and
the paraproduct wedge product of Hölder forms.

A SampledForm is a finite sum of terms

    c_1 ... c_p  D_1 ^ ... ^ D_m,

with c_j scalar Hölder functions (or constants) and each D_i either a
coordinate differential dx_i or dg for a Hölder function g.  Its stage n
replaces every c_j and g by its mollification at scale 2^-n; stages are
smooth forms with exact first derivatives, so d(stage) is exact as well.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import ConfigError, PreconditionError
from .fractal import cauchy_verdict
from .grid import CubicalChain, Decomposition, SimplicialChain
from .holder import HolderFunction, MollifiedFunction, mollify

Coef = Union[float, HolderFunction]
Diff = Union[int, HolderFunction]


def multi_indices(d: int, m: int) -> list[tuple[int, ...]]:
    return list(itertools.combinations(range(d), m))


# smooth forms ----------------------------------------------------------------

class SmoothForm:
    """Smooth m-form on R^d given by component and exterior-derivative evaluators.

    ``comps(x)`` returns (n, C(d, m)) in lexicographic multi-index order and
    ``dcomps(x)`` the components of the exterior derivative."""

    def __init__(self, d: int, m: int, comps, dcomps=None) -> None:
        self.d, self.m = d, m
        self._comps = comps
        self._dcomps = dcomps

    def comps(self, x: np.ndarray) -> np.ndarray:
        return self._comps(x)

    def dcomps(self, x: np.ndarray) -> np.ndarray:
        if self._dcomps is None:
            raise PreconditionError("this form has no exterior derivative evaluator")
        return self._dcomps(x)

    def d_form(self) -> "SmoothForm":
        if self.m >= self.d:
            return SmoothForm(self.d, self.m + 1, lambda x: np.zeros((x.shape[0], 0)),
                              lambda x: np.zeros((x.shape[0], 0)))
        return SmoothForm(self.d, self.m + 1, self.dcomps, lambda x: np.zeros((x.shape[0], len(multi_indices(self.d, self.m + 2)))))

    def __add__(self, other: "SmoothForm") -> "SmoothForm":
        _same(self, other)
        dc = None
        if self._dcomps is not None and other._dcomps is not None:
            dc = lambda x: self.dcomps(x) + other.dcomps(x)  # noqa: E731
        return SmoothForm(self.d, self.m, lambda x: self.comps(x) + other.comps(x), dc)

    def __sub__(self, other: "SmoothForm") -> "SmoothForm":
        return self + other.scale(-1.0)

    def scale(self, c: float) -> "SmoothForm":
        dc = (lambda x: c * self.dcomps(x)) if self._dcomps is not None else None
        return SmoothForm(self.d, self.m, lambda x: c * self.comps(x), dc)


def _same(a, b) -> None:
    if (a.d, a.m) != (b.d, b.m):
        raise ConfigError("forms of different dimension or degree")


def _wedge_tables(d: int, m: int, k: int):
    """For each output multi-index K (size m + k): list of (i, j, sign) with I u J = K."""
    A = {I: i for i, I in enumerate(multi_indices(d, m))}
    B = {J: j for j, J in enumerate(multi_indices(d, k))}
    out = []
    for K in multi_indices(d, m + k):
        entries = []
        for I in itertools.combinations(K, m):
            J = tuple(x for x in K if x not in I)
            perm = list(I) + list(J)
            inv = sum(1 for p in range(len(perm)) for q in range(p + 1, len(perm)) if perm[p] > perm[q])
            entries.append((A[I], B[J], -1.0 if inv % 2 else 1.0))
        out.append(entries)
    return out


def wedge_values(a: np.ndarray, b: np.ndarray, d: int, m: int, k: int) -> np.ndarray:
    """Pointwise wedge of component arrays (n, C(d,m)) and (n, C(d,k))."""
    table = _wedge_tables(d, m, k)
    out = np.zeros((a.shape[0], len(table)))
    for K, entries in enumerate(table):
        for i, j, s in entries:
            out[:, K] += s * a[:, i] * b[:, j]
    return out


def wedge_smooth(a: SmoothForm, b: SmoothForm) -> SmoothForm:
    """Pointwise wedge with d(a ^ b) = da ^ b + (-1)^m a ^ db."""
    if a.d != b.d:
        raise ConfigError("forms live in different dimensions")
    d, m, k = a.d, a.m, b.m
    if m + k > d:
        return SmoothForm(d, m + k, lambda x: np.zeros((x.shape[0], 0)), lambda x: np.zeros((x.shape[0], 0)))

    def comps(x):
        return wedge_values(a.comps(x), b.comps(x), d, m, k)

    def dcomps(x):
        if m + k + 1 > d:
            return np.zeros((x.shape[0], 0))
        s = -1.0 if m % 2 else 1.0
        return wedge_values(a.dcomps(x), b.comps(x), d, m + 1, k) + s * wedge_values(a.comps(x), b.dcomps(x), d, m, k + 1)

    return SmoothForm(d, m + k, comps, dcomps)


# sampled (Hölder) forms ------------------------------------------------------

@dataclass(frozen=True)
class FormTerm:
    coefs: tuple
    diffs: tuple
    weight: float = 1.0


def _exponent(x) -> float:
    return 1.0 if not isinstance(x, HolderFunction) else x.gamma


@dataclass
class SampledForm:
    """Sum of terms weight * prod(coefs) * D_1 ^ ... ^ D_m on R^d."""

    d: int
    m: int
    terms: list[FormTerm] = field(default_factory=list)
    alpha: float | None = None

    def __post_init__(self) -> None:
        for t in self.terms:
            if len(t.diffs) != self.m:
                raise ConfigError("every term needs m differentials")
            for D in t.diffs:
                if isinstance(D, HolderFunction):
                    if D.d != self.d or D.dout != 1:
                        raise ConfigError("dg needs a scalar function on R^d")
                elif not (isinstance(D, (int, np.integer)) and 0 <= D < self.d):
                    raise ConfigError(f"bad coordinate differential {D!r}")
            for c in t.coefs:
                if isinstance(c, HolderFunction) and (c.d != self.d or c.dout != 1):
                    raise ConfigError("coefficients must be scalar functions on R^d")
        if self.alpha is None:
            self.alpha = self.declared_alpha()

    @classmethod
    def function(cls, g: Coef, d: int) -> "SampledForm":
        return cls(d, 0, [FormTerm((g,), ())])

    @classmethod
    def constant(cls, d: int, m: int, comps) -> "SampledForm":
        """Constant form from its C(d, m) components."""
        comps = np.asarray(comps, dtype=float).reshape(-1)
        idx = multi_indices(d, m)
        if comps.size != len(idx):
            raise ConfigError("wrong number of components")
        return cls(d, m, [FormTerm((float(c),), tuple(I)) for c, I in zip(comps, idx) if c != 0.0])

    @classmethod
    def exact(cls, gs, d: int, coef: Coef = 1.0) -> "SampledForm":
        """coef dg^1 ^ ... ^ dg^k."""
        return cls(d, len(gs), [FormTerm((coef,), tuple(gs))])

    def declared_alpha(self) -> float:
        """Charge order: for c dg^1 ^ ... ^ dg^k the Young rule sum(alpha) - k."""
        if not self.terms:
            return 1.0
        vals = []
        for t in self.terms:
            a = min([_exponent(c) for c in t.coefs] + [1.0])
            ks = [D for D in t.diffs if isinstance(D, HolderFunction)]
            vals.append(a + sum(g.gamma for g in ks) - len(ks))
        return min(vals)

    def __add__(self, other: "SampledForm") -> "SampledForm":
        _same(self, other)
        return SampledForm(self.d, self.m, self.terms + other.terms, min(self.alpha, other.alpha))

    def scale(self, c: float) -> "SampledForm":
        return SampledForm(self.d, self.m, [FormTerm(t.coefs, t.diffs, c * t.weight) for t in self.terms], self.alpha)

    def __neg__(self) -> "SampledForm":
        return self.scale(-1.0)

    def wedge(self, other: "SampledForm") -> "SampledForm":
        """Formal wedge (stages multiply the mollified factors)."""
        if self.d != other.d or self.m + other.m > self.d:
            raise ConfigError("incompatible degrees for a wedge")
        terms = [FormTerm(a.coefs + b.coefs, a.diffs + b.diffs, a.weight * b.weight)
                 for a in self.terms for b in other.terms]
        return SampledForm(self.d, self.m + other.m, terms, self.alpha + other.alpha - 1.0)

    def exterior(self) -> "SampledForm":
        """d of the form: d(c1..cp D) = sum_j (prod_{i != j} c_i) dc_j ^ D."""
        if self.m >= self.d:
            return SampledForm(self.d, self.m + 1, [], self.alpha)
        terms = []
        for t in self.terms:
            for j, c in enumerate(t.coefs):
                if isinstance(c, HolderFunction):
                    rest = t.coefs[:j] + t.coefs[j + 1:]
                    terms.append(FormTerm(rest if rest else (1.0,), (c,) + t.diffs, t.weight))
        return SampledForm(self.d, self.m + 1, terms, self.alpha)

    @property
    def smooth(self) -> bool:
        return all(_is_smooth(c) for t in self.terms for c in t.coefs + t.diffs if isinstance(c, HolderFunction))

    def stage(self, n: int | None) -> SmoothForm:
        """omega_n = omega * Phi_{2^-n}; ``None`` evaluates the raw form (smooth factors only
        need derivatives, Hölder coefficients are evaluated directly)."""
        eps = None if n is None else 2.0 ** -n
        cache: dict[int, object] = {}

        def smoothed(g):
            key = id(g)
            if key not in cache:
                cache[key] = g if eps is None else mollify(g, eps)
            return cache[key]

        d, m = self.d, self.m
        idx = multi_indices(d, m)
        idx1 = multi_indices(d, m + 1)

        def value(c, x):
            if not isinstance(c, HolderFunction):
                return np.full(x.shape[0], float(c))
            return smoothed(c).evaluate(x)[:, 0]

        def grad(c, x):
            if not isinstance(c, HolderFunction):
                return np.zeros((x.shape[0], d))
            return _gradient(smoothed(c), x)

        def rows_of(diffs, x):
            R = np.zeros((x.shape[0], len(diffs), d))
            for r, D in enumerate(diffs):
                if isinstance(D, HolderFunction):
                    R[:, r, :] = grad(D, x)
                else:
                    R[:, r, int(D)] = 1.0
            return R

        def minors(R, index):
            out = np.zeros((R.shape[0], len(index)))
            for k, K in enumerate(index):
                out[:, k] = np.linalg.det(R[:, :, list(K)]) if len(K) else 1.0
            return out

        def comps(x):
            x = np.asarray(x, dtype=float).reshape(-1, d)
            out = np.zeros((x.shape[0], len(idx)))
            for t in self.terms:
                c = np.full(x.shape[0], t.weight)
                for cf in t.coefs:
                    c = c * value(cf, x)
                out += c[:, None] * minors(rows_of(t.diffs, x), idx)
            return out

        def dcomps(x):
            x = np.asarray(x, dtype=float).reshape(-1, d)
            out = np.zeros((x.shape[0], len(idx1)))
            if m + 1 > d:
                return out
            for t in self.terms:
                vals = [value(cf, x) for cf in t.coefs]
                R = rows_of(t.diffs, x)
                for j, cf in enumerate(t.coefs):
                    if not isinstance(cf, HolderFunction):
                        continue
                    c = np.full(x.shape[0], t.weight)
                    for i, v in enumerate(vals):
                        if i != j:
                            c = c * v
                    R1 = np.concatenate([grad(cf, x)[:, None, :], R], axis=1)
                    out += c[:, None] * minors(R1, idx1)
            return out

        return SmoothForm(d, m, comps, dcomps)


def _is_smooth(g: HolderFunction) -> bool:
    return (g.ridges is not None and len(g.ridges) == 0) or g.jac is not None


def _gradient(g, x: np.ndarray) -> np.ndarray:
    if isinstance(g, MollifiedFunction):
        return g.jacobian(x)[:, 0, :]
    if g.ridges is not None and len(g.ridges) == 0:
        return np.broadcast_to(g.A[0], (x.shape[0], g.d)).copy()
    if g.jac is not None:
        return g.jac(x)[:, 0, :]
    raise PreconditionError("dg of a non-smooth function needs a mollified stage")


# pairing with chains ---------------------------------------------------------------

_GAUSS = np.array([0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0)])


def _as_form(omega) -> SmoothForm:
    if isinstance(omega, SmoothForm):
        return omega
    if isinstance(omega, SampledForm):
        return omega.stage(None)
    raise ConfigError("expected a SampledForm or a SmoothForm")


def _cubical_pairing(form: SmoothForm, T: CubicalChain, derivative: bool) -> float:
    bases, axes, coeffs = T.to_arrays()
    if coeffs.size == 0:
        return 0.0
    h = math.ldexp(1.0, -T.level)
    m = T.m
    index = {I: i for i, I in enumerate(multi_indices(T.d, m))}
    nodes = list(itertools.product(_GAUSS, repeat=m))
    total = []
    for a in sorted(set(map(tuple, axes.tolist()))):
        sel = np.all(axes == np.asarray(a, dtype=np.int64), axis=1) if m else np.ones(coeffs.size, bool)
        base = bases[sel] * h
        acc = np.zeros(int(sel.sum()))
        for node in nodes:
            x = base.astype(float).copy()
            for ax, t in zip(a, node):
                x[:, ax] += t * h
            vals = form.dcomps(x) if derivative else form.comps(x)
            acc += vals[:, index[a]]
        total.append(coeffs[sel] * acc / len(nodes) * h ** m)
    return math.fsum(np.concatenate(total))


# quadrature on the reference m-simplex (barycentric points, weights summing to 1)
_SIMPLEX_RULES = {
    0: (np.array([[1.0]]), np.array([1.0])),
    1: (np.array([[1 - _GAUSS[0], _GAUSS[0]], [1 - _GAUSS[1], _GAUSS[1]]]), np.array([0.5, 0.5])),
    2: (np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]), np.array([1, 1, 1]) / 3.0),
}


def _simplicial_pairing(form: SmoothForm, T: SimplicialChain) -> float:
    m = T.m
    if len(T) == 0:
        return 0.0
    if m not in _SIMPLEX_RULES:
        pts = np.full((1, m + 1), 1.0 / (m + 1))
        wts = np.array([1.0])
    else:
        pts, wts = _SIMPLEX_RULES[m]
    v = T.verts
    E = v[:, 1:, :] - v[:, :1, :]  # (n, m, d) edge vectors
    idx = multi_indices(T.d, m)
    mins = np.stack([np.linalg.det(E[:, :, list(K)]) if m else np.ones(len(T)) for K in idx], axis=1)
    acc = np.zeros(len(T))
    for p, w in zip(pts, wts):
        x = np.einsum("j,njd->nd", p, v)
        acc += w * np.einsum("nk,nk->n", form.comps(x), mins)
    return math.fsum(T.coeffs * acc / math.factorial(m))


def form_eval(omega, T, min_level: int | None = None) -> float:
    """<omega, T> = int <omega(x), T->(x)> d||T||.

    Cubical faces use the 2-point Gauss rule per axis (exact for constant and
    multilinear components); simplices use a degree-2 rule.  ``min_level``
    refines cubical chains first, for accuracy on oscillating forms."""
    form = _as_form(omega)
    if isinstance(T, Decomposition):
        return math.fsum(form_eval(form, p, min_level) for p in T.parts)
    if isinstance(T, (list, tuple)):
        return math.fsum(form_eval(form, p, min_level) for p in T)
    if form.m != T.m or form.d != T.d:
        raise ConfigError(f"form of degree {form.m} in R^{form.d} cannot be paired with a "
                          f"{T.m}-chain in R^{T.d}")
    if isinstance(T, CubicalChain):
        if min_level is not None and T.level < min_level:
            T = T.refine(min_level)
        return _cubical_pairing(form, T, False)
    return _simplicial_pairing(form, T)


def _boundary(T):
    if isinstance(T, Decomposition):
        return [p.boundary() for p in T.parts]
    if isinstance(T, (list, tuple)):
        return [p.boundary() for p in T]
    return T.boundary()


def _fd_derivative(form: SmoothForm, h: float) -> SmoothForm:
    """Exterior derivative by central differences of the components at step h."""
    d, m = form.d, form.m
    idx = multi_indices(d, m)
    pos = {I: i for i, I in enumerate(idx)}
    idx1 = multi_indices(d, m + 1)

    def dcomps(x):
        x = np.asarray(x, dtype=float).reshape(-1, d)
        grads = []
        for i in range(d):
            e = np.zeros(d)
            e[i] = h
            grads.append((form.comps(x + e) - form.comps(x - e)) / (2 * h))
        out = np.zeros((x.shape[0], len(idx1)))
        for k, K in enumerate(idx1):
            for j, i in enumerate(K):
                I = K[:j] + K[j + 1:]
                out[:, k] += (-1.0) ** j * grads[i][:, pos[I]]
        return out

    return SmoothForm(d, m, form.comps, dcomps)


@dataclass
class StokesResult:
    lhs: float  # <d omega, T>
    rhs: float  # <omega, dT>
    gap: float


def stokes_check(omega, T, level: int | None = None, exact: bool | None = None) -> StokesResult:
    """<d omega, T> against <omega, dT>.

    Smooth stages carry exact derivatives; otherwise components are
    differentiated by central differences at step 2^-level.  Cubical chains
    are refined to ``level`` for the quadrature."""
    form = _as_form(omega)
    if exact is None:
        exact = isinstance(omega, SmoothForm) or (isinstance(omega, SampledForm) and omega.smooth)
    if not exact:
        if level is None:
            raise ConfigError("finite differences need a level")
        form = _fd_derivative(form, math.ldexp(1.0, -level))
    dform = SmoothForm(form.d, form.m + 1, form.dcomps)
    lhs = form_eval(dform, T, level)
    rhs = form_eval(form, _boundary(T), level)
    return StokesResult(lhs, rhs, abs(lhs - rhs))


# Young and Züst Riemann sums -------------------------------------------------

@dataclass
class RiemannSeries:
    levels: list[int]
    sums: list[float]
    increments: list[float]
    ratio: float  # geometric fit of the increments
    expected_ratio: float
    verdict: str
    error: float  # tail estimate of the finest sum

    @property
    def value(self) -> float:
        return self.sums[-1]


def _series(levels, sums, expected: float, fit_from: int = 3) -> RiemannSeries:
    inc = [abs(b - a) for a, b in zip(sums[:-1], sums[1:])]
    ratio, tail, verdict = (math.nan, math.inf, "undetermined")
    if len(inc) >= 3:
        ratio, tail, verdict = cauchy_verdict(inc)
        tail = inc[-1] / (1.0 - ratio) if verdict == "converging" else math.inf
        use = np.asarray(inc[fit_from - 1:] if len(inc) - fit_from + 1 >= 3 else inc)
        ks = np.arange(use.size)
        ok = use > 0
        if ok.sum() >= 2:
            ratio = float(2.0 ** np.polyfit(ks[ok], np.log2(use[ok]), 1)[0])
    if max(inc[-3:], default=1.0) <= 1e-13 * max(1.0, abs(sums[-1])):
        verdict, tail = "converging", max(inc[-3:], default=0.0)
    return RiemannSeries(list(levels), list(sums), inc, ratio, expected, verdict, tail)


def young_1d(g0: HolderFunction, g1: HolderFunction, level: int, start: int = 1) -> RiemannSeries:
    """Left-point sums sum_i g0(t_i)(g1(t_{i+1}) - g1(t_i)) on the dyadic grids of [0, 1]."""
    for g in (g0, g1):
        if g.d != 1 or g.dout != 1:
            raise ConfigError("young_1d needs scalar functions of one variable")
    if level < start:
        raise ConfigError("level must be at least the start level")
    t = np.linspace(0.0, 1.0, (1 << level) + 1)
    a = g0.evaluate(t)[:, 0]
    b = g1.evaluate(t)[:, 0]
    levels, sums = [], []
    for L in range(start, level + 1):
        s = 1 << (level - L)
        aa, bb = a[::s], b[::s]
        sums.append(math.fsum(aa[:-1] * np.diff(bb)))
        levels.append(L)
    expected = 2.0 ** -(g0.gamma + g1.gamma - 1.0)
    return _series(levels, sums, expected)


def zust_integral(gs, level: int, start: int = 1) -> RiemannSeries:
    """sum over dyadic L-cubes Q of g^0(x_Q) det[g^i(x_Q + 2^-L e_j) - g^i(x_Q)]_{ij}
    with x_Q the lower corner, for L = start..level."""
    gs = list(gs)
    d = len(gs) - 1
    if d < 1:
        raise ConfigError("zust_integral needs at least two functions")
    for g in gs:
        if g.d != d or g.dout != 1:
            raise ConfigError(f"all functions must be scalar on [0, 1]^{d} (got {len(gs)} functions)")
    if (1 << level) ** d > 1 << 24:
        raise ConfigError("level too fine for a full grid evaluation")
    n = (1 << level) + 1
    ax = np.linspace(0.0, 1.0, n)
    mesh = np.meshgrid(*([ax] * d), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    vals = [g.evaluate(pts)[:, 0].reshape((n,) * d) for g in gs]
    levels, sums = [], []
    for L in range(start, level + 1):
        s = 1 << (level - L)
        sub = [v[(slice(None, None, s),) * d] for v in vals]
        corner = tuple(slice(0, -1) for _ in range(d))
        M = np.empty(sub[0][corner].shape + (d, d))
        for i in range(1, d + 1):
            for j in range(d):
                sl = tuple(slice(1, None) if k == j else slice(0, -1) for k in range(d))
                M[..., i - 1, j] = sub[i][sl] - sub[i][corner]
        dets = np.linalg.det(M)
        sums.append(math.fsum((sub[0][corner] * dets).ravel()))
        levels.append(L)
    expected = 2.0 ** -(sum(g.gamma for g in gs) - d)
    return _series(levels, sums, expected)


# wedge -------------------------------------------------------------------------

@dataclass
class WedgeSeries:
    omega: SampledForm
    eta: SampledForm
    alpha: float
    beta: float
    partial_sums: list[float]
    terms: list[float]  # term_0 = <w_0 ^ e_0, T>, term_n (n >= 1) = series term n - 1
    envelope: float  # K with |term_n| <= K 2^{n(1 - alpha - beta)}, n >= 1
    tail: float
    n_used: int
    notes: dict = field(default_factory=dict)

    @property
    def value(self) -> float:
        return self.partial_sums[-1]


def _pair(form: SmoothForm, T, n: int) -> float:
    return form_eval(form, T, min_level=n + 2)


def wedge_eval(omega: SampledForm, eta: SampledForm, T, n_max: int = 8, tol: float = 1e-3,
               n_min: int = 3) -> WedgeSeries:
    """Partial sums of w_0 ^ e_0 + sum_n (w_{n+1} ^ (e_{n+1} - e_n) + (w_{n+1} - w_n) ^ e_n)
    paired with T, where w_n, e_n are the stage-n mollifications.

    Stops at n_max or once n >= n_min and the envelope tail is below tol."""
    a, b = omega.alpha, eta.alpha
    if not a + b > 1.0:
        raise PreconditionError(f"the wedge needs alpha + beta > 1, got {a} + {b}")
    if omega.d != eta.d:
        raise ConfigError("forms live in different dimensions")
    deg = T.parts[0].m if isinstance(T, Decomposition) else T.m
    if omega.m + eta.m != deg:
        raise ConfigError(f"degrees {omega.m} + {eta.m} do not match the chain degree {deg}")
    r = 2.0 ** (1.0 - a - b)
    w_prev, e_prev = omega.stage(0), eta.stage(0)
    first = _pair(wedge_smooth(w_prev, e_prev), T, 0)
    terms, sums = [first], [first]
    K, tail = 0.0, math.inf
    n_used = 0
    for n in range(0, n_max):
        w, e = omega.stage(n + 1), eta.stage(n + 1)
        term = _pair(wedge_smooth(w, e - e_prev) + wedge_smooth(w - w_prev, e_prev), T, n + 1)
        terms.append(term)
        sums.append(sums[-1] + term)
        K = max(K, abs(term) / r ** n)
        tail = K * r ** (n + 1) / (1.0 - r)
        n_used = n + 1
        w_prev, e_prev = w, e
        if n + 1 >= n_min and tail < tol:
            break
    # the bracket [value - tail, value + tail] must contain the previous partial sum
    tail = max(tail, abs(terms[-1]))
    return WedgeSeries(omega, eta, a, b, sums, terms, K, tail, n_used,
                       {"ratio": r, "telescoped": _pair(wedge_smooth(w_prev, e_prev), T, n_used)})


def leibniz_check(omega: SampledForm, eta: SampledForm, T, n_max: int = 8, tol: float = 1e-3) -> dict:
    """<w ^ e, dT> - <dw ^ e, T> - (-1)^m <w ^ de, T> with each wedge from wedge_eval."""
    dT = _boundary(T)
    if isinstance(dT, list):
        raise ConfigError("leibniz_check needs a single chain")
    lhs = wedge_eval(omega, eta, dT, n_max, tol)
    terms = []
    gap = lhs.value
    err = lhs.tail
    dw = omega.exterior()
    if dw.terms and omega.m + 1 + eta.m <= omega.d:
        A = wedge_eval(dw, eta, T, n_max, tol)
        gap -= A.value
        err += A.tail
        terms.append(A.value)
    de = eta.exterior()
    if de.terms and omega.m + eta.m + 1 <= omega.d:
        B = wedge_eval(omega, de, T, n_max, tol)
        s = -1.0 if omega.m % 2 else 1.0
        gap -= s * B.value
        err += B.tail
        terms.append(s * B.value)
    return {"gap": abs(gap), "tolerance": err, "boundary_term": lhs.value, "terms": terms}
