"""Hölder test maps, the fixed mollifier and mollified approximations.

A HolderFunction maps a box K in R^d to R^d'.  Most test maps are
separable: an affine part plus finitely many ridge terms coef * g(x_i) put
in output coordinate ``out``, with g a one-dimensional profile.  For those,
convolution with the radial bump reduces to one-dimensional convolution with
its marginal, done exactly on the piecewise-linear interpolant of g, so that
value and gradient of the mollified map are exact derivatives of each other.

Outside K profiles are continued by projecting their argument onto the
profile interval (constant continuation); this extension keeps both the
exponent and the constant.  Affine parts extend themselves.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .errors import ConfigError, PreconditionError
from .sobolev import GridFunction

TABLE_POINTS = 1024
NODES_PER_EPS = 32  # profile interpolation nodes per mollifier radius
GENERIC_NODES = 8


# mollifier -------------------------------------------------------------------

def _bump(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = r < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


class Mollifier:
    """Phi(x) = c_d exp(-1 / (1 - |x|^2)) on |x| < 1, tabulated radially.

    The radial profile and the one-dimensional marginal are cubic splines on
    1024 points of [0, 1]; evaluation always goes through |x|, so evenness is
    exact.  Both are normalized to unit integral through the spline itself."""

    def __init__(self, d: int) -> None:
        if d not in (1, 2, 3):
            raise ConfigError("the mollifier is tabulated for d in {1, 2, 3}")
        self.d = d
        r = np.linspace(0.0, 1.0, TABLE_POINTS)
        radial = CubicSpline(r, _bump(r))
        # normalization: integral over R^d = |S^{d-1}| int_0^1 phi(r) r^(d-1) dr
        sphere = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
        mass = integrate.quad(lambda t: float(radial(t)) * t ** (d - 1), 0.0, 1.0,
                              epsabs=1e-15, epsrel=1e-13, limit=200)[0]
        self.c = 1.0 / (sphere * mass) if d > 1 else 1.0 / (2 * mass)
        self.radial = radial
        self.dradial = radial.derivative()
        # marginal in one coordinate
        if d == 1:
            marg = self.c * _bump(r)
        else:
            marg = np.array([self._marginal_point(s) for s in r])
        spline = CubicSpline(r, marg)
        half = float(spline.integrate(0.0, 1.0))
        self.marginal = CubicSpline(r, marg / (2 * half))
        self.A = self.marginal.antiderivative()  # A(u) = int_0^u kappa, A(1) = 1/2
        self.B = self.A.antiderivative()  # B(u) = int_0^u A
        self.B1 = float(self.B(1.0))

    def _marginal_point(self, s: float) -> float:
        if s >= 1.0:
            return 0.0
        w = math.sqrt(1.0 - s * s)
        if self.d == 2:
            f = lambda t: float(np.exp(-1.0 / (1.0 - s * s - t * t))) if s * s + t * t < 1 else 0.0  # noqa: E731
            return 2 * self.c * integrate.quad(f, 0.0, w, epsabs=1e-16, epsrel=1e-12, limit=200)[0]
        f = lambda rho: float(np.exp(-1.0 / (1.0 - s * s - rho * rho))) * rho if s * s + rho * rho < 1 else 0.0  # noqa: E731
        return 2 * math.pi * self.c * integrate.quad(f, 0.0, w, epsabs=1e-16, epsrel=1e-12, limit=200)[0]

    # full kernel
    def phi(self, x: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(np.asarray(x, dtype=float).reshape(-1, self.d), axis=1)
        out = np.where(r < 1.0, self.c * self.radial(np.minimum(r, 1.0)), 0.0)
        return np.maximum(out, 0.0)

    def grad_phi(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, self.d)
        r = np.linalg.norm(x, axis=1)
        dr = np.where(r < 1.0, self.c * self.dradial(np.minimum(r, 1.0)), 0.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(r[:, None] > 0, x / r[:, None], 0.0)
        return dr[:, None] * unit

    def integral(self) -> float:
        sphere = 2 * math.pi ** (self.d / 2) / math.gamma(self.d / 2) if self.d > 1 else 2.0
        return sphere * self.c * integrate.quad(lambda t: float(self.radial(t)) * t ** (self.d - 1),
                                                0.0, 1.0, epsabs=1e-15, epsrel=1e-13, limit=200)[0]

    # marginal and its antiderivatives (unit radius)
    def kappa(self, s: np.ndarray) -> np.ndarray:
        a = np.abs(s)
        return np.where(a < 1.0, self.marginal(np.minimum(a, 1.0)), 0.0)

    def F1(self, s: np.ndarray) -> np.ndarray:
        a = np.minimum(np.abs(s), 1.0)
        return 0.5 + np.sign(s) * self.A(a)

    def F2(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        a = np.minimum(np.abs(s), 1.0)
        pos = 0.5 - self.B1 + s / 2 + self.B(a)
        neg = (s + 1) / 2 - (self.B1 - self.B(a))
        out = np.where(s >= 0, pos, neg)
        out = np.where(s >= 1.0, s, out)
        return np.where(s <= -1.0, 0.0, out)


@functools.lru_cache(maxsize=None)
def mollifier(d: int) -> Mollifier:
    return Mollifier(d)


# maps --------------------------------------------------------------------------

@dataclass(frozen=True)
class Profile:
    """One-dimensional function g on [lo, hi], continued constantly outside."""

    fn: Callable[[np.ndarray], np.ndarray]
    lo: float
    hi: float
    gamma: float
    constant: float
    name: str = ""

    def __call__(self, t) -> np.ndarray:
        t = np.clip(np.asarray(t, dtype=float), self.lo, self.hi)
        return np.asarray(self.fn(t), dtype=float)


@dataclass(frozen=True)
class Ridge:
    out: int
    inp: int
    coef: float
    g: Profile


@dataclass
class HolderFunction:
    """Map K = prod [lo_i, hi_i] -> R^dout with declared exponent and constant.

    Either ``ridges`` (with the affine part ``A``, ``b``) or a generic
    ``fn`` describes the map.  ``harmonic`` marks maps with harmonic
    components, which every radial mollifier leaves unchanged."""

    d: int
    dout: int
    gamma: float
    holder_constant: float
    lo: np.ndarray
    hi: np.ndarray
    name: str = ""
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    ridges: tuple[Ridge, ...] | None = None
    fn: Callable[[np.ndarray], np.ndarray] | None = None
    jac: Callable[[np.ndarray], np.ndarray] | None = None
    harmonic: bool = False
    spec: str = ""

    def __post_init__(self) -> None:
        self.lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        self.hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError(f"the Hölder exponent must lie in (0, 1], got {self.gamma}")
        if self.lo.size != self.d or self.hi.size != self.d:
            raise ConfigError("domain box does not match the dimension")
        if self.ridges is None and self.fn is None:
            raise ConfigError("a map needs ridges or an evaluator")
        if self.ridges is not None:
            self.A = np.zeros((self.dout, self.d)) if self.A is None else np.asarray(self.A, float).reshape(self.dout, self.d)
            self.b = np.zeros(self.dout) if self.b is None else np.asarray(self.b, float).reshape(self.dout)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def _points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.d == 1 and x.ndim <= 1:
            x = x.reshape(-1, 1)
        return x.reshape(-1, self.d)

    def evaluate(self, x) -> np.ndarray:
        """Values of the extension at points (n, d) -> (n, dout)."""
        x = self._points(x)
        if self.ridges is not None:
            out = x @ self.A.T + self.b
            for r in self.ridges:
                out[:, r.out] += r.coef * r.g(x[:, r.inp])
            return out
        y = np.clip(x, self.lo, self.hi)
        return np.asarray(self.fn(y), dtype=float).reshape(x.shape[0], self.dout)

    def __call__(self, x) -> np.ndarray:
        v = self.evaluate(x)
        return v[:, 0] if self.dout == 1 else v

    def linear_combination(self, other: "HolderFunction", a: float, b: float) -> "HolderFunction":
        """a * self + b * other (exponent min, constant by the triangle inequality)."""
        if (self.d, self.dout) != (other.d, other.dout):
            raise ConfigError("maps must share domain and codomain dimensions")
        gamma = min(self.gamma, other.gamma)
        D = max(self.diameter, 1e-300)
        const = (abs(a) * self.holder_constant * D ** (self.gamma - gamma)
                 + abs(b) * other.holder_constant * D ** (other.gamma - gamma))
        lo, hi = self.lo, self.hi
        if self.ridges is not None and other.ridges is not None:
            ridges = tuple(Ridge(r.out, r.inp, a * r.coef, r.g) for r in self.ridges) + \
                tuple(Ridge(r.out, r.inp, b * r.coef, r.g) for r in other.ridges)
            return HolderFunction(self.d, self.dout, gamma, const, lo, hi, f"{a}*{self.name}+{b}*{other.name}",
                                  A=a * self.A + b * other.A, b=a * self.b + b * other.b, ridges=ridges,
                                  harmonic=False)
        f, g = self, other
        return HolderFunction(self.d, self.dout, gamma, const, lo, hi, f"{a}*{f.name}+{b}*{g.name}",
                              fn=lambda x: a * f.evaluate(x) + b * g.evaluate(x),
                              harmonic=f.harmonic and g.harmonic)


def _ridge_constant(A: np.ndarray, ridges, gamma: float, D: float) -> float:
    """Hölder constant at exponent gamma of x -> Ax + sum coef g(x_i) e_out on a set of diameter D."""
    lin = float(np.linalg.norm(A, 2)) * D ** (1.0 - gamma) if A.size else 0.0
    per_out: dict[int, float] = {}
    for r in ridges:
        per_out[r.out] = per_out.get(r.out, 0.0) + abs(r.coef) * r.g.constant * D ** (r.g.gamma - gamma)
    return lin + math.sqrt(sum(v * v for v in per_out.values()))


def ridge_map(d: int, dout: int, A, b, ridges, lo, hi, name: str = "", spec: str = "") -> HolderFunction:
    lo = np.atleast_1d(np.asarray(lo, float))
    hi = np.atleast_1d(np.asarray(hi, float))
    A = np.asarray(A, float).reshape(dout, d)
    ridges = tuple(ridges)
    gamma = min([1.0] + [r.g.gamma for r in ridges])
    D = float(np.linalg.norm(hi - lo))
    return HolderFunction(d, dout, gamma, _ridge_constant(A, ridges, gamma, D), lo, hi, name,
                          A=A, b=b, ridges=ridges, harmonic=not ridges, spec=spec)


# profiles ----------------------------------------------------------------------

def _sup_at_breaks(breaks: np.ndarray, bound: Callable[[np.ndarray], np.ndarray], dmax: float) -> float:
    """sup over 0 < delta <= dmax of a quotient whose maxima sit at breakpoints."""
    pts = np.concatenate([breaks[(breaks > 0) & (breaks <= dmax)], [dmax]])
    return float(np.max(bound(pts)))


def weierstrass_profile(a: float, b: float = 2.0, terms: int = 20, phase: float = 0.0,
                        lo: float = 0.0, hi: float = 1.0) -> Profile:
    if not 0.0 < a < 1.0:
        raise ConfigError(f"the Weierstrass exponent must lie in (0, 1), got {a}")
    if b <= 1.0 or terms < 1:
        raise ConfigError("lacunarity must exceed 1 and terms be positive")
    n = np.arange(terms)
    amp = b ** (-n * a)
    freq = b ** n * math.pi

    def fn(t):
        t = np.asarray(t, dtype=float)
        return np.cos(np.multiply.outer(t, freq) + phase) @ amp

    # |cos u - cos v| <= min(2, |u - v|); the quotient sum_n amp_n min(2, freq_n d) / d^a is
    # increasing-then-decreasing between consecutive breakpoints 2 / freq_n, so its sup is attained there
    def bound(dl):
        return (amp[None, :] * np.minimum(2.0, freq[None, :] * dl[:, None])).sum(1) / dl ** a

    const = _sup_at_breaks(2.0 / freq, bound, hi - lo)
    return Profile(fn, lo, hi, a, const, f"weierstrass(a={a},b={b},terms={terms})")


def takagi_profile(terms: int = 16, lo: float = 0.0, hi: float = 1.0, gamma: float = 0.99) -> Profile:
    if terms < 1:
        raise ConfigError("terms must be positive")
    n = np.arange(terms)
    scale = 2.0 ** n

    def fn(t):
        x = np.multiply.outer(np.asarray(t, dtype=float), scale)
        return np.abs(x - np.round(x)) @ (1.0 / scale)

    def bound(dl):
        return (np.minimum(0.5, scale[None, :] * dl[:, None]) / scale[None, :]).sum(1) / dl ** gamma

    const = _sup_at_breaks(0.5 / scale, bound, hi - lo)
    return Profile(fn, lo, hi, gamma, const, f"takagi(terms={terms})")


def fbm_profile(h: float, seed: int = 0, level: int = 16, lo: float = 0.0, hi: float = 1.0) -> Profile:
    """Midpoint displacement with Hurst index h on 2^level + 1 nodes, linearly interpolated."""
    if not 0.02 < h < 1.0:
        raise ConfigError("the Hurst index must lie in (0.02, 1)")
    rng = np.random.default_rng(seed)
    n = 1 << level
    v = np.zeros(n + 1)
    v[-1] = rng.standard_normal()
    step = n
    j = 1
    while step > 1:
        half = step // 2
        mids = np.arange(half, n, step)
        sigma = 2.0 ** (-j * h) * math.sqrt(max(1.0 - 2.0 ** (2 * h - 2), 0.0))
        v[mids] = 0.5 * (v[mids - half] + v[mids + half]) + sigma * rng.standard_normal(mids.size)
        step = half
        j += 1
    grid = np.linspace(lo, hi, n + 1)
    gamma = h - 0.01
    # measured constant over node pairs at all lags 2^j and 3 * 2^j, inflated by 10%
    best = 0.0
    for lag in sorted({1 << k for k in range(level + 1)} | {3 << k for k in range(level - 1)}):
        if lag > n:
            continue
        q = np.abs(v[lag:] - v[:-lag]).max() / ((hi - lo) * lag / n) ** gamma
        best = max(best, float(q))

    def fn(t):
        return np.interp(np.asarray(t, dtype=float), grid, v)

    return Profile(fn, lo, hi, gamma, 1.1 * best, f"fbm(h={h},seed={seed})")


def _scalar(profile: Profile, spec: str) -> HolderFunction:
    return ridge_map(1, 1, [[0.0]], [0.0], [Ridge(0, 0, 1.0, profile)], [profile.lo], [profile.hi],
                     profile.name, spec)


def weierstrass(a: float, b: float = 2.0, terms: int = 20, phase: float = 0.0) -> HolderFunction:
    """W(t) = sum_{n < terms} b^(-na) cos(b^n pi t + phase) on [0, 1]."""
    return _scalar(weierstrass_profile(a, b, terms, phase), f"weierstrass:a={a},b={b},terms={terms},phase={phase}")


def takagi(terms: int = 16) -> HolderFunction:
    """T(t) = sum_{n < terms} 2^-n dist(2^n t, Z) on [0, 1], declared exponent 0.99."""
    return _scalar(takagi_profile(terms), f"takagi:terms={terms}")


def fbm_like(h: float, seed: int = 0) -> HolderFunction:
    return _scalar(fbm_profile(h, seed), f"fbm:h={h},seed={seed}")


def affine(A, b, lo, hi, name: str = "affine") -> HolderFunction:
    A = np.atleast_2d(np.asarray(A, float))
    return ridge_map(A.shape[1], A.shape[0], A, b, (), lo, hi, name)


def identity(d: int = 2, lo=0.0, hi=1.0) -> HolderFunction:
    return affine(np.eye(d), np.zeros(d), np.full(d, lo, float), np.full(d, hi, float), "identity")


def graph_map(profile: Profile) -> HolderFunction:
    """t -> (t, g(t)) on the profile interval."""
    return ridge_map(1, 2, [[1.0], [0.0]], [0.0, 0.0], [Ridge(1, 0, 1.0, profile)],
                     [profile.lo], [profile.hi], f"graph({profile.name})")


def perturbed_identity(profile: Profile, amp: float = 0.1, d: int = 2) -> HolderFunction:
    """x -> x + amp * (g(x_1), ..., g(x_d)) on the cube of the profile interval."""
    ridges = [Ridge(i, i, amp, profile) for i in range(d)]
    return ridge_map(d, d, np.eye(d), np.zeros(d), ridges, np.full(d, profile.lo), np.full(d, profile.hi),
                     f"id+{amp}*{profile.name}")


def zsquare(lo=(-1.0, -1.0), hi=(1.0, 1.0)) -> HolderFunction:
    """z -> z^2 as the map (x, y) -> (x^2 - y^2, 2 x y); harmonic components."""
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    R = float(np.max(np.maximum(np.abs(lo), np.abs(hi))) * math.sqrt(2))

    def fn(p):
        return np.column_stack([p[:, 0] ** 2 - p[:, 1] ** 2, 2 * p[:, 0] * p[:, 1]])

    def jac(p):
        x, y = p[:, 0], p[:, 1]
        return np.stack([np.stack([2 * x, -2 * y], 1), np.stack([2 * y, 2 * x], 1)], 1)

    return HolderFunction(2, 2, 1.0, 2 * R, lo, hi, "zsquare", fn=_unclipped(fn), jac=jac,
                          harmonic=True, spec="zsquare")


class _unclipped:
    """Evaluator marker for maps defined on all of R^d (no projection)."""

    def __init__(self, fn) -> None:
        self.fn = fn

    def __call__(self, x):
        return self.fn(x)


def constant(value: float, d: int = 1, lo=0.0, hi=1.0) -> HolderFunction:
    return affine(np.zeros((1, d)), [value], np.full(d, lo, float), np.full(d, hi, float), f"const({value})")


# mollification -----------------------------------------------------------------

def _pl_conv(g: Profile, eps: float, t: np.ndarray, kern: Mollifier, deriv: bool) -> np.ndarray:
    """(g_PL * kappa_eps)(t) or its derivative, g_PL the interpolant on the lattice (eps / q) Z."""
    h = eps / NODES_PER_EPS
    t = np.asarray(t, dtype=float)
    if t.size > 64:
        # ridge inputs on tensor grids repeat heavily
        tu, back = np.unique(t, return_inverse=True)
        if tu.size < t.size // 2:
            return _pl_conv(g, eps, tu, kern, deriv)[back.reshape(-1)]
    i0 = np.floor((t - eps) / h).astype(np.int64) - 1
    width = 2 * NODES_PER_EPS + 4
    idx = i0[:, None] + np.arange(width)[None, :]
    uniq, inv = np.unique(idx, return_inverse=True)
    vals = g(uniq * h)[inv.reshape(idx.shape)]
    s = (t[:, None] - idx * h)
    if deriv:
        F = lambda u: kern.F1(u / eps)  # noqa: E731
    else:
        F = lambda u: eps * kern.F2(u / eps)  # noqa: E731
    w = (F(s + h) - 2 * F(s) + F(s - h)) / h
    return np.einsum("ij,ij->i", w, vals)


def _generic_nodes(d: int, eps: float):
    kern = mollifier(d)
    h = eps / GENERIC_NODES
    ax = np.arange(-GENERIC_NODES, GENERIC_NODES + 1) * h
    mesh = np.meshgrid(*([ax] * d), indexing="ij")
    y = np.stack([m.ravel() for m in mesh], axis=1)
    y = y[np.linalg.norm(y, axis=1) < eps]
    w = kern.phi(y / eps)
    w = w / w.sum()
    G = kern.grad_phi(y / eps) / eps
    # calibrate so that affine maps get the exact gradient: sum_j -y_j G_j^T = I
    scale = -np.einsum("ji,ji->", y, G) / d
    G = G / scale
    return y, w, G


@dataclass
class MollifiedSamples:
    values: list[GridFunction]
    gradient: np.ndarray  # shape (*grid, dout, d)


class MollifiedFunction:
    """The smooth map f * Phi_eps (f extended outside its box)."""

    def __init__(self, f: HolderFunction, eps: float) -> None:
        if not 0.0 < eps <= 1.0:
            raise ConfigError(f"eps must lie in (0, 1], got {eps}")
        self.f, self.eps = f, float(eps)
        self.d, self.dout = f.d, f.dout
        self.lo, self.hi = f.lo, f.hi
        self.gamma = 1.0

    def evaluate(self, x) -> np.ndarray:
        f = self.f
        x = f._points(x)
        if f.harmonic and f.ridges is None:
            return f.fn(x) if isinstance(f.fn, _unclipped) else f.evaluate(x)
        if f.ridges is not None:
            out = x @ f.A.T + f.b
            kern = mollifier(f.d)
            for r in f.ridges:
                out[:, r.out] += r.coef * _pl_conv(r.g, self.eps, x[:, r.inp], kern, False)
            return out
        y, w, _ = _generic_nodes(f.d, self.eps)
        out = np.zeros((x.shape[0], f.dout))
        for j in range(y.shape[0]):
            out += w[j] * f.evaluate(x - y[j])
        return out

    def jacobian(self, x) -> np.ndarray:
        """(n, dout, d) derivative matrices."""
        f = self.f
        x = f._points(x)
        if f.harmonic and f.ridges is None and f.jac is not None:
            return f.jac(x)
        if f.ridges is not None:
            J = np.broadcast_to(f.A, (x.shape[0], f.dout, f.d)).copy()
            kern = mollifier(f.d)
            for r in f.ridges:
                J[:, r.out, r.inp] += r.coef * _pl_conv(r.g, self.eps, x[:, r.inp], kern, True)
            return J
        y, _, G = _generic_nodes(f.d, self.eps)
        J = np.zeros((x.shape[0], f.dout, f.d))
        for j in range(y.shape[0]):
            J += f.evaluate(x - y[j])[:, :, None] * G[j][None, None, :]
        return J

    def __call__(self, x) -> np.ndarray:
        v = self.evaluate(x)
        return v[:, 0] if self.dout == 1 else v

    def sample(self, level: int, lo=None, hi=None) -> MollifiedSamples:
        """Values and gradient at the level-``level`` cell centers of the integer box [lo, hi)."""
        if lo is None:
            lo = np.floor(self.lo * 2 ** level).astype(int)
            hi = np.ceil(self.hi * 2 ** level).astype(int)
        lo = tuple(int(v) for v in lo)
        hi = tuple(int(v) for v in hi)
        h = math.ldexp(1.0, -level)
        axes = [(np.arange(a, b) + 0.5) * h for a, b in zip(lo, hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        shape = tuple(b - a for a, b in zip(lo, hi))
        vals = self.evaluate(pts)
        grads = self.jacobian(pts).reshape(shape + (self.dout, self.d))
        return MollifiedSamples([GridFunction(level, lo, vals[:, i].reshape(shape)) for i in range(self.dout)], grads)


def _grid_as_map(u: GridFunction) -> HolderFunction:
    """Piecewise-constant GridFunction as a (discontinuous) map; zero outside its box."""
    h = u.h
    lo = np.asarray(u.lo) * h
    hi = np.asarray(u.hi) * h
    vals = np.asarray(u.values)

    def fn(p):
        idx = np.floor(p / h).astype(np.int64) - np.asarray(u.lo)
        ok = np.all((idx >= 0) & (idx < np.asarray(vals.shape)), axis=1)
        out = np.zeros(p.shape[0])
        out[ok] = vals[tuple(idx[ok].T)]
        return out[:, None]

    return HolderFunction(u.d, 1, 1.0, math.nan, lo - 1.0, hi + 1.0, "grid", fn=_unclipped(fn))


def mollify(f, eps: float) -> MollifiedFunction:
    """f * Phi_eps for a HolderFunction (extended) or a GridFunction (zero outside)."""
    if isinstance(f, GridFunction):
        f = _grid_as_map(f)
    if not isinstance(f, HolderFunction):
        raise ConfigError("mollify expects a HolderFunction or a GridFunction")
    return MollifiedFunction(f, eps)


# approximating sequence ----------------------------------------------------

def certificate_constant(dout: int) -> float:
    return 4.0 * math.sqrt(dout)


@dataclass
class ApproxCertificate:
    n: int
    f_n: MollifiedFunction
    sup_error: float  # ||f_n - f||_{inf, K}
    step: float  # ||f_{n+1} - f_n||_inf on K
    lip: float  # Lip f_n on K
    bounds: tuple[float, float, float]
    C: float
    sample_level: int

    @property
    def passed(self) -> bool:
        return (self.sup_error <= self.bounds[0] and self.step <= self.bounds[1]
                and self.lip <= self.bounds[2])


def _sample_points(f: HolderFunction, level: int) -> np.ndarray:
    axes = [np.linspace(a, b, (1 << level) + 1) for a, b in zip(f.lo, f.hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def approx_sequence(f: HolderFunction, n: int, sample_level: int | None = None,
                    C: float | None = None) -> ApproxCertificate:
    """f_n = f^ * Phi_{2^-n} with the three measured quantities and their bounds

        ||f_n - f||_K <= C 2^(-n gamma) L,  ||f_{n+1} - f_n|| <= C 2^(-n gamma) L,
        Lip f_n <= C 2^(n (1 - gamma)) L,   L = Lip^gamma f.
    """
    if n < 0:
        raise ConfigError("n must be nonnegative")
    if sample_level is None:
        sample_level = min(n + 6, 16) if f.d == 1 else min(n + 3, 9)
    C = certificate_constant(f.dout) if C is None else C
    fn = mollify(f, 2.0 ** -n)
    fn1 = mollify(f, 2.0 ** -(n + 1))
    x = _sample_points(f, sample_level)
    v = f.evaluate(x)
    vn = fn.evaluate(x)
    vn1 = fn1.evaluate(x)
    sup_err = float(np.max(np.linalg.norm(vn - v, axis=1)))
    step = float(np.max(np.linalg.norm(vn1 - vn, axis=1)))
    J = fn.jacobian(x)
    lip = float(np.max(np.linalg.norm(J, ord=2, axis=(1, 2))))
    L, g = f.holder_constant, f.gamma
    bounds = (C * 2.0 ** (-n * g) * L, C * 2.0 ** (-n * g) * L, C * 2.0 ** (n * (1 - g)) * L)
    return ApproxCertificate(n, fn, sup_err, step, lip, bounds, C, sample_level)


def holder_quotient(f, gamma: float | None = None, samples: int = 10_000, seed: int = 0) -> tuple[float, float]:
    """Empirical Lip^gamma over seeded random pairs, and the log-log increment slope.

    Pairs are drawn with separations log-uniform in [2^-16, diam]; the slope is
    the least-squares fit of log2 mean |f(x + d) - f(x)| against log2 d over
    the dyadic lags d = 2^-4 ... 2^-14 along the first axis."""
    gamma = f.gamma if gamma is None else gamma
    rng = np.random.default_rng(seed)
    lo, hi = f.lo, f.hi
    span = hi - lo
    x = lo + rng.random((samples, f.d)) * span
    direction = rng.standard_normal((samples, f.d))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    r = 2.0 ** rng.uniform(-16, math.log2(float(np.linalg.norm(span))), samples)
    y = np.clip(x + r[:, None] * direction, lo, hi)
    dist = np.linalg.norm(y - x, axis=1)
    ok = dist > 0
    df = np.linalg.norm(f.evaluate(x[ok]) - f.evaluate(y[ok]), axis=1)
    quotient = float(np.max(df / dist[ok] ** gamma)) if np.any(ok) else 0.0
    lags = 2.0 ** -np.arange(4, 15)
    means = []
    base = lo + rng.random((2000, f.d)) * span * 0.5
    for lag in lags:
        step = np.zeros(f.d)
        step[0] = lag * span[0]
        means.append(np.mean(np.linalg.norm(f.evaluate(base + step) - f.evaluate(base), axis=1)))
    means = np.asarray(means)
    if np.all(means == 0):
        return quotient, math.nan
    slope = float(np.polyfit(np.log2(lags), np.log2(np.maximum(means, 1e-300)), 1)[0])
    return quotient, slope


# function spec mini-language -------------------------------------------------

def _parse_kv(text: str) -> dict[str, str]:
    out = {}
    for part in filter(None, text.split(",")):
        if "=" not in part:
            raise ConfigError(f"malformed parameter {part!r} (expected key=value)")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def parse_profile(spec: str) -> Profile:
    kind, _, rest = spec.partition(":")
    kv = _parse_kv(rest)
    try:
        if kind == "weierstrass":
            return weierstrass_profile(float(kv.get("a", 0.6)), float(kv.get("b", 2.0)),
                                       int(kv.get("terms", 20)), float(kv.get("phase", 0.0)))
        if kind == "takagi":
            return takagi_profile(int(kv.get("terms", 16)))
        if kind == "fbm":
            return fbm_profile(float(kv.get("h", 0.7)), int(kv.get("seed", 0)))
    except ValueError as exc:
        raise ConfigError(f"bad parameters in {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown profile {kind!r}")


def _nested_profile(text: str) -> Profile:
    """Profile spec inside another spec, with ';' for ',' ("weierstrass;a=0.8")."""
    parts = text.split(";")
    if ":" not in parts[0] and len(parts) > 1:
        text = parts[0] + ":" + ",".join(parts[1:])
    return parse_profile(text.replace(";", ","))


def parse_function(spec: str, d: int = 1) -> HolderFunction:
    """Build a map from the mini-language.

    Scalar on [0, 1]^d (d = 1 unless another d is passed):
      weierstrass:a=..,terms=..,phase=..   takagi:terms=..   fbm:h=..,seed=..
      const:<value>   coord:i=<axis>   csv:<path>[,gamma=..]
    Maps: graph:<profile spec with ';' for ','>, weierstrass2d:a=..,amp=..,
      zsquare, identity.
    Ridge sums: x1+0.2*weierstrass:a=0.8 style is spelled
      ridge:axis=<i>,coef=<c>,lin=<j>,profile=<kind>;<k=v>;... """
    spec = spec.strip()
    kind, _, rest = spec.partition(":")
    try:
        if kind in ("weierstrass", "takagi", "fbm"):
            p = parse_profile(spec)
            if d == 1:
                f = _scalar(p, spec)
                return f
            return ridge_map(d, 1, np.zeros((1, d)), [0.0], [Ridge(0, 0, 1.0, p)], np.zeros(d), np.ones(d), p.name, spec)
        if kind == "const":
            return constant(float(rest), d)
        if kind == "coord":
            kv = _parse_kv(rest)
            i = int(kv.get("i", 0))
            A = np.zeros((1, d))
            A[0, i] = 1.0
            return affine(A, [0.0], np.zeros(d), np.ones(d), f"x{i}")
        if kind == "ridge":
            head, _, prof = rest.partition("profile=")
            kv = _parse_kv(head.rstrip(","))
            p = _nested_profile(prof)
            A = np.zeros((1, d))
            if "lin" in kv:
                A[0, int(kv["lin"])] = float(kv.get("lincoef", 1.0))
            r = Ridge(0, int(kv.get("axis", 0)), float(kv.get("coef", 1.0)), p)
            return ridge_map(d, 1, A, [0.0], [r], np.zeros(d), np.ones(d), spec, spec)
        if kind == "graph":
            return graph_map(_nested_profile(rest))
        if kind == "weierstrass2d":
            kv = _parse_kv(rest)
            p = weierstrass_profile(float(kv.get("a", 0.8)), terms=int(kv.get("terms", 20)))
            return perturbed_identity(p, float(kv.get("amp", 0.1)))
        if kind == "zsquare":
            return zsquare()
        if kind == "identity":
            return identity(2 if d == 1 else d)
        if kind == "csv":
            return load_csv_function(rest)
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"bad function spec {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown function spec {spec!r}")


def load_csv_function(arg: str) -> HolderFunction:
    """CSV with columns t,value on an increasing grid; optional ',gamma=..' suffix."""
    path, _, extra = arg.partition(",")
    kv = _parse_kv(extra)
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if data.shape[1] != 2 or data.shape[0] < 2 or np.any(np.diff(data[:, 0]) <= 0):
        raise ConfigError("csv function needs increasing t and one value column")
    t, v = data[:, 0], data[:, 1]
    gamma = float(kv.get("gamma", 1.0))
    q = np.abs(np.diff(v)) / np.diff(t) ** gamma
    p = Profile(lambda s: np.interp(s, t, v), float(t[0]), float(t[-1]), gamma, 1.1 * float(q.max()), f"csv({path})")
    return _scalar(p, f"csv:{arg}")
