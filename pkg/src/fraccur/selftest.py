"""Quick built-in checks with exact or closed-form answers."""

from __future__ import annotations

import math

import numpy as np


def _boundary_squared():
    from .grid import CubicalChain

    T = CubicalChain.box((0, 0, 0), (2, 1, 3), 1)
    bb = T.boundary().boundary()
    return len(bb) == 0, f"{len(bb)} faces in dd[[box]]"


def _two_points():
    from .flatnorm import flat_norm
    from .grid import CubicalChain

    out = []
    for sep in (1, 3, 40):
        T = CubicalChain.point((0,), 4) - CubicalChain.point((sep,), 4)
        out.append(flat_norm(T, pad=2).value)
    want = [min(s / 16, 2.0) for s in (1, 3, 40)]
    return np.allclose(out, want, atol=1e-9), f"{out} vs {want}"


def _cone_identity():
    from .grid import CubicalChain, cone

    T = CubicalChain.box((0, 0), (1, 1), 1).boundary().to_simplicial()
    a = np.array([0.3, 0.9])
    gap = (cone(a, T).boundary() - T + cone(a, T.boundary())).canonical(1e-12).mass()
    return gap < 1e-12, f"gap {gap:.3g}"


def _bv_interval():
    from .sobolev import GridFunction, bv_norm

    u = GridFunction(4, (0,), np.ones(16))
    v = bv_norm(u)
    return v == 2.0, f"|D 1_[0,1]| = {v}"


def _corner_point():
    from .fractal import PointSet, box_count

    n = box_count(PointSet([[0.5, 0.25]]), 3)
    return n == 4, f"{n} closed cubes meet a dyadic corner"


def _whitney_disk():
    from .fractal import disk, whitney

    w = whitney(disk(), 6)
    ok = all(w.counts[k] <= w.count_bound(k) for k in range(w.k0 + 1, 7))
    return ok and w.covered_measure() <= math.pi, f"k0 = {w.k0}, counts {w.counts}"


def _mollifier_mass():
    from .holder import mollifier

    vals = [mollifier(d).integral() for d in (1, 2, 3)]
    return np.allclose(vals, 1.0, atol=1e-9), f"{vals}"


def _affine_mollified():
    from .holder import affine, mollify

    f = affine([[2.0, -1.0]], [0.5], [0, 0], [1, 1])
    x = np.random.default_rng(0).uniform(0, 1, (50, 2))
    err = float(np.max(np.abs(mollify(f, 0.1).evaluate(x) - f.evaluate(x))))
    return err < 1e-12, f"max change {err:.3g}"


def _double_mass():
    from .grid import CubicalChain
    from .holder import affine
    from .pushforward import lipschitz_pushforward

    T = CubicalChain.box((0,), (1,), 0)
    m = lipschitz_pushforward(affine([[2.0]], [0.0], [0], [1]), T).mass()
    return abs(m - 2.0) < 1e-12, f"mass {m}"


def _degree_zsquare():
    from .fractal import disk
    from .holder import zsquare
    from .pushforward import degree_field

    deg = degree_field(zsquare(), None, disk(), 5)
    u = deg.field
    idx = np.indices(u.shape).reshape(2, -1).T
    c = (idx + np.asarray(u.lo) + 0.5) * u.h
    inner = (np.linalg.norm(c, axis=1) < 1.0) & ~deg.flags.reshape(-1)
    vals = set(np.unique(u.values.reshape(-1)[inner]).astype(int).tolist())
    return vals == {2}, f"interior unflagged degrees {vals}"


def _young_t():
    from .holder import affine
    from .young import young_1d

    g = affine([[1.0]], [0.0], [0], [1])
    v = young_1d(g, g, 12).value
    return abs(v - 0.5) <= 2.0 ** -12, f"{v}"


def _zust_volume():
    from .holder import affine, constant
    from .young import zust_integral

    gs = [constant(1.0, 2), affine([[1.0, 0.0]], [0], [0, 0], [1, 1]), affine([[0.0, 1.0]], [0], [0, 0], [1, 1])]
    v = zust_integral(gs, 6).value
    return abs(v - 1.0) < 1e-12, f"{v}"


def _wedge_constants():
    from .grid import CubicalChain
    from .young import SampledForm, wedge_eval

    om = SampledForm.constant(2, 1, [1.0, 2.0])
    et = SampledForm.constant(2, 1, [-0.5, 3.0])
    r = wedge_eval(om, et, CubicalChain.box((0, 0), (1, 1), 0), n_max=3)
    return abs(r.value - 4.0) < 1e-12 and max(abs(t) for t in r.terms[1:]) < 1e-12, f"{r.value}"


CHECKS = [
    ("boundary of boundary", _boundary_squared),
    ("two-point flat norm", _two_points),
    ("cone identity", _cone_identity),
    ("total variation of an interval", _bv_interval),
    ("closed cubes at a dyadic corner", _corner_point),
    ("Whitney counts on the disk", _whitney_disk),
    ("mollifier mass", _mollifier_mass),
    ("affine maps are fixed by mollification", _affine_mollified),
    ("pushforward by 2x", _double_mass),
    ("degree of z^2 on the disk", _degree_zsquare),
    ("integral of t dt", _young_t),
    ("Riemann sums of dx1 ^ dx2", _zust_volume),
    ("wedge of constant forms", _wedge_constants),
]


def run_selftest(par=None) -> list[tuple[str, bool, str]]:
    def one(item):
        name, fn = item
        try:
            ok, detail = fn()
        except Exception as exc:  # reported as a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        return name, bool(ok), detail

    items = list(CHECKS)
    return par.map(one, items) if par is not None else [one(x) for x in items]
