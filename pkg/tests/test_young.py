from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraccur.errors import PreconditionError
from fraccur.grid import CubicalChain
from fraccur.holder import HolderFunction, parse_function, weierstrass
from fraccur.young import (SampledForm, SmoothForm, form_eval, leibniz_check, stokes_check, wedge_eval,
                           young_1d, zust_integral)

from strategies import cubical_chains

UNIT = CubicalChain.box((0, 0), (1, 1), 0)


def smooth_fn(d, f, grad, const=4.0):
    """Lipschitz scalar function on [0, 1]^d with an exact gradient."""
    return HolderFunction(d, 1, 1.0, const, np.zeros(d), np.ones(d),
                          fn=lambda x: f(x)[:, None], jac=lambda x: grad(x)[:, None, :])


def power(a):
    return smooth_fn(1, lambda x: x[:, 0] ** a, lambda x: a * x ** (a - 1))


def ridge(axis, coef, lin, a):
    return parse_function(f"ridge:axis={axis},coef={coef},lin={lin},profile=weierstrass;a={a};phase=0.5", 2)


@settings(max_examples=40)
@given(cubical_chains(d=2, m=1, max_faces=5, level=2), cubical_chains(d=2, m=1, max_faces=5, level=2),
       st.floats(-3, 3), st.floats(-3, 3))
def test_form_eval_is_bilinear(T1, T2, a, b):
    w1 = SampledForm.constant(2, 1, [1.0, -2.0])
    w2 = SampledForm.exact([smooth_fn(2, lambda x: x[:, 0] * x[:, 1], lambda x: x[:, ::-1])], 2)
    lhs = form_eval(w1.scale(a) + w2.scale(b), T1 + T2)
    rhs = a * (form_eval(w1, T1) + form_eval(w1, T2)) + b * (form_eval(w2, T1) + form_eval(w2, T2))
    assert lhs == pytest.approx(rhs, abs=1e-9)


def test_constant_form_integrates_area():
    assert form_eval(SampledForm.constant(2, 2, [3.0]), CubicalChain.box((0, 0), (2, 1), 1)) == pytest.approx(1.5)


def test_stokes_exact_for_polynomial_form():
    g = smooth_fn(2, lambda x: x[:, 0] ** 2 * x[:, 1], lambda x: np.column_stack([2 * x[:, 0] * x[:, 1], x[:, 0] ** 2]))
    w = SampledForm(2, 1, [FormTerm_((g,), (1,))])
    res = stokes_check(w, CubicalChain.box((0, 0), (1, 1), 1))
    assert res.gap <= 1e-12
    # the level-1 box is [0, 1/2]^2
    assert res.lhs == pytest.approx(1 / 32)


def FormTerm_(coefs, diffs):
    from fraccur.young import FormTerm
    return FormTerm(coefs, diffs)


def test_exterior_of_exact_form_vanishes():
    w = SampledForm.exact([weierstrass(0.7)], 1)
    assert SampledForm.exact([ridge(0, 1, 1, 0.7)], 2).exterior().terms == []
    assert w.exterior().terms == []


def test_young_smooth_first_order():
    for a, b in ((1.0, 1.0), (2.0, 3.0), (1.5, 1.0)):
        errs = []
        for level in (8, 10):
            s = young_1d(power(a), power(b), level)
            errs.append(abs(s.value - b / (a + b)))
        assert errs[-1] <= 2.0 ** -9
        assert errs[1] < errs[0] / 3


def test_young_weierstrass_ratio():
    s = young_1d(weierstrass(0.7, phase=0.5), weierstrass(0.7), 14)
    assert s.verdict == "converging"
    assert abs(s.ratio / s.expected_ratio - 1) <= 0.3


def test_zust_alternating_and_coordinates():
    x, y = parse_function("coord:i=0", 2), parse_function("coord:i=1", 2)
    one = parse_function("const:1", 2)
    assert zust_integral([one, x, y], 6).value == pytest.approx(1.0, abs=1e-12)
    g = ridge(1, 0.3, 0, 0.8)
    h = ridge(0, 0.3, 1, 0.8)
    c = ridge(0, 1, 1, 0.9)
    a = zust_integral([c, g, h], 7)
    b = zust_integral([c, h, g], 7)
    assert np.allclose(a.sums, -np.asarray(b.sums), atol=1e-12)


def test_constant_wedge_is_exact_at_stage_zero():
    w = SampledForm.constant(2, 1, [1.0, 2.0])
    e = SampledForm.constant(2, 1, [3.0, -1.0])
    s = wedge_eval(w, e, UNIT, n_max=4)
    assert s.terms[0] == pytest.approx(-7.0)
    assert np.all(np.abs(s.terms[1:]) <= 1e-12)


def test_wedge_envelope_and_telescoping():
    w = SampledForm.function(ridge(0, 1, 1, 0.8), 2)
    e = SampledForm.exact([ridge(1, 0.3, 0, 0.8)], 2).wedge(SampledForm.constant(2, 1, [0.0, 1.0]))
    s = wedge_eval(w, e, UNIT, n_max=5, n_min=5)
    r = s.notes["ratio"]
    for k, t in enumerate(s.terms[1:]):
        assert abs(t) <= s.envelope * r ** k * (1 + 1e-12)
    # partial sums telescope to <w_N ^ e_N, T> up to the quadrature of each stage
    assert s.value == pytest.approx(s.notes["telescoped"], abs=1e-3)
    assert s.tail >= abs(s.terms[-1])


def test_wedge_antisymmetric():
    w = SampledForm.exact([ridge(0, 0.3, 1, 0.8)], 2)
    e = SampledForm.exact([ridge(1, 0.3, 0, 0.8)], 2)
    a = wedge_eval(w, e, UNIT, n_max=4, n_min=4)
    b = wedge_eval(e, w, UNIT, n_max=4, n_min=4)
    assert np.allclose(a.partial_sums, -np.asarray(b.partial_sums), atol=1e-12)


def test_leibniz_polynomial_forms():
    g = smooth_fn(2, lambda x: x[:, 0] ** 2 + x[:, 0] * x[:, 1],
                  lambda x: np.column_stack([2 * x[:, 0] + x[:, 1], x[:, 0]]))
    h = smooth_fn(2, lambda x: x[:, 1] ** 2 - x[:, 0],
                  lambda x: np.column_stack([-np.ones(len(x)), 2 * x[:, 1]]))
    res = leibniz_check(SampledForm.function(g, 2), SampledForm.exact([h], 2), CubicalChain.box((0, 0), (1, 1), 1),
                        n_max=4, tol=1e-9)
    assert res["gap"] <= 1e-3


def test_wedge_rejects_low_regularity():
    w = SampledForm.exact([ridge(0, 1, 1, 0.4)], 2)
    e = SampledForm.exact([ridge(1, 1, 0, 0.5)], 2)
    assert w.alpha + e.alpha <= 1
    with pytest.raises(PreconditionError):
        wedge_eval(w, e, UNIT)


def test_smooth_form_arithmetic():
    f = SmoothForm(2, 1, lambda x: np.column_stack([x[:, 0], x[:, 1]]))
    x = np.array([[0.2, 0.3], [0.5, 0.9]])
    assert np.allclose((f + f.scale(2.0)).comps(x), 3 * f.comps(x))
    assert np.allclose((f - f).comps(x), 0.0)
