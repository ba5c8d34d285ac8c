from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraccur.deform import deform, level_from_eps
from fraccur.errors import ConfigError
from fraccur.grid import CubicalChain, SimplicialChain
from fraccur.holder import affine
from fraccur.young import FormTerm, SampledForm, form_eval


def linear_form(d: int, m: int, rng) -> SampledForm:
    """Random m-form with affine coefficients (exactly integrated by the pairing rules)."""
    from fraccur.young import multi_indices

    terms = []
    for I in multi_indices(d, m):
        A = rng.normal(size=(1, d))
        terms.append(FormTerm((affine(A, [rng.normal()], np.full(d, -5.0), np.full(d, 5.0)),), I))
    return SampledForm(d, m, terms)


def segment_chain(points, coeffs=None) -> SimplicialChain:
    p = np.asarray(points, float)
    v = np.stack([p[:-1], p[1:]], axis=1)
    return SimplicialChain(p.shape[1], 1, v, np.ones(len(v)) if coeffs is None else coeffs)


def decomposition_gap(T, r, form) -> float:
    """<w, T> - <w, P> - <dw, R> - <w, S> for a test form w."""
    lhs = form_eval(form, T)
    rhs = form_eval(form, r.P)
    if len(r.S):
        rhs += form_eval(form, r.S)
    if len(r.R):
        rhs += form_eval(form.exterior(), r.R)
    return abs(lhs - rhs)


@pytest.mark.parametrize("eps,level", [("1/16", 4), (0.25, 2), (1, 0), ("1/1024", 10)])
def test_level_from_eps(eps, level):
    assert level_from_eps(eps) == level


def test_non_dyadic_eps_rejected():
    with pytest.raises(ConfigError):
        level_from_eps(0.3)


def test_grid_chain_is_fixed():
    T = CubicalChain.box((0, 0), (2, 1), 1).boundary()
    r = deform(T, level=3)
    assert r.P.allclose(T.refine(3)) and len(r.R) == 0 and len(r.S) == 0


@settings(max_examples=25)
@given(st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=2, max_size=5), st.integers(1, 4),
       st.integers(0, 10 ** 6))
def test_polyline_decomposition_identity(pts, level, seed):
    pts = np.asarray(pts)
    if np.min(np.linalg.norm(np.diff(pts, axis=0), axis=1)) < 1e-3:
        return
    T = segment_chain(pts)
    r = deform(T, level=level)
    rng = np.random.default_rng(seed)
    for _ in range(2):
        form = linear_form(2, 1, rng)
        assert decomposition_gap(T, r, form) <= 1e-9 * (1 + T.mass())
    # P lives on the grid with boundary on grid vertices
    assert r.P.level == level


def test_triangle_decomposition_identity():
    T = SimplicialChain(2, 2, [[[0.1, 0.13], [0.77, 0.21], [0.3, 0.9]]], [1.0])
    r = deform(T, level=3)
    form = linear_form(2, 2, np.random.default_rng(0))
    assert decomposition_gap(T, r, form) <= 1e-10


def test_segment_in_space():
    T = segment_chain([[0.11, 0.2, 0.33], [0.7, 0.61, 0.05]])
    r = deform(T, level=2)
    form = linear_form(3, 1, np.random.default_rng(1))
    assert decomposition_gap(T, r, form) <= 1e-10


@settings(max_examples=20)
@given(st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=2, max_size=4), st.integers(1, 4))
def test_residual_ratios_bounded(pts, level):
    pts = np.asarray(pts)
    if np.min(np.linalg.norm(np.diff(pts, axis=0), axis=1)) < 1e-3:
        return
    T = segment_chain(pts)
    r = deform(T, level=level)
    bound = 8 * 4 ** 2
    for key in ("P_over_T", "R_over_epsT", "S_over_epsdT"):
        v = r.ratios[key]
        assert v is None or v <= bound


def test_boundary_points_move_to_vertices():
    T = segment_chain([[0.1, 0.1], [0.9, 0.35]])
    r = deform(T, level=2)
    B = r.P.boundary().cleaned(1e-9)
    # the deformed boundary is a difference of two grid points
    assert np.allclose(sorted(B.terms.values()), [-1.0, 1.0], atol=1e-12)
