from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fraccur.errors import ConfigError, PreconditionError
from fraccur.grid import (CubicalChain, DyadicFace, SimplicialChain, chain_from_json, chain_to_json, cone,
                          cone_mass_constant)

from strategies import cubical_chains


def test_face_geometry():
    f = DyadicFace(2, (1, 3), (0,))
    assert f.dim == 1 and f.ambient == 2
    assert f.volume == 0.25
    assert np.allclose(f.lower(), [0.25, 0.75]) and np.allclose(f.upper(), [0.5, 0.75])


def test_box_boundary_is_perimeter():
    T = CubicalChain.box((0, 0), (4, 4), 2)
    assert T.mass() == 1.0
    assert T.boundary().mass() == 4.0
    assert T.normal_mass() == 5.0


def test_segment_boundary_is_endpoints():
    T = CubicalChain.box((0,), (1,), 0)
    expected = CubicalChain.point((1,), 0) - CubicalChain.point((0,), 0)
    assert T.boundary().allclose(expected)


def test_boundary_of_point_is_an_error():
    with pytest.raises(PreconditionError):
        CubicalChain.point((0,), 0).boundary()


def test_invalid_face_rejected():
    with pytest.raises(ConfigError):
        CubicalChain(2, 1, 0, {((0, 0), (0, 1)): 1.0})
    with pytest.raises(ConfigError):
        CubicalChain(2, 1, 0, {((0, 0), (0,)): float("nan")})


@given(cubical_chains(d=3, m=None).filter(lambda T: T.m >= 2) | cubical_chains(d=2, m=2))
def test_boundary_of_boundary_vanishes(T):
    assert len(T.boundary().boundary()) == 0


@given(cubical_chains(), st.integers(0, 2))
def test_refine_commutes_with_boundary_and_mass(T, extra):
    R = T.refine(T.level + extra)
    assert abs(R.mass() - T.mass()) <= 1e-12 * max(1.0, T.mass())
    if T.m >= 1:
        assert R.boundary().allclose(T.boundary().refine(T.level + extra), atol=1e-12)


@given(cubical_chains(d=2))
def test_simplicial_conversion_preserves_mass_and_boundary(T):
    S = T.to_simplicial()
    assert abs(S.mass() - T.mass()) <= 1e-12 * max(1.0, T.mass())
    if T.m >= 1:
        B = T.boundary().to_simplicial()
        assert S.boundary().allclose(B, atol=1e-12)


@given(cubical_chains(d=2, m=1), st.tuples(st.floats(-2, 2), st.floats(-2, 2)))
def test_cone_identity(T, apex):
    S = T.to_simplicial()
    C = cone(apex, S)
    gap = (C.boundary() - S + cone(apex, S.boundary())).canonical(1e-12)
    assert gap.mass() <= 1e-12 * max(1.0, S.mass())


def test_cone_of_points_uses_total_weight():
    S = SimplicialChain(2, 0, [[[1.0, 0.0]], [[0.0, 1.0]]], [2.0, -0.5])
    a = np.array([0.3, 0.3])
    want = S - SimplicialChain(2, 0, [[a]], [1.5])
    assert cone(a, S).boundary().allclose(want, atol=1e-12)


def test_cone_mass_bound():
    S = CubicalChain.box((0, 0), (1, 1), 0).boundary().to_simplicial()
    a = np.array([3.0, -1.0])
    diam = np.linalg.norm(np.array([3.0, 2.0]))
    assert cone(a, S).mass() <= cone_mass_constant(1) * diam * S.mass() * 2


@given(cubical_chains())
def test_json_round_trip(T):
    U = chain_from_json(chain_to_json(T))
    assert isinstance(U, CubicalChain) and U.allclose(T)


def test_simplicial_json_round_trip():
    S = CubicalChain.box((0, 0), (2, 1), 1).to_simplicial()
    obj = json.loads(chain_to_json(S))
    assert chain_from_json(obj).allclose(S)


def test_canonical_folds_orientation():
    S = SimplicialChain(2, 1, [[[0, 0], [1, 0]], [[1, 0], [0, 0]]], [1.0, 1.0])
    assert len(S.canonical()) == 0


@given(cubical_chains(d=2), cubical_chains(d=2))
def test_addition_is_linear_in_boundary(A, B):
    if A.m != B.m or A.m == 0:
        return
    assert (A + B).boundary().allclose(A.boundary() + B.boundary(), atol=1e-12)
