from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraccur.errors import ConfigError, PreconditionError
from fraccur.fractal import disk, square
from fraccur.grid import CubicalChain, SimplicialChain
from fraccur.holder import affine, graph_map, identity, perturbed_identity, weierstrass_profile, zsquare
from fraccur.pushforward import (compare_fields, degree_field, exponent_beta, holder_pushforward,
                                 lipschitz_pushforward, subdivide, top_pushforward, triangle_density,
                                 winding_grid)


def angle_winding(poly: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Winding numbers by summing signed angles (independent of crossing counts)."""
    a = poly[None, :, :] - y[:, None, :]
    b = np.roll(poly, -1, axis=0)[None, :, :] - y[:, None, :]
    cross = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    dot = np.sum(a * b, axis=2)
    return np.rint(np.arctan2(cross, dot).sum(axis=1) / (2 * np.pi)).astype(int)


def flux(S) -> float:
    a, b = S.verts[:, 0], S.verts[:, 1]
    return float(np.sum(S.coeffs * 0.5 * (a[:, 0] + b[:, 0]) * (b[:, 1] - a[:, 1])))


def grid_centers(level, lo, shape):
    idx = np.indices(shape).reshape(2, -1).T
    return (idx + np.asarray(lo) + 0.5) * 2.0 ** -level


def test_linear_pushforward_masses():
    T = CubicalChain.box((0,), (1,), 0)
    assert lipschitz_pushforward(affine([[2.0]], [0.0], [0], [1]), T).mass() == pytest.approx(2.0)
    c, s = math.cos(0.5), math.sin(0.5)
    R = affine([[c, -s], [s, c]], [0, 0], [-2, -2], [2, 2])
    B = CubicalChain.box((0, 0), (1, 1), 0).boundary()
    assert lipschitz_pushforward(R, B).mass() == pytest.approx(4.0)


def test_pushforward_commutes_with_boundary():
    f = affine([[1.0, 0.3], [-0.2, 2.0]], [0.5, -1.0], [-2, -2], [2, 2])
    T = CubicalChain.box((0, 0), (2, 1), 1)
    lhs = lipschitz_pushforward(f, T).boundary()
    rhs = lipschitz_pushforward(f, T.boundary())
    assert lhs.allclose(rhs, atol=1e-12)


@settings(max_examples=20)
@given(st.floats(0.05, 1.0))
def test_subdivide_preserves_chain(max_len):
    S = CubicalChain.box((0, 0), (2, 1), 1).to_simplicial()
    R = subdivide(S, max_len)
    assert R.mass() == pytest.approx(S.mass(), rel=1e-12)
    bR, bS = R.boundary(), S.boundary()
    assert bR.mass() == pytest.approx(bS.mass(), rel=1e-12)
    # subdivided boundary pairs with x dy like the original
    assert flux(bR) == pytest.approx(flux(bS), abs=1e-12)
    B = subdivide(S.boundary(), max_len)
    assert B.boundary().canonical(1e-12).mass() == pytest.approx(0.0, abs=1e-12)


def test_exponent_relation():
    assert exponent_beta(1, 0.0, 0.8) == pytest.approx(0.25)
    assert exponent_beta(2, 0.5, 1.0) == pytest.approx(0.5)
    with pytest.raises(ConfigError):
        exponent_beta(1, 0.0, 0.0)


def test_rejects_beta_at_least_one():
    f = graph_map(weierstrass_profile(0.45))
    with pytest.raises(PreconditionError):
        holder_pushforward(f, 0.45, CubicalChain.box((0,), (1,), 0))


def test_affine_map_converges_immediately():
    f = affine([[2.0], [1.0]], [0, 0], [0], [1])
    run = holder_pushforward(f, 1.0, CubicalChain.box((0,), (1,), 0), n_max=6)
    assert run.verdict.startswith("converged")
    assert max(run.distances) <= 1e-9
    assert run.final.mass() == pytest.approx(math.sqrt(5))


def test_weierstrass_graph_stages_shrink():
    f = graph_map(weierstrass_profile(0.8))
    run = holder_pushforward(f, 0.8, CubicalChain.box((0,), (1,), 0), n_max=6)
    d = run.distances
    assert all(b < a for a, b in zip(d, d[1:]))
    assert run.verdict.startswith("converged")


@settings(max_examples=25)
@given(st.integers(3, 9), st.floats(0.1, 0.9), st.floats(-0.3, 0.3), st.integers(1, 2))
def test_winding_matches_angle_sum(n, r, shift, loops):
    t = np.linspace(0, 2 * np.pi * loops, n * loops, endpoint=False)
    poly = np.column_stack([r * np.cos(t) + shift, r * np.sin(t)])
    level, lo, shape = 4, (-16, -16), (32, 32)
    got = winding_grid(poly, np.roll(poly, -1, axis=0), np.ones(len(poly)), level, lo, shape).reshape(-1)
    y = grid_centers(level, lo, shape)
    want = angle_winding(poly, y)
    # compare away from the polygon itself
    a, b = poly, np.roll(poly, -1, axis=0)
    ab = b - a
    tt = np.clip(np.einsum("pij,ij->pi", y[:, None, :] - a[None], ab) / np.sum(ab * ab, 1), 0, 1)
    dist = np.min(np.linalg.norm(y[:, None, :] - (a[None] + tt[..., None] * ab[None]), axis=2), axis=1)
    far = dist > 1e-9
    assert np.array_equal(np.rint(got[far]).astype(int), want[far])


def test_triangle_density():
    S = SimplicialChain(2, 2, [[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]], [2.0])
    dens = triangle_density(S, 3, (0, 0), (8, 8))
    c = grid_centers(3, (0, 0), (8, 8)).reshape(8, 8, 2)
    inside = c.sum(axis=2) < 1
    assert np.all(dens[inside] == 2.0) and np.all(dens[~inside] == 0.0)
    # reversing orientation flips the sign
    R = SimplicialChain(2, 2, [[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]], [2.0])
    assert np.array_equal(triangle_density(R, 3, (0, 0), (8, 8)), -dens)


def test_degree_of_identity_and_square_map():
    D = disk()
    deg = degree_field(identity(2, -1, 1), None, D, 5)
    c = grid_centers(5, deg.field.lo, deg.field.shape)
    v = deg.field.values.reshape(-1)
    ok = deg.unflagged().reshape(-1)
    r = np.linalg.norm(c, axis=1)
    assert np.all(v[ok & (r < 1)] == 1) and np.all(v[ok & (r > 1)] == 0)
    deg2 = degree_field(zsquare(), None, D, 5)
    vals = set(np.unique(deg2.field.values[deg2.unflagged()]).tolist())
    assert vals == {0.0, 2.0}


def test_degree_csv(tmp_path):
    deg = degree_field(identity(2, 0, 1), None, square(), 3)
    p = tmp_path / "deg.csv"
    deg.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "y1,y2,degree,flag"
    assert len(lines) == 1 + deg.field.values.size


def test_top_pushforward_matches_degree_for_z_squared():
    # a square region keeps the chain exact; the disk case runs in the acceptance suite
    U = square(2, -0.5, 1.0)
    T = CubicalChain.box((-2, -2), (2, 2), 2)
    top = top_pushforward(zsquare(), 1.0, T, n_max=4)
    deg = degree_field(zsquare(), None, U, 5)
    cmp = compare_fields(top.density(5, deg.field.lo, deg.field.hi), deg)
    assert cmp["fraction"] >= 0.99


def test_perturbed_identity_degree_is_one_inside():
    f = perturbed_identity(weierstrass_profile(0.8), 0.05)
    deg = degree_field(f, 0.8, square(), 5)
    vals = set(np.unique(deg.field.values[deg.unflagged()]).tolist())
    assert vals <= {0.0, 1.0} and 1.0 in vals
