from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraccur.errors import ConfigError, PreconditionError
from fraccur.flatnorm import (ComplexDomain, flat_norm, flat_norm_bruteforce, frac_cost, improve_decomposition,
                              lp_constant, make_decomposition)
from fraccur.grid import CubicalChain

from strategies import cubical_chains


def two_points(sep: int, level: int = 4) -> CubicalChain:
    return CubicalChain.point((0,), level) - CubicalChain.point((sep,), level)


@pytest.mark.parametrize("sep", [1, 3, 16, 31, 33, 40])
def test_two_points(sep):
    # cheaper to join the points than to pay both masses up to |x - y| = 2
    assert flat_norm(two_points(sep), pad=2).value == pytest.approx(min(sep / 16, 2.0), abs=1e-9)


def test_two_points_in_the_plane():
    T = CubicalChain.point((0, 0), 3) - CubicalChain.point((2, 3), 3)
    # an L1 path of length 5/8 is optimal on the grid
    assert flat_norm(T, pad=2).value == pytest.approx(5 / 8, abs=1e-9)


def test_square_boundary_fills_in():
    T = CubicalChain.box((0, 0), (2, 2), 3).boundary()
    # filling costs the area 1/16, keeping costs the perimeter 1
    assert flat_norm(T).value == pytest.approx(1 / 16, abs=1e-12)


def test_top_dimensional_flat_equals_mass():
    T = CubicalChain.box((0, 0), (3, 2), 2, coeff=-2.0)
    assert flat_norm(T).value == pytest.approx(T.mass())


def test_simplex_and_highs_agree():
    rng = np.random.default_rng(3)
    for _ in range(5):
        terms = {((int(a), int(b)), (int(ax),)): float(c) for a, b, ax, c in
                 zip(rng.integers(0, 4, 6), rng.integers(0, 4, 6), rng.integers(0, 2, 6), rng.integers(-2, 3, 6))}
        T = CubicalChain(2, 1, 2, terms)
        if not T:
            continue
        a = flat_norm(T, method="simplex").value
        b = flat_norm(T, method="highs").value
        assert a == pytest.approx(b, abs=1e-8)


@settings(max_examples=40)
@given(cubical_chains(d=1, m=0, max_faces=3, span=2, level=2))
def test_lp_matches_bruteforce_oracle(T):
    dom = ComplexDomain.around(T, 1)
    try:
        oracle = flat_norm_bruteforce(T, dom, max_faces=6)
    except ConfigError:
        return
    assert flat_norm(T, dom).value == pytest.approx(oracle, abs=1e-8)


@settings(max_examples=30)
@given(cubical_chains(d=2, m=1, max_faces=4, span=2, level=1))
def test_flat_mass_normal_ordering(T):
    F = flat_norm(T).value
    assert F <= T.mass() + 1e-9
    assert T.mass() <= T.normal_mass() + 1e-12
    assert flat_norm(T.boundary()).value <= F + 1e-9


@settings(max_examples=25)
@given(cubical_chains(d=2, m=1, max_faces=4, span=2, level=1),
       cubical_chains(d=2, m=1, max_faces=4, span=2, level=1))
def test_triangle_inequality(A, B):
    dom = ComplexDomain.around(A + B + CubicalChain.box((-2, -2), (3, 3), 1).boundary(), 1)
    lhs = flat_norm(A + B, dom).value
    assert lhs <= flat_norm(A, dom).value + flat_norm(B, dom).value + 1e-8


def test_larger_domain_never_increases_value():
    T = CubicalChain.box((0, 0), (3, 1), 2).boundary()
    small = ComplexDomain(2, (0, 0), (3, 1))
    big = ComplexDomain(2, (-2, -2), (5, 3))
    assert flat_norm(T, big).value <= flat_norm(T, small).value + 1e-12


def test_cell_mask_matches_box_domain():
    T = two_points(3)
    dom = ComplexDomain(4, (-2,), (6,))
    masked = ComplexDomain(4, (-2,), (6,), cell_mask=np.ones(8, bool))
    assert flat_norm(T, masked).value == pytest.approx(flat_norm(T, dom).value)


def test_residual_and_witness_reproduce_chain():
    T = CubicalChain.box((0, 0), (2, 2), 3).boundary()
    r = flat_norm(T)
    rebuilt = r.residual + r.witness_S.boundary()
    assert rebuilt.allclose(T, atol=1e-9)


def test_frac_cost_endpoints():
    parts = [CubicalChain.box((0, 0), (2, 2), 3).boundary(), CubicalChain.box((0, 0), (1, 4), 3).boundary()]
    dec0 = make_decomposition(parts, 0.0)
    dec1 = make_decomposition(parts, 1.0)
    assert frac_cost(dec0) == pytest.approx(sum(p.normal_mass() for p in parts))
    assert frac_cost(dec1) == pytest.approx(sum(flat_norm(p, pad=1).value for p in parts), rel=1e-9)


def test_improve_never_increases_cost():
    parts = [CubicalChain.box((0, 0), (1, 1), 3).boundary(), CubicalChain.box((1, 0), (2, 1), 3).boundary()]
    dec = make_decomposition(parts, 0.5)
    better = improve_decomposition(dec)
    assert better.cost <= dec.cost + 1e-12


def test_lp_constant_value():
    q = 2 ** 0.7
    assert lp_constant(0.3, 1.0) == pytest.approx(q / (q - 1) + 1 / (1 - 2 ** -0.3), rel=1e-15)
    assert lp_constant(0.3, 1.0) == pytest.approx(7.927568409478614, rel=1e-12)
    with pytest.raises(PreconditionError):
        lp_constant(0.5, 0.5)


@given(st.floats(0.05, 0.9), st.floats(0.01, 0.09))
def test_lp_constant_bounds_two_regime_series(alpha, gap):
    beta = min(1.0, alpha + gap)
    C = lp_constant(alpha, beta)
    for ratio in (1e-3, 0.1, 0.4, 0.9):
        N, F = 1.0, ratio
        s = sum(min(2 ** (n * (beta - alpha)) * N ** (1 - beta) * F ** beta, 2 ** (-n * alpha) * N)
                for n in range(400))
        assert s <= C * N ** (1 - alpha) * F ** alpha * (1 + 1e-9)


def test_domain_validation():
    with pytest.raises(ConfigError):
        ComplexDomain(0, (0, 0), (0, 1))
    with pytest.raises(ConfigError):
        flat_norm(CubicalChain.box((0,), (1,), 0).to_simplicial())
    assert math.isfinite(flat_norm(CubicalChain.zero(2, 1, 0)).value)
