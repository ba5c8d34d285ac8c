from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraccur.errors import ConfigError, PreconditionError
from fraccur.grid import CubicalChain
from fraccur.sobolev import (GridFunction, bv_norm, dyadic_decompose, frac_perimeter, frac_perimeter_cross,
                             gagliardo, sample_function, thm41_certificate)


def step_oracle(level: int, lo: int, values, s: float) -> float:
    """Exact double integral of |u(x) - u(y)| / |x - y|^(1+s) over R x R for a step function
    with values on consecutive cells [lo + i, lo + i + 1] 2^-level and zero outside."""
    h = 2.0 ** -level
    iv = [((lo + i) * h, (lo + i + 1) * h, float(v)) for i, v in enumerate(values)]
    c = 1.0 / (s * (1 - s))

    def pair(a, b, p, q):  # b <= p
        return c * ((q - b) ** (1 - s) - (p - b) ** (1 - s) - (q - a) ** (1 - s) + (p - a) ** (1 - s))

    def outside(a, b, left, right):  # [a, b] against (-inf, left] and [right, inf)
        return c * ((b - left) ** (1 - s) - (a - left) ** (1 - s) + (right - a) ** (1 - s) - (right - b) ** (1 - s))

    total = 0.0
    for i, (a, b, u) in enumerate(iv):
        for (p, q, w) in iv[i + 1:]:
            total += 2 * abs(u - w) * pair(a, b, p, q)
        total += 2 * abs(u) * outside(a, b, iv[0][0], iv[-1][1])
    return total


def test_perimeter_of_unit_interval():
    A = GridFunction(10, (0,), np.ones(1024))
    # 4 / (s (1 - s)) with s = 1/2
    assert frac_perimeter(A, 0.5) == pytest.approx(16.0, rel=1e-9)


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.8])
def test_perimeter_interval_closed_form(alpha):
    s = 1 - alpha
    A = GridFunction(6, (3,), np.ones(20))
    assert frac_perimeter(A, alpha) == pytest.approx(step_oracle(6, 3, np.ones(20), s), rel=1e-9)


@settings(max_examples=40)
@given(st.lists(st.integers(-3, 3), min_size=1, max_size=12), st.integers(-4, 4), st.sampled_from([0.25, 0.5, 0.7]))
def test_step_functions_match_exact_oracle(vals, lo, alpha):
    u = GridFunction(4, (lo,), np.asarray(vals, float))
    want = step_oracle(4, lo, vals, 1 - alpha)
    assert gagliardo(u, alpha, error_estimate=False).value == pytest.approx(want, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("alpha", [0.3, 0.5])
def test_homogeneity_exponent(alpha):
    A = GridFunction(5, (2, 3), (np.indices((9, 7)).sum(0) % 3 == 0).astype(float))
    for d, u in ((1, GridFunction(6, (0,), np.ones(20))), (2, A)):
        ratio = frac_perimeter(u, alpha) / frac_perimeter(u.dyadic_rescale(1), alpha)
        assert -math.log2(ratio) == pytest.approx(d - 1 + alpha, abs=1e-9)


def test_translation_invariance():
    v = np.random.default_rng(0).normal(size=(6, 5))
    a = gagliardo(GridFunction(4, (0, 0), v), 0.5).value
    b = gagliardo(GridFunction(4, (7, -3), v), 0.5).value
    assert a == pytest.approx(b, rel=1e-12)


def test_direct_and_layer_cake_agree():
    v = np.random.default_rng(1).integers(0, 4, size=(12, 10)).astype(float)
    u = GridFunction(5, (0, 0), v)
    a = gagliardo(u, 0.4, method="direct", error_estimate=False).value
    b = gagliardo(u, 0.4, method="layers", error_estimate=False).value
    assert a == pytest.approx(b, rel=1e-10)


def test_cross_formula_matches_seminorm():
    A = GridFunction(4, (0, 0), (np.random.default_rng(2).random((7, 6)) < 0.5).astype(float))
    assert frac_perimeter_cross(A, 0.5) == pytest.approx(frac_perimeter(A, 0.5), rel=1e-9)


def test_seminorm_is_positively_homogeneous_and_shift_free():
    v = np.random.default_rng(4).normal(size=8)
    u = GridFunction(3, (0,), v)
    g = gagliardo(u, 0.5, error_estimate=False).value
    assert gagliardo(u.scale(-2.5), 0.5, error_estimate=False).value == pytest.approx(2.5 * g, rel=1e-12)


def test_bv_matches_chain_boundary_mass():
    rng = np.random.default_rng(5)
    mask = rng.random((8, 8)) < 0.4
    u = GridFunction(3, (0, 0), mask.astype(float))
    cells = CubicalChain(2, 2, 3, {(tuple(int(x) for x in p), (0, 1)): 1.0 for p in np.argwhere(mask)})
    assert bv_norm(u) == pytest.approx(cells.boundary().mass(), rel=1e-12)


@given(st.integers(1, 5), st.integers(0, 10 ** 6))
def test_dyadic_decomposition_telescopes(depth, seed):
    rng = np.random.default_rng(seed)
    u = GridFunction(5, (0, 0), rng.normal(size=(32, 32)))
    dec = dyadic_decompose(u, depth)
    rebuilt = dec.partial_sum(5) + dec.residual
    assert np.allclose(rebuilt.embed((0, 0), (32, 32)), u.values, atol=1e-12)
    for p in dec.parts:
        assert p.l1_norm() <= 2 * u.l1_norm() + 1e-12


def test_decomposition_needs_unit_box_support():
    with pytest.raises(PreconditionError):
        dyadic_decompose(GridFunction(3, (-1,), np.ones(4)), 2)


def test_decomposition_ratio_in_band():
    u = sample_function(lambda x: np.maximum(0, 1 - np.abs(x[:, 0] - 0.5) / 0.3), 9, (0,), (512,))
    c = thm41_certificate(u, 0.5)
    assert 1 / 25 <= c.ratio <= 25


def test_grid_function_round_trip(tmp_path):
    u = GridFunction(3, (1, -2), np.arange(12.0).reshape(3, 4))
    p = tmp_path / "u.json"
    u.save(p)
    v = GridFunction.load(p)
    assert v.level == 3 and v.lo == (1, -2) and np.array_equal(v.values, u.values)


def test_validation():
    with pytest.raises(ConfigError):
        gagliardo(GridFunction(2, (0,), np.ones(3)), 1.5)
    with pytest.raises(ConfigError):
        frac_perimeter(GridFunction(2, (0,), np.array([0.0, 0.5])), 0.5)
