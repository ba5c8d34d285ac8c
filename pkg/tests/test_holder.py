from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from fraccur.errors import ConfigError
from fraccur.holder import (affine, approx_sequence, certificate_constant, fbm_like, graph_map, holder_quotient,
                            mollifier, mollify, parse_function, perturbed_identity, takagi, weierstrass,
                            weierstrass_profile, zsquare)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_mollifier_has_unit_mass_and_unit_support(d):
    k = mollifier(d)
    assert k.integral() == pytest.approx(1.0, abs=1e-9)
    x = np.zeros((1, d))
    x[0, 0] = 1.0
    assert k.phi(x)[0] == 0.0
    assert k.phi(np.zeros((1, d)))[0] > 0


def test_marginal_is_even_and_normalized():
    k = mollifier(2)
    s = np.linspace(-1, 1, 101)
    assert np.array_equal(k.kappa(s), k.kappa(-s))
    assert integrate.quad(lambda t: float(k.kappa(np.array([t]))[0]), -1, 1)[0] == pytest.approx(1.0, abs=1e-8)


def test_marginal_matches_full_kernel():
    k = mollifier(2)
    s = 0.37
    w = math.sqrt(1 - s * s)
    direct = integrate.quad(lambda t: float(k.phi(np.array([[s, t]]))[0]), -w, w, epsabs=1e-13)[0]
    assert float(k.kappa(np.array([s]))[0]) == pytest.approx(direct, rel=1e-6)


def test_weierstrass_value_at_zero():
    W = weierstrass(0.6, terms=20)
    assert W(np.array([0.0]))[0] == pytest.approx((1 - 2 ** -12) / (1 - 2 ** -0.6), rel=1e-12)


def test_takagi_first_term_is_triangle_wave():
    T = takagi(1)
    t = np.linspace(0, 1, 33)
    assert np.allclose(T(t), np.minimum(t, 1 - t), atol=1e-14)


@pytest.mark.parametrize("x", [0.3, 0.51, 0.77])
def test_mollified_weierstrass_matches_quadrature(x):
    W = weierstrass(0.6, terms=8)
    k = mollifier(1)
    eps = 1 / 8

    def integrand(y):
        return W(np.array([x - y]))[0] * k.c * math.exp(-1 / (1 - (y / eps) ** 2)) / eps

    q = integrate.quad(integrand, -eps * (1 - 1e-12), eps * (1 - 1e-12), limit=400, epsabs=1e-13)[0]
    assert mollify(W, eps)(np.array([x]))[0] == pytest.approx(q, abs=3e-4)


def test_affine_and_harmonic_maps_are_fixed():
    x = np.random.default_rng(0).uniform(-0.9, 0.9, (40, 2))
    A = affine([[1.0, 2.0], [-3.0, 0.5]], [0.1, 0.2], [-1, -1], [1, 1])
    assert np.allclose(mollify(A, 0.2).evaluate(x), A.evaluate(x), atol=1e-13)
    Z = zsquare()
    assert np.allclose(mollify(Z, 0.1).evaluate(x), Z.evaluate(x), atol=1e-13)
    assert np.allclose(mollify(Z, 0.1).jacobian(x), Z.jac(x), atol=1e-13)


def test_generic_route_exact_for_bilinear():
    from fraccur.holder import HolderFunction

    f = HolderFunction(2, 1, 1.0, 2.0, [-2, -2], [2, 2], "xy", fn=lambda p: p[:, 0] * p[:, 1])
    x = np.random.default_rng(1).uniform(-0.5, 0.5, (20, 2))
    assert np.allclose(mollify(f, 0.25).evaluate(x)[:, 0], x[:, 0] * x[:, 1], atol=1e-12)


def test_gradient_matches_finite_differences():
    # the derivative route goes through the antiderivative F1; the second-order central
    # difference of the value route converges to it at rate 4 per halving
    W = weierstrass(0.6)
    eps = 1 / 16
    M = mollify(W, eps)
    x = np.linspace(0.1, 0.9, 9)
    g = M.jacobian(x)[:, 0, 0]
    scale = np.max(np.abs(g))
    gaps = []
    for step in (eps / 64, eps / 128):
        fd = (M(x + step) - M(x - step)) / (2 * step)
        gaps.append(np.max(np.abs(fd - g)) / scale)
    assert gaps[0] <= 4e-4
    assert gaps[1] < 1e-4
    assert gaps[1] <= gaps[0] / 3


def test_sup_distance_decays_like_holder_bound():
    W = weierstrass(0.6)
    x = np.linspace(0, 1, 4001)
    for n in range(2, 9):
        eps = 2.0 ** -n
        err = np.max(np.abs(mollify(W, eps)(x) - W(x)))
        assert err <= W.holder_constant * eps ** 0.6


@pytest.mark.parametrize("n", [3, 5, 7])
def test_approximation_certificate(n):
    c = approx_sequence(weierstrass(0.6), n)
    assert c.passed
    assert c.C == certificate_constant(1)


@pytest.mark.parametrize("build", [lambda: graph_map(weierstrass_profile(0.8)),
                                   lambda: perturbed_identity(weierstrass_profile(0.8))])
def test_certificate_for_planar_maps(build):
    assert approx_sequence(build(), 4).passed


def test_holder_quotient_slope():
    q, slope = holder_quotient(weierstrass(0.6))
    assert q <= weierstrass(0.6).holder_constant
    assert slope == pytest.approx(0.6, abs=0.1)


def test_fbm_is_seeded():
    a, b = fbm_like(0.7, seed=42), fbm_like(0.7, seed=42)
    t = np.linspace(0, 1, 50)
    assert np.array_equal(a(t), b(t))
    assert not np.array_equal(a(t), fbm_like(0.7, seed=43)(t))


@settings(max_examples=30)
@given(st.floats(0.3, 0.95), st.floats(-0.5, 1.5))
def test_ridge_spec_equals_components(a, x):
    f = parse_function(f"ridge:axis=1,coef=0.2,lin=0,profile=weierstrass;a={a:.3f}", 2)
    W = weierstrass(float(f"{a:.3f}"))
    p = np.array([[x, 0.3]])
    assert f(p)[0] == pytest.approx(x + 0.2 * W(np.array([0.3]))[0], abs=1e-12)


def test_spec_parsing():
    assert parse_function("weierstrass:a=0.7,phase=1").gamma == 0.7
    assert parse_function("const:2.5", 2)(np.array([[0.1, 0.2]]))[0] == 2.5
    assert parse_function("graph:weierstrass;a=0.8").dout == 2
    assert parse_function("zsquare").harmonic
    with pytest.raises(ConfigError):
        parse_function("nonsense:1")
    with pytest.raises(ConfigError):
        weierstrass(1.5)


def test_csv_function(tmp_path):
    p = tmp_path / "g.csv"
    t = np.linspace(0, 1, 11)
    np.savetxt(p, np.column_stack([t, t ** 2]), delimiter=",")
    f = parse_function(f"csv:{p},gamma=1")
    assert f(np.array([0.5]))[0] == pytest.approx(0.25, abs=1e-12)
