from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rcarmh.couplings import basic_coupled_step
from rcarmh.function_space import BasisSpec, InvalidInputError, h1_norm
from rcarmh.measures import GammaPriorSpec, sample_gamma_prior
from rcarmh.metrics import (SemimetricParams, coupled_tilde_d_mean, d_s, expectation_gap, lyapunov_V, tilde_d_s,
                            weak_triangle_ratio, weak_triangle_scan)
from rcarmh.mh import gamma_rcar_kernel
from rcarmh.potentials import ZeroPotential

vec = arrays(np.float64, 6, elements=st.floats(-50, 50))
P = SemimetricParams(1.0, 0.1, 1.0, 0.01, 2)


def test_lyapunov(rng):
    assert lyapunov_V(np.zeros(5), 2) == 0.0
    assert lyapunov_V([0.0, 2.0], 2) == 4.0
    u = rng.standard_normal(9)
    assert abs(lyapunov_V(u, 3) - np.sqrt(np.sum(u**2)) ** 3) < 1e-12
    with pytest.raises(InvalidInputError):
        lyapunov_V(u, 0)


@given(vec, vec)
def test_d_s_is_symmetric_capped_semimetric(u, v):
    a, b = d_s(u, v, P), d_s(v, u, P)
    assert a == b and 0.0 <= a <= 1.0
    assert d_s(u, u, P) == 0.0
    if not np.array_equal(u, v):
        assert a > 0.0


def test_d_s_cap_and_reduction(rng):
    p0 = SemimetricParams(1.0, 0.1, 0.0, 0.01, 2)
    assert d_s([0.0, 0.0], [1.0, 1.0], p0) == 1.0
    U, V = rng.standard_normal((2, 100_000, 4)) * 0.3
    np.testing.assert_allclose(d_s(U, V, p0), np.minimum(1.0, np.linalg.norm(U - V, axis=1)), rtol=1e-12)


def test_tilde_d_closed_form():
    p = SemimetricParams(1.0, 0.1, 0.0, 1.0, 2)
    u, v = np.array([1.0, 0.0]), np.array([-1.0, 0.0])
    assert tilde_d_s(u, v, p) == pytest.approx(2.0, rel=1e-15)
    assert tilde_d_s(u, u, p) == 0.0


def test_tilde_d_direct_formula(rng):
    u, v = rng.standard_normal((2, 7))
    nu, nv, nd = np.linalg.norm(u), np.linalg.norm(v), np.linalg.norm(u - v)
    d = min(1.0, (1 + 0.1 * nu + 0.1 * nv) ** 1.0 * nd / 1.0)
    want = np.sqrt(d * (2 + 0.01 * nu**2 + 0.01 * nv**2))
    assert abs(tilde_d_s(u, v, P) - want) < 1e-12


@settings(max_examples=50)
@given(vec, vec)
def test_weak_triangle_simple_cases(u, v):
    w = u + 1.0
    assert weak_triangle_ratio(u, u, w, P) == 0.0
    if not np.array_equal(u, v):
        assert weak_triangle_ratio(u, v, u, P) == pytest.approx(1.0)


def test_weak_triangle_degenerate():
    z = np.zeros(3)
    with pytest.raises(InvalidInputError):
        weak_triangle_ratio(z, z, z, P)


def test_weak_triangle_scan_finite(rng):
    U, V, W = rng.standard_normal((3, 100_000, 6)) * 10.0 ** rng.uniform(-2, 2, (3, 100_000, 1))
    g = weak_triangle_scan(U, V, W, P)
    assert np.isfinite(g) and g >= 0.5


def test_expectation_gap():
    a = np.array([1.0, 2.0, 3.0])
    assert expectation_gap(a, a)[0] == 0.0
    assert expectation_gap(np.ones(4), np.full(4, 3.0)) == (2.0, 0.0)
    with pytest.raises(InvalidInputError):
        expectation_gap([], [1.0])


def test_expectation_gap_self_consistency():
    a = np.random.default_rng(1).standard_gamma(0.5, 5000)
    b = np.random.default_rng(2).standard_gamma(0.5, 5000)
    gap, se = expectation_gap(a, b)
    assert gap < 3 * se


def test_coupled_mean_simple(rng):
    u = rng.standard_normal(4)
    assert coupled_tilde_d_mean([(u, u), (2 * u, 2 * u)], P) == 0.0
    v = rng.standard_normal(4)
    assert coupled_tilde_d_mean([(u, v)], P) == tilde_d_s(u, v, P)
    with pytest.raises(InvalidInputError):
        coupled_tilde_d_mean([], P)


def test_coupling_beats_independence(rng):
    basis = BasisSpec(8)
    k = gamma_rcar_kernel(0.5, 0.5, basis)
    prior = GammaPriorSpec(0.5, basis)
    n = 20_000
    u = sample_gamma_prior(prior, rng)
    v = u + 0.05 * np.abs(sample_gamma_prior(prior, rng))
    U, V = np.broadcast_to(u, (n, 8)), np.broadcast_to(v, (n, 8))
    cu, cv = basic_coupled_step(U, V, k, ZeroPotential(), rng)
    iu, _ = basic_coupled_step(U, U, k, ZeroPotential(), rng)
    iv, _ = basic_coupled_step(V, V, k, ZeroPotential(), rng)
    assert coupled_tilde_d_mean((cu, cv), P) <= coupled_tilde_d_mean((iu, iv), P)
    assert h1_norm(u - v) > 0


def test_d_s_monotone_in_s_and_tilde_cap(rng):
    U, V = rng.standard_normal((2, 100_000, 6)) * 10.0 ** rng.uniform(-2, 1, (2, 100_000, 1))
    lo, hi = SemimetricParams(s=0.5), SemimetricParams(s=2.0)
    assert np.all(d_s(U, V, hi) >= d_s(U, V, lo))
    w = 2 + P.theta * h1_norm(U) ** 2 + P.theta * h1_norm(V) ** 2
    assert np.all(tilde_d_s(U, V, P) ** 2 <= w * (1 + 1e-12))
