from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate

from rcarmh.function_space import BasisSpec, InvalidInputError, evaluate_at, h1_norm, project

coeffs = arrays(np.float64, st.integers(1, 40), elements=st.floats(-1e3, 1e3))


def test_h1_norm_simple_cases():
    assert h1_norm(np.zeros(10)) == 0.0
    assert h1_norm(BasisSpec(10).unit(1)) == 1.0
    assert h1_norm([3.0, 4.0, 0.0, 0.0]) == 5.0


def test_h1_norm_rejects_nonfinite():
    with pytest.raises(InvalidInputError):
        h1_norm([1.0, np.nan])
    with pytest.raises(InvalidInputError):
        h1_norm([np.inf])


def test_h1_norm_matches_sobolev_integral(rng):
    # ||u||^2 = int u^2 + u'^2 dx, computed on a fine periodic grid
    basis = BasisSpec(9)
    u = rng.standard_normal(9)
    x = np.linspace(0.0, 2 * np.pi, 4096, endpoint=False)
    vals = u @ basis.design_matrix(x).T
    der = u @ basis.derivative_matrix(x).T
    sq = (vals**2 + der**2).mean() * 2 * np.pi
    assert np.isclose(np.sqrt(sq), h1_norm(u), rtol=1e-10)


def test_batched_norm():
    U = np.array([[3.0, 4.0], [0.0, 1.0]])
    np.testing.assert_allclose(h1_norm(U), [5.0, 1.0])


@given(coeffs)
def test_project_identity_and_zero(u):
    np.testing.assert_array_equal(project(u, u.size), u)
    np.testing.assert_array_equal(project(u, u.size + 5), u)
    np.testing.assert_array_equal(project(u, 0), np.zeros_like(u))


@given(coeffs, st.integers(0, 50))
def test_project_idempotent_and_shrinks(u, m):
    p = project(u, m)
    np.testing.assert_array_equal(project(p, m), p)
    assert h1_norm(p) <= h1_norm(u) + 1e-12


def test_project_negative_cut():
    with pytest.raises(InvalidInputError):
        project(np.ones(3), -1)


def test_evaluate_zero_and_constant():
    assert evaluate_at(np.zeros(7), 1.3) == 0.0
    u = np.zeros(7)
    u[0] = 2.5
    assert np.isclose(evaluate_at(u, 0.7), 2.5 / np.sqrt(2 * np.pi))


def test_constant_mode_normalisation_by_quadrature():
    basis = BasisSpec(1)
    val, _ = integrate.quad(lambda x: float(evaluate_at(basis.unit(0), x)) ** 2, 0.0, 2 * np.pi)
    assert abs(val - 1.0) < 1e-12


def test_cos_mode_h1_normalisation_by_quadrature():
    basis = BasisSpec(5)
    for j in range(1, 5):
        f = lambda x: float(evaluate_at(basis.unit(j), x)) ** 2  # noqa: E731
        g = lambda x: float(basis.unit(j) @ basis.derivative_matrix([x])[0]) ** 2  # noqa: E731
        total = integrate.quad(f, 0, 2 * np.pi, limit=200)[0] + integrate.quad(g, 0, 2 * np.pi, limit=200)[0]
        assert abs(total - 1.0) < 1e-10


@settings(max_examples=50)
@given(coeffs, st.floats(0.0, 2 * np.pi, exclude_max=True))
def test_evaluate_periodic(u, x):
    a, b = evaluate_at(u, x), evaluate_at(u, x + 2 * np.pi)
    assert np.isclose(a, b, rtol=1e-9, atol=1e-9 * (1 + np.abs(u).sum()))


def test_evaluate_rejects_nonfinite_point():
    with pytest.raises(InvalidInputError):
        evaluate_at(np.ones(3), np.nan)


def test_evaluate_shapes():
    U = np.ones((4, 5))
    assert evaluate_at(U, [0.1, 0.2, 0.3]).shape == (4, 3)
    assert np.ndim(evaluate_at(U[0], 0.1)) == 0


def test_eigenvalues_pairing():
    b = BasisSpec(6)
    np.testing.assert_allclose(b.eigenvalues, [1.0, 0.5, 0.5, 0.2, 0.2, 0.1])
    with pytest.raises(InvalidInputError):
        BasisSpec(0)


def test_triangle_inequality(rng):
    U, V = rng.standard_normal((2, 100_000, 12)) * 10.0 ** rng.uniform(-3, 3, (2, 100_000, 1))
    assert np.all(h1_norm(U + V) <= (h1_norm(U) + h1_norm(V)) * (1 + 1e-12))


def test_every_mode_has_unit_norm_on_grid():
    basis = BasisSpec(64)
    x = np.linspace(0.0, 2 * np.pi, 4096, endpoint=False)
    vals, der = basis.design_matrix(x), basis.derivative_matrix(x)
    norms = ((vals**2 + der**2).mean(axis=0) * 2 * np.pi)
    assert np.all(np.abs(norms - 1.0) < 1e-6)


def test_tiny_states_keep_positive_norm():
    assert h1_norm(np.full(4, 1e-300)) == pytest.approx(2e-300)
    assert h1_norm(np.full(4, 1e200)) == pytest.approx(2e200)
