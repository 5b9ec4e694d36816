"""Semimetrics d_s and tilde d_s, the Lyapunov function and Monte Carlo gap estimators."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .function_space import InvalidInputError, as_field, h1_norm


@dataclass(frozen=True)
class SemimetricParams:
    omega: float = 1.0
    eta: float = 0.1
    s: float = 0.0
    theta: float = 0.01
    p: int = 2

    def __post_init__(self):
        if not (self.omega > 0 and self.eta > 0 and self.theta > 0):
            raise InvalidInputError("omega, eta and theta must be positive")
        if self.s < 0:
            raise InvalidInputError("s must be nonnegative")
        if int(self.p) != self.p or self.p < 1:
            raise InvalidInputError("p must be an integer >= 1")

    def with_exponent(self, s: float) -> "SemimetricParams":
        return SemimetricParams(self.omega, self.eta, s, self.theta, self.p)


def lyapunov_V(u, p: int = 2):
    """||u||^p."""
    if p < 1:
        raise InvalidInputError("p must be >= 1")
    return np.asarray(h1_norm(u)) ** p if np.ndim(u) > 1 else float(h1_norm(u)) ** p


def d_star(u, v, params: SemimetricParams):
    u, v = as_field(u), as_field(v)
    nu, nv = np.asarray(h1_norm(u)), np.asarray(h1_norm(v))
    return (1.0 + params.eta * nu + params.eta * nv) ** params.s * np.asarray(h1_norm(u - v)) / params.omega


def d_s(u, v, params: SemimetricParams):
    """min(1, (1 + eta ||u|| + eta ||v||)^s ||u - v|| / omega)."""
    out = np.minimum(1.0, d_star(u, v, params))
    return float(out) if np.ndim(out) == 0 else out


def _weight(u, v, params):
    return 2.0 + params.theta * np.asarray(h1_norm(u)) ** params.p + params.theta * np.asarray(h1_norm(v)) ** params.p


def tilde_d_s(u, v, params: SemimetricParams):
    """sqrt(d_s(u, v) (2 + theta V(u) + theta V(v)))."""
    out = np.sqrt(np.asarray(d_s(u, v, params)) * _weight(u, v, params))
    return float(out) if np.ndim(out) == 0 else out


def weak_triangle_ratio(u, v, w, params: SemimetricParams):
    """tilde_d(u, v) / (tilde_d(u, w) + tilde_d(w, v))."""
    den = np.asarray(tilde_d_s(u, w, params)) + np.asarray(tilde_d_s(w, v, params))
    if np.any(den == 0):
        raise InvalidInputError("weak triangle ratio undefined when u = w = v")
    out = np.asarray(tilde_d_s(u, v, params)) / den
    return float(out) if out.ndim == 0 else out


def expectation_gap(samples_a, samples_b) -> tuple[float, float]:
    """|mean_a - mean_b| and the standard error of the difference of means."""
    a = np.asarray(samples_a, dtype=float).ravel()
    b = np.asarray(samples_b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise InvalidInputError("expectation_gap needs nonempty sample sets")
    var_a = a.var(ddof=1) / a.size if a.size > 1 else 0.0
    var_b = b.var(ddof=1) / b.size if b.size > 1 else 0.0
    return float(abs(a.mean() - b.mean())), float(np.sqrt(var_a + var_b))


def coupled_tilde_d_mean(pairs, params: SemimetricParams) -> float:
    """Mean tilde_d over coupled pairs: an upper bound on the transport semimetric.

    ``pairs`` is either a sequence of ``(u, v)`` tuples or a tuple of two stacked arrays.
    """
    if isinstance(pairs, tuple) and len(pairs) == 2 and np.ndim(pairs[0]) == 2:
        U, V = pairs
    else:
        pairs = list(pairs)
        if not pairs:
            raise InvalidInputError("coupled_tilde_d_mean needs at least one pair")
        U = np.stack([np.asarray(p[0], dtype=float) for p in pairs])
        V = np.stack([np.asarray(p[1], dtype=float) for p in pairs])
    if len(U) == 0:
        raise InvalidInputError("coupled_tilde_d_mean needs at least one pair")
    return float(np.mean(tilde_d_s(U, V, params)))


def weak_triangle_scan(U, V, W, params: SemimetricParams) -> float:
    """Largest weak-triangle ratio over matched triples (G hat); degenerate triples are skipped."""
    den = np.asarray(tilde_d_s(U, W, params)) + np.asarray(tilde_d_s(W, V, params))
    ok = den > 0
    ratios = np.asarray(tilde_d_s(U[ok], V[ok], params)) / den[ok]
    return float(ratios.max())
