"""Truncated H^1 Fourier basis on the circle.

States are plain numpy arrays whose last axis holds the coefficients along
the H^1-orthonormal basis ``[const, cos 1, sin 1, cos 2, sin 2, ...]``.
Leading axes are batch axes, so every function here works on a single state
of shape ``(n_modes,)`` as well as on stacks of states.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi


class InvalidInputError(ValueError):
    """Raised for non-finite or malformed states and evaluation points."""


@dataclass(frozen=True)
class BasisSpec:
    """First ``n_modes`` functions of the H^1-normalised real Fourier basis.

    Mode ``0`` is the constant, mode ``2k - 1`` is ``cos(kx)`` and mode ``2k``
    is ``sin(kx)``. Cos/sin pairs share the eigenvalue ``1 / (1 + k^2)``.
    """

    n_modes: int = 64
    frequencies: np.ndarray = field(init=False, repr=False, compare=False)
    eigenvalues: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise InvalidInputError(f"n_modes must be a positive integer, got {self.n_modes!r}")
        object.__setattr__(self, "n_modes", int(self.n_modes))
        freqs = (np.arange(self.n_modes) + 1) // 2
        freqs.setflags(write=False)
        lam = 1.0 / (1.0 + freqs.astype(float) ** 2)
        lam.setflags(write=False)
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "eigenvalues", lam)

    @property
    def sqrt_eigenvalues(self) -> np.ndarray:
        return np.sqrt(self.eigenvalues)

    @property
    def is_sine(self) -> np.ndarray:
        idx = np.arange(self.n_modes)
        return (idx > 0) & (idx % 2 == 0)

    @property
    def amplitudes(self) -> np.ndarray:
        """Sup-norm amplitude of each basis function."""
        k = self.frequencies.astype(float)
        amp = 1.0 / np.sqrt(np.pi * (1.0 + k**2))
        amp[0] = 1.0 / np.sqrt(TWO_PI)
        return amp

    def design_matrix(self, points) -> np.ndarray:
        """Matrix ``A`` with ``A[i, j] = phi_j(x_i)``."""
        x = _as_points(points)
        k = self.frequencies.astype(float)
        phase = np.outer(x, k)
        vals = np.where(self.is_sine, np.sin(phase), np.cos(phase))
        return vals * self.amplitudes

    def derivative_matrix(self, points) -> np.ndarray:
        """Matrix of basis derivatives ``phi_j'(x_i)``."""
        x = _as_points(points)
        k = self.frequencies.astype(float)
        phase = np.outer(x, k)
        vals = np.where(self.is_sine, np.cos(phase), -np.sin(phase))
        return vals * (k * self.amplitudes)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.n_modes)

    def unit(self, j: int) -> np.ndarray:
        e = np.zeros(self.n_modes)
        e[j] = 1.0
        return e


def _as_points(points) -> np.ndarray:
    x = np.atleast_1d(np.asarray(points, dtype=float))
    if x.ndim != 1:
        raise InvalidInputError("evaluation points must be a 1-D array")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("evaluation points must be finite")
    return x


def as_field(u, n_modes: int | None = None) -> np.ndarray:
    """Validate a (batch of) coefficient vector(s) and return it as a float array."""
    arr = np.asarray(u, dtype=float)
    if arr.ndim == 0:
        raise InvalidInputError("a field vector needs at least one axis")
    if n_modes is not None and arr.shape[-1] != n_modes:
        raise InvalidInputError(f"expected {n_modes} coefficients, got {arr.shape[-1]}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("field coefficients must be finite")
    return arr


def h1_norm(u) -> np.ndarray | float:
    """H^1 norm, i.e. the Euclidean norm of the coefficients (Parseval)."""
    arr = as_field(u)
    # rescale by the largest entry so tiny nonzero states do not underflow to norm 0
    scale = np.max(np.abs(arr), axis=-1)
    safe = np.where(scale > 0, scale, 1.0)
    x = arr / safe[..., None]
    out = safe * np.sqrt(np.einsum("...i,...i->...", x, x))
    return float(out) if out.ndim == 0 else out


def project(u, m_cut: int) -> np.ndarray:
    """Keep the first ``m_cut`` coefficients and zero the rest."""
    if m_cut < 0:
        raise InvalidInputError("m_cut must be nonnegative")
    arr = np.array(as_field(u), dtype=float, copy=True)
    arr[..., int(m_cut):] = 0.0
    return arr


def evaluate_at(u, x, basis: BasisSpec | None = None) -> np.ndarray | float:
    """Point values ``u(x)`` for scalar or array ``x``.

    Output shape is ``u.shape[:-1] + x.shape`` (scalar for one state, scalar x).
    """
    arr = as_field(u)
    basis = basis or BasisSpec(arr.shape[-1])
    if basis.n_modes != arr.shape[-1]:
        raise InvalidInputError("basis size does not match the state")
    x_arr = np.asarray(x, dtype=float)
    A = basis.design_matrix(x_arr.ravel())
    vals = arr @ A.T
    vals = vals.reshape(arr.shape[:-1] + x_arr.shape)
    return float(vals) if vals.ndim == 0 else vals
