"""Likelihood potentials.

A potential is any callable mapping a batch of states ``(..., n_modes)`` to
values of shape ``(...)`` with an attribute ``q`` (the exponent of its local
Lipschitz bound). All potentials here are immutable and vectorised.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .function_space import BasisSpec, InvalidInputError, as_field, h1_norm, project


@dataclass(frozen=True)
class ObservationData:
    points: np.ndarray
    values: np.ndarray
    sigma: float = 1.0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).ravel()
        vals = np.asarray(self.values, dtype=float).ravel()
        if pts.shape != vals.shape:
            raise InvalidInputError("points and values must have the same length")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(vals))):
            raise InvalidInputError("observation data must be finite")
        if np.unique(pts).size != pts.size:
            raise InvalidInputError("observation points must be distinct")
        if not self.sigma > 0:
            raise InvalidInputError("sigma must be positive")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    @property
    def n_obs(self) -> int:
        return self.points.size

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y"])
            for x, y in zip(self.points, self.values):
                w.writerow([repr(float(x)), repr(float(y))])

    @classmethod
    def from_csv(cls, path, sigma: float = 1.0) -> "ObservationData":
        with open(Path(path), newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls([float(r["x"]) for r in rows], [float(r["y"]) for r in rows], sigma)


def equispaced_points(n_obs: int, offset: float = 0.3) -> np.ndarray:
    return offset + 2.0 * np.pi * np.arange(n_obs) / n_obs


def synthesize_data(forward, truth, points, sigma: float, rng: np.random.Generator) -> ObservationData:
    """Noisy observations ``forward(truth) + N(0, sigma^2)``."""
    clean = np.asarray(forward(truth), dtype=float)
    return ObservationData(points, clean + sigma * rng.standard_normal(clean.shape), sigma)


# -- semi-supervised learning ------------------------------------------------------

@dataclass(frozen=True)
class SslPotential:
    """(1 / 2 sigma^2) sum_j (tanh(h u(x_j)) - y_j)^2; globally Lipschitz, q = 0."""

    data: ObservationData
    basis: BasisSpec = BasisSpec()
    h: float = 1.0
    q: int = field(default=0, init=False)

    def __post_init__(self):
        if not self.h > 0:
            raise InvalidInputError("h must be positive")
        object.__setattr__(self, "_A", self.basis.design_matrix(self.data.points))

    def observe(self, u) -> np.ndarray:
        """Noise-free observation map tanh(h u(x_j))."""
        return np.tanh(self.h * (as_field(u, self.basis.n_modes) @ self._A.T))

    def __call__(self, u):
        r = self.observe(u) - self.data.values
        return 0.5 * np.sum(r * r, axis=-1) / self.data.sigma**2

    def upper_bound(self) -> float:
        return 0.5 * float(np.sum((1.0 + np.abs(self.data.values)) ** 2)) / self.data.sigma**2

    def tail_floor(self) -> float:
        """Lower bound on exp(Psi(u) - Psi(v)) valid for every pair of states."""
        y1 = float(np.sum(np.abs(self.data.values)))
        return float(np.exp(-(4.0 * y1 + self.data.n_obs) / (2.0 * self.data.sigma**2)))


def ssl_eval(p: SslPotential, u):
    return p(u)


# -- deconvolution -------------------------------------------------------------------

@dataclass(frozen=True)
class ConvolutionKernel:
    """Fourier symbol g_hat(k) of a smooth periodic kernel; default exp(-k^2 / 2)."""

    symbol: tuple | None = None
    width: float = 1.0

    def multipliers(self, basis: BasisSpec) -> np.ndarray:
        k = basis.frequencies
        if self.symbol is None:
            ghat = np.exp(-0.5 * (self.width * k) ** 2)
        else:
            sym = np.asarray(self.symbol, dtype=float)
            if np.any(sym < 0):
                raise InvalidInputError("kernel symbol must be nonnegative")
            ghat = np.where(k < sym.size, sym[np.minimum(k, sym.size - 1)], 0.0)
        return np.where(k == 0, 2.0 * np.pi, np.pi) * ghat

    def kernel_values(self, t, basis: BasisSpec) -> np.ndarray:
        """g(t) = sum_k g_hat(k) cos(k t) over the frequencies of ``basis``.

        With this normalisation ``g * cos(k .) = pi g_hat(k) cos(k .)`` for
        ``k >= 1`` and ``g * 1 = 2 pi g_hat(0)``.
        """
        t = np.asarray(t, dtype=float)
        mult = self.multipliers(basis)
        kmax = int(basis.frequencies.max())
        ghat = np.array([mult[0] / (2 * np.pi)] + [mult[2 * k - 1] / np.pi for k in range(1, kmax + 1)])
        return np.cos(np.multiply.outer(t, np.arange(kmax + 1))) @ ghat


def deconv_forward(kernel: ConvolutionKernel, u, points, basis: BasisSpec | None = None) -> np.ndarray:
    """(g * u)(x_j): diagonal scaling of each frequency, then point evaluation."""
    u = as_field(u)
    basis = basis or BasisSpec(u.shape[-1])
    A = basis.design_matrix(points) * kernel.multipliers(basis)
    return u @ A.T


@dataclass(frozen=True)
class DeconvolutionPotential:
    """(1/2) ||G(u) - y||^2 with (G u)_j = (g * u)(x_j); quadratic, q = 1."""

    data: ObservationData
    kernel: ConvolutionKernel = ConvolutionKernel()
    basis: BasisSpec = BasisSpec()
    q: int = field(default=1, init=False)

    def __post_init__(self):
        G = self.basis.design_matrix(self.data.points) * self.kernel.multipliers(self.basis)
        object.__setattr__(self, "_G", G)

    @property
    def matrix(self) -> np.ndarray:
        return self._G

    def forward(self, u) -> np.ndarray:
        return as_field(u, self.basis.n_modes) @ self._G.T

    def __call__(self, u):
        fwd = self.forward(u)
        if fwd.shape[-1] != self.data.n_obs:
            raise InvalidInputError("forward output does not match the data dimension")
        r = fwd - self.data.values
        return 0.5 * np.sum(r * r, axis=-1)

    def operator_norm(self, iterations: int = 200) -> float:
        """||G|| from H^1 to R^m, by power iteration on G^T G."""
        G = self._G
        x = np.ones(G.shape[1]) / np.sqrt(G.shape[1])
        est = 0.0
        for _ in range(iterations):
            y = G.T @ (G @ x)
            nrm = np.linalg.norm(y)
            if nrm == 0:
                return 0.0
            x = y / nrm
            est = nrm
        return float(np.sqrt(est))


def deconv_eval(kernel: ConvolutionKernel, data: ObservationData, u, basis: BasisSpec | None = None):
    fwd = deconv_forward(kernel, u, data.points, basis)
    if fwd.shape[-1] != data.n_obs:
        raise InvalidInputError("forward output does not match the data dimension")
    r = fwd - data.values
    return 0.5 * np.sum(r * r, axis=-1)


# -- modified potentials ---------------------------------------------------------------

@dataclass(frozen=True)
class TailModParams:
    eps_t: float = 10.0
    R0: float = 5.0

    def __post_init__(self):
        if not (self.eps_t > 0 and self.R0 > 0):
            raise InvalidInputError("eps_t and R0 must be positive")

    @property
    def activation_radius(self) -> float:
        return self.R0 / np.sqrt(self.eps_t)


def tail_guidance_bound(c: float, G_norm: float) -> float:
    """Smallest tail slope for which the growth inequality has a positive leading term."""
    return 2.0 * c**2 / (1.0 - c**2) * G_norm**2


@dataclass(frozen=True)
class TailModifiedPotential:
    """base(u) + max(0, eps_t ||u||^2 - R0^2); unchanged inside the activation radius."""

    base: object
    params: TailModParams = TailModParams()

    @property
    def q(self):
        return max(1, getattr(self.base, "q", 0))

    def tail_term(self, u):
        n2 = np.asarray(h1_norm(u)) ** 2
        return np.maximum(0.0, self.params.eps_t * n2 - self.params.R0**2)

    def __call__(self, u):
        return self.base(u) + self.tail_term(u)

    def check_guidance(self, c: float, G_norm: float) -> bool:
        bound = tail_guidance_bound(c, G_norm)
        ok = self.params.eps_t > bound
        if not ok:
            warnings.warn(f"eps_t={self.params.eps_t} does not exceed the guidance bound {bound:.4g}",
                          stacklevel=2)
        return ok


def tail_modified_eval(base, t: TailModParams, u):
    return TailModifiedPotential(base, t)(u)


@dataclass(frozen=True)
class ProjectedPotential:
    """base(project(u, m_cut))."""

    base: object
    m_cut: int

    @property
    def q(self):
        return getattr(self.base, "q", 0)

    def __call__(self, u):
        return self.base(project(u, self.m_cut))


def projected_eval(base, m_cut: int, u):
    return ProjectedPotential(base, m_cut)(u)


# -- simple potentials ------------------------------------------------------------------

@dataclass(frozen=True)
class ZeroPotential:
    q: int = 0

    def __call__(self, u):
        return np.zeros(as_field(u).shape[:-1])


@dataclass(frozen=True)
class QuadraticPotential:
    """(u_0 - center)^2 / (2 scale^2) on the first coefficient; the 1-D test target."""

    center: float = 1.0
    scale: float = 1.0
    q: int = 1

    def __call__(self, u):
        x = as_field(u)[..., 0]
        return 0.5 * ((x - self.center) / self.scale) ** 2


@dataclass(frozen=True)
class HugePotential:
    """Effectively infinite away from one anchor state; a chain started there never moves."""

    anchor: np.ndarray
    height: float = 1e300
    q: int = 0

    def __call__(self, u):
        u = as_field(u)
        far = np.any(u != np.asarray(self.anchor), axis=-1)
        return np.where(far, self.height, 0.0)
