"""Priors, thinning kernels and innovation measures.

Every sampler takes an explicit ``numpy.random.Generator``. Replica streams
come from :func:`make_rng`, which hashes ``(master_seed, replica_index)``
through ``numpy.random.SeedSequence`` (its documented, platform-independent
entropy mixing) into a PCG64 bit generator.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .function_space import BasisSpec, as_field


class ParameterError(ValueError):
    """Raised when a measure or kernel parameter is outside its domain."""


def make_rng(master_seed: int, replica: int = 0) -> np.random.Generator:
    """Independent, reproducible stream for one replica."""
    if master_seed < 0 or replica < 0:
        raise ParameterError("seeds and replica indices must be nonnegative")
    ss = np.random.SeedSequence([int(master_seed), int(replica)])
    return np.random.Generator(np.random.PCG64(ss))


def make_rngs(master_seed: int, n: int, offset: int = 0) -> list[np.random.Generator]:
    return [make_rng(master_seed, offset + i) for i in range(n)]


def make_stream(master_seed: int, tag: str, index: int = 0) -> np.random.Generator:
    """Named auxiliary stream; never collides with the replica streams of :func:`make_rng`."""
    if master_seed < 0 or index < 0:
        raise ParameterError("seeds and indices must be nonnegative")
    key = int.from_bytes(tag.encode("utf-8")[:16].ljust(16, b"\0"), "little")
    ss = np.random.SeedSequence([int(master_seed), 0xA5A5A5A5, key, int(index)])
    return np.random.Generator(np.random.PCG64(ss))


def _check_beta(beta):
    if not 0.0 < beta < 1.0:
        raise ParameterError(f"beta must lie in (0, 1), got {beta!r}")


def _check_shape(r):
    if not r > 0:
        raise ParameterError(f"shape parameter r must be positive, got {r!r}")


def _size(size, basis: BasisSpec):
    if size is None:
        return (basis.n_modes,)
    if np.isscalar(size):
        return (int(size), basis.n_modes)
    return tuple(size) + (basis.n_modes,)


@dataclass(frozen=True)
class GammaPriorSpec:
    r: float = 0.5
    basis: BasisSpec = BasisSpec()

    def __post_init__(self):
        _check_shape(self.r)


@dataclass(frozen=True)
class GaussianPriorSpec:
    basis: BasisSpec = BasisSpec()


@dataclass(frozen=True)
class CompoundPoissonSpec:
    """Poisson(rate) many N(0, jump_std^2) jumps; jumps with |xi| < trunc_eps are the remainder."""

    rate: float = 1.0
    jump_std: float = 1.0
    trunc_eps: float = 0.0

    def __post_init__(self):
        if not self.rate > 0:
            raise ParameterError("rate must be positive")
        if not self.jump_std > 0:
            raise ParameterError("jump_std must be positive")
        if not self.trunc_eps >= 0:
            raise ParameterError("trunc_eps must be nonnegative")

    @property
    def kept_mass(self) -> float:
        """c_eps = P(|xi| >= eps) for one jump."""
        return float(1.0 - erf(self.trunc_eps / (self.jump_std * np.sqrt(2.0))))

    @property
    def kept_rate(self) -> float:
        return self.rate * self.kept_mass

    @property
    def remainder_rate(self) -> float:
        return self.rate * (1.0 - self.kept_mass)


# -- Gamma prior and Beta thinning ------------------------------------------------

def sample_gamma_prior(spec: GammaPriorSpec, rng: np.random.Generator, size=None) -> np.ndarray:
    """Coefficients sqrt(lambda_j) * eta_j with eta_j ~ Gamma(r, 1)."""
    shape = _size(size, spec.basis)
    return spec.basis.sqrt_eigenvalues * rng.standard_gamma(spec.r, size=shape)


def sample_gaussian_prior(spec: GaussianPriorSpec, rng: np.random.Generator, size=None) -> np.ndarray:
    shape = _size(size, spec.basis)
    return spec.basis.sqrt_eigenvalues * rng.standard_normal(shape)


def sample_beta_factors(r: float, beta: float, rng: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. Beta(r beta, r (1 - beta)) thinning factors."""
    _check_shape(r)
    _check_beta(beta)
    return rng.beta(r * beta, r * (1.0 - beta), size=shape)


def sample_beta_thinning(u, r: float, beta: float, rng: np.random.Generator) -> np.ndarray:
    u = as_field(u)
    return sample_beta_factors(r, beta, rng, u.shape) * u


def sample_gamma_innovation(r: float, beta: float, basis: BasisSpec, rng: np.random.Generator,
                            size=None) -> np.ndarray:
    """sqrt(lambda_j) * xi_j with xi_j ~ Gamma(r (1 - beta), 1)."""
    _check_shape(r)
    _check_beta(beta)
    shape = _size(size, basis)
    return basis.sqrt_eigenvalues * rng.standard_gamma(r * (1.0 - beta), size=shape)


def thinning_contraction_constant(r: float, beta: float) -> float:
    """sqrt(E tau^2) for tau ~ Beta(r beta, r (1 - beta))."""
    _check_shape(r)
    _check_beta(beta)
    return float(np.sqrt(beta * (r * beta + 1.0) / (r + 1.0)))


# -- pCN ------------------------------------------------------------------------

def sample_gaussian_innovation(beta: float, basis: BasisSpec, rng: np.random.Generator,
                               size=None) -> np.ndarray:
    _check_beta(beta)
    shape = _size(size, basis)
    return np.sqrt((1.0 - beta**2) * basis.eigenvalues) * rng.standard_normal(shape)


def sample_pcn_pair(u, beta: float, basis: BasisSpec, rng: np.random.Generator):
    """Deterministic thinning ``beta * u`` and a N(0, (1 - beta^2) C) innovation."""
    _check_beta(beta)
    u = as_field(u, basis.n_modes)
    return beta * u, sample_gaussian_innovation(beta, basis, rng, size=u.shape[:-1] or None)


# -- compound Poisson -------------------------------------------------------------

def _sum_segments(values: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Sum consecutive runs of ``values`` with lengths ``counts`` (zero for empty runs)."""
    flat = counts.ravel()
    ids = np.repeat(np.arange(flat.size), flat)
    out = np.bincount(ids, weights=values, minlength=flat.size)
    return out.reshape(counts.shape)


def _conditional_normal(rng, n: int, std: float, eps: float, kept: bool) -> np.ndarray:
    """N(0, std^2) restricted to |x| >= eps (kept) or |x| < eps (remainder), by rejection."""
    out = np.empty(n)
    filled = 0
    while filled < n:
        need = n - filled
        draw = std * rng.standard_normal(max(2 * need, 64))
        mask = np.abs(draw) >= eps if kept else np.abs(draw) < eps
        good = draw[mask][:need]
        out[filled:filled + good.size] = good
        filled += good.size
    return out


def sample_cp(spec: CompoundPoissonSpec, rng: np.random.Generator, size=None):
    """Full compound Poisson draw sum_{j <= N} xi_j, N ~ Poisson(rate)."""
    counts = rng.poisson(spec.rate, size=size)
    counts_arr = np.asarray(counts)
    jumps = spec.jump_std * rng.standard_normal(int(counts_arr.sum()))
    out = _sum_segments(jumps, counts_arr)
    return float(out) if out.ndim == 0 else out


def sample_cp_truncated(spec: CompoundPoissonSpec, rng: np.random.Generator, size=None):
    """Poisson(rate * c_eps) many jumps drawn from the kept region |xi| >= eps."""
    counts = np.asarray(rng.poisson(spec.kept_rate, size=size))
    jumps = _conditional_normal(rng, int(counts.sum()), spec.jump_std, spec.trunc_eps, kept=True)
    out = _sum_segments(jumps, counts)
    return float(out) if out.ndim == 0 else out


def sample_cp_remainder(spec: CompoundPoissonSpec, rng: np.random.Generator, size=None):
    """Poisson(rate * (1 - c_eps)) many jumps from the discarded region |xi| < eps."""
    lam = spec.remainder_rate
    counts = np.asarray(rng.poisson(lam, size=size)) if lam > 0 else np.zeros(size or (), dtype=int)
    jumps = _conditional_normal(rng, int(counts.sum()), spec.jump_std, spec.trunc_eps, kept=False)
    out = _sum_segments(jumps, counts)
    return float(out) if out.ndim == 0 else out


def sample_cp_split(spec: CompoundPoissonSpec, eps_values, rng: np.random.Generator, size):
    """One compound Poisson draw split into kept parts for several cut-offs.

    Marks each jump of a single full draw by ``|xi| >= eps``. By Poisson
    marking, the kept sum for a given ``eps`` has the law of
    :func:`sample_cp_truncated` and the rest that of :func:`sample_cp_remainder`,
    independently, so the returned draws are coupled across ``eps``.

    Returns ``(full, kept)`` with ``kept`` of shape ``(len(eps_values),) + size``.
    """
    counts = np.asarray(rng.poisson(spec.rate, size=size))
    jumps = spec.jump_std * rng.standard_normal(int(counts.sum()))
    full = _sum_segments(jumps, counts)
    kept = np.stack([_sum_segments(np.where(np.abs(jumps) >= e, jumps, 0.0), counts)
                     for e in eps_values]) if len(eps_values) else np.empty((0,) + full.shape)
    return full, kept


def remainder_moment(eps: float, q: float, rng: np.random.Generator, n: int,
                     spec: CompoundPoissonSpec | None = None) -> tuple[float, float]:
    """Monte Carlo E[(1 + |w_eps|)^(2q) |w_eps|] with its standard error."""
    base = spec or CompoundPoissonSpec()
    w = sample_cp_remainder(CompoundPoissonSpec(base.rate, base.jump_std, eps), rng, size=n)
    vals = (1.0 + np.abs(w)) ** (2 * q) * np.abs(w)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n))


# -- Gaussian mixture splitting ---------------------------------------------------

def sample_gaussian_mixture_split(eps: float, beta: float | None, rng: np.random.Generator, n: int):
    """Exact innovation of a N(0,1) * N(0, eps^2) prior and its two-part split.

    Returns ``(xi, xi_eps, w_eps)``: ``xi`` has variance ``s (1 + eps^2)``, and
    ``xi_eps``, ``w_eps`` are independent with variances ``s`` and ``s eps^2``,
    where ``s = 1 - beta^2`` (or 1 when ``beta`` is None).
    """
    s = 1.0 if beta is None else 1.0 - beta**2
    xi = np.sqrt(s * (1.0 + eps**2)) * rng.standard_normal(n)
    xi_eps = np.sqrt(s) * rng.standard_normal(n)
    w_eps = np.sqrt(s) * eps * rng.standard_normal(n)
    return xi, xi_eps, w_eps
