"""Independent ground truths: quadrature posteriors and grid solves of invariant measures."""
from __future__ import annotations

import numpy as np
from scipy import integrate
from scipy.special import gammaln
from scipy.stats import norm


def gamma_posterior_bin_masses(edges, r: float, psi, u_max: float) -> tuple[np.ndarray, float]:
    """Masses of the density u^(r-1) e^(-u - psi(u)) on the bins ``edges`` and beyond ``u_max``.

    Returns ``(masses, tail)`` normalised so that ``masses.sum() + tail == 1``.
    """
    def dens(u):
        return np.exp((r - 1.0) * np.log(u) - u - psi(u) - gammaln(r))

    masses = np.array([integrate.quad(dens, a, b, limit=200, epsabs=1e-14, epsrel=1e-12)[0]
                       for a, b in zip(edges[:-1], edges[1:])])
    tail = integrate.quad(dens, u_max, np.inf, limit=200, epsabs=1e-14)[0]
    z = masses.sum() + tail
    return masses / z, tail / z


def cp_continuous_density(x, rate: float = 1.0, jump_std: float = 1.0, k_max: int = 40) -> np.ndarray:
    """Absolutely continuous part of a compound Poisson law with N(0, jump_std^2) jumps."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    logw = -rate
    for k in range(1, k_max + 1):
        logw += np.log(rate) - np.log(k)
        out += np.exp(logw) * norm.pdf(x, scale=jump_std * np.sqrt(k))
    return out


def _spread_atoms(rows, targets, masses, grid):
    """Add point masses at ``targets`` to ``rows`` by linear interpolation onto ``grid``."""
    h = grid[1] - grid[0]
    pos = np.clip((targets - grid[0]) / h, 0.0, grid.size - 1.0)
    lo = np.minimum(np.floor(pos).astype(int), grid.size - 2)
    frac = pos - lo
    idx = np.arange(rows.shape[0])
    np.add.at(rows, (idx, lo), masses * (1.0 - frac))
    np.add.at(rows, (idx, lo + 1), masses * frac)


def invariant_on_grid(beta: float, psi, innovation: str = "cp", rate: float = 1.0, jump_std: float = 1.0,
                      lo: float = -12.0, hi: float = 14.0, n_grid: int = 2001):
    """Invariant law of the 1-D MH chain with proposal beta u + xi, as masses on a grid.

    The transition kernel is discretised with trapezoid weights (Nystrom) and
    the stationary vector of the resulting stochastic matrix is solved for
    directly. ``innovation`` is ``"cp"`` (compound Poisson, including its atom
    at zero) or ``"gauss"`` (N(0, 1 - beta^2)).
    Returns ``(grid, masses)``.
    """
    grid = np.linspace(lo, hi, n_grid)
    h = grid[1] - grid[0]
    w = np.full(n_grid, h)
    w[[0, -1]] = h / 2
    p = psi(grid)
    diff = grid[None, :] - beta * grid[:, None]
    if innovation == "cp":
        dens = cp_continuous_density(diff, rate, jump_std)
        atom = np.exp(-rate)
    elif innovation == "gauss":
        dens = norm.pdf(diff, scale=np.sqrt(1.0 - beta**2))
        atom = 0.0
    else:
        raise ValueError(f"unknown innovation {innovation!r}")
    alpha = np.exp(np.minimum(p[:, None] - p[None, :], 0.0))
    K = dens * alpha * w[None, :]
    if atom > 0:
        a0 = np.exp(np.minimum(p - psi(beta * grid), 0.0))
        _spread_atoms(K, beta * grid, atom * a0, grid)
    K[np.diag_indices(n_grid)] += np.maximum(0.0, 1.0 - K.sum(axis=1))
    # stationary row vector: pi (K - I) = 0, sum pi = 1
    A = (K - np.eye(n_grid)).T
    A[-1] = 1.0
    b = np.zeros(n_grid)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    return grid, pi


def invariant_mean(beta: float, psi, innovation: str = "cp", **kw) -> float:
    grid, pi = invariant_on_grid(beta, psi, innovation, **kw)
    return float(pi @ grid)


def sample_from_masses(grid, masses, rng, n: int) -> np.ndarray:
    """Draws from the piecewise-linear law through the grid masses (jittered within a cell)."""
    pm = np.clip(masses, 0.0, None)
    pm = pm / pm.sum()
    idx = rng.choice(grid.size, size=n, p=pm)
    h = grid[1] - grid[0]
    return grid[idx] + h * (rng.random(n) - 0.5)
