"""Basic (same-noise, same-uniform) coupling and the diagnostics built on it."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize

from .function_space import InvalidInputError, as_field
from .metrics import SemimetricParams, d_s, lyapunov_V, tilde_d_s
from .mh import BLOCK, Noise, ProposalKernel, _alpha, draw_block

Z99 = 2.5758293035489004  # two-sided 99% normal quantile


@dataclass(frozen=True)
class DriftEstimate:
    kappa_hat: float
    K_hat: float
    residual: float
    violations: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass(frozen=True)
class ContractionEstimate:
    gamma1_hat: float
    ci_halfwidth: float
    pair_budget: int

    @property
    def upper(self) -> float:
        return self.gamma1_hat + self.ci_halfwidth

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def coupled_transition(U, V, noise: Noise, uniforms, kernel: ProposalKernel, potential, psi_u=None, psi_v=None):
    """Apply one shared noise draw and shared uniforms to both chains.

    Returns ``(U_next, V_next, psi_u_next, psi_v_next)``.
    """
    Us, Vs = kernel.propose(U, noise), kernel.propose(V, noise)
    pu = potential(U) if psi_u is None else psi_u
    pv = potential(V) if psi_v is None else psi_v
    pus, pvs = potential(Us), potential(Vs)
    with np.errstate(invalid="ignore"):
        acc_u = uniforms < _alpha(np.asarray(pu, float), np.asarray(pus, float))
        acc_v = uniforms < _alpha(np.asarray(pv, float), np.asarray(pvs, float))
    acc_u, acc_v = np.asarray(acc_u), np.asarray(acc_v)
    return (np.where(acc_u[..., None], Us, U), np.where(acc_v[..., None], Vs, V),
            np.where(acc_u, pus, pu), np.where(acc_v, pvs, pv))


def basic_coupled_step(u, v, kernel: ProposalKernel, potential, rng):
    """One step of the basic coupling: shared thinning noise, innovation and uniform."""
    u = as_field(u, kernel.n_modes)
    v = as_field(v, kernel.n_modes)
    batch = np.broadcast_shapes(u.shape, v.shape)[:-1]
    noise = kernel.draw(rng, batch)
    unif = rng.random(batch or None)
    un, vn, _, _ = coupled_transition(u, v, noise, unif, kernel, potential)
    return un, vn


@dataclass
class CoupledTrace:
    d: np.ndarray        # (n_steps, R)
    tilde_d: np.ndarray  # (n_steps, R)
    V_u: np.ndarray
    V_v: np.ndarray
    final_u: np.ndarray
    final_v: np.ndarray


def run_coupled_chain(u0, v0, n: int, kernel: ProposalKernel, potential, params: SemimetricParams, rngs) -> CoupledTrace:
    """Iterate the basic coupling for ``n`` steps, one stream per replica pair."""
    U = np.array(as_field(u0, kernel.n_modes), dtype=float, copy=True)
    V = np.array(as_field(v0, kernel.n_modes), dtype=float, copy=True)
    if U.ndim == 1:
        U, V = U[None], V[None]
    R = len(rngs)
    if U.shape[0] != R or V.shape[0] != R:
        raise InvalidInputError("need one stream per replica pair")
    hist = np.empty((4, n, R))
    pu, pv = potential(U), potential(V)
    t = 0
    while t < n:
        b = min(BLOCK, n - t)
        noise, unif = draw_block(kernel, rngs, b)
        for i in range(b):
            tau = None if noise.tau is None else noise.tau[i]
            U, V, pu, pv = coupled_transition(U, V, Noise(tau, noise.xi[i]), unif[i], kernel, potential, pu, pv)
            hist[0, t] = d_s(U, V, params)
            hist[1, t] = tilde_d_s(U, V, params)
            hist[2, t] = lyapunov_V(U, params.p)
            hist[3, t] = lyapunov_V(V, params.p)
            t += 1
    return CoupledTrace(hist[0], hist[1], hist[2], hist[3], U, V)


def estimate_contraction(u, v, reps: int, kernel: ProposalKernel, potential, params: SemimetricParams,
                         rng) -> ContractionEstimate:
    """Ratio of means E d_s(u_1, v_1) / d_s(u, v) under the basic coupling."""
    d0 = d_s(u, v, params)
    if d0 >= 1.0:
        raise InvalidInputError("contraction is only defined for d_s(u, v) < 1")
    if d0 == 0.0:
        raise InvalidInputError("contraction needs distinct states")
    U = np.broadcast_to(as_field(u, kernel.n_modes), (reps, kernel.n_modes))
    V = np.broadcast_to(as_field(v, kernel.n_modes), (reps, kernel.n_modes))
    noise = kernel.draw(rng, (reps,))
    unif = rng.random(reps)
    U1, V1, _, _ = coupled_transition(U, V, noise, unif, kernel, potential)
    d1 = np.asarray(d_s(U1, V1, params))
    half = Z99 * d1.std(ddof=1) / np.sqrt(reps) / d0
    return ContractionEstimate(float(d1.mean() / d0), float(half), int(reps))


def estimate_drift(u, reps: int, kernel: ProposalKernel, potential, p_exp: int, rng) -> tuple[float, float]:
    """Monte Carlo (P V)(u) for V = ||.||^p from ``reps`` one-step draws, with its standard error."""
    if reps < 1000:
        raise InvalidInputError("drift estimates need at least 1000 replicas")
    u = as_field(u, kernel.n_modes)
    U = np.broadcast_to(u, (reps, kernel.n_modes))
    noise = kernel.draw(rng, (reps,))
    Vp = kernel.propose(U, noise)
    with np.errstate(invalid="ignore"):
        acc = rng.random(reps) < _alpha(np.asarray(potential(u), float), np.asarray(potential(Vp), float))
    U1 = np.where(acc[:, None], Vp, U)
    vals = lyapunov_V(U1, p_exp)
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(reps))


def fit_drift(probe_V, estimates, std_errs=None, n_se: float = 3.0) -> DriftEstimate:
    """Fit the drift line (P V)(u_i) <= kappa V(u_i) + K with kappa in [0, 1) and K >= 0.

    (P V)(u) depends on the direction of u, not only on V(u), so the fit is a
    weighted least-squares line constrained to dominate every estimate up to
    ``n_se`` standard errors. The slope is fitted freely and then clamped
    below one, so a chain without drift shows excesses in ``violations``.
    ``residual`` is the largest positive excess of an estimate over the line.
    """
    x = np.asarray(probe_V, dtype=float)
    y = np.asarray(estimates, dtype=float)
    if x.size < 2:
        raise InvalidInputError("fit_drift needs at least two probe points")
    if x.shape != y.shape:
        raise InvalidInputError("probe points and estimates must match")
    se = np.zeros_like(y) if std_errs is None else np.asarray(std_errs, dtype=float)
    w = 1.0 / np.maximum(se, 1e-12 * max(1.0, float(np.abs(y).max()))) ** 2
    w = w / w.max()
    lower = y - n_se * se
    kappa, K = _wls_line(x, y, w)
    kappa, K = max(kappa, 0.0), max(K, 0.0)
    if np.any(kappa * x + K < lower):
        res = minimize(lambda c: np.sum(w * (c[0] * x + c[1] - y) ** 2),
                       x0=[kappa, max(K, float(np.max(lower - kappa * x)))],
                       method="SLSQP", bounds=[(0.0, None), (0.0, None)],
                       constraints=[{"type": "ineq", "fun": lambda c: c[0] * x + c[1] - lower}])
        kappa, K = max(float(res.x[0]), 0.0), max(float(res.x[1]), 0.0)
    # a slope of one or more means no drift; clamping leaves the excess visible
    kappa = min(kappa, float(np.nextafter(1.0, 0.0)))
    excess = y - (kappa * x + K)
    viol = int(np.sum(excess > n_se * se + 1e-6 * np.maximum(1.0, np.abs(y))))
    return DriftEstimate(kappa, float(K), float(max(0.0, excess.max())), viol)


def _wls_line(x, y, w):
    A = np.stack([x, np.ones_like(x)], axis=1) * np.sqrt(w)[:, None]
    coef, *_ = np.linalg.lstsq(A, y * np.sqrt(w), rcond=None)
    return float(coef[0]), float(coef[1])


@dataclass(frozen=True)
class SmallSetRow:
    n: int
    mean: float
    std_err: float
    p99: float


def sample_sublevel(prior_sampler, R: float, p: int, n_pairs: int, rng, max_tries: int = 1000):
    """Prior draws conditioned on V(u) <= R, by rejection."""
    out, tried, kept = [], 0, 0
    while kept < n_pairs:
        batch = prior_sampler(rng, 4 * n_pairs)
        tried += batch.shape[0]
        good = batch[lyapunov_V(batch, p) <= R]
        out.append(good)
        kept += good.shape[0]
        if tried >= max_tries * n_pairs and kept / tried < 1e-3:
            raise InvalidInputError(f"sublevel set V <= {R} rejects more than 99.9% of prior draws")
    return np.concatenate(out)[:n_pairs]


def smallset_distances(R: float, n_grid, reps: int, kernel: ProposalKernel, potential, params: SemimetricParams,
                       prior_sampler, rngs, pair_rng) -> dict[int, np.ndarray]:
    """d_s(u_n, v_n) per replica for each n in ``n_grid``, from coupled chains started in {V <= R}."""
    if R <= 0:
        raise InvalidInputError("R must be positive")
    grid = sorted(set(int(n) for n in n_grid))
    if not grid or grid[0] < 0:
        raise InvalidInputError("step counts must be nonnegative and the grid nonempty")
    U0 = sample_sublevel(prior_sampler, R, params.p, reps, pair_rng)
    V0 = sample_sublevel(prior_sampler, R, params.p, reps, pair_rng)
    out = {}
    if grid[0] == 0:
        out[0] = np.asarray(d_s(U0, V0, params))
    if grid[-1] > 0:
        tr = run_coupled_chain(U0, V0, grid[-1], kernel, potential, params, rngs)
        out.update({n: tr.d[n - 1] for n in grid if n > 0})
    return out


def smallset_probe(R: float, n_grid, reps: int, kernel: ProposalKernel, potential, params: SemimetricParams,
                   prior_sampler, rngs, pair_rng) -> list[SmallSetRow]:
    """Mean, standard error and 99th percentile of d_s(u_n, v_n) over pairs in {V <= R}."""
    d = smallset_distances(R, n_grid, reps, kernel, potential, params, prior_sampler, rngs, pair_rng)
    return [_row(n, v) for n, v in d.items()]


def _row(n, d):
    return SmallSetRow(n, float(d.mean()), float(d.std(ddof=1) / np.sqrt(d.size)), float(np.quantile(d, 0.99)))
