"""RCAR Metropolis-Hastings: proposal kernels, the accept/reject step and chain runners.

A proposal is ``v = thin(u) + xi``. Kernels split each step into a noise draw
(:meth:`ProposalKernel.draw`) and a deterministic map
(:meth:`ProposalKernel.propose`), so coupled chains can share noise by
passing the same draw to several states.
"""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import measures
from .function_space import BasisSpec, InvalidInputError, as_field, evaluate_at, h1_norm
from .measures import CompoundPoissonSpec, ParameterError

BLOCK = 1024  # steps of noise pre-drawn per replica stream; changing it changes every trace


# -- thinning kernels ----------------------------------------------------------------

@dataclass(frozen=True)
class BetaThinning:
    """zeta_j = tau_j u_j with tau_j ~ Beta(r beta, r (1 - beta))."""

    r: float
    beta: float

    def __post_init__(self):
        measures._check_shape(self.r)
        measures._check_beta(self.beta)

    def draw(self, rng, shape):
        return measures.sample_beta_factors(self.r, self.beta, rng, shape)

    def apply(self, u, tau):
        return tau * u

    @property
    def contraction(self) -> float:
        return measures.thinning_contraction_constant(self.r, self.beta)


@dataclass(frozen=True)
class DeterministicThinning:
    """zeta = beta u (pCN)."""

    beta: float

    def __post_init__(self):
        measures._check_beta(self.beta)

    def draw(self, rng, shape):
        return None

    def apply(self, u, tau):
        return self.beta * u

    @property
    def contraction(self) -> float:
        return self.beta


# -- innovations ------------------------------------------------------------------------

@dataclass(frozen=True)
class GammaInnovation:
    r: float
    beta: float
    basis: BasisSpec = BasisSpec()

    def draw(self, rng, batch_shape=()):
        return measures.sample_gamma_innovation(self.r, self.beta, self.basis, rng, size=batch_shape)


@dataclass(frozen=True)
class GaussianInnovation:
    beta: float
    basis: BasisSpec = BasisSpec()

    def draw(self, rng, batch_shape=()):
        return measures.sample_gaussian_innovation(self.beta, self.basis, rng, size=batch_shape)


@dataclass(frozen=True)
class CompoundPoissonInnovation:
    """Scalar compound Poisson innovation; ``truncated`` drops jumps with |xi| < trunc_eps."""

    spec: CompoundPoissonSpec = CompoundPoissonSpec()
    truncated: bool = False
    basis: BasisSpec = field(default=BasisSpec(1), init=False)

    def draw(self, rng, batch_shape=()):
        sampler = measures.sample_cp_truncated if self.truncated else measures.sample_cp
        size = tuple(batch_shape) if batch_shape != () else None
        return np.asarray(sampler(self.spec, rng, size=size), dtype=float)[..., None]


class Noise(NamedTuple):
    tau: np.ndarray | None
    xi: np.ndarray


@dataclass(frozen=True)
class ProposalKernel:
    """Proposal Q(u, .) = Law(thin(u) + xi)."""

    thinning: BetaThinning | DeterministicThinning
    innovation: GammaInnovation | GaussianInnovation | CompoundPoissonInnovation

    def __post_init__(self):
        th, inn = self.thinning, self.innovation
        if isinstance(inn, GammaInnovation):
            ok = isinstance(th, BetaThinning) and th.r == inn.r and th.beta == inn.beta
        elif isinstance(inn, GaussianInnovation):
            ok = isinstance(th, DeterministicThinning) and th.beta == inn.beta
        elif isinstance(inn, CompoundPoissonInnovation):
            ok = isinstance(th, DeterministicThinning)
        else:
            ok = False
        if not ok:
            raise ParameterError(f"unsupported or inconsistent pairing {type(th).__name__} + {type(inn).__name__}")

    @property
    def beta(self) -> float:
        return self.thinning.beta

    @property
    def basis(self) -> BasisSpec:
        return self.innovation.basis

    @property
    def n_modes(self) -> int:
        return self.basis.n_modes

    def draw(self, rng, batch_shape=()) -> Noise:
        batch_shape = tuple(batch_shape)
        tau = self.thinning.draw(rng, batch_shape + (self.n_modes,))
        return Noise(tau, self.innovation.draw(rng, batch_shape))

    def thin(self, u, noise: Noise):
        return self.thinning.apply(u, noise.tau)

    def propose(self, u, noise: Noise):
        return self.thinning.apply(u, noise.tau) + noise.xi


def gamma_rcar_kernel(r: float, beta: float, basis: BasisSpec) -> ProposalKernel:
    return ProposalKernel(BetaThinning(r, beta), GammaInnovation(r, beta, basis))


def pcn_kernel(beta: float, basis: BasisSpec) -> ProposalKernel:
    return ProposalKernel(DeterministicThinning(beta), GaussianInnovation(beta, basis))


def cp_kernel(beta: float, spec: CompoundPoissonSpec = CompoundPoissonSpec(), truncated=False) -> ProposalKernel:
    return ProposalKernel(DeterministicThinning(beta), CompoundPoissonInnovation(spec, truncated))


# -- accept / reject -------------------------------------------------------------------

def _alpha(a, b):
    diff = a - b
    if np.isnan(diff).any():
        raise InvalidInputError("acceptance probability needs non-NaN potentials")
    # exp of a nonpositive argument never overflows; +inf - +inf is caught above
    return np.exp(np.minimum(diff, 0.0))


def acceptance_prob(psi_u, psi_v):
    """min(1, exp(psi_u - psi_v)); overflow clamps to 1, NaN is an error."""
    with np.errstate(invalid="ignore"):
        out = _alpha(np.asarray(psi_u, dtype=float), np.asarray(psi_v, dtype=float))
    return float(out) if out.ndim == 0 else out


def accept_mask(psi_u, psi_v, uniforms):
    """One shared rule for every chain: accept iff the uniform falls below alpha."""
    return np.asarray(uniforms) < acceptance_prob(psi_u, psi_v)


def rcar_step(u, kernel: ProposalKernel, potential, rng, psi_u=None):
    """One RCAR-MH transition. Returns ``(u_next, accepted, proposal)``."""
    u = as_field(u, kernel.n_modes)
    noise = kernel.draw(rng, u.shape[:-1])
    v = kernel.propose(u, noise)
    uniform = rng.random(u.shape[:-1] or None)
    pu = potential(u) if psi_u is None else psi_u
    acc = accept_mask(pu, potential(v), uniform)
    u_next = np.where(np.asarray(acc)[..., None], v, u)
    return u_next, (bool(acc) if np.ndim(acc) == 0 else acc), v


def draw_block(kernel: ProposalKernel, rngs: Sequence[np.random.Generator], n: int):
    """``n`` steps of noise and uniforms for each replica, stacked as ``(n, R, ...)``."""
    draws = [kernel.draw(rng, (n,)) for rng in rngs]
    unif = [rng.random(n) for rng in rngs]
    tau = None if draws[0].tau is None else np.stack([d.tau for d in draws], axis=1)
    xi = np.stack([d.xi for d in draws], axis=1)
    return Noise(tau, xi), np.stack(unif, axis=1)


# -- functionals ----------------------------------------------------------------------

_FUNC_RE = re.compile(r"^(norm|potential|coeff\((\d+)\)|eval_at\(([^)]+)\))$")


def make_functional(name: str, basis: BasisSpec | None = None):
    """Parse ``norm``, ``potential``, ``coeff(j)`` or ``eval_at(x)`` into ``f(states, psi)``."""
    m = _FUNC_RE.match(name.replace(" ", ""))
    if m is None:
        raise InvalidInputError(f"unknown functional {name!r}")
    if m.group(1) == "norm":
        return lambda U, psi: np.asarray(h1_norm(U))
    if m.group(1) == "potential":
        return lambda U, psi: np.asarray(psi, dtype=float)
    if m.group(2) is not None:
        j = int(m.group(2))
        return lambda U, psi: U[..., j]
    x = float(m.group(3))
    return lambda U, psi: np.asarray(evaluate_at(U, x, basis))


def functional_battery(n_coeffs: int = 8, points=(0.5, 2.0, 4.0)) -> tuple[str, ...]:
    return ("norm",) + tuple(f"coeff({j})" for j in range(n_coeffs)) + tuple(f"eval_at({x})" for x in points)


# -- chains ------------------------------------------------------------------------------

@dataclass(frozen=True)
class ChainConfig:
    n_steps: int
    burn_in: int = 0
    seed: int = 0
    record: tuple = ("norm",)
    store_states: bool = False

    def __post_init__(self):
        if self.n_steps < 0 or self.burn_in < 0:
            raise ParameterError("n_steps and burn_in must be nonnegative")
        if self.n_steps > 0 and self.burn_in >= self.n_steps:
            raise ParameterError("burn_in must be smaller than n_steps")
        object.__setattr__(self, "record", tuple(self.record))


@dataclass
class ChainTrace:
    names: tuple
    recorded: np.ndarray
    accepted: np.ndarray
    final_state: np.ndarray
    burn_in: int = 0
    states: np.ndarray | None = None
    error: str | None = None

    @property
    def accept_count(self) -> int:
        return int(self.accepted.sum())

    @property
    def n_steps(self) -> int:
        return self.recorded.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.recorded[:, self.names.index(name)]
        except ValueError:
            raise KeyError(f"functional {name!r} was not recorded") from None

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "accepted", *self.names])
            for i in range(self.n_steps):
                w.writerow([i + 1, int(self.accepted[i]), *(repr(float(x)) for x in self.recorded[i])])


class ChainError(RuntimeError):
    def __init__(self, msg, trace: ChainTrace):
        super().__init__(msg)
        self.trace = trace


def run_chains(u0, kernel: ProposalKernel, potential, cfg: ChainConfig, rngs) -> list[ChainTrace]:
    """Run ``len(rngs)`` independent chains in lockstep (vectorised over replicas)."""
    U = np.array(as_field(u0, kernel.n_modes), dtype=float, copy=True)
    if U.ndim == 1:
        U = np.broadcast_to(U, (len(rngs), U.size)).copy()
    R = U.shape[0]
    if R != len(rngs):
        raise InvalidInputError("need one stream per starting state")
    funcs = [make_functional(n, kernel.basis) for n in cfg.record]
    n = cfg.n_steps
    rec = np.empty((n, R, len(funcs)))
    acc_hist = np.zeros((n, R), dtype=bool)
    states = np.empty((n, R, kernel.n_modes)) if cfg.store_states else None
    psi = np.asarray(potential(U), dtype=float)
    t = 0
    try:
        while t < n:
            b = min(BLOCK, n - t)
            noise, unif = draw_block(kernel, rngs, b)
            for i in range(b):
                tau = None if noise.tau is None else noise.tau[i]
                V = kernel.propose(U, Noise(tau, noise.xi[i]))
                psi_v = np.asarray(potential(V), dtype=float)
                with np.errstate(invalid="ignore"):
                    acc = unif[i] < _alpha(psi, psi_v)
                U = np.where(acc[:, None], V, U)
                psi = np.where(acc, psi_v, psi)
                acc_hist[t] = acc
                for k, f in enumerate(funcs):
                    rec[t, :, k] = f(U, psi)
                if states is not None:
                    states[t] = U
                t += 1
    except Exception as exc:  # partial traces travel with the error
        traces = _split(cfg, rec[:t], acc_hist[:t], U, states, str(exc))
        raise ChainError(f"chain failed at step {t + 1}: {exc}", traces[0]) from exc
    return _split(cfg, rec, acc_hist, U, states, None)


def _split(cfg, rec, acc, U, states, err):
    return [ChainTrace(cfg.record, rec[:, r, :].copy(), acc[:, r].copy(), U[r].copy(), cfg.burn_in,
                       None if states is None else states[:len(rec), r].copy(), err)
            for r in range(U.shape[0])]


def run_chain(u0, kernel: ProposalKernel, potential, cfg: ChainConfig, rng=None) -> ChainTrace:
    rng = rng if rng is not None else measures.make_rng(cfg.seed, 0)
    u0 = as_field(u0, kernel.n_modes)
    if u0.ndim != 1:
        raise InvalidInputError("run_chain takes a single starting state")
    return run_chains(u0[None], kernel, potential, cfg, [rng])[0]


def cesaro_average(trace: ChainTrace, name: str, burn_in: int | None = None) -> float:
    """Mean of a recorded functional over the post-burn-in steps."""
    col = trace.column(name)
    b = trace.burn_in if burn_in is None else burn_in
    if col.size - b <= 0:
        raise InvalidInputError("no samples after burn-in")
    return float(np.mean(col[b:]))
