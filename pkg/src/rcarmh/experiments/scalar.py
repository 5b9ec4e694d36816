"""Vectorised 1-D chains with compound Poisson innovations, exact and truncated, on shared noise.

Every variant sees the same jumps and uniforms: the truncated innovation for
a cut-off eps keeps the jumps of the full draw with |xi| >= eps, which by
Poisson marking has exactly the truncated law. State arrays have shape
``(n_variants, n_replicas)``; row 0 is the exact chain.
"""
from __future__ import annotations

import numpy as np

from ..measures import CompoundPoissonSpec, sample_cp_split
from ..mh import BLOCK


def _quadratic(center, scale):
    return lambda u: 0.5 * ((u - center) / scale) ** 2


def run_cp_chains(beta: float, spec: CompoundPoissonSpec, eps_list, quad, n_steps: int, burn_in: int = 0,
                  rngs=(), u0=None, checkpoints=None):
    """Run exact and truncated MH chains in lockstep.

    ``quad = (center, scale)`` defines Psi(u) = (u - center)^2 / (2 scale^2).
    Without ``checkpoints`` returns the post-burn-in averages of u with shape
    ``(1 + len(eps_list), R)``. With ``checkpoints`` (sorted step counts)
    returns Cesaro averages over steps ``1..n`` for each checkpoint, shape
    ``(len(checkpoints), 1 + len(eps_list), R)``.
    """
    psi = _quadratic(*quad)
    R = len(rngs)
    n_var = 1 + len(eps_list)
    U = np.zeros((n_var, R)) if u0 is None else np.broadcast_to(np.asarray(u0, dtype=float), (n_var, R)).copy()
    P = psi(U)
    total = np.zeros((n_var, R))
    ckpts = None if checkpoints is None else list(checkpoints)
    out = []
    t = 0
    while t < n_steps:
        b = min(BLOCK, n_steps - t)
        xi = np.empty((b, n_var, R))
        unif = np.empty((b, R))
        for r, rng in enumerate(rngs):
            full, kept = sample_cp_split(spec, eps_list, rng, b)
            xi[:, 0, r] = full
            xi[:, 1:, r] = kept.T
            unif[:, r] = rng.random(b)
        for i in range(b):
            V = beta * U + xi[i]
            PV = psi(V)
            acc = unif[i] < np.exp(np.minimum(P - PV, 0.0))
            U = np.where(acc, V, U)
            P = np.where(acc, PV, P)
            t += 1
            if t > burn_in:
                total += U
            if ckpts and t == ckpts[0]:
                out.append(total / (t - burn_in))
                ckpts.pop(0)
    if checkpoints is not None:
        return np.stack(out)
    return total / max(n_steps - burn_in, 1)
