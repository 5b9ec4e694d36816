"""Histogram of a 1-D Gamma/Beta chain against the quadrature posterior."""
from __future__ import annotations

import numpy as np

from ..function_space import BasisSpec
from ..measures import make_rng, make_stream
from ..mh import ChainConfig, gamma_rcar_kernel, run_chain
from ..potentials import QuadraticPotential, ZeroPotential
from .config import ConfigError, ExperimentConfig
from .oracles import gamma_posterior_bin_masses
from .report import SweepReport

N_BLOCKS = 100


def _potential(p):
    if p["kind"] == "quadratic":
        return QuadraticPotential(p["center"], p["scale"]), lambda u: 0.5 * ((u - p["center"]) / p["scale"]) ** 2
    if p["kind"] == "zero":
        return ZeroPotential(), lambda u: np.zeros_like(u)
    raise ConfigError(f"potential.kind must be 'quadratic' or 'zero', got {p['kind']!r}")


def tv_to_masses(samples, edges, masses, tail) -> float:
    counts = np.histogram(samples, bins=edges)[0]
    n = samples.size
    return 0.5 * (np.abs(counts / n - masses).sum() + abs((n - counts.sum()) / n - tail))


def block_bootstrap_tv(samples, edges, masses, tail, n_boot: int, rng) -> float:
    """Standard error of the TV estimate by resampling contiguous blocks of the chain."""
    blocks = np.array_split(samples, N_BLOCKS)
    counts = np.stack([np.histogram(b, bins=edges)[0] for b in blocks])
    sizes = np.array([b.size for b in blocks])
    tvs = np.empty(n_boot)
    for i in range(n_boot):
        pick = rng.integers(0, N_BLOCKS, N_BLOCKS)
        c, n = counts[pick].sum(axis=0), sizes[pick].sum()
        tvs[i] = 0.5 * (np.abs(c / n - masses).sum() + abs((n - c.sum()) / n - tail))
    return float(tvs.std(ddof=1))


def exp_posterior_1d(cfg: ExperimentConfig) -> SweepReport:
    ch, k, sw = cfg["chain"], cfg["kernel"], cfg["sweep"]
    pot, psi = _potential(cfg["potential"])
    checkpoints = sorted(sw["checkpoints"])
    n_steps = ch["n_steps"]
    if checkpoints[-1] > n_steps or checkpoints[0] <= ch["burn_in"]:
        raise ConfigError("checkpoints must lie in (burn_in, n_steps]")
    kernel = gamma_rcar_kernel(k["r"], k["beta"], BasisSpec(1))
    trace = run_chain([ch["u0"]], kernel, pot, ChainConfig(n_steps, ch["burn_in"], cfg.seed, ("coeff(0)",)),
                      make_rng(cfg.seed, 0))
    x = trace.column("coeff(0)")
    edges = np.linspace(0.0, sw["u_max"], sw["bins"] + 1)
    masses, tail = gamma_posterior_bin_masses(edges, k["r"], psi, sw["u_max"])
    rng = make_stream(cfg.seed, "posterior1d-boot")
    rep = SweepReport("posterior1d", config=cfg.resolved())
    tvs = []
    for n in checkpoints:
        s = x[ch["burn_in"]:n]
        tv = tv_to_masses(s, edges, masses, tail)
        tvs.append(tv)
        rep.add(n, tv, block_bootstrap_tv(s, edges, masses, tail, sw["boot"], rng), s.size,
                acceptance=float(trace.accepted[:n].mean()))
    rep.fits["acceptance_rate"] = float(trace.accepted.mean())
    rep.fits["tv_final"] = tvs[-1]
    rep.verdicts["tv_below_0.05"] = bool(tvs[-1] < 0.05)
    rep.verdicts["tv_decreasing"] = bool(all(b < a for a, b in zip(tvs, tvs[1:])))
    return rep
