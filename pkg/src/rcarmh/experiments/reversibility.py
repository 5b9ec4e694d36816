"""One-step prior stationarity of the proposal, tested mode by mode."""
from __future__ import annotations

import numpy as np
from scipy import stats

from ..function_space import BasisSpec
from ..measures import (GammaPriorSpec, GaussianPriorSpec, make_stream, sample_beta_factors,
                        sample_gamma_innovation, sample_gamma_prior, sample_gaussian_innovation,
                        sample_gaussian_prior)
from ..mh import gamma_rcar_kernel, pcn_kernel
from .config import ExperimentConfig
from .report import SweepReport, ordered_map

VARIANTS = ("pcn", "gamma", "pcn_mismatch", "gamma_mismatch")


def one_step_pvalues(variant: str, basis: BasisSpec, n: int, r: float, beta: float, mismatch_beta: float,
                     rng) -> np.ndarray:
    """KS p-values, per mode, of v = thin(u) + xi with u drawn from the prior.

    The ``*_mismatch`` variants build the innovation for ``mismatch_beta``
    instead of ``beta``, which breaks the identity that makes the prior
    invariant.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    broken = variant.endswith("mismatch")
    lam = basis.sqrt_eigenvalues
    if variant.startswith("pcn"):
        u = sample_gaussian_prior(GaussianPriorSpec(basis), rng, n)
        if broken:
            v = beta * u + sample_gaussian_innovation(mismatch_beta, basis, rng, n)
        else:
            kern = pcn_kernel(beta, basis)
            v = kern.propose(u, kern.draw(rng, (n,)))
        cdfs = [stats.norm(scale=s).cdf for s in lam]
    else:
        u = sample_gamma_prior(GammaPriorSpec(r, basis), rng, n)
        if broken:
            tau = sample_beta_factors(r, beta, rng, u.shape)
            v = tau * u + sample_gamma_innovation(r, mismatch_beta, basis, rng, n)
        else:
            kern = gamma_rcar_kernel(r, beta, basis)
            v = kern.propose(u, kern.draw(rng, (n,)))
        cdfs = [stats.gamma(r, scale=s).cdf for s in lam]
    return np.array([stats.kstest(v[:, j], cdfs[j]).pvalue for j in range(basis.n_modes)])


def exp_reversibility(cfg: ExperimentConfig) -> SweepReport:
    k, sw = cfg["kernel"], cfg["sweep"]
    basis = BasisSpec(k["n_modes"])
    n = cfg["chain"]["replicas"]
    level = sw["ks_level"]

    def run(variant):
        rng = make_stream(cfg.seed, "reversibility", VARIANTS.index(variant))
        return one_step_pvalues(variant, basis, n, k["r"], k["beta"], k["mismatch_beta"], rng)

    rep = SweepReport("reversibility", config=cfg.resolved())
    for variant, pv in zip(sw["variants"], ordered_map(run, sw["variants"], cfg.threads)):
        frac = float(np.mean(pv > level))
        rep.add(variant, frac, np.sqrt(max(frac * (1 - frac), 1e-12) / pv.size), n,
                min_pvalue=float(pv.min()), modes=pv.size)
        rep.verdicts[variant] = frac < 0.5 if variant.endswith("mismatch") else frac >= 0.95
    return rep
