"""Perturbation sweeps: projected potentials and truncated innovations."""
from __future__ import annotations

import numpy as np
from scipy import stats

from ..function_space import BasisSpec
from ..measures import (CompoundPoissonSpec, GaussianPriorSpec, make_rngs, make_stream, remainder_moment,
                        sample_cp, sample_cp_remainder, sample_cp_truncated, sample_gaussian_mixture_split,
                        sample_gaussian_prior)
from ..metrics import SemimetricParams, expectation_gap, tilde_d_s
from ..mh import ChainConfig, _alpha, functional_battery, pcn_kernel, run_chains
from ..potentials import ProjectedPotential
from .config import ConfigError, ExperimentConfig
from .report import SweepReport, no_increase, ordered_map
from .scalar import run_cp_chains

# -- projection ------------------------------------------------------------------------


def one_step_projection_gaps(kernel, pot, m_cuts, params, n_starts, rng) -> np.ndarray:
    """tilde_d between one exact step and one projected-potential step, per start and cut-off.

    Both steps share the prior-drawn start, the proposal and the uniform; only
    the acceptance test differs. Returns an array of shape ``(len(m_cuts), n_starts)``.
    """
    U = sample_gaussian_prior(GaussianPriorSpec(kernel.basis), rng, n_starts)
    V = kernel.propose(U, kernel.draw(rng, (n_starts,)))
    unif = rng.random(n_starts)
    exact = np.where((unif < _alpha(pot(U), pot(V)))[:, None], V, U)
    out = []
    for m in m_cuts:
        pp = ProjectedPotential(pot, m)
        proj = np.where((unif < _alpha(pp(U), pp(V)))[:, None], V, U)
        out.append(tilde_d_s(exact, proj, params))
    return np.array(out)


def _boot_means(X, n_boot, rng):
    """Bootstrap means over the last axis of ``X`` with the same resampled indices for every row."""
    idx = rng.integers(0, X.shape[-1], size=(n_boot, X.shape[-1]))
    return np.stack([X[:, i].mean(axis=-1) for i in idx], axis=1)  # (rows, n_boot)


def _monotone(boot, rep, key):
    ok = all(no_increase(boot[i + 1] - boot[i]) for i in range(boot.shape[0] - 1))
    rep.verdicts[key] = bool(ok)


def exp_perturb_projection(cfg: ExperimentConfig) -> SweepReport:
    from .targets import ssl_from_config

    ch, k, sw, sm = cfg["chain"], cfg["kernel"], cfg["sweep"], cfg["semimetric"]
    basis = BasisSpec(k["n_modes"])
    m_cuts = sorted(sw["m_cut"], reverse=False)
    if m_cuts[0] < 0 or m_cuts[-1] > basis.n_modes:
        raise ConfigError("m_cut values must lie in [0, n_modes]")
    pot, _ = ssl_from_config(cfg, basis, "gaussian")
    params = SemimetricParams(sm["omega"], sm["eta"], pot.q, sm["theta"], sm["p"])
    kernel = pcn_kernel(k["beta"], basis)
    rep = SweepReport("perturb-projection", config=cfg.resolved())
    boot_rng = make_stream(cfg.seed, "projection-boot")

    gaps = one_step_projection_gaps(kernel, pot, m_cuts, params, ch["one_step_starts"],
                                    make_stream(cfg.seed, "projection-one-step"))
    for m, g in zip(m_cuts, gaps):
        rep.add(f"one_step_m{m}", g.mean(), g.std(ddof=1) / np.sqrt(g.size), g.size, m_cut=m,
                kind="one_step", functional="")
    _monotone(_boot_means(gaps, sw["boot"], boot_rng), rep, "one_step_non_increasing")
    if basis.n_modes in m_cuts:
        rep.verdicts["one_step_zero_at_full"] = bool(np.all(gaps[m_cuts.index(basis.n_modes)] == 0.0))

    battery = functional_battery()
    ccfg = ChainConfig(ch["n_steps"], ch["burn_in"], cfg.seed, battery)
    u0 = np.zeros(basis.n_modes)

    def averages(potential):
        traces = run_chains(u0, kernel, potential, ccfg, make_rngs(cfg.seed, ch["replicas"]))
        return np.stack([t.recorded[ch["burn_in"]:].mean(axis=0) for t in traces])  # (R, n_functionals)

    exact = averages(pot)
    # every sweep point reuses the same replica streams, so runs pair up by replica
    cuts = [m for m in m_cuts if m != basis.n_modes]
    done = dict(zip(cuts, ordered_map(lambda m: averages(ProjectedPotential(pot, m)), cuts, cfg.threads)))
    diffs = []
    for m in m_cuts:
        proj = done.get(m, exact)
        d = proj - exact  # paired by replica: common random numbers
        diffs.append(d[:, 0])
        for j, name in enumerate(battery):
            gap, _ = expectation_gap(proj[:, j], exact[:, j])
            se = d[:, j].std(ddof=1) / np.sqrt(d.shape[0])
            rep.add(f"stationary_m{m}_{name}", gap, se, d.shape[0], m_cut=m, kind="stationary", functional=name)
    D = np.array(diffs)
    boot = np.abs(_boot_means(D, sw["boot"], boot_rng))
    _monotone(boot, rep, "stationary_norm_non_increasing")
    rep.fits["one_step_gap"] = {str(m): float(g.mean()) for m, g in zip(m_cuts, gaps)}
    rep.fits["stationary_norm_gap"] = {str(m): float(abs(d.mean())) for m, d in zip(m_cuts, D)}
    return rep


# -- innovation truncation ---------------------------------------------------------------


def ks_identity(spec: CompoundPoissonSpec, eps: float, n: int, rng) -> float:
    """Two-sample KS distance between full draws and truncated-plus-remainder draws."""
    s = CompoundPoissonSpec(spec.rate, spec.jump_std, eps)
    full = sample_cp(s, rng, size=n)
    split = sample_cp_truncated(s, rng, size=n) + sample_cp_remainder(s, rng, size=n)
    return float(stats.ks_2samp(full, split).statistic)


def exp_perturb_innovation(cfg: ExperimentConfig) -> SweepReport:
    ch, k, p, sw = cfg["chain"], cfg["kernel"], cfg["potential"], cfg["sweep"]
    spec = CompoundPoissonSpec(k["rate"], k["jump_std"], 0.0)
    eps_list = sorted(set(sw["eps"]), reverse=True)
    if eps_list[-1] < 0:
        raise ConfigError("eps values must be nonnegative")
    rep = SweepReport("perturb-innovation", config=cfg.resolved())

    # convolution identities
    rng = make_stream(cfg.seed, "ks-identity")
    ks_ok = True
    for e in sw["ks_eps"]:
        D = ks_identity(spec, e, sw["ks_draws"], rng)
        ks_ok &= D < 0.01
        rep.add(f"ks_cp_eps{e:g}", D, np.sqrt(2.0 / sw["ks_draws"]), sw["ks_draws"], eps=e, kind="ks")
    xi, xe, we = sample_gaussian_mixture_split(sw["mixture_eps"], None, rng, sw["ks_draws"])
    D = float(stats.ks_2samp(xi, xe + we).statistic)
    ks_ok &= D < 0.01
    rep.add(f"ks_mixture_eps{sw['mixture_eps']:g}", D, np.sqrt(2.0 / sw["ks_draws"]), sw["ks_draws"],
            eps=sw["mixture_eps"], kind="ks")
    rep.verdicts["convolution_identity"] = bool(ks_ok)

    # remainder moments
    rng = make_stream(cfg.seed, "moments")
    moments = []
    for e in eps_list:
        m, se = remainder_moment(e, sw["q"], rng, sw["moment_draws"], spec)
        moments.append((e, m, se))
        rep.add(f"moment_eps{e:g}", m, se, sw["moment_draws"], eps=e, kind="moment")
    pos = [(e, m) for e, m, _ in moments if e > 0]
    rep.verdicts["moment_decreasing"] = bool(all(b < a for (_, a), (_, b) in zip(pos, pos[1:])))

    # stationary gaps, exact vs truncated, with shared randomness
    avgs = run_cp_chains(k["beta"], spec, eps_list, (p["center"], p["scale"]), ch["n_steps"], ch["burn_in"],
                         make_rngs(cfg.seed, ch["replicas"]))  # (n_eps + 1, R); row 0 is exact
    diffs = avgs[1:] - avgs[0]
    for e, d in zip(eps_list, diffs):
        rep.add(f"gap_eps{e:g}", abs(d.mean()), d.std(ddof=1) / np.sqrt(d.size), d.size, eps=e, kind="gap")
    boot = np.abs(_boot_means(diffs, sw["boot"], make_stream(cfg.seed, "innovation-boot")))
    _monotone(boot, rep, "gap_non_increasing")
    if 0.0 in eps_list:
        i = eps_list.index(0.0)
        gap0, se0 = abs(diffs[i].mean()), diffs[i].std(ddof=1) / np.sqrt(diffs.shape[1])
        m0 = moments[i][1]
        rep.verdicts["zero_eps_null"] = bool(gap0 <= 3 * se0 + 1e-15 and m0 == 0.0)
    ratios = {f"{e:g}": float(abs(d.mean()) / m) for (e, m, _), d in zip(moments, diffs) if m > 0}
    rep.fits["gap_over_moment"] = ratios
    rep.fits["gap_over_moment_max"] = max(ratios.values()) if ratios else None
    return rep
