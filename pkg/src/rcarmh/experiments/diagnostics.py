"""Drift, contraction, small-set and weak-triangle diagnostics, plus the deconvolution tail probe."""
from __future__ import annotations

import numpy as np

from ..couplings import estimate_contraction, estimate_drift, fit_drift, smallset_distances
from ..function_space import BasisSpec, h1_norm
from ..measures import GammaPriorSpec, make_rngs, make_stream, sample_gamma_prior
from ..metrics import SemimetricParams, d_s, weak_triangle_scan
from ..mh import gamma_rcar_kernel
from ..potentials import TailModifiedPotential, TailModParams
from .config import ExperimentConfig
from .report import SweepReport, ordered_map
from .targets import deconvolution_target, ssl_from_config


def _unit_rows(X):
    return X / np.asarray(h1_norm(X))[..., None]


def semimetric_params(cfg, s: float) -> SemimetricParams:
    m = cfg["semimetric"]
    return SemimetricParams(m["omega"], m["eta"], s, m["theta"], m["p"])


def drift_section(rep, kernel, pot, prior, cfg):
    sw, reps, p = cfg["sweep"], cfg["chain"]["drift_reps"], cfg["semimetric"]["p"]
    dirs = _unit_rows(sample_gamma_prior(prior, make_stream(cfg.seed, "drift-dirs"), sw["directions"]))
    probes = [(radius, j, d) for radius in sw["radii"] for j, d in enumerate(dirs)]

    def one(i):
        radius, _, d = probes[i]
        return estimate_drift(radius * d, reps, kernel, pot, p, make_stream(cfg.seed, "drift", i))

    xs, ys, ses = [], [], []
    for (radius, j, _), (m, se) in zip(probes, ordered_map(one, range(len(probes)), cfg.threads)):
        xs.append(radius**p)
        ys.append(m)
        ses.append(se)
        rep.add(f"drift_r{radius:g}_d{j}", m, se, reps, V=radius**p)
    fit = fit_drift(xs, ys, ses)
    rep.fits["drift"] = {"kappa_hat": fit.kappa_hat, "K_hat": fit.K_hat, "residual": fit.residual,
                         "violations": fit.violations}
    rep.verdicts["drift"] = fit.kappa_hat < 1.0 and fit.violations == 0
    return fit


def contraction_section(rep, kernel, pot, prior, params, cfg):
    sw, reps = cfg["sweep"], cfg["chain"]["contraction_reps"]
    rng = make_stream(cfg.seed, "contraction-pairs")
    U = sample_gamma_prior(prior, rng, sw["pairs"])
    offs = _unit_rows(sample_gamma_prior(prior, rng, sw["pairs"]) - sample_gamma_prior(prior, rng, sw["pairs"]))
    V = np.abs(U + sw["pair_offset"] * offs)  # stay in the support of the Gamma prior
    ests = ordered_map(lambda i: estimate_contraction(U[i], V[i], reps, kernel, pot, params,
                                                      make_stream(cfg.seed, "contraction", i)),
                       range(len(U)), cfg.threads)
    uppers = []
    for i, (u, v, est) in enumerate(zip(U, V, ests)):
        uppers.append(est.upper)
        rep.add(f"contraction_pair{i:02d}", est.gamma1_hat, est.ci_halfwidth / 2.5758293035489004, reps,
                d0=d_s(u, v, params),
                ci99_upper=est.upper)
    rep.fits["contraction_max_upper"] = float(max(uppers))
    rep.verdicts["contraction"] = max(uppers) < 1.0


def smallset_section(rep, kernel, pot, prior, params, cfg):
    sw, reps = cfg["sweep"], cfg["chain"]["smallset_reps"]
    grid = [0] + [2**i for i in range(sw["smallset_log2_max"] + 1)]
    d = smallset_distances(sw["smallset_R"], grid, reps, kernel, pot, params,
                           lambda g, n: sample_gamma_prior(prior, g, n),
                           make_rngs(cfg.seed, reps), make_stream(cfg.seed, "smallset-pairs"))
    means = []
    for n in grid:
        x = d[n]
        means.append(x.mean())
        rep.add(f"smallset_n{n}", x.mean(), x.std(ddof=1) / np.sqrt(x.size), x.size,
                p99=float(np.quantile(x, 0.99)), median=float(np.median(x)))
    # trend: no step up larger than 3 standard errors of the paired difference
    trend = True
    for a, b in zip(grid[1:], grid[2:]):
        diff = d[b] - d[a]
        se = diff.std(ddof=1) / np.sqrt(diff.size)
        trend &= bool(diff.mean() <= 3.0 * se)
    below = [n for n, m in zip(grid, means) if n >= 1 and m < 1.0]
    rep.fits["smallset_first_n_below_1"] = below[0] if below else None
    rep.verdicts["smallset"] = bool(below) and trend


def triangle_section(rep, prior, params, cfg):
    n = cfg["sweep"]["triples"]

    def triples(tag):
        rng = make_stream(cfg.seed, tag)
        # prior draws rescaled over several decades of norm
        X = _unit_rows(sample_gamma_prior(prior, rng, (3, n)))
        return X * 10.0 ** rng.uniform(-2.0, 2.0, size=(3, n, 1))

    g_hat = weak_triangle_scan(*triples("triangle"), params)
    g_fresh = weak_triangle_scan(*triples("triangle-fresh"), params)
    rep.add("weak_triangle_G", g_hat, 0.0, n, fresh_max=g_fresh)
    rep.fits["G_hat"] = g_hat
    rep.verdicts["weak_triangle"] = bool(np.isfinite(g_hat) and g_fresh <= 2.0 * g_hat)


def tail_probe(pot, G, base_state, basis, radii, beta_t, b_t, directions, rng):
    """Tail increase probe along a high-frequency perturbation.

    For w_t = base + t e (e the highest-frequency mode) returns, per radius, the
    log of the minimum of exp(Psi(w_t) - Psi(v)) over candidate v in the ball
    of radius c ||w_t|| around beta_t w_t, with c = b_t (1 - beta_t), and the
    log of the direct ratio exp(Psi(base) - Psi(w_t)).
    """
    c = b_t * (1.0 - beta_t)
    e = basis.unit(basis.n_modes - 1)
    top = np.linalg.svd(G)[2][0]
    D = np.vstack([top, -top, basis.unit(0), -basis.unit(0),
                   _unit_rows(rng.standard_normal((directions, basis.n_modes))), np.zeros(basis.n_modes)])
    mins, direct = [], []
    for t in radii:
        w = base_state + t * e
        V = beta_t * w + c * float(h1_norm(w)) * D
        mins.append(float(np.min(pot(w) - pot(V))))
        direct.append(float(pot(base_state) - pot(w)))
    return np.array(mins), np.array(direct)


def growth_scan(pot, G_norm, y, eps_t, R0, c, n_pairs, rng):
    """Count pairs violating Psi_eps(u) - Psi_eps(v) >= (eps - c^2 (2||G||^2 + eps))||u||^2 - 2||y||^2."""
    m = pot.base.basis.n_modes
    r_min = max(R0, pot.params.activation_radius)
    top = np.linalg.svd(pot.base.matrix)[2][0]
    ru = r_min * 10.0 ** rng.uniform(0.0, 2.0, n_pairs)
    U = _unit_rows(rng.standard_normal((n_pairs, m))) * ru[:, None]
    Vd = _unit_rows(rng.standard_normal((n_pairs, m)))
    Vd[::2] = top * np.sign(rng.standard_normal(n_pairs // 2 + n_pairs % 2))[:, None]
    V = Vd * (c * ru * rng.random(n_pairs) ** (1.0 / m))[:, None]
    lhs = pot(U) - pot(V)
    rhs = (eps_t - c**2 * (2.0 * G_norm**2 + eps_t)) * ru**2 - 2.0 * float(y @ y)
    return int(np.sum(lhs < rhs)), float(np.min(lhs - rhs))


def deconvolution_section(rep, basis, cfg):
    p, sw = cfg["potential"], cfg["sweep"]
    base, truth = deconvolution_target(basis, p["n_obs"], p["data_seed"], cfg["kernel"]["r"])
    mod = TailModifiedPotential(base, TailModParams(p["eps_t"], p["R0"]))
    c = p["b_tilde"] * (1.0 - p["beta_tilde"])
    G_norm = base.operator_norm()
    rep.fits["G_norm"] = G_norm
    rep.fits["tail_guidance_met"] = bool(mod.check_guidance(c, G_norm))
    floor = sw["tail_floor"]
    for name, pot in (("deconv", base), ("deconv_tailmod", mod)):
        rng = make_stream(cfg.seed, f"tail-{name}")
        mins, direct = tail_probe(pot, base.matrix, truth, basis, sw["tail_radii"], p["beta_tilde"], p["b_tilde"],
                                  sw["tail_directions"], rng)
        for t, mn, dr in zip(sw["tail_radii"], mins, direct):
            rep.add(f"{name}_tail_t{t:g}", mn, 0.0, 1, log_direct_ratio=dr)
        rep.fits[f"{name}_tail_log_min"] = float(mins.min())
        rep.verdicts[f"{name}_tail_probe_passes"] = bool(mins.min() >= np.log(floor))
    viol, margin = growth_scan(mod, G_norm, base.data.values, p["eps_t"], p["R0"], c, sw["tail_pairs"],
                               make_stream(cfg.seed, "growth"))
    rep.add("growth_violations", viol, 0.0, sw["tail_pairs"], min_margin=margin)
    rep.verdicts["growth_inequality"] = viol == 0


def exp_diagnostics(cfg: ExperimentConfig) -> SweepReport:
    k = cfg["kernel"]
    basis = BasisSpec(k["n_modes"])
    prior = GammaPriorSpec(k["r"], basis)
    pot, _ = ssl_from_config(cfg, basis, "gamma")
    kernel = gamma_rcar_kernel(k["r"], k["beta"], basis)
    params = semimetric_params(cfg, pot.q)
    rep = SweepReport("diagnostics", config=cfg.resolved())
    drift_section(rep, kernel, pot, prior, cfg)
    contraction_section(rep, kernel, pot, prior, params, cfg)
    smallset_section(rep, kernel, pot, prior, params, cfg)
    triangle_section(rep, prior, params, cfg)
    deconvolution_section(rep, basis, cfg)
    # the unmodified deconvolution potential is the negative control: its probe must fail
    rep.verdicts["deconv_tail_probe_fails"] = not rep.verdicts.pop("deconv_tail_probe_passes")
    return rep
