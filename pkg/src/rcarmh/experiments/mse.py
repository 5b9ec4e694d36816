"""MSE and bias of Cesaro averages against the grid-solved invariant mean."""
from __future__ import annotations

import numpy as np

from ..measures import CompoundPoissonSpec, make_rngs, make_stream
from .config import ConfigError, ExperimentConfig
from .oracles import invariant_on_grid, sample_from_masses
from .report import SweepReport, no_increase
from .scalar import run_cp_chains

Z99 = 2.5758293035489004


def fit_plateau(n, y, w=None) -> tuple[float, float]:
    """Weighted least squares y ~ A + B / n; returns ``(A, B)``."""
    n = np.asarray(n, dtype=float)
    w = np.ones_like(n) if w is None else np.asarray(w, dtype=float)
    X = np.stack([np.ones_like(n), 1.0 / n], axis=1) * np.sqrt(w)[:, None]
    coef, *_ = np.linalg.lstsq(X, np.asarray(y) * np.sqrt(w), rcond=None)
    return float(coef[0]), float(coef[1])


def loglog_slope(n, y) -> float:
    return float(np.polyfit(np.log(n), np.log(y), 1)[0])


def _curves(err):
    """MSE and bias per (checkpoint, variant) from errors of shape (..., R)."""
    return (err**2).mean(axis=-1), err.mean(axis=-1)


def _fits(ns, mse, bias, w):
    """Plateau, 1/n coefficient and log-log slope of each variant's MSE curve, and bias plateaus."""
    out = []
    for v in range(mse.shape[1]):
        A, B = fit_plateau(ns, mse[:, v], w[:, v])
        b_inf, c = fit_plateau(ns, bias[:, v], w[:, v])
        slope = loglog_slope(ns, mse[:, v]) if np.all(mse[:, v] > 0) else np.nan
        out.append((A, B, slope, b_inf, c))
    return np.array(out)  # (variants, 5)


def exp_mse_curve(cfg: ExperimentConfig) -> SweepReport:
    ch, k, p, sw = cfg["chain"], cfg["kernel"], cfg["potential"], cfg["sweep"]
    if sw["log2_n_min"] < 1 or sw["log2_n_max"] < sw["log2_n_min"]:
        raise ConfigError("need 1 <= log2_n_min <= log2_n_max")
    eps_list = sorted(set(sw["eps"]), reverse=True)
    spec = CompoundPoissonSpec(k["rate"], k["jump_std"], 0.0)
    R = ch["replicas"]
    if R < 2:
        raise ConfigError("mse-curve needs at least two replicas")

    psi = lambda u: 0.5 * ((u - p["center"]) / p["scale"]) ** 2  # noqa: E731
    grid, masses = invariant_on_grid(k["beta"], psi, "cp", k["rate"], k["jump_std"], n_grid=sw["grid_points"])
    truth = float(masses @ grid)
    u0 = sample_from_masses(grid, masses, make_stream(cfg.seed, "mse-start"), R)

    ns = 2 ** np.arange(sw["log2_n_min"], sw["log2_n_max"] + 1)
    avgs = run_cp_chains(k["beta"], spec, eps_list, (p["center"], p["scale"]), int(ns[-1]), 0,
                         make_rngs(cfg.seed, R), u0=u0, checkpoints=ns)  # (n, 1 + E, R)
    err = avgs[:, 1:, :] - truth  # drop the duplicate exact row; eps = 0 is the exact chain
    mse, bias = _curves(err)
    mse_se = (err**2).std(axis=-1, ddof=1) / np.sqrt(R)
    bias_se = err.std(axis=-1, ddof=1) / np.sqrt(R)
    w = 1.0 / np.maximum(mse_se, 1e-300) ** 2
    w = w / w.max(axis=0)
    point = _fits(ns, mse, bias, w)

    rng = make_stream(cfg.seed, "mse-boot")
    boots = []
    for _ in range(sw["boot"]):
        idx = rng.integers(0, R, R)
        m_b, b_b = _curves(err[:, :, idx])
        boots.append(_fits(ns, m_b, b_b, w))
    boots = np.array(boots)  # (boot, variants, 5)
    se = boots.std(axis=0, ddof=1)

    rep = SweepReport("mse-curve", config=cfg.resolved())
    for v, e in enumerate(eps_list):
        for i, n in enumerate(ns):
            rep.add(f"mse_eps{e:g}_n{n}", mse[i, v], mse_se[i, v], R, eps=e, n=int(n), kind="mse",
                    bias=bias[i, v], bias_se=bias_se[i, v])
    for v, e in enumerate(eps_list):
        A, B, slope, b_inf, c = point[v]
        rep.add(f"plateau_eps{e:g}", A, se[v, 0], R, eps=e, n="", kind="plateau", bias=B, bias_se=se[v, 1])
        rep.add(f"slope_eps{e:g}", slope, se[v, 2], R, eps=e, n="", kind="slope", bias="", bias_se="")
        rep.add(f"bias_plateau_eps{e:g}", b_inf, se[v, 3], R, eps=e, n="", kind="bias_plateau", bias=c,
                bias_se=se[v, 4])
    rep.fits["truth"] = truth
    rep.fits["plateau"] = {f"{e:g}": float(point[v, 0]) for v, e in enumerate(eps_list)}
    rep.fits["bias_plateau"] = {f"{e:g}": float(point[v, 3]) for v, e in enumerate(eps_list)}

    if 0.0 in eps_list:
        v0 = eps_list.index(0.0)
        rep.fits["exact_slope"] = float(point[v0, 2])
        rep.verdicts["exact_plateau_zero"] = bool(abs(point[v0, 0]) <= Z99 * se[v0, 0])
        rep.verdicts["exact_slope_minus_one"] = bool(abs(point[v0, 2] + 1.0) <= 0.2)
    plateau_ok = all(no_increase(boots[:, v + 1, 0] - boots[:, v, 0]) for v in range(len(eps_list) - 1))
    bias_ok = all(no_increase(np.abs(boots[:, v + 1, 3]) - np.abs(boots[:, v, 3])) for v in range(len(eps_list) - 1))
    rep.verdicts["plateau_non_increasing"] = bool(plateau_ok)
    rep.verdicts["bias_plateau_non_increasing"] = bool(bias_ok)
    return rep
