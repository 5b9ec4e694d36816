"""End-to-end acceptance runs at full budget; each criterion logs one PASS/FAIL line."""
from __future__ import annotations

import time

import numpy as np
import pytest

from rcarmh.experiments import default_config, run_experiment

pytestmark = pytest.mark.slow

_runs: dict = {}


def _run(name, threads=1):
    key = (name, threads)
    if key not in _runs:
        cfg = default_config(name)
        cfg.threads = threads
        t0 = time.perf_counter()
        rep = run_experiment(cfg)
        _runs[key] = (rep, time.perf_counter() - t0)
    return _runs[key]


def _record(criteria, number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    criteria.append(line)
    print(line)
    return ok


def test_reversibility(criteria):
    rep, secs = _run("reversibility")
    frac = {r["parameter"]: r["estimate"] for r in rep.rows}
    ok = (frac["pcn"] >= 0.95 and frac["gamma"] >= 0.95 and frac["pcn_mismatch"] < 0.5
          and frac["gamma_mismatch"] < 0.5 and secs <= 60)
    detail = ", ".join(f"{k}={v:.3f}" for k, v in frac.items()) + f", {secs:.0f}s"
    assert _record(criteria, 1, ok, detail)


def test_posterior_1d(criteria):
    rep, secs = _run("posterior1d")
    steps = [r["parameter"] for r in rep.rows]
    tv = [r["estimate"] for r in rep.rows]
    ok = (steps == [100_000, 1_000_000] and tv[-1] < 0.05 and all(b < a for a, b in zip(tv, tv[1:]))
          and secs <= 120)
    assert _record(criteria, 2, ok, f"TV={', '.join(f'{x:.4f}' for x in tv)}, {secs:.0f}s")


def test_drift(criteria):
    rep, secs = _run("diagnostics")
    fit = rep.fits["drift"]
    radii = sorted({r["V"] for r in rep.rows if str(r["parameter"]).startswith("drift_")})
    ok = (fit["kappa_hat"] < 1.0 and fit["violations"] == 0 and np.allclose(np.sqrt(radii), [1, 2, 5, 10, 20, 50])
          and secs <= 180)
    assert _record(criteria, 3, ok, f"kappa_hat={fit['kappa_hat']:.3f}, violations={fit['violations']}")


def test_contraction(criteria):
    rep, secs = _run("diagnostics")
    rows = [r for r in rep.rows if str(r["parameter"]).startswith("contraction_pair")]
    upper = max(r["ci99_upper"] for r in rows)
    ok = (len(rows) == 16 and all(r["d0"] < 0.5 for r in rows) and all(r["n_samples"] == 10_000 for r in rows)
          and upper < 1.0 and secs <= 180)
    assert _record(criteria, 4, ok, f"max 99% upper gamma1={upper:.3f} over {len(rows)} pairs")


def test_small_sets(criteria):
    rep, secs = _run("diagnostics")
    first = rep.fits["smallset_first_n_below_1"]
    ok = rep.verdicts["smallset"] and first is not None and first <= 256 and secs <= 240
    assert _record(criteria, 5, ok, f"first n with mean d<1: {first}, trend ok={rep.verdicts['smallset']}")


def test_weak_triangle(criteria):
    rep, secs = _run("diagnostics")
    row = rep.row("weak_triangle_G")
    ok = np.isfinite(row["estimate"]) and row["fresh_max"] <= 2.0 * row["estimate"] and row["n_samples"] == 100_000
    assert _record(criteria, 6, ok and secs <= 60, f"G_hat={row['estimate']:.4f}, fresh max={row['fresh_max']:.4f}")


def test_convolution_identity(criteria):
    rep, secs = _run("perturb-innovation")
    ks = {r["parameter"]: r["estimate"] for r in rep.rows if r.get("kind") == "ks"}
    eps = sorted({r["eps"] for r in rep.rows if r.get("kind") == "ks"})
    ok = (len(ks) == 4 and all(v < 0.01 for v in ks.values()) and {0.25, 0.5, 1.0, 0.3} == set(eps)
          and secs <= 60)
    assert _record(criteria, 7, ok, ", ".join(f"{k}={v:.4f}" for k, v in ks.items()) + f", {secs:.0f}s")


def test_projection_perturbation(criteria):
    rep, secs = _run("perturb-projection")
    v = rep.verdicts
    ok = (v["one_step_zero_at_full"] and v["one_step_non_increasing"] and v["stationary_norm_non_increasing"]
          and secs <= 300)
    gaps = ", ".join(f"{m}:{g:.4f}" for m, g in rep.fits["one_step_gap"].items())
    assert _record(criteria, 8, ok, f"one-step gaps {gaps}; verdicts {v}, {secs:.0f}s")


def test_mse_scaling(criteria):
    rep, secs = _run("mse-curve")
    v = rep.verdicts
    ok = all(v.values()) and len(v) == 4 and secs <= 480
    assert _record(criteria, 9, ok, f"exact slope={rep.fits['exact_slope']:.3f}; verdicts {v}, {secs:.0f}s")


def test_deconvolution_counterexample(criteria):
    rep, secs = _run("diagnostics")
    v = rep.verdicts
    viol = rep.row("growth_violations")
    ok = (v["deconv_tail_probe_fails"] and v["deconv_tailmod_tail_probe_passes"] and v["growth_inequality"]
          and viol["n_samples"] == 10_000 and secs <= 120)
    detail = (f"log min ratio: plain={rep.fits['deconv_tail_log_min']:.3g}, "
              f"modified={rep.fits['deconv_tailmod_tail_log_min']:.3g}, growth violations={int(viol['estimate'])}")
    assert _record(criteria, 10, ok, detail)


def test_determinism(criteria, tmp_path):
    names = ["reversibility", "posterior1d", "perturb-projection", "perturb-innovation", "mse-curve", "diagnostics"]
    same = {}
    for name in names:
        first, _ = _run(name)
        again = run_experiment(_with_threads(name, 2))
        a, b = tmp_path / f"a_{name}.csv", tmp_path / f"b_{name}.csv"
        first.to_csv(a)
        again.to_csv(b)
        same[name] = a.read_bytes() == b.read_bytes()
    assert _record(criteria, 11, all(same.values()), ", ".join(f"{k}={'identical' if v else 'DIFFERS'}"
                                                               for k, v in same.items()))


def _with_threads(name, threads):
    cfg = default_config(name)
    cfg.threads = threads
    return cfg
