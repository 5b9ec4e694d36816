from __future__ import annotations

import json

import mpmath as mp
import numpy as np
import pytest

from rcarmh import cli
from rcarmh.experiments import ConfigError, default_config, parse_config, run_experiment
from rcarmh.experiments.config import describe_defaults
from rcarmh.experiments.oracles import gamma_posterior_bin_masses, invariant_on_grid
from rcarmh.experiments.report import SweepReport, no_increase, ordered_map
from rcarmh.experiments.scalar import run_cp_chains
from rcarmh.function_space import BasisSpec
from rcarmh.measures import CompoundPoissonSpec, make_rngs
from rcarmh.experiments.targets import ssl_target

# frozen from the grid solve (2001 points) and cross-checked by Monte Carlo below
CP_INVARIANT_MEAN = 0.43089813417012474
# mass of [0, 1] under u^(-1/2) exp(-u - (u - 1)^2 / 2), from mpmath quadrature
POSTERIOR_MASS_0_1 = 0.846486404153895


def _quad(u):
    return 0.5 * (u - 1.0) ** 2


def test_posterior_masses_match_mpmath():
    f = lambda u: u ** (-0.5) * mp.e ** (-u - (u - 1) ** 2 / 2)  # noqa: E731
    ref = float(mp.quad(f, [0, 1]) / mp.quad(f, [0, 1, mp.inf]))
    assert abs(ref - POSTERIOR_MASS_0_1) < 1e-12
    masses, tail = gamma_posterior_bin_masses(np.array([0.0, 1.0, 8.0]), 0.5, _quad, 8.0)
    assert abs(masses[0] - POSTERIOR_MASS_0_1) < 1e-9
    assert abs(masses.sum() + tail - 1.0) < 1e-12


def test_grid_oracle_gaussian_case_is_exact():
    # pCN with N(0, 1) prior and Psi = (u - 1)^2 / 2 has posterior N(1/2, 1/2)
    grid, pi = invariant_on_grid(0.5, _quad, "gauss")
    assert abs(pi @ grid - 0.5) < 1e-9
    assert abs(pi @ grid**2 - 0.75) < 1e-6


def test_grid_oracle_compound_poisson_frozen():
    grid, pi = invariant_on_grid(0.5, _quad, "cp")
    assert abs(pi @ grid - CP_INVARIANT_MEAN) < 1e-12
    coarse, pc = invariant_on_grid(0.5, _quad, "cp", n_grid=1001)
    assert abs(pc @ coarse - CP_INVARIANT_MEAN) < 1e-3


@pytest.mark.slow
def test_grid_oracle_against_chains():
    spec = CompoundPoissonSpec()
    avgs = run_cp_chains(0.5, spec, [], (1.0, 1.0), 50_000, 2000, make_rngs(3, 64))[0]
    se = avgs.std(ddof=1) / np.sqrt(avgs.size)
    assert abs(avgs.mean() - CP_INVARIANT_MEAN) < 3 * se


def test_truncated_rows_share_noise_with_exact_row():
    avgs = run_cp_chains(0.5, CompoundPoissonSpec(), [0.0], (1.0, 1.0), 500, 0, make_rngs(1, 4))
    np.testing.assert_array_equal(avgs[0], avgs[1])


def test_parse_config_overrides_and_types():
    cfg = parse_config("mse-curve", "[chain]\nreplicas = 16\n[sweep]\neps = 0.5, 0.25\n", {"chain.seed": 9})
    assert cfg["chain"]["replicas"] == 16 and cfg.seed == 9
    assert cfg["sweep"]["eps"] == (0.5, 0.25)
    assert json.dumps(cfg.resolved())


@pytest.mark.parametrize("text", [
    "[chain]\nbogus = 1\n",
    "[nonsense]\nx = 1\n",
    "[chain]\nreplicas = 0\n",
    "[chain]\nreplicas = 2.5\n",
    "[kernel]\nbeta = abc\n",
    "[sweep]\neps = ,\n",
    "not an ini file",
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config("mse-curve", text)


def test_override_for_other_experiment_is_rejected():
    with pytest.raises(ConfigError):
        parse_config("reversibility", "", {"chain.n_steps": 10})
    with pytest.raises(ConfigError):
        default_config("nope")


def test_defaults_documented():
    text = describe_defaults()
    for name in ("reversibility", "posterior1d", "perturb-projection", "perturb-innovation", "mse-curve",
                 "diagnostics"):
        assert f"{name}:" in text


def test_report_rows_need_standard_errors(tmp_path):
    rep = SweepReport("x", config={"a": 1})
    rep.add("p1", 1.5, 0.1, 10, extra="y")
    rep.add("p2", 2.0, 0.0, 10)
    with pytest.raises(ValueError):
        rep.add("p3", 1.0, float("nan"), 10)
    rep.verdicts["ok"] = True
    csv_path, json_path = rep.write(tmp_path)
    assert csv_path.read_text().splitlines() == ["parameter,estimate,std_err,n_samples,extra",
                                                 "p1,1.5,0.1,10,y", "p2,2.0,0.0,10,"]
    summary = json.loads(json_path.read_text())
    assert summary["passed"] and summary["config"] == {"a": 1} and "build" in summary


def test_no_increase():
    rng = np.random.default_rng(0)
    assert no_increase(rng.normal(-0.1, 0.05, 2000))
    assert no_increase(rng.normal(0.0, 0.05, 2000))
    assert not no_increase(rng.normal(0.5, 0.05, 2000))


def test_ordered_map_keeps_order():
    assert ordered_map(lambda x: x * x, range(20), threads=4) == [x * x for x in range(20)]


def test_ssl_target_reproducible():
    a, ta = ssl_target(BasisSpec(16))
    b, tb = ssl_target(BasisSpec(16))
    np.testing.assert_array_equal(ta, tb)
    np.testing.assert_array_equal(a.data.values, b.data.values)


def _small(name, **sections):
    text = "".join(f"[{s}]\n" + "".join(f"{k} = {v}\n" for k, v in kv.items()) for s, kv in sections.items())
    return parse_config(name, text)


def test_reversibility_small_budget():
    rep = run_experiment(_small("reversibility", chain={"replicas": 2000}, kernel={"n_modes": 16}))
    assert rep.verdicts["pcn_mismatch"] and rep.verdicts["gamma_mismatch"]
    assert rep.row("gamma")["estimate"] >= 0.9


@pytest.mark.slow
def test_posterior_flat_potential():
    rep = run_experiment(_small("posterior1d", potential={"kind": "zero"}))
    assert rep.rows[-1]["estimate"] < 0.05


def test_innovation_small_budget_is_deterministic():
    cfg = dict(chain={"replicas": 16, "n_steps": 2000, "burn_in": 100},
               sweep={"moment_draws": 20000, "ks_draws": 20000, "boot": 200})
    a = run_experiment(_small("perturb-innovation", **cfg))
    b = run_experiment(_small("perturb-innovation", **cfg))
    assert a.rows == b.rows
    assert a.verdicts["moment_decreasing"] and a.verdicts["zero_eps_null"]
    assert a.row("moment_eps0")["estimate"] == 0.0


def test_mse_small_budget_writes_rows():
    rep = run_experiment(_small("mse-curve", chain={"replicas": 8},
                                sweep={"log2_n_max": 10, "boot": 50, "grid_points": 801}))
    assert {"plateau_eps0", "slope_eps0", "bias_plateau_eps0"} <= {r["parameter"] for r in rep.rows}
    with pytest.raises(ConfigError):
        run_experiment(_small("mse-curve", chain={"replicas": 1}))


def test_cli_runs_and_writes(tmp_path, capsys):
    conf = tmp_path / "c.ini"
    conf.write_text("[kernel]\nn_modes = 8\n", encoding="utf-8")
    code = cli.main(["reversibility", "--config", str(conf), "--seed", "3", "--replicas", "500",
                     "--out", str(tmp_path / "o")])
    out = capsys.readouterr().out
    assert "pcn_mismatch" in out and code in (0, 1)
    assert (tmp_path / "o" / "reversibility.csv").exists()
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["config"]["chain"]["seed"] == 3 and summary["config"]["chain"]["replicas"] == 500


def test_cli_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[chain]\nwhatever = 1\n", encoding="utf-8")
    assert cli.main(["reversibility", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert cli.main(["reversibility", "--seed", str(2**64), "--out", str(tmp_path)]) == 2
    assert cli.main(["reversibility", "--config", str(tmp_path / "missing.ini"), "--out", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        cli.main(["not-an-experiment"])
