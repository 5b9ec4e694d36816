"""Experiment drivers; each takes an :class:`ExperimentConfig` and returns a :class:`SweepReport`."""
from __future__ import annotations

from .config import ConfigError, ExperimentConfig, default_config, load_config, parse_config
from .diagnostics import exp_diagnostics
from .mse import exp_mse_curve
from .perturbation import exp_perturb_innovation, exp_perturb_projection
from .posterior1d import exp_posterior_1d
from .report import SweepReport
from .reversibility import exp_reversibility

RUNNERS = {
    "reversibility": exp_reversibility,
    "posterior1d": exp_posterior_1d,
    "perturb-projection": exp_perturb_projection,
    "perturb-innovation": exp_perturb_innovation,
    "mse-curve": exp_mse_curve,
    "diagnostics": exp_diagnostics,
}


def run_experiment(cfg: ExperimentConfig) -> SweepReport:
    return RUNNERS[cfg.experiment](cfg)


__all__ = ["ConfigError", "ExperimentConfig", "RUNNERS", "SweepReport", "default_config", "exp_diagnostics",
           "exp_mse_curve", "exp_perturb_innovation", "exp_perturb_projection", "exp_posterior_1d",
           "exp_reversibility", "load_config", "parse_config", "run_experiment"]
