"""INI-style experiment configuration with per-experiment defaults.

Files are flat ``key = value`` lines under ``[chain]``, ``[kernel]``,
``[potential]``, ``[semimetric]`` and ``[sweep]`` headers. Keys that the
chosen experiment does not define are a hard error.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

SECTIONS = ("chain", "kernel", "potential", "semimetric", "sweep")


class ConfigError(ValueError):
    pass


_SSL_POTENTIAL = {"n_obs": 8, "sigma": 1.0, "h": 1.0, "data_seed": 7}
_SEMI = {"omega": 1.0, "eta": 0.1, "theta": 0.01, "p": 2}

DEFAULTS: dict[str, dict[str, dict]] = {
    "reversibility": {
        "chain": {"seed": 0, "replicas": 10000},
        "kernel": {"n_modes": 64, "r": 0.5, "beta": 0.5, "mismatch_beta": 0.1},
        "potential": {},
        "semimetric": {},
        "sweep": {"variants": ("pcn", "gamma", "pcn_mismatch", "gamma_mismatch"), "ks_level": 0.01},
    },
    "posterior1d": {
        "chain": {"seed": 0, "replicas": 1, "n_steps": 1_000_000, "burn_in": 1000, "u0": 1.0},
        "kernel": {"r": 0.5, "beta": 0.5},
        "potential": {"kind": "quadratic", "center": 1.0, "scale": 1.0},
        "semimetric": {},
        "sweep": {"checkpoints": (100_000, 1_000_000), "bins": 128, "u_max": 8.0, "boot": 400},
    },
    "perturb-projection": {
        "chain": {"seed": 0, "replicas": 64, "n_steps": 20000, "burn_in": 2000, "one_step_starts": 20000},
        "kernel": {"n_modes": 64, "beta": 0.5},
        "potential": dict(_SSL_POTENTIAL),
        "semimetric": dict(_SEMI),
        "sweep": {"m_cut": (2, 4, 8, 16, 32, 64), "boot": 2000},
    },
    "perturb-innovation": {
        "chain": {"seed": 0, "replicas": 256, "n_steps": 20000, "burn_in": 1000},
        "kernel": {"beta": 0.5, "rate": 1.0, "jump_std": 1.0},
        "potential": {"center": 1.0, "scale": 1.0},
        "semimetric": {},
        "sweep": {"eps": (0.0, 1.0, 0.5, 0.25, 0.125, 0.0625), "moment_draws": 200_000, "q": 1,
                  "ks_eps": (1.0, 0.5, 0.25), "ks_draws": 100_000, "mixture_eps": 0.3, "boot": 2000},
    },
    "mse-curve": {
        "chain": {"seed": 0, "replicas": 256},
        "kernel": {"beta": 0.5, "rate": 1.0, "jump_std": 1.0},
        "potential": {"center": 1.0, "scale": 1.0},
        "semimetric": {},
        "sweep": {"eps": (0.0, 1.0, 0.5, 0.25, 0.125, 0.0625), "log2_n_min": 8, "log2_n_max": 18,
                  "boot": 1000, "grid_points": 2001},
    },
    "diagnostics": {
        "chain": {"seed": 0, "drift_reps": 10000, "contraction_reps": 10000, "smallset_reps": 256},
        "kernel": {"n_modes": 64, "r": 0.5, "beta": 0.5},
        "potential": dict(_SSL_POTENTIAL, eps_t=100.0, R0=5.0, beta_tilde=0.5, b_tilde=0.5),
        "semimetric": dict(_SEMI),
        "sweep": {"radii": (1.0, 2.0, 5.0, 10.0, 20.0, 50.0), "directions": 8, "pairs": 16, "pair_offset": 0.05,
                  "smallset_R": 25.0, "smallset_log2_max": 8, "triples": 100_000,
                  "tail_radii": (5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0), "tail_floor": 1e-12,
                  "tail_pairs": 10000, "tail_directions": 64},
    },
}

EXPERIMENTS = tuple(DEFAULTS)


def _coerce(default, raw: str, where: str):
    raw = raw.strip()
    try:
        if isinstance(default, tuple):
            items = [x.strip() for x in raw.split(",") if x.strip()]
            if not items:
                raise ConfigError(f"{where}: empty list")
            kind = type(default[0]) if default else str
            return tuple(_coerce(kind(), x, where) if kind is not str else x for x in items)
        if isinstance(default, bool):
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ConfigError(f"{where}: expected a boolean, got {raw!r}")
            return raw.lower() in ("true", "1", "yes")
        if isinstance(default, int):
            v = float(raw)
            if v != int(v):
                raise ConfigError(f"{where}: expected an integer, got {raw!r}")
            return int(v)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: cannot parse {raw!r}") from None


@dataclass
class ExperimentConfig:
    experiment: str
    sections: dict = field(default_factory=dict)
    threads: int = 1

    def __post_init__(self):
        if self.experiment not in DEFAULTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        chain = self.sections.get("chain", {})
        if "replicas" in chain and chain["replicas"] < 1:
            raise ConfigError("replicas must be >= 1")
        for key, val in self.sections.get("sweep", {}).items():
            if isinstance(val, tuple) and not val:
                raise ConfigError(f"sweep.{key} must be nonempty")

    def __getitem__(self, section: str) -> dict:
        return self.sections[section]

    @property
    def seed(self) -> int:
        return int(self.sections["chain"]["seed"])

    def resolved(self) -> dict:
        return {s: {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}
                for s, d in self.sections.items()}


def default_config(experiment: str) -> ExperimentConfig:
    if experiment not in DEFAULTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    return ExperimentConfig(experiment, {s: dict(d) for s, d in DEFAULTS[experiment].items()})


def parse_config(experiment: str, text: str = "", overrides: dict | None = None, threads: int = 1) -> ExperimentConfig:
    """Defaults for ``experiment`` updated from INI ``text`` and then ``overrides``."""
    cfg = default_config(experiment)
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in cfg.sections[section]:
                raise ConfigError(f"unknown key {section}.{key} for experiment {experiment!r}")
            cfg.sections[section][key] = _coerce(cfg.sections[section][key], raw, f"{section}.{key}")
    for dotted, val in (overrides or {}).items():
        section, key = dotted.split(".", 1)
        if key not in cfg.sections.get(section, {}):
            raise ConfigError(f"option {dotted} does not apply to {experiment!r}")
        cfg.sections[section][key] = val
    return ExperimentConfig(experiment, cfg.sections, threads)


def load_config(experiment: str, path=None, overrides: dict | None = None, threads: int = 1) -> ExperimentConfig:
    text = Path(path).read_text(encoding="utf-8") if path else ""
    return parse_config(experiment, text, overrides, threads)


def describe_defaults() -> str:
    lines = []
    for exp, secs in DEFAULTS.items():
        lines.append(f"{exp}:")
        for s, d in secs.items():
            for k, v in d.items():
                shown = ",".join(str(x) for x in v) if isinstance(v, tuple) else v
                lines.append(f"  [{s}] {k} = {shown}")
    return "\n".join(lines)
