"""Sweep reports: deterministic CSV rows plus a JSON summary."""
from __future__ import annotations

import csv
import json
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

BASE_COLUMNS = ("parameter", "estimate", "std_err", "n_samples")


@dataclass
class SweepReport:
    experiment: str
    rows: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def add(self, parameter, estimate, std_err, n_samples, **aux):
        if std_err is None or not np.isfinite(std_err):
            raise ValueError(f"row {parameter!r} needs a finite standard error")
        self.rows.append(dict(parameter=parameter, estimate=float(estimate), std_err=float(std_err),
                              n_samples=int(n_samples), **aux))

    def row(self, parameter) -> dict:
        for r in self.rows:
            if r["parameter"] == parameter:
                return r
        raise KeyError(parameter)

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def columns(self) -> list[str]:
        extra = []
        for r in self.rows:
            extra += [k for k in r if k not in BASE_COLUMNS and k not in extra]
        return list(BASE_COLUMNS) + extra

    def to_csv(self, path):
        cols = self.columns()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in self.rows:
                w.writerow([_fmt(r.get(c, "")) for c in cols])

    def summary(self) -> dict:
        return {"experiment": self.experiment, "verdicts": self.verdicts, "passed": self.passed,
                "fits": _plain(self.fits), "config": self.config, "build": git_describe()}

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{self.experiment}.csv"
        json_path = out / "summary.json"
        self.to_csv(csv_path)
        json_path.write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return csv_path, json_path


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def git_describe() -> str:
    try:
        res = subprocess.run(["git", "describe", "--always", "--dirty"], capture_output=True, text=True,
                             cwd=Path(__file__).resolve().parent, timeout=10)
        return res.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def ordered_map(fn, items, threads: int = 1) -> list:
    """``[fn(x) for x in items]``, optionally on a thread pool; results keep input order."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def no_increase(diffs_boot, level: float = 0.99) -> bool:
    """True when the bootstrap lower quantile of an increment is <= 0.

    ``diffs_boot`` holds bootstrap replicates of ``later - earlier``; an
    increase is significant only if even its lower ``1 - level`` quantile is
    positive.
    """
    d = np.asarray(diffs_boot, dtype=float)
    return bool(np.quantile(d, 1.0 - level) <= 0.0)
