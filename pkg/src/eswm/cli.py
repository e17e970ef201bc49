"""Command-line driver: ``eswm --config exp.json --experiment single_auction --seed 7 --out results/``.

The config is a JSON object.  Any field left out takes the per-experiment
default below, so ``{}`` reproduces the published setting for that experiment.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy import stats

from .experiments import FAMILIES
from .population import Distributions
from .report import emit_csv

log = logging.getLogger("eswm")

_BETAS = [round(0.1 * k, 1) for k in range(1, 21)]

DEFAULTS = {
    "single_auction": dict(n_requesters=1000, n_workers=2000, capacity_grid=list(range(100, 1001, 100)),
                           beta_alpha_grid=[0.5], beta_lambda_grid=[0.5]),
    "reselection": dict(n_requesters=2000, n_workers=4000, capacity_grid=list(range(100, 1001, 100)),
                        beta_alpha_grid=[0.5], beta_lambda_grid=[0.5]),
    "beta_sweep": dict(n_requesters=1000, n_workers=2000, capacity_grid=[500],
                       beta_alpha_grid=_BETAS, beta_lambda_grid=_BETAS),
    "oracle_compare": dict(n_requesters=100, n_workers=200, capacity_grid=[100],
                           beta_alpha_grid=[0.5], beta_lambda_grid=[0.5]),
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str = "single_auction"
    n_requesters: int | None = None
    n_workers: int | None = None
    capacity_grid: list | None = None
    beta_alpha_grid: list | None = None
    beta_lambda_grid: list | None = None
    n_runs: int = 200
    master_seed: int = 0
    distributions: dict = field(default_factory=dict)
    output_dir: str = "results"
    # reselection
    rounds: int = 2
    decay: float | None = None
    # beta_sweep
    sweep: str = "marginal"
    beta_fixed: float = 0.5
    # oracle_compare
    requester_grid: list = field(default_factory=lambda: [100, 200, 300, 400, 500])
    worker_factor: int = 2

    def __post_init__(self):
        if self.experiment not in DEFAULTS:
            raise ConfigError(f"experiment: unknown value {self.experiment!r}; "
                              f"expected one of {sorted(DEFAULTS)}")
        for name, value in DEFAULTS[self.experiment].items():
            if getattr(self, name) is None:
                setattr(self, name, list(value) if isinstance(value, list) else value)
        self.validate()

    def validate(self):
        for name in ("capacity_grid", "beta_alpha_grid", "beta_lambda_grid", "requester_grid"):
            grid = getattr(self, name)
            if not isinstance(grid, list) or not grid:
                raise ConfigError(f"{name}: must be a nonempty list")
        if any(not isinstance(k, int) or k < 1 for k in self.capacity_grid):
            raise ConfigError("capacity_grid: entries must be positive integers")
        if any(not isinstance(b, (int, float)) or b < 0 for b in self.beta_alpha_grid + self.beta_lambda_grid):
            raise ConfigError("beta grids: entries must be nonnegative numbers")
        for name in ("n_requesters", "n_workers", "n_runs", "rounds", "worker_factor"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < (0 if name == "rounds" else 1):
                raise ConfigError(f"{name}: must be a positive integer, got {value!r}")
        if self.sweep not in ("marginal", "grid"):
            raise ConfigError(f"sweep: expected 'marginal' or 'grid', got {self.sweep!r}")
        if self.decay is not None and not 0 < self.decay <= 1:
            raise ConfigError("decay: must lie in (0, 1]")
        try:
            Distributions.from_dict(self.distributions)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"distributions: {exc}") from None

    @property
    def dist(self) -> Distributions:
        return Distributions.from_dict(self.distributions)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"{sorted(unknown)[0]}: unknown config field")
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return ExperimentConfig.from_dict(data)


SUMMARY_METRICS = ("nsw", "esw", "platform_utility_pre", "platform_utility_post",
                   "avg_requester_utility", "avg_worker_utility")


def summarize(records, out=None):
    """Mean and 95% confidence half-width of each metric per experiment cell."""
    out = out or sys.stdout
    groups: dict = {}
    for rec in records:
        key = (rec.mechanism, rec.round, rec.capacity, rec.beta_alpha, rec.beta_lambda)
        groups.setdefault(key, []).append(rec)
    for key in sorted(groups):
        recs = groups[key]
        parts = []
        for metric in SUMMARY_METRICS:
            x = np.array([getattr(r, metric) for r in recs], dtype=float)
            half = (stats.t.ppf(0.975, len(x) - 1) * x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else 0.0
            parts.append(f"{metric}={x.mean():.4g}±{half:.2g}")
        mech, rnd, K, ba, bl = key
        print(f"{mech:<16} round={rnd} K={K} beta=({ba:g},{bl:g}) n={len(recs)} " + " ".join(parts), file=out)


def run_experiment(cfg: ExperimentConfig, out=None) -> Path:
    out = out or sys.stdout
    timings: dict = {}
    family = FAMILIES[cfg.experiment]
    progress = lambda run: log.info("%s: run %d/%d done", cfg.experiment, run + 1, cfg.n_runs)
    if cfg.experiment == "oracle_compare":
        records = family(cfg, progress, timings=timings)
    else:
        records = family(cfg, progress)
    path = emit_csv(records, Path(cfg.output_dir) / f"{cfg.experiment}_{cfg.master_seed}.csv")
    summarize(records, out)
    for (name, n_r), ts in sorted(timings.items()):
        print(f"time {name:<10} |R|={n_r}: mean {np.mean(ts):.4f}s over {len(ts)} runs", file=out)
    print(f"wrote {len(records)} records to {path}", file=out)
    return path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="eswm", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON experiment config")
    parser.add_argument("--experiment", choices=sorted(DEFAULTS))
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(message)s")
    try:
        data = {}
        if args.config:
            with open(args.config) as fh:
                data = json.load(fh)
            if not isinstance(data, dict):
                raise ConfigError(f"{args.config}: top level must be an object")
        if args.experiment:
            if data.get("experiment") not in (None, args.experiment):
                # grids tied to the file's experiment no longer apply
                log.warning("--experiment overrides config experiment %r", data["experiment"])
            data["experiment"] = args.experiment
        if args.seed is not None:
            data["master_seed"] = args.seed
        if args.out:
            data["output_dir"] = args.out
        cfg = ExperimentConfig.from_dict(data)
    except (OSError, json.JSONDecodeError, ConfigError, TypeError) as exc:
        print(f"eswm: invalid configuration: {exc}", file=sys.stderr)
        return 2
    run_experiment(cfg)
    return 0


if __name__ == "__main__":
    sys.exit(main())
