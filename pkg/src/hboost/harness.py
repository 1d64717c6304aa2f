"""Experiment harness: single-method baselines, parameter grids, and reports."""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import product
from pathlib import Path

import numpy as np

from .dataset import DataMatrix, RunConfig
from .distance import pairwise_euclidean
from .ensemble import hboost
from .linkage import CLUSTERER_METHODS, RECOVERY_METHODS, agglomerate, cophenetic, cpcc

GRID_COMBINERS = ("min", "average", "max")


@dataclass(frozen=True)
class RunResult:
    """Outcome of one configuration: its CPCC, wall time, and seed.

    Baseline (non-ensemble) runs carry "none" for combiner and recovery.
    A failed configuration keeps its slot with ``error`` set and cpcc = nan.
    """

    clusterer: str
    combiner: str
    recovery: str
    seed: int
    cpcc: float
    runtime: float
    error: str | None = None

    def __post_init__(self):
        if self.error is None and not -1.0 <= self.cpcc <= 1.0:
            raise ValueError(f"cpcc out of [-1, 1]: {self.cpcc}")

    @property
    def config_name(self) -> str:
        return f"{self.clusterer}/{self.combiner}/{self.recovery}"


@dataclass(frozen=True)
class GridSpec:
    """Axes and shared run parameters of a parameter sweep."""

    clusterers: tuple[str, ...] = CLUSTERER_METHODS
    combiners: tuple[str, ...] = GRID_COMBINERS
    recoveries: tuple[str, ...] = RECOVERY_METHODS
    iterations: int = 200
    fraction: float = 0.20
    seeds: tuple[int, ...] = (0,)
    standardize: bool = True

    def __post_init__(self):
        for name, values, allowed in (
            ("clusterers", self.clusterers, CLUSTERER_METHODS),
            ("combiners", self.combiners, GRID_COMBINERS),
            ("recoveries", self.recoveries, RECOVERY_METHODS),
        ):
            if not values:
                raise ValueError(f"{name} must be nonempty")
            bad = [v for v in values if v not in allowed]
            if bad:
                raise ValueError(f"{name} contains unknown entries {bad}; allowed: {allowed}")
            if len(set(values)) != len(values):
                raise ValueError(f"{name} contains duplicates")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if not 0.0 < self.fraction <= 1.0:
            raise ValueError(f"fraction must be in (0, 1], got {self.fraction}")
        if not self.seeds:
            raise ValueError("seeds must be nonempty")

    def configs(self) -> list[RunConfig]:
        """All runs in canonical (clusterer, combiner, recovery, seed) order."""
        return [
            RunConfig(
                clusterer=c,
                combiner=b,
                recovery=r,
                iterations=self.iterations,
                subsample_fraction=self.fraction,
                seed=s,
                standardize=self.standardize,
            )
            for c, b, r, s in sorted(
                product(self.clusterers, self.combiners, self.recoveries, self.seeds)
            )
        ]


def run_single(d: DataMatrix, method: str) -> RunResult:
    """CPCC of a plain (no subsampling) hierarchical clustering of ``d``."""
    start = time.perf_counter()
    euclid = pairwise_euclidean(d)
    tree = agglomerate(euclid, method)
    value = cpcc(euclid, cophenetic(tree))
    return RunResult(
        clusterer=method,
        combiner="none",
        recovery="none",
        seed=0,
        cpcc=value,
        runtime=time.perf_counter() - start,
    )


def _run_config(d: DataMatrix, cfg: RunConfig) -> RunResult:
    start = time.perf_counter()
    try:
        result = hboost(d, cfg)
        value = result.trace[-1].cpcc
        return RunResult(
            clusterer=cfg.clusterer,
            combiner=cfg.combiner,
            recovery=cfg.recovery,
            seed=cfg.seed,
            cpcc=value,
            runtime=time.perf_counter() - start,
        )
    except Exception as exc:  # record the failure, keep the grid going
        return RunResult(
            clusterer=cfg.clusterer,
            combiner=cfg.combiner,
            recovery=cfg.recovery,
            seed=cfg.seed,
            cpcc=math.nan,
            runtime=time.perf_counter() - start,
            error=f"{type(exc).__name__}: {exc}",
        )


def _run_config_star(args) -> RunResult:
    return _run_config(*args)


def run_grid(d: DataMatrix, g: GridSpec, workers: int = 1) -> list[RunResult]:
    """Run every grid configuration; one RunResult per config and seed.

    Results come back in canonical config order regardless of scheduling.
    ``workers`` > 1 fans runs out to a process pool.
    """
    configs = g.configs()
    if workers <= 1:
        return [_run_config(d, cfg) for cfg in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_config_star, [(d, cfg) for cfg in configs]))


@dataclass(frozen=True)
class ReportRow:
    rank: int
    label: str
    mean_cpcc: float
    std_cpcc: float
    n_runs: int


@dataclass(frozen=True)
class ReportTable:
    """Rows sorted by descending mean CPCC; ties broken by config name."""

    group_by: str
    rows: tuple[ReportRow, ...]


def rank_report(results, group_by: str = "none") -> ReportTable:
    """Aggregate results by one axis (or by full config for "none") and rank.

    Error rows are excluded from aggregation. Means are taken over every run
    that shares the group label, e.g. grouping the full grid by clusterer
    averages over all combiner x recovery combinations and seeds.
    """
    if group_by not in ("clusterer", "combiner", "recovery", "none"):
        raise ValueError(f"group_by must be clusterer, combiner, recovery, or none, got {group_by!r}")
    usable = [r for r in results if r.error is None and math.isfinite(r.cpcc)]
    if not usable:
        raise ValueError("no usable results to report")
    groups: dict[str, list[float]] = {}
    for r in usable:
        label = r.config_name if group_by == "none" else getattr(r, group_by)
        groups.setdefault(label, []).append(r.cpcc)
    aggregated = [
        (float(np.mean(vals)), float(np.std(vals)), len(vals), label)
        for label, vals in groups.items()
    ]
    aggregated.sort(key=lambda row: (-row[0], row[3]))
    rows = tuple(
        ReportRow(rank=k + 1, label=label, mean_cpcc=mean, std_cpcc=std, n_runs=count)
        for k, (mean, std, count, label) in enumerate(aggregated)
    )
    return ReportTable(group_by=group_by, rows=rows)


def render_report(table: ReportTable) -> str:
    """Fixed-width text rendering of a ReportTable (numbers at 6 decimals)."""
    width = max([len(r.label) for r in table.rows] + [len("config")])
    lines = [
        f"{'rank':>4}  {'config':<{width}}  {'mean_cpcc':>10}  {'std_cpcc':>9}  {'runs':>5}"
    ]
    for r in table.rows:
        lines.append(
            f"{r.rank:>4}  {r.label:<{width}}  {r.mean_cpcc:>10.6f}  {r.std_cpcc:>9.6f}  {r.n_runs:>5}"
        )
    return "\n".join(lines) + "\n"


def write_results(results, path) -> None:
    """Persist results as line-delimited JSON records."""
    path = Path(path)
    with open(path, "w") as fh:
        for r in results:
            record = {
                "clusterer": r.clusterer,
                "combiner": r.combiner,
                "recovery": r.recovery,
                "seed": r.seed,
                "cpcc": None if r.error is not None else r.cpcc,
                "runtime": r.runtime,
                "error": r.error,
            }
            fh.write(json.dumps(record) + "\n")


def read_results(path) -> list[RunResult]:
    """Load results written by write_results."""
    path = Path(path)
    out = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            out.append(
                RunResult(
                    clusterer=record["clusterer"],
                    combiner=record["combiner"],
                    recovery=record["recovery"],
                    seed=int(record["seed"]),
                    cpcc=math.nan if record["cpcc"] is None else float(record["cpcc"]),
                    runtime=float(record["runtime"]),
                    error=record["error"],
                )
            )
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            raise ValueError(f"{path}: line {lineno}: bad results record ({exc})") from None
    if not out:
        raise ValueError(f"{path}: no result records found")
    return out
