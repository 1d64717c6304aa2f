"""Delimited dataset loading, z-score standardization, and run configuration."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .combine import CombineOperator
from .linkage import CLUSTERER_METHODS

FALLBACK_MODES = ("euclid-scaled", "max-fill")


@dataclass(frozen=True)
class DataMatrix:
    """N x F real feature matrix with optional per-sample class tags.

    Labels are evaluation metadata only; nothing in the clustering pipeline
    reads them. All entries must be finite and N >= 2.
    """

    values: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"values must be 2-D, got shape {values.shape}")
        if values.shape[0] < 2:
            raise ValueError(f"need at least 2 samples, got {values.shape[0]}")
        if values.shape[1] < 1:
            raise ValueError("need at least 1 feature")
        if not np.all(np.isfinite(values)):
            raise ValueError("data contains non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != values.shape[0]:
                raise ValueError(
                    f"got {len(labels)} labels for {values.shape[0]} samples"
                )
            object.__setattr__(self, "labels", labels)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]


def _split_line(line: str, delimiter: str | None) -> list[str]:
    return line.split(delimiter) if delimiter else line.split()


def load_dataset(path, has_header: bool = False, label_column: int | None = None) -> DataMatrix:
    """Load a delimited numeric dataset.

    The delimiter is a comma when the first content line contains one,
    whitespace otherwise. ``label_column`` names a column (0-based) whose
    values are carried as class tags instead of features. Any field that does
    not parse as a finite real is an error naming its line and column.
    """
    path = Path(path)
    lines = path.read_text().splitlines()
    rows: list[list[float]] = []
    labels: list[str] = []
    delimiter: str | None = None
    width: int | None = None
    skipped_header = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if delimiter is None:
            delimiter = "," if "," in line else None
            if delimiter is None and " " not in line and "\t" not in line:
                delimiter = ","  # single-column comma file degenerates to this
        if has_header and not skipped_header:
            skipped_header = True
            continue
        fields = [f.strip() for f in _split_line(line, delimiter)]
        if width is None:
            width = len(fields)
            if label_column is not None and not 0 <= label_column < width:
                raise ValueError(
                    f"{path}: label column {label_column} out of range for {width} columns"
                )
        elif len(fields) != width:
            raise ValueError(
                f"{path}: line {lineno} has {len(fields)} fields, expected {width}"
            )
        row = []
        for col, field in enumerate(fields):
            if label_column is not None and col == label_column:
                labels.append(field)
                continue
            try:
                value = float(field)
            except ValueError:
                raise ValueError(
                    f"{path}: line {lineno}, column {col + 1}: cannot parse {field!r}"
                ) from None
            if not math.isfinite(value):
                raise ValueError(
                    f"{path}: line {lineno}, column {col + 1}: non-finite value {field!r}"
                )
            row.append(value)
        rows.append(row)
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least 2 data rows, found {len(rows)}")
    return DataMatrix(np.array(rows, dtype=np.float64), tuple(labels) if labels else None)


def write_dataset(d: DataMatrix, path, header: list[str] | None = None) -> None:
    """Write a comma-delimited dataset at 17 significant digits.

    Rewriting preserves every value bit-for-bit through a load round trip.
    Labels, when present, are written as the first column.
    """
    path = Path(path)
    out = []
    if header is not None:
        out.append(",".join(header))
    for i in range(d.n_samples):
        fields = [f"{v:.17g}" for v in d.values[i]]
        if d.labels is not None:
            fields.insert(0, d.labels[i])
        out.append(",".join(fields))
    path.write_text("\n".join(out) + "\n")


def standardize(d: DataMatrix) -> DataMatrix:
    """Z-score each feature (population sigma); constant features become zero."""
    mu = d.values.mean(axis=0)
    sigma = d.values.std(axis=0)
    centered = d.values - mu
    out = np.zeros_like(centered)
    nonconstant = sigma > 0
    out[:, nonconstant] = centered[:, nonconstant] / sigma[nonconstant]
    return DataMatrix(out, d.labels)


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one boosted ensemble run."""

    clusterer: str = "average"
    combiner: str = "average"
    recovery: str = "average"
    iterations: int = 200
    subsample_fraction: float = 0.20
    seed: int = 0
    weight_floor: float = 1e-6
    fallback: str = "euclid-scaled"
    standardize: bool = True

    def __post_init__(self):
        if self.clusterer not in CLUSTERER_METHODS:
            raise ValueError(f"clusterer must be one of {CLUSTERER_METHODS}, got {self.clusterer!r}")
        if self.recovery not in CLUSTERER_METHODS:
            raise ValueError(f"recovery must be one of {CLUSTERER_METHODS}, got {self.recovery!r}")
        CombineOperator.parse(self.combiner)  # raises on a bad combiner id
        if not isinstance(self.iterations, int) or self.iterations < 1:
            raise ValueError(f"iterations must be a positive integer, got {self.iterations}")
        if not 0.0 < self.subsample_fraction <= 1.0:
            raise ValueError(
                f"subsample_fraction must be in (0, 1], got {self.subsample_fraction}"
            )
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if not self.weight_floor > 0.0:
            raise ValueError(f"weight_floor must be positive, got {self.weight_floor}")
        if self.fallback not in FALLBACK_MODES:
            raise ValueError(f"fallback must be one of {FALLBACK_MODES}, got {self.fallback!r}")

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, seed=seed)


_CONFIG_KEYS = (
    "clusterer",
    "combiner",
    "recovery",
    "iterations",
    "subsample_fraction",
    "seed",
    "weight_floor",
    "fallback",
    "standardize",
)

_BOOL_VALUES = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def parse_config(path) -> RunConfig:
    """Parse a flat key=value config file into a RunConfig.

    Absent keys take their defaults; unknown or repeated keys are rejected.
    Blank lines and lines starting with '#' are ignored.
    """
    path = Path(path)
    seen: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}: line {lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_KEYS:
            raise ValueError(f"{path}: line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ValueError(f"{path}: line {lineno}: repeated key {key!r}")
        seen[key] = value

    kwargs: dict = {}
    for key, value in seen.items():
        try:
            if key == "iterations" or key == "seed":
                kwargs[key] = int(value)
            elif key == "subsample_fraction" or key == "weight_floor":
                kwargs[key] = float(value)
            elif key == "standardize":
                kwargs[key] = _BOOL_VALUES[value.lower()]
            elif key == "combiner":
                kwargs[key] = value.lower()
            else:
                kwargs[key] = value.lower()
        except (ValueError, KeyError):
            raise ValueError(f"{path}: bad value {value!r} for key {key!r}") from None
    try:
        return RunConfig(**kwargs)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
