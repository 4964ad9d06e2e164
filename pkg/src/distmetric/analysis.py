"""Curve normalization and metric-vs-MOS correlation.

relative_change rescales a sweep curve by a chosen baseline condition
(per metric, repeat-matched) so degradation plots read as multiples of
the cleanest condition. correlate joins per-system metric values with a
human MOS table and reports Pearson or Spearman coefficients.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .errors import (
    DataError,
    DegenerateBaseline,
    DegenerateData,
    FormatError,
    InsufficientData,
    MissingCondition,
    UsageError,
)
from .sweep import SweepCurve

PEARSON = "pearson"
SPEARMAN = "spearman"


@dataclass(frozen=True)
class MosRow:
    system: str
    mos: float
    mos_ci: float | None = None

    def __post_init__(self) -> None:
        if not self.system:
            raise DataError("system name is empty")
        if not 1.0 <= self.mos <= 5.0:
            raise DataError(f"MOS {self.mos} for {self.system!r} outside [1, 5]")
        if self.mos_ci is not None and not self.mos_ci >= 0.0:
            raise DataError(f"MOS CI {self.mos_ci} for {self.system!r} is negative")


@dataclass(frozen=True)
class MosTable:
    rows: tuple[MosRow, ...]

    def __post_init__(self) -> None:
        names = [r.system for r in self.rows]
        if len(set(names)) != len(names):
            raise DataError("duplicate system names in MOS table")


@dataclass(frozen=True)
class CorrelationResult:
    method: str
    coefficient: float
    n: int


def relative_change(curve: SweepCurve, baseline_condition: float) -> SweepCurve:
    """Divide each value by its metric's baseline value, repeat-matched.

    Baseline points map to exactly 1. Idempotent for the same baseline.
    """
    baseline = {
        (p.metric, p.repeat_index): p.value
        for p in curve.points
        if p.condition == baseline_condition
    }
    if not baseline:
        raise MissingCondition(f"baseline condition {baseline_condition} not in curve")
    out = []
    for p in curve.points:
        key = (p.metric, p.repeat_index)
        if key not in baseline:
            raise MissingCondition(
                f"no baseline point for metric {p.metric} repeat {p.repeat_index}"
            )
        b = baseline[key]
        if b == 0.0:
            raise DegenerateBaseline(f"baseline value for {p.metric} is zero")
        out.append(replace(p, value=1.0 if p.condition == baseline_condition else p.value / b))
    return SweepCurve(tuple(out))


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    denom = math.sqrt(float(xc @ xc) * float(yc @ yc))
    if denom == 0.0:
        raise DegenerateData("zero variance on one side of the correlation")
    return max(-1.0, min(1.0, float(xc @ yc) / denom))


def correlate(
    metric_by_system: dict[str, float],
    mos: MosTable,
    method: str = SPEARMAN,
    case_insensitive: bool = False,
) -> CorrelationResult:
    """Correlate metric values with MOS over exact system-name matches.

    Spearman is Pearson over average ranks (ties get averaged ranks).
    The case-insensitive join is opt-in; fuzzy matching is not offered.
    """
    if method not in (PEARSON, SPEARMAN):
        raise UsageError(f"unknown correlation method {method!r}")
    fold = (lambda s: s.casefold()) if case_insensitive else (lambda s: s)
    metric_map: dict[str, float] = {}
    for name, value in metric_by_system.items():
        key = fold(name)
        if key in metric_map:
            raise DataError(f"system name collision after case folding: {name!r}")
        metric_map[key] = float(value)
    pairs = [
        (metric_map[fold(r.system)], r.mos)
        for r in mos.rows
        if fold(r.system) in metric_map
    ]
    if len(pairs) < 3:
        raise InsufficientData(f"only {len(pairs)} systems joined; need at least 3")
    x = np.array([p[0] for p in pairs])
    y = np.array([p[1] for p in pairs])
    if method == SPEARMAN:
        x = rankdata(x)
        y = rankdata(y)
    return CorrelationResult(method, _pearson(x, y), len(pairs))


def read_mos_csv(path: Path | str) -> MosTable:
    """Parse `system,mos[,mos_ci]` rows; comment lines start with '#'."""
    rows = []
    for record in _read_records(path, required={"system", "mos"}, optional={"mos_ci"}):
        ci = record.get("mos_ci")
        rows.append(
            MosRow(
                record["system"],
                _parse_float(record["mos"], path, "mos"),
                None if ci in (None, "") else _parse_float(ci, path, "mos_ci"),
            )
        )
    if not rows:
        raise FormatError(f"{path}: no data rows")
    return MosTable(tuple(rows))


def read_metric_csv(path: Path | str) -> dict[str, dict[str, float]]:
    """Parse `system,metric,value` rows into {metric: {system: value}}."""
    out: dict[str, dict[str, float]] = {}
    for record in _read_records(path, required={"system", "metric", "value"}):
        per_metric = out.setdefault(record["metric"], {})
        if record["system"] in per_metric:
            raise FormatError(
                f"{path}: duplicate row for system {record['system']!r} "
                f"metric {record['metric']!r}"
            )
        per_metric[record["system"]] = _parse_float(record["value"], path, "value")
    if not out:
        raise FormatError(f"{path}: no data rows")
    return out


def _parse_float(text: str, path: Path | str, column: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise FormatError(f"{path}: bad {column} value {text!r}") from None


def _read_records(
    path: Path | str, required: set[str], optional: set[str] = frozenset()
) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.DictReader(lines)
    headers = set(reader.fieldnames or ())
    if not required <= headers:
        raise FormatError(
            f"{path}: header must contain {sorted(required)}, got {sorted(headers)}"
        )
    if extra := headers - required - optional:
        raise FormatError(f"{path}: unexpected columns {sorted(extra)}")
    return [dict(r) for r in reader]
