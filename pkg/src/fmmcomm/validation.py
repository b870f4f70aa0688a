"""Ingestion of measured per-rank timings and comparison against predictions.

Measurement files are CSV with header ``rank,level,phase,seconds`` and
optional leading ``# key: value`` metadata comments (machine label, particles
per process, steps averaged, ...). Times are per-step averages. Serialization
writes full float precision so a write/parse round trip is lossless.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MeasurementParseError, NoOverlapError
from .model import ModelVariant, PredictionReport
from .phases import Phase

HEADER = ("rank", "level", "phase", "seconds")


@dataclass(frozen=True, order=True)
class MeasurementRecord:
    rank: int
    level: int
    phase: Phase
    seconds: float


@dataclass(frozen=True)
class MeasurementSet:
    """Canonically ordered measurement records plus file metadata."""

    records: tuple[MeasurementRecord, ...]
    metadata: dict[str, str] = field(default_factory=dict)

    @staticmethod
    def from_records(records, metadata=None) -> "MeasurementSet":
        ordered = tuple(sorted(records, key=lambda r: (r.rank, r.level, r.phase.value)))
        seen = set()
        for r in ordered:
            key = (r.rank, r.level, r.phase)
            if key in seen:
                raise MeasurementParseError(
                    f"duplicate record for rank {r.rank}, level {r.level}, "
                    f"phase {r.phase.value}")
            seen.add(key)
            if r.seconds < 0:
                raise MeasurementParseError(
                    f"negative time {r.seconds} for rank {r.rank}")
        return MeasurementSet(records=ordered, metadata=dict(metadata or {}))

    @property
    def num_ranks(self) -> int:
        return len({r.rank for r in self.records})

    def level_phases(self) -> list[tuple[int, Phase]]:
        return sorted({(r.level, r.phase) for r in self.records},
                      key=lambda k: (k[0], k[1].value))


def parse_measurements(stream: io.TextIOBase | str) -> MeasurementSet:
    """Parse measurement CSV; bad rows raise with their line number and field."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    metadata: dict[str, str] = {}
    records: list[MeasurementRecord] = []
    seen: set[tuple[int, int, Phase]] = set()
    header_done = False
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if ":" in line:
                key, _, value = line[1:].partition(":")
                metadata[key.strip()] = value.strip()
            continue
        parts = [p.strip() for p in line.split(",")]
        if not header_done:
            if tuple(p.lower() for p in parts) != HEADER:
                raise MeasurementParseError(
                    f"expected header '{','.join(HEADER)}', got '{line}'", line=lineno)
            header_done = True
            continue
        if len(parts) != 4:
            raise MeasurementParseError(
                f"expected 4 fields, got {len(parts)}", line=lineno)
        try:
            rank = int(parts[0])
        except ValueError:
            raise MeasurementParseError("bad rank", line=lineno, field="rank") from None
        try:
            level = int(parts[1])
        except ValueError:
            raise MeasurementParseError("bad level", line=lineno, field="level") from None
        try:
            phase = Phase.from_text(parts[2])
        except ValueError:
            raise MeasurementParseError(
                f"bad phase '{parts[2]}'", line=lineno, field="phase") from None
        try:
            seconds = float(parts[3])
        except ValueError:
            raise MeasurementParseError("bad time", line=lineno, field="seconds") from None
        if rank < 0 or level < 0:
            raise MeasurementParseError(
                "rank and level must be >= 0", line=lineno,
                field="rank" if rank < 0 else "level")
        if not math.isfinite(seconds) or seconds < 0:
            raise MeasurementParseError(
                f"time must be finite and >= 0, got {parts[3]}",
                line=lineno, field="seconds")
        key = (rank, level, phase)
        if key in seen:
            raise MeasurementParseError(
                f"duplicate record for rank {rank}, level {level}, phase {phase.value}",
                line=lineno)
        seen.add(key)
        records.append(MeasurementRecord(rank, level, phase, seconds))
    if not header_done:
        raise MeasurementParseError("empty input: no header found")
    return MeasurementSet.from_records(records, metadata)


def write_measurements(ms: MeasurementSet, stream: io.TextIOBase) -> None:
    """Inverse of :func:`parse_measurements`, bit-exact on the times."""
    for key in sorted(ms.metadata):
        stream.write(f"# {key}: {ms.metadata[key]}\n")
    stream.write(",".join(HEADER) + "\n")
    for r in ms.records:
        stream.write(f"{r.rank},{r.level},{r.phase.value},{r.seconds!r}\n")


@dataclass(frozen=True)
class LevelStats:
    level: int
    phase: Phase
    mean: float
    stddev: float   # population (divide by n)
    min: float
    max: float
    rank_count: int


def level_statistics(ms: MeasurementSet) -> list[LevelStats]:
    """Across-rank statistics per (level, phase); the spread is what the
    per-level error bars show."""
    if not ms.records:
        raise ValueError("empty measurement set")
    out = []
    for level, phase in ms.level_phases():
        values = np.array([r.seconds for r in ms.records
                           if r.level == level and r.phase is phase])
        out.append(LevelStats(
            level=level, phase=phase,
            mean=float(values.mean()), stddev=float(values.std()),
            min=float(values.min()), max=float(values.max()),
            rank_count=int(values.size)))
    return out


@dataclass(frozen=True)
class ComparisonRow:
    level: int
    phase: Phase
    variant: ModelVariant
    predicted: float
    measured_mean: float
    measured_stddev: float
    ratio: float
    within_band: bool


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple[ComparisonRow, ...]
    prediction_only: tuple[tuple[int, Phase], ...]
    measurement_only: tuple[tuple[int, Phase], ...]


def _ratio(predicted: float, measured: float) -> float:
    if measured > 0:
        return predicted / measured
    return 1.0 if predicted == 0 else math.inf


def compare(pred: PredictionReport, stats: list[LevelStats]) -> ComparisonReport:
    """Join predictions and measured statistics on (level, phase).

    Keys present on only one side are reported separately rather than
    dropped. A level's measured mean is "within band" when it falls between
    the smallest and largest variant prediction for that level, inclusive.
    """
    stats_by_key = {(s.level, s.phase): s for s in stats}
    pred_keys = [(row.level, row.phase) for row in pred.rows]
    matched = [k for k in pred_keys if k in stats_by_key]
    if not matched:
        raise NoOverlapError(
            "prediction and measurements share no (level, phase) keys")
    rows = []
    for row in pred.rows:
        key = (row.level, row.phase)
        stat = stats_by_key.get(key)
        if stat is None:
            continue
        lo = min(row.times.values())
        hi = max(row.times.values())
        in_band = lo <= stat.mean <= hi
        for variant in pred.variants:
            predicted = row.times[variant]
            rows.append(ComparisonRow(
                level=row.level, phase=row.phase, variant=variant,
                predicted=predicted, measured_mean=stat.mean,
                measured_stddev=stat.stddev,
                ratio=_ratio(predicted, stat.mean),
                within_band=in_band))
    prediction_only = tuple(k for k in pred_keys if k not in stats_by_key)
    measurement_only = tuple(k for k in sorted(stats_by_key)
                             if k not in set(pred_keys))
    return ComparisonReport(rows=tuple(rows), prediction_only=prediction_only,
                            measurement_only=measurement_only)


@dataclass(frozen=True)
class LoadBalanceReport:
    """Per-rank totals with their per-(level, phase) components, ranks sorted
    ascending by total time (ties by rank id), ready for stacked plotting."""

    ranks: tuple[int, ...]
    totals: tuple[float, ...]
    series: dict[tuple[int, Phase], tuple[float, ...]]


def load_balance_report(ms: MeasurementSet) -> LoadBalanceReport:
    if not ms.records:
        raise ValueError("empty measurement set")
    keys = ms.level_phases()
    by_rank: dict[int, dict[tuple[int, Phase], float]] = {}
    for r in ms.records:
        by_rank.setdefault(r.rank, {})[(r.level, r.phase)] = r.seconds
    totals = {rank: math.fsum(components.values())
              for rank, components in by_rank.items()}
    order = sorted(by_rank, key=lambda rank: (totals[rank], rank))
    series = {key: tuple(by_rank[rank].get(key, 0.0) for rank in order)
              for key in keys}
    return LoadBalanceReport(
        ranks=tuple(order),
        totals=tuple(math.fsum(by_rank[rank].get(key, 0.0) for key in keys)
                     for rank in order),
        series=series)
