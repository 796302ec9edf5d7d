"""Fwdlearn Metrics Records

One :class:`MetricsRecord` per training round, written as a CSV row with the
header::

    round,critic_loss,actor_loss,alpha,supervised_mse,rmse_rollout,mean_rollout_reward,total_env_reward,wall_ms

Fields that do not apply to a round (no critic for the supervised baseline,
skipped updates, rounds without evaluation) are empty cells, never 0.

License: MIT
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import astuple
from dataclasses import dataclass
from dataclasses import fields
from pathlib import Path
from typing import TextIO

from fwdlearn.core.exceptions import ReportError

__all__ = ["METRICS_HEADER", "MetricsRecord", "CsvMetricsSink", "LoggingSink", "read_metrics_csv", "format_cell"]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricsRecord:
    round: int
    critic_loss: float | None = None
    actor_loss: float | None = None
    alpha: float | None = None
    supervised_mse: float | None = None
    rmse_rollout: float | None = None
    mean_rollout_reward: float | None = None
    total_env_reward: float | None = None
    wall_ms: float | None = None

    def to_row(self) -> list[str]:
        return [format_cell(value) for value in astuple(self)]

    @classmethod
    def from_row(cls, row: dict[str, str], lineno: int) -> MetricsRecord:
        """Parse a CSV row; *lineno* names the row in error messages."""
        values = {}
        for f in fields(cls):
            cell = (row.get(f.name) or "").strip()
            try:
                if f.name == "round":
                    values[f.name] = int(cell)
                else:
                    values[f.name] = None if cell == "" else float(cell)
            except ValueError as exc:
                raise ReportError(f"row {lineno}: column {f.name!r} has unparsable value {cell!r}") from exc
        return cls(**values)


METRICS_HEADER = [f.name for f in fields(MetricsRecord)]


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        if not math.isfinite(value):
            return ""
        return repr(value)
    return str(value)


class CsvMetricsSink:
    """Writes the header, then appends and flushes one row per record."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._file: TextIO | None = self.path.open("w", newline="", encoding="utf-8")
        self._writer = csv.writer(self._file, lineterminator="\n")
        self._writer.writerow(METRICS_HEADER)
        self._file.flush()

    def handle(self, record: MetricsRecord) -> None:
        if self._file is None:
            raise ReportError(f"metrics sink for {self.path} is closed")
        self._writer.writerow(record.to_row())
        self._file.flush()

    def close(self) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None


class LoggingSink:
    """Logs one ``key=value`` line per record."""

    def __init__(self, label: str, level: int = logging.INFO):
        self.label = label
        self.level = level

    def handle(self, record: MetricsRecord) -> None:
        parts = [f"{name}={format_cell(value) or '-'}" for name, value in zip(METRICS_HEADER, astuple(record), strict=True)]
        logger.log(self.level, "run=%s %s", self.label, " ".join(parts))


def read_metrics_csv(path: str | Path) -> list[MetricsRecord]:
    """Parse a metrics CSV.

    Raises:
        ReportError: On a missing file, a wrong header or a malformed row.
    """
    path = Path(path)
    try:
        handle = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise ReportError(f"cannot read metrics file {path}: {exc}") from exc
    with handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            return []
        missing = [name for name in METRICS_HEADER if name not in reader.fieldnames]
        if missing:
            raise ReportError(f"{path}: header is missing columns {missing}")
        return [MetricsRecord.from_row(row, lineno) for lineno, row in enumerate(reader, start=2)]
