"""Fwdlearn Run Events

Provides the dispatcher the training loops use to publish one
``MetricsRecord`` per round without knowing where it ends up.

Key design goals
----------------
1. **Decoupled** - the loops call ``dispatcher.process(record)``; CSV files,
   log lines or test probes are registered sinks.
2. **Ordered** - sinks receive records in registration order.
3. **Closable** - ``close()`` flushes and releases every sink that owns a file.

Usage example
-------------
::

    dispatcher = RunEventDispatcher()
    dispatcher.register(CsvMetricsSink(out_dir / "metrics.csv"))
    dispatcher.register(LoggingSink("rl"))

    for round_index in range(1, episodes + 1):
        record = ...
        dispatcher.process(record)

    dispatcher.close()

License: MIT
"""

from __future__ import annotations

from typing import TYPE_CHECKING
from typing import Protocol

if TYPE_CHECKING:
    from fwdlearn.harness.records import MetricsRecord

__all__ = ["MetricsSink", "RunEventDispatcher"]


class MetricsSink(Protocol):
    """Anything that accepts metrics records."""

    def handle(self, record: MetricsRecord) -> None: ...


class RunEventDispatcher:
    """Central dispatcher for per-round metrics records.

    Attributes:
        _sinks (list[MetricsSink]): Ordered list of registered sinks.
        _history (list[MetricsRecord]): Every record processed so far.
    """

    def __init__(self):
        self._sinks: list[MetricsSink] = []
        self._history: list[MetricsRecord] = []

    # ─────────────────────────────────────────────────
    # Registration
    # ─────────────────────────────────────────────────

    def register(self, sink: MetricsSink) -> None:
        """Register a sink; registering the same sink twice is a no-op."""
        if sink not in self._sinks:
            self._sinks.append(sink)

    def unregister(self, sink: MetricsSink) -> None:
        """Remove a sink if present."""
        try:
            self._sinks.remove(sink)
        except ValueError:
            pass

    def clear(self) -> None:
        """Remove all registered sinks."""
        self._sinks.clear()

    # ─────────────────────────────────────────────────
    # Event processing
    # ─────────────────────────────────────────────────

    def process(self, record: MetricsRecord) -> None:
        """Hand *record* to every registered sink, in registration order."""
        self._history.append(record)
        for sink in self._sinks:
            sink.handle(record)

    def close(self) -> None:
        """Close every sink that exposes ``close()``."""
        for sink in self._sinks:
            close = getattr(sink, "close", None)
            if callable(close):
                close()

    @property
    def history(self) -> list[MetricsRecord]:
        """Records processed so far, oldest first."""
        return list(self._history)

    # ─────────────────────────────────────────────────
    # Dunder helpers
    # ─────────────────────────────────────────────────

    def __len__(self) -> int:
        return len(self._sinks)

    def __contains__(self, sink: MetricsSink) -> bool:
        return sink in self._sinks

    def __repr__(self) -> str:
        return f"RunEventDispatcher(sinks={len(self._sinks)}, records={len(self._history)})"
