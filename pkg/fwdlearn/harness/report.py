"""Fwdlearn Reports

SVG charts and a plain-text summary built from metrics CSVs, rollout-size
tables and rollout traces.

Outputs written by :func:`render_report`:
    - ``panel_<column>.svg``   one chart per training metric, one curve per label;
      several CSVs under one label are averaged with a shaded +/-1 std band
    - ``rollout_sweep.svg``    RMSE against rollout size ``h`` per label
    - ``overlay_<name>.svg``   true vs predicted per-dimension traces with
      rollout boundaries marked
    - ``summary.txt``

Charts are written with fixed SVG ids and no date stamp, so identical inputs
give identical files.

Example:
    render_report({"rl": ["runs/rl/metrics.csv"], "sl": ["runs/sl/metrics.csv"]}, "report/")

License: MIT
"""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping
from collections.abc import Sequence
from pathlib import Path

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from fwdlearn.harness.evaluation import RolloutRow
from fwdlearn.harness.evaluation import RolloutTrace
from fwdlearn.harness.evaluation import read_rollout_csv
from fwdlearn.harness.evaluation import read_trace_csv
from fwdlearn.harness.records import MetricsRecord
from fwdlearn.harness.records import read_metrics_csv

__all__ = [
    "PANELS",
    "aggregate_runs",
    "plot_panel",
    "plot_rollout_sweep",
    "plot_trace_overlay",
    "summarize",
    "render_report",
]

logger = logging.getLogger(__name__)

PANELS: tuple[tuple[str, str], ...] = (
    ("critic_loss", "Critic loss"),
    ("supervised_mse", "Supervised MSE"),
    ("rmse_rollout", "RMSE rollout metric"),
    ("mean_rollout_reward", "Mean rollout reward"),
)

_SVG_PARAMS = {"svg.hashsalt": "fwdlearn", "svg.fonttype": "path"}
_SVG_METADATA = {"Date": None, "Creator": None}


def _save(fig: Figure, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context(_SVG_PARAMS):
        fig.savefig(path, format="svg", metadata=_SVG_METADATA)
    logger.debug("wrote figure=%s", path)
    return path


def aggregate_runs(runs: Sequence[Sequence[MetricsRecord]], column: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mean and std of *column* across runs, per round.

    Rounds where no run has a value are dropped; each round averages only
    the runs that report it.

    Returns:
        ``(rounds, mean, std)`` arrays of equal length.
    """
    by_round: dict[int, list[float]] = {}
    for records in runs:
        for record in records:
            value = getattr(record, column)
            if value is not None and math.isfinite(value):
                by_round.setdefault(record.round, []).append(value)
    rounds = np.array(sorted(by_round), dtype=np.int64)
    mean = np.array([np.mean(by_round[r]) for r in rounds], dtype=np.float64)
    std = np.array([np.std(by_round[r]) for r in rounds], dtype=np.float64)
    return rounds, mean, std


def plot_panel(runs_by_label: Mapping[str, Sequence[Sequence[MetricsRecord]]], column: str, title: str, path: str | Path) -> Path:
    """One metric against rounds; labels without data leave the axes empty."""
    fig = Figure(figsize=(6.4, 4.0))
    ax = fig.add_subplot()
    for label, runs in runs_by_label.items():
        rounds, mean, std = aggregate_runs(runs, column)
        if rounds.size == 0:
            continue
        (line,) = ax.plot(rounds, mean, label=label, marker="." if rounds.size < 3 else None)
        if len(runs) > 1:
            ax.fill_between(rounds, mean - std, mean + std, color=line.get_color(), alpha=0.25, linewidth=0)
    ax.set_title(title)
    ax.set_xlabel("round")
    ax.set_ylabel(column)
    ax.grid(True, linestyle="--", alpha=0.5)
    if ax.get_legend_handles_labels()[0]:
        ax.legend()
    fig.tight_layout()
    return _save(fig, Path(path))


def plot_rollout_sweep(tables: Mapping[str, Sequence[RolloutRow]], path: str | Path) -> Path:
    """Mean rollout RMSE with +/-1 std error bars against ``h``; absent rows are skipped."""
    fig = Figure(figsize=(6.4, 4.0))
    ax = fig.add_subplot()
    for label, rows in tables.items():
        present = [row for row in rows if not row.absent]
        if not present:
            continue
        ax.errorbar(
            [row.h for row in present],
            [row.mean_rmse for row in present],
            yerr=[row.std_rmse or 0.0 for row in present],
            label=label,
            marker="o",
            capsize=3,
        )
    ax.set_title("Rollout RMSE by rollout size")
    ax.set_xlabel("h")
    ax.set_ylabel("rmse_rollout")
    ax.grid(True, linestyle="--", alpha=0.5)
    if ax.get_legend_handles_labels()[0]:
        ax.legend()
    fig.tight_layout()
    return _save(fig, Path(path))


def plot_trace_overlay(trace: RolloutTrace, path: str | Path, dim_names: Sequence[str] | None = None) -> Path:
    """True (solid) and predicted (dashed) traces, one row per state dimension."""
    dims = max(1, trace.true.shape[1] if trace.true.ndim == 2 else 1)
    names = list(dim_names or [f"s[{d}]" for d in range(dims)])
    fig = Figure(figsize=(8.0, 2.2 * dims))
    axes = fig.subplots(dims, 1, sharex=True, squeeze=False)[:, 0]
    steps = np.arange(1, len(trace.true) + 1)
    for d, ax in enumerate(axes):
        if len(steps):
            ax.plot(steps, trace.true[:, d], color="tab:blue", label="true")
            ax.plot(steps, trace.predicted[:, d], color="tab:orange", linestyle="--", label="predicted")
        for boundary in trace.boundaries:
            ax.axvline(boundary, color="grey", linewidth=0.6, alpha=0.6)
        ax.set_ylabel(names[d] if d < len(names) else f"s[{d}]")
        ax.grid(True, linestyle="--", alpha=0.4)
    axes[0].set_title(f"Rollout trace (h={trace.h})" if trace.h else "Rollout trace")
    axes[-1].set_xlabel("step")
    if axes[0].get_legend_handles_labels()[0]:
        axes[0].legend(loc="upper right")
    fig.tight_layout()
    return _save(fig, Path(path))


def _fmt(value: float | None) -> str:
    return "-" if value is None or not math.isfinite(value) else f"{value:.6g}"


def summarize(
    runs_by_label: Mapping[str, Sequence[Sequence[MetricsRecord]]],
    tables: Mapping[str, Sequence[RolloutRow]] | None = None,
) -> str:
    """Plain-text summary: last reported value of every panel metric and the sweep rows."""
    lines = ["# fwdlearn report", ""]
    for label, runs in runs_by_label.items():
        total_rounds = max((len(r) for r in runs), default=0)
        lines.append(f"[{label}] runs={len(runs)} rounds={total_rounds}")
        for column, _ in PANELS:
            rounds, mean, std = aggregate_runs(runs, column)
            if rounds.size == 0:
                lines.append(f"  {column}: -")
            else:
                lines.append(f"  {column}: round={int(rounds[-1])} mean={_fmt(mean[-1])} std={_fmt(std[-1])}")
        lines.append("")
    for label, rows in (tables or {}).items():
        lines.append(f"[{label} rollout sweep]")
        for row in rows:
            if row.absent:
                lines.append(f"  h={row.h}: absent")
            else:
                lines.append(
                    f"  h={row.h}: rmse={_fmt(row.mean_rmse)} std={_fmt(row.std_rmse)} "
                    f"reward={_fmt(row.mean_reward)} episodes={row.n_episodes}"
                )
        lines.append("")
    return "\n".join(lines).rstrip() + "\n"


def render_report(
    metrics: Mapping[str, Sequence[str | Path]],
    out_dir: str | Path,
    rollouts: Mapping[str, str | Path] | None = None,
    traces: Sequence[str | Path] | None = None,
) -> list[Path]:
    """Write every panel, the sweep and overlay charts, and ``summary.txt``.

    Args:
        metrics: Metrics CSV paths by curve label.
        out_dir: Target directory, created when missing.
        rollouts: Rollout-size tables by label.
        traces: Trace CSVs, one overlay chart each.

    Returns:
        Paths written, in creation order.

    Raises:
        ReportError: If any input is missing or malformed.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    runs_by_label = {label: [read_metrics_csv(p) for p in paths] for label, paths in metrics.items()}
    tables = {label: read_rollout_csv(p) for label, p in (rollouts or {}).items()}
    loaded_traces = [(Path(p), read_trace_csv(p)) for p in traces or ()]

    written = [plot_panel(runs_by_label, column, title, out_dir / f"panel_{column}.svg") for column, title in PANELS]
    if tables:
        written.append(plot_rollout_sweep(tables, out_dir / "rollout_sweep.svg"))
    for source, trace in loaded_traces:
        written.append(plot_trace_overlay(trace, out_dir / f"overlay_{source.stem}.svg"))

    summary = out_dir / "summary.txt"
    summary.write_text(summarize(runs_by_label, tables), encoding="utf-8")
    written.append(summary)
    logger.info("report out=%s files=%d", out_dir, len(written))
    return written
