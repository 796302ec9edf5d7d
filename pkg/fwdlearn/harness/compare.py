"""Fwdlearn Comparison Protocol

Trains the RL and the supervised forward model for several seeds at matched
round counts, sweeps rollout sizes on each seed's hold-out pool and compares
median rollout RMSE.

Verdict at the long horizon ``h=500``:
    - PASS  median RL rmse <= median SL rmse
    - WARN  RL is worse by less than ``tolerance`` (relative)
    - FAIL  RL is worse by more, or ``h=500`` could not be evaluated

At ``h=50`` the supervised model may lead; that row is reported, not judged.

Layout under ``out_dir``::

    seed_0/rl/...             train_rl output
    seed_0/sl/...             train_sl output
    seed_0/rl_rollouts.csv
    seed_0/sl_rollouts.csv
    rollouts_rl.csv           per-h medians across seeds
    rollouts_sl.csv
    report/                   panels, sweep chart, summary.txt
    comparison.json

License: MIT
"""

from __future__ import annotations

import dataclasses
import json
import logging
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from fwdlearn.agents.persist import load_agent
from fwdlearn.config.manager import RunConfig
from fwdlearn.core.exceptions import ConfigError
from fwdlearn.harness.evaluation import RolloutRow
from fwdlearn.harness.evaluation import eval_rollouts
from fwdlearn.harness.evaluation import write_rollout_csv
from fwdlearn.harness.report import render_report
from fwdlearn.harness.training import prepare_data
from fwdlearn.harness.training import train_rl
from fwdlearn.harness.training import train_sl

__all__ = ["SHORT_H", "LONG_H", "ComparisonResult", "median_rows", "comparison_verdict", "run_comparison"]

logger = logging.getLogger(__name__)

SHORT_H = 50
LONG_H = 500
LABELS = ("rl", "sl")


@dataclass
class ComparisonResult:
    verdict: str
    reason: str
    medians: dict[str, dict[int, float | None]]
    seeds: list[int]
    out_dir: Path

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "reason": self.reason,
            "seeds": self.seeds,
            "median_rmse": {label: {str(h): v for h, v in rows.items()} for label, rows in self.medians.items()},
        }


def median_rows(tables: Sequence[Sequence[RolloutRow]]) -> list[RolloutRow]:
    """Per-``h`` medians over several sweeps; an ``h`` absent in every sweep stays absent."""
    by_h: dict[int, list[RolloutRow]] = {}
    for rows in tables:
        for row in rows:
            by_h.setdefault(row.h, []).append(row)
    merged = []
    for h in sorted(by_h):
        present = [row for row in by_h[h] if not row.absent]
        if not present:
            merged.append(RolloutRow(h, None, None, None, 0))
            continue
        merged.append(
            RolloutRow(
                h,
                float(np.median([r.mean_rmse for r in present])),
                float(np.median([r.std_rmse for r in present])),
                float(np.median([r.mean_reward for r in present])),
                int(sum(r.n_episodes for r in present)),
            )
        )
    return merged


def comparison_verdict(rl_long: float | None, sl_long: float | None, tolerance: float = 0.1) -> tuple[str, str]:
    if rl_long is None or sl_long is None:
        return "FAIL", f"h={LONG_H} absent: no hold-out episode is long enough"
    if rl_long <= sl_long:
        return "PASS", f"rl rmse {rl_long:.6g} <= sl rmse {sl_long:.6g} at h={LONG_H}"
    excess = (rl_long - sl_long) / sl_long if sl_long > 0 else float("inf")
    if excess < tolerance:
        return "WARN", f"rl rmse exceeds sl rmse by {excess:.1%} at h={LONG_H}"
    return "FAIL", f"rl rmse exceeds sl rmse by {excess:.1%} at h={LONG_H}"


def run_comparison(config: RunConfig, seeds: Sequence[int], out_dir: str | Path, tolerance: float = 0.1) -> ComparisonResult:
    """Train, sweep and compare RL against SL for every seed in *seeds*.

    Raises:
        ConfigError: If *seeds* is empty.
    """
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ConfigError("comparison needs at least one seed")
    out_dir = Path(out_dir)
    lengths = tuple(sorted(set(config.eval.lengths) | {SHORT_H, LONG_H}))

    metrics: dict[str, list[Path]] = {label: [] for label in LABELS}
    sweeps: dict[str, list[list[RolloutRow]]] = {label: [] for label in LABELS}
    for seed in seeds:
        seed_dir = out_dir / f"seed_{seed}"
        data = None
        for label, train in (("rl", train_rl), ("sl", train_sl)):
            run_config = dataclasses.replace(config, seed=seed, out_dir=seed_dir / label)
            logger.info("compare seed=%d run=%s", seed, label)
            result = train(run_config)
            metrics[label].append(result.metrics_path)
            data = data or prepare_data(run_config)
            rows, _ = eval_rollouts(
                load_agent(result.model_path), data.holdout, config.env, data.bounds, lengths, config.eval.n_episodes, seed
            )
            write_rollout_csv(rows, seed_dir / f"{label}_rollouts.csv")
            sweeps[label].append(rows)

    medians: dict[str, dict[int, float | None]] = {}
    tables: dict[str, Path] = {}
    for label in LABELS:
        merged = median_rows(sweeps[label])
        tables[label] = write_rollout_csv(merged, out_dir / f"rollouts_{label}.csv")
        medians[label] = {row.h: row.mean_rmse for row in merged if row.h in (SHORT_H, LONG_H)}
    render_report(metrics, out_dir / "report", rollouts=tables)

    verdict, reason = comparison_verdict(medians["rl"].get(LONG_H), medians["sl"].get(LONG_H), tolerance)
    result = ComparisonResult(verdict, reason, medians, seeds, out_dir)
    (out_dir / "comparison.json").write_text(json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("compare verdict=%s %s", verdict, reason)
    return result
