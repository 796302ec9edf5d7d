"""Fwdlearn Harness

Training loops, rollout evaluation, metrics records, reports and the RL vs
SL comparison protocol. Trajectory renders live in
:mod:`fwdlearn.harness.render`, imported on demand since it pulls in pygame.
"""

from fwdlearn.harness.compare import ComparisonResult
from fwdlearn.harness.compare import run_comparison
from fwdlearn.harness.evaluation import RolloutRow
from fwdlearn.harness.evaluation import RolloutTrace
from fwdlearn.harness.evaluation import eval_rollouts
from fwdlearn.harness.evaluation import evaluate_policy
from fwdlearn.harness.evaluation import rollout_episode
from fwdlearn.harness.records import CsvMetricsSink
from fwdlearn.harness.records import LoggingSink
from fwdlearn.harness.records import MetricsRecord
from fwdlearn.harness.records import read_metrics_csv
from fwdlearn.harness.report import render_report
from fwdlearn.harness.training import collect
from fwdlearn.harness.training import prepare_data
from fwdlearn.harness.training import train_rl
from fwdlearn.harness.training import train_sl

__all__ = (
    "ComparisonResult",
    "CsvMetricsSink",
    "LoggingSink",
    "MetricsRecord",
    "RolloutRow",
    "RolloutTrace",
    "collect",
    "eval_rollouts",
    "evaluate_policy",
    "prepare_data",
    "read_metrics_csv",
    "render_report",
    "rollout_episode",
    "run_comparison",
    "train_rl",
    "train_sl",
)
