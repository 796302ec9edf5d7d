"""Tests for the RL versus supervised comparison protocol."""

import json

import pytest

from fwdlearn.core.exceptions import ConfigError
from fwdlearn.harness.compare import LONG_H
from fwdlearn.harness.compare import comparison_verdict
from fwdlearn.harness.compare import median_rows
from fwdlearn.harness.compare import run_comparison
from fwdlearn.harness.evaluation import RolloutRow
from fwdlearn.harness.evaluation import read_rollout_csv


class TestVerdict:
    def test_pass_when_rl_is_not_worse(self):
        assert comparison_verdict(0.4, 0.5)[0] == "PASS"
        assert comparison_verdict(0.5, 0.5)[0] == "PASS"

    def test_warn_within_tolerance(self):
        verdict, reason = comparison_verdict(0.52, 0.5, tolerance=0.1)
        assert verdict == "WARN"
        assert "4.0%" in reason

    def test_fail_beyond_tolerance(self):
        assert comparison_verdict(0.6, 0.5, tolerance=0.1)[0] == "FAIL"
        assert comparison_verdict(0.1, 0.0)[0] == "FAIL"

    @pytest.mark.parametrize("rl, sl", [(None, 0.5), (0.5, None), (None, None)])
    def test_fail_when_long_horizon_is_absent(self, rl, sl):
        verdict, reason = comparison_verdict(rl, sl)
        assert verdict == "FAIL"
        assert f"h={LONG_H} absent" in reason


class TestMedianRows:
    def test_medians_per_h(self):
        tables = [
            [RolloutRow(10, 1.0, 0.1, -1.0, 2), RolloutRow(50, 2.0, 0.2, -2.0, 2)],
            [RolloutRow(10, 3.0, 0.3, -3.0, 2), RolloutRow(50, None, None, None, 0)],
            [RolloutRow(10, 2.0, 0.2, -2.0, 1), RolloutRow(50, 4.0, 0.4, -4.0, 1)],
        ]
        merged = median_rows(tables)
        assert merged[0] == RolloutRow(10, 2.0, 0.2, -2.0, 5)
        assert merged[1] == RolloutRow(50, 3.0, pytest.approx(0.3), -3.0, 3)

    def test_absent_everywhere_stays_absent(self):
        merged = median_rows([[RolloutRow(500, None, None, None, 0)], [RolloutRow(500, None, None, None, 0)]])
        assert merged == [RolloutRow(500, None, None, None, 0)]
        assert merged[0].absent

    def test_sorted_by_h(self):
        merged = median_rows([[RolloutRow(500, 1.0, 0.0, 0.0, 1), RolloutRow(10, 1.0, 0.0, 0.0, 1)]])
        assert [row.h for row in merged] == [10, 500]


class TestRunComparison:
    def test_requires_a_seed(self, tiny_manager, tmp_path):
        with pytest.raises(ConfigError, match="at least one seed"):
            run_comparison(tiny_manager.build(), [], tmp_path / "cmp")

    def test_short_episodes_fail_at_long_horizon(self, tiny_manager, tmp_path):
        out = tmp_path / "cmp"
        result = run_comparison(tiny_manager.build(), [0], out)
        assert result.verdict == "FAIL"
        assert "absent" in result.reason
        assert result.medians["rl"][LONG_H] is None
        assert result.medians["rl"][50] is not None

        for name in ("seed_0/rl/model.fwdc", "seed_0/sl/model.fwdc", "seed_0/rl_rollouts.csv", "rollouts_sl.csv"):
            assert (out / name).is_file()
        assert (out / "report" / "rollout_sweep.svg").is_file()
        assert json.loads((out / "comparison.json").read_text())["verdict"] == "FAIL"
        assert [row.h for row in read_rollout_csv(out / "rollouts_rl.csv")] == [10, 50, 500]

    @pytest.mark.slow
    def test_long_episodes_reach_a_verdict(self, tiny_manager, tmp_path):
        tiny_manager.update_config(
            {"episodes": 20, "data": {"episodes": 8, "max_len": 620, "filter_min_len": 510, "holdout_fraction": 0.25}}
        )
        result = run_comparison(tiny_manager.build(), [0, 1], tmp_path / "cmp")
        assert result.verdict in {"PASS", "WARN", "FAIL"}
        assert result.medians["rl"][LONG_H] is not None
        assert result.medians["sl"][LONG_H] is not None
        assert result.seeds == [0, 1]
