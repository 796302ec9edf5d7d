"""Tests for the GIF rollout renders (off-screen, SDL dummy driver)."""

import numpy as np
import pygame
import pytest
from PIL import Image

from fwdlearn.__main__ import main
from fwdlearn.core.exceptions import ShapeError
from fwdlearn.harness.evaluation import RolloutTrace
from fwdlearn.harness.render import RENDER_COLORS
from fwdlearn.harness.render import draw_frame
from fwdlearn.harness.render import render_frames
from fwdlearn.harness.render import render_rollout_gif
from fwdlearn.systems.base import SystemSpec


def swinging_trace(steps=12, h=4):
    theta = np.linspace(-1.0, 1.0, steps)
    true = np.column_stack([theta, np.full(steps, 0.5)])
    return RolloutTrace(0, h, true, true * 0.9, list(range(h, steps + 1, h)), [])


class TestDrawFrame:
    @pytest.mark.parametrize("flash, key", [(False, "background"), (True, "flash")])
    def test_background(self, pendulum, flash, key):
        surface = draw_frame(pygame.Surface((64, 64)), pendulum, np.zeros(2), np.zeros(2), flash=flash)
        assert tuple(surface.get_at((0, 0)))[:3] == RENDER_COLORS[key]

    def test_scenes(self, msd):
        other = SystemSpec("cart", 2, 1, 0.1, (-1.0,), (1.0,))
        for system in (msd, other):
            surface = draw_frame(pygame.Surface((64, 64)), system, np.array([0.5, 0.0]), np.array([-0.5, 0.0]))
            colors = {tuple(surface.get_at((x, y)))[:3] for x in range(64) for y in range(64)}
            assert RENDER_COLORS["true"] in colors
            assert RENDER_COLORS["predicted"] in colors


class TestRenderFrames:
    def test_one_frame_per_step(self, pendulum):
        frames = render_frames(swinging_trace(), pendulum, size=(48, 48))
        assert len(frames) == 12
        assert frames[0].size == (48, 48)
        assert frames[3].getpixel((0, 0)) == RENDER_COLORS["flash"]
        assert frames[0].getpixel((0, 0)) == RENDER_COLORS["background"]

    def test_stride_keeps_boundaries(self, pendulum):
        frames = render_frames(swinging_trace(steps=12, h=5), pendulum, size=(32, 32), stride=4)
        # steps 1, 5, 9 by stride plus boundary 10
        assert len(frames) == 4

    def test_rejects_mismatched_trace(self, pendulum):
        trace = RolloutTrace(0, 4, np.zeros((5, 3)), np.zeros((5, 3)), [], [])
        with pytest.raises(ShapeError):
            render_frames(trace, pendulum)


class TestRenderGif:
    def test_writes_animated_gif(self, tmp_path, pendulum):
        path = render_rollout_gif(swinging_trace(), pendulum, tmp_path / "out" / "rollout.gif", size=(64, 64))
        with Image.open(path) as image:
            assert image.format == "GIF"
            assert image.n_frames == 12
            assert image.info["duration"] == 50

    def test_subsamples_long_traces(self, tmp_path, pendulum):
        path = render_rollout_gif(swinging_trace(steps=40, h=40), pendulum, tmp_path / "rollout.gif", size=(32, 32), max_frames=10)
        with Image.open(path) as image:
            # every fourth step plus the final boundary
            assert image.n_frames == 11
            assert image.info["duration"] == 200

    def test_empty_trace(self, tmp_path, pendulum):
        trace = RolloutTrace(0, 4, np.zeros((0, 2)), np.zeros((0, 2)), [], [])
        with pytest.raises(ShapeError, match="empty"):
            render_rollout_gif(trace, pendulum, tmp_path / "x.gif")

    def test_cli(self, tiny_manager, tmp_path):
        config = tiny_manager.save_config(tmp_path / "tiny.json")
        assert main(["--log-level", "WARNING", "train-sl", "--config", str(config), "--out", str(tmp_path / "sl")]) == 0
        out = tmp_path / "rollout.gif"
        argv = ["render", "--config", str(config), "--checkpoint", str(tmp_path / "sl" / "model.fwdc"), "--out", str(out)]
        assert main(["--log-level", "WARNING", *argv, "--h", "20"]) == 0
        with Image.open(out) as image:
            assert image.n_frames > 1
        assert main(["--log-level", "WARNING", *argv, "--episode", "9"]) == 2
