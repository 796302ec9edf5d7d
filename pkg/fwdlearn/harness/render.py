"""Fwdlearn Trajectory Renders

Animated GIF of a rollout trace: the recorded system and the model's
prediction drawn side by side in one scene, with the background flashed on
every re-grounding step.

Scenes:
    - pendulum  two rods from a shared pivot (true and predicted angle)
    - msd       two blocks on a rail tied to a wall by a spring
    - other     first position entry as a marker on a horizontal axis

Frames are drawn on off-screen pygame surfaces, so no display is opened;
Pillow assembles them into the GIF.

Example:
    trace = rollout_episode(agent, dataset, env_config, bounds, episode_index=0, h=50)
    render_rollout_gif(trace, dataset.system, "rollout.gif")

License: MIT
"""

from __future__ import annotations

import logging
import math
from pathlib import Path

import numpy as np
import pygame
from PIL import Image

from fwdlearn.core.exceptions import ShapeError
from fwdlearn.harness.evaluation import RolloutTrace
from fwdlearn.systems.base import SystemSpec

__all__ = ["RENDER_COLORS", "draw_frame", "render_frames", "render_rollout_gif"]

logger = logging.getLogger(__name__)

RENDER_COLORS: dict[str, tuple[int, int, int]] = {
    "background": (250, 250, 250),
    "flash": (255, 236, 179),
    "rail": (120, 120, 120),
    "true": (31, 119, 180),
    "predicted": (255, 127, 14),
}


def _draw_pendulum(surface: pygame.Surface, true_pos: float, pred_pos: float, extent: float) -> None:
    w, h = surface.get_size()
    pivot = (w // 2, h // 2)
    length = 0.4 * min(w, h)
    pygame.draw.circle(surface, RENDER_COLORS["rail"], pivot, 4)
    for theta, key, width in ((true_pos, "true", 5), (pred_pos, "predicted", 3)):
        # theta = 0 hangs straight down
        tip = (pivot[0] + length * math.sin(theta), pivot[1] + length * math.cos(theta))
        pygame.draw.line(surface, RENDER_COLORS[key], pivot, tip, width)
        pygame.draw.circle(surface, RENDER_COLORS[key], (int(tip[0]), int(tip[1])), 8)


def _draw_msd(surface: pygame.Surface, true_pos: float, pred_pos: float, extent: float) -> None:
    w, h = surface.get_size()
    wall_x, centre, half = 12, w // 2, 0.4 * w
    pygame.draw.line(surface, RENDER_COLORS["rail"], (wall_x, 0), (wall_x, h), 4)
    for pos, key, y in ((true_pos, "true", h // 3), (pred_pos, "predicted", 2 * h // 3)):
        x = centre + half * pos / extent
        pygame.draw.line(surface, RENDER_COLORS["rail"], (wall_x, y), (x, y), 1)
        block = pygame.Rect(0, 0, 28, 28)
        block.center = (int(x), y)
        pygame.draw.rect(surface, RENDER_COLORS[key], block, border_radius=4)


def _draw_axis(surface: pygame.Surface, true_pos: float, pred_pos: float, extent: float) -> None:
    w, h = surface.get_size()
    centre, half = w // 2, 0.45 * w
    pygame.draw.line(surface, RENDER_COLORS["rail"], (0, h // 2), (w, h // 2), 1)
    for pos, key, r in ((true_pos, "true", 9), (pred_pos, "predicted", 6)):
        pygame.draw.circle(surface, RENDER_COLORS[key], (int(centre + half * pos / extent), h // 2), r)


_SCENES = {"pendulum": _draw_pendulum, "msd": _draw_msd}


def draw_frame(
    surface: pygame.Surface,
    system: SystemSpec,
    true_state: np.ndarray,
    predicted_state: np.ndarray,
    extent: float = 1.0,
    flash: bool = False,
) -> pygame.Surface:
    """Draw one scene onto *surface* and return it."""
    surface.fill(RENDER_COLORS["flash" if flash else "background"])
    scene = _SCENES.get(system.name, _draw_axis)
    scene(surface, float(true_state[0]), float(predicted_state[0]), max(extent, 1e-9))
    return surface


def render_frames(
    trace: RolloutTrace,
    system: SystemSpec,
    size: tuple[int, int] = (320, 320),
    stride: int = 1,
) -> list[Image.Image]:
    """Draw every *stride*-th step of *trace*; boundary steps are always kept."""
    if trace.true.ndim != 2 or trace.true.shape != trace.predicted.shape or trace.true.shape[1] != system.state_dim:
        raise ShapeError(f"trace shapes {trace.true.shape} / {trace.predicted.shape} do not fit system {system.name!r}")
    stride = max(1, int(stride))
    boundaries = set(trace.boundaries)
    extent = float(np.max(np.abs(np.concatenate([trace.true[:, 0], trace.predicted[:, 0]])), initial=1e-9))
    surface = pygame.Surface(size)
    frames = []
    for t in range(len(trace.true)):
        step = t + 1
        if t % stride and step not in boundaries:
            continue
        draw_frame(surface, system, trace.true[t], trace.predicted[t], extent, flash=step in boundaries)
        frames.append(Image.frombytes("RGB", size, pygame.image.tobytes(surface, "RGB")))
    return frames


def render_rollout_gif(
    trace: RolloutTrace,
    system: SystemSpec,
    path: str | Path,
    size: tuple[int, int] = (320, 320),
    max_frames: int = 400,
) -> Path:
    """Write *trace* as an animated GIF at the system's real-time rate.

    Long traces are subsampled to roughly *max_frames* frames.

    Raises:
        ShapeError: If the trace is empty or does not match *system*.
    """
    if len(trace.true) == 0:
        raise ShapeError("cannot render an empty trace")
    stride = max(1, math.ceil(len(trace.true) / max(1, max_frames)))
    frames = render_frames(trace, system, size, stride)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    duration = max(20, int(round(1000.0 * system.dt * stride)))
    frames[0].save(path, format="GIF", save_all=True, append_images=frames[1:], duration=duration, loop=0)
    logger.info("render system=%s frames=%d stride=%d out=%s", system.name, len(frames), stride, path)
    return path
