"""Fwdlearn Configuration Manager

Layered run configuration: package defaults, then a built-in preset or a
user file, then individual ``key=value`` overrides. The merged dictionary is
turned into a typed :class:`RunConfig`.

User files are JSON or key-value text::

    # pendulum smoke run
    system = pendulum
    episodes = 300
    env.window_w = 10
    env.rollout_h = 50
    model.hidden = 64, 64
    eval.lengths = 50, 100, 200

Dotted keys address sections, comma-separated values are lists, and
``true`` / ``false`` / ``none`` are recognised. Every key must exist in the
defaults; anything else is a :class:`ConfigError`.

License: MIT
"""

from __future__ import annotations

import copy
import json
import logging
from dataclasses import dataclass
from dataclasses import field
from dataclasses import fields
from pathlib import Path
from typing import Any

from fwdlearn.agents.sac import SacConfig
from fwdlearn.agents.supervised import SL_TARGET_SPACE
from fwdlearn.agents.supervised import SlConfig
from fwdlearn.core.exceptions import ConfigError
from fwdlearn.env.forward import FwdEnvConfig

__all__ = [
    "DEFAULT_EVAL_LENGTHS",
    "DataConfig",
    "EvalConfig",
    "RunConfig",
    "ConfigManager",
    "parse_value",
    "parse_key_value_text",
]

logger = logging.getLogger(__name__)

DEFAULT_EVAL_LENGTHS = (50, 100, 200, 300, 400, 500, 600, 700, 800, 900, 1000)
PRESET_DIR = Path(__file__).resolve().parent.parent / "assets" / "configs"

# Package defaults; presets and user files are merged on top of these.
_DEFAULT_CONFIG: dict = {
    "system": "pendulum",
    "dataset": None,
    "episodes": 300,
    "eval_every": 10,
    "checkpoint_every": 100,
    "seed": 0,
    "out_dir": "runs/default",
    "collect_max_steps": 10000,
    "deterministic": True,
    "log_level": "INFO",
    "data": {
        "episodes": 48,
        "max_len": 1100,
        "min_len": None,
        "behaviors": ["random", "sinusoid", "bang_bang"],
        "filter_min_len": 100,
        "holdout_fraction": 0.1,
        "workers": 1,
    },
    "env": {
        "window_w": 10,
        "rollout_h": 50,
        "start_offset_max": 30,
        "reward_mode": "pseudo_sparse",
        "similarity_choice": "simplified",
        "delta_scale": 1.5,
    },
    "model": {
        "hidden": [64, 64],
    },
    "sac": {
        "batch_size": 1024,
        "n_quantiles": 64,
        "gamma": 0.99,
        "tau": 0.005,
        "lr_actor": 3e-4,
        "lr_critic": 3e-4,
        "lr_alpha": 3e-4,
        "target_entropy": None,
        "updates_per_episode": 10,
        "buffer_capacity": 1_000_000,
        "kappa": 1.0,
        "init_alpha": 1.0,
    },
    "sl": {
        "batch_size": 1024,
        "minibatches_per_round": 100,
        "lr": 3e-4,
    },
    "eval": {
        "lengths": list(DEFAULT_EVAL_LENGTHS),
        "n_episodes": 3,
        "overlay_episodes": 1,
    },
}


# region Typed configuration


@dataclass(frozen=True)
class DataConfig:
    """Dataset generation used when no dataset file is given."""

    episodes: int = 48
    max_len: int = 1100
    min_len: int | None = None
    behaviors: tuple[str, ...] = ("random", "sinusoid", "bang_bang")
    filter_min_len: int = 100
    holdout_fraction: float = 0.1
    workers: int = 1


@dataclass(frozen=True)
class EvalConfig:
    lengths: tuple[int, ...] = DEFAULT_EVAL_LENGTHS
    n_episodes: int = 3
    overlay_episodes: int = 1


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings of one training or evaluation run."""

    system: str = "pendulum"
    dataset: Path | None = None
    episodes: int = 300
    eval_every: int = 10
    checkpoint_every: int = 100
    seed: int = 0
    out_dir: Path = Path("runs/default")
    collect_max_steps: int = 10000
    deterministic: bool = True
    log_level: str = "INFO"
    data: DataConfig = field(default_factory=DataConfig)
    env: FwdEnvConfig = field(default_factory=FwdEnvConfig)
    hidden: tuple[int, ...] = (64, 64)
    sac: SacConfig = field(default_factory=SacConfig)
    sl: SlConfig = field(default_factory=SlConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)

    def __post_init__(self):
        for name in ("episodes", "eval_every", "checkpoint_every", "collect_max_steps"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.sl.window_w != self.env.window_w:
            raise ConfigError(f"sl.window_w ({self.sl.window_w}) must equal env.window_w ({self.env.window_w})")

    def to_dict(self) -> dict[str, Any]:
        """Nested plain dictionary in the layout of the configuration files."""

        def section(obj, skip=()) -> dict:
            out = {}
            for f in fields(obj):
                if f.name in skip:
                    continue
                value = getattr(obj, f.name)
                out[f.name] = list(value) if isinstance(value, tuple) else value
            return out

        return {
            "system": self.system,
            "dataset": None if self.dataset is None else str(self.dataset),
            "episodes": self.episodes,
            "eval_every": self.eval_every,
            "checkpoint_every": self.checkpoint_every,
            "seed": self.seed,
            "out_dir": str(self.out_dir),
            "collect_max_steps": self.collect_max_steps,
            "deterministic": self.deterministic,
            "log_level": self.log_level,
            "data": section(self.data),
            "env": section(self.env, skip=("dt",)),
            "model": {"hidden": list(self.hidden)},
            "sac": section(self.sac),
            "sl": section(self.sl, skip=("window_w",)),
            "eval": section(self.eval),
        }


# endregion

# region Parsing


def parse_value(text: str) -> Any:
    """Parse one key-value text value (scalars, ``a, b, c`` lists, booleans, ``none``)."""
    text = text.strip()
    if "," in text:
        return [parse_value(part) for part in text.split(",") if part.strip()]
    lowered = text.lower()
    if lowered in ("none", "null", ""):
        return None
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    return text


def _nest(flat: dict[str, Any]) -> dict:
    nested: dict = {}
    for key, value in flat.items():
        node = nested
        *parents, leaf = key.split(".")
        for part in parents:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"key {key!r} conflicts with a scalar value")
        node[leaf] = value
    return nested


def parse_key_value_text(text: str, source: str = "<text>") -> dict:
    """Parse key-value text into a nested dictionary."""
    flat: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        flat[key.strip()] = parse_value(value)
    return _nest(flat)


# endregion


class ConfigManager:
    """Loads, layers, validates and saves run configurations.

    Args:
        preset: Built-in preset name or configuration file applied on top of
            the defaults.

    Example:
        manager = ConfigManager("pendulum")
        manager.set_value("episodes", "50")
        config = manager.build()
    """

    def __init__(self, preset: str | Path | None = None):
        self.config: dict = copy.deepcopy(_DEFAULT_CONFIG)
        self._currently_loaded: str | None = None
        if preset is not None:
            self.load_config(preset)

    # ─────────────────────────────────────────────────
    # Defaults and presets
    # ─────────────────────────────────────────────────

    @staticmethod
    def built_in_presets() -> list[str]:
        return sorted(path.stem for path in PRESET_DIR.glob("*.json"))

    @staticmethod
    def get_default_config() -> dict:
        """Return a deep copy of the package defaults."""
        return copy.deepcopy(_DEFAULT_CONFIG)

    @staticmethod
    def _deep_merge(base: dict, updates: dict, path: str = "") -> dict:
        """Recursively merge ``updates`` into ``base``; keys must already exist in ``base``."""
        merged = copy.deepcopy(base)
        for key, value in updates.items():
            dotted = f"{path}{key}"
            if key not in merged:
                raise ConfigError(f"unknown configuration key {dotted!r}")
            if isinstance(merged[key], dict):
                if not isinstance(value, dict):
                    raise ConfigError(f"{dotted!r} is a section; set its keys as '{dotted}.<key>'")
                merged[key] = ConfigManager._deep_merge(merged[key], value, f"{dotted}.")
            elif isinstance(value, dict):
                raise ConfigError(f"{dotted!r} is not a section")
            else:
                merged[key] = value
        return merged

    def reset_config(self) -> None:
        self.config = copy.deepcopy(_DEFAULT_CONFIG)
        self._currently_loaded = None

    def update_config(self, updates: dict) -> None:
        """Deep-merge a partial configuration into the active one.

        Raises:
            ConfigError: If *updates* is not a dictionary or names an unknown key.
        """
        if not isinstance(updates, dict):
            raise ConfigError("configuration updates must be a dictionary")
        self.config = self._deep_merge(self.config, updates)

    def set_value(self, key: str, value: Any) -> None:
        """Set one dotted key; string values are parsed like key-value text."""
        if isinstance(value, str):
            value = parse_value(value)
        self.update_config(_nest({key: value}))

    def load_config(self, name_or_path: str | Path) -> None:
        """Merge a built-in preset or a JSON / key-value file on top of the defaults.

        Raises:
            ConfigError: If the file is missing, unparsable or has unknown keys.
        """
        name = str(name_or_path)
        path = PRESET_DIR / f"{name}.json" if name in self.built_in_presets() else Path(name)
        try:
            text = path.read_text(encoding="utf-8")
        except FileNotFoundError as exc:
            raise ConfigError(f"configuration file not found: {name!r}") from exc
        if path.suffix == ".json":
            try:
                loaded = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON in configuration file {name!r}: {exc}") from exc
        else:
            loaded = parse_key_value_text(text, source=name)
        self.config = self._deep_merge(_DEFAULT_CONFIG, loaded)
        self._currently_loaded = name
        logger.debug("loaded config=%s", name)

    def save_config(self, path: str | Path | None = None, extra: dict | None = None) -> Path:
        """Write the resolved configuration (plus *extra* entries) as JSON.

        Built-in presets cannot be overwritten.
        """
        target = path or self._currently_loaded
        if target is None:
            raise ConfigError("cannot save configuration: no file loaded and no path given")
        if str(target) in self.built_in_presets():
            raise ConfigError(f"cannot modify built-in preset {str(target)!r}")
        target = Path(target)
        payload = self.build().to_dict()
        payload.update(extra or {})
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"failed to write configuration to {str(target)!r}: {exc}") from exc
        return target

    # ─────────────────────────────────────────────────
    # Typed view
    # ─────────────────────────────────────────────────

    def build(self) -> RunConfig:
        """Validate the active dictionary and return a :class:`RunConfig`."""
        c = self.config
        env, data, sac, sl, ev = c["env"], c["data"], c["sac"], c["sl"], c["eval"]
        try:
            env_config = FwdEnvConfig(
                window_w=_int(env, "window_w", "env"),
                rollout_h=_int(env, "rollout_h", "env"),
                start_offset_max=_int(env, "start_offset_max", "env"),
                reward_mode=_str(env, "reward_mode", "env"),
                similarity_choice=_str(env, "similarity_choice", "env"),
                delta_scale=_float(env, "delta_scale", "env"),
            )
            return RunConfig(
                system=_str(c, "system"),
                dataset=None if c["dataset"] is None else Path(str(c["dataset"])),
                episodes=_int(c, "episodes"),
                eval_every=_int(c, "eval_every"),
                checkpoint_every=_int(c, "checkpoint_every"),
                seed=_int(c, "seed"),
                out_dir=Path(str(c["out_dir"])),
                collect_max_steps=_int(c, "collect_max_steps"),
                deterministic=_bool(c, "deterministic"),
                log_level=_str(c, "log_level").upper(),
                data=DataConfig(
                    episodes=_int(data, "episodes", "data"),
                    max_len=_int(data, "max_len", "data"),
                    min_len=None if data["min_len"] is None else _int(data, "min_len", "data"),
                    behaviors=tuple(str(b) for b in _list(data, "behaviors")),
                    filter_min_len=_int(data, "filter_min_len", "data"),
                    holdout_fraction=_float(data, "holdout_fraction", "data"),
                    workers=_int(data, "workers", "data"),
                ),
                env=env_config,
                hidden=tuple(int(h) for h in _list(c["model"], "hidden")),
                sac=SacConfig(
                    **{k: _SAC_CASTS[k](sac, k, "sac") for k in sac if k != "target_entropy"},
                    target_entropy=None if sac["target_entropy"] is None else _float(sac, "target_entropy", "sac"),
                ),
                sl=SlConfig(
                    batch_size=_int(sl, "batch_size", "sl"),
                    minibatches_per_round=_int(sl, "minibatches_per_round", "sl"),
                    lr=_float(sl, "lr", "sl"),
                    window_w=env_config.window_w,
                ),
                eval=EvalConfig(
                    lengths=tuple(int(h) for h in _list(ev, "lengths")),
                    n_episodes=_int(ev, "n_episodes", "eval"),
                    overlay_episodes=_int(ev, "overlay_episodes", "eval"),
                ),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid configuration value: {exc}") from exc

    def recorded_decisions(self) -> dict:
        """Interpretation choices written into every run manifest."""
        return {"sl_target_space": SL_TARGET_SPACE, "collect_horizon": "one env episode capped at collect_max_steps"}

    def __repr__(self) -> str:
        return f"ConfigManager(loaded={self._currently_loaded!r})"


# region Coercion helpers


def _int(section: dict, key: str, prefix: str = "") -> int:
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigError(f"{_dotted(prefix, key)} must be an integer, got {value!r}")
    return int(value)


def _float(section: dict, key: str, prefix: str = "") -> float:
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{_dotted(prefix, key)} must be a number, got {value!r}")
    return float(value)


def _bool(section: dict, key: str, prefix: str = "") -> bool:
    value = section[key]
    if not isinstance(value, bool):
        raise ConfigError(f"{_dotted(prefix, key)} must be true or false, got {value!r}")
    return value


def _str(section: dict, key: str, prefix: str = "") -> str:
    value = section[key]
    if not isinstance(value, str):
        raise ConfigError(f"{_dotted(prefix, key)} must be a string, got {value!r}")
    return value


def _list(section: dict, key: str) -> list:
    value = section[key]
    return list(value) if isinstance(value, (list, tuple)) else [value]


def _dotted(prefix: str, key: str) -> str:
    return f"{prefix}.{key}" if prefix else key


_SAC_CASTS = {key: _float if isinstance(value, float) else _int for key, value in _DEFAULT_CONFIG["sac"].items()}


# endregion
