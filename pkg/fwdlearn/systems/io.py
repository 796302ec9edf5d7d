"""Fwdlearn Dataset Files

Readers and writers for the two dataset encodings. The file suffix selects
the encoding.

``.fwdt`` (text, UTF-8)::

    # fwdlearn dataset
    system=pendulum
    state_dim=2
    action_dim=1
    dt=0.05
    spec={"action_dim": 1, ...}
    episodes=2
    episode length=3 provenance=random
    s0 s1 a0          (one row per transition, L rows)
    ...
    s0 s1             (final state, state entries only)
    episode length=...

Only ``system``, ``state_dim``, ``action_dim`` and ``dt`` are required in
the header. A bare ``episode`` line starts a block of rows that runs to the
next episode line; its last row gives the final state.

Floats are written with ``repr`` so text files round-trip exactly.

``.fwdb`` (binary, little-endian)::

    b"FWDB"  u32 version  u32 header_len  header (UTF-8 JSON)
    per episode:  u32 L  f64[(L + 1) * state_dim]  f64[L * action_dim]

The JSON header holds ``system`` (the spec dictionary), ``provenance`` and
``episodes``.

License: MIT
"""

from __future__ import annotations

import json
import logging
import struct
from pathlib import Path

import numpy as np

from fwdlearn.core.exceptions import ConfigError
from fwdlearn.core.exceptions import DataError
from fwdlearn.systems.base import Dataset
from fwdlearn.systems.base import Episode
from fwdlearn.systems.base import SystemSpec
from fwdlearn.systems.dynamics import make_system

__all__ = [
    "BINARY_MAGIC",
    "BINARY_VERSION",
    "save_dataset",
    "load_dataset",
    "dumps_text",
    "loads_text",
    "dumps_binary",
    "loads_binary",
]

logger = logging.getLogger(__name__)

BINARY_MAGIC = b"FWDB"
BINARY_VERSION = 1
_TEXT_BANNER = "# fwdlearn dataset"
_F64 = np.dtype("<f8")


# region Text


def _row(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def dumps_text(dataset: Dataset) -> str:
    spec = dataset.system
    lines = [
        _TEXT_BANNER,
        f"system={spec.name}",
        f"state_dim={spec.state_dim}",
        f"action_dim={spec.action_dim}",
        f"dt={spec.dt!r}",
        f"spec={json.dumps(spec.to_dict(), sort_keys=True)}",
        f"episodes={len(dataset)}",
    ]
    for episode, tag in zip(dataset.episodes, dataset.provenance, strict=True):
        lines.append(f"episode length={episode.length} provenance={tag}")
        for t in range(episode.length):
            lines.append(_row(np.concatenate([episode.states[t], episode.actions[t]])))
        lines.append(_row(episode.states[-1]))
    return "\n".join(lines) + "\n"


def _parse_floats(line: str, expected: int, lineno: int) -> np.ndarray:
    parts = line.split()
    if len(parts) != expected:
        raise DataError(f"line {lineno}: expected {expected} values, got {len(parts)}")
    try:
        return np.array([float(p) for p in parts], dtype=np.float64)
    except ValueError as exc:
        raise DataError(f"line {lineno}: {exc}") from exc


def _header_system(header: dict[str, str]) -> SystemSpec:
    for key in ("system", "state_dim", "action_dim", "dt"):
        if key not in header:
            raise DataError(f"dataset header is missing {key!r}")
    try:
        declared = (header["system"], int(header["state_dim"]), int(header["action_dim"]), float(header["dt"]))
        if "spec" in header:
            spec = SystemSpec.from_dict(json.loads(header["spec"]))
        else:
            spec = make_system(header["system"], dt=declared[3])
    except (json.JSONDecodeError, ValueError, ConfigError) as exc:
        raise DataError(f"invalid dataset header: {exc}") from exc
    if declared != (spec.name, spec.state_dim, spec.action_dim, spec.dt):
        raise DataError(f"dataset header {declared} disagrees with system {spec.name!r}")
    return spec


def _is_episode_line(line: str) -> bool:
    return line.split()[0] == "episode"


def loads_text(text: str) -> Dataset:
    """Parse a text dataset.

    The ``spec=`` header line is optional; without it the built-in system
    named by ``system=`` is used with the header's ``dt``. An episode line
    without ``length=`` takes every row up to the next episode line, and the
    last row supplies the final state (its action entries, if any, are
    ignored).
    """
    lines = [(i + 1, line.strip()) for i, line in enumerate(text.splitlines())]
    lines = [(n, line) for n, line in lines if line and not line.startswith("#")]

    header: dict[str, str] = {}
    pos = 0
    while pos < len(lines) and not _is_episode_line(lines[pos][1]):
        lineno, line = lines[pos]
        key, sep, value = line.partition("=")
        if not sep:
            raise DataError(f"line {lineno}: expected key=value header, got {line!r}")
        header[key.strip()] = value.strip()
        pos += 1
    spec = _header_system(header)

    episodes: list[Episode] = []
    provenance: list[str] = []
    width = spec.state_dim + spec.action_dim
    while pos < len(lines):
        lineno, line = lines[pos]
        fields = dict(part.partition("=")[::2] for part in line.split()[1:])
        end = pos + 1
        while end < len(lines) and not _is_episode_line(lines[end][1]):
            end += 1
        block = lines[pos + 1 : end]
        if not block:
            raise DataError(f"line {lineno}: episode has no rows")
        if "length" in fields:
            try:
                length = int(fields["length"])
            except ValueError as exc:
                raise DataError(f"line {lineno}: malformed episode line {line!r}") from exc
            if len(block) < length + 1:
                raise DataError(f"line {lineno}: episode truncated")
            if len(block) > length + 1:
                raise DataError(f"line {lineno}: episode holds {len(block) - 1} rows, declares {length}")
        rows = [_parse_floats(row, width, n) for n, row in block[:-1]]
        last_no, last = block[-1]
        final = _parse_floats(last, width if len(last.split()) == width else spec.state_dim, last_no)
        states = np.vstack([row[: spec.state_dim] for row in rows] + [final[: spec.state_dim]])
        actions = np.vstack([row[spec.state_dim :] for row in rows]) if rows else np.empty((0, spec.action_dim))
        episodes.append(Episode(states, actions))
        provenance.append(fields.get("provenance", "unknown"))
        pos = end

    if "episodes" in header and int(header["episodes"]) != len(episodes):
        raise DataError(f"header declares {header['episodes']} episodes, file holds {len(episodes)}")
    return Dataset(spec, tuple(episodes), tuple(provenance))


# endregion

# region Binary


def dumps_binary(dataset: Dataset) -> bytes:
    header = json.dumps(
        {"system": dataset.system.to_dict(), "provenance": list(dataset.provenance), "episodes": len(dataset)},
        sort_keys=True,
    ).encode("utf-8")
    chunks = [BINARY_MAGIC, struct.pack("<II", BINARY_VERSION, len(header)), header]
    for episode in dataset.episodes:
        chunks.append(struct.pack("<I", episode.length))
        chunks.append(episode.states.astype(_F64).tobytes())
        chunks.append(episode.actions.astype(_F64).tobytes())
    return b"".join(chunks)


def loads_binary(blob: bytes) -> Dataset:
    if blob[:4] != BINARY_MAGIC:
        raise DataError("not a binary dataset (bad magic)")
    try:
        version, header_len = struct.unpack_from("<II", blob, 4)
        if version != BINARY_VERSION:
            raise DataError(f"unsupported binary dataset version {version}")
        offset = 12
        header = json.loads(blob[offset : offset + header_len].decode("utf-8"))
        offset += header_len
        spec = SystemSpec.from_dict(header["system"])
        episodes = []
        for _ in range(int(header["episodes"])):
            (length,) = struct.unpack_from("<I", blob, offset)
            offset += 4
            n_states = (length + 1) * spec.state_dim
            n_actions = length * spec.action_dim
            end = offset + 8 * (n_states + n_actions)
            if end > len(blob):
                raise DataError("binary dataset truncated")
            states = np.frombuffer(blob, dtype=_F64, count=n_states, offset=offset).reshape(length + 1, spec.state_dim)
            actions = np.frombuffer(blob, dtype=_F64, count=n_actions, offset=offset + 8 * n_states)
            episodes.append(Episode(states, actions.reshape(length, spec.action_dim)))
            offset = end
    except (struct.error, KeyError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"malformed binary dataset: {exc}") from exc
    if offset != len(blob):
        raise DataError(f"{len(blob) - offset} trailing bytes after the last episode")
    return Dataset(spec, tuple(episodes), tuple(header.get("provenance", ())))


# endregion


def save_dataset(path: str | Path, dataset: Dataset) -> Path:
    """Write *dataset* to *path*; ``.fwdb`` selects binary, anything else text."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix == ".fwdb":
        path.write_bytes(dumps_binary(dataset))
    else:
        path.write_text(dumps_text(dataset), encoding="utf-8")
    logger.info("saved dataset path=%s episodes=%d", path, len(dataset))
    return path


def load_dataset(path: str | Path) -> Dataset:
    """Read a dataset written by :func:`save_dataset`.

    Raises:
        DataError: If the file is missing or malformed.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"dataset file not found: {path}")
    if path.suffix == ".fwdb":
        return loads_binary(path.read_bytes())
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not a text dataset") from exc
    return loads_text(text)
