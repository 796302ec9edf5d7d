"""Fwdlearn Checkpoint Files

Versioned binary container for trained agents and policies::

    b"FWDC"  u32 format_version  u32 header_len  header (UTF-8 JSON, sorted keys)
    f64[...] for every section listed in the header, in order, little-endian

The header records the library version, the kind of model, its architecture
descriptors, an echo of the run configuration, and ``sections``: a list of
``{"name": ..., "shape": [...]}`` entries. Network parameters, optimizer
moments, the input scaler and the delta bounds are all sections, so a
save/load/save cycle reproduces the file byte for byte.

License: MIT
"""

from __future__ import annotations

import json
import struct
from collections.abc import Iterable
from dataclasses import dataclass
from dataclasses import field
from pathlib import Path
from typing import Any

import numpy as np
import torch
from torch import nn

from fwdlearn.core.exceptions import DataError
from fwdlearn.utils.version import Version
from fwdlearn.utils.version import vernum

__all__ = [
    "CHECKPOINT_MAGIC",
    "CHECKPOINT_VERSION",
    "Checkpoint",
    "dumps_checkpoint",
    "loads_checkpoint",
    "save_checkpoint",
    "load_checkpoint",
    "module_sections",
    "load_module_sections",
    "optimizer_sections",
    "load_optimizer_sections",
]

CHECKPOINT_MAGIC = b"FWDC"
CHECKPOINT_VERSION = 1
_F64 = np.dtype("<f8")


@dataclass
class Checkpoint:
    """Parsed checkpoint: JSON header plus named float64 arrays."""

    header: dict[str, Any]
    sections: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return self.header.get("kind", "")

    def section(self, name: str) -> np.ndarray:
        try:
            return self.sections[name]
        except KeyError as exc:
            raise DataError(f"checkpoint has no section {name!r}") from exc


def dumps_checkpoint(checkpoint: Checkpoint) -> bytes:
    arrays = [(name, np.asarray(value, dtype=np.float64)) for name, value in checkpoint.sections.items()]
    header = dict(checkpoint.header)
    header.setdefault("fwdlearn_version", str(vernum))
    header["sections"] = [{"name": name, "shape": list(arr.shape)} for name, arr in arrays]
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    chunks = [CHECKPOINT_MAGIC, struct.pack("<II", CHECKPOINT_VERSION, len(blob)), blob]
    chunks.extend(arr.astype(_F64).tobytes() for _, arr in arrays)
    return b"".join(chunks)


def loads_checkpoint(blob: bytes) -> Checkpoint:
    if blob[:4] != CHECKPOINT_MAGIC:
        raise DataError("not a checkpoint (bad magic)")
    try:
        version, header_len = struct.unpack_from("<II", blob, 4)
        header = json.loads(blob[12 : 12 + header_len].decode("utf-8"))
    except (struct.error, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"malformed checkpoint header: {exc}") from exc
    if version != CHECKPOINT_VERSION:
        raise DataError(f"unsupported checkpoint format version {version}")
    written_by = header.get("fwdlearn_version")
    if written_by is not None:
        try:
            compatible = Version.parse(written_by).is_compatible(vernum)
        except ValueError as exc:
            raise DataError(f"checkpoint has a malformed version: {exc}") from exc
        if not compatible:
            raise DataError(f"checkpoint written by fwdlearn {written_by}, incompatible with {vernum}")

    offset = 12 + header_len
    sections: dict[str, np.ndarray] = {}
    for entry in header.pop("sections", []):
        shape = tuple(int(n) for n in entry["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        if offset + 8 * count > len(blob):
            raise DataError(f"checkpoint truncated in section {entry['name']!r}")
        sections[entry["name"]] = np.frombuffer(blob, dtype=_F64, count=count, offset=offset).reshape(shape).copy()
        offset += 8 * count
    if offset != len(blob):
        raise DataError(f"{len(blob) - offset} trailing bytes in checkpoint")
    return Checkpoint(header, sections)


def save_checkpoint(path: str | Path, checkpoint: Checkpoint) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(dumps_checkpoint(checkpoint))
    tmp.replace(path)
    return path


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"checkpoint not found: {path}")
    return loads_checkpoint(path.read_bytes())


# region Torch adapters


def module_sections(prefix: str, module: nn.Module) -> dict[str, np.ndarray]:
    """Parameters and buffers of *module* as ``{prefix.name: array}``."""
    return {f"{prefix}.{name}": t.detach().cpu().numpy().astype(np.float64) for name, t in module.state_dict().items()}


@torch.no_grad()
def load_module_sections(module: nn.Module, checkpoint: Checkpoint, prefix: str) -> None:
    state = {}
    for name, current in module.state_dict().items():
        arr = checkpoint.section(f"{prefix}.{name}")
        if tuple(arr.shape) != tuple(current.shape):
            raise DataError(f"section {prefix}.{name} has shape {arr.shape}, expected {tuple(current.shape)}")
        state[name] = torch.as_tensor(arr, dtype=current.dtype)
    module.load_state_dict(state)


def optimizer_sections(prefix: str, optimizer: torch.optim.Optimizer, params: Iterable[torch.Tensor]) -> dict[str, np.ndarray]:
    """Adam moments and step counts of *params* (zeros before the first step)."""
    out: dict[str, np.ndarray] = {}
    for i, p in enumerate(params):
        state = optimizer.state.get(p, {})
        step = state.get("step", 0.0)
        out[f"{prefix}.{i}.step"] = np.array([float(step)])
        out[f"{prefix}.{i}.exp_avg"] = _moment(state, "exp_avg", p)
        out[f"{prefix}.{i}.exp_avg_sq"] = _moment(state, "exp_avg_sq", p)
    return out


def _moment(state: dict, key: str, p: torch.Tensor) -> np.ndarray:
    value = state.get(key)
    if value is None:
        return np.zeros(tuple(p.shape))
    return value.detach().cpu().numpy().astype(np.float64)


def load_optimizer_sections(
    optimizer: torch.optim.Optimizer,
    params: Iterable[torch.Tensor],
    checkpoint: Checkpoint,
    prefix: str,
) -> None:
    """Restore Adam state saved by :func:`optimizer_sections`."""
    for i, p in enumerate(params):
        step = float(checkpoint.section(f"{prefix}.{i}.step")[0])
        if step == 0.0:
            optimizer.state.pop(p, None)
            continue
        optimizer.state[p] = {
            "step": torch.tensor(step, dtype=torch.float32),
            "exp_avg": torch.as_tensor(checkpoint.section(f"{prefix}.{i}.exp_avg"), dtype=p.dtype).clone(),
            "exp_avg_sq": torch.as_tensor(checkpoint.section(f"{prefix}.{i}.exp_avg_sq"), dtype=p.dtype).clone(),
        }


# endregion
