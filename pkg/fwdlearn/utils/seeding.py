"""Seed derivation.

All randomness in fwdlearn flows from one integer seed. Independent streams
(per episode, per component) are spawned from ``numpy.random.SeedSequence`` so
results do not depend on the order in which streams are consumed.
"""

import numpy as np
import torch

__all__ = ["derive_seed", "numpy_rng", "torch_generator"]


def derive_seed(seed: int, *keys: int | str) -> int:
    """Derive a 63-bit child seed from *seed* and a path of keys."""
    entropy = [int(seed) & 0xFFFFFFFF]
    for key in keys:
        if isinstance(key, str):
            entropy.append(int.from_bytes(key.encode("utf-8"), "little"))
        else:
            entropy.append(int(key) & 0xFFFFFFFF)
    state = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


def numpy_rng(seed: int, *keys: int | str) -> np.random.Generator:
    """Independent numpy generator for the stream ``(seed, *keys)``."""
    return np.random.default_rng(derive_seed(seed, *keys))


def torch_generator(seed: int, *keys: int | str) -> torch.Generator:
    """Independent CPU torch generator for the stream ``(seed, *keys)``."""
    generator = torch.Generator(device="cpu")
    generator.manual_seed(derive_seed(seed, *keys))
    return generator
