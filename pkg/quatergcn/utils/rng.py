"""Named, seedable random substreams.

Every consumer of randomness asks for a stream by name (``"dsbm"``,
``"split-nodes"``, ``"init"`` ...) plus optional integer indices. The name is
hashed with SHA-256 into 32-bit words that extend the ``SeedSequence`` spawn
key, so streams are independent of each other and of the order in which they
are requested, and identical on every platform.
"""

import hashlib
from typing import Tuple

import numpy as np
import torch


def _name_words(name: str) -> Tuple[int, ...]:
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return tuple(int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4))


def seed_sequence(seed: int, name: str, *indices: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=seed, spawn_key=_name_words(name) + tuple(indices))


def substream(seed: int, name: str, *indices: int) -> np.random.Generator:
    """A PCG64 generator for the named stream."""
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, name, *indices)))


def torch_generator(seed: int, name: str, *indices: int) -> torch.Generator:
    """A CPU torch generator seeded from the named stream."""
    state = seed_sequence(seed, name, *indices).generate_state(2, dtype=np.uint32)
    generator = torch.Generator(device="cpu")
    generator.manual_seed(int(state[0]) | (int(state[1] & 0x7FFFFFFF) << 32))
    return generator
