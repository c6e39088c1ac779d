# app/engine/rng.py
"""
Splittable random streams.

Every (node, purpose) pair gets its own generator seeded from
SeedSequence(master_seed, spawn_key=(crc32(node), crc32(purpose))), so
adding a node or a link never shifts another stream.
"""

import zlib

import numpy as np


def _key(text: str) -> int:
    return zlib.crc32(text.encode("utf-8"))


def stream(master_seed: int, node_id: str, purpose: str) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(_key(node_id), _key(purpose)))
    return np.random.Generator(np.random.PCG64(seq))


class StreamRegistry:
    def __init__(self, master_seed: int):
        self.master_seed = master_seed
        self._streams = {}

    def get(self, node_id: str, purpose: str) -> np.random.Generator:
        key = (node_id, purpose)
        if key not in self._streams:
            self._streams[key] = stream(self.master_seed, node_id, purpose)
        return self._streams[key]
