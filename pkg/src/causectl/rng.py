"""Seed derivation.

Every random stream is keyed by ``(root seed, purpose tag, index)`` so any
stage can be re-run on its own and results never depend on execution order.
"""

import zlib

import numpy as np


def tag_id(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def derive_seed(root: int, tag: str, *index: int) -> int:
    ss = np.random.SeedSequence([int(root), tag_id(tag), *(int(i) for i in index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def stream(root: int, tag: str, *index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(root), tag_id(tag), *(int(i) for i in index)]))
