"""Labeled substreams derived from one master seed.

Every stochastic component draws from its own generator, keyed by
(master seed, label path).  Labels hash platform-independently, so the same
master seed reproduces the same results everywhere, and components can be
re-run or parallelized independently without sharing stream state.
"""

from __future__ import annotations

import zlib

import numpy as np


def _label_key(label: object) -> int:
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError(f"substream labels must be non-negative, got {label}")
        return int(label)
    if isinstance(label, str):
        return zlib.crc32(label.encode("utf-8"))
    raise TypeError(f"substream label must be int or str, got {type(label).__name__}")


def substream(master_seed: int, *labels: object) -> np.random.Generator:
    """Generator for the substream identified by a label path.

    Example: ``substream(seed, "cloud", region)`` for per-region sampling.
    """
    key = tuple(_label_key(x) for x in labels)
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=key))
