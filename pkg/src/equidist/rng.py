"""Counter-based random streams.

Draws are organised in fixed-size blocks. Block ``b`` of stream ``s`` under
seed ``k`` comes from a Philox generator whose key encodes (k, s) and whose
counter starts at b << 192, so any block can be produced independently and
a parallel split of the index range reproduces the sequential stream.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

BLOCK = 4096
_MASK64 = (1 << 64) - 1


def block_generator(seed: int, stream: int, block: int) -> np.random.Generator:
    key = (int(seed) & _MASK64) | ((int(stream) & _MASK64) << 64)
    bg = np.random.Philox(key=key, counter=int(block) << 192)
    return np.random.Generator(bg)


def draw(
    seed: int,
    stream: int,
    count: int,
    fn: Callable[[np.random.Generator, int], np.ndarray],
    start: int = 0,
) -> np.ndarray:
    """Rows start..start+count-1 of the stream; ``fn(gen, BLOCK)`` makes one block."""
    if count <= 0:
        return fn(block_generator(seed, stream, 0), BLOCK)[:0]
    first, last = start // BLOCK, (start + count - 1) // BLOCK
    parts = [fn(block_generator(seed, stream, b), BLOCK) for b in range(first, last + 1)]
    out = np.concatenate(parts, axis=0)
    off = start - first * BLOCK
    return out[off : off + count]


def derive_seed(seed: int, *labels: int) -> int:
    """A 64-bit sub-seed for a labelled task (e.g. a prime in a sweep)."""
    ss = np.random.SeedSequence([int(seed) & _MASK64, *[int(x) & _MASK64 for x in labels]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
