"""Deterministic reductions shared by the pair-sum kernels.

Row blocks may be evaluated by any number of workers; the final sum always
goes through the same fixed binary tree over per-row partial sums, so the
result does not depend on how the rows were scheduled.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np


def pairwise_sum(values) -> float:
    """Sum a 1D array with a fixed binary tree (adjacent pairs, odd tail carried)."""
    a = np.asarray(values, dtype=float).ravel()
    if a.size == 0:
        return 0.0
    while a.size > 1:
        if a.size % 2:
            a = np.concatenate([a[:-1:2] + a[1::2], a[-1:]])
        else:
            a = a[0::2] + a[1::2]
    return float(a[0])


def row_blocks(nrows: int, tile_size: int) -> list[tuple[int, int]]:
    tile_size = max(1, int(tile_size))
    return [(s, min(s + tile_size, nrows)) for s in range(0, nrows, tile_size)]


def tiled_rows(
    func: Callable[[int, int], np.ndarray],
    nrows: int,
    tile_size: int = 128,
    workers: int = 1,
) -> np.ndarray:
    """Evaluate ``func(start, stop)`` over row blocks and concatenate in row order.

    ``func`` must return one value per row, computed from that row alone.
    """
    blocks = row_blocks(nrows, tile_size)
    if workers <= 1 or len(blocks) == 1:
        parts = [func(s, e) for s, e in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: func(*b), blocks))
    if not parts:
        return np.zeros(0)
    return np.concatenate(parts)
