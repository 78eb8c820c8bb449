"""Pure-numpy fallback for the Kac-Stroock batch integrator."""
from __future__ import annotations

import numpy as np


def parity_grid(ranks: np.ndarray, d: int) -> np.ndarray:
    """``N(t) mod 2`` on the ``(K + 1)^d`` cells induced by ``K`` points.

    ``ranks`` is ``(K, d)`` with 1-based per-axis sort positions.
    """
    K = ranks.shape[0]
    marks = np.zeros((K + 1,) * d, dtype=np.uint8)
    if K:
        marks[tuple(ranks.T)] = 1
    for axis in range(d):
        marks = np.bitwise_xor.accumulate(marks, axis=axis)
    return marks


def axis_integrals(edges: np.ndarray, lo: float, hi: float, d: int) -> np.ndarray:
    """``int_{(e_a, e_{a+1}) ∩ (lo, hi)} t^{(d-1)/2} dt`` for every cell ``a``."""
    x = np.clip(edges, lo, hi)
    F = 2.0 / (d + 1) * x ** ((d + 1) / 2.0)
    return np.diff(F)


def ks_integrate_batch(sorted_coords, ranks, offsets, coef, lo, hi, owner, nfuncs, box, budget):
    d = box.shape[0]
    nsheets = offsets.shape[0] - 1
    out = np.zeros((nsheets, nfuncs))
    for s in range(nsheets):
        o0, o1 = offsets[s], offsets[s + 1]
        K = o1 - o0
        if (K + 1) ** d > budget:
            raise MemoryError(f"parity grid needs {(K + 1) ** d} cells, budget is {budget}")
        sign = 1.0 - 2.0 * parity_grid(ranks[o0:o1], d)
        edges = [np.concatenate(([0.0], sorted_coords[i, o0:o1], [box[i]])) for i in range(d)]
        for j in range(coef.shape[0]):
            acc = sign
            for i in range(d - 1, -1, -1):
                A = axis_integrals(edges[i], lo[j, i], hi[j, i], d)
                acc = np.sum(acc * A, axis=-1)
            out[s, owner[j]] += coef[j] * float(acc)
    return out
