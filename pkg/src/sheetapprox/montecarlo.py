"""Replicate-parallel simulation of ``X_n = int f theta_n`` for both kernel families.

Replicates are cut into fixed-size blocks; block ``b`` draws from the stream
``StreamKey(seed, b, label)``.  Blocks are independent of the worker count,
and results are concatenated in block order, so output is bitwise identical
for any number of workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from enum import Enum

import numpy as np

from . import donsker, kac_stroock
from .errors import DomainError
from .geometry import check_box
from .streams import (DEFAULT_LATTICE_BUDGET, LABEL_LATTICE, LABEL_POISSON, InnovationLaw,
                      StreamKey, lattice_shape, sample_lattice_block, sample_sheet_block)

DEFAULT_BLOCK = 2048


class Family(str, Enum):
    DONSKER = "donsker"
    KAC_STROOCK = "kac-stroock"

    @classmethod
    def parse(cls, value) -> "Family":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        if key in ("kac", "kacstroock", "ks"):
            key = "kac-stroock"
        try:
            return cls(key)
        except ValueError:
            raise DomainError(f"unknown kernel family {value!r}") from None


def stream_label(family: Family, n: int, experiment: int = 0) -> int:
    """Distinct substream label per (experiment, family, n)."""
    base = LABEL_LATTICE if Family.parse(family) is Family.DONSKER else LABEL_POISSON
    return ((experiment * 1_000_003) + int(n)) * 8 + base


def _run_block(task):
    family, fs, n, T, law, seed, block_index, label, size, budget, backend = task
    rng = StreamKey(seed, block_index, label).generator()
    if family is Family.DONSKER:
        Z = sample_lattice_block(n, T, law, rng, size, budget)
        weights = [donsker.donsker_weights(f, n, T) for f in fs]
        return donsker.integrate_block(Z, weights, n)
    batch = sample_sheet_block(n, T, rng, size)
    return kac_stroock.integrate_batch(batch, fs, backend=backend)


def simulate(family, fs, n: int, reps: int, seed: int, *, T=None, law=InnovationLaw.RADEMACHER,
             label: int | None = None, workers: int = 1, block: int = DEFAULT_BLOCK,
             budget: int = DEFAULT_LATTICE_BUDGET, backend: str | None = None) -> np.ndarray:
    """Samples of ``int f theta_n`` for each ``f`` in ``fs``; shape ``(reps, len(fs))``."""
    family = Family.parse(family)
    fs = list(fs)
    if not fs:
        raise DomainError("need at least one integrand")
    T = check_box(fs[0].box if T is None else T)
    law = InnovationLaw.parse(law)
    if reps < 1:
        raise DomainError("reps must be >= 1")
    if family is Family.DONSKER:
        per_block = math.prod(lattice_shape(n, T)) * min(block, reps)
        if per_block > budget:
            # shrink the block rather than fail; block size stays a pure function of the inputs
            block = max(1, budget // math.prod(lattice_shape(n, T)))
    label = stream_label(family, n) if label is None else label
    tasks = []
    for b, start in enumerate(range(0, reps, block)):
        size = min(block, reps - start)
        tasks.append((family, fs, n, T, law, int(seed), b, label, size, budget, backend))
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_block, tasks))
    else:
        parts = [_run_block(t) for t in tasks]
    return np.concatenate(parts, axis=0)
