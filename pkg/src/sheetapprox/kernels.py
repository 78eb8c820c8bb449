"""Backend selection for the hot Kac-Stroock integration loop.

The compiled extension ``sheetapprox._kernels`` is used when it was built;
otherwise the numpy implementation in ``_kernels_py`` takes over.  Set
``SHEETAPPROX_BACKEND=python`` to force the fallback.
"""
from __future__ import annotations

import os

import numpy as np

from . import _kernels_py
from .errors import DomainError, ResourceError

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

DEFAULT_CELL_BUDGET = 10**7


def available_backends() -> list[str]:
    return (["compiled"] if _compiled is not None else []) + ["python"]


def default_backend() -> str:
    choice = os.environ.get("SHEETAPPROX_BACKEND", "auto").lower()
    if choice == "python":
        return "python"
    if choice == "compiled" and _compiled is None:
        raise DomainError("SHEETAPPROX_BACKEND=compiled but the extension is not built")
    return "compiled" if _compiled is not None else "python"


def _impl(backend: str | None):
    backend = backend or default_backend()
    if backend == "compiled":
        if _compiled is None:
            raise DomainError("compiled backend requested but the extension is not built")
        return _compiled.ks_integrate_batch
    if backend == "python":
        return _kernels_py.ks_integrate_batch
    raise DomainError(f"unknown backend {backend!r}")


def sort_within_sheets(points: np.ndarray, offsets: np.ndarray):
    """Per-sheet sorted coordinates ``(d, P)`` and 1-based ranks ``(P, d)``."""
    P, d = points.shape
    owner = np.repeat(np.arange(offsets.size - 1), np.diff(offsets))
    start = offsets[owner]
    sorted_coords = np.empty((d, P))
    ranks = np.empty((P, d), dtype=np.int64)
    for i in range(d):
        order = np.lexsort((points[:, i], owner))
        sorted_coords[i] = points[order, i]
        ranks[order, i] = np.arange(P) - start[order] + 1
    return sorted_coords, ranks


def pack_integrands(fs):
    """Concatenate the terms of several simple functions with an owner column."""
    coefs, los, his, owners = [], [], [], []
    for k, f in enumerate(fs):
        c, lo, hi = f.term_arrays()
        coefs.append(c)
        los.append(lo)
        his.append(hi)
        owners.append(np.full(c.size, k, dtype=np.int64))
    d = fs[0].dim
    coef = np.concatenate(coefs) if coefs else np.empty(0)
    lo = np.concatenate(los).reshape(-1, d) if los else np.empty((0, d))
    hi = np.concatenate(his).reshape(-1, d) if his else np.empty((0, d))
    owner = np.concatenate(owners) if owners else np.empty(0, dtype=np.int64)
    return coef, lo, hi, owner


def ks_cell_sums(points, offsets, T, fs, budget=DEFAULT_CELL_BUDGET, backend=None) -> np.ndarray:
    """``sum_cells parity * prod_i int t_i^{(d-1)/2}`` for each sheet and integrand.

    The caller multiplies by ``n^{d/2}``.  Returns shape ``(nsheets, len(fs))``.
    """
    points = np.ascontiguousarray(points, dtype=float)
    offsets = np.ascontiguousarray(offsets, dtype=np.int64)
    box = np.ascontiguousarray(T, dtype=float)
    d = box.size
    counts = np.diff(offsets)
    if counts.size and (int(counts.max()) + 1) ** d > budget:
        need = (int(counts.max()) + 1) ** d
        raise ResourceError(f"parity grid needs {need} cells, budget is {budget}", required=need)
    sorted_coords, ranks = sort_within_sheets(points.reshape(-1, d), offsets)
    coef, lo, hi, owner = pack_integrands(fs)
    impl = _impl(backend)
    return impl(np.ascontiguousarray(sorted_coords), np.ascontiguousarray(ranks), offsets,
                np.ascontiguousarray(coef), np.ascontiguousarray(lo), np.ascontiguousarray(hi),
                np.ascontiguousarray(owner), len(fs), box, int(budget))
