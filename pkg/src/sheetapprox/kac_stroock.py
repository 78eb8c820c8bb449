"""Kac-Stroock kernels driven by a d-parameter Poisson sheet.

``theta_n(t) = n^{d/2} (prod_i t_i)^{(d-1)/2} (-1)^{N_n(t)}``.  The parity
factor is constant on the open cells of the grid spanned, axis by axis, by the
sheet's point coordinates; the weight factorizes per axis with antiderivative
``2/(d+1) t^{(d+1)/2}``.  Integrals of simple functions are therefore exact
finite sums.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._kernels_py import axis_integrals, parity_grid
from .errors import DomainError, ResourceError, StructuralError
from .geometry import ParamPoint, as_point
from .integrands import SimpleFunction
from .streams import (LABEL_PARITY, PoissonSheet, SheetBatch, StreamKey, count_points,
                      count_points_batch, sample_sheet_block)

DEFAULT_CELL_BUDGET = kernels.DEFAULT_CELL_BUDGET


@dataclass(frozen=True, eq=False)
class KacStroockKernel:
    sheet: PoissonSheet

    @property
    def n(self) -> float:
        return self.sheet.n

    @property
    def dim(self) -> int:
        return self.sheet.dim

    @property
    def T(self) -> ParamPoint:
        return self.sheet.T


@dataclass(frozen=True, eq=False)
class ParityCellGrid:
    """Cells ``(e_a, e_{a+1})`` per axis and the sign ``(-1)^N`` on each.

    ``edges[i]`` is ``[0, sorted point coordinates..., T_i]`` and ``parity``
    holds 0/1 with shape ``(K + 1,) * d``.
    """

    edges: tuple
    parity: np.ndarray

    @property
    def shape(self):
        return self.parity.shape

    @property
    def sign(self) -> np.ndarray:
        return 1 - 2 * self.parity.astype(np.int8)

    def cell_of(self, t) -> tuple[int, ...]:
        # a point at a coordinate counts itself, so ties go to the upper cell
        return tuple(min(int(np.searchsorted(e, v, side="right")) - 1, e.size - 2)
                     for e, v in zip(self.edges, t))

    def sign_at(self, t) -> int:
        return int(self.sign[self.cell_of(t)])


def build_cell_grid(kern: KacStroockKernel, budget: int = DEFAULT_CELL_BUDGET) -> ParityCellGrid:
    pts = kern.sheet.points
    K, d = pts.shape[0], kern.dim
    need = (K + 1) ** d
    if need > budget:
        raise ResourceError(f"parity grid needs {need} cells, budget is {budget}", required=need)
    ranks = np.empty((K, d), dtype=np.int64)
    edges = []
    for i in range(d):
        order = np.argsort(pts[:, i], kind="stable")
        ranks[order, i] = np.arange(1, K + 1)
        edges.append(np.concatenate(([0.0], pts[order, i], [kern.T[i]])))
    return ParityCellGrid(tuple(edges), parity_grid(ranks, d))


def theta_at(kern: KacStroockKernel, t) -> float:
    t = as_point(t, kern.dim)
    d = kern.dim
    weight = math.prod(t) ** ((d - 1) / 2)
    sign = -1.0 if count_points(kern.sheet, t) % 2 else 1.0
    return kern.n ** (d / 2) * weight * sign


def integrate_simple(kern: KacStroockKernel, f: SimpleFunction,
                     grid: ParityCellGrid | None = None) -> float:
    """Exact ``int f theta_n`` by contracting the sign grid with axis integrals."""
    if f.dim != kern.dim:
        raise StructuralError(f"dimension mismatch: {f.dim} vs {kern.dim}")
    if any(b > c for b, c in zip(f.box, kern.T)):
        raise DomainError(f"integrand box {tuple(f.box)} exceeds the sheet box {tuple(kern.T)}")
    grid = grid or build_cell_grid(kern)
    d = kern.dim
    sign = grid.sign.astype(float)
    total = 0.0
    for coef, rect in f.terms:
        acc = sign
        for i in range(d - 1, -1, -1):
            acc = np.sum(acc * axis_integrals(grid.edges[i], rect.lo[i], rect.hi[i], d), axis=-1)
        total += coef * float(acc)
    return kern.n ** (d / 2) * total


def integrate_batch(batch: SheetBatch, fs, budget: int = DEFAULT_CELL_BUDGET,
                    backend: str | None = None) -> np.ndarray:
    """``int f theta_n`` for every sheet of ``batch`` and every ``f`` in ``fs``.

    Shape ``(len(batch), len(fs))``; dispatches to the compiled kernel when
    available.
    """
    fs = list(fs)
    d = batch.T.dim
    for f in fs:
        if f.dim != d:
            raise StructuralError(f"dimension mismatch: {f.dim} vs {d}")
    sums = kernels.ks_cell_sums(batch.points, batch.offsets, batch.T, fs, budget, backend)
    return batch.n ** (d / 2) * sums


@dataclass(frozen=True)
class ParityBound:
    """Inputs of a parity-expectation comparison and the product bound."""

    n: float
    points: np.ndarray
    lower: ParamPoint
    bound: float


def parity_expectation_bound(n: float, points, s) -> ParityBound:
    """``prod_i exp(-2 n S_i sum_j (u_i^(2j) - u_i^(2j-1)))``, ``S_i = prod_{l != i} s_l``.

    ``u_i^(k)`` are the ``i``-th coordinates of the points in increasing order.
    Requires an even number of points with ``0 < s <= u^j``.
    """
    s = as_point(s)
    u = np.asarray(points, dtype=float).reshape(-1, s.dim)
    m = u.shape[0]
    if m % 2:
        raise DomainError(f"the number of points must be even, got {m}")
    if any(v <= 0 for v in s):
        raise DomainError("the lower corner s must be strictly positive")
    if np.any(u < np.asarray(s)):
        raise DomainError("every point must satisfy s <= u^j")
    logb = 0.0
    for i in range(s.dim):
        S_i = math.prod(s[l] for l in range(s.dim) if l != i)
        srt = np.sort(u[:, i])
        gaps = math.fsum(srt[1::2] - srt[0::2])
        logb -= 2.0 * n * S_i * gaps
    return ParityBound(float(n), u, s, math.exp(logb))


def parity_expectation_exact(n: float, points) -> float:
    """``E[(-1)^{sum_j N(u^j)}] = exp(-2 n |{x : #{j : x <= u^j} odd}|)``.

    Each Poisson point ``p`` contributes ``#{j : p <= u^j}`` to the sum, so
    the expectation is that of ``(-1)`` raised to a Poisson count over the
    odd region.  The region is a union of cells of the grid spanned by the
    query coordinates.
    """
    u = np.asarray(points, dtype=float)
    if u.ndim == 1:
        u = u.reshape(-1, 1)
    d = u.shape[1]
    axes = [np.unique(np.concatenate(([0.0], u[:, i]))) for i in range(d)]
    mids = np.meshgrid(*[0.5 * (a[1:] + a[:-1]) for a in axes], indexing="ij")
    mids = np.stack([m.ravel() for m in mids], axis=1)
    h = np.zeros(mids.shape[0], dtype=np.int64)
    for row in u:
        h += np.all(mids <= row, axis=1)
    vol = np.ones(1)
    for a in axes:
        vol = np.multiply.outer(vol, np.diff(a))
    area = math.fsum(vol.ravel()[h % 2 == 1])
    return math.exp(-2.0 * n * area)


def parity_expectation_mc(n: float, points, reps: int, key: StreamKey, block: int = 4096):
    """Monte Carlo ``(estimate, standard error)`` of ``E[(-1)^{sum_j N(u^j)}]``.

    Sheets are drawn on ``[0, max_j u^j]``, which carries all the counts.
    """
    u = np.asarray(points, dtype=float)
    if u.ndim == 1:
        u = u.reshape(-1, 1)
    box = ParamPoint(u.max(axis=0))
    vals = []
    for b, start in enumerate(range(0, reps, block)):
        size = min(block, reps - start)
        rng = StreamKey(key.seed, b, LABEL_PARITY if key.label == 0 else key.label).generator()
        batch = sample_sheet_block(n, box, rng, size)
        total = count_points_batch(batch, u).sum(axis=1)
        vals.append(1.0 - 2.0 * (total % 2))
    x = np.concatenate(vals)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))
