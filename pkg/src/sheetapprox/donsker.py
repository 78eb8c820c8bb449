"""Donsker kernels: rescaled i.i.d. lattice fields and their exact integrals.

``theta_n(t) = n^{d/2} Z_k`` on the cell ``n t in [k - 1, k)``.  Because the
kernel is piecewise constant on lattice cells, integrals against simple
functions reduce to per-axis overlap lengths, which factorize.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StructuralError
from .geometry import as_point, check_box
from .integrands import SimpleFunction
from .streams import LatticeField, lattice_shape


@dataclass(frozen=True, eq=False)
class DonskerKernel:
    field: LatticeField

    @property
    def n(self) -> int:
        return self.field.n

    @property
    def dim(self) -> int:
        return self.field.dim

    @property
    def T(self):
        return self.field.T


def _snap(x: float) -> float:
    """Round ``x`` to the nearest integer when it is within float noise of it."""
    r = round(x)
    return float(r) if abs(x - r) <= 1e-12 * max(1.0, abs(x)) else x


def theta_at(kern: DonskerKernel, t) -> float:
    t = as_point(t, kern.dim)
    if any(v >= b for v, b in zip(t, kern.T)):
        raise DomainError(f"{tuple(t)} is not in the half-open box [0, {tuple(kern.T)})")
    # ties at integer n t_i go to the upper cell
    k = tuple(int(math.floor(_snap(kern.n * v))) for v in t)
    return kern.n ** (kern.dim / 2) * float(kern.field.values[k])


def axis_overlaps(n: int, lo: float, hi: float, cells: int) -> np.ndarray:
    """Lengths of ``(lo, hi] ∩ [k/n, (k+1)/n)`` for ``k = 0 .. cells-1``."""
    k = np.arange(cells, dtype=float)
    a, b = n * lo, n * hi
    return np.clip(np.minimum(b, k + 1.0) - np.maximum(a, k), 0.0, None) / n


def donsker_weights(f: SimpleFunction, n: int, T=None) -> np.ndarray:
    """Weight tensor ``w_k = int_{cell_k} f``, shape ``lattice_shape(n, T)``.

    ``int f theta_n = n^{d/2} sum_k Z_k w_k``.
    """
    T = f.box if T is None else check_box(T, f.dim)
    if any(b > c for b, c in zip(f.box, T)):
        raise DomainError(f"integrand box {tuple(f.box)} exceeds the lattice box {tuple(T)}")
    shape = lattice_shape(n, T)
    w = np.zeros(shape)
    for coef, rect in f.terms:
        ov = [axis_overlaps(n, lo, hi, K) for lo, hi, K in zip(rect.lo, rect.hi, shape)]
        block = ov[0]
        for o in ov[1:]:
            block = np.multiply.outer(block, o)
        w += coef * block
    return w


def _contract(values: np.ndarray, weights: np.ndarray) -> float:
    return float(np.sum(values * weights))


def zeta_at(kern: DonskerKernel, t) -> float:
    """Interpolated random walk ``zeta_n(t) = int_{[0,t]} theta_n``.

    Full cells below ``[nt]`` carry weight one, boundary cells their
    fractional overlap with ``[0, nt]``; the weight factorizes per axis.
    """
    t = as_point(t, kern.dim)
    if any(v > b for v, b in zip(t, kern.T)):
        raise DomainError(f"{tuple(t)} lies outside the box {tuple(kern.T)}")
    n = kern.n
    shape = kern.field.shape
    w = None
    for v, K in zip(t, shape):
        wi = np.clip(_snap(n * v) - np.arange(K, dtype=float), 0.0, 1.0)
        w = wi if w is None else np.multiply.outer(w, wi)
    return n ** (-kern.dim / 2) * _contract(kern.field.values, w)


def integrate_simple(kern: DonskerKernel, f: SimpleFunction) -> float:
    """Exact ``int f(u) theta_n(u) du`` for a simple ``f`` supported in ``[0, T]``."""
    if f.dim != kern.dim:
        raise StructuralError(f"dimension mismatch: {f.dim} vs {kern.dim}")
    w = donsker_weights(f, kern.n, kern.T)
    return kern.n ** (kern.dim / 2) * _contract(kern.field.values, w)


def integrate_block(values: np.ndarray, weights: list[np.ndarray], n: int) -> np.ndarray:
    """Integrals of several weight tensors over a block of fields.

    ``values`` has shape ``(reps, *lattice)``; the result is ``(reps, len(weights))``.
    Sums are numpy pairwise reductions, so results do not depend on BLAS
    threading.
    """
    reps = values.shape[0]
    flat = values.reshape(reps, -1)
    d = values.ndim - 1
    out = np.empty((reps, len(weights)))
    for j, w in enumerate(weights):
        out[:, j] = np.sum(flat * w.reshape(1, -1), axis=1)
    return out * n ** (d / 2)


def rn_second_moment(n: int, t, T=None) -> float:
    """Exact ``E[R_n(t)^2]`` for the boundary remainder of ``zeta_n``.

    With ``x_i = n t_i``, the overlap of ``[0, x] \\ [0, [x]]`` with the
    cell ``k`` is ``prod_i l_i(k_i) - prod_i 1{k_i <= [x_i]}``; summing the
    squares factorizes to ``prod_i([x_i] + {x_i}^2) - prod_i [x_i]``.
    """
    t = as_point(t)
    if T is not None:
        T = check_box(T, t.dim)
        if any(v > b for v, b in zip(t, T)):
            raise DomainError(f"{tuple(t)} lies outside the box {tuple(T)}")
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    full = 1.0
    squares = 1.0
    for v in t:
        x = _snap(n * v)
        fl = math.floor(x)
        fr = x - fl
        full *= fl
        squares *= fl + fr * fr
    return max(squares - full, 0.0) / n ** t.dim


def rn_appendix_bound(n: int, t, T) -> float:
    """Upper bound ``(prod T_j)((n m / (n m - 1))^d - 1)``, ``m = min t_i``.

    Valid whenever ``n t_j >= 1`` for every ``j``; at ``n m = 1`` it is infinite.
    """
    t = as_point(t)
    T = check_box(T, t.dim)
    m = min(t)
    if n * m < 1:
        raise DomainError("the bound requires n * t_j >= 1 on every axis")
    if n * m == 1:
        return math.inf
    return math.prod(T) * ((n * m / (n * m - 1)) ** t.dim - 1.0)
