"""Parameter-space geometry on a box ``[0, T]`` in the positive orthant.

Points are :class:`ParamPoint` (a validated tuple of floats), rectangles are
half-open ``(lo, hi]`` products.  Everything here is immutable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, StructuralError

MAX_DIM = 4


class ParamPoint(tuple):
    """A point ``t = (t_1, ..., t_d)`` with finite, nonnegative coordinates."""

    def __new__(cls, coords: Iterable[float]):
        if isinstance(coords, ParamPoint):
            return coords
        if not isinstance(coords, (np.ndarray, list, tuple)):
            coords = tuple(coords)
        values = tuple(float(c) for c in np.ravel(np.asarray(coords, dtype=float)))
        if len(values) == 0:
            raise StructuralError("a parameter point needs at least one coordinate")
        for c in values:
            if not math.isfinite(c) or c < 0.0:
                raise DomainError(f"coordinates must be finite and >= 0, got {values}")
        return super().__new__(cls, values)

    @property
    def dim(self) -> int:
        return len(self)

    def __repr__(self):
        return f"ParamPoint({tuple(self)})"


def as_point(x, dim: int | None = None) -> ParamPoint:
    """Coerce ``x`` to a :class:`ParamPoint`, optionally checking its dimension.

    A bare scalar is accepted for ``dim == 1``.
    """
    if np.isscalar(x):
        x = (x,)
    p = ParamPoint(x)
    if dim is not None and p.dim != dim:
        raise StructuralError(f"expected a point of dimension {dim}, got {p.dim}")
    return p


class MultiIndex(tuple):
    """Lattice multi-index ``k`` with every component ``>= 1``.

    The cell indexed by ``k`` is ``[k - 1, k)``.
    """

    def __new__(cls, k: Iterable[int]):
        values = tuple(int(v) for v in k)
        if not values:
            raise StructuralError("empty multi-index")
        if any(v < 1 for v in values):
            raise DomainError(f"multi-index components must be >= 1, got {values}")
        return super().__new__(cls, values)


def meet(a, b) -> ParamPoint:
    """Componentwise minimum ``a ∧ b``."""
    a, b = as_point(a), as_point(b)
    if a.dim != b.dim:
        raise StructuralError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return ParamPoint(min(x, y) for x, y in zip(a, b))


def leq(a, b) -> bool:
    """Partial order: ``a <= b`` in every coordinate."""
    a, b = as_point(a), as_point(b)
    if a.dim != b.dim:
        raise StructuralError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return all(x <= y for x, y in zip(a, b))


@dataclass(frozen=True)
class Rect:
    """Half-open rectangle ``(lo, hi] = prod_i (lo_i, hi_i]``."""

    lo: ParamPoint
    hi: ParamPoint

    def __post_init__(self):
        lo, hi = as_point(self.lo), as_point(self.hi)
        if lo.dim != hi.dim:
            raise StructuralError(f"corner dimensions differ: {lo.dim} vs {hi.dim}")
        if any(a > b for a, b in zip(lo, hi)):
            raise DomainError(f"lower corner {tuple(lo)} not <= upper corner {tuple(hi)}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def from_origin(cls, t) -> "Rect":
        t = as_point(t)
        return cls(ParamPoint((0.0,) * t.dim), t)

    @property
    def dim(self) -> int:
        return self.lo.dim

    @property
    def volume(self) -> float:
        return math.prod(b - a for a, b in zip(self.lo, self.hi))

    @property
    def is_empty(self) -> bool:
        return any(b <= a for a, b in zip(self.lo, self.hi))

    def contains(self, x) -> bool:
        x = as_point(x, self.dim)
        return all(a < v <= b for a, v, b in zip(self.lo, x, self.hi))

    def contains_many(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized containment for an ``(N, d)`` array of points."""
        xs = np.asarray(xs, dtype=float).reshape(-1, self.dim)
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        return np.all((xs > lo) & (xs <= hi), axis=1)

    def intersect(self, other: "Rect") -> "Rect":
        """Intersection; an empty result is returned as a degenerate rectangle."""
        if other.dim != self.dim:
            raise StructuralError(f"dimension mismatch: {self.dim} vs {other.dim}")
        lo = tuple(max(a, c) for a, c in zip(self.lo, other.lo))
        hi = tuple(min(b, e) for b, e in zip(self.hi, other.hi))
        hi = tuple(max(h, l) for l, h in zip(lo, hi))
        return Rect(ParamPoint(lo), ParamPoint(hi))

    def inside(self, box) -> bool:
        box = as_point(box, self.dim)
        return all(h <= b for h, b in zip(self.hi, box))


def increment_points(r: Rect) -> list[tuple[ParamPoint, int]]:
    """Corners of ``r`` with inclusion-exclusion signs.

    ``sum(sign * F(corner))`` is the rectangular increment of ``F`` over
    ``r``.  Bit ``i`` of the enumeration index selects the lower face on
    axis ``i``, so the first entry is always ``(hi, +1)``.
    """
    if not isinstance(r, Rect):
        raise StructuralError("increment_points expects a Rect")
    d = r.dim
    out = []
    for mask in range(2**d):
        corner = tuple(r.lo[i] if mask >> i & 1 else r.hi[i] for i in range(d))
        sign = -1 if bin(mask).count("1") % 2 else 1
        out.append((ParamPoint(corner), sign))
    return out


def rect_increment(F, r: Rect) -> float:
    """Apply ``F`` at the corners of ``r`` and combine with signs."""
    return math.fsum(s * F(c) for c, s in increment_points(r))


@dataclass(frozen=True)
class EvalGrid:
    """Per-axis breakpoints ``0 = b_0 < b_1 < ... < b_K = T_i``."""

    axes: tuple

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        for i, a in enumerate(axes):
            if a.ndim != 1 or a.size < 2:
                raise StructuralError(f"axis {i} needs at least two breakpoints")
            if a[0] != 0.0 or np.any(np.diff(a) <= 0):
                raise DomainError(f"axis {i} breakpoints must start at 0 and increase strictly")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def uniform(cls, box, cells_per_axis: int | Sequence[int]) -> "EvalGrid":
        box = as_point(box)
        if np.isscalar(cells_per_axis):
            cells_per_axis = [int(cells_per_axis)] * box.dim
        return cls(tuple(np.linspace(0.0, T, k + 1) for T, k in zip(box, cells_per_axis)))

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def box(self) -> ParamPoint:
        return ParamPoint(a[-1] for a in self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.size - 1 for a in self.axes)

    def midpoints(self) -> np.ndarray:
        """All cell midpoints as an ``(ncells, d)`` array in C order."""
        mids = [0.5 * (a[1:] + a[:-1]) for a in self.axes]
        mesh = np.meshgrid(*mids, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def cell_volumes(self) -> np.ndarray:
        widths = [np.diff(a) for a in self.axes]
        out = widths[0]
        for w in widths[1:]:
            out = np.multiply.outer(out, w)
        return out


def check_box(T, dim: int | None = None) -> ParamPoint:
    """Validate a box corner: strictly positive, dimension capped at MAX_DIM."""
    T = as_point(T, dim)
    if any(v <= 0 for v in T):
        raise DomainError(f"box corner must be strictly positive, got {tuple(T)}")
    if T.dim > MAX_DIM:
        raise DomainError(f"dimension {T.dim} exceeds the cap of {MAX_DIM}")
    return T

