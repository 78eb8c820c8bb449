"""Simple functions on disjoint half-open rectangles and their algebra.

A :class:`SimpleFunction` is ``sum_j c_j 1_{A_j}`` with pairwise disjoint
``A_j`` inside the box ``[0, T]``.  All norms and products are computed exactly
by refining onto a common per-axis breakpoint grid.

Smooth integrands are handled by the caller: sample the function at the cell
midpoints of an :class:`~sheetapprox.geometry.EvalGrid` and build the simple
function with :meth:`SimpleFunction.from_grid`; refining the grid converges in
every ``L^p``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, StructuralError
from .geometry import EvalGrid, ParamPoint, Rect, as_point, check_box


@dataclass(frozen=True)
class SimpleFunction:
    terms: tuple
    box: ParamPoint

    def __post_init__(self):
        box = check_box(self.box)
        terms = []
        for coef, rect in self.terms:
            if not isinstance(rect, Rect):
                rect = Rect(*rect)
            if rect.dim != box.dim:
                raise StructuralError(f"term of dimension {rect.dim} in a {box.dim}-d box")
            if not rect.inside(box):
                raise DomainError(f"support {rect} is not inside the box {tuple(box)}")
            coef = float(coef)
            if not math.isfinite(coef):
                raise DomainError("coefficients must be finite")
            if coef != 0.0 and not rect.is_empty:
                terms.append((coef, rect))
        for i in range(len(terms)):
            for j in range(i + 1, len(terms)):
                if not terms[i][1].intersect(terms[j][1]).is_empty:
                    raise DomainError(f"supports {terms[i][1]} and {terms[j][1]} overlap")
        object.__setattr__(self, "terms", tuple(terms))
        object.__setattr__(self, "box", box)

    # construction -----------------------------------------------------------

    @classmethod
    def constant(cls, value: float, box) -> "SimpleFunction":
        box = check_box(box)
        return cls(((value, Rect.from_origin(box)),), box)

    @classmethod
    def indicator(cls, rect: Rect, box, value: float = 1.0) -> "SimpleFunction":
        return cls(((value, rect),), box)

    @classmethod
    def zero(cls, box) -> "SimpleFunction":
        return cls((), box)

    @classmethod
    def from_grid(cls, axes: Sequence[np.ndarray], values: np.ndarray, box) -> "SimpleFunction":
        """One term per nonzero cell of a breakpoint grid."""
        axes = [np.asarray(a, dtype=float) for a in axes]
        values = np.asarray(values, dtype=float)
        terms = []
        for idx in zip(*np.nonzero(values)):
            lo = tuple(a[i] for a, i in zip(axes, idx))
            hi = tuple(a[i + 1] for a, i in zip(axes, idx))
            terms.append((values[idx], Rect(lo, hi)))
        return cls(tuple(terms), box)

    @classmethod
    def from_callable(cls, func, grid: EvalGrid) -> "SimpleFunction":
        """Midpoint sampling of ``func`` (vectorized over ``(N, d)`` points) on ``grid``."""
        vals = np.asarray(func(grid.midpoints()), dtype=float).reshape(grid.shape)
        return cls.from_grid(grid.axes, vals, grid.box)

    # basic properties ---------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms], dtype=float)

    def is_zero(self) -> bool:
        return not self.terms

    def __call__(self, x) -> float:
        return float(self.evaluate(np.asarray(x, dtype=float).reshape(1, self.dim))[0])

    def evaluate(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float).reshape(-1, self.dim)
        out = np.zeros(xs.shape[0])
        for coef, rect in self.terms:
            out[rect.contains_many(xs)] += coef
        return out

    def term_arrays(self):
        """``(coef, lo, hi)`` as arrays of shapes ``(J,)``, ``(J, d)``, ``(J, d)``."""
        J = len(self.terms)
        coef = np.empty(J)
        lo = np.empty((J, self.dim))
        hi = np.empty((J, self.dim))
        for j, (c, r) in enumerate(self.terms):
            coef[j] = c
            lo[j] = r.lo
            hi[j] = r.hi
        return coef, lo, hi

    # algebra ------------------------------------------------------------------

    def breakpoints(self) -> list[np.ndarray]:
        return common_breakpoints([self])

    def to_grid(self, axes: Sequence[np.ndarray] | None = None) -> tuple[list[np.ndarray], np.ndarray]:
        """Cell values on ``axes`` (which must contain every term edge)."""
        axes = self.breakpoints() if axes is None else [np.asarray(a, float) for a in axes]
        values = np.zeros(tuple(a.size - 1 for a in axes))
        for coef, rect in self.terms:
            sl = []
            for a, lo, hi in zip(axes, rect.lo, rect.hi):
                i0 = int(np.searchsorted(a, lo))
                i1 = int(np.searchsorted(a, hi))
                if a[i0] != lo or a[i1] != hi:
                    raise StructuralError("grid does not contain the term breakpoints")
                sl.append(slice(i0, i1))
            values[tuple(sl)] += coef
        return axes, values

    def scale(self, c: float) -> "SimpleFunction":
        return SimpleFunction(tuple((c * a, r) for a, r in self.terms), self.box)

    def __mul__(self, other):
        if isinstance(other, SimpleFunction):
            return multiply(self, other)
        return self.scale(float(other))

    __rmul__ = __mul__

    def __add__(self, other: "SimpleFunction") -> "SimpleFunction":
        return linear_combination([self, other], [1.0, 1.0])

    def __sub__(self, other: "SimpleFunction") -> "SimpleFunction":
        return linear_combination([self, other], [1.0, -1.0])

    def __neg__(self):
        return self.scale(-1.0)

    # text form ----------------------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for c, r in self.terms:
            nums = [c, *r.lo, *r.hi]
            lines.append(" ".join(format(v, ".17g") for v in nums))
        return "\n".join(lines) + ("\n" if lines else "")


def _same_box(fs: Sequence[SimpleFunction]) -> ParamPoint:
    box = fs[0].box
    for f in fs[1:]:
        if f.box != box:
            raise StructuralError(f"boxes differ: {tuple(box)} vs {tuple(f.box)}")
    return box


def common_breakpoints(fs: Sequence[SimpleFunction], extra: Iterable | None = None) -> list[np.ndarray]:
    """Sorted per-axis breakpoints covering every term edge of every ``f``."""
    box = _same_box(fs)
    per_axis = [{0.0, T} for T in box]
    for f in fs:
        for _, r in f.terms:
            for i in range(box.dim):
                per_axis[i].add(r.lo[i])
                per_axis[i].add(r.hi[i])
    if extra is not None:
        for p in extra:
            for i, v in enumerate(p):
                per_axis[i].add(float(v))
    return [np.array(sorted(s)) for s in per_axis]


def linear_combination(fs: Sequence[SimpleFunction], coeffs: Sequence[float]) -> SimpleFunction:
    """``sum_i a_i f_i`` on the common refinement (zero cells pruned)."""
    if len(fs) != len(coeffs):
        raise StructuralError("need one coefficient per function")
    box = _same_box(fs)
    axes = common_breakpoints(fs)
    total = np.zeros(tuple(a.size - 1 for a in axes))
    for f, a in zip(fs, coeffs):
        total += float(a) * f.to_grid(axes)[1]
    return SimpleFunction.from_grid(axes, total, box)


def multiply(f: SimpleFunction, g: SimpleFunction) -> SimpleFunction:
    box = _same_box([f, g])
    axes = common_breakpoints([f, g])
    return SimpleFunction.from_grid(axes, f.to_grid(axes)[1] * g.to_grid(axes)[1], box)


def lp_norm(f: SimpleFunction, p: float) -> float:
    """Exact ``(sum_j |c_j|^p vol(A_j))^(1/p)``."""
    if not p >= 1:
        raise DomainError(f"p must be >= 1, got {p}")
    s = math.fsum(abs(c) ** p * r.volume for c, r in f.terms)
    return s ** (1.0 / p)


def sq_norm(f: SimpleFunction) -> float:
    """``int f^2`` without the square-root round trip."""
    return math.fsum(c * c * r.volume for c, r in f.terms)


def indicator_combo(coeffs: Sequence[float], corners: Sequence, box=None) -> SimpleFunction:
    """Canonical refinement of ``sum_j a_j 1_{[0, t^j]}``.

    The box defaults to the componentwise maximum of the corners.
    """
    if len(coeffs) != len(corners):
        raise StructuralError("coeffs and corners must have equal length")
    if not corners:
        raise StructuralError("need at least one corner")
    pts = [as_point(t) for t in corners]
    d = pts[0].dim
    if any(p.dim != d for p in pts):
        raise StructuralError("corners have different dimensions")
    if box is None:
        box = ParamPoint(max(p[i] for p in pts) for i in range(d))
    box = check_box(box, d)
    for p in pts:
        if any(v > b for v, b in zip(p, box)):
            raise DomainError(f"corner {tuple(p)} is outside the box {tuple(box)}")
    axes = [np.array(sorted({0.0, box[i], *(p[i] for p in pts)})) for i in range(d)]
    values = np.zeros(tuple(a.size - 1 for a in axes))
    for a, p in zip(coeffs, pts):
        # cell (b_k, b_{k+1}] lies in [0, t] iff b_{k+1} <= t_i on every axis
        sl = tuple(slice(0, int(np.searchsorted(ax, p[i], side="right")) - 1)
                   for i, ax in enumerate(axes))
        values[sl] += float(a)
    return SimpleFunction.from_grid(axes, values, box)


def restrict(f: SimpleFunction, r: Rect) -> SimpleFunction:
    """``f * 1_r`` computed by intersecting supports."""
    if r.dim != f.dim:
        raise StructuralError(f"dimension mismatch: {r.dim} vs {f.dim}")
    if not r.inside(f.box):
        raise DomainError(f"{r} is not inside the box {tuple(f.box)}")
    return SimpleFunction(tuple((c, a.intersect(r)) for c, a in f.terms), f.box)


def parse_terms(text: str, box) -> SimpleFunction:
    """Read ``coeff lo_1 .. lo_d hi_1 .. hi_d`` lines (``#`` starts a comment)."""
    box = check_box(box)
    d = box.dim
    terms = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 1 + 2 * d:
            raise StructuralError(f"line {lineno}: expected {1 + 2 * d} numbers, got {len(parts)}")
        try:
            nums = [float(v) for v in parts]
        except ValueError:
            raise StructuralError(f"line {lineno}: not a number in {line!r}") from None
        terms.append((nums[0], Rect(nums[1:1 + d], nums[1 + d:])))
    return SimpleFunction(tuple(terms), box)
