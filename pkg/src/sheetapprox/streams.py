"""Reproducible randomness: innovation lattices, Poisson sheets, keyed streams.

Every sampler is a pure function of its parameters and a :class:`StreamKey`.
Streams are derived by hashing the ``(seed, replicate, label)`` triple through
:class:`numpy.random.SeedSequence` into a Philox counter-based generator, so
replicate ``r`` never depends on how many replicates were drawn before it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DomainError, ResourceError
from .geometry import MultiIndex, ParamPoint, as_point, check_box

DEFAULT_LATTICE_BUDGET = 10**8
SEED_MAX = 2**64 - 1

# substream labels
LABEL_LATTICE = 1
LABEL_POISSON = 2
LABEL_GAUSSIAN = 3
LABEL_PARITY = 4


class InnovationLaw(str, Enum):
    """Centered, unit-variance laws for the lattice innovations ``Z_k``."""

    RADEMACHER = "rademacher"
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"

    @classmethod
    def parse(cls, value) -> "InnovationLaw":
        if isinstance(value, cls):
            return value
        aliases = {"standardgaussian": "gaussian", "normal": "gaussian",
                   "centereduniform": "uniform"}
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise DomainError(f"unknown innovation law {value!r}") from None

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self is InnovationLaw.RADEMACHER:
            return rng.integers(0, 2, size=size, dtype=np.int8).astype(float) * 2.0 - 1.0
        if self is InnovationLaw.GAUSSIAN:
            return rng.standard_normal(size)
        return rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size)

    def moment(self, m: int) -> float:
        """Closed-form ``E[Z^m]`` (odd moments vanish)."""
        if m % 2:
            return 0.0
        if self is InnovationLaw.RADEMACHER:
            return 1.0
        if self is InnovationLaw.GAUSSIAN:
            return float(math.prod(range(m - 1, 0, -2)))
        return 3.0 ** (m / 2) / (m + 1)


@dataclass(frozen=True)
class StreamKey:
    """Address of an independent random stream."""

    seed: int
    replicate: int = 0
    label: int = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) <= SEED_MAX:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if int(self.replicate) < 0 or int(self.label) < 0:
            raise DomainError("replicate and label must be nonnegative")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.replicate), int(self.label)))
        return np.random.Generator(np.random.Philox(ss))

    def with_label(self, label: int) -> "StreamKey":
        return StreamKey(self.seed, self.replicate, label)

    def with_replicate(self, replicate: int) -> "StreamKey":
        return StreamKey(self.seed, replicate, self.label)


def lattice_shape(n: int, T) -> tuple[int, ...]:
    """Number of lattice cells per axis covering ``[0, nT]``: ``ceil(n T_i)``."""
    # guard against 0.3*10 = 3.0000000000000004 style overshoot
    return tuple(max(1, math.ceil(n * Ti - 1e-12 * max(1.0, n * Ti))) for Ti in T)


def _check_n(n) -> int:
    if int(n) != n or n < 1:
        raise DomainError(f"scaling integer n must be >= 1, got {n}")
    return int(n)


@dataclass(frozen=True, eq=False)
class LatticeField:
    """Realized innovations ``Z_k`` on the lattice covering ``[0, nT]``.

    ``values[k - 1]`` holds ``Z_k``.
    """

    n: int
    T: ParamPoint
    law: InnovationLaw
    values: np.ndarray = field(repr=False)
    key: StreamKey | None = None

    @property
    def dim(self) -> int:
        return self.T.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    def __getitem__(self, k) -> float:
        k = MultiIndex(k)
        return float(self.values[tuple(i - 1 for i in k)])


def sample_lattice_block(n: int, T, law: InnovationLaw, rng: np.random.Generator,
                         reps: int, budget: int = DEFAULT_LATTICE_BUDGET) -> np.ndarray:
    """``reps`` independent lattice fields as an array ``(reps, *lattice_shape)``."""
    shape = lattice_shape(n, T)
    cells = math.prod(shape)
    if cells * reps > budget:
        raise ResourceError(
            f"lattice of {cells} cells x {reps} replicates exceeds budget {budget}",
            required=cells * reps)
    return law.sample(rng, (reps, *shape))


def sample_lattice_field(n: int, T, law=InnovationLaw.RADEMACHER, key: StreamKey | None = None,
                         budget: int = DEFAULT_LATTICE_BUDGET) -> LatticeField:
    n = _check_n(n)
    T = check_box(T)
    law = InnovationLaw.parse(law)
    key = key or StreamKey(0)
    values = sample_lattice_block(n, T, law, key.generator(), 1, budget)[0]
    values.setflags(write=False)
    return LatticeField(n, T, law, values, key)


@dataclass(frozen=True, eq=False)
class PoissonSheet:
    """Point set of a d-parameter Poisson process of intensity ``n`` on ``[0, T]``."""

    n: float
    T: ParamPoint
    points: np.ndarray = field(repr=False)
    key: StreamKey | None = None

    @property
    def dim(self) -> int:
        return self.T.dim

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True, eq=False)
class SheetBatch:
    """Many Poisson sheets packed into one array.

    Sheet ``i`` owns ``points[offsets[i]:offsets[i + 1]]``.
    """

    n: float
    T: ParamPoint
    points: np.ndarray
    offsets: np.ndarray

    def __len__(self):
        return self.offsets.size - 1

    def sheet(self, i: int) -> PoissonSheet:
        return PoissonSheet(self.n, self.T, self.points[self.offsets[i]:self.offsets[i + 1]])

    def counts(self) -> np.ndarray:
        return np.diff(self.offsets)


def sample_sheet_block(n: float, T, rng: np.random.Generator, reps: int) -> SheetBatch:
    """``reps`` independent Poisson sheets drawn from one generator.

    Counts come first (``K ~ Poisson(n * vol)``), then all locations, which
    are i.i.d. uniform on the box.
    """
    T = check_box(T)
    if not n > 0:
        raise DomainError(f"intensity must be > 0, got {n}")
    lam = n * math.prod(T)
    counts = rng.poisson(lam, size=reps)
    total = int(counts.sum())
    points = rng.random((total, T.dim)) * np.asarray(T)
    offsets = np.zeros(reps + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return SheetBatch(float(n), T, points, offsets)


def sample_poisson_sheet(n: float, T, key: StreamKey | None = None) -> PoissonSheet:
    key = key or StreamKey(0)
    batch = sample_sheet_block(n, T, key.generator(), 1)
    pts = batch.points
    pts.setflags(write=False)
    return PoissonSheet(batch.n, batch.T, pts, key)


def count_points(sheet: PoissonSheet, t) -> int:
    """``N(t)``: number of sheet points ``p <= t`` componentwise."""
    t = as_point(t, sheet.dim)
    if any(v > b for v, b in zip(t, sheet.T)):
        raise DomainError(f"{tuple(t)} lies outside the box {tuple(sheet.T)}")
    if len(sheet) == 0:
        return 0
    return int(np.count_nonzero(np.all(sheet.points <= np.asarray(t), axis=1)))


def count_points_batch(batch: SheetBatch, ts: np.ndarray) -> np.ndarray:
    """``N(t^j)`` for every sheet in ``batch`` and every row ``t^j`` of ``ts``.

    Returns an integer array of shape ``(len(batch), len(ts))``.
    """
    ts = np.asarray(ts, dtype=float).reshape(-1, batch.T.dim)
    owner = np.repeat(np.arange(len(batch)), batch.counts())
    out = np.empty((len(batch), ts.shape[0]), dtype=np.int64)
    for j, t in enumerate(ts):
        below = np.all(batch.points <= t, axis=1)
        out[:, j] = np.bincount(owner[below], minlength=len(batch))
    return out
