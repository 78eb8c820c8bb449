"""Reference samples of the limit ``X(t) = int_{[0,t]} f dW`` (Brownian sheet)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError
from .geometry import Rect, as_point, meet
from .integrands import SimpleFunction, restrict, sq_norm
from .streams import LABEL_GAUSSIAN, StreamKey

JITTER_LADDER = (0.0, 1e-14, 1e-12, 1e-10)


@dataclass(frozen=True)
class FddSpec:
    f: SimpleFunction
    points: tuple

    def __post_init__(self):
        pts = tuple(as_point(t, self.f.dim) for t in self.points)
        if not pts:
            raise DomainError("at least one evaluation point is required")
        for t in pts:
            if any(v > b for v, b in zip(t, self.f.box)):
                raise DomainError(f"{tuple(t)} lies outside the box {tuple(self.f.box)}")
        object.__setattr__(self, "points", pts)


def covariance(spec: FddSpec) -> np.ndarray:
    """``C_ij = int_{[0, t^i ∧ t^j]} f^2``."""
    k = len(spec.points)
    C = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            r = Rect.from_origin(meet(spec.points[i], spec.points[j]))
            C[i, j] = C[j, i] = sq_norm(restrict(spec.f, r))
    return C


def factorize(C: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, adding ``eps * trace / k`` along the jitter ladder."""
    k = C.shape[0]
    scale = np.trace(C) / k
    for eps in JITTER_LADDER:
        try:
            return np.linalg.cholesky(C + eps * scale * np.eye(k))
        except np.linalg.LinAlgError:
            continue
    # a zero matrix (f = 0) has no Cholesky factor but a trivial one
    if scale == 0.0:
        return np.zeros_like(C)
    raise NumericError("covariance is not positive semidefinite within the jitter ladder")


def sample_fdd(spec: FddSpec, key: StreamKey, reps: int) -> np.ndarray:
    """``reps`` i.i.d. rows of ``(X(t^1), ..., X(t^k))``."""
    C = covariance(spec)
    L = factorize(C)
    rng = key.with_label(LABEL_GAUSSIAN if key.label == 0 else key.label).generator()
    Z = rng.standard_normal((int(reps), C.shape[0]))
    return Z @ L.T


def limit_moment(m: int, sigma2: float) -> float:
    """``m! / (2^{m/2} (m/2)!) * sigma2^{m/2}`` for even ``m``."""
    if int(m) != m or m < 2 or m % 2:
        raise DomainError(f"m must be an even integer >= 2, got {m}")
    if sigma2 < 0:
        raise DomainError("sigma2 must be >= 0")
    m = int(m)
    return math.factorial(m) / (2 ** (m // 2) * math.factorial(m // 2)) * sigma2 ** (m // 2)
