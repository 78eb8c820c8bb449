"""Verification battery: moments, goodness of fit, Cramér-Wold, bound scans.

Monte Carlo tolerances and n-grids used with these tools are engineering
choices; the underlying limit theorems give no rates.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DomainError
from .geometry import as_point
from .integrands import SimpleFunction, indicator_combo, lp_norm, multiply, sq_norm
from .montecarlo import Family, simulate, stream_label
from .streams import InnovationLaw
from .wiener import limit_moment

MIN_MOMENT_REPS = 100
MIN_GOF_REPS = 1000
ECF_FREQUENCIES = np.linspace(0.25, 4.0, 16)


def _check_even(ms):
    for m in ms:
        if int(m) != m or m < 2 or m % 2:
            raise DomainError(f"moment orders must be even integers >= 2, got {m}")


# moments ----------------------------------------------------------------------

@dataclass(frozen=True)
class MomentRow:
    n: int | None
    m: int
    estimate: float
    se: float
    target: float
    z: float


@dataclass(frozen=True)
class MomentReport:
    rows: tuple

    def row(self, m: int, n=None) -> MomentRow:
        for r in self.rows:
            if r.m == m and (n is None or r.n == n):
                return r
        raise KeyError((m, n))


def _zscore(est: float, target: float, se: float) -> float:
    if se > 0:
        return (est - target) / se
    return 0.0 if est == target else math.copysign(math.inf, est - target)


def empirical_moments(samples, ms, sigma2_target: float, n=None) -> MomentReport:
    """Plug-in ``E|X|^m`` with standard errors ``sd(|X|^m) / sqrt(N)``.

    Targets come from :func:`~sheetapprox.wiener.limit_moment`.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < MIN_MOMENT_REPS:
        raise DomainError(f"need at least {MIN_MOMENT_REPS} replicates, got {x.size}")
    _check_even(ms)
    rows = []
    ax = np.abs(x)
    for m in ms:
        y = ax ** int(m)
        est = float(np.mean(y))
        se = float(np.std(y, ddof=1) / math.sqrt(y.size))
        target = limit_moment(int(m), sigma2_target)
        if target > 0 and se > 0.1 * target:
            warnings.warn(f"standard error of the order-{m} moment exceeds 10% of its target; "
                          "increase reps", RuntimeWarning, stacklevel=2)
        rows.append(MomentRow(n, int(m), est, se, target, _zscore(est, target, se)))
    return MomentReport(tuple(rows))


# goodness of fit ------------------------------------------------------------

@dataclass(frozen=True)
class GofReport:
    test: str
    statistic: float
    threshold: float
    reject: bool
    size: int
    alpha: float
    variance: float = float("nan")


def ks_threshold(size: int, alpha: float = 0.01) -> float:
    """Asymptotic one-sample KS critical value ``K_{1-alpha} / sqrt(size)``."""
    return float(stats.kstwobign.ppf(1.0 - alpha) / math.sqrt(size))


def _check_gof_samples(samples, sigma2):
    x = np.asarray(samples, dtype=float).ravel()
    if not sigma2 > 0:
        raise DomainError(f"sigma2 must be > 0, got {sigma2}")
    if x.size < MIN_GOF_REPS:
        raise DomainError(f"need at least {MIN_GOF_REPS} samples, got {x.size}")
    if not np.all(np.isfinite(x)) or np.ptp(x) == 0.0:
        raise DomainError("samples are degenerate (constant or non-finite)")
    return x


def ks_test(samples, sigma2: float, alpha: float = 0.01) -> GofReport:
    """KS test of ``samples`` against ``N(0, sigma2)``."""
    x = _check_gof_samples(samples, sigma2)
    stat = float(stats.kstest(x / math.sqrt(sigma2), "norm").statistic)
    thr = ks_threshold(x.size, alpha)
    return GofReport("KS", stat, thr, stat > thr, int(x.size), alpha, float(sigma2))


def ecf_test(samples, sigma2: float, alpha: float = 0.01) -> GofReport:
    """Sup distance between empirical and Gaussian characteristic functions.

    Evaluated at 16 fixed frequencies scaled by ``1/sigma``.  The threshold is a
    Hoeffding union bound, so the test is conservative; it is a secondary,
    report-only statistic.
    """
    x = _check_gof_samples(samples, sigma2)
    w = ECF_FREQUENCIES / math.sqrt(sigma2)
    phase = np.outer(x, w)
    emp = np.mean(np.cos(phase), axis=0) + 1j * np.mean(np.sin(phase), axis=0)
    ref = np.exp(-0.5 * sigma2 * w**2)
    stat = float(np.max(np.abs(emp - ref)))
    thr = 2.0 * math.sqrt(math.log(4 * ECF_FREQUENCIES.size / alpha) / x.size)
    return GofReport("ECF", stat, thr, stat > thr, int(x.size), alpha, float(sigma2))


def cramer_wold_integrand(f: SimpleFunction, corners, coeffs) -> SimpleFunction:
    """``f * sum_j a_j 1_{[0, t^j]}`` as a single simple function."""
    return multiply(f, indicator_combo(coeffs, corners, box=f.box))


def cramer_wold_check(family, f: SimpleFunction, corners, coeffs, n: int, reps: int, seed: int, *,
                      law=InnovationLaw.RADEMACHER, alpha: float = 0.01, workers: int = 1,
                      experiment: int = 0, backend=None) -> GofReport:
    """KS test of ``sum_j a_j X_n(t^j)`` against its Gaussian limit.

    The limit variance is ``int (f sum_j a_j 1_{[0,t^j]})^2``, computed exactly.
    """
    if len(corners) > 8:
        raise DomainError("at most 8 corners are supported")
    for t in corners:
        t = as_point(t, f.dim)
        if any(v > b for v, b in zip(t, f.box)):
            raise DomainError(f"corner {tuple(t)} lies outside the box {tuple(f.box)}")
    g = cramer_wold_integrand(f, corners, coeffs)
    var = sq_norm(g)
    if var == 0.0:
        raise DomainError("degenerate configuration: the combination has zero variance")
    fam = Family.parse(family)
    x = simulate(fam, [g], n, reps, seed, law=law, workers=workers, backend=backend,
                 label=stream_label(fam, n, experiment))[:, 0]
    return ks_test(x, var, alpha)


# bound-constant scan ----------------------------------------------------------

@dataclass(frozen=True)
class BoundConstantReport:
    family: str
    q: float
    m: int
    n_grid: tuple
    ratios: tuple
    ses: tuple
    max_ratio: float
    slope: float
    slope_se: float
    gated: bool = True
    notes: str = ""

    @property
    def z(self) -> float:
        return _zscore(self.slope, 0.0, self.slope_se)

    @property
    def noise_band(self) -> float:
        return 3.0 * self.slope_se

    @property
    def passed(self) -> bool:
        return self.z < 3.0


def weighted_slope(x, y, se):
    """Weighted least-squares slope of ``y`` on ``x`` and its standard error."""
    x, y, se = (np.asarray(v, dtype=float) for v in (x, y, se))
    w = 1.0 / np.maximum(se, 1e-300) ** 2
    xb = np.sum(w * x) / np.sum(w)
    yb = np.sum(w * y) / np.sum(w)
    sxx = np.sum(w * (x - xb) ** 2)
    slope = float(np.sum(w * (x - xb) * (y - yb)) / sxx)
    return slope, float(1.0 / math.sqrt(sxx))


def bound_constant_scan(family, g: SimpleFunction, q: float, m: int, n_grid, reps: int, seed: int, *,
                        law=InnovationLaw.RADEMACHER, workers: int = 1, experiment: int = 0,
                        backend=None) -> BoundConstantReport:
    """Empirical constant in ``E[(int g theta_n)^m] <= C (int |g|^{2q})^{m/(2q)}``.

    Reports the ratio per ``n``, its maximum and the slope of ``log ratio``
    against ``log n``.  The Kac-Stroock scan with ``q = 1`` and ``d >= 2`` is
    outside the proven range and is marked as not gated.
    """
    fam = Family.parse(family)
    if not q >= 1:
        raise DomainError(f"q must be >= 1, got {q}")
    _check_even([m])
    if not m > 2 * q:
        raise DomainError(f"m must exceed 2q, got m={m}, q={q}")
    n_grid = tuple(int(n) for n in n_grid)
    if len(n_grid) < 2 or any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise DomainError("n_grid must hold at least two strictly increasing values")
    norm = lp_norm(g, 2 * q)
    if norm == 0.0:
        raise DomainError("g has zero norm")
    denom = norm ** m
    ratios, ses = [], []
    for n in n_grid:
        x = simulate(fam, [g], n, reps, seed, law=law, workers=workers, backend=backend,
                     label=stream_label(fam, n, experiment))[:, 0]
        y = x ** int(m)
        ratios.append(float(np.mean(y)) / denom)
        ses.append(float(np.std(y, ddof=1) / math.sqrt(y.size)) / denom)
    r = np.asarray(ratios)
    slope, slope_se = weighted_slope(np.log(n_grid), np.log(r), np.asarray(ses) / r)
    gated = not (fam is Family.KAC_STROOCK and q == 1 and g.dim >= 2)
    notes = "" if gated else "q=1 with d>=2 is outside the proven range; report only"
    return BoundConstantReport(fam.value, float(q), int(m), n_grid, tuple(ratios), tuple(ses),
                               float(r.max()), slope, slope_se, gated, notes)


# lattice covariance -------------------------------------------------------------

def _floor_scaled(n: int, v: float) -> int:
    x = n * v
    r = round(x)
    return int(r) if abs(x - r) <= 1e-12 * max(1.0, abs(x)) else math.floor(x)


def lattice_covariance_limit(coeffs, corners, n: int) -> tuple[float, float]:
    """``n^{-d} sum_{s <= [nT]} a_n(s)^2`` and its limit ``sum a_i a_j prod_l (t^i_l ∧ t^j_l)``.

    ``a_n(s) = sum_j a_j 1_{[0, [n t^j]]}(s)`` over ``s`` in ``N^d``; the
    finite sum factorizes into per-axis lattice counts ``min([n t^i_l], [n t^j_l])``.
    """
    pts = [as_point(t) for t in corners]
    if len(pts) != len(coeffs):
        raise DomainError("coeffs and corners must have equal length")
    if any(v <= 0 for p in pts for v in p):
        raise DomainError("corners must be strictly positive")
    a = np.asarray(coeffs, dtype=float)
    m = len(pts)
    finite = []
    limit = []
    for i in range(m):
        for j in range(m):
            w = a[i] * a[j]
            finite.append(w * math.prod(min(_floor_scaled(n, x), _floor_scaled(n, y)) / n
                                        for x, y in zip(pts[i], pts[j])))
            limit.append(w * math.prod(min(x, y) for x, y in zip(pts[i], pts[j])))
    return math.fsum(finite), math.fsum(limit)
