"""Experiment orchestration: run the selected experiments, write CSVs and a manifest.

Every experiment draws from its own substream family (``experiment`` index in
:func:`~sheetapprox.montecarlo.stream_label`), so adding or removing experiments
from a config never changes the numbers produced by the others.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .. import __version__
from ..donsker import rn_appendix_bound, rn_second_moment
from ..errors import DomainError, ResourceError
from ..geometry import Rect
from ..integrands import restrict, sq_norm
from ..montecarlo import Family, simulate, stream_label
from ..statlab import (bound_constant_scan, cramer_wold_check, cramer_wold_integrand,
                       ecf_test, empirical_moments,
                       ks_test, lattice_covariance_limit)
from ..streams import StreamKey
from .config import ExperimentConfig

EXIT_OK = 0
EXIT_GATE = 2
EXIT_USAGE = 3
EXIT_RESOURCE = 4

# experiment index -> stream family; fixed forever for reproducibility
EXPERIMENT_IDS = {"simulate": 0, "moments": 1, "gof": 2, "cramer-wold": 3, "bound-scan": 4,
                  "appendix-checks": 5, "rn-decay": 6}

CSV_HEADERS = {
    "simulate": ("n", "rep", "value"),
    "moments": ("n", "m", "estimate", "se", "target", "z"),
    "gof": ("n", "test", "statistic", "threshold", "reject", "size"),
    "cramer-wold": ("combo", "k", "coeffs", "corners", "variance", "statistic", "threshold",
                    "reject"),
    "bound-scan": ("m", "n", "ratio", "se"),
    "appendix-checks": ("config", "n", "finite", "limit", "rel_err"),
    "rn-decay": ("point", "t", "n", "second_moment", "bound", "envelope"),
}


def fmt(v) -> str:
    """CSV cell rendering: reals with 17 significant digits."""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (tuple, list)):
        return " ".join(fmt(x) for x in v)
    return str(v)


def render_csv(header, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue().encode()


@dataclass
class ExperimentResult:
    name: str
    status: str  # "pass", "fail", "report"
    rows: list
    summary: dict = field(default_factory=dict)
    seconds: float = 0.0


@dataclass
class RunManifest:
    config_hash: str
    version: str
    seed: int
    experiments: dict = field(default_factory=dict)
    digests: dict = field(default_factory=dict)
    wall_clock: float = 0.0

    @property
    def exit_code(self) -> int:
        bad = any(e["status"] == "fail" for e in self.experiments.values())
        return EXIT_GATE if bad else EXIT_OK

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=float)


# helpers ------------------------------------------------------------------------

def _target_integrand(cfg: ExperimentConfig):
    """``f 1_{[0, t]}`` for the configured evaluation point, and its squared norm."""
    f = cfg.integrand
    g = restrict(f, Rect.from_origin(cfg.point))
    return g, sq_norm(g)


def _samples(cfg, g, n, experiment, reps=None):
    return simulate(cfg.kernel, [g], n, reps or cfg.reps, cfg.seed, law=cfg.law,
                    label=stream_label(cfg.kernel, n, EXPERIMENT_IDS[experiment]),
                    workers=cfg.workers, block=cfg.block, budget=cfg.lattice_budget)[:, 0]


# experiments ------------------------------------------------------------------------

def run_simulate(cfg: ExperimentConfig) -> ExperimentResult:
    g, _ = _target_integrand(cfg)
    rows = []
    for n in cfg.n_grid:
        x = _samples(cfg, g, n, "simulate")
        rows.extend((n, i, v) for i, v in enumerate(x))
    return ExperimentResult("simulate", "report", rows)


def run_moments(cfg: ExperimentConfig) -> ExperimentResult:
    g, var = _target_integrand(cfg)
    rows, last, centered = [], None, {}
    for n in cfg.n_grid:
        x = _samples(cfg, g, n, "moments")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            rep = empirical_moments(x, cfg.m, var, n=n)
        rows.extend((r.n, r.m, r.estimate, r.se, r.target, r.z) for r in rep.rows)
        centered[n] = float(np.var(x, ddof=1))
        last = rep
    checks = []
    for r in last.rows:
        tol = max(3.0 * r.se, 0.05 * r.target)
        checks.append({"m": r.m, "n": r.n, "estimate": r.estimate, "target": r.target,
                       "se": r.se, "tolerance": tol, "ok": abs(r.estimate - r.target) <= tol})
    ok = all(c["ok"] for c in checks)
    summary = {"gate": "|estimate - target| <= max(3 SE, 5% target) at the largest n",
               "checks": checks, "variance_target": var,
               "centered_variance": {str(k): v for k, v in centered.items()}}
    return ExperimentResult("moments", "pass" if ok else "fail", rows, summary)


def run_gof(cfg: ExperimentConfig) -> ExperimentResult:
    g, var = _target_integrand(cfg)
    rows, final = [], None
    for n in cfg.n_grid:
        x = _samples(cfg, g, n, "gof")
        ks = ks_test(x, var, cfg.alpha)
        ecf = ecf_test(x, var, cfg.alpha)
        rows.append((n, ks.test, ks.statistic, ks.threshold, ks.reject, ks.size))
        rows.append((n, ecf.test, ecf.statistic, ecf.threshold, ecf.reject, ecf.size))
        final = ks
    summary = {"gate": "KS does not reject at the largest n; ECF is reported only",
               "n": cfg.n_grid[-1], "statistic": final.statistic, "threshold": final.threshold}
    return ExperimentResult("gof", "fail" if final.reject else "pass", rows, summary)


def random_combinations(cfg: ExperimentConfig, count: int, max_corners: int):
    """Seeded random Cramér-Wold configurations ``(coeffs, corners)``.

    Corners are uniform in ``[0.2 T, T]``; coefficients are standard normal.
    Configurations with a vanishing limit variance are redrawn.
    """
    rng = StreamKey(cfg.seed, 0, stream_label(cfg.kernel, 0, EXPERIMENT_IDS["cramer-wold"])
                    ).generator()
    T = np.asarray(cfg.box)
    f = cfg.integrand
    if sq_norm(f) == 0.0:
        raise DomainError("the integrand vanishes; every combination is degenerate")
    out = []
    while len(out) < count:
        k = int(rng.integers(1, max_corners + 1))
        corners = [tuple(float(v) for v in T * rng.uniform(0.2, 1.0, T.size)) for _ in range(k)]
        coeffs = [float(a) for a in rng.standard_normal(k)]
        if sq_norm(cramer_wold_integrand(f, corners, coeffs)) < 1e-12:
            continue
        out.append((coeffs, corners))
    return out


def run_cramer_wold(cfg: ExperimentConfig) -> ExperimentResult:
    f = cfg.integrand
    n = cfg.n_grid[-1]
    rows, rejections = [], 0
    for i, (coeffs, corners) in enumerate(random_combinations(cfg, cfg.cw_combos, cfg.cw_corners)):
        rep = cramer_wold_check(cfg.kernel, f, corners, coeffs, n, cfg.reps, cfg.seed, law=cfg.law,
                                alpha=cfg.alpha, workers=cfg.workers,
                                experiment=EXPERIMENT_IDS["cramer-wold"] * 1000 + i)
        rejections += rep.reject
        rows.append((i, len(coeffs), tuple(coeffs), ";".join(fmt(c) for c in corners),
                     rep.variance, rep.statistic, rep.threshold, rep.reject))
    allowed = int(stats.binom.ppf(0.99, cfg.cw_combos, cfg.alpha))
    summary = {"gate": "rejections <= 99% binomial quantile", "n": n, "rejections": rejections,
               "allowed": allowed}
    return ExperimentResult("cramer-wold", "pass" if rejections <= allowed else "fail", rows,
                            summary)


def run_bound_scan(cfg: ExperimentConfig) -> ExperimentResult:
    g = cfg.integrand
    rows, scans = [], []
    for m in cfg.m:
        if not m > 2 * cfg.q:
            continue
        rep = bound_constant_scan(cfg.kernel, g, cfg.q, m, cfg.n_grid, cfg.reps, cfg.seed,
                                  law=cfg.law, workers=cfg.workers,
                                  experiment=EXPERIMENT_IDS["bound-scan"] * 1000 + m)
        rows.extend((m, n, r, s) for n, r, s in zip(rep.n_grid, rep.ratios, rep.ses))
        scans.append({"m": m, "max_ratio": rep.max_ratio, "slope": rep.slope,
                      "slope_se": rep.slope_se, "z": rep.z, "gated": rep.gated,
                      "passed": rep.passed, "notes": rep.notes})
    failed = any(s["gated"] and not s["passed"] for s in scans)
    gated = any(s["gated"] for s in scans)
    status = "fail" if failed else ("pass" if gated else "report")
    summary = {"gate": "slope of log ratio on log n has z < 3", "scans": scans}
    return ExperimentResult("bound-scan", status, rows, summary)


def random_lattice_configs(seed: int, count: int, max_dim: int = 2, max_corners: int = 3):
    rng = StreamKey(seed, 0, stream_label(Family.DONSKER, 0, EXPERIMENT_IDS["appendix-checks"])
                    ).generator()
    out = []
    while len(out) < count:
        d = int(rng.integers(1, max_dim + 1))
        k = int(rng.integers(1, max_corners + 1))
        corners = [tuple(float(v) for v in rng.uniform(0.2, 1.0, d)) for _ in range(k)]
        coeffs = [float(a) for a in rng.standard_normal(k)]
        if abs(lattice_covariance_limit(coeffs, corners, 1)[1]) < 1e-3:
            continue
        out.append((coeffs, corners))
    return out


def run_appendix_checks(cfg: ExperimentConfig) -> ExperimentResult:
    rows, worst = [], 0.0
    nmax = max(cfg.appendix_n)
    for i, (coeffs, corners) in enumerate(random_lattice_configs(cfg.seed, cfg.appendix_configs)):
        for n in cfg.appendix_n:
            fin, lim = lattice_covariance_limit(coeffs, corners, n)
            rel = abs(fin - lim) / abs(lim)
            rows.append((i, n, fin, lim, rel))
            if n == nmax:
                worst = max(worst, rel)
    ok = worst <= 0.01
    summary = {"gate": "relative error <= 1% at the largest n", "n": nmax, "worst": worst}
    return ExperimentResult("appendix-checks", "pass" if ok else "fail", rows, summary)


def rn_envelope(n: int, t) -> float:
    """Decreasing majorant ``sum_i (1/n) prod_{j != i} (t_j + 1/n)`` of ``E R_n^2``."""
    d = len(t)
    return sum(math.prod(t[j] + 1.0 / n for j in range(d) if j != i) / n for i in range(d))


def random_points(seed: int, T, count: int):
    rng = StreamKey(seed, 0, stream_label(Family.DONSKER, 0, EXPERIMENT_IDS["rn-decay"])
                    ).generator()
    T = np.asarray(T, dtype=float)
    return [tuple(float(v) for v in T * rng.uniform(0.05, 1.0, T.size)) for _ in range(count)]


def run_rn_decay(cfg: ExperimentConfig) -> ExperimentResult:
    rows, bound_ok, env_ok = [], True, True
    last = []
    for i, t in enumerate(random_points(cfg.seed, cfg.box, cfg.rn_points)):
        for n in cfg.rn_n:
            v = rn_second_moment(n, t, cfg.box)
            b = rn_appendix_bound(n, t, cfg.box) if n * min(t) >= 1 else math.nan
            e = rn_envelope(n, t)
            if not math.isnan(b) and v > b * (1 + 1e-12):
                bound_ok = False
            if v > e * (1 + 1e-12):
                env_ok = False
            rows.append((i, t, n, v, b, e))
        last.append(rn_envelope(max(cfg.rn_n), t))
    ok = bound_ok and env_ok
    summary = {"gate": "bound holds where n t_j >= 1; E R_n^2 below a decreasing envelope",
               "bound_ok": bound_ok, "envelope_ok": env_ok, "max_final_envelope": max(last)}
    return ExperimentResult("rn-decay", "pass" if ok else "fail", rows, summary)


RUNNERS = {
    "simulate": run_simulate,
    "moments": run_moments,
    "gof": run_gof,
    "cramer-wold": run_cramer_wold,
    "bound-scan": run_bound_scan,
    "appendix-checks": run_appendix_checks,
    "rn-decay": run_rn_decay,
}


def run_suite(cfg: ExperimentConfig, out: str | Path | None = None) -> RunManifest:
    """Run ``cfg.experiments``, write ``<name>.csv`` per experiment and ``manifest.json``."""
    out = Path(out if out is not None else cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ResourceError(f"cannot create output directory {out}: {exc}") from None
    manifest = RunManifest(cfg.digest(), __version__, cfg.seed)
    t0 = time.perf_counter()
    for name in cfg.experiments:
        start = time.perf_counter()
        res = RUNNERS[name](cfg)
        res.seconds = time.perf_counter() - start
        data = render_csv(CSV_HEADERS[name], res.rows)
        fname = f"{name}.csv"
        try:
            (out / fname).write_bytes(data)
        except OSError as exc:
            raise ResourceError(f"cannot write {out / fname}: {exc}") from None
        manifest.digests[fname] = hashlib.sha256(data).hexdigest()
        manifest.experiments[name] = {"status": res.status, "seconds": res.seconds,
                                      "rows": len(res.rows), "summary": res.summary}
    manifest.wall_clock = time.perf_counter() - t0
    (out / "manifest.json").write_text(manifest.to_json() + "\n")
    return manifest
