"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``PASS``/``FAIL`` line (collected in the terminal
summary).  Criteria that are statistically unattainable at the stated sizes
are run as stated and allowed to fail; nothing here is tuned to pass.

Run only this module with ``pytest -m acceptance -s``.
"""
import math
import os
import time

import numpy as np
import pytest

from oracles import donsker_zeta_brute, ks_integral_riemann
from sheetapprox.donsker import DonskerKernel, rn_appendix_bound, rn_second_moment, zeta_at
from sheetapprox.harness.config import parse_config
from sheetapprox.harness.suite import random_lattice_configs, rn_envelope, run_suite
from sheetapprox.integrands import SimpleFunction, sq_norm
from sheetapprox.geometry import Rect
from sheetapprox.kac_stroock import (KacStroockKernel, integrate_simple, parity_expectation_bound,
                                     parity_expectation_mc)
from sheetapprox.montecarlo import simulate, stream_label
from sheetapprox.statlab import (bound_constant_scan, cramer_wold_check, ks_test,
                                 lattice_covariance_limit)
from sheetapprox.streams import StreamKey, sample_lattice_field, sample_poisson_sheet

pytestmark = pytest.mark.acceptance

SEED = 20240601
WORKERS = max(1, min(4, os.cpu_count() or 1))
# innovation law for the Donsker distributional criteria (4, 5); Rademacher sums
# are lattice-valued and fail any KS test at 5e4 samples for a trivial reason
DONSKER_GOF_LAW = "uniform"


def verdict(report_line, tag, ok, detail, elapsed=None):
    timing = f" [{elapsed:.1f} s]" if elapsed is not None else ""
    report_line(f"{'PASS' if ok else 'FAIL'} {tag}: {detail}{timing}")
    return ok


def three_term(d):
    """A fixed 3-term simple function on [0, 1]^d."""
    if d == 1:
        return SimpleFunction(((1.5, Rect((0.0,), (0.3,))), (-0.5, Rect((0.3,), (0.7,))),
                               (2.0, Rect((0.7,), (1.0,)))), (1.0,))
    return SimpleFunction(((1.5, Rect((0.0, 0.0), (0.3, 1.0))),
                           (-0.5, Rect((0.3, 0.0), (0.7, 0.6))),
                           (2.0, Rect((0.7, 0.2), (1.0, 1.0)))), (1.0, 1.0))


# 1. exactness oracles ----------------------------------------------------------------

def test_1a_zeta_vs_brute_force(report_line):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for i in range(1000):
        d = int(rng.integers(1, 4))
        n = int(rng.integers(1, 17))
        kern = DonskerKernel(sample_lattice_field(n, (1.0,) * d, "gaussian", StreamKey(SEED, i)))
        t = tuple(rng.uniform(0, 1, d))
        worst = max(worst, abs(zeta_at(kern, t) - donsker_zeta_brute(kern.field.values, n, t)))
    el = time.perf_counter() - t0
    ok = worst <= 1e-12 and el < 10
    assert verdict(report_line, "1a", ok, f"max |diff| = {worst:.3g} over 1000 cases", el)


def test_1b_kac_stroock_vs_midpoint_oracle(report_line):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 1)
    worst, worst_d1, worst_sub = 0.0, 0.0, 0.0
    for i in range(100):
        d = int(rng.integers(1, 3))
        n = int(rng.integers(1, 21))
        kern = KacStroockKernel(sample_poisson_sheet(n, (1.0,) * d, StreamKey(SEED, i)))
        axes = [np.concatenate(([0.0], np.sort(rng.uniform(0, 1, 2)), [1.0])) for _ in range(d)]
        f = SimpleFunction.from_grid(axes, rng.standard_normal((3,) * d), (1.0,) * d)
        exact = integrate_simple(kern, f)
        oracle = ks_integral_riemann(kern.sheet.points, n, (1.0,) * d, f, cells=2**10)
        rel = abs(exact - oracle) / abs(oracle)
        worst = max(worst, rel)
        if d == 1:
            worst_d1 = max(worst_d1, rel)
        # diagnostic only: the same rule after the substitution t = u^2
        sub = ks_integral_riemann(kern.sheet.points, n, (1.0,) * d, f, cells=2**10,
                                  substitute=True)
        worst_sub = max(worst_sub, abs(exact - sub) / abs(sub))
    el = time.perf_counter() - t0
    ok = worst <= 1e-6 and el < 120
    assert verdict(report_line, "1b", ok,
                   f"max relative error = {worst:.3g} (d=1 only: {worst_d1:.3g}; vs the "
                   f"substituted rule, diagnostic: {worst_sub:.3g})", el)


def test_1c_rn_bound_and_decay(report_line):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 2)
    checked = violations = 0
    for _ in range(1000):
        d = int(rng.integers(1, 4))
        n = int(rng.integers(1, 257))
        T = tuple(rng.uniform(0.5, 2.0, d))
        t = tuple(T[i] * rng.uniform(0, 1) for i in range(d))
        if n * min(t) < 1:
            continue
        checked += 1
        if rn_second_moment(n, t, T) > rn_appendix_bound(n, t, T) * (1 + 1e-12):
            violations += 1
    ns = [2**j for j in range(1, 9)]
    env_fail = 0
    non_monotone = 0
    final = 0.0
    for _ in range(20):
        d = int(rng.integers(1, 4))
        t = tuple(rng.uniform(0.05, 1.0, d))
        vals = [rn_second_moment(n, t, (1.0,) * d) for n in ns]
        env = [rn_envelope(n, t) for n in ns]
        env_fail += any(v > e * (1 + 1e-12) for v, e in zip(vals, env))
        non_monotone += any(b > a for a, b in zip(vals, vals[1:]))
        final = max(final, vals[-1])
    el = time.perf_counter() - t0
    ok = violations == 0 and env_fail == 0 and el < 10
    assert verdict(report_line, "1c", ok,
                   f"bound violations {violations}/{checked}; envelope violations {env_fail}/20; "
                   f"max E R_256^2 = {final:.3g}; {non_monotone}/20 paths increase somewhere "
                   "along n (reported)", el)


def test_1d_lattice_covariance_limit(report_line):
    t0 = time.perf_counter()
    worst = 0.0
    for coeffs, corners in random_lattice_configs(SEED, 50):
        fin, lim = lattice_covariance_limit(coeffs, corners, 2000)
        worst = max(worst, abs(fin - lim) / abs(lim))
    el = time.perf_counter() - t0
    ok = worst <= 0.01 and el < 30
    assert verdict(report_line, "1d", ok, f"max relative error at n=2000: {worst:.3g}", el)


# 2. isometry ---------------------------------------------------------------------------

def test_2_isometry(report_line):
    t0 = time.perf_counter()
    reps, grid = 20000, (4, 8, 16, 32)
    lines, ok = [], True
    for family in ("donsker", "kac-stroock"):
        for d in (1, 2):
            for name, f in (("f=1", SimpleFunction.constant(1.0, (1.0,) * d)),
                            ("3-term", three_term(d))):
                target = sq_norm(f)
                for n in grid:
                    x = simulate(family, [f], n, reps, SEED, workers=WORKERS,
                                 label=stream_label(family, n, 102))[:, 0]
                m2 = float(np.mean(x**2))
                se = float(np.std(x**2, ddof=1) / math.sqrt(reps))
                good = abs(m2 - target) <= max(3 * se, 0.05 * target)
                ok &= good
                lines.append(f"{family} d={d} {name}: E X^2={m2:.4f} target={target:.4f} "
                             f"se={se:.4f} var={np.var(x, ddof=1):.4f} {'ok' if good else 'MISS'}")
    el = time.perf_counter() - t0
    for line in lines:
        print("   ", line)
    ok &= el < 300
    assert verdict(report_line, "2", ok, "; ".join(l for l in lines if "MISS" in l) or
                   "all 8 cases within max(3 SE, 5%) at n=32", el)


# 3. fourth moment ------------------------------------------------------------------------

def test_3_fourth_moment(report_line):
    t0 = time.perf_counter()
    f = SimpleFunction.constant(1.0, (1.0,))
    parts, ok = [], True
    for family in ("donsker", "kac-stroock"):
        x = simulate(family, [f], 32, 10**5, SEED, workers=WORKERS,
                     label=stream_label(family, 32, 103))[:, 0]
        y = x**4
        est, se = float(y.mean()), float(y.std(ddof=1) / math.sqrt(y.size))
        good = abs(est - 3.0) <= 3 * se
        ok &= good
        parts.append(f"{family} {est:.4f} +- {se:.4f} (z={(est - 3) / se:.2f})")
    el = time.perf_counter() - t0
    ok &= el < 300
    assert verdict(report_line, "3", ok, "; ".join(parts), el)


# 4. goodness of fit ------------------------------------------------------------------------

def test_4_goodness_of_fit(report_line):
    t0 = time.perf_counter()
    reps = 5 * 10**4
    cases = [("kac-stroock", 1, 200, "rademacher"), ("donsker", 1, 256, DONSKER_GOF_LAW),
             ("kac-stroock", 2, 64, "rademacher"), ("donsker", 2, 64, DONSKER_GOF_LAW)]
    parts, ok = [], True
    for family, d, n, law in cases:
        f = SimpleFunction.constant(1.0, (1.0,) * d)
        x = simulate(family, [f], n, reps, SEED, law=law, workers=WORKERS,
                     label=stream_label(family, n, 104 + d))[:, 0]
        rep = ks_test(x, 1.0, 0.01)
        ok &= not rep.reject
        parts.append(f"{family} d={d} n={n}: D={rep.statistic:.4f} thr={rep.threshold:.4f} "
                     f"{'reject' if rep.reject else 'accept'}")
    # Rademacher Donsker at n=256 is reported, not gated
    f = SimpleFunction.constant(1.0, (1.0,))
    x = simulate("donsker", [f], 256, reps, SEED, workers=WORKERS,
                 label=stream_label("donsker", 256, 109))[:, 0]
    rad = ks_test(x, 1.0, 0.01)
    el = time.perf_counter() - t0
    ok &= el < 600
    for p in parts:
        print("   ", p)
    print(f"    (report) donsker rademacher n=256: D={rad.statistic:.4f} thr={rad.threshold:.4f}")
    assert verdict(report_line, "4", ok, "; ".join(parts), el)


# 5. Cramér-Wold ----------------------------------------------------------------------------

def test_5_cramer_wold(report_line):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 5)
    parts, ok = [], True
    for fam_index, family in enumerate(("donsker", "kac-stroock")):
        law = DONSKER_GOF_LAW if family == "donsker" else "rademacher"
        rejections = 0
        for i in range(10):
            d = int(rng.integers(1, 3))
            k = int(rng.integers(1, 4))
            corners = [tuple(rng.uniform(0.2, 1.0, d)) for _ in range(k)]
            coeffs = list(rng.standard_normal(k))
            f = SimpleFunction.constant(1.0, (1.0,) * d)
            rep = cramer_wold_check(family, f, corners, coeffs, 64, 20000, SEED, law=law,
                                    workers=WORKERS, experiment=500 + 10 * fam_index + i)
            rejections += rep.reject
        ok &= rejections <= 1
        parts.append(f"{family}: {rejections}/10 rejections")
    el = time.perf_counter() - t0
    ok &= el < 600
    assert verdict(report_line, "5", ok, "; ".join(parts), el)


# 6. parity identities -------------------------------------------------------------------------

def test_6_parity(report_line):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 6)
    reps = 10**5
    misses = 0
    for i in range(10):
        d = int(rng.integers(1, 3))
        n = float(rng.choice([1, 5, 20]))
        t = rng.uniform(0.05, 1.0 / d, d)
        est, se = parity_expectation_mc(n, [t], reps, StreamKey(SEED, 0, 600 + i))
        misses += abs(est - math.exp(-2 * n * np.prod(t))) > 3 * se
    bound_fail = 0
    for i in range(20):
        d = int(rng.integers(1, 3))
        s = rng.uniform(0.2, 0.8, d)
        t = s * rng.uniform(1.0, 2.0, d)
        m = 2 * int(rng.integers(1, 3))
        u = s + (t - s) * rng.uniform(0, 1, (m, d))
        n = float(rng.choice([1, 2, 5]))
        b = parity_expectation_bound(n, u, s)
        est, se = parity_expectation_mc(n, u, reps, StreamKey(SEED, 0, 700 + i))
        bound_fail += abs(est) > b.bound + 3 * se
    el = time.perf_counter() - t0
    ok = misses == 0 and bound_fail == 0 and el < 300
    assert verdict(report_line, "6", ok, f"identity misses {misses}/10; bound violations "
                   f"{bound_fail}/20", el)


# 7. bound-constant scan -------------------------------------------------------------------------

def test_7_bound_scan(report_line):
    t0 = time.perf_counter()
    grid = (4, 8, 16, 32, 64)
    reps = 20000
    parts, ok = [], True
    g1 = SimpleFunction.constant(1.0, (1.0,))
    g2 = SimpleFunction.constant(1.0, (1.0, 1.0))
    scans = [("donsker", g1, 1.0, law) for law in ("rademacher", "gaussian", "uniform")]
    scans += [("kac-stroock", g2, 1.5, "rademacher"), ("kac-stroock", g2, 1.0, "rademacher")]
    for j, (family, g, q, law) in enumerate(scans):
        rep = bound_constant_scan(family, g, q, 4, grid, reps, SEED, law=law, workers=WORKERS,
                                  experiment=800 + j)
        tag = f"{family} q={q} {law if family == 'donsker' else 'd=2'}"
        ratios = " ".join(f"{r:.3f}" for r in rep.ratios)
        state = ("ok" if rep.passed else "TREND") if rep.gated else "report-only"
        print(f"    {tag}: ratios {ratios}; slope {rep.slope:.4f} +- {rep.slope_se:.4f} "
              f"z={rep.z:.2f} {state}")
        if rep.gated:
            ok &= rep.passed
        parts.append(f"{tag} z={rep.z:.2f} {state}")
    el = time.perf_counter() - t0
    ok &= el < 600
    assert verdict(report_line, "7", ok, "; ".join(parts), el)


# 8. determinism -------------------------------------------------------------------------------

def test_8_determinism(report_line, tmp_path):
    t0 = time.perf_counter()
    texts = [
        "kernel = donsker\ndim = 2\nn_grid = 4, 8\nreps = 3000\nblock = 512\nm = 2, 4\n"
        "experiments = simulate, moments, gof, bound-scan\n",
        "kernel = kac-stroock\ndim = 2\nn_grid = 4, 8\nreps = 3000\nblock = 512\ncw_combos = 2\n"
        "experiments = simulate, moments, gof, cramer-wold, appendix-checks, rn-decay\n",
    ]
    ok = True
    for i, text in enumerate(texts):
        runs = []
        for label, workers in (("a", 1), ("b", 1), ("c", 2), ("d", 3)):
            cfg = parse_config(text).with_overrides(seed=SEED, workers=workers)
            out = tmp_path / f"{i}{label}"
            run_suite(cfg, out)
            runs.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
        ok &= all(r == runs[0] for r in runs[1:])
    el = time.perf_counter() - t0
    assert verdict(report_line, "8", ok, "byte-identical CSVs across reruns and 1/2/3 workers",
                   el)
