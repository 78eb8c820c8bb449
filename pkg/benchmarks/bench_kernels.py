"""Compare the compiled and numpy backends of the Kac-Stroock batch integrator.

    python benchmarks/bench_kernels.py [--reps 2000] [--repeat 3]

Prints sheets per second per backend and the max absolute difference.
"""
import argparse
import time

import numpy as np

from sheetapprox import kernels
from sheetapprox.geometry import Rect
from sheetapprox.integrands import SimpleFunction
from sheetapprox.kac_stroock import integrate_batch
from sheetapprox.streams import StreamKey, sample_sheet_block

CASES = [(1, 200.0), (2, 16.0), (2, 64.0), (3, 8.0)]


def integrands(d):
    box = (1.0,) * d
    return [SimpleFunction.constant(1.0, box),
            SimpleFunction(((2.0, Rect((0.0,) * d, (0.5,) * d)),
                            (-1.0, Rect((0.5,) * d, (1.0,) * d))), box)]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)}")
    print(f"{'d':>2} {'n':>6} " + " ".join(f"{b + ' sheets/s':>18}" for b in backends)
          + f" {'speedup':>8} {'max |diff|':>11}")
    for d, n in CASES:
        batch = sample_sheet_block(n, (1.0,) * d, StreamKey(0).generator(), args.reps)
        fs = integrands(d)
        rates, results = {}, {}
        for b in backends:
            best = float("inf")
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                results[b] = integrate_batch(batch, fs, backend=b)
                best = min(best, time.perf_counter() - t0)
            rates[b] = args.reps / best
        diff = (float(np.max(np.abs(results["compiled"] - results["python"])))
                if len(backends) == 2 else float("nan"))
        speed = rates.get("compiled", float("nan")) / rates["python"]
        print(f"{d:>2} {n:>6g} " + " ".join(f"{rates[b]:>18.0f}" for b in backends)
              + f" {speed:>8.1f} {diff:>11.2e}")


if __name__ == "__main__":
    main()
