"""Time the numba kernels against their numpy fallbacks.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel runs once to warm the JIT, then ``repeat`` times per path;
the best time is reported with the speedup and a check that both paths
return identical arrays.
"""

import argparse
import time

import numpy as np

from tiltlab import kernels
from tiltlab._accel import HAS_NUMBA


def _cases():
    x = np.linspace(-2.0, 2.0, 4097)
    fx = (x ** 2 - 1.0) ** 2
    u = np.linspace(-30.0, 30.0, 4097)
    yield "hull_conjugate_1d n=4097", lambda nb: kernels.hull_conjugate_1d(x, fx, u, nb)

    xs = np.linspace(-1.0, 1.0, 1001)[:, None]
    us = np.linspace(-2.0, 2.0, 1001)[:, None]
    yield "brute_conjugate n=1001", lambda nb: kernels.brute_conjugate(xs, xs[:, 0] ** 2, us, nb)

    k = np.arange(21)
    F = -np.outer(2.0 ** (k - 10), np.linspace(0.0, 1.0, 20000)) ** 2
    G = np.outer(2.0 ** (k - 10), np.linspace(0.0, 1.0, 20000))
    yield "sweep_margins 21x21x20000", lambda nb: kernels.sweep_margins(F, G, None, None, nb)

    pts = np.linspace(-1.0, 1.0, 400)[:, None]
    sets = [np.arange(i, min(i + 3, 400)) for i in range(0, 400, 2)]
    mask = np.abs(pts[:, 0]) < 0.5
    yield "set_excess 200 sets", lambda nb: kernels.set_excess(pts, sets, mask, nb)


def _best(fn, repeat):
    out, best = None, np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _same(a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    return all(np.array_equal(np.asarray(p), np.asarray(q), equal_nan=True) for p, q in zip(a, b))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'kernel':28s} {'numpy s':>10s} {'numba s':>10s} {'speedup':>8s}  equal")
    for name, run in _cases():
        t_np, out_np = _best(lambda: run(False), args.repeat)
        if HAS_NUMBA:
            run(True)
            t_nb, out_nb = _best(lambda: run(True), args.repeat)
            print(f"{name:28s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f}  {_same(out_np, out_nb)}")
        else:
            print(f"{name:28s} {t_np:10.4f} {'-':>10s} {'-':>8s}  -")


if __name__ == "__main__":
    main()
