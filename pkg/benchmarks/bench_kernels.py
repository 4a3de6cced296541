"""Timing and agreement check: compiled kernels versus the pure fallback.

Run as a script. The two backends must agree to near machine precision;
the table reports per-call times and the speedup. Propagation spends most
of its time in the phase rotation (the FFT is shared), so the first row
is the one that matters for GPE runs.
"""
import time

import numpy as np

from solpump._kernels import BACKEND, pure

try:
    from solpump._kernels import _core as compiled
except ImportError:
    compiled = None


def _time(fn, *args, repeats=20):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_phase_rotate(n=4096, rows=2):
    rng = np.random.default_rng(1)
    x = np.linspace(-32, 32, n, endpoint=False)
    cos1 = np.cos(2 * np.pi * x) ** 2
    c2, s2 = np.cos(3 * np.pi * x), np.sin(3 * np.pi * x)
    base = (rng.standard_normal((rows, n)) + 1j * rng.standard_normal((rows, n)))
    args = (5e-4, -0.05, -0.1, -0.03, -0.04, cos1, c2, s2)

    a = base.copy()
    pure.phase_rotate(a, *args)
    results = {"pure": (_time(lambda: pure.phase_rotate(base.copy(), *args)), a)}
    if compiled is not None:
        b = base.copy()
        compiled.phase_rotate(b, *args)
        results["compiled"] = (
            _time(lambda: compiled.phase_rotate(base.copy(), *args)), b)
        err = np.max(np.abs(results["compiled"][1] - a))
    else:
        err = 0.0
    return results, err


def bench_ee_advance(members=20, nsteps=2000):
    rng = np.random.default_rng(2)
    base = rng.standard_normal((members, 2)) * 0.1
    args = (0.0, 1e-3, nsteps, 0.006, 4 * np.pi, 0.19, 2 * np.pi, 0.2, 0.0)

    a = base.copy()
    pure.ee_advance(a, *args)
    results = {"pure": (_time(lambda: pure.ee_advance(base.copy(), *args),
                              repeats=5), a)}
    if compiled is not None:
        b = base.copy()
        compiled.ee_advance(b, *args)
        results["compiled"] = (
            _time(lambda: compiled.ee_advance(base.copy(), *args), repeats=5), b)
        err = np.max(np.abs(results["compiled"][1] - a))
    else:
        err = 0.0
    return results, err


def main():
    print(f"active backend: {BACKEND}; compiled available: {compiled is not None}")
    for name, fn in (("phase_rotate (2x4096)", bench_phase_rotate),
                     ("ee_advance (20x2000 steps)", bench_ee_advance)):
        results, err = fn()
        line = f"{name}: pure {results['pure'][0] * 1e3:8.3f} ms"
        if "compiled" in results:
            tc = results["compiled"][0]
            line += (f", compiled {tc * 1e3:8.3f} ms"
                     f", speedup {results['pure'][0] / tc:5.1f}x"
                     f", max |diff| {err:.2e}")
            if err > 1e-12:
                raise SystemExit(f"backend disagreement on {name}: {err:.3e}")
        print(line)


if __name__ == "__main__":
    main()
