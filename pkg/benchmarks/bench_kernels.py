"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5]

The first numba call (JIT compile or cache load) is excluded from timing.
"""

import argparse
import time

import numpy as np

from vegloss import _accel
from vegloss._kernels import _chords_loop, _chords_numpy, _dtft_power_loop, _dtft_power_numpy


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)

    cases = []
    for n in (100, 10_000, 1_000_000):
        sx, sz, ex, ez, cx, cz = rng.uniform(-20, 20, (6, n))
        a, b = rng.uniform(0.1, 10, (2, n))
        chord_args = (sx, sz, ex, ez, cx, cz, a, b)
        cases.append((f"chords n={n}", lambda c=chord_args: _chords_loop(*c), lambda c=chord_args: _chords_numpy(*c)))

    for n_taus in (1, 64):
        x = rng.normal(size=1001) + 1j * rng.normal(size=1001)
        taus = rng.uniform(0, 1e-6, n_taus)
        re, im = x.real.copy(), x.imag.copy()
        cases.append((f"dtft 1001 pts x {n_taus} delays",
                      lambda re=re, im=im, t=taus: _dtft_power_loop(re, im, 1e6, t),
                      lambda x=x, t=taus: _dtft_power_numpy(x, 1e6, t)))

    print(f"backend in use: {_accel.backend()}")
    print(f"{'case':<28}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for name, fast, slow in cases:
        fast()  # compile / load cache
        t_fast, t_slow = best_of(fast, args.repeat), best_of(slow, args.repeat)
        print(f"{name:<28}{t_fast * 1e3:>10.3f}ms{t_slow * 1e3:>10.3f}ms{t_slow / t_fast:>9.1f}x")


if __name__ == "__main__":
    main()
