"""Time the best-response search kernels: numba vs pure numpy.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--full]

Both backends must return the same (value, index) pair; the script exits
non-zero if they ever disagree. ``--full`` scans all 8^8 Alice strategies of
the three-fold CHSH conjunction on both backends (the numpy run takes a while).
"""
import argparse
import sys
import time

import numpy as np

from xor_arena.games import chsh, conjunction, xor_sum_all
from xor_arena._accel import USE_NUMBA
from xor_arena._kernels import search_range
from xor_arena.classical import xor_gain


def cases(full):
    c = chsh()
    yield "xor of three CHSH (2^8)", xor_gain(xor_sum_all([c, c, c])), None
    yield "CHSH and CHSH (4^4)", conjunction([c, c]).gain(), None
    g3 = conjunction([c, c, c]).gain()
    yield "CHSH x3 (8^8)" if full else "CHSH x3, first 2^20 of 8^8", g3, None if full else 1 << 20
    rng = np.random.default_rng(0)
    yield "random 12x2x12x2 (2^12)", rng.standard_normal((12, 2, 12, 2)), None


def timed(gain, hi, use_numba, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = search_range(gain, 0, hi, use_numba=use_numba)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--full", action="store_true")
    args = ap.parse_args()
    if not USE_NUMBA:
        print("numba disabled or missing; only the numpy backend is meaningful", file=sys.stderr)

    # compile once outside the timings
    search_range(xor_gain(chsh()), 0, 4, use_numba=True)

    print(f"{'case':<30} {'strategies':>11} {'numba s':>9} {'numpy s':>9} {'speedup':>8}")
    bad = 0
    for name, gain, hi in cases(args.full):
        ns, na = gain.shape[:2]
        hi = na ** ns if hi is None else hi
        reps = 1 if hi > 1 << 22 else args.repeat
        tj, rj = timed(gain, hi, True, reps)
        tn, rn = timed(gain, hi, False, reps)
        same = rj == rn
        bad += not same
        print(f"{name:<30} {hi:>11} {tj:>9.4f} {tn:>9.4f} {tn / tj:>7.1f}x" + ("" if same else "  MISMATCH"))
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
