"""Benchmark the compiled edit-distance kernel against the pure-Python
fallback on the same workload.

Usage:
    python3 benchmarks/bench_editdist.py [--pairs N] [--repeat R]

Times both implementations directly (no SNLU_PURE round-trip needed: both
modules are importable side by side) and reports the speedup. The workload
mirrors the gazetteer's fuzzy matcher: short lowercase phrases, with and
without a distance cap.
"""
import argparse
import random
import string
import time

from snlu import _editdist_py, editdist

try:
    from snlu import _editdist_c
except ImportError:
    _editdist_c = None


def make_pairs(n, seed):
    rng = random.Random(seed)
    chars = string.ascii_lowercase

    def word():
        return "".join(rng.choice(chars) for _ in range(rng.randrange(3, 14)))

    def phrase():
        return " ".join(word() for _ in range(rng.randrange(1, 3)))

    return [(phrase(), phrase()) for _ in range(n)]


def bench(fn, pairs, cap, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        acc = 0
        for a, b in pairs:
            acc += fn(a, b, cap)
        best = min(best, time.perf_counter() - t0)
    return best, acc


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    pairs = make_pairs(args.pairs, args.seed)
    print(f"active backend: {editdist.BACKEND}")
    print(f"{args.pairs} phrase pairs, best of {args.repeat} runs\n")
    print(f"{'workload':<14}{'python':>12}{'cython':>12}{'speedup':>10}")

    for label, cap in (("uncapped", -1), ("cap=3", 3)):
        tp, accp = bench(_editdist_py.edit_distance, pairs, cap, args.repeat)
        row = f"{label:<14}{tp * 1e3:>10.1f}ms"
        if _editdist_c is not None:
            tc, accc = bench(_editdist_c.edit_distance, pairs, cap, args.repeat)
            if accc != accp:
                raise SystemExit("backends disagree on distances")
            row += f"{tc * 1e3:>10.1f}ms{tp / tc:>9.1f}x"
        else:
            row += f"{'n/a':>12}{'n/a':>10}"
        print(row)


if __name__ == "__main__":
    main()
