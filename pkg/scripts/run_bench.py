"""Runtime scaling sweep for the solver on random instances.

Prints one row per size with the elapsed time and the ratio against
the previous size; a doubling schedule with healthy quadratic scaling
keeps the ratio near four.  Exits 1 when any ratio exceeds the guard.
"""

import argparse
import sys
import time
from dataclasses import dataclass

from rbmaf import random_pair, run


@dataclass
class BenchConfig:
    sizes: tuple = (250, 500, 1000, 2000, 4000)
    seed: int = 0
    repeats: int = 1
    max_ratio: float | None = None


def bench(config):
    rows = []
    previous = None
    for n in config.sizes:
        pair = random_pair(n, config.seed)
        best = None
        value = dual = 0
        for _ in range(config.repeats):
            started = time.perf_counter()
            result = run(pair)
            elapsed = time.perf_counter() - started
            best = elapsed if best is None else min(best, elapsed)
            value, dual = result.value, result.dual_objective
        ratio = None if previous is None else best / previous
        rows.append((n, best, value, dual, ratio))
        previous = best
    return rows


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="250,500,1000,2000,4000",
                        help="comma separated leaf counts")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--repeats", type=int, default=1,
                        help="take the fastest of this many runs per size")
    parser.add_argument("--max-ratio", type=float, default=None,
                        help="fail when a size-to-size ratio exceeds this")
    args = parser.parse_args(argv)
    config = BenchConfig(
        sizes=tuple(int(s) for s in args.sizes.split(",") if s),
        seed=args.seed, repeats=args.repeats, max_ratio=args.max_ratio)

    print("%8s %10s %8s %8s %8s" % ("n", "time_s", "value", "dual", "ratio"))
    worst = 0.0
    for n, elapsed, value, dual, ratio in bench(config):
        shown = "" if ratio is None else "%.2f" % ratio
        print("%8d %10.3f %8d %8d %8s" % (n, elapsed, value, dual, shown))
        if ratio is not None:
            worst = max(worst, ratio)
    if config.max_ratio is not None and worst > config.max_ratio:
        print("worst ratio %.2f exceeds %.2f" % (worst, config.max_ratio),
              file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
