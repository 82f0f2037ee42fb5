"""Randomized sweep: sandwich bounds, certificates, final feasibility.

Runs the solver over seeded random instances across a range of sizes.
Every run must satisfy value <= 2 * dual; sizes within the exact-search
gate are also compared against the exhaustive optimum, and sizes within
the enumeration gate re-verify the certificate after every iteration.
Prints one summary row per size and exits 1 on any violation.
"""

import argparse
import sys
from dataclasses import dataclass

from rbmaf import (
    is_feasible_maf,
    make_report,
    random_pair,
    run,
    verify_dual_feasibility,
)

EXACT_GATE = 10
VERIFY_GATE = 12


@dataclass
class SweepConfig:
    min_n: int = 4
    max_n: int = 12
    iters: int = 50
    seed: int = 0
    verify_certificates: bool = False


def sweep_one(config, n, index):
    """Run one instance; returns (name, failure or None, ratio_exact)."""
    seed = config.seed + index
    if index % 2 and n > 3:
        k = 1 + index % (n - 2)
        name = "r%d-n%d-s%d" % (k, n, seed)
        pair = random_pair(n, seed, mode="k_rspr", k=k)
    else:
        name = "u-n%d-s%d" % (n, seed)
        pair = random_pair(n, seed)
    try:
        report, result = make_report(
            pair, instance=name, want_exact=n <= EXACT_GATE)
        if not is_feasible_maf(pair, result.partition):
            raise AssertionError("final forest is not an agreement forest")
        if config.verify_certificates and n <= VERIFY_GATE:
            run(pair, on_iteration=lambda p, d, r:
                verify_dual_feasibility(pair, d, p))
        return name, None, report.ratio_exact
    except Exception as error:
        return name, "%s" % error, None


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--min-n", type=int, default=4)
    parser.add_argument("--max-n", type=int, default=12)
    parser.add_argument("--iters", type=int, default=50,
                        help="instances per size")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--verify-certificates", action="store_true",
                        help="re-check the certificate after each iteration")
    args = parser.parse_args(argv)
    config = SweepConfig(args.min_n, args.max_n, args.iters, args.seed,
                         args.verify_certificates)

    print("%4s %6s %6s %10s" % ("n", "runs", "fails", "max_ratio"))
    total_failures = []
    for n in range(config.min_n, config.max_n + 1):
        failures = []
        worst = None
        for index in range(config.iters):
            name, failure, ratio = sweep_one(config, n, index)
            if failure:
                failures.append("%s: %s" % (name, failure))
            if ratio is not None:
                worst = ratio if worst is None else max(worst, ratio)
        shown = "" if worst is None else "%.3f" % worst
        print("%4d %6d %6d %10s" % (n, config.iters, len(failures), shown))
        total_failures.extend(failures)
    for line in total_failures[:20]:
        print("FAIL " + line, file=sys.stderr)
    return 1 if total_failures else 0


if __name__ == "__main__":
    sys.exit(main())
