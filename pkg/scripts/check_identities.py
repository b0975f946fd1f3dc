#!/usr/bin/env python3
"""
Batch check of the exact welfare identities and OPT bounds over seeded instances:

  - SU(M2) and SU(M4) equal (n + |N1 and N2|) / 2
  - vertex OPT equals the grid oracle (vertices included)
  - OPT <= n + (1 - d) * |N1 and N2|

Examples:
  python scripts/check_identities.py
  python scripts/check_identities.py --count 1000 --max-n 50 --resolution 200

Exits 1 on the first mismatch class found, printing each failing instance digest.
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction

# Allow running from repo root
sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from obnox.core import partition_counts, social_utility
from obnox.harness import GeneratorConfig, derive_seed, generate_instance
from obnox.helpers import instance_digest, parse_rational_list
from obnox.mechanisms import mechanism2, mechanism4
from obnox.opt import brute_force_opt, optimal_placement, welfare_upper_bound


def main():
    ap = argparse.ArgumentParser(description="Check welfare identities and OPT bounds")
    ap.add_argument("--count", type=int, default=200, help="Instances per d value")
    ap.add_argument("--max-n", type=int, default=10, help="Largest agent count")
    ap.add_argument("--d", default="0,1/4,1/3,1/2,3/4,1", help="Comma-separated d values")
    ap.add_argument("--resolution", type=int, default=60, help="Grid oracle density m (0 to skip)")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    failures = 0
    checked = 0
    for j, d in enumerate(parse_rational_list(args.d)):
        for i in range(args.count):
            seed = derive_seed(args.seed, j, i)
            n = 1 + seed % max(1, args.max_n)
            instance = generate_instance(GeneratorConfig(n=n, d=d, law="breakpoints", seed=seed))
            counts = partition_counts(instance)
            expected = Fraction(instance.n + counts.both, 2)
            problems = []
            if social_utility(instance, mechanism4(instance)) != expected:
                problems.append("M4 identity")
            if d == 0 and social_utility(instance, mechanism2(instance)) != expected:
                problems.append("M2 identity")
            opt = optimal_placement(instance)
            if opt.value > welfare_upper_bound(instance):
                problems.append("upper bound")
            if args.resolution > 0:
                grid = brute_force_opt(instance, args.resolution)
                if grid.value != opt.value:
                    problems.append(f"grid oracle {grid.value} != {opt.value}")
            checked += 1
            if problems:
                failures += 1
                print(f"{instance_digest(instance)} d={d} n={n}: {'; '.join(problems)}")

    print(f"checked {checked} instances, {failures} failures")
    sys.exit(1 if failures else 0)


if __name__ == "__main__":
    main()
