#!/usr/bin/env python3
"""
Show everything known about one instance file: partition counts, the social
utility of every feasible vertex, and each mechanism's outcome and ratio.

Usage:
  python scripts/show_instance.py fixtures/midpoint_pair.json

  # Only some mechanisms, as line-delimited JSON
  python scripts/show_instance.py fixtures/sixths_pair.json --mech M3,M4 --json
"""

from __future__ import annotations

import argparse
import json
import os
import sys

# Allow running from repo root
sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from obnox.core import (
    ApplicabilityError,
    Lottery,
    partition_counts,
    placement_social_utility,
)
from obnox.helpers import format_ratio, instance_digest, load_instance, outcome_to_dict
from obnox.mechanisms import BUILTIN_IDS, get_mechanism
from obnox.opt import feasible_vertices, optimal_placement, welfare_upper_bound
from obnox.verification import approximation_ratio, ratio_cap, welfare_guarantee


def main():
    ap = argparse.ArgumentParser(description="Inspect one instance file")
    ap.add_argument("instance", help="Instance JSON file")
    ap.add_argument("--mech", default=",".join(BUILTIN_IDS), help="Comma-separated ids")
    ap.add_argument("--json", action="store_true", help="Line-delimited JSON output")
    args = ap.parse_args()

    instance = load_instance(args.instance)
    counts = partition_counts(instance)
    opt = optimal_placement(instance)

    if not args.json:
        print(f"instance {instance_digest(instance)}: n={instance.n} d={instance.d}")
        print(
            f"  |N1|={counts.n1} |N2|={counts.n2} both={counts.both}"
            f" only1={counts.only1} only2={counts.only2}"
        )
        print("vertices:")
        for v in feasible_vertices(instance.d):
            mark = " *" if v == opt.placement else ""
            print(f"  {v}: {placement_social_utility(instance, v)}{mark}")
        print(f"opt {opt.value} <= upper bound {welfare_upper_bound(instance)}")

    for mech_id in [m for m in args.mech.split(",") if m.strip()]:
        mech = get_mechanism(mech_id)
        try:
            report = approximation_ratio(mech, instance)
        except ApplicabilityError as e:
            if args.json:
                print(json.dumps({"mechanism": mech.id, "skipped": str(e)}))
            else:
                print(f"{mech.id}: skipped ({e})")
            continue
        cap = ratio_cap(mech, instance)
        guarantee = welfare_guarantee(mech, instance)
        if args.json:
            print(
                json.dumps(
                    {
                        "mechanism": mech.id,
                        "outcome": outcome_to_dict(report.outcome),
                        "value": str(report.mechanism_value),
                        "ratio": format_ratio(report.ratio),
                        "cap": None if cap is None else str(cap),
                        "guarantee": None if guarantee is None else str(guarantee),
                    }
                )
            )
        else:
            outcome = report.outcome
            shown = str(outcome)
            if isinstance(outcome, Lottery):
                shown = "lottery " + ", ".join(f"{pl}:{p}" for pl, p in outcome.support)
            print(
                f"{mech.id}: {shown} value {report.mechanism_value}"
                f" ratio {format_ratio(report.ratio)} cap {cap} guarantee {guarantee}"
            )


if __name__ == "__main__":
    main()
