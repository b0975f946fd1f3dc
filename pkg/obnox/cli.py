"""Command-line driver: eval, opt, verify, probe, search, sweep, bounds.

Exit codes: 0 pass, 1 property violation, 2 usage or parse error,
3 mechanism not applicable, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from collections.abc import Sequence
from pathlib import Path

from dotenv import load_dotenv

from . import __version__
from .core import (
    ApplicabilityError,
    FeasibilityError,
    Lottery,
    Preference,
    UnknownMechanismError,
    ValidationError,
    is_randomized,
    social_utility,
)
from .harness import (
    EXHAUSTIVE_MAX_AGENTS,
    UNIFORM_MIX,
    GeneratorConfig,
    adversarial_search,
    exhaustive_search,
    generate_instances,
    search_result_to_dict,
    sweep,
    sweep_csv,
)
from .helpers import (
    dumps_json,
    format_ratio,
    format_rational,
    load_instance,
    outcome_to_dict,
    parse_rational_list,
    rational_field,
)
from .mechanisms import BUILTIN_IDS, get_mechanism
from .opt import brute_force_opt, optimal_placement, welfare_upper_bound
from .reports import (
    instance_check_to_dict,
    known_bound_to_dict,
    opt_result_to_dict,
    probe_report_to_dict,
)
from .verification import (
    DEFAULT_GRID,
    known_bounds,
    run_deterministic_probe,
    run_randomized_probe,
    verify_instance,
    within_cap,
)

logger = logging.getLogger("obnox.cli")

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_NOT_APPLICABLE = 3
EXIT_IO = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --- Flag parsing ---


def _mech_ids(text: str) -> list[str]:
    ids = [t.strip() for t in (text or "").split(",") if t.strip()]
    if not ids:
        raise UsageError("--mech needs at least one mechanism id")
    return [get_mechanism(i).id for i in ids]


def _ints(text: str) -> list[int]:
    try:
        values = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise UsageError("expected at least one integer")
    return values


def _mix(text: str | None):
    if not text:
        return UNIFORM_MIX
    mix = parse_rational_list(text)
    if len(mix) != 3:
        raise ValidationError(f"--mix needs three rationals q10,q01,q11, got {len(mix)}")
    return tuple(mix)


def _profile(text: str | None) -> list[Preference] | None:
    if not text:
        return None
    return [Preference.from_label(t) for t in text.split(",") if t.strip()]


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
        logger.info("[cli] wrote %s", out)
    else:
        sys.stdout.write(text)


def _yes(flag: bool) -> str:
    return "yes" if flag else "no"


def _csv(rows: Sequence[dict[str, str]], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


# --- Subcommands ---


def cmd_eval(args) -> int:
    instance = load_instance(args.instance)
    mech = get_mechanism(args.mech)
    outcome = mech(instance)
    value = social_utility(instance, outcome)
    if args.format == "json":
        _emit(
            dumps_json(
                {
                    "mechanism": mech.id,
                    "outcome": outcome_to_dict(outcome),
                    "social_utility": rational_field(value),
                }
            ),
            args.out,
        )
        return EXIT_OK
    lines = [f"mechanism: {mech.id}"]
    if isinstance(outcome, Lottery):
        lines.append("lottery:")
        lines.extend(f"  {pl} with probability {prob}" for pl, prob in outcome.support)
        lines.append(f"expected social utility: {format_rational(value)}")
    else:
        lines.append(f"placement: {outcome}")
        lines.append(f"social utility: {format_rational(value)}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_opt(args) -> int:
    instance = load_instance(args.instance)
    opt = optimal_placement(instance)
    bound = welfare_upper_bound(instance)
    grid = None
    if args.resolution is not None:
        if args.resolution < 1:
            raise UsageError("--resolution must be >= 1")
        grid = brute_force_opt(instance, args.resolution, include_vertices=args.include_vertices)
    # The grid can tie OPT but never beat it.
    ok = opt.value <= bound and (grid is None or grid.value <= opt.value)
    if args.format == "json":
        body = {**opt_result_to_dict(opt), "upper_bound": rational_field(bound), "ok": ok}
        if grid is not None:
            body["grid"] = {"resolution": args.resolution, **opt_result_to_dict(grid)}
        _emit(dumps_json(body), args.out)
    else:
        lines = [
            f"opt placement: {opt.placement}",
            f"opt value: {format_rational(opt.value)}",
            f"upper bound: {format_rational(bound)}",
        ]
        if grid is not None:
            lines.append(
                f"grid m={args.resolution}: {grid.placement} value {format_rational(grid.value)}"
                f" ({grid.candidates_evaluated} candidates)"
            )
            lines.append(f"grid agrees: {_yes(grid.value == opt.value)}")
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if ok else EXIT_VIOLATION


def _verify_instances(args):
    if args.instances:
        return [load_instance(path) for path in args.instances]
    instances = []
    mix = _mix(args.mix)
    for d in parse_rational_list(args.d):
        config = GeneratorConfig(n=args.n, d=d, mix=mix, law="breakpoints", seed=args.seed)
        instances.extend(generate_instances(config, args.count))
    return instances


def cmd_verify(args) -> int:
    mech_ids = _mech_ids(args.mech)
    instances = _verify_instances(args)
    logger.info("[verify] %d instances x %s", len(instances), ",".join(mech_ids))
    summary = []
    failures = []
    for mech_id in mech_ids:
        mech = get_mechanism(mech_id)
        checked = skipped = failed = 0
        worst = None
        for instance in instances:
            check = verify_instance(
                mech,
                instance,
                group=not mech.deterministic and args.group_max >= 2,
                max_coalition=args.group_max,
            )
            if check.skipped:
                skipped += 1
                continue
            checked += 1
            if worst is None or check.ratio > worst:
                worst = check.ratio
            if not check.passed:
                failed += 1
                failures.append(instance_check_to_dict(check))
        summary.append(
            {
                "mechanism": mech.id,
                "checked": checked,
                "skipped": skipped,
                "failed": failed,
                "max_ratio": None if worst is None else format_ratio(worst),
            }
        )
    passed = not failures
    if args.format == "json":
        _emit(
            dumps_json(
                {
                    "passed": passed,
                    "instances": len(instances),
                    "summary": summary,
                    "failures": failures[: args.max_failures],
                    "failure_count": len(failures),
                }
            ),
            args.out,
        )
    else:
        lines = [
            f"{row['mechanism']}: checked {row['checked']}, skipped {row['skipped']},"
            f" failed {row['failed']}, max ratio {row['max_ratio'] or '-'}"
            for row in summary
        ]
        lines.append(f"passed: {_yes(passed)}")
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if passed else EXIT_VIOLATION


def cmd_probe(args) -> int:
    mech = get_mechanism(args.mechanism)
    if args.kind == "det":
        report = run_deterministic_probe(mech)
    else:
        report = run_randomized_probe(mech, allow_deterministic=args.allow_deterministic)
    if args.format == "json":
        _emit(dumps_json(probe_report_to_dict(report)), args.out)
        return EXIT_OK
    lines = [
        format_ratio(report.ratio),
        f"meets bound {format_rational(report.universal_bound)}: {_yes(report.meets_bound)}",
    ]
    if report.q is not None:
        lines.append(f"q: {format_rational(report.q)}")
        lines.append(f"implied bound: {format_rational(report.implied_bound)}")
    for step in report.steps:
        kind = "lottery" if is_randomized(step.outcome) else f"placement {step.outcome}"
        lines.append(f"  {step.label}: x={[str(x) for x in step.instance.locations]} {kind} ratio {format_ratio(step.ratio)}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_search(args) -> int:
    mech = get_mechanism(args.mech)
    ds = parse_rational_list(args.d)
    if len(ds) != 1:
        raise UsageError("search takes a single --d value")
    profile = _profile(args.profile)
    m = args.resolution or DEFAULT_GRID
    if args.exhaustive:
        n = len(profile) if profile else args.n
        if n > EXHAUSTIVE_MAX_AGENTS:
            raise UsageError(f"--exhaustive supports n <= {EXHAUSTIVE_MAX_AGENTS}")
        result = exhaustive_search(mech, args.n, ds[0], profile=profile, m=m)
    else:
        result = adversarial_search(
            mech,
            args.n,
            ds[0],
            profile=profile,
            budget=args.budget,
            seed=args.seed,
            m=m,
            max_restarts=args.restarts,
        )
    ok = result.best_instance is None or within_cap(mech, result.best_instance, result.best_ratio)
    body = search_result_to_dict(result)
    body["within_cap"] = ok
    if args.format == "json":
        _emit(dumps_json(body), args.out)
    else:
        lines = [
            f"mechanism: {result.mechanism}",
            f"best ratio: {body['best_ratio']}",
            f"evaluations: {result.evaluations}",
            f"restarts: {result.restarts}",
            f"best instance: {body['best_instance_digest']}",
            f"within cap: {_yes(ok)}",
        ]
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_sweep(args) -> int:
    mech_ids = _mech_ids(args.mech)
    ds = parse_rational_list(args.d)
    mix = _mix(args.mix)
    configs = [
        GeneratorConfig(n=n, mix=mix, law=args.law, seed=args.seed) for n in _ints(args.n)
    ]
    records = sweep(
        mech_ids, ds, configs, args.count, check_sp=not args.no_sp, workers=args.workers
    )
    if args.format == "json":
        _emit(dumps_json([r.as_row() for r in records]), args.out)
    else:
        _emit(sweep_csv(records), args.out)
    bad = [r for r in records if r.sp_ok is False or r.cap_ok is False]
    for r in bad:
        logger.warning("[sweep] %s d=%s n=%d violated (sp_ok=%s cap_ok=%s)", r.mechanism, r.d, r.n, r.sp_ok, r.cap_ok)
    return EXIT_VIOLATION if bad else EXIT_OK


def cmd_bounds(args) -> int:
    rows = [known_bound_to_dict(b) for b in known_bounds()]
    if args.format == "json":
        _emit(dumps_json(rows), args.out)
    elif args.format == "csv":
        _emit(_csv(rows, list(rows[0])), args.out)
    else:
        lines = [
            f"{r['mechanism']}  {r['kind']:<13}  {r['setting']:<10}  upper {r['upper_bound']:<3}  lower {r['universal_lower_bound']}"
            for r in rows
        ]
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


# --- Parser ---


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", default=None, help="Write output to this file instead of stdout")
    common.add_argument(
        "--log-level",
        default=None,
        help="Logging level on stderr (default: OBNOX_LOG_LEVEL or WARNING)",
    )

    ap = _Parser(
        prog="obnox",
        description="Exact mechanisms, OPT and verification for two obnoxious facilities",
    )
    ap.add_argument("--version", action="version", version=f"obnox {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, handler, help_text, formats=("text", "json"), default="text"):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--format", choices=formats, default=default)
        p.set_defaults(handler=handler)
        return p

    p = add("eval", cmd_eval, "Run one mechanism on an instance file")
    p.add_argument("instance", help="Instance JSON file")
    p.add_argument("--mech", required=True, help="Mechanism id (M1..M4 or registered)")

    p = add("opt", cmd_opt, "Exact optimal placement, optionally against the grid oracle")
    p.add_argument("instance", help="Instance JSON file")
    p.add_argument("--resolution", type=int, default=None, help="Grid oracle density m")
    grid = p.add_mutually_exclusive_group()
    grid.add_argument(
        "--include-vertices", dest="include_vertices", action="store_true", default=True
    )
    grid.add_argument("--grid-only", dest="include_vertices", action="store_false")

    p = add("verify", cmd_verify, "SP checks, ratio caps and welfare bounds", default="json")
    p.add_argument("instances", nargs="*", help="Instance files (default: seeded instances)")
    p.add_argument("--mech", default=",".join(BUILTIN_IDS), help="Comma-separated ids")
    p.add_argument("--count", type=int, default=200, help="Seeded instances per d value")
    p.add_argument("--n", type=int, default=5, help="Agents per seeded instance")
    p.add_argument("--d", default="0", help="Comma-separated d values for seeded instances")
    p.add_argument("--mix", default=None, help="Preference mix q10,q01,q11")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--group-max", type=int, default=2, help="Largest coalition for randomized mechanisms")
    p.add_argument("--max-failures", type=int, default=20, help="Failures listed in JSON output")

    p = add("probe", cmd_probe, "Replay a lower-bound construction")
    p.add_argument("kind", choices=("det", "rand"))
    p.add_argument("mechanism")
    p.add_argument(
        "--allow-deterministic",
        action="store_true",
        help="Run the randomized probe on a deterministic mechanism as a point lottery",
    )

    p = add("search", cmd_search, "Worst-case ratio search", default="json")
    p.add_argument("--mech", required=True)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--d", default="0")
    p.add_argument("--profile", default=None, help="Fixed preferences, e.g. 10,01,11")
    p.add_argument("--budget", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resolution", type=int, default=None, help="Lattice density m")
    p.add_argument("--restarts", type=int, default=None, help="Stop after this many restarts")
    p.add_argument("--exhaustive", action="store_true", help=f"Enumerate the lattice (n <= {EXHAUSTIVE_MAX_AGENTS})")

    p = add("sweep", cmd_sweep, "Ratio table over mechanisms x d x n", formats=("csv", "json"), default="csv")
    p.add_argument("--mech", required=True, help="Comma-separated ids")
    p.add_argument("--d", default="0", help="Comma-separated d values")
    p.add_argument("--n", default="5", help="Comma-separated agent counts")
    p.add_argument("--mix", default=None, help="Preference mix q10,q01,q11")
    p.add_argument("--law", choices=("grid", "breakpoints"), default="grid")
    p.add_argument("--count", type=int, default=100, help="Instances per cell")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-sp", action="store_true", help="Skip strategyproofness checks")

    add("bounds", cmd_bounds, "Known upper and universal lower bounds", formats=("text", "json", "csv"))
    return ap


def _configure_logging(level_name: str | None) -> None:
    name = (level_name or os.environ.get("OBNOX_LOG_LEVEL", "WARNING")).upper().strip()
    level = getattr(logging, name, logging.WARNING)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s %(message)s")
    logging.getLogger("obnox").setLevel(level)


def main(argv: Sequence[str] | None = None) -> int:
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    _configure_logging(args.log_level)
    try:
        return args.handler(args)
    except (UsageError, UnknownMechanismError, ValidationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ApplicabilityError as e:
        print(f"not applicable: {e}", file=sys.stderr)
        return EXIT_NOT_APPLICABLE
    except FeasibilityError as e:
        print(f"infeasible outcome: {e}", file=sys.stderr)
        return EXIT_VIOLATION
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
