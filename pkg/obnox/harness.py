"""Seeded instance generation, worst-case ratio search and batch sweeps.

Random draws are integer indices from numpy generators; every location is
an exact Fraction picked from a finite rational support.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import lcm

import numpy as np

from .core import (
    ALL_PREFERENCES,
    HALF,
    ONE,
    ZERO,
    Agent,
    ApplicabilityError,
    Instance,
    Preference,
    ValidationError,
    as_fraction,
)
from .helpers import format_ratio, instance_digest, instance_to_dict, rational_to_decimal
from .mechanisms import Mechanism, get_mechanism
from .verification import Ratio, approximation_ratio, check_strategyproof, within_cap

logger = logging.getLogger(__name__)

DEFAULT_GRID = 32
EXHAUSTIVE_MAX_AGENTS = 3
UNIFORM_MIX = (Fraction(1, 3), Fraction(1, 3), Fraction(1, 3))


def _resolve(mechanism: Mechanism | str) -> Mechanism:
    return get_mechanism(mechanism) if isinstance(mechanism, str) else mechanism


def derive_seed(base: int, *keys: int) -> int:
    """Independent 64-bit seed for the stream addressed by ``keys``."""
    ss = np.random.SeedSequence(int(base), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def breakpoint_lattice(d: Fraction, m: int = DEFAULT_GRID) -> list[Fraction]:
    """{0, 1/2, 1, d, 1 - d} together with the k/m grid."""
    if m < 1:
        raise ValidationError(f"grid density must be >= 1, got {m}")
    points = {ZERO, HALF, ONE, d, ONE - d}
    points.update(Fraction(k, m) for k in range(m + 1))
    return sorted(points)


@dataclass(frozen=True)
class GeneratorConfig:
    n: int
    d: Fraction = ZERO
    mix: tuple[Fraction, Fraction, Fraction] = UNIFORM_MIX
    law: str = "grid"
    m: int = DEFAULT_GRID
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "d", as_fraction(self.d))
        object.__setattr__(self, "mix", tuple(as_fraction(q) for q in self.mix))
        problems = []
        if self.n < 0:
            problems.append(f"n must be >= 0, got {self.n}")
        if not ZERO <= self.d <= ONE:
            problems.append(f"d {self.d} out of [0,1]")
        if len(self.mix) != 3 or any(q < 0 for q in self.mix) or sum(self.mix) != ONE:
            problems.append(f"preference mix {tuple(map(str, self.mix))} must be 3 non-negative rationals summing to 1")
        if self.law not in ("grid", "breakpoints"):
            problems.append(f"unknown location law {self.law!r}")
        if self.m < 1:
            problems.append(f"grid density must be >= 1, got {self.m}")
        if self.seed < 0:
            problems.append(f"seed must be non-negative, got {self.seed}")
        if problems:
            raise ValidationError("invalid generator config: " + "; ".join(problems), problems)

    def support(self) -> list[Fraction]:
        if self.law == "breakpoints":
            return breakpoint_lattice(self.d, self.m)
        return [Fraction(k, self.m) for k in range(self.m + 1)]


def _draw_preferences(rng: np.random.Generator, mix, n: int) -> list[Preference]:
    scale = lcm(*(q.denominator for q in mix))
    cut10 = mix[0] * scale
    cut01 = cut10 + mix[1] * scale
    draws = rng.integers(0, scale, size=n) if n else []
    prefs = []
    for u in draws:
        u = int(u)
        if u < cut10:
            prefs.append(ALL_PREFERENCES[0])
        elif u < cut01:
            prefs.append(ALL_PREFERENCES[1])
        else:
            prefs.append(ALL_PREFERENCES[2])
    return prefs


def _draw_locations(rng: np.random.Generator, support: Sequence[Fraction], n: int) -> list[Fraction]:
    if not n:
        return []
    return [support[int(k)] for k in rng.integers(0, len(support), size=n)]


def generate_instance(config: GeneratorConfig) -> Instance:
    rng = np.random.default_rng(config.seed)
    xs = _draw_locations(rng, config.support(), config.n)
    prefs = _draw_preferences(rng, config.mix, config.n)
    return Instance(tuple(Agent(x, p) for x, p in zip(xs, prefs)), config.d)


def generate_instances(config: GeneratorConfig, count: int) -> list[Instance]:
    """``count`` instances, the i-th drawn from its own derived seed."""
    return [
        generate_instance(replace(config, seed=derive_seed(config.seed, i)))
        for i in range(count)
    ]


# --- Search ---


@dataclass
class SearchResult:
    mechanism: str
    best_instance: Instance | None
    best_ratio: Ratio | None
    evaluations: int = 0
    trace: list[tuple[int, Ratio]] = field(default_factory=list)
    restarts: int = 0
    exhaustive: bool = False


class _Tracker:
    def __init__(self, mech: Mechanism, d: Fraction):
        self.mech = mech
        self.d = d
        self.result = SearchResult(mechanism=mech.id, best_instance=None, best_ratio=None)

    def evaluate(self, xs: Sequence[Fraction], prefs: Sequence[Preference]) -> Ratio:
        instance = Instance(tuple(Agent(x, p) for x, p in zip(xs, prefs)), self.d)
        ratio = approximation_ratio(self.mech, instance).ratio
        res = self.result
        res.evaluations += 1
        if res.best_ratio is None or ratio > res.best_ratio:
            res.best_ratio = ratio
            res.best_instance = instance
            res.trace.append((res.evaluations, ratio))
        return ratio


def adversarial_search(
    mechanism: Mechanism | str,
    n: int,
    d,
    profile: Sequence[Preference] | None = None,
    budget: int = 1000,
    seed: int = 0,
    m: int = DEFAULT_GRID,
    max_restarts: int | None = None,
) -> SearchResult:
    """Coordinate ascent over the breakpoint lattice with random restarts.

    One agent moves at a time; a move is kept only on a strict ratio gain.
    A full pass without a gain triggers a restart from a fresh seeded stream.
    The search stops at ``budget`` evaluations or ``max_restarts`` restarts.
    """
    mech = _resolve(mechanism)
    d = as_fraction(d)
    if budget < 1:
        raise ValidationError(f"budget must be >= 1, got {budget}")
    if max_restarts is not None and max_restarts < 1:
        raise ValidationError(f"max_restarts must be >= 1, got {max_restarts}")
    if profile is not None:
        profile = list(profile)
        n = len(profile)
    lattice = breakpoint_lattice(d, m)
    tracker = _Tracker(mech, d)
    streams = np.random.SeedSequence(int(seed))

    while tracker.result.evaluations < budget and (
        max_restarts is None or tracker.result.restarts < max_restarts
    ):
        rng = np.random.default_rng(streams.spawn(1)[0])
        tracker.result.restarts += 1
        prefs = profile if profile is not None else _draw_preferences(rng, UNIFORM_MIX, n)
        xs = _draw_locations(rng, lattice, n)
        current = tracker.evaluate(xs, prefs)
        improved = True
        while improved and tracker.result.evaluations < budget:
            improved = False
            for i in range(n):
                for x in lattice:
                    if tracker.result.evaluations >= budget:
                        break
                    if x == xs[i]:
                        continue
                    candidate = list(xs)
                    candidate[i] = x
                    ratio = tracker.evaluate(candidate, prefs)
                    if ratio > current:
                        xs, current = candidate, ratio
                        improved = True
    logger.info(
        "[search] %s n=%d d=%s: best %s after %d evaluations, %d restarts",
        mech.id,
        n,
        d,
        tracker.result.best_ratio,
        tracker.result.evaluations,
        tracker.result.restarts,
    )
    return tracker.result


def exhaustive_search(
    mechanism: Mechanism | str,
    n: int,
    d,
    profile: Sequence[Preference] | None = None,
    m: int = DEFAULT_GRID,
) -> SearchResult:
    """Every location tuple on the breakpoint lattice, for every preference profile.

    Anonymous mechanisms only see the multiset of (preference, location)
    pairs, so for them multisets are enumerated instead of tuples.
    """
    mech = _resolve(mechanism)
    d = as_fraction(d)
    if profile is not None:
        profile = list(profile)
        n = len(profile)
    if n > EXHAUSTIVE_MAX_AGENTS:
        raise ValidationError(f"exhaustive search supports n <= {EXHAUSTIVE_MAX_AGENTS}, got {n}")
    lattice = breakpoint_lattice(d, m)
    tracker = _Tracker(mech, d)
    tracker.result.exhaustive = True

    if profile is not None:
        for xs in itertools.product(lattice, repeat=n):
            tracker.evaluate(xs, profile)
    elif mech.anonymous:
        items = [(p, x) for p in ALL_PREFERENCES for x in lattice]
        for combo in itertools.combinations_with_replacement(items, n):
            tracker.evaluate([x for _, x in combo], [p for p, _ in combo])
    else:
        for prefs in itertools.product(ALL_PREFERENCES, repeat=n):
            for xs in itertools.product(lattice, repeat=n):
                tracker.evaluate(xs, prefs)
    logger.info(
        "[search] exhaustive %s n=%d d=%s: best %s over %d instances",
        mech.id,
        n,
        d,
        tracker.result.best_ratio,
        tracker.result.evaluations,
    )
    return tracker.result


# --- Sweeps ---

SWEEP_COLUMNS = [
    "mechanism",
    "d",
    "n",
    "q10",
    "q01",
    "q11",
    "seed",
    "max_ratio",
    "mean_ratio",
    "sp_ok",
    "cap_ok",
    "max_ratio_decimal",
    "mean_ratio_decimal",
    "status",
]


@dataclass(frozen=True)
class SweepRecord:
    mechanism: str
    d: Fraction
    n: int
    mix: tuple[Fraction, Fraction, Fraction]
    seed: int
    instances: int
    max_ratio: Ratio | None = None
    mean_ratio: Ratio | None = None
    sp_ok: bool | None = None
    cap_ok: bool | None = None
    status: str = "ok"

    def as_row(self) -> dict[str, str]:
        def flag(v):
            return "" if v is None else ("true" if v else "false")

        def ratio(v, decimal=False):
            if v is None:
                return ""
            return rational_to_decimal(v) if decimal else format_ratio(v)

        return {
            "mechanism": self.mechanism,
            "d": str(self.d),
            "n": str(self.n),
            "q10": str(self.mix[0]),
            "q01": str(self.mix[1]),
            "q11": str(self.mix[2]),
            "seed": str(self.seed),
            "max_ratio": ratio(self.max_ratio),
            "mean_ratio": ratio(self.mean_ratio),
            "sp_ok": flag(self.sp_ok),
            "cap_ok": flag(self.cap_ok),
            "max_ratio_decimal": ratio(self.max_ratio, decimal=True),
            "mean_ratio_decimal": ratio(self.mean_ratio, decimal=True),
            "status": self.status,
        }


def _mean(ratios: list[Ratio]) -> Ratio:
    if any(isinstance(r, float) for r in ratios):
        return max(ratios)
    return sum(ratios, ZERO) / len(ratios)


def run_cell(mech_id: str, d: Fraction, config: GeneratorConfig, count: int, check_sp: bool = True) -> SweepRecord:
    mech = get_mechanism(mech_id)
    config = replace(config, d=d)
    base = dict(mechanism=mech.id, d=d, n=config.n, mix=config.mix, seed=config.seed, instances=count)
    if mech.zero_distance_only and d != 0:
        logger.info("[sweep] %s not applicable at d=%s; cell skipped", mech.id, d)
        return SweepRecord(**base, status="skipped")
    ratios: list[Ratio] = []
    sp_ok = True
    cap_ok = True
    try:
        for instance in generate_instances(config, count):
            ratio = approximation_ratio(mech, instance).ratio
            ratios.append(ratio)
            cap_ok = cap_ok and within_cap(mech, instance, ratio)
            if check_sp and sp_ok:
                sp_ok = not check_strategyproof(mech, instance)
    except ApplicabilityError as e:
        logger.info("[sweep] %s rejected d=%s (%s); cell skipped", mech.id, d, e)
        return SweepRecord(**base, status="skipped")
    if not ratios:
        return SweepRecord(**base, sp_ok=sp_ok, cap_ok=cap_ok)
    record = SweepRecord(
        **base,
        max_ratio=max(ratios),
        mean_ratio=_mean(ratios),
        sp_ok=sp_ok if check_sp else None,
        cap_ok=cap_ok,
    )
    logger.debug("[sweep] %s d=%s n=%d max=%s", mech.id, d, config.n, record.max_ratio)
    return record


def sweep(
    mechanisms: Sequence[str],
    d_values: Sequence,
    configs: Sequence[GeneratorConfig],
    count: int,
    check_sp: bool = True,
    workers: int = 1,
) -> list[SweepRecord]:
    """One record per (mechanism, d, config) cell, in axis order.

    Cells run in worker processes when ``workers > 1``; results are returned
    in cell order either way, so output does not depend on scheduling.
    """
    if not mechanisms or not d_values or not configs:
        raise ValidationError("sweep needs at least one mechanism, d value and config")
    if count < 0:
        raise ValidationError(f"instance count must be >= 0, got {count}")
    mech_ids = [get_mechanism(m).id for m in mechanisms]
    ds = [as_fraction(d) for d in d_values]
    cells = list(itertools.product(mech_ids, ds, configs))
    logger.info("[sweep] %d cells x %d instances (workers=%d)", len(cells), count, workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_cell, m, d, c, count, check_sp) for m, d, c in cells]
            return [f.result() for f in futures]
    return [run_cell(m, d, c, count, check_sp) for m, d, c in cells]


def sweep_csv(records: Sequence[SweepRecord]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for record in records:
        writer.writerow(record.as_row())
    return buf.getvalue()


def search_result_to_dict(result: SearchResult) -> dict:
    return {
        "mechanism": result.mechanism,
        "exhaustive": result.exhaustive,
        "best_ratio": None if result.best_ratio is None else format_ratio(result.best_ratio),
        "best_ratio_decimal": None
        if result.best_ratio is None
        else rational_to_decimal(result.best_ratio),
        "best_instance": None
        if result.best_instance is None
        else instance_to_dict(result.best_instance),
        "best_instance_digest": None
        if result.best_instance is None
        else instance_digest(result.best_instance),
        "evaluations": result.evaluations,
        "restarts": result.restarts,
        "trace": [{"step": step, "ratio": format_ratio(r)} for step, r in result.trace],
    }
