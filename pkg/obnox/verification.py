"""Strategyproofness checks, approximation ratios and lower-bound probe replays."""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

from .core import (
    HALF,
    ONE,
    ZERO,
    ApplicabilityError,
    Instance,
    MechanismOutcome,
    Placement,
    ValidationError,
    as_lottery,
    expected_agent_utility,
    make_instance,
    partition_counts,
    social_utility,
)
from .helpers import instance_digest
from .mechanisms import Mechanism, get_mechanism, mechanism3_branch
from .opt import optimal_placement, welfare_upper_bound

logger = logging.getLogger(__name__)

INFINITE_RATIO = math.inf
Ratio = Fraction | float

DEFAULT_GRID = 32
DETERMINISTIC_LOWER_BOUND = Fraction(2)
RANDOMIZED_LOWER_BOUND = Fraction(14, 13)


def _resolve(mechanism: Mechanism | str) -> Mechanism:
    return get_mechanism(mechanism) if isinstance(mechanism, str) else mechanism


@dataclass(frozen=True)
class RatioReport:
    instance_digest: str
    mechanism: str
    mechanism_value: Fraction
    opt_value: Fraction
    ratio: Ratio
    outcome: MechanismOutcome
    opt_placement: Placement

    @property
    def infinite(self) -> bool:
        return isinstance(self.ratio, float)


def ratio_of(opt_value: Fraction, mechanism_value: Fraction) -> Ratio:
    if mechanism_value > 0:
        return opt_value / mechanism_value
    if opt_value == 0:
        return ONE
    return INFINITE_RATIO


def approximation_ratio(mechanism: Mechanism | str, instance: Instance) -> RatioReport:
    mech = _resolve(mechanism)
    outcome = mech(instance)
    value = social_utility(instance, outcome)
    opt = optimal_placement(instance)
    return RatioReport(
        instance_digest=instance_digest(instance),
        mechanism=mech.id,
        mechanism_value=value,
        opt_value=opt.value,
        ratio=ratio_of(opt.value, value),
        outcome=outcome,
        opt_placement=opt.placement,
    )


# --- Strategyproofness ---


@dataclass(frozen=True)
class SpViolation:
    agent: int
    true_location: Fraction
    misreport: Fraction
    truthful_utility: Fraction
    misreport_utility: Fraction

    @property
    def gain(self) -> Fraction:
        return self.misreport_utility - self.truthful_utility


def default_misreports(instance: Instance, grid: int = DEFAULT_GRID) -> list[Fraction]:
    base = {ZERO, Fraction(1, 4), HALF, Fraction(3, 4), ONE}
    base.update(instance.locations)
    base.update(Fraction(k, grid) for k in range(grid + 1))
    return sorted(base)


def check_strategyproof(
    mechanism: Mechanism | str,
    instance: Instance,
    misreports: Iterable[Fraction] | None = None,
) -> list[SpViolation]:
    """All strict unilateral gains from the candidate misreports.

    Utilities are always measured at the agent's true location.
    """
    mech = _resolve(mechanism)
    candidates = (
        sorted(set(misreports)) if misreports is not None else default_misreports(instance)
    )
    for x in candidates:
        if not ZERO <= x <= ONE:
            raise ValidationError(f"misreport {x} out of [0,1]")
    truthful = mech(instance)
    violations: list[SpViolation] = []
    for i, agent in enumerate(instance.agents):
        honest = expected_agent_utility(agent, truthful)
        for x in candidates:
            if x == agent.x:
                continue
            lied = expected_agent_utility(agent, mech(instance.with_location(i, x)))
            if lied > honest:
                violations.append(SpViolation(i, agent.x, x, honest, lied))
    if violations:
        logger.info(
            "[verify] %s: %d SP violations on %s",
            mech.id,
            len(violations),
            instance_digest(instance),
        )
    return violations


@dataclass(frozen=True)
class GroupSpViolation:
    coalition: tuple[int, ...]
    misreports: tuple[Fraction, ...]
    truthful_utilities: tuple[Fraction, ...]
    misreport_utilities: tuple[Fraction, ...]


def check_group_strategyproof(
    mechanism: Mechanism | str,
    instance: Instance,
    misreports: Iterable[Fraction] | None = None,
    max_coalition: int = 2,
) -> list[GroupSpViolation]:
    """Joint deviations of coalitions (size 2..max_coalition) where every member strictly gains."""
    mech = _resolve(mechanism)
    if misreports is None:
        base = {ZERO, Fraction(1, 4), HALF, Fraction(3, 4), ONE}
        base.update(instance.locations)
        candidates = sorted(base)
    else:
        candidates = sorted(set(misreports))
    truthful = mech(instance)
    honest = [expected_agent_utility(a, truthful) for a in instance.agents]
    violations: list[GroupSpViolation] = []
    upper = min(max_coalition, instance.n)
    for size in range(2, upper + 1):
        for coalition in itertools.combinations(range(instance.n), size):
            for joint in itertools.product(candidates, repeat=size):
                if all(joint[k] == instance.agents[i].x for k, i in enumerate(coalition)):
                    continue
                xs = list(instance.locations)
                for k, i in enumerate(coalition):
                    xs[i] = joint[k]
                outcome = mech(instance.with_locations(xs))
                gains = [
                    expected_agent_utility(instance.agents[i], outcome) for i in coalition
                ]
                if all(g > honest[i] for g, i in zip(gains, coalition)):
                    violations.append(
                        GroupSpViolation(
                            coalition=coalition,
                            misreports=tuple(joint),
                            truthful_utilities=tuple(honest[i] for i in coalition),
                            misreport_utilities=tuple(gains),
                        )
                    )
    return violations


def check_constant_outcome(mechanism: Mechanism | str, instances: Sequence[Instance]) -> bool:
    """True iff the outcome is structurally identical on every instance."""
    if len(instances) < 2:
        raise ValidationError("need at least two instances to compare outcomes")
    mech = _resolve(mechanism)
    first = mech(instances[0])
    return all(mech(inst) == first for inst in instances[1:])


# --- Caps and guarantees ---


def m3_case_cap(instance: Instance) -> Fraction:
    d = instance.d
    if mechanism3_branch(instance).case == 2:
        return Fraction(8)
    if d <= HALF:
        return 2 * (4 - d)
    return (4 - d) / d


def ratio_cap(mechanism: Mechanism | str, instance: Instance) -> Fraction | None:
    """Proven upper bound on the per-instance ratio, or None if none is known."""
    mech_id = _resolve(mechanism).id
    if mech_id == "M1":
        return Fraction(4)
    if mech_id in ("M2", "M4"):
        return Fraction(2)
    if mech_id == "M3":
        return m3_case_cap(instance)
    return None


def within_cap(mechanism: Mechanism | str, instance: Instance, ratio: Ratio) -> bool:
    cap = ratio_cap(mechanism, instance)
    return cap is None or ratio <= cap


def welfare_guarantee(mechanism: Mechanism | str, instance: Instance) -> Fraction | None:
    """Proven per-instance lower bound on the mechanism's social utility."""
    mech_id = _resolve(mechanism).id
    counts = partition_counts(instance)
    if mech_id == "M1":
        return Fraction(counts.n1 + counts.n2, 4)
    if mech_id in ("M2", "M4"):
        return Fraction(instance.n + counts.both, 2)
    if mech_id == "M3":
        branch = mechanism3_branch(instance)
        if branch.case == 1:
            if instance.d <= HALF:
                return Fraction(counts.both, 2)
            return instance.d * counts.both
        n_star = counts.n1 if branch.j_star == 1 else counts.n2
        return Fraction(n_star, 4) + Fraction(3, 4) * counts.both
    return None


@dataclass
class InstanceCheck:
    """Everything `verify` asserts about one (mechanism, instance) pair."""

    mechanism: str
    instance_digest: str
    skipped: bool = False
    ratio: Ratio | None = None
    cap: Fraction | None = None
    sp_violations: list[SpViolation] = field(default_factory=list)
    group_violations: list[GroupSpViolation] = field(default_factory=list)
    cap_ok: bool = True
    bound_ok: bool = True
    guarantee_ok: bool = True

    @property
    def passed(self) -> bool:
        return self.skipped or (
            not self.sp_violations
            and not self.group_violations
            and self.cap_ok
            and self.bound_ok
            and self.guarantee_ok
        )


def verify_instance(
    mechanism: Mechanism | str,
    instance: Instance,
    misreports: Iterable[Fraction] | None = None,
    group: bool = False,
    max_coalition: int = 2,
) -> InstanceCheck:
    mech = _resolve(mechanism)
    check = InstanceCheck(mechanism=mech.id, instance_digest=instance_digest(instance))
    if not mech.applicable(instance):
        check.skipped = True
        return check
    try:
        report = approximation_ratio(mech, instance)
    except ApplicabilityError as e:
        logger.info("[verify] %s skipped on %s: %s", mech.id, check.instance_digest, e)
        check.skipped = True
        return check
    check.ratio = report.ratio
    check.cap = ratio_cap(mech, instance)
    check.cap_ok = check.cap is None or report.ratio <= check.cap
    check.bound_ok = report.opt_value <= welfare_upper_bound(instance)
    guarantee = welfare_guarantee(mech, instance)
    check.guarantee_ok = guarantee is None or report.mechanism_value >= guarantee
    check.sp_violations = check_strategyproof(mech, instance, misreports)
    if group:
        check.group_violations = check_group_strategyproof(
            mech, instance, max_coalition=max_coalition
        )
    if not check.passed:
        logger.warning(
            "[verify] %s failed on %s (cap_ok=%s bound_ok=%s guarantee_ok=%s sp=%d)",
            mech.id,
            check.instance_digest,
            check.cap_ok,
            check.bound_ok,
            check.guarantee_ok,
            len(check.sp_violations),
        )
    return check


# --- Lower-bound probes ---


@dataclass(frozen=True)
class ProbeStep:
    label: str
    instance: Instance
    outcome: MechanismOutcome
    ratio: Ratio


@dataclass(frozen=True)
class ProbeReport:
    mechanism: str
    kind: str
    ratio: Ratio
    universal_bound: Fraction
    steps: tuple[ProbeStep, ...]
    q: Fraction | None = None
    implied_bound: Fraction | None = None

    @property
    def meets_bound(self) -> bool:
        return self.ratio >= self.universal_bound


def _probe_step(mech: Mechanism, label: str, instance: Instance) -> ProbeStep:
    report = approximation_ratio(mech, instance)
    return ProbeStep(label=label, instance=instance, outcome=report.outcome, ratio=report.ratio)


SINGLE_F1 = ((1, 0), (1, 0))


def run_deterministic_probe(mechanism: Mechanism | str) -> ProbeReport:
    """Replay the two-agent construction at x = (1/3, 2/3) against a deterministic mechanism."""
    mech = _resolve(mechanism)
    if not mech.deterministic:
        raise ApplicabilityError(f"{mech.id} is randomized; the deterministic probe needs a placement")
    third, two_thirds = Fraction(1, 3), Fraction(2, 3)
    base = make_instance([third, two_thirds], SINGLE_F1, d=0)
    first = _probe_step(mech, "base", base)
    steps = [first]
    y1 = first.outcome.y1
    if y1 < third:
        steps.append(_probe_step(mech, "left-shift", make_instance([ZERO, two_thirds], SINGLE_F1)))
    elif y1 > two_thirds:
        steps.append(_probe_step(mech, "right-shift", make_instance([third, ONE], SINGLE_F1)))
    ratio = max(step.ratio for step in steps)
    logger.info("[probe] deterministic %s -> %s over %d instances", mech.id, ratio, len(steps))
    return ProbeReport(
        mechanism=mech.id,
        kind="deterministic",
        ratio=ratio,
        universal_bound=DETERMINISTIC_LOWER_BOUND,
        steps=tuple(steps),
    )


def run_randomized_probe(
    mechanism: Mechanism | str, allow_deterministic: bool = False
) -> ProbeReport:
    """Replay the two-agent construction at x = (1/6, 5/6) against a randomized mechanism."""
    mech = _resolve(mechanism)
    if mech.deterministic and not allow_deterministic:
        raise ApplicabilityError(f"{mech.id} is deterministic; the randomized probe needs a lottery")
    sixth, five_sixths = Fraction(1, 6), Fraction(5, 6)
    base = make_instance([sixth, five_sixths], SINGLE_F1, d=0)
    lottery = as_lottery(mech(base))
    steps = [_probe_step(mech, "base", base)]
    near_right = lottery.expectation(lambda pl: abs(pl.y1 - five_sixths))
    if near_right <= HALF:
        shifted = make_instance([sixth, ONE], SINGLE_F1)
        label = "right-shift"
        beyond = lambda pl: pl.y1 < sixth  # noqa: E731
    else:
        shifted = make_instance([ZERO, five_sixths], SINGLE_F1)
        label = "left-shift"
        beyond = lambda pl: pl.y1 > five_sixths  # noqa: E731
    step = _probe_step(mech, label, shifted)
    steps.append(step)
    q = as_lottery(step.outcome).probability(beyond)
    logger.info("[probe] randomized %s -> %s (q=%s)", mech.id, step.ratio, q)
    return ProbeReport(
        mechanism=mech.id,
        kind="randomized",
        ratio=step.ratio,
        universal_bound=RANDOMIZED_LOWER_BOUND,
        steps=tuple(steps),
        q=q,
        implied_bound=Fraction(7) / (5 + 2 * q),
    )


def probe_deterministic_lower_bound(mechanism: Mechanism | str) -> Ratio:
    return run_deterministic_probe(mechanism).ratio


def probe_randomized_lower_bound(
    mechanism: Mechanism | str, allow_deterministic: bool = False
) -> Ratio:
    return run_randomized_probe(mechanism, allow_deterministic).ratio


# --- Known bounds ---


@dataclass(frozen=True)
class KnownBound:
    mechanism: str
    setting: str
    kind: str
    upper_bound: Fraction
    universal_lower_bound: Fraction


def known_bounds() -> list[KnownBound]:
    return [
        KnownBound("M1", "d = 0", "deterministic", Fraction(4), DETERMINISTIC_LOWER_BOUND),
        KnownBound("M2", "d = 0", "randomized", Fraction(2), RANDOMIZED_LOWER_BOUND),
        KnownBound("M3", "d in [0,1]", "deterministic", Fraction(8), DETERMINISTIC_LOWER_BOUND),
        KnownBound("M4", "d in [0,1]", "randomized", Fraction(2), RANDOMIZED_LOWER_BOUND),
    ]

